//! Vehicle action primitives.

use serde::{Deserialize, Serialize};

use super::geometry::Pose;

/// Arc-length resolution used when checking a primitive's path for collisions.
pub const PATH_CHECK_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrimitiveKind {
    /// Straight segment at an absolute angle; used by holonomic vehicles.
    StraightRay { angle: f64 },
    /// Constant-curvature arc starting at the current heading (0 is straight ahead).
    DubinsArc { curvature: f64 },
    /// Straight segment backwards along the current heading.
    ReverseStraight,
    Stay,
}

impl PrimitiveKind {
    /// Pose after travelling arc length `s` from `start`.
    pub fn pose_at(&self, start: &Pose, s: f64) -> Pose {
        match *self {
            PrimitiveKind::StraightRay { angle } => {
                Pose::new(start.x + s * angle.cos(), start.y + s * angle.sin(), angle)
            }
            PrimitiveKind::DubinsArc { curvature } => {
                let h0 = start.heading;
                if curvature.abs() < 1e-12 {
                    Pose::new(start.x + s * h0.cos(), start.y + s * h0.sin(), h0)
                } else {
                    let h = h0 + curvature * s;
                    Pose::new(
                        start.x + (h.sin() - h0.sin()) / curvature,
                        start.y - (h.cos() - h0.cos()) / curvature,
                        h,
                    )
                }
            }
            PrimitiveKind::ReverseStraight => Pose::new(
                start.x - s * start.heading.cos(),
                start.y - s * start.heading.sin(),
                start.heading,
            ),
            PrimitiveKind::Stay => *start,
        }
    }
}

/// A finite path with the locations sampled while executing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionPrimitive {
    pub id: usize,
    pub kind: PrimitiveKind,
    pub start: Pose,
    pub length: f64,
    path: Vec<Pose>,
    samples: Vec<[f64; 2]>,
}

impl ActionPrimitive {
    pub fn new(id: usize, kind: PrimitiveKind, start: Pose, length: f64, sample_spacing: f64) -> Self {
        let length = if matches!(kind, PrimitiveKind::Stay) { 0.0 } else { length };
        let steps = ((length / PATH_CHECK_STEP).ceil() as usize).max(1);
        let path: Vec<Pose> = (0..=steps)
            .map(|i| kind.pose_at(&start, length * i as f64 / steps as f64))
            .collect();
        let samples = if length == 0.0 {
            vec![start.position()]
        } else {
            let mut s = Vec::new();
            let mut k = 1;
            while (k as f64) * sample_spacing < length - 1e-9 {
                s.push(kind.pose_at(&start, k as f64 * sample_spacing).position());
                k += 1;
            }
            s.push(kind.pose_at(&start, length).position());
            s
        };
        Self {
            id,
            kind,
            start,
            length,
            path,
            samples,
        }
    }

    /// Poses along the path at most [`PATH_CHECK_STEP`] apart, including both ends.
    pub fn path(&self) -> &[Pose] {
        &self.path
    }

    pub fn samples(&self) -> &[[f64; 2]] {
        &self.samples
    }

    pub fn terminal(&self) -> Pose {
        *self.path.last().expect("path has at least one pose")
    }

    /// GP inputs for the sample locations, with `time` appended when given.
    pub fn sample_inputs(&self, time: Option<f64>) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .map(|p| match time {
                Some(t) => vec![p[0], p[1], t],
                None => vec![p[0], p[1]],
            })
            .collect()
    }
}

/// A vehicle's library of primitives; instantiated at a pose with [`PrimitiveSet::generate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrimitiveSet {
    /// `count` straight rays at equal angular spacing from angle 0.
    Holonomic {
        count: usize,
        length: f64,
        sample_spacing: f64,
        stay: bool,
    },
    /// Forward arcs, one per curvature, plus optional reverse and stay actions.
    Dubins {
        curvatures: Vec<f64>,
        length: f64,
        sample_spacing: f64,
        reverse: bool,
        stay: bool,
    },
}

impl PrimitiveSet {
    pub fn holonomic(count: usize, length: f64, sample_spacing: f64, stay: bool) -> Self {
        PrimitiveSet::Holonomic {
            count,
            length,
            sample_spacing,
            stay,
        }
    }

    /// Eleven curvatures evenly spaced in [−2, 2] m⁻¹ with reverse and stay.
    pub fn dubins_default(length: f64, sample_spacing: f64) -> Self {
        PrimitiveSet::Dubins {
            curvatures: (0..11).map(|i| -2.0 + 0.4 * i as f64).collect(),
            length,
            sample_spacing,
            reverse: true,
            stay: true,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            PrimitiveSet::Holonomic { length, .. } | PrimitiveSet::Dubins { length, .. } => *length,
        }
    }

    pub fn sample_spacing(&self) -> f64 {
        match self {
            PrimitiveSet::Holonomic { sample_spacing, .. } | PrimitiveSet::Dubins { sample_spacing, .. } => {
                *sample_spacing
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            PrimitiveSet::Holonomic { count, stay, .. } => count + usize::from(*stay),
            PrimitiveSet::Dubins {
                curvatures,
                reverse,
                stay,
                ..
            } => curvatures.len() + usize::from(*reverse) + usize::from(*stay),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn generate(&self, pose: &Pose) -> Vec<ActionPrimitive> {
        match self {
            PrimitiveSet::Holonomic {
                count,
                length,
                sample_spacing,
                stay,
            } => {
                let mut v: Vec<ActionPrimitive> = (0..*count)
                    .map(|i| {
                        let angle = std::f64::consts::TAU * i as f64 / *count as f64;
                        ActionPrimitive::new(i, PrimitiveKind::StraightRay { angle }, *pose, *length, *sample_spacing)
                    })
                    .collect();
                if *stay {
                    v.push(ActionPrimitive::new(*count, PrimitiveKind::Stay, *pose, 0.0, *sample_spacing));
                }
                v
            }
            PrimitiveSet::Dubins {
                curvatures,
                length,
                sample_spacing,
                reverse,
                stay,
            } => dubins_primitives(pose, curvatures, *length, *sample_spacing, *reverse, *stay),
        }
    }
}

/// Constant-curvature arcs of arc length `length`, then reverse-straight and stay if requested.
pub fn dubins_primitives(
    pose: &Pose,
    curvatures: &[f64],
    length: f64,
    sample_spacing: f64,
    reverse: bool,
    stay: bool,
) -> Vec<ActionPrimitive> {
    let mut v: Vec<ActionPrimitive> = curvatures
        .iter()
        .enumerate()
        .map(|(i, &c)| ActionPrimitive::new(i, PrimitiveKind::DubinsArc { curvature: c }, *pose, length, sample_spacing))
        .collect();
    if reverse {
        v.push(ActionPrimitive::new(v.len(), PrimitiveKind::ReverseStraight, *pose, length, sample_spacing));
    }
    if stay {
        v.push(ActionPrimitive::new(v.len(), PrimitiveKind::Stay, *pose, 0.0, sample_spacing));
    }
    v
}
