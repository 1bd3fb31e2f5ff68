use serde::{Deserialize, Serialize};

use crate::world::Rect;

/// Piecewise-linear path parameterized by arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| seg_len(w[0], w[1])).sum()
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let mut rem = s.max(0.0);
        for w in self.vertices.windows(2) {
            let l = seg_len(w[0], w[1]);
            if rem <= l {
                let t = if l > 0.0 { rem / l } else { 0.0 };
                return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
            }
            rem -= l;
        }
        *self.vertices.last().expect("non-empty polyline")
    }

    /// Distance from a point to the nearest point on the path.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0], w[1]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let l2 = d[0] * d[0] + d[1] * d[1];
                let t = if l2 > 0.0 {
                    (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn seg_len(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Serpentine rows across the geofence, starting at its lower-left corner.
///
/// Rows sit at `k · spacing` from the bottom edge with the last one clamped to
/// the top edge. A spacing at least the fence height gives a single row
/// through the middle.
pub fn plan_boustrophedon(geofence: &Rect, row_spacing: f64) -> Polyline {
    assert!(row_spacing > 0.0, "row spacing must be positive");
    let (w, h) = (geofence.width(), geofence.height());
    let ys: Vec<f64> = if row_spacing >= h {
        vec![geofence.ymin + 0.5 * h]
    } else {
        let rows = (h / row_spacing - 1e-9).ceil() as usize + 1;
        (0..rows)
            .map(|k| geofence.ymin + (k as f64 * row_spacing).min(h))
            .collect()
    };
    let mut vertices = Vec::with_capacity(2 * ys.len());
    for (k, &y) in ys.iter().enumerate() {
        let (a, b) = if k % 2 == 0 {
            (geofence.xmin, geofence.xmin + w)
        } else {
            (geofence.xmin + w, geofence.xmin)
        };
        vertices.push([a, y]);
        vertices.push([b, y]);
    }
    Polyline { vertices }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fence() -> Rect {
        Rect::new(0.0, 0.0, 10.0, 10.0)
    }

    #[test]
    fn six_rows_at_spacing_two() {
        let p = plan_boustrophedon(&fence(), 2.0);
        assert_eq!(p.vertices.len(), 12);
        assert!((p.length() - 70.0).abs() < 1e-12);
        assert_eq!(p.vertices[2], [10.0, 2.0]);
    }

    #[test]
    fn wide_spacing_is_one_row() {
        for s in [10.0, 25.0] {
            let p = plan_boustrophedon(&fence(), s);
            assert_eq!(p.vertices, vec![[0.0, 5.0], [10.0, 5.0]]);
            assert_eq!(p.length(), 10.0);
        }
    }

    #[test]
    fn uneven_spacing_clamps_the_last_row() {
        let p = plan_boustrophedon(&fence(), 3.0);
        let ys: Vec<f64> = p.vertices.iter().step_by(2).map(|v| v[1]).collect();
        assert_eq!(ys, vec![0.0, 3.0, 6.0, 9.0, 10.0]);
        assert!((p.length() - (5.0 * 10.0 + 10.0)).abs() < 1e-12);
    }

    #[test]
    fn covers_the_fence_within_half_spacing() {
        for s in [0.5, 2.0, 3.0] {
            let p = plan_boustrophedon(&fence(), s);
            let mut worst: f64 = 0.0;
            for i in 0..=100 {
                for j in 0..=100 {
                    worst = worst.max(p.distance_to([0.1 * i as f64, 0.1 * j as f64]));
                }
            }
            assert!(worst <= 0.5 * s + 1e-9, "spacing {s}: {worst}");
        }
    }

    #[test]
    fn arc_length_lookup() {
        let p = plan_boustrophedon(&fence(), 2.0);
        assert_eq!(p.point_at(0.0), [0.0, 0.0]);
        assert_eq!(p.point_at(11.0), [10.0, 1.0]);
        assert_eq!(p.point_at(13.0), [9.0, 2.0]);
        assert_eq!(p.point_at(1e6), [0.0, 10.0]);
    }
}
