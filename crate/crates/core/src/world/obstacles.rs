use std::path::Path;

use serde::{Deserialize, Serialize};

use super::geometry::{Pose, Rect};
use super::primitives::{ActionPrimitive, PrimitiveKind, PrimitiveSet};
use super::WorldError;

pub const DEFAULT_PADDING: f64 = 0.1;
pub const DEFAULT_SENSING_RADIUS: f64 = 3.0;
pub const DEFAULT_BLOCK_SIDE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowledgeMode {
    Known,
    Revealed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMap {
    pub geofence: Rect,
    obstacles: Vec<Rect>,
    known: Vec<bool>,
    pub padding: f64,
    pub mode: KnowledgeMode,
    pub sensing_radius: f64,
}

impl ObstacleMap {
    pub fn new(
        geofence: Rect,
        obstacles: Vec<Rect>,
        padding: f64,
        mode: KnowledgeMode,
        sensing_radius: f64,
    ) -> Result<Self, WorldError> {
        if !geofence.is_valid() {
            return Err(WorldError::InvalidMap("geofence is degenerate".into()));
        }
        if !(padding >= 0.0) || !(sensing_radius >= 0.0) {
            return Err(WorldError::InvalidMap("padding and sensing radius must be non-negative".into()));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if !o.is_valid() || !geofence.contains_rect(o) {
                return Err(WorldError::InvalidMap(format!("obstacle {i} is degenerate or outside the geofence")));
            }
        }
        let known = vec![mode == KnowledgeMode::Known; obstacles.len()];
        Ok(Self {
            geofence,
            obstacles,
            known,
            padding,
            mode,
            sensing_radius,
        })
    }

    pub fn empty(geofence: Rect) -> Self {
        Self::new(geofence, Vec::new(), DEFAULT_PADDING, KnowledgeMode::Known, DEFAULT_SENSING_RADIUS)
            .expect("valid geofence")
    }

    /// `cols × rows` square blocks of side `side`, centred in equal cells tiling the geofence.
    pub fn lattice_blocks(geofence: &Rect, cols: usize, rows: usize, side: f64) -> Vec<Rect> {
        let cw = geofence.width() / cols as f64;
        let ch = geofence.height() / rows as f64;
        let h = 0.5 * side;
        let mut v = Vec::with_capacity(cols * rows);
        for j in 0..rows {
            for i in 0..cols {
                let cx = geofence.xmin + cw * (i as f64 + 0.5);
                let cy = geofence.ymin + ch * (j as f64 + 0.5);
                v.push(Rect::new(cx - h, cy - h, cx + h, cy + h));
            }
        }
        v
    }

    /// Twelve blocks on a 4 × 3 lattice.
    pub fn twelve_blocks(geofence: &Rect, side: f64) -> Vec<Rect> {
        Self::lattice_blocks(geofence, 4, 3, side)
    }

    pub fn obstacles(&self) -> &[Rect] {
        &self.obstacles
    }

    pub fn known_obstacles(&self) -> impl Iterator<Item = &Rect> + '_ {
        self.obstacles.iter().zip(&self.known).filter(|(_, k)| **k).map(|(o, _)| o)
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|k| **k).count()
    }

    pub fn is_known(&self, index: usize) -> bool {
        self.known[index]
    }

    /// Inside the geofence and at least `padding` from every known obstacle.
    pub fn is_free(&self, x: f64, y: f64) -> bool {
        self.geofence.contains(x, y) && self.known_obstacles().all(|o| o.distance_to(x, y) >= self.padding)
    }

    /// Like [`ObstacleMap::is_free`] but against every obstacle, known or not.
    pub fn is_free_in_truth(&self, x: f64, y: f64) -> bool {
        self.geofence.contains(x, y) && self.obstacles.iter().all(|o| o.distance_to(x, y) >= self.padding)
    }

    pub fn path_is_free(&self, action: &ActionPrimitive) -> bool {
        action.path().iter().all(|p| self.is_free(p.x, p.y))
    }

    /// Marks every obstacle within the sensing radius of `pose` as known; returns the newly known indices.
    pub fn reveal_obstacles(&mut self, pose: &Pose) -> Vec<usize> {
        let mut added = Vec::new();
        for (i, o) in self.obstacles.iter().enumerate() {
            if !self.known[i] && o.distance_to(pose.x, pose.y) <= self.sensing_radius {
                self.known[i] = true;
                added.push(i);
            }
        }
        added
    }
}

/// Primitives from `set` whose whole path is free under the map's current knowledge; stay is always kept.
pub fn feasible_actions(pose: &Pose, map: &ObstacleMap, set: &PrimitiveSet) -> Vec<ActionPrimitive> {
    set.generate(pose)
        .into_iter()
        .filter(|a| matches!(a.kind, PrimitiveKind::Stay) || map.path_is_free(a))
        .collect()
}

/// Reads `xmin,ymin,xmax,ymax` rows; blank lines and `#` comments are skipped.
pub fn parse_obstacles(text: &str) -> Result<Vec<Rect>, WorldError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let row = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 4 {
            return Err(WorldError::Parse {
                row,
                message: format!("expected 4 columns, found {}", cells.len()),
            });
        }
        let mut v = [0.0; 4];
        for (slot, c) in v.iter_mut().zip(&cells) {
            *slot = c.parse().map_err(|_| WorldError::Parse {
                row,
                message: format!("non-numeric cell {c:?}"),
            })?;
        }
        let r = Rect::new(v[0], v[1], v[2], v[3]);
        if !r.is_valid() {
            return Err(WorldError::Parse {
                row,
                message: "rectangle has non-positive extent".into(),
            });
        }
        out.push(r);
    }
    Ok(out)
}

pub fn load_obstacles(path: &Path) -> Result<Vec<Rect>, WorldError> {
    let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
    parse_obstacles(&text)
}
