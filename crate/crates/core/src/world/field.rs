use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::geometry::Rect;
use super::WorldError;
use crate::gp::linalg::cholesky;
use crate::gp::Kernel;

/// Smallest grid accepted by [`generate_environment`] along each axis.
pub const MIN_GENERATION_NODES: usize = 50;
const MAX_REGENERATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSource {
    GpPriorDraw,
    GridFile,
    Analytic,
}

/// Node layout of a ground-truth grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Number of time frames; 1 for a static field.
    pub frames: usize,
    /// Time between consecutive frames.
    pub frame_interval: f64,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        Self {
            nx: n,
            ny: n,
            frames: 1,
            frame_interval: 1.0,
        }
    }

    pub fn with_frames(mut self, frames: usize, frame_interval: f64) -> Self {
        self.frames = frames;
        self.frame_interval = frame_interval;
        self
    }
}

/// True field values on a regular grid, bilinearly interpolated between nodes.
///
/// Dynamic fields hold one grid per frame; a query at time `t` uses the last
/// frame whose time does not exceed `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthField {
    pub source: FieldSource,
    origin: [f64; 2],
    cell: [f64; 2],
    nx: usize,
    ny: usize,
    frame_times: Vec<f64>,
    values: Vec<f64>,
    excluded: Vec<Rect>,
    argmax: Vec<usize>,
    kernel: Option<Kernel>,
}

impl GroundTruthField {
    /// Builds a field from frame-major, row-major (`y` outer, `x` inner) values.
    pub fn from_grid(
        source: FieldSource,
        origin: [f64; 2],
        cell: [f64; 2],
        nx: usize,
        ny: usize,
        frame_times: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, WorldError> {
        if nx < 2 || ny < 2 || frame_times.is_empty() {
            return Err(WorldError::InvalidGrid("grid needs at least 2×2 nodes and one frame".into()));
        }
        if !(cell[0] > 0.0 && cell[1] > 0.0) {
            return Err(WorldError::InvalidGrid("cell size must be positive".into()));
        }
        if values.len() != nx * ny * frame_times.len() {
            return Err(WorldError::InvalidGrid(format!(
                "expected {} values, got {}",
                nx * ny * frame_times.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(WorldError::InvalidGrid("non-finite value".into()));
        }
        if frame_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(WorldError::InvalidGrid("frame times must increase".into()));
        }
        let mut f = Self {
            source,
            origin,
            cell,
            nx,
            ny,
            frame_times,
            values,
            excluded: Vec::new(),
            argmax: Vec::new(),
            kernel: None,
        };
        f.recompute_argmax()?;
        Ok(f)
    }

    /// Restricts the maximiser search to nodes outside `regions` (e.g. obstacles).
    pub fn excluding(mut self, regions: &[Rect]) -> Result<Self, WorldError> {
        self.excluded = regions.to_vec();
        self.recompute_argmax()?;
        Ok(self)
    }

    fn recompute_argmax(&mut self) -> Result<(), WorldError> {
        let per = self.nx * self.ny;
        let mut argmax = Vec::with_capacity(self.frame_times.len());
        for k in 0..self.frame_times.len() {
            let frame = &self.values[k * per..(k + 1) * per];
            let mut best: Option<usize> = None;
            for (idx, &v) in frame.iter().enumerate() {
                if !self.node_allowed(idx) {
                    continue;
                }
                if best.is_none_or(|b| v > frame[b]) {
                    best = Some(idx);
                }
            }
            argmax.push(best.ok_or_else(|| WorldError::InvalidGrid("every node is excluded".into()))?);
        }
        self.argmax = argmax;
        Ok(())
    }

    fn node_allowed(&self, idx: usize) -> bool {
        let [x, y] = self.node_position(idx);
        !self.excluded.iter().any(|r| r.contains(x, y))
    }

    /// Whether the maximum of every frame is attained at a single allowed node.
    pub fn has_unique_max(&self) -> bool {
        let per = self.nx * self.ny;
        (0..self.frame_times.len()).all(|k| {
            let frame = &self.values[k * per..(k + 1) * per];
            let m = frame[self.argmax[k]];
            (0..per).filter(|&i| self.node_allowed(i) && frame[i] == m).count() == 1
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn cell_size(&self) -> [f64; 2] {
        self.cell
    }

    pub fn frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn frame_times(&self) -> &[f64] {
        &self.frame_times
    }

    pub fn is_dynamic(&self) -> bool {
        self.frame_times.len() > 1
    }

    /// The generating kernel, for prior draws.
    pub fn kernel(&self) -> Option<&Kernel> {
        self.kernel.as_ref()
    }

    pub fn bounds(&self) -> Rect {
        Rect::new(
            self.origin[0],
            self.origin[1],
            self.origin[0] + self.cell[0] * (self.nx - 1) as f64,
            self.origin[1] + self.cell[1] * (self.ny - 1) as f64,
        )
    }

    pub fn node_position(&self, idx: usize) -> [f64; 2] {
        let (j, i) = (idx / self.nx, idx % self.nx);
        [self.origin[0] + self.cell[0] * i as f64, self.origin[1] + self.cell[1] * j as f64]
    }

    pub fn frame_index(&self, t: f64) -> usize {
        self.frame_times.partition_point(|&ft| ft <= t + 1e-9).saturating_sub(1)
    }

    pub fn frame_values(&self, frame: usize) -> &[f64] {
        let per = self.nx * self.ny;
        &self.values[frame * per..(frame + 1) * per]
    }

    /// Stored value at node `(i, j)` of `frame`.
    pub fn node_value(&self, frame: usize, i: usize, j: usize) -> f64 {
        self.frame_values(frame)[j * self.nx + i]
    }

    /// Bilinear interpolation at `(x, y)` at time `t`; positions are clamped to the grid.
    pub fn value_at(&self, x: f64, y: f64, t: f64) -> f64 {
        let frame = self.frame_values(self.frame_index(t));
        let (i, fx) = axis_coordinate(x, self.origin[0], self.cell[0], self.nx);
        let (j, fy) = axis_coordinate(y, self.origin[1], self.cell[1], self.ny);
        let at = |ii: usize, jj: usize| frame[jj * self.nx + ii];
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.ny - 1);
        let lo = if fx == 0.0 { at(i, j) } else { (1.0 - fx) * at(i, j) + fx * at(i1, j) };
        let hi = if fx == 0.0 { at(i, j1) } else { (1.0 - fx) * at(i, j1) + fx * at(i1, j1) };
        if fy == 0.0 {
            lo
        } else {
            (1.0 - fy) * lo + fy * hi
        }
    }

    pub fn xstar(&self, t: f64) -> [f64; 2] {
        self.node_position(self.argmax[self.frame_index(t)])
    }

    pub fn fstar(&self, t: f64) -> f64 {
        let k = self.frame_index(t);
        self.frame_values(k)[self.argmax[k]]
    }

    /// Node positions and values of one frame, restricted to nodes allowed for the maximiser.
    pub fn allowed_nodes(&self, frame: usize) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        let vals = self.frame_values(frame);
        (0..self.nx * self.ny)
            .filter(move |&i| self.node_allowed(i))
            .map(move |i| (self.node_position(i), vals[i]))
    }
}

/// Cell index and fractional offset along one axis, snapping values within 1e-9 cells of a node.
fn axis_coordinate(v: f64, origin: f64, cell: f64, n: usize) -> (usize, f64) {
    let u = ((v - origin) / cell).clamp(0.0, (n - 1) as f64);
    let r = u.round();
    if (u - r).abs() < 1e-9 {
        return ((r as usize).min(n - 1), 0.0);
    }
    let i = (u.floor() as usize).min(n - 2);
    (i, u - i as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationBatch {
    pub locations: Vec<[f64; 2]>,
    pub timestamps: Vec<f64>,
    pub values: Vec<f64>,
}

impl ObservationBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Noisy readings `f(x) + ε`, `ε ~ N(0, noise_variance)`, at `time`.
pub fn observe<R: Rng + ?Sized>(
    field: &GroundTruthField,
    locations: &[[f64; 2]],
    time: f64,
    noise_variance: f64,
    rng: &mut R,
) -> ObservationBatch {
    assert!(noise_variance >= 0.0, "noise variance must be non-negative");
    let noise = Normal::new(0.0, noise_variance.sqrt()).expect("finite standard deviation");
    let values = locations
        .iter()
        .map(|p| {
            let f = field.value_at(p[0], p[1], time);
            if noise_variance == 0.0 {
                f
            } else {
                f + noise.sample(rng)
            }
        })
        .collect();
    ObservationBatch {
        locations: locations.to_vec(),
        timestamps: vec![time; locations.len()],
        values,
    }
}

/// One-dimensional squared-exponential correlation factor on `n` nodes spaced `step` apart.
fn correlation_factor(n: usize, step: f64, lengthscale: f64) -> Result<Vec<f64>, WorldError> {
    let mut c = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let d = (a as f64 - b as f64) * step / lengthscale;
            c[a * n + b] = (-0.5 * d * d).exp();
        }
    }
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut m = c.clone();
        for a in 0..n {
            m[a * n + a] += jitter;
        }
        if let Some(l) = cholesky(&m, n) {
            return Ok(l);
        }
        jitter = if jitter == 0.0 { 1e-10 } else { jitter * 10.0 };
    }
    Err(WorldError::Factorization { jitter })
}

/// `out[.., a, ..] = Σ_b L[a, b] · x[.., b, ..]` along the axis with the given stride.
fn apply_along_axis(x: &[f64], l: &[f64], n: usize, stride: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let block = n * stride;
    for base in (0..x.len()).step_by(block) {
        for s in 0..stride {
            for a in 0..n {
                let mut acc = 0.0;
                for b in 0..=a {
                    acc += l[a * n + b] * x[base + b * stride + s];
                }
                out[base + a * stride + s] = acc;
            }
        }
    }
    out
}

/// Draws a zero-mean GP prior sample on a regular grid spanning `geofence`.
///
/// The kernel is separable across axes, so the draw factorizes as a Kronecker
/// product of one-dimensional Cholesky factors. Draws whose maximum over the
/// allowed nodes is tied are discarded and redrawn.
pub fn generate_environment<R: Rng + ?Sized>(
    kernel: &Kernel,
    geofence: &Rect,
    grid: GridSpec,
    excluded: &[Rect],
    rng: &mut R,
) -> Result<GroundTruthField, WorldError> {
    if grid.nx < MIN_GENERATION_NODES || grid.ny < MIN_GENERATION_NODES {
        return Err(WorldError::InvalidGrid(format!(
            "generation grid must be at least {MIN_GENERATION_NODES}×{MIN_GENERATION_NODES}"
        )));
    }
    if grid.frames == 0 || !(grid.frame_interval > 0.0) {
        return Err(WorldError::InvalidGrid("need at least one frame and a positive interval".into()));
    }
    let input_dim = if kernel.is_spatiotemporal() { 3 } else { 2 };
    kernel.validate(input_dim).map_err(WorldError::InvalidConfig)?;
    if grid.frames > 1 && !kernel.is_spatiotemporal() {
        return Err(WorldError::InvalidConfig("dynamic fields need a spatiotemporal kernel".into()));
    }
    let cell = [
        geofence.width() / (grid.nx - 1) as f64,
        geofence.height() / (grid.ny - 1) as f64,
    ];
    let lx = correlation_factor(grid.nx, cell[0], kernel.lengthscale(0, input_dim))?;
    let ly = correlation_factor(grid.ny, cell[1], kernel.lengthscale(1, input_dim))?;
    let lt = if grid.frames > 1 {
        Some(correlation_factor(grid.frames, grid.frame_interval, kernel.lengthscale(2, input_dim))?)
    } else {
        None
    };
    let sd = kernel.variance().sqrt();
    let total = grid.nx * grid.ny * grid.frames;
    let frame_times: Vec<f64> = (0..grid.frames).map(|k| k as f64 * grid.frame_interval).collect();
    for _ in 0..MAX_REGENERATIONS {
        let z: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
        let mut v = apply_along_axis(&z, &lx, grid.nx, 1);
        v = apply_along_axis(&v, &ly, grid.ny, grid.nx);
        if let Some(lt) = &lt {
            v = apply_along_axis(&v, lt, grid.frames, grid.nx * grid.ny);
        }
        v.iter_mut().for_each(|x| *x *= sd);
        let mut field = GroundTruthField::from_grid(
            FieldSource::GpPriorDraw,
            [geofence.xmin, geofence.ymin],
            cell,
            grid.nx,
            grid.ny,
            frame_times.clone(),
            v,
        )?
        .excluding(excluded)?;
        if field.has_unique_max() {
            field.kernel = Some(kernel.clone());
            return Ok(field);
        }
    }
    Err(WorldError::InvalidGrid("could not draw a field with a unique maximum".into()))
}

/// Parses a grid file: header `nx,ny[,nt],cell_size` then rows `x,y[,t],value`.
///
/// Values are mean-centred over all frames. A tie for the maximum resolves to
/// the first node in row-major order.
pub fn parse_environment(text: &str) -> Result<GroundTruthField, WorldError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hrow, header) = lines.next().ok_or(WorldError::Parse {
        row: 1,
        message: "missing header".into(),
    })?;
    let hcells: Vec<&str> = header.split(',').map(str::trim).collect();
    let perr = |row: usize, message: String| WorldError::Parse { row, message };
    if hcells.len() != 3 && hcells.len() != 4 {
        return Err(perr(hrow, format!("header needs 3 or 4 fields, found {}", hcells.len())));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|_| perr(hrow, format!("bad dimension {s:?}")));
    let nx = parse_count(hcells[0])?;
    let ny = parse_count(hcells[1])?;
    let dynamic = hcells.len() == 4;
    let nt = if dynamic { parse_count(hcells[2])? } else { 1 };
    let cell: f64 = hcells[hcells.len() - 1]
        .parse()
        .map_err(|_| perr(hrow, "bad cell size".into()))?;
    if nx < 2 || ny < 2 || nt < 1 || !(cell > 0.0) {
        return Err(perr(hrow, "dimensions must be ≥ 2 and cell size positive".into()));
    }
    let width = if dynamic { 4 } else { 3 };
    let mut rows: Vec<(usize, [f64; 4])> = Vec::new();
    for (row, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(perr(row, format!("ragged row: expected {width} columns, found {}", cells.len())));
        }
        let mut v = [0.0; 4];
        for (k, c) in cells.iter().enumerate() {
            v[k] = c
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| perr(row, format!("non-numeric cell {c:?}")))?;
        }
        if !dynamic {
            v[3] = v[2];
            v[2] = 0.0;
        }
        rows.push((row, v));
    }
    let last_row = rows.last().map_or(hrow, |r| r.0);
    if rows.len() != nx * ny * nt {
        return Err(perr(
            last_row,
            format!("ragged grid: expected {} rows, found {}", nx * ny * nt, rows.len()),
        ));
    }
    let x0 = rows.iter().map(|r| r.1[0]).fold(f64::INFINITY, f64::min);
    let y0 = rows.iter().map(|r| r.1[1]).fold(f64::INFINITY, f64::min);
    let mut times: BTreeSet<u64> = BTreeSet::new();
    for r in &rows {
        // order-preserving key for non-negative and negative floats alike
        times.insert(ordered_bits(r.1[2]));
    }
    let time_keys: Vec<u64> = times.into_iter().collect();
    if time_keys.len() != nt {
        return Err(perr(last_row, format!("expected {nt} distinct times, found {}", time_keys.len())));
    }
    let per = nx * ny;
    let mut values = vec![f64::NAN; per * nt];
    let mut seen = vec![false; per * nt];
    let index = |v: f64, origin: f64, n: usize, row: usize| -> Result<usize, WorldError> {
        let u = (v - origin) / cell;
        let r = u.round();
        if (u - r).abs() > 1e-6 || r >= n as f64 {
            return Err(perr(row, format!("coordinate {v} is off the {n}-node grid")));
        }
        Ok(r as usize)
    };
    for (row, v) in &rows {
        let i = index(v[0], x0, nx, *row)?;
        let j = index(v[1], y0, ny, *row)?;
        let k = time_keys.binary_search(&ordered_bits(v[2])).expect("time key present");
        let slot = k * per + j * nx + i;
        if seen[slot] {
            return Err(perr(*row, format!("duplicate coordinate ({}, {})", v[0], v[1])));
        }
        seen[slot] = true;
        values[slot] = v[3];
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    let frame_times: Vec<f64> = time_keys.iter().map(|&b| from_ordered_bits(b)).collect();
    GroundTruthField::from_grid(FieldSource::GridFile, [x0, y0], [cell, cell], nx, ny, frame_times, values)
}

pub fn load_environment(path: &Path) -> Result<GroundTruthField, WorldError> {
    let text = std::fs::read_to_string(path).map_err(|e| WorldError::Io(format!("{}: {e}", path.display())))?;
    parse_environment(&text)
}

fn ordered_bits(x: f64) -> u64 {
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_ordered_bits(b: u64) -> f64 {
    if b >> 63 == 1 {
        f64::from_bits(b & !(1 << 63))
    } else {
        f64::from_bits(!b)
    }
}
