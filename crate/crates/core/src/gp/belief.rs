//! Gaussian-process belief over the unknown field.
//!
//! The factor of `K + σ_n² I` is stored as a chain of immutable row blocks
//! (`Segment`s) shared through `Arc`. Conditioning appends one block, so a
//! search tree can hold thousands of divergent beliefs that all share the
//! mission history without copying it. Every [`REFACTOR_EVERY`] appended
//! observations the public [`GpBelief::condition`] path rebuilds the factor
//! from scratch to bound drift from repeated block appends.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::{CompiledKernel, Kernel};
use super::linalg::{cholesky, cholesky_with_jitter, dot};
use super::GpError;

/// Observations appended through [`GpBelief::condition`] before a full refactorization.
pub const REFACTOR_EVERY: usize = 64;

/// Relative diagonal jitter used for the single retry after a failed factorization.
pub const JITTER: f64 = 1e-8;

/// Posterior marginal at one query input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
}

impl Posterior {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug)]
struct Segment {
    /// Number of observations preceding this block.
    offset: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    /// Row `j` holds `offset + j + 1` factor entries.
    rows: Vec<f64>,
    /// Whitened targets `L⁻¹ z` for this block's rows.
    alpha: Vec<f64>,
}

impl Segment {
    fn len(&self) -> usize {
        self.targets.len()
    }

    fn row(&self, j: usize) -> &[f64] {
        let start = j * self.offset + j * (j + 1) / 2;
        &self.rows[start..start + self.offset + j + 1]
    }

    fn input(&self, j: usize, dim: usize) -> &[f64] {
        &self.inputs[j * dim..(j + 1) * dim]
    }
}

/// Whitened cross-covariance `L⁻¹ k(X, x)` of one input against a belief.
///
/// A projection computed against a belief can be extended to any belief that
/// was conditioned from it, paying only for the appended rows.
#[derive(Debug, Clone)]
pub struct Projection {
    input: Vec<f64>,
    prior: f64,
    v: Vec<f64>,
    mean: f64,
    sq_norm: f64,
    anchor: Option<Arc<Segment>>,
}

impl Projection {
    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Number of history observations this projection covers.
    pub fn covered(&self) -> usize {
        self.v.len()
    }

    fn posterior(&self) -> Posterior {
        let floor = self.prior * 1e-12;
        Posterior {
            mean: self.mean,
            variance: (self.prior - self.sq_norm).clamp(floor, self.prior),
        }
    }
}

/// Posterior over the field given an observation history.
///
/// Value-semantic: conditioning returns a new belief and leaves `self`
/// untouched. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct GpBelief {
    kernel: Arc<Kernel>,
    compiled: Arc<CompiledKernel>,
    noise_variance: f64,
    segments: Vec<Arc<Segment>>,
    len: usize,
    appends_since_refactor: usize,
}

impl GpBelief {
    /// Empty-history belief with a zero prior mean.
    pub fn new(kernel: Kernel, noise_variance: f64, input_dim: usize) -> Result<Self, GpError> {
        kernel.validate(input_dim).map_err(GpError::InvalidKernel)?;
        if !(noise_variance > 0.0 && noise_variance.is_finite()) {
            return Err(GpError::InvalidNoise(noise_variance));
        }
        let compiled = Arc::new(kernel.compile(input_dim));
        Ok(Self {
            kernel: Arc::new(kernel),
            compiled,
            noise_variance,
            segments: Vec::new(),
            len: 0,
            appends_since_refactor: 0,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn compiled_kernel(&self) -> &CompiledKernel {
        &self.compiled
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn input_dim(&self) -> usize {
        self.compiled.input_dim()
    }

    pub fn prior_variance(&self) -> f64 {
        self.compiled.variance()
    }

    /// Number of observations in the history.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// History inputs in insertion order.
    pub fn inputs(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let dim = self.input_dim();
        self.segments
            .iter()
            .flat_map(move |s| s.inputs.chunks_exact(dim))
    }

    /// History observations in insertion order.
    pub fn targets(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| s.targets.iter().copied())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GpError> {
        if x.len() != self.input_dim() {
            return Err(GpError::Dimension {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn jitter(&self) -> f64 {
        JITTER * self.prior_variance()
    }

    /// Whitens `x` against the whole history.
    pub fn project(&self, x: &[f64]) -> Result<Projection, GpError> {
        self.check_dim(x)?;
        let mut p = Projection {
            input: x.to_vec(),
            prior: self.compiled.eval(x, x),
            v: Vec::with_capacity(self.len + 16),
            mean: 0.0,
            sq_norm: 0.0,
            anchor: None,
        };
        self.advance(&mut p, 0);
        Ok(p)
    }

    /// Extends a projection made against an ancestor of this belief.
    pub fn extend_projection(&self, proj: &Projection) -> Result<Projection, GpError> {
        let start = self.ancestor_index(proj)?;
        let mut p = proj.clone();
        self.advance(&mut p, start);
        Ok(p)
    }

    /// Index of the first segment not yet covered by `proj`.
    fn ancestor_index(&self, proj: &Projection) -> Result<usize, GpError> {
        match &proj.anchor {
            None => {
                if proj.v.is_empty() {
                    Ok(0)
                } else {
                    Err(GpError::ForeignProjection)
                }
            }
            Some(anchor) => {
                let covered = proj.v.len();
                let idx = self
                    .segments
                    .iter()
                    .position(|s| s.offset + s.len() == covered)
                    .ok_or(GpError::ForeignProjection)?;
                if Arc::ptr_eq(&self.segments[idx], anchor) {
                    Ok(idx + 1)
                } else {
                    Err(GpError::ForeignProjection)
                }
            }
        }
    }

    fn advance(&self, p: &mut Projection, start: usize) {
        let dim = self.input_dim();
        for seg in &self.segments[start..] {
            debug_assert_eq!(p.v.len(), seg.offset);
            for j in 0..seg.len() {
                let row = seg.row(j);
                let n = row.len() - 1;
                let k = self.compiled.eval(seg.input(j, dim), &p.input);
                let val = (k - dot(&row[..n], &p.v[..n])) / row[n];
                p.v.push(val);
                p.mean += val * seg.alpha[j];
                p.sq_norm += val * val;
            }
            p.anchor = Some(Arc::clone(seg));
        }
    }

    /// Posterior marginal of a projection that covers this belief exactly.
    pub fn posterior_projected(&self, proj: &Projection) -> Result<Posterior, GpError> {
        if proj.covered() != self.len || self.ancestor_index(proj)? != self.segments.len() {
            return Err(GpError::ForeignProjection);
        }
        Ok(proj.posterior())
    }

    pub fn posterior_at(&self, x: &[f64]) -> Result<Posterior, GpError> {
        Ok(self.project(x)?.posterior())
    }

    /// Posterior mean and variance at each query.
    pub fn posterior<P: AsRef<[f64]>>(&self, queries: &[P]) -> Result<Vec<Posterior>, GpError> {
        queries.iter().map(|q| self.posterior_at(q.as_ref())).collect()
    }

    /// Posterior mean only; avoids the variance solve.
    pub fn mean_at(&self, x: &[f64]) -> Result<f64, GpError> {
        self.check_dim(x)?;
        if self.is_empty() {
            return Ok(0.0);
        }
        // μ = k(X, x)ᵀ (K + σ²I)⁻¹ z is cheapest through the full weight vector.
        let weights = self.weights();
        Ok(self
            .inputs()
            .zip(weights.iter())
            .map(|(xi, w)| w * self.compiled.eval(xi, x))
            .sum())
    }

    /// `(K + σ_n² I)⁻¹ z` via back substitution on the stored factor.
    pub fn weights(&self) -> Vec<f64> {
        let mut alpha: Vec<f64> = self.segments.iter().flat_map(|s| s.alpha.iter().copied()).collect();
        // Back substitution with Lᵀ: walk rows from the bottom.
        let rows: Vec<(&Segment, usize)> = self
            .segments
            .iter()
            .flat_map(|s| (0..s.len()).map(move |j| (s.as_ref(), j)))
            .collect();
        for i in (0..self.len).rev() {
            let (seg, j) = rows[i];
            let row = seg.row(j);
            let xi = alpha[i] / row[i];
            alpha[i] = xi;
            for (m, l) in row[..i].iter().enumerate() {
                alpha[m] -= l * xi;
            }
        }
        alpha
    }

    /// Posterior means at many queries.
    pub fn means<P: AsRef<[f64]>>(&self, queries: &[P]) -> Result<Vec<f64>, GpError> {
        let weights = self.weights();
        let inputs: Vec<&[f64]> = self.inputs().collect();
        queries
            .iter()
            .map(|q| {
                let q = q.as_ref();
                self.check_dim(q)?;
                Ok(inputs
                    .iter()
                    .zip(&weights)
                    .map(|(xi, w)| w * self.compiled.eval(xi, q))
                    .sum())
            })
            .collect()
    }

    /// Returns a belief additionally conditioned on `observations` at `inputs`.
    pub fn condition<P: AsRef<[f64]>>(&self, inputs: &[P], observations: &[f64]) -> Result<Self, GpError> {
        if inputs.len() != observations.len() {
            return Err(GpError::LengthMismatch {
                inputs: inputs.len(),
                observations: observations.len(),
            });
        }
        if inputs.is_empty() {
            return Ok(self.clone());
        }
        if self.appends_since_refactor + inputs.len() > REFACTOR_EVERY {
            return self.rebuild_with(inputs, observations);
        }
        let projections = inputs
            .iter()
            .map(|x| self.project(x.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        self.append(&projections, observations)
    }

    /// Appends observations at inputs whose projections against `self` are
    /// already known. Skips the periodic refactorization, so it is meant for
    /// short-lived extensions such as search-tree beliefs.
    pub fn condition_projected(&self, projections: &[Projection], observations: &[f64]) -> Result<Self, GpError> {
        if projections.len() != observations.len() {
            return Err(GpError::LengthMismatch {
                inputs: projections.len(),
                observations: observations.len(),
            });
        }
        if projections.is_empty() {
            return Ok(self.clone());
        }
        for p in projections {
            if p.covered() != self.len || self.ancestor_index(p)? != self.segments.len() {
                return Err(GpError::ForeignProjection);
            }
        }
        self.append(projections, observations)
    }

    fn append(&self, projections: &[Projection], observations: &[f64]) -> Result<Self, GpError> {
        let k = projections.len();
        let n = self.len;
        let mut schur = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let mut s = self.compiled.eval(&projections[i].input, &projections[j].input)
                    - dot(&projections[i].v, &projections[j].v);
                if i == j {
                    s += self.noise_variance;
                }
                schur[i * k + j] = s;
                schur[j * k + i] = s;
            }
        }
        let (ls, _) = cholesky_with_jitter(&schur, k, self.jitter())
            .map_err(|jitter| GpError::Factorization { jitter })?;

        let mut rows = Vec::with_capacity(k * n + k * (k + 1) / 2);
        let mut inputs = Vec::with_capacity(k * self.input_dim());
        let mut alpha = Vec::with_capacity(k);
        for j in 0..k {
            rows.extend_from_slice(&projections[j].v);
            rows.extend_from_slice(&ls[j * k..j * k + j + 1]);
            inputs.extend_from_slice(&projections[j].input);
            let mut r = observations[j] - projections[j].mean;
            for m in 0..j {
                r -= ls[j * k + m] * alpha[m];
            }
            alpha.push(r / ls[j * k + j]);
        }
        let seg = Segment {
            offset: n,
            inputs,
            targets: observations.to_vec(),
            rows,
            alpha,
        };
        let mut next = self.clone();
        next.segments.push(Arc::new(seg));
        next.len += k;
        next.appends_since_refactor += k;
        Ok(next)
    }

    fn rebuild_with<P: AsRef<[f64]>>(&self, inputs: &[P], observations: &[f64]) -> Result<Self, GpError> {
        let dim = self.input_dim();
        let mut all_inputs: Vec<f64> = self.segments.iter().flat_map(|s| s.inputs.iter().copied()).collect();
        for x in inputs {
            self.check_dim(x.as_ref())?;
            all_inputs.extend_from_slice(x.as_ref());
        }
        let mut targets: Vec<f64> = self.targets().collect();
        targets.extend_from_slice(observations);
        self.factorize(all_inputs, targets, dim)
    }

    /// Rebuilds the factor from the full history.
    pub fn refactor(&self) -> Result<Self, GpError> {
        let inputs: Vec<f64> = self.segments.iter().flat_map(|s| s.inputs.iter().copied()).collect();
        self.factorize(inputs, self.targets().collect(), self.input_dim())
    }

    fn factorize(&self, inputs: Vec<f64>, targets: Vec<f64>, dim: usize) -> Result<Self, GpError> {
        let n = targets.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut v = self
                    .compiled
                    .eval(&inputs[i * dim..(i + 1) * dim], &inputs[j * dim..(j + 1) * dim]);
                if i == j {
                    v += self.noise_variance;
                }
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let (l, _) = cholesky_with_jitter(&a, n, self.jitter()).map_err(|jitter| GpError::Factorization { jitter })?;
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        let mut alpha = Vec::with_capacity(n);
        for i in 0..n {
            rows.extend_from_slice(&l[i * n..i * n + i + 1]);
            let r = targets[i] - dot(&l[i * n..i * n + i], &alpha[..i]);
            alpha.push(r / l[i * n + i]);
        }
        let mut next = Self {
            kernel: Arc::clone(&self.kernel),
            compiled: Arc::clone(&self.compiled),
            noise_variance: self.noise_variance,
            segments: Vec::new(),
            len: n,
            appends_since_refactor: 0,
        };
        if n > 0 {
            next.segments.push(Arc::new(Segment {
                offset: 0,
                inputs,
                targets,
                rows,
                alpha,
            }));
        }
        Ok(next)
    }

    /// Row-major joint posterior covariance of projections covering this belief.
    pub fn joint_covariance(&self, projections: &[Projection]) -> Vec<f64> {
        let k = projections.len();
        let mut c = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                let s = self.compiled.eval(&projections[i].input, &projections[j].input)
                    - dot(&projections[i].v, &projections[j].v);
                c[i * k + j] = s;
                c[j * k + i] = s;
            }
        }
        c
    }

    /// One joint draw of the noiseless field at the projected inputs.
    pub fn sample_latent_projected<R: Rng + ?Sized>(
        &self,
        projections: &[Projection],
        rng: &mut R,
    ) -> Result<Vec<f64>, GpError> {
        if projections.is_empty() {
            return Err(GpError::NoLocations);
        }
        let k = projections.len();
        let means: Vec<f64> = projections
            .iter()
            .map(|p| self.posterior_projected(p).map(|q| q.mean))
            .collect::<Result<_, _>>()?;
        let cov = self.joint_covariance(projections);
        let l = match cholesky(&cov, k) {
            Some(l) => l,
            None => {
                let mut jittered = cov.clone();
                for i in 0..k {
                    jittered[i * k + i] += self.jitter();
                }
                cholesky(&jittered, k).ok_or(GpError::Factorization { jitter: self.jitter() })?
            }
        };
        let xi: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        Ok((0..k)
            .map(|i| means[i] + (0..=i).map(|m| l[i * k + m] * xi[m]).sum::<f64>())
            .collect())
    }

    /// One joint draw of simulated observations (field plus sensor noise).
    pub fn sample_joint_projected<R: Rng + ?Sized>(
        &self,
        projections: &[Projection],
        rng: &mut R,
    ) -> Result<Vec<f64>, GpError> {
        let mut z = self.sample_latent_projected(projections, rng)?;
        let sd = self.noise_variance.sqrt();
        for zi in &mut z {
            let e: f64 = rng.sample(StandardNormal);
            *zi += sd * e;
        }
        Ok(z)
    }

    pub fn sample_latent<P: AsRef<[f64]>, R: Rng + ?Sized>(
        &self,
        locations: &[P],
        rng: &mut R,
    ) -> Result<Vec<f64>, GpError> {
        let projections = self.project_all(locations)?;
        self.sample_latent_projected(&projections, rng)
    }

    /// One draw of simulated observations at `locations` from the posterior predictive.
    pub fn sample_joint<P: AsRef<[f64]>, R: Rng + ?Sized>(
        &self,
        locations: &[P],
        rng: &mut R,
    ) -> Result<Vec<f64>, GpError> {
        let projections = self.project_all(locations)?;
        self.sample_joint_projected(&projections, rng)
    }

    pub fn project_all<P: AsRef<[f64]>>(&self, locations: &[P]) -> Result<Vec<Projection>, GpError> {
        if locations.is_empty() {
            return Err(GpError::NoLocations);
        }
        locations.iter().map(|x| self.project(x.as_ref())).collect()
    }
}
