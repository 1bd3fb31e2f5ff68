//! Random-feature posterior function samples and their global maximization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use super::belief::GpBelief;
use super::GpError;

/// Default number of random features per sample.
pub const DEFAULT_FEATURES: usize = 1000;

/// An analytic draw `f̂(x) = s Σ_j θ_j cos(ω_j·x + b_j)` from the approximate posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSample {
    dim: usize,
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    weights: Vec<f64>,
    scale: f64,
    shortest_lengthscale: f64,
}

impl SpectralSample {
    pub fn feature_count(&self) -> usize {
        self.phases.len()
    }

    pub fn input_dim(&self) -> usize {
        self.dim
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Builds a sample from explicit parameters. `frequencies` is row-major `F × dim`.
    pub fn from_parts(dim: usize, frequencies: Vec<f64>, phases: Vec<f64>, weights: Vec<f64>, scale: f64) -> Self {
        assert_eq!(frequencies.len(), dim * phases.len());
        assert_eq!(weights.len(), phases.len());
        let max_freq = frequencies.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        Self {
            dim,
            frequencies,
            phases,
            weights,
            scale,
            shortest_lengthscale: if max_freq > 0.0 { 1.0 / max_freq } else { 1.0 },
        }
    }

    #[inline]
    fn argument(&self, j: usize, x: &[f64]) -> f64 {
        let w = &self.frequencies[j * self.dim..(j + 1) * self.dim];
        let mut a = self.phases[j];
        for d in 0..self.dim {
            a += w[d] * x[d];
        }
        a
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.phases.len() {
            acc += self.weights[j] * self.argument(j, x).cos();
        }
        self.scale * acc
    }

    /// Value and gradient with respect to every input coordinate.
    pub fn eval_with_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let mut grad = vec![0.0; self.dim];
        for j in 0..self.phases.len() {
            let (s, c) = self.argument(j, x).sin_cos();
            let t = self.weights[j];
            value += t * c;
            let w = &self.frequencies[j * self.dim..(j + 1) * self.dim];
            for d in 0..self.dim {
                grad[d] -= t * s * w[d];
            }
        }
        for g in &mut grad {
            *g *= self.scale;
        }
        (self.scale * value, grad)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.eval_with_gradient(x).1
    }
}

/// Draws `f̂` from the random-feature approximation of the posterior of `belief`.
///
/// Frequencies come from the squared-exponential spectral density and the
/// weight posterior is sampled pathwise: a prior weight draw is corrected by
/// the residual of a noisy prior fit to the data, which is exact for
/// Bayesian linear regression and only needs a `D × D` solve.
pub fn spectral_sample<R: Rng + ?Sized>(belief: &GpBelief, features: usize, rng: &mut R) -> Result<SpectralSample, GpError> {
    let n = belief.len();
    if features == 0 || features < n {
        return Err(GpError::TooFewFeatures {
            features,
            observations: n,
        });
    }
    let dim = belief.input_dim();
    let inv_l = belief.compiled_kernel().inv_lengthscales().to_vec();
    let mut frequencies = Vec::with_capacity(features * dim);
    for _ in 0..features {
        for &il in &inv_l {
            let xi: f64 = rng.sample(StandardNormal);
            frequencies.push(xi * il);
        }
    }
    let two_pi = std::f64::consts::TAU;
    let phase_dist = Uniform::new(0.0, two_pi).expect("valid phase range");
    let phases: Vec<f64> = (0..features).map(|_| rng.sample(phase_dist)).collect();
    let mut weights: Vec<f64> = (0..features).map(|_| rng.sample(StandardNormal)).collect();
    let scale = (2.0 * belief.prior_variance() / features as f64).sqrt();
    let mut sample = SpectralSample {
        dim,
        frequencies,
        phases,
        weights: Vec::new(),
        scale,
        shortest_lengthscale: 1.0 / inv_l.iter().fold(0.0f64, |m, v| m.max(*v)),
    };

    if n > 0 {
        let inputs: Vec<&[f64]> = belief.inputs().collect();
        let mut phi = DMatrix::<f64>::zeros(n, features);
        for (i, x) in inputs.iter().enumerate() {
            for j in 0..features {
                phi[(i, j)] = scale * sample.argument(j, x).cos();
            }
        }
        let noise = belief.noise_variance();
        let mut gram = &phi * phi.transpose();
        for i in 0..n {
            gram[(i, i)] += noise;
        }
        let chol = match gram.clone().cholesky() {
            Some(c) => c,
            None => {
                let jitter = super::belief::JITTER * belief.prior_variance();
                for i in 0..n {
                    gram[(i, i)] += jitter;
                }
                gram.cholesky().ok_or(GpError::Factorization { jitter })?
            }
        };
        let theta0 = DVector::from_column_slice(&weights);
        let noise_sd = noise.sqrt();
        let targets: Vec<f64> = belief.targets().collect();
        let eps = DVector::from_fn(n, |_, _| noise_sd * rng.sample::<f64, _>(StandardNormal));
        let residual = DVector::from_column_slice(&targets) - &phi * &theta0 - eps;
        let w = chol.solve(&residual);
        let theta = theta0 + phi.transpose() * w;
        weights = theta.iter().copied().collect();
    }
    sample.weights = weights;
    Ok(sample)
}

/// Axis-aligned box, optionally minus rectangular holes, over the leading
/// input coordinates. `fixed` coordinates (e.g. the current time) are
/// appended to every point handed to the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub holes: Vec<(Vec<f64>, Vec<f64>)>,
    pub fixed: Vec<f64>,
}

impl SearchDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self {
            lower,
            upper,
            holes: Vec::new(),
            fixed: Vec::new(),
        }
    }

    pub fn with_holes(mut self, holes: Vec<(Vec<f64>, Vec<f64>)>) -> Self {
        self.holes = holes;
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<f64>) -> Self {
        self.fixed = fixed;
        self
    }

    fn free_dims(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let inside = (0..self.free_dims()).all(|d| x[d] >= self.lower[d] && x[d] <= self.upper[d]);
        inside && !self.holes.iter().any(|(lo, hi)| in_open_box(x, lo, hi))
    }

    /// Projects onto the feasible set: clamp to the box, then push out of holes.
    pub fn project(&self, x: &mut [f64]) -> bool {
        for _ in 0..8 {
            for d in 0..self.free_dims() {
                x[d] = x[d].clamp(self.lower[d], self.upper[d]);
            }
            let mut moved = false;
            for (lo, hi) in &self.holes {
                if in_open_box(x, lo, hi) {
                    let mut best = (f64::INFINITY, 0usize, 0.0);
                    for d in 0..lo.len() {
                        let (to_lo, to_hi) = (x[d] - lo[d], hi[d] - x[d]);
                        if to_lo < best.0 {
                            best = (to_lo, d, lo[d]);
                        }
                        if to_hi < best.0 {
                            best = (to_hi, d, hi[d]);
                        }
                    }
                    x[best.1] = best.2;
                    moved = true;
                }
            }
            if !moved && self.contains(x) {
                return true;
            }
        }
        self.contains(x)
    }

    fn full_point(&self, free: &[f64]) -> Vec<f64> {
        let mut p = free.to_vec();
        p.extend_from_slice(&self.fixed);
        p
    }
}

fn in_open_box(x: &[f64], lo: &[f64], hi: &[f64]) -> bool {
    (0..lo.len()).all(|d| x[d] > lo[d] && x[d] < hi[d])
}

/// Multi-start projected gradient ascent on `f̂`.
///
/// Starts are a Latin hypercube over the box, so each coordinate is
/// uniformly stratified; infeasible starts are redrawn uniformly. Returns the
/// free coordinates of the best point found and `f̂` there.
pub fn argmax_of_sample<R: Rng + ?Sized>(
    sample: &SpectralSample,
    domain: &SearchDomain,
    restarts: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, f64), GpError> {
    let d = domain.free_dims();
    if d + domain.fixed.len() != sample.input_dim() {
        return Err(GpError::Dimension {
            expected: sample.input_dim(),
            got: d + domain.fixed.len(),
        });
    }
    if (0..d).any(|i| !(domain.lower[i] <= domain.upper[i])) {
        return Err(GpError::EmptyDomain);
    }
    if (0..d).all(|i| domain.lower[i] == domain.upper[i]) {
        let x = domain.lower.clone();
        if !domain.contains(&x) {
            return Err(GpError::EmptyDomain);
        }
        let z = sample.eval(&domain.full_point(&x));
        return Ok((x, z));
    }
    let restarts = restarts.max(1);
    let strata: Vec<Vec<usize>> = (0..d)
        .map(|_| {
            let mut p: Vec<usize> = (0..restarts).collect();
            for i in (1..restarts).rev() {
                p.swap(i, rng.random_range(0..=i));
            }
            p
        })
        .collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..restarts {
        let mut start: Vec<f64> = (0..d)
            .map(|i| {
                let u: f64 = rng.random();
                domain.lower[i] + (strata[i][r] as f64 + u) / restarts as f64 * (domain.upper[i] - domain.lower[i])
            })
            .collect();
        let mut tries = 0;
        while !domain.contains(&start) {
            tries += 1;
            if tries > 1000 {
                return Err(GpError::EmptyDomain);
            }
            for i in 0..d {
                start[i] = domain.lower[i] + rng.random::<f64>() * (domain.upper[i] - domain.lower[i]);
            }
        }
        let (x, z) = ascend(sample, domain, start);
        if best.as_ref().is_none_or(|(_, bz)| z > *bz) {
            best = Some((x, z));
        }
    }
    best.ok_or(GpError::EmptyDomain)
}

fn ascend(sample: &SpectralSample, domain: &SearchDomain, start: Vec<f64>) -> (Vec<f64>, f64) {
    let d = domain.free_dims();
    let mut x = start;
    let (mut fx, mut grad) = sample.eval_with_gradient(&domain.full_point(&x));
    let mut step = 0.25 * sample.shortest_lengthscale;
    let min_step = 1e-7 * sample.shortest_lengthscale;
    for _ in 0..500 {
        let norm = grad[..d].iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-14 {
            break;
        }
        let mut accepted = false;
        while step >= min_step {
            let mut cand: Vec<f64> = (0..d).map(|i| x[i] + step * grad[i] / norm).collect();
            if domain.project(&mut cand) {
                let (fc, gc) = sample.eval_with_gradient(&domain.full_point(&cand));
                if fc > fx {
                    x = cand;
                    fx = fc;
                    grad = gc;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Kernel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sample(seed: u64) -> SpectralSample {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 4.0), 0.1, 2).unwrap();
        spectral_sample(&b, 200, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn deterministic_evaluation() {
        let s = random_sample(1);
        assert_eq!(s.eval(&[0.3, 0.7]).to_bits(), s.eval(&[0.3, 0.7]).to_bits());
        assert_eq!(random_sample(9), random_sample(9));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let s = random_sample(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
            let g = s.gradient(&x);
            let h = 1e-5;
            for d in 0..2 {
                let (mut xp, mut xm) = (x, x);
                xp[d] += h;
                xm[d] -= h;
                let fd = (s.eval(&xp) - s.eval(&xm)) / (2.0 * h);
                assert!((fd - g[d]).abs() <= 1e-5 * g[d].abs().max(1.0), "{fd} vs {}", g[d]);
            }
        }
    }

    #[test]
    fn too_few_features_is_an_error() {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 1.0), 0.1, 2)
            .unwrap()
            .condition(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], &[1.0, 2.0, 3.0])
            .unwrap();
        let err = spectral_sample(&b, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(matches!(err, GpError::TooFewFeatures { features: 2, observations: 3 }));
        assert!(err.to_string().contains("increase"));
    }

    #[test]
    fn single_cosine_peak() {
        // f̂(x) = cos(0.8 x + 0.5 y - 1.0) peaks where the argument is 0, e.g. on the line 0.8x + 0.5y = 1.
        // Inside the box [0, 0.5]² the maximum of the argument range [-1, -0.35] is at (0.5, 0.5).
        let s = SpectralSample::from_parts(2, vec![0.8, 0.5], vec![-1.0], vec![1.0], 1.0);
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![0.5, 0.5]);
        let (x, z) = argmax_of_sample(&s, &dom, 3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-3 && (x[1] - 0.5).abs() < 1e-3, "{x:?}");
        assert!((z - (-0.35f64).cos()).abs() < 1e-6);

        // Interior peak: cos(x - 2) over [0, 4] × [0, 1] with no y dependence in the frequency.
        let s = SpectralSample::from_parts(2, vec![1.0, 0.0], vec![-2.0], vec![1.0], 1.0);
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![4.0, 1.0]);
        let (x, z) = argmax_of_sample(&s, &dom, 5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-3);
        assert!((z - 1.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_point_domain() {
        let s = random_sample(3);
        let dom = SearchDomain::new(vec![1.0, 2.0], vec![1.0, 2.0]);
        let (x, z) = argmax_of_sample(&s, &dom, 4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(x, vec![1.0, 2.0]);
        assert_eq!(z, s.eval(&[1.0, 2.0]));
    }

    #[test]
    fn empty_domain_is_an_error() {
        let s = random_sample(3);
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).with_holes(vec![(vec![-1.0, -1.0], vec![2.0, 2.0])]);
        assert!(matches!(
            argmax_of_sample(&s, &dom, 4, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GpError::EmptyDomain)
        ));
    }

    #[test]
    fn ascent_never_ends_below_its_start_and_avoids_holes() {
        let s = random_sample(5);
        let hole = (vec![4.0, 4.0], vec![6.0, 6.0]);
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![10.0, 10.0]).with_holes(vec![hole.clone()]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let start = loop {
                let p = vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)];
                if dom.contains(&p) {
                    break p;
                }
            };
            let f0 = s.eval(&start);
            let (x, z) = ascend(&s, &dom, start);
            assert!(z >= f0);
            assert!(dom.contains(&x));
        }
    }

    #[test]
    fn multistart_beats_dense_grid() {
        let s = random_sample(7);
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![10.0, 10.0]);
        let (_, z) = argmax_of_sample(&s, &dom, 50, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let mut grid_max = f64::NEG_INFINITY;
        for i in 0..500 {
            for j in 0..500 {
                let x = [i as f64 * 10.0 / 499.0, j as f64 * 10.0 / 499.0];
                grid_max = grid_max.max(s.eval(&x));
            }
        }
        assert!(z >= grid_max - 1e-2 * 2.0, "{z} vs grid {grid_max}");
    }

    #[test]
    fn fixed_coordinates_are_appended() {
        let b = GpBelief::new(Kernel::spatiotemporal(1.0, 10.0, 1.0), 0.1, 3).unwrap();
        let s = spectral_sample(&b, 50, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![3.0, 3.0]).with_fixed(vec![7.0]);
        let (x, z) = argmax_of_sample(&s, &dom, 4, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(x.len(), 2);
        assert!((s.eval(&[x[0], x[1], 7.0]) - z).abs() < 1e-12);
    }
}
