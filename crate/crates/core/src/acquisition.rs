//! Heuristic rewards evaluated on beliefs.
//!
//! Maximum-value information (MVI) scores a location by the mutual
//! information between an observation there and the field's maximum value,
//! estimated from a small set of posterior max-value samples. GP-UCB scores
//! it by `μ + √β σ` with a growing `β_t`.

use rand::Rng;

use crate::gp::{argmax_of_sample, spectral_sample, GpBelief, GpError, Posterior, SearchDomain};
use crate::world::ActionPrimitive;

/// Default number of max-value samples per planning iteration.
pub const DEFAULT_MAX_VALUE_SAMPLES: usize = 3;

/// Below this standardized gap `log Φ` switches to its asymptotic series.
const LOG_CDF_ASYMPTOTIC_BELOW: f64 = -8.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `log Φ(x)`, finite for every finite `x`.
pub fn normal_log_cdf(x: f64) -> f64 {
    if x < LOG_CDF_ASYMPTOTIC_BELOW {
        // Φ(x) = φ(x)/(-x) · (1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸ - …)
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - LN_SQRT_2PI - (-x).ln() + series.ln()
    } else if x > 0.0 {
        (-0.5 * libm::erfc(x / std::f64::consts::SQRT_2)).ln_1p()
    } else {
        normal_cdf(x).ln()
    }
}

/// One summand of the MVI estimate: `γφ(γ)/(2Φ(γ)) − log Φ(γ)`.
///
/// This equals the entropy of `N(μ, σ²)` minus the entropy of the same
/// Gaussian truncated above at the max-value sample, with `γ = (z* − μ)/σ`.
pub fn mvi_term(gamma: f64) -> f64 {
    if gamma == f64::INFINITY {
        return 0.0;
    }
    let log_cdf = normal_log_cdf(gamma);
    let ratio = (-0.5 * gamma * gamma - LN_SQRT_2PI - log_cdf).exp();
    (0.5 * gamma * ratio - log_cdf).max(0.0)
}

/// Posterior max-value samples shared by every rollout of one planning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxValueSet {
    pub values: Vec<f64>,
    pub locations: Vec<Vec<f64>>,
    pub iteration: usize,
}

impl MaxValueSet {
    pub fn new(values: Vec<f64>, locations: Vec<Vec<f64>>, iteration: usize) -> Self {
        assert!(!values.is_empty(), "max-value set needs at least one sample");
        assert!(values.iter().all(|v| v.is_finite()), "max values must be finite");
        assert_eq!(values.len(), locations.len());
        Self {
            values,
            locations,
            iteration,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// MVI reward from posterior moments at one location.
    pub fn reward(&self, mean: f64, variance: f64) -> f64 {
        let sd = variance.sqrt();
        let total: f64 = self.values.iter().map(|z| mvi_term((z - mean) / sd)).sum();
        total / self.values.len() as f64
    }
}

/// Draws `m` posterior max-value samples: a random-feature function sample
/// maximized over `domain`, per sample.
pub fn refresh_max_values<R: Rng + ?Sized>(
    belief: &GpBelief,
    m: usize,
    features: usize,
    domain: &SearchDomain,
    restarts: usize,
    iteration: usize,
    rng: &mut R,
) -> Result<MaxValueSet, GpError> {
    let m = m.max(1);
    let mut values = Vec::with_capacity(m);
    let mut locations = Vec::with_capacity(m);
    for _ in 0..m {
        let sample = spectral_sample(belief, features, rng)?;
        let (x, z) = argmax_of_sample(&sample, domain, restarts, rng)?;
        values.push(z);
        locations.push(x);
    }
    Ok(MaxValueSet::new(values, locations, iteration))
}

pub fn mvi_reward(belief: &GpBelief, x: &[f64], maxvals: &MaxValueSet) -> Result<f64, GpError> {
    let p = belief.posterior_at(x)?;
    Ok(maxvals.reward(p.mean, p.variance))
}

/// Exploration weight schedule for GP-UCB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UcbSchedule {
    /// `β_t = 2 log(|X| t² π² / 6δ)`, clamped below at 1.
    NoRegret { grid_size: f64, delta: f64 },
    Constant(f64),
}

impl UcbSchedule {
    /// The default no-regret schedule over a 100 × 100 discretization with δ = 0.01.
    pub fn no_regret() -> Self {
        UcbSchedule::NoRegret {
            grid_size: 100.0 * 100.0,
            delta: 0.01,
        }
    }

    pub fn beta(&self, t: usize) -> f64 {
        match *self {
            UcbSchedule::NoRegret { grid_size, delta } => {
                let t = t as f64;
                let arg = grid_size * t * t * std::f64::consts::PI.powi(2) / (6.0 * delta);
                (2.0 * arg.ln()).max(1.0)
            }
            UcbSchedule::Constant(b) => b,
        }
    }
}

pub fn ucb_from_moments(mean: f64, variance: f64, beta: f64) -> f64 {
    mean + beta.sqrt() * variance.sqrt()
}

pub fn ucb_reward(belief: &GpBelief, x: &[f64], schedule: &UcbSchedule, t: usize) -> Result<f64, GpError> {
    let p = belief.posterior_at(x)?;
    Ok(ucb_from_moments(p.mean, p.variance, schedule.beta(t)))
}

/// A per-location heuristic reward, optionally computed from simulated observations.
pub trait RewardFn {
    fn point_reward(&self, input: &[f64], posterior: Posterior) -> f64;

    /// When true, planners score a transition by [`RewardFn::observation_reward`]
    /// on the simulated observations instead of summing point rewards.
    fn uses_observations(&self) -> bool {
        false
    }

    fn observation_reward(&self, _inputs: &[Vec<f64>], _observations: &[f64]) -> f64 {
        0.0
    }
}

/// MVI against a fixed max-value set.
#[derive(Debug, Clone, Copy)]
pub struct Mvi<'a>(pub &'a MaxValueSet);

impl RewardFn for Mvi<'_> {
    fn point_reward(&self, _input: &[f64], p: Posterior) -> f64 {
        self.0.reward(p.mean, p.variance)
    }
}

/// GP-UCB with a fixed `β`.
#[derive(Debug, Clone, Copy)]
pub struct Ucb {
    pub beta: f64,
}

impl Ucb {
    pub fn at_iteration(schedule: &UcbSchedule, t: usize) -> Self {
        Self { beta: schedule.beta(t) }
    }
}

impl RewardFn for Ucb {
    fn point_reward(&self, _input: &[f64], p: Posterior) -> f64 {
        ucb_from_moments(p.mean, p.variance, self.beta)
    }
}

/// Adapts a closure over `(input, posterior)`.
pub struct PointFn<F>(pub F);

impl<F: Fn(&[f64], Posterior) -> f64> RewardFn for PointFn<F> {
    fn point_reward(&self, input: &[f64], p: Posterior) -> f64 {
        (self.0)(input, p)
    }
}

/// Sum of point rewards over an action's sample locations, all under the same belief.
pub fn action_reward<F: RewardFn + ?Sized>(
    belief: &GpBelief,
    action: &ActionPrimitive,
    time: Option<f64>,
    reward: &F,
) -> Result<f64, GpError> {
    let inputs = action.sample_inputs(time);
    let mut total = 0.0;
    for x in &inputs {
        total += reward.point_reward(x, belief.posterior_at(x)?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Kernel;
    use crate::world::{Pose, PrimitiveSet};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Entropy of N(0,1) truncated above at `gamma`, by quadrature on a
    /// numerically normalized density. Independent of the closed form.
    fn truncated_entropy_quadrature(gamma: f64) -> f64 {
        let lower = (gamma - 40.0 / gamma.abs().max(1.0)).min(-12.0);
        let n = 40_000;
        let h = (gamma - lower) / n as f64;
        let log_unnorm = |u: f64| -0.5 * u * u;
        let peak = log_unnorm(if gamma < 0.0 { gamma } else { 0.0 });
        let mut z = 0.0;
        let mut e = 0.0;
        for i in 0..=n {
            let u = lower + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let lp = log_unnorm(u) - peak;
            let p = lp.exp();
            z += w * p;
            e += w * p * lp;
        }
        z *= h / 3.0;
        e *= h / 3.0;
        // H = -∫ (p/Z) log(p/Z) = log Z - E[log p]
        z.ln() - e / z
    }

    fn gaussian_entropy() -> f64 {
        0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()
    }

    #[test]
    fn worked_example_gamma_one() {
        let term = mvi_term(1.0);
        assert!((term - 0.316553).abs() < 1e-6, "{term}");
        let oracle = gaussian_entropy() - truncated_entropy_quadrature(1.0);
        assert!((term - oracle).abs() < 1e-6);
        let set = MaxValueSet::new(vec![1.0], vec![vec![0.0, 0.0]], 0);
        assert!((set.reward(0.0, 1.0) - 0.316553).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_quadrature_across_gammas() {
        for i in 0..=60 {
            let gamma = -12.0 + 0.35 * i as f64;
            let oracle = gaussian_entropy() - truncated_entropy_quadrature(gamma);
            assert!((mvi_term(gamma) - oracle).abs() < 1e-3, "gamma {gamma}: {} vs {oracle}", mvi_term(gamma));
        }
    }

    #[test]
    fn vanishes_for_unreachable_or_certain_max() {
        assert!(mvi_term(40.0) < 1e-12);
        assert_eq!(mvi_term(f64::INFINITY), 0.0);
        let set = MaxValueSet::new(vec![5.0], vec![vec![0.0]], 0);
        assert!(set.reward(0.0, 1e-8) < 1e-12);
        let far = MaxValueSet::new(vec![1e6], vec![vec![0.0]], 0);
        assert!(far.reward(0.0, 1.0) < 1e-12);
    }

    #[test]
    fn far_below_mean_stays_finite() {
        for g in [-8.5, -20.0, -100.0, -1e4] {
            let t = mvi_term(g);
            assert!(t.is_finite() && t > 0.0, "{g}: {t}");
        }
        // continuity across the switch to the asymptotic series
        let (a, b) = (normal_log_cdf(-8.0 + 1e-9), normal_log_cdf(-8.0 - 1e-9));
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn ucb_with_empty_history() {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 100.0), 1.0, 2).unwrap();
        let s = UcbSchedule::Constant(4.0);
        for x in [[0.0, 0.0], [3.0, 9.0]] {
            assert!((ucb_reward(&b, &x, &s, 7).unwrap() - 20.0).abs() < 1e-12);
        }
        let b = b.condition(&[[1.0, 1.0]], &[4.0]).unwrap();
        let p = b.posterior_at(&[1.2, 1.0]).unwrap();
        assert_eq!(ucb_reward(&b, &[1.2, 1.0], &UcbSchedule::Constant(0.0), 3).unwrap(), p.mean);
    }

    #[test]
    fn no_regret_beta_is_positive_and_non_decreasing() {
        let s = UcbSchedule::no_regret();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(s.beta(0) >= 1.0);
        for _ in 0..100 {
            let t1 = rng.random_range(0..500usize);
            let t2 = t1 + rng.random_range(1..500usize);
            assert!(s.beta(t2) >= s.beta(t1));
            assert!(s.beta(t1) > 0.0);
        }
        // 2 ln(10⁴ · π²/6 / 0.01) at t = 1
        let expected = 2.0 * (1e4 * std::f64::consts::PI.powi(2) / 0.06).ln();
        assert!((s.beta(1) - expected).abs() < 1e-12);
    }

    #[test]
    fn action_reward_sums_points() {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 100.0), 1.0, 2)
            .unwrap()
            .condition(&[[5.0, 5.0], [6.0, 5.0]], &[3.0, 8.0])
            .unwrap();
        let prims = PrimitiveSet::holonomic(10, 1.5, 0.5, false);
        let a = &prims.generate(&Pose::new(5.0, 5.0, 0.0))[0];
        let ucb = Ucb { beta: 2.0 };
        let manual: f64 = a
            .sample_inputs(None)
            .iter()
            .map(|x| ucb_reward(&b, x, &UcbSchedule::Constant(2.0), 0).unwrap())
            .sum();
        assert_eq!(a.samples().len(), 3);
        assert!((action_reward(&b, a, None, &ucb).unwrap() - manual).abs() < 1e-12);
    }

    #[test]
    fn refreshed_set_is_reproducible() {
        let b = GpBelief::new(Kernel::squared_exponential(1.0, 100.0), 1.0, 2).unwrap();
        let dom = SearchDomain::new(vec![0.0, 0.0], vec![10.0, 10.0]);
        let a = refresh_max_values(&b, 1, 100, &dom, 5, 0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let c = refresh_max_values(&b, 1, 100, &dom, 5, 0, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, c);
    }

    proptest! {
        #[test]
        fn mvi_is_non_negative(mean in -50.0f64..50.0, sd in 1e-4f64..30.0, z in -200.0f64..200.0) {
            let set = MaxValueSet::new(vec![z], vec![vec![0.0]], 0);
            prop_assert!(set.reward(mean, sd * sd) >= 0.0);
        }
    }
}
