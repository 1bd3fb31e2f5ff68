//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//!
//! Set `MSS_ACCEPTANCE=<list>` (e.g. `1,2,9`) to run a subset.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mss_core::acquisition::{mvi_term, normal_cdf, refresh_max_values, Mvi, RewardFn};
use mss_core::gp::{spectral_sample, GpBelief, Kernel, Posterior, SearchDomain};
use mss_core::harness::{
    export_plot_data, heatmap_mass, run_batch, run_trial_with_world, BatchOutput, ExperimentConfig,
    PlannerKind, PlotKind, PlotSource, Scenario, TrialLine, TrialWorld,
};
use mss_core::metrics::{mann_whitney_u, summarize, MetricReport};
use mss_core::planner::{search, FixedActions, MapWorld, ObservationModel, SearchConfig};
use mss_core::world::{
    ActionPrimitive, FieldSource, GroundTruthField, KnowledgeMode, ObstacleMap, Pose, PrimitiveKind, PrimitiveSet,
    Rect,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Everything later re-run by the determinism criterion.
#[derive(Default)]
struct Memo {
    convex: Option<BatchOutput>,
    non_convex: Option<BatchOutput>,
    numerics: Vec<(String, Vec<u64>)>,
}

fn se_kernel(a: &[f64], b: &[f64], l: f64, s2: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    s2 * (-0.5 * d2 / (l * l)).exp()
}

/// Posterior by a dense Cholesky solve of `(K + σ_n² I)`.
fn dense_posterior(xs: &[Vec<f64>], ys: &[f64], q: &[f64], l: f64, s2: f64, noise: f64) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, s2);
    }
    let k = DMatrix::from_fn(n, n, |i, j| se_kernel(&xs[i], &xs[j], l, s2) + if i == j { noise } else { 0.0 });
    let ks = DVector::from_fn(n, |i, _| se_kernel(&xs[i], q, l, s2));
    let chol = k.cholesky().expect("positive definite");
    let alpha = chol.solve(&DVector::from_column_slice(ys));
    let v = chol.solve(&ks);
    (ks.dot(&alpha), s2 - ks.dot(&v))
}

fn c1_gp_oracle(memo: &mut Memo) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut bits = Vec::new();
    for _ in 0..200 {
        let l = rng.random_range(0.5..3.0);
        let s2 = rng.random_range(0.5..100.0);
        let noise = s2 * rng.random_range(1e-3..0.5);
        let n = rng.random_range(1..=50);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let probes: Vec<Vec<f64>> =
            (0..10).map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        // grow the belief in random chunks, keeping projections made against the prior
        let mut b = GpBelief::new(Kernel::squared_exponential(l, s2), noise, 2).unwrap();
        let mut projections: Vec<_> = probes.iter().map(|p| b.project(p).unwrap()).collect();
        let mut k = 0;
        while k < n {
            let chunk = rng.random_range(1..=8).min(n - k);
            b = b.condition(&xs[k..k + chunk], &ys[k..k + chunk]).unwrap();
            k += chunk;
        }
        let refactored = b.len() > 64;
        for (p, proj) in probes.iter().zip(projections.iter_mut()) {
            let (m, v) = dense_posterior(&xs, &ys, p, l, s2, noise);
            let direct = b.posterior_at(p).unwrap();
            let mut cands: Vec<Posterior> = vec![direct];
            if !refactored {
                if let Ok(ext) = b.extend_projection(proj) {
                    *proj = ext;
                    cands.push(b.posterior_projected(proj).unwrap());
                }
            }
            for c in cands {
                let em = (c.mean - m).abs() / m.abs().max(1e-6 * s2.sqrt());
                let ev = (c.variance - v).abs() / v.abs().max(1e-6 * s2);
                worst = worst.max(em).max(ev);
                bits.push(c.mean.to_bits());
                bits.push(c.variance.to_bits());
            }
        }
    }
    memo.numerics.push(("gp".into(), bits));
    outcome(worst <= 1e-8, format!("max relative error {worst:.3e} over 200 instances (limit 1e-8)"))
}

/// Entropy difference `H[N(μ, σ²)] − H[N(μ, σ²) truncated above at z*]` by quadrature.
fn entropy_gap_quadrature(mu: f64, sigma: f64, z: f64) -> f64 {
    let gauss = 0.5 * (2.0 * PI * std::f64::consts::E * sigma * sigma).ln();
    let gamma = (z - mu) / sigma;
    // the truncated density decays like exp(γ u) below z* when γ < 0
    let lower = mu + sigma * (gamma - 40.0 / gamma.abs().max(1.0)).min(-12.0);
    let n = 60_000;
    let h = (z - lower) / n as f64;
    let log_u = |y: f64| -0.5 * ((y - mu) / sigma).powi(2);
    let shift = log_u(z.min(mu));
    let simpson = |f: &dyn Fn(f64) -> f64| -> f64 {
        let mut s = f(lower) + f(z);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lower + i as f64 * h);
        }
        s * h / 3.0
    };
    let mass = simpson(&|y| (log_u(y) - shift).exp());
    let log_norm = mass.ln() + shift;
    let trunc = simpson(&|y| {
        let lp = log_u(y) - log_norm;
        -lp * lp.exp()
    });
    gauss - trunc
}

fn c2_mvi_entropy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mu = rng.random_range(-20.0..20.0);
        let sigma = rng.random_range(0.05..10.0);
        let z = mu + sigma * rng.random_range(-3.0..6.0);
        let closed = mvi_term((z - mu) / sigma);
        worst = worst.max((closed - entropy_gap_quadrature(mu, sigma, z)).abs());
    }
    outcome(worst <= 1e-3, format!("max |closed form - quadrature| {worst:.3e} nats over 1000 triples (limit 1e-3)"))
}

fn c3_spectral(memo: &mut Memo) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (l, s2, noise) = (1.0, 1.0, 0.1);
    let xs: Vec<[f64; 2]> = (0..10).map(|_| [rng.random_range(2.0..8.0), rng.random_range(2.0..8.0)]).collect();
    let ys: Vec<f64> = (0..10).map(|_| rng.random_range(-1.5..1.5)).collect();
    let belief = GpBelief::new(Kernel::squared_exponential(l, s2), noise, 2)
        .unwrap()
        .condition(&xs, &ys)
        .unwrap();
    let probes: Vec<[f64; 2]> = (0..20).map(|i| [1.0 + (i % 5) as f64 * 2.0, 2.0 + (i / 5) as f64 * 2.0]).collect();
    let samples = 500;
    let mut values = vec![Vec::with_capacity(samples); probes.len()];
    for _ in 0..samples {
        let s = spectral_sample(&belief, 1000, &mut rng).unwrap();
        for (v, p) in values.iter_mut().zip(&probes) {
            v.push(s.eval(p));
        }
    }
    let xs_v: Vec<Vec<f64>> = xs.iter().map(|p| p.to_vec()).collect();
    let (mut mean_ok, mut var_ok) = (0, 0);
    let (mut worst_z, mut worst_rel): (f64, f64) = (0.0, 0.0);
    let mut bits = Vec::new();
    for (v, p) in values.iter().zip(&probes) {
        let (m, var) = dense_posterior(&xs_v, &ys, p, l, s2, noise);
        let n = v.len() as f64;
        let sm = v.iter().sum::<f64>() / n;
        let sv = v.iter().map(|x| (x - sm) * (x - sm)).sum::<f64>() / (n - 1.0);
        let z = (sm - m).abs() / (var / n).sqrt();
        let rel = (sv - var).abs() / var;
        mean_ok += (z <= 3.0) as usize;
        var_ok += (rel <= 0.1) as usize;
        worst_z = worst_z.max(z);
        worst_rel = worst_rel.max(rel);
        bits.push(sm.to_bits());
        bits.push(sv.to_bits());
    }
    memo.numerics.push(("spectral".into(), bits));
    let pass = mean_ok == probes.len() && var_ok == probes.len();
    outcome(
        pass,
        format!(
            "mean within 3 SE at {mean_ok}/20 (worst {worst_z:.2} SE), variance within 10% at {var_ok}/20 (worst {:.1}%)",
            100.0 * worst_rel
        ),
    )
}

fn c4_tree_invariants(memo: &mut Memo) -> Outcome {
    let fence = Rect::new(0.0, 0.0, 10.0, 10.0);
    let blocks = ObstacleMap::twelve_blocks(&fence, 1.0);
    let map = ObstacleMap::new(fence, blocks, 0.1, KnowledgeMode::Known, 3.0).unwrap();
    let prims = PrimitiveSet::holonomic(10, 1.5, 0.5, false);
    let mut violations = Vec::new();
    let mut bits = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
        let xs: Vec<[f64; 2]> = (0..8).map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)]).collect();
        let ys: Vec<f64> = (0..8).map(|_| rng.random_range(-10.0..10.0)).collect();
        let belief = GpBelief::new(Kernel::squared_exponential(1.0, 100.0), 1.0, 2)
            .unwrap()
            .condition(&xs, &ys)
            .unwrap();
        let domain = SearchDomain::new(vec![0.0, 0.0], vec![10.0, 10.0]);
        let maxvals = refresh_max_values(&belief, 3, 1000, &domain, 10, 1, &mut rng).unwrap();
        let pose = Pose::new(5.0, 5.0, 0.0);
        let world = MapWorld::new(&map, &prims);
        let config = SearchConfig {
            horizon: 5,
            rollouts: 250,
            seed,
            ..SearchConfig::default()
        };
        let (decision, tree) =
            search(&belief, &pose, &world, &Mvi(&maxvals), &config, ObservationModel::Sampled).unwrap();
        for v in tree.violations(&config.widening) {
            violations.push(format!("seed {seed}: {v}"));
        }
        bits.push(decision.action.id as u64);
        bits.extend(decision.root_stats.iter().map(|s| s.value.to_bits()));
    }
    memo.numerics.push(("tree".into(), bits));
    let detail = match violations.first() {
        None => "0 violations over 20 searches (250 rollouts, h = 5)".to_string(),
        Some(v) => format!("{} violations, first: {v}", violations.len()),
    };
    outcome(violations.is_empty(), detail)
}

/// Reward of a transition is the mean of its simulated observations.
struct ObservedMean;

impl RewardFn for ObservedMean {
    fn point_reward(&self, _input: &[f64], p: Posterior) -> f64 {
        p.mean
    }

    fn uses_observations(&self) -> bool {
        true
    }

    fn observation_reward(&self, _inputs: &[Vec<f64>], obs: &[f64]) -> f64 {
        obs.iter().sum::<f64>() / obs.len() as f64
    }
}

fn c5_bandit(memo: &mut Memo) -> Outcome {
    let (a, b) = ([2.0, 2.0], [8.0, 8.0]);
    let belief = GpBelief::new(Kernel::squared_exponential(1.0, 1.0), 0.09, 2)
        .unwrap()
        .condition(&[a, b], &[1.0, 0.6])
        .unwrap();
    let ma = belief.posterior_at(&a).unwrap().mean;
    let mb = belief.posterior_at(&b).unwrap().mean;
    let stay = |id: usize, p: [f64; 2]| ActionPrimitive::new(id, PrimitiveKind::Stay, Pose::new(p[0], p[1], 0.0), 0.0, 0.5);
    let world = FixedActions(vec![stay(0, b), stay(1, a)]);
    let pose = Pose::new(5.0, 5.0, 0.0);
    let mut rates = Vec::new();
    for rollouts in [100, 250, 500] {
        let mut correct = 0;
        for seed in 0..100u64 {
            let config = SearchConfig {
                horizon: 1,
                rollouts,
                seed: 5000 + seed,
                ..SearchConfig::default()
            };
            let (d, _) = search(&belief, &pose, &world, &ObservedMean, &config, ObservationModel::Sampled).unwrap();
            correct += (d.action.id == 1) as usize;
        }
        rates.push(correct);
    }
    memo.numerics.push(("bandit".into(), rates.iter().map(|&r| r as u64).collect()));
    let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
    let gap_ok = ma - mb >= 0.2;
    outcome(
        rates[2] >= 95 && monotone && gap_ok,
        format!(
            "expected gap {:.3}; correct choices at 100/250/500 rollouts: {}/{}/{} of 100",
            ma - mb,
            rates[0],
            rates[1],
            rates[2]
        ),
    )
}

fn medians(lines: &[TrialLine], planner: PlannerKind, f: fn(&MetricReport) -> f64) -> f64 {
    let v: Vec<f64> = lines.iter().filter(|t| t.planner == planner.name()).map(|t| f(&t.metrics)).collect();
    summarize(&v).median
}

fn study_config(scenario: Scenario, compare: Vec<PlannerKind>, trials: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(scenario, PlannerKind::Plumes);
    c.compare_with = compare;
    c.trials = trials;
    c.base_seed = 2019;
    c.budget = 200.0;
    c.epsilon = 1.5;
    c.kernel.lengthscale = 1.0;
    c.kernel.variance = 100.0;
    c.kernel.noise_variance = 1.0;
    c.search.horizon = 5;
    c.search.rollouts = 250;
    c
}

fn reward_table(lines: &[TrialLine], planners: &[PlannerKind]) -> String {
    planners
        .iter()
        .map(|&p| {
            format!(
                "{} {:.1}/{:.2}",
                p.name(),
                medians(lines, p, |m| m.mss_reward as f64),
                medians(lines, p, |m| m.rmse)
            )
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn c6_convex(memo: &mut Memo) -> Outcome {
    let clock = Instant::now();
    let planners = [PlannerKind::Plumes, PlannerKind::UcbMyopic, PlannerKind::Boustro];
    let c = study_config(Scenario::Convex, planners[1..].to_vec(), 20);
    let batch = run_batch(&c).expect("convex batch runs");
    let secs = clock.elapsed().as_secs_f64();
    let lines = &batch.results.trials;
    let reward = |p| medians(lines, p, |m| m.mss_reward as f64);
    let rmse = |p| medians(lines, p, |m| m.rmse);
    let order = reward(PlannerKind::Plumes) > reward(PlannerKind::UcbMyopic)
        && reward(PlannerKind::Plumes) > reward(PlannerKind::Boustro);
    let best_baseline = rmse(PlannerKind::UcbMyopic).min(rmse(PlannerKind::Boustro));
    let rmse_ok = rmse(PlannerKind::Plumes) <= 2.0 * best_baseline;
    let detail = format!(
        "median mss_reward/rmse: {}; rmse ratio {:.2}; {:.0} s",
        reward_table(lines, &planners),
        rmse(PlannerKind::Plumes) / best_baseline,
        secs
    );
    memo.convex = Some(batch);
    outcome(order && rmse_ok && secs < 1800.0, detail)
}

fn c7_non_convex(memo: &mut Memo) -> Outcome {
    let clock = Instant::now();
    let planners = [PlannerKind::Plumes, PlannerKind::UcbMcts, PlannerKind::UcbMyopic];
    let c = study_config(Scenario::NonConvexKnown, planners[1..].to_vec(), 20);
    let batch = run_batch(&c).expect("non-convex batch runs");
    let secs = clock.elapsed().as_secs_f64();
    let lines = &batch.results.trials;
    let reward = |p| medians(lines, p, |m| m.mss_reward as f64);
    let pass = reward(PlannerKind::Plumes) > reward(PlannerKind::UcbMcts)
        && reward(PlannerKind::Plumes) > reward(PlannerKind::UcbMyopic);
    let detail = format!("median mss_reward/rmse: {}; {:.0} s", reward_table(lines, &planners), secs);
    memo.non_convex = Some(batch);
    outcome(pass, detail)
}

const SWITCH: usize = 40;
const OLD_PEAK: [f64; 2] = [2.5, 2.5];
const NEW_PEAK: [f64; 2] = [7.5, 7.0];

/// Two Gaussian bumps; the taller one changes at `SWITCH`.
fn two_bump_world() -> TrialWorld {
    let n = 51;
    let cell = 0.2;
    let bump = |x: f64, y: f64, c: [f64; 2], h: f64| h * (-((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (2.0 * 1.2 * 1.2)).exp();
    let mut values = Vec::with_capacity(2 * n * n);
    for (old_h, new_h) in [(10.0, 5.0), (4.0, 12.0)] {
        for j in 0..n {
            for i in 0..n {
                let (x, y) = (i as f64 * cell, j as f64 * cell);
                values.push(bump(x, y, OLD_PEAK, old_h) + bump(x, y, NEW_PEAK, new_h) - 3.0);
            }
        }
    }
    let field = GroundTruthField::from_grid(
        FieldSource::Analytic,
        [0.0, 0.0],
        [cell, cell],
        n,
        n,
        vec![0.0, SWITCH as f64],
        values,
    )
    .unwrap();
    TrialWorld {
        field,
        map: ObstacleMap::empty(Rect::new(0.0, 0.0, 10.0, 10.0)),
        seed: 808,
    }
}

const DYNAMIC_SEEDS: [u64; 3] = [801, 802, 803];

/// Reward mass near the new maximum before and after the switch, per world seed.
fn redistribution_run() -> Vec<(f64, f64, MetricReport)> {
    let mut c = ExperimentConfig::new(Scenario::Spatiotemporal, PlannerKind::Plumes);
    c.kernel.lengthscale = 1.5;
    c.kernel.variance = 25.0;
    c.kernel.noise_variance = 0.5;
    c.kernel.temporal_lengthscale = Some(100.0);
    c.start = Some([OLD_PEAK[0] + 1.0, OLD_PEAK[1], 0.0]);
    let (before, after) = (SWITCH - 10, SWITCH + 30);
    c.snapshots = vec![before, after];
    c.budget = 1.5 * (after + 2) as f64;
    DYNAMIC_SEEDS
        .iter()
        .map(|&seed| {
            let world = TrialWorld { seed, ..two_bump_world() };
            let r = run_trial_with_world(&c, PlannerKind::Plumes, world, 0).expect("dynamic mission runs");
            let mass = |it| {
                let text = export_plot_data(PlotSource::Record(&r), PlotKind::RewardHeatmap, Some(it)).unwrap();
                heatmap_mass(&text, NEW_PEAK, 1.5)
            };
            (mass(before), mass(after), r.metrics)
        })
        .collect()
}

fn c8_spatiotemporal(memo: &mut Memo) -> Outcome {
    let runs = redistribution_run();
    let mut bits = Vec::new();
    for (before, after, metrics) in &runs {
        bits.extend([before.to_bits(), after.to_bits(), metrics.mss_reward, metrics.rmse.to_bits()]);
    }
    memo.numerics.push(("dynamic".into(), bits));
    let before: f64 = runs.iter().map(|r| r.0).sum();
    let after: f64 = runs.iter().map(|r| r.1).sum();
    let ratio = after / before;
    outcome(
        ratio >= 2.0,
        format!(
            "MVI mass within 1.5 m of the new maximum, pooled over {} worlds: {before:.3} -> {after:.3} (x{ratio:.2}, need x2)",
            runs.len()
        ),
    )
}

/// Two-sided exact p by scanning every bitmask of the pooled sample.
fn bitmask_mann_whitney(a: &[f64], b: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let u_of = |ga: &[f64], gb: &[f64]| -> f64 {
        ga.iter()
            .flat_map(|x| gb.iter().map(move |y| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 }))
            .sum()
    };
    let ua = u_of(a, b);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..1 << pooled.len() {
        if mask.count_ones() as usize != a.len() {
            continue;
        }
        let (ga, gb): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
            pooled.iter().copied().enumerate().partition(|(i, _)| mask >> i & 1 == 1);
        let ga: Vec<f64> = ga.into_iter().map(|(_, v)| v).collect();
        let gb: Vec<f64> = gb.into_iter().map(|(_, v)| v).collect();
        let u = u_of(&ga, &gb);
        total += 1;
        le += (u <= ua + 1e-9) as u64;
        ge += (u >= ua - 1e-9) as u64;
    }
    let nm = (a.len() * b.len()) as f64;
    (ua.min(nm - ua), (2.0 * le.min(ge) as f64 / total as f64).min(1.0))
}

fn c9_mann_whitney() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let (mut cases, mut u_bad, mut worst) = (0, 0, 0.0f64);
    for n in 1..=7 {
        for m in 1..=7 {
            for rep in 0..6 {
                let tied = rep % 2 == 1;
                let mut draw = |k: usize| -> Vec<f64> {
                    (0..k)
                        .map(|_| if tied { rng.random_range(0..4) as f64 } else { rng.random_range(-5.0..5.0) })
                        .collect()
                };
                let (a, b) = (draw(n), draw(m));
                let r = mann_whitney_u(&a, &b);
                let (u, p) = bitmask_mann_whitney(&a, &b);
                cases += 1;
                u_bad += (r.u != u || !r.exact) as usize;
                worst = worst.max((r.p - p).abs());
            }
        }
    }
    outcome(
        u_bad == 0 && worst <= 1e-10,
        format!("{cases} cases over n, m <= 7: U mismatches {u_bad}, max |p - enumeration| {worst:.1e}"),
    )
}

fn c10_determinism(memo: &Memo) -> Outcome {
    let mut mismatches = Vec::new();
    let mut fresh = Memo::default();
    let _ = c1_gp_oracle(&mut fresh);
    let _ = c3_spectral(&mut fresh);
    let _ = c4_tree_invariants(&mut fresh);
    let _ = c5_bandit(&mut fresh);
    let _ = c8_spatiotemporal(&mut fresh);
    for (name, bits) in &fresh.numerics {
        match memo.numerics.iter().find(|(n, _)| n == name) {
            Some((_, old)) if old == bits => {}
            Some(_) => mismatches.push(name.clone()),
            None => {}
        }
    }
    // repeat the first two trials of each study batch
    let studies = [
        (&memo.convex, Scenario::Convex, vec![PlannerKind::UcbMyopic, PlannerKind::Boustro]),
        (&memo.non_convex, Scenario::NonConvexKnown, vec![PlannerKind::UcbMcts, PlannerKind::UcbMyopic]),
    ];
    let mut trial_lines = 0;
    for (first, scenario, compare) in studies {
        let Some(first) = first else { continue };
        let again = run_batch(&study_config(scenario, compare, 2)).unwrap();
        for t in &again.results.trials {
            let old = first
                .results
                .trials
                .iter()
                .find(|o| o.trial == t.trial && o.planner == t.planner)
                .expect("trial present in the first run");
            trial_lines += 1;
            let same = old.metrics.mss_reward == t.metrics.mss_reward
                && old.metrics.rmse.to_bits() == t.metrics.rmse.to_bits()
                && old.metrics.xstar_error.to_bits() == t.metrics.xstar_error.to_bits();
            if !same {
                mismatches.push(format!("{} trial {} of {}", t.planner, t.trial, scenario.name()));
            }
        }
    }
    let checked: Vec<&str> = fresh.numerics.iter().map(|(n, _)| n.as_str()).collect();
    outcome(
        mismatches.is_empty(),
        format!(
            "re-ran {} and {trial_lines} mission trials; mismatches: {}",
            checked.join(", "),
            if mismatches.is_empty() { "none".to_string() } else { mismatches.join(", ") }
        ),
    )
}

fn main() {
    let selected: Option<Vec<usize>> = std::env::var("MSS_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let wanted = |k: usize| selected.as_ref().is_none_or(|v| v.contains(&k));
    // sanity check of the oracle's CDF against the crate before relying on it
    assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);

    let mut memo = Memo::default();
    let mut failed = 0;
    type Criterion = fn(&mut Memo) -> Outcome;
    let criteria: [(usize, &str, Criterion); 10] = [
        (1, "GP oracle equivalence", c1_gp_oracle),
        (2, "MVI closed form vs entropy quadrature", |_| c2_mvi_entropy()),
        (3, "spectral sampling fidelity", c3_spectral),
        (4, "tree structural invariants", c4_tree_invariants),
        (5, "MCTS convergence on a stochastic bandit", c5_bandit),
        (6, "convex study ordering", c6_convex),
        (7, "non-convex study ordering", c7_non_convex),
        (8, "spatiotemporal redistribution", c8_spatiotemporal),
        (9, "Mann-Whitney exact agreement", |_| c9_mann_whitney()),
        (10, "determinism", |m| c10_determinism(m)),
    ];
    for (k, name, run) in criteria {
        if !wanted(k) {
            continue;
        }
        let clock = Instant::now();
        let o = run(&mut memo);
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        failed += (!o.pass) as usize;
        println!("criterion {k:>2} {verdict}: {name}: {} [{:.1} s]", o.detail, clock.elapsed().as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
