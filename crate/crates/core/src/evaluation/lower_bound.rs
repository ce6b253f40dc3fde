//! Monte Carlo checks of the two lower-bound constructions.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::design::{frank_wolfe_design, FrankWolfeConfig, StopRule, DEFAULT_DESIGN_LAMBDA};
use crate::error::{OdpoError, Result};
use crate::estimator::{estimate, Dataset};
use crate::feedback::{sample_outcome, sigmoid};
use crate::instance::{
    make_hypercube_instance, make_online_lower_bound_instance, FeatureVector, HypercubeFamily, Instance,
};
use crate::pipeline::{allocate, predict};
use crate::rng;

use super::bounds::{corollary_bound, hypercube_floor};
use super::divergence::{bretagnolle_huber_rhs, kl_bernoulli};
use super::regret::simple_regret;

const ONLINE_STREAM: u64 = 0x6f6e_6c69;
const HYPERCUBE_STREAM: u64 = 0x6879_7063;
/// ε for the designs built inside the lower-bound checks.
const DESIGN_EPSILON: f64 = 0.5;
const CONFIDENCE_DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerBoundAlgorithm {
    Odpo,
    Uniform,
}

impl fmt::Display for LowerBoundAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LowerBoundAlgorithm::Odpo => "odpo",
            LowerBoundAlgorithm::Uniform => "uniform",
        })
    }
}

impl FromStr for LowerBoundAlgorithm {
    type Err = OdpoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "odpo" => Ok(LowerBoundAlgorithm::Odpo),
            "uniform" => Ok(LowerBoundAlgorithm::Uniform),
            other => Err(OdpoError::InvalidArgument(format!(
                "unknown lower-bound algorithm `{other}` (expected odpo or uniform)"
            ))),
        }
    }
}

fn design_config() -> FrankWolfeConfig {
    FrankWolfeConfig {
        lambda: DEFAULT_DESIGN_LAMBDA,
        epsilon: DESIGN_EPSILON,
        max_iters: 5000,
        stop_rule: StopRule::OnePlusEpsilon,
        ..FrankWolfeConfig::default()
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OnlineReport {
    pub algorithm: LowerBoundAlgorithm,
    pub horizon: usize,
    pub replicas: usize,
    /// Largest per-sample KL over the comparisons available in the last round.
    pub c: f64,
    /// `e^{−c}/2`
    pub floor: f64,
    /// The floor recomputed for the construction at `T, 2T, 4T, 8T`.
    pub floor_by_horizon: Vec<(usize, f64)>,
    /// `P_θ(â = −e2)` and `P_θ'(â = e2)`.
    pub p_err: [f64; 2],
    pub p_err_sum: f64,
    pub std_error: f64,
    pub mean_regret: [f64; 2],
    pub passes: bool,
}

/// Largest `KL(Ber(σ(θᵀb)) ‖ Ber(σ(θ'ᵀb)))` over the difference arms of the
/// final action set.
fn online_constant(horizon: usize) -> Result<f64> {
    let family = make_online_lower_bound_instance(horizon)?;
    let inst = family.instance(0);
    let last = horizon - 1;
    let [theta, theta_prime] = &family.thetas;
    let mut c = 0.0_f64;
    for b in inst.diff_arms.iter().filter(|b| b.context_id == last) {
        let p = sigmoid(theta.dot(&b.vector));
        let q = sigmoid(theta_prime.dot(&b.vector));
        c = c.max(kl_bernoulli(p, q)?);
    }
    Ok(c)
}

/// Sequential run over changing action sets: at round `t` one pair from
/// `A_t` is labeled. ODPO computes the optimal design over the pairs of `A_t`
/// and labels its heaviest arm; uniform labels a random pair.
fn run_online_replica<R: Rng + ?Sized>(
    instance: &Instance,
    algorithm: LowerBoundAlgorithm,
    rng: &mut R,
) -> Result<(usize, f64)> {
    let d = instance.dimension;
    let mut data = Dataset::new(d);
    for set in &instance.action_sets {
        let pool: Vec<FeatureVector> = instance
            .diff_arms
            .iter()
            .filter(|b| b.context_id == set.context_id)
            .map(|b| b.vector.clone())
            .collect();
        if pool.is_empty() {
            continue;
        }
        let pick = match algorithm {
            LowerBoundAlgorithm::Odpo => {
                let res = frank_wolfe_design(&pool, &design_config())?;
                res.design
                    .support
                    .iter()
                    .fold((0, f64::NEG_INFINITY), |best, &(i, w)| if w > best.1 { (i, w) } else { best })
                    .0
            }
            LowerBoundAlgorithm::Uniform => rng.gen_range(0..pool.len()),
        };
        let y = sample_outcome(&instance.theta_star, &pool[pick], rng);
        data.push(pool[pick].clone(), y);
    }
    let est = estimate(&data, 1.0 / d as f64, CONFIDENCE_DELTA)?;
    let prediction = predict(&est.theta_hat_projected, instance)?;
    let last = instance.action_sets.len() - 1;
    Ok((prediction.choices[last], simple_regret(instance, &prediction)))
}

/// Changing-action-set construction run under both `θ = e2` and `θ' = −e2`.
pub fn verify_online_lower_bound(
    horizon: usize,
    algorithm: LowerBoundAlgorithm,
    replicas: usize,
    seed: u64,
) -> Result<OnlineReport> {
    if replicas == 0 {
        return Err(OdpoError::InvalidArgument("replicas must be >= 1".into()));
    }
    let family = make_online_lower_bound_instance(horizon)?;
    let c = online_constant(horizon)?;
    let floor = bretagnolle_huber_rhs(c);
    let floor_by_horizon = [1, 2, 4, 8]
        .iter()
        .map(|m| online_constant(horizon * m).map(|c| (horizon * m, bretagnolle_huber_rhs(c))))
        .collect::<Result<Vec<_>>>()?;

    let mut p_err = [0.0; 2];
    let mut mean_regret = [0.0; 2];
    for env in 0..2 {
        let inst = family.instance(env);
        // under θ = e2 the best final arm is index 0, under θ' = −e2 index 1
        let wrong = 1 - env;
        let runs = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng::stream(seed, &[ONLINE_STREAM, env as u64, r as u64]);
                run_online_replica(&inst, algorithm, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        p_err[env] = runs.iter().filter(|(c, _)| *c == wrong).count() as f64 / replicas as f64;
        mean_regret[env] = runs.iter().map(|(_, r)| r).sum::<f64>() / replicas as f64;
    }
    let p_err_sum = p_err[0] + p_err[1];
    let std_error = (proportion_se(p_err[0], replicas).powi(2) + proportion_se(p_err[1], replicas).powi(2)).sqrt();
    Ok(OnlineReport {
        algorithm,
        horizon,
        replicas,
        c,
        floor,
        floor_by_horizon,
        p_err,
        p_err_sum,
        std_error,
        mean_regret,
        passes: p_err_sum >= floor - 3.0 * std_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateErrorRate {
    pub coordinate: usize,
    /// Sign-error rate among replicas with `θ_i > 0`.
    pub p_plus: f64,
    /// Sign-error rate among replicas with `θ_i < 0`.
    pub p_minus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub pair_sum: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypercubeReport {
    pub algorithm: LowerBoundAlgorithm,
    pub d: usize,
    pub horizon: usize,
    pub replicas: usize,
    /// `d·e^{−5}/(4√T)`
    pub floor: f64,
    pub mean_regret: f64,
    pub regret_std_error: f64,
    pub corollary_expected_bound: f64,
    pub mean_effective_t: f64,
    /// Largest KL between the laws of the labels under `θ` and `θ` with one
    /// coordinate flipped, over replicas and coordinates.
    pub max_kl: f64,
    /// `e^{−5}/2`
    pub pair_floor: f64,
    pub coordinates: Vec<CoordinateErrorRate>,
    /// `d ≥ 16` and `T ≥ d²`.
    pub formal_regime: bool,
    pub passes: bool,
}

struct HypercubeReplica {
    signs: Vec<bool>,
    predicted: Vec<bool>,
    regret: f64,
    effective_t: usize,
    max_kl: f64,
}

/// Sum over labeled arms of the per-sample KL between `θ` and `θ` with
/// coordinate `i` flipped.
fn flip_kl(theta: &FeatureVector, arms: &[(FeatureVector, usize)], i: usize) -> Result<f64> {
    let mut flipped = theta.clone();
    flipped[i] = -flipped[i];
    let mut total = 0.0;
    for (b, count) in arms {
        let p = sigmoid(theta.dot(b));
        let q = sigmoid(flipped.dot(b));
        total += *count as f64 * kl_bernoulli(p, q)?;
    }
    Ok(total)
}

fn run_hypercube_replica<R: Rng + ?Sized>(
    family: &HypercubeFamily,
    pool: &[FeatureVector],
    odpo_allocation: &[(usize, usize)],
    algorithm: LowerBoundAlgorithm,
    rng: &mut R,
) -> Result<HypercubeReplica> {
    let d = family.dimension;
    let signs = family.sample_signs(rng);
    let theta = family.theta(&signs);

    let labeled: Vec<(FeatureVector, usize)> = match algorithm {
        LowerBoundAlgorithm::Odpo => odpo_allocation.iter().map(|&(i, c)| (pool[i].clone(), c)).collect(),
        LowerBoundAlgorithm::Uniform => (0..family.horizon)
            .map(|_| {
                let a = family.sample_signs(rng);
                let b = family.sample_signs(rng);
                (family.arm(&a) - family.arm(&b), 1)
            })
            .collect(),
    };
    let mut data = Dataset::new(d);
    for (b, count) in &labeled {
        for _ in 0..*count {
            let y = sample_outcome(&theta, b, rng);
            data.push(b.clone(), y);
        }
    }
    let est = estimate(&data, 1.0 / d as f64, CONFIDENCE_DELTA)?;
    let predicted = HypercubeFamily::best_arm_signs(&est.theta_hat_projected);
    let regret = family.regret(&theta, &predicted);
    let mut max_kl = 0.0_f64;
    for i in 0..d {
        max_kl = max_kl.max(flip_kl(&theta, &labeled, i)?);
    }
    Ok(HypercubeReplica {
        signs,
        predicted,
        regret,
        effective_t: data.n_samples(),
        max_kl,
    })
}

/// Draws `θ` uniformly from `{±√(d/T)}^d` per replica and measures regret
/// and per-coordinate sign-error rates.
pub fn verify_hypercube_lower_bound(
    d: usize,
    horizon: usize,
    algorithm: LowerBoundAlgorithm,
    replicas: usize,
    seed: u64,
) -> Result<HypercubeReport> {
    if replicas == 0 {
        return Err(OdpoError::InvalidArgument("replicas must be >= 1".into()));
    }
    if d > 32 {
        return Err(OdpoError::InvalidArgument(format!("hypercube check supports d <= 32, got {d}")));
    }
    let family = make_hypercube_instance(d, horizon)?;
    let pool = family.design_pool();
    let odpo_allocation = match algorithm {
        LowerBoundAlgorithm::Odpo => {
            let design = frank_wolfe_design(&pool, &design_config())?;
            design.check()?;
            allocate(&design.design, horizon).entries
        }
        LowerBoundAlgorithm::Uniform => Vec::new(),
    };

    let runs = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(seed, &[HYPERCUBE_STREAM, r as u64]);
            run_hypercube_replica(&family, &pool, &odpo_allocation, algorithm, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let regrets: Vec<f64> = runs.iter().map(|r| r.regret).collect();
    let (mean_regret, regret_std_error) = mean_and_se(&regrets);
    let mean_effective_t = runs.iter().map(|r| r.effective_t as f64).sum::<f64>() / replicas as f64;
    let max_kl = runs.iter().map(|r| r.max_kl).fold(0.0, f64::max);
    let pair_floor = bretagnolle_huber_rhs(5.0);

    let coordinates: Vec<CoordinateErrorRate> = (0..d)
        .map(|i| {
            let (mut n_plus, mut n_minus, mut e_plus, mut e_minus) = (0usize, 0usize, 0usize, 0usize);
            for r in &runs {
                let wrong = r.predicted[i] != r.signs[i];
                if r.signs[i] {
                    n_plus += 1;
                    e_plus += usize::from(wrong);
                } else {
                    n_minus += 1;
                    e_minus += usize::from(wrong);
                }
            }
            let rate = |e: usize, n: usize| if n == 0 { 0.0 } else { e as f64 / n as f64 };
            let (p_plus, p_minus) = (rate(e_plus, n_plus), rate(e_minus, n_minus));
            let se = |p: f64, n: usize| if n == 0 { 0.0 } else { proportion_se(p, n) };
            CoordinateErrorRate {
                coordinate: i,
                p_plus,
                p_minus,
                n_plus,
                n_minus,
                pair_sum: p_plus + p_minus,
                std_error: (se(p_plus, n_plus).powi(2) + se(p_minus, n_minus).powi(2)).sqrt(),
            }
        })
        .collect();

    let floor = hypercube_floor(d, horizon);
    let corollary_expected_bound = corollary_bound(d, horizon)?.expected()?;
    let pairs_ok = coordinates
        .iter()
        .all(|c| c.pair_sum >= pair_floor - 3.0 * c.std_error);
    Ok(HypercubeReport {
        algorithm,
        d,
        horizon,
        replicas,
        floor,
        mean_regret,
        regret_std_error,
        corollary_expected_bound,
        mean_effective_t,
        max_kl,
        pair_floor,
        coordinates,
        formal_regime: d >= 16 && horizon >= d * d,
        passes: mean_regret >= floor && mean_regret <= corollary_expected_bound && pairs_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn online_constant_is_kl_of_sigma_two() {
        let c = online_constant(5).unwrap();
        let p = sigmoid(2.0);
        let direct = p * (p / (1.0 - p)).ln() + (1.0 - p) * ((1.0 - p) / p).ln();
        assert!((c - direct).abs() < 1e-12);
        assert!((online_constant(40).unwrap() - c).abs() == 0.0);
    }

    #[test]
    fn flip_kl_vanishes_on_orthogonal_arms() {
        let theta = FeatureVector::from_vec(vec![0.5, -0.5]);
        let b = FeatureVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(flip_kl(&theta, &[(b, 3)], 0).unwrap(), 0.0);
    }
}
