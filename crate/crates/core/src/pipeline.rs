//! End-to-end offline selection: design, rounding, labeling, estimation and
//! per-context prediction, plus the uniform and greedy baselines.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use serde::Serialize;

use crate::design::{
    frank_wolfe_design, Design, FrankWolfeConfig, FrankWolfeResult, StopRule, DEFAULT_DESIGN_LAMBDA,
};
use crate::design::inverse_norm_sq;
use crate::error::{OdpoError, Result};
use crate::estimator::{estimate, Dataset, EstimatorResult};
use crate::evaluation::simple_regret;
use crate::feedback::collect_feedback;
use crate::instance::{FeatureVector, Instance};
use crate::rng;

/// Rounded per-arm sample counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    /// `(arm index, count)` with `count ≥ 1`, sorted by arm index.
    pub entries: Vec<(usize, usize)>,
    pub requested_t: usize,
    pub effective_t: usize,
}

impl Allocation {
    fn from_counts(counts: BTreeMap<usize, usize>, requested_t: usize) -> Self {
        let entries: Vec<(usize, usize)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        let effective_t = entries.iter().map(|&(_, c)| c).sum();
        Self {
            entries,
            requested_t,
            effective_t,
        }
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }
}

/// `⌈T·π_b⌉` samples for every supported arm.
pub fn allocate(design: &Design, t: usize) -> Allocation {
    let counts = design
        .support
        .iter()
        .filter(|&&(_, w)| w > 0.0)
        .map(|&(i, w)| (i, (t as f64 * w).ceil() as usize))
        .collect();
    Allocation::from_counts(counts, t)
}

/// Per-context argmax of `⟨θ, a⟩`, lowest index on ties.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub choices: Vec<usize>,
    pub scores: Vec<f64>,
}

pub fn predict(theta: &FeatureVector, instance: &Instance) -> Result<Prediction> {
    if theta.len() != instance.dimension {
        return Err(OdpoError::DimensionMismatch {
            expected: instance.dimension,
            found: theta.len(),
        });
    }
    let (choices, scores) = instance
        .action_sets
        .iter()
        .map(|set| {
            set.arms
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, a)| {
                    let s = theta.dot(a);
                    if s > best.1 {
                        (i, s)
                    } else {
                        best
                    }
                })
        })
        .unzip();
    Ok(Prediction { choices, scores })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Odpo,
    Uniform,
    Greedy,
}

impl Algorithm {
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Odpo => "odpo",
            Algorithm::Uniform => "uniform",
            Algorithm::Greedy => "greedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = OdpoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "odpo" => Ok(Algorithm::Odpo),
            "uniform" => Ok(Algorithm::Uniform),
            "greedy" => Ok(Algorithm::Greedy),
            other => Err(OdpoError::InvalidArgument(format!(
                "unknown algorithm `{other}` (expected odpo, uniform or greedy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdpoConfig {
    pub lambda_design: f64,
    /// Ridge for estimation; `None` means `1/d`.
    pub lambda_est: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub max_design_iters: usize,
    pub stop_rule: StopRule,
}

impl Default for OdpoConfig {
    fn default() -> Self {
        Self {
            lambda_design: DEFAULT_DESIGN_LAMBDA,
            lambda_est: None,
            epsilon: 0.5,
            delta: 0.05,
            seed: 0,
            max_design_iters: 5000,
            stop_rule: StopRule::OnePlusEpsilon,
        }
    }
}

impl OdpoConfig {
    pub fn lambda_est_for(&self, d: usize) -> f64 {
        self.lambda_est.unwrap_or(1.0 / d as f64)
    }

    pub fn design_config(&self) -> FrankWolfeConfig {
        FrankWolfeConfig {
            lambda: self.lambda_design,
            epsilon: self.epsilon,
            max_iters: self.max_design_iters,
            stop_rule: self.stop_rule,
            ..FrankWolfeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OdpoError::InvalidArgument(m));
        if !(self.lambda_design > 0.0) {
            return bad(format!("lambda_design must be > 0, got {}", self.lambda_design));
        }
        if let Some(l) = self.lambda_est {
            if !(l > 0.0) {
                return bad(format!("lambda_est must be > 0, got {l}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        Ok(())
    }
}

/// Stream ids under a run seed.
const ALLOCATION_STREAM: u64 = 1;
const FEEDBACK_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub design: Option<FrankWolfeResult>,
    pub allocation: Allocation,
    pub estimate: EstimatorResult,
    pub prediction: Prediction,
    pub warnings: Vec<String>,
}

/// Recommended minimum sample count `d(d+1)/2`.
pub fn min_recommended_t(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Labels an allocation, fits the projected MLE and predicts every context.
pub fn estimate_and_predict(
    instance: &Instance,
    allocation: &Allocation,
    config: &OdpoConfig,
) -> Result<(EstimatorResult, Prediction)> {
    let mut feedback_rng = rng::stream(config.seed, &[FEEDBACK_STREAM]);
    let samples = collect_feedback(instance, &allocation.entries, &mut feedback_rng);
    let data = Dataset::from_samples(instance, &samples);
    let est = estimate(&data, config.lambda_est_for(instance.dimension), config.delta)?;
    let prediction = predict(&est.theta_hat_projected, instance)?;
    Ok((est, prediction))
}

fn small_t_warning(instance: &Instance, t: usize) -> Vec<String> {
    let min_t = min_recommended_t(instance.dimension);
    if t < min_t {
        vec![format!(
            "T = {t} is below d(d+1)/2 = {min_t}; the regret guarantee does not apply"
        )]
    } else {
        Vec::new()
    }
}

/// Optimal design → `⌈Tπ̂⌉` rounding → labels → projected MLE → prediction.
pub fn run_odpo(instance: &Instance, t: usize, config: &OdpoConfig) -> Result<RunOutcome> {
    config.validate()?;
    if t == 0 {
        return Err(OdpoError::InvalidArgument("T must be >= 1".into()));
    }
    if instance.diff_arms.is_empty() || !instance.spans {
        return Err(OdpoError::SpanDeficient(instance.dimension));
    }
    let design = frank_wolfe_design(&instance.arm_vectors(), &config.design_config())?;
    design.check()?;
    let allocation = allocate(&design.design, t);
    let (estimate, prediction) = estimate_and_predict(instance, &allocation, config)?;
    Ok(RunOutcome {
        algorithm: Algorithm::Odpo,
        design: Some(design),
        allocation,
        estimate,
        prediction,
        warnings: small_t_warning(instance, t),
    })
}

/// `T` i.i.d. uniform draws from the difference arms.
pub fn baseline_uniform<R: Rng + ?Sized>(instance: &Instance, t: usize, rng: &mut R) -> Allocation {
    let l = instance.diff_arms.len();
    let mut counts = BTreeMap::new();
    if l > 0 {
        for _ in 0..t {
            *counts.entry(rng.gen_range(0..l)).or_insert(0) += 1;
        }
    }
    Allocation::from_counts(counts, t)
}

/// Offline greedy exploration: `T` times pick `argmax_b ‖b‖_{V^{-1}}` and add
/// `b bᵀ` to `V`, starting from `V = λI`.
pub fn baseline_greedy_norm(instance: &Instance, t: usize, lambda: f64) -> Result<Allocation> {
    if !(lambda > 0.0) {
        return Err(OdpoError::InvalidArgument(format!("greedy needs lambda > 0, got {lambda}")));
    }
    let d = instance.dimension;
    let arms = instance.arm_vectors();
    let mut v = DMatrix::<f64>::identity(d, d) * lambda;
    let mut counts = BTreeMap::new();
    if !arms.is_empty() {
        for _ in 0..t {
            let chol = Cholesky::new(v.clone()).ok_or(OdpoError::SingularMatrix)?;
            let mut best = (0, f64::NEG_INFINITY);
            for (i, b) in arms.iter().enumerate() {
                let n = inverse_norm_sq(&chol, b);
                if n > best.1 {
                    best = (i, n);
                }
            }
            v.ger(1.0, &arms[best.0], &arms[best.0], 1.0);
            *counts.entry(best.0).or_insert(0) += 1;
        }
    }
    Ok(Allocation::from_counts(counts, t))
}

/// Runs `algorithm` on `instance` with `T` requested samples.
pub fn run_algorithm(instance: &Instance, t: usize, algorithm: Algorithm, config: &OdpoConfig) -> Result<RunOutcome> {
    match algorithm {
        Algorithm::Odpo => run_odpo(instance, t, config),
        Algorithm::Uniform | Algorithm::Greedy => {
            config.validate()?;
            if instance.diff_arms.is_empty() {
                return Err(OdpoError::SpanDeficient(instance.dimension));
            }
            let allocation = if algorithm == Algorithm::Uniform {
                baseline_uniform(instance, t, &mut rng::stream(config.seed, &[ALLOCATION_STREAM]))
            } else {
                baseline_greedy_norm(instance, t, config.lambda_est_for(instance.dimension))?
            };
            let (estimate, prediction) = estimate_and_predict(instance, &allocation, config)?;
            Ok(RunOutcome {
                algorithm,
                design: None,
                allocation,
                estimate,
                prediction,
                warnings: small_t_warning(instance, t),
            })
        }
    }
}

/// Plain-text JSON record of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub d: usize,
    pub n_contexts: usize,
    pub requested_t: usize,
    pub effective_t: usize,
    pub lambda_design: f64,
    pub lambda_est: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub design_iterations: Option<usize>,
    pub design_g: Option<f64>,
    pub allocation_support: usize,
    pub newton_iters: usize,
    pub grad_norm: f64,
    pub projection_objective: f64,
    pub radius: f64,
    pub theta_hat: Vec<f64>,
    pub theta_hat_projected: Vec<f64>,
    pub predictions: Vec<usize>,
    pub regret: f64,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn record(&self, instance: &Instance, config: &OdpoConfig) -> RunRecord {
        RunRecord {
            algorithm: self.algorithm,
            seed: config.seed,
            d: instance.dimension,
            n_contexts: instance.n_contexts(),
            requested_t: self.allocation.requested_t,
            effective_t: self.allocation.effective_t,
            lambda_design: config.lambda_design,
            lambda_est: config.lambda_est_for(instance.dimension),
            epsilon: config.epsilon,
            delta: config.delta,
            design_iterations: self.design.as_ref().map(|d| d.iterations),
            design_g: self.design.as_ref().map(|d| d.final_g),
            allocation_support: self.allocation.support_size(),
            newton_iters: self.estimate.diagnostics.newton_iters,
            grad_norm: self.estimate.diagnostics.grad_norm,
            projection_objective: self.estimate.diagnostics.projection_objective,
            radius: self.estimate.radius,
            theta_hat: self.estimate.theta_hat.iter().copied().collect(),
            theta_hat_projected: self.estimate.theta_hat_projected.iter().copied().collect(),
            predictions: self.prediction.choices.clone(),
            regret: simple_regret(instance, &self.prediction),
            warnings: self.warnings.clone(),
        }
    }
}

/// Allocation text: design-style `arm_index weight count` lines.
pub fn write_allocation(allocation: &Allocation) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# requested_t={} effective_t={}",
        allocation.requested_t, allocation.effective_t
    );
    for &(i, c) in &allocation.entries {
        let _ = writeln!(out, "{} {} {}", i, c as f64 / allocation.effective_t as f64, c);
    }
    out
}
