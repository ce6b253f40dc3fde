//! Regularised Bradley–Terry maximum likelihood, the projected estimator and
//! its high-probability confidence radius.
//!
//! Samples are stored as per-arm tallies `(b, trials, wins)`; every quantity
//! below is a sum over samples and only depends on the tallies.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::design::DesignMatrix;
use crate::error::{OdpoError, Result};
use crate::feedback::{log_sigmoid, sigmoid, sigmoid_prime, PreferenceSample};
use crate::instance::{FeatureVector, Instance};

/// Leading constant of the confidence radius.
pub const RADIUS_CONSTANT: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Tally {
    pub arm: FeatureVector,
    pub trials: f64,
    pub wins: f64,
}

/// Labeled duels grouped by arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dimension: usize,
    pub tallies: Vec<Tally>,
}

impl Dataset {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            tallies: Vec::new(),
        }
    }

    /// Groups `samples` by difference-arm index (ascending).
    pub fn from_samples(instance: &Instance, samples: &[PreferenceSample]) -> Self {
        let mut groups: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
        for s in samples {
            let e = groups.entry(s.arm).or_insert((0.0, 0.0));
            e.0 += 1.0;
            e.1 += f64::from(s.outcome);
        }
        Self {
            dimension: instance.dimension,
            tallies: groups
                .into_iter()
                .map(|(arm, (trials, wins))| Tally {
                    arm: instance.diff_arms[arm].vector.clone(),
                    trials,
                    wins,
                })
                .collect(),
        }
    }

    /// Appends one sample as its own tally.
    pub fn push(&mut self, arm: FeatureVector, outcome: u8) {
        self.tallies.push(Tally {
            arm,
            trials: 1.0,
            wins: f64::from(outcome),
        });
    }

    pub fn n_samples(&self) -> usize {
        self.tallies.iter().map(|t| t.trials).sum::<f64>() as usize
    }

    /// `Σ_s Y_s b_s`
    pub fn outcome_sum(&self) -> FeatureVector {
        let mut out = DVector::zeros(self.dimension);
        for t in &self.tallies {
            out.axpy(t.wins, &t.arm, 1.0);
        }
        out
    }

    /// `V = λI + Σ_s b_s b_sᵀ`
    pub fn design_matrix(&self, lambda: f64) -> DesignMatrix {
        let mut matrix = DMatrix::<f64>::identity(self.dimension, self.dimension) * lambda;
        for t in &self.tallies {
            matrix.ger(t.trials, &t.arm, &t.arm, 1.0);
        }
        DesignMatrix { matrix, lambda }
    }
}

/// `V = λI + Σ count·b bᵀ` over an allocation `(arm index, count)`.
pub fn sampling_design_matrix(
    arms: &[FeatureVector],
    allocation: &[(usize, usize)],
    dimension: usize,
    lambda: f64,
) -> DesignMatrix {
    let mut matrix = DMatrix::<f64>::identity(dimension, dimension) * lambda;
    for &(i, count) in allocation {
        matrix.ger(count as f64, &arms[i], &arms[i], 1.0);
    }
    DesignMatrix { matrix, lambda }
}

/// `Σ_s [Y_s log σ(⟨θ,b_s⟩) + (1−Y_s) log σ(−⟨θ,b_s⟩)] − λ‖θ‖²/2`
pub fn log_likelihood(data: &Dataset, theta: &FeatureVector, lambda: f64) -> f64 {
    let mut total = -0.5 * lambda * theta.norm_squared();
    for t in &data.tallies {
        let x = theta.dot(&t.arm);
        total += t.wins * log_sigmoid(x) + (t.trials - t.wins) * log_sigmoid(-x);
    }
    total
}

/// `Σ_s (Y_s − σ(⟨θ,b_s⟩)) b_s − λθ`
pub fn likelihood_gradient(data: &Dataset, theta: &FeatureVector, lambda: f64) -> FeatureVector {
    let mut g = theta * -lambda;
    for t in &data.tallies {
        let x = theta.dot(&t.arm);
        g.axpy(t.wins - t.trials * sigmoid(x), &t.arm, 1.0);
    }
    g
}

/// Negated Hessian `λI + Σ σ'(⟨θ,b_s⟩) b_s b_sᵀ`.
pub fn fisher_matrix(data: &Dataset, theta: &FeatureVector, lambda: f64) -> DMatrix<f64> {
    let d = data.dimension;
    let mut m = DMatrix::<f64>::identity(d, d) * lambda;
    for t in &data.tallies {
        let x = theta.dot(&t.arm);
        m.ger(t.trials * sigmoid_prime(x), &t.arm, &t.arm, 1.0);
    }
    m
}

/// `H(θ) = λθ + Σ σ(⟨θ,b_s⟩) b_s`
pub fn h_map(data: &Dataset, theta: &FeatureVector, lambda: f64) -> FeatureVector {
    let mut h = theta * lambda;
    for t in &data.tallies {
        h.axpy(t.trials * sigmoid(theta.dot(&t.arm)), &t.arm, 1.0);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleOutcome {
    pub theta: FeatureVector,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Damped Newton ascent on the log-likelihood from `θ = 0`.
pub fn mle(data: &Dataset, lambda: f64, config: &MleConfig) -> Result<MleOutcome> {
    if !(lambda > 0.0) {
        return Err(OdpoError::InvalidArgument(format!("mle needs lambda > 0, got {lambda}")));
    }
    let mut theta = DVector::zeros(data.dimension);
    let mut value = log_likelihood(data, &theta, lambda);
    let mut grad = likelihood_gradient(data, &theta, lambda);
    let mut iterations = 0;

    while grad.norm() > config.tol && iterations < config.max_iters {
        let chol = Cholesky::new(fisher_matrix(data, &theta, lambda)).ok_or(OdpoError::SingularMatrix)?;
        let step = chol.solve(&grad);
        let slope = grad.dot(&step);
        iterations += 1;
        let full = &theta + &step;
        let full_value = log_likelihood(data, &full, lambda);
        let full_grad = likelihood_gradient(data, &full, lambda);
        // Near the optimum the objective no longer resolves the increase, so a
        // full step that shrinks the gradient is kept.
        let (next, next_value, next_grad) = if full_value >= value + 1e-4 * slope || full_grad.norm() < grad.norm() {
            (full, full_value, full_grad)
        } else {
            let mut s = 0.5;
            loop {
                let cand = &theta + &step * s;
                let v = log_likelihood(data, &cand, lambda);
                if v > value && v >= value + 1e-4 * s * slope {
                    let g = likelihood_gradient(data, &cand, lambda);
                    break (cand, v, g);
                }
                if s < 1e-12 {
                    break (theta.clone(), value, grad.clone());
                }
                s *= 0.5;
            }
        };
        if next_value == value && next_grad.norm() >= grad.norm() {
            break;
        }
        theta = next;
        value = next_value;
        grad = next_grad;
    }
    let grad_norm = grad.norm();
    Ok(MleOutcome {
        converged: grad_norm <= config.tol,
        theta,
        iterations,
        grad_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// Stop when the relative decrease of the objective falls below this.
    pub tol: f64,
    /// Stop when the gradient-mapping norm falls below this.
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            grad_tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionOutcome {
    pub theta: FeatureVector,
    /// `‖H(θ) − H(θ̂)‖²_{V^{-1}}` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn project_unit_ball(v: FeatureVector) -> FeatureVector {
    let n = v.norm();
    if n > 1.0 {
        v / n
    } else {
        v
    }
}

/// Minimises `‖H(θ) − H(θ̂)‖²_{V^{-1}}` over the unit ball.
///
/// Returns `θ̂` itself when it is feasible. Otherwise runs projected gradient
/// descent with backtracking from `θ̂/‖θ̂‖`. The objective need not be convex,
/// so the result is a stationary point, not necessarily a global minimiser.
pub fn project_mle(
    theta_hat: &FeatureVector,
    data: &Dataset,
    v: &DesignMatrix,
    lambda: f64,
    config: &ProjectionConfig,
) -> Result<ProjectionOutcome> {
    if theta_hat.norm() <= 1.0 {
        return Ok(ProjectionOutcome {
            theta: theta_hat.clone(),
            objective: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    let v_chol = v.cholesky()?;
    let target = h_map(data, theta_hat, lambda);
    let eval = |theta: &FeatureVector| {
        let r = h_map(data, theta, lambda) - &target;
        let w = v_chol.solve(&r);
        (r.dot(&w), w)
    };
    let gradient = |theta: &FeatureVector, w: &FeatureVector| fisher_matrix(data, theta, lambda) * w * 2.0;

    let mut theta = theta_hat / theta_hat.norm();
    let (mut f, mut w) = eval(&theta);
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iters {
        let grad = gradient(&theta, &w);
        let mut accepted = None;
        let mut s = step;
        while s > 1e-300 {
            let cand = project_unit_ball(&theta - &grad * s);
            let diff = &cand - &theta;
            let (fc, wc) = eval(&cand);
            if fc <= f - diff.norm_squared() / (2.0 * s) * 1e-4 || diff.norm() == 0.0 {
                accepted = Some((cand, fc, wc, diff.norm() / s));
                break;
            }
            s *= 0.5;
        }
        iterations += 1;
        let Some((cand, fc, wc, mapping_norm)) = accepted else {
            converged = true;
            break;
        };
        let decrease = f - fc;
        theta = cand;
        w = wc;
        let prev = f;
        f = fc;
        step = s * 2.0;
        if mapping_norm < config.grad_tol || decrease <= config.tol * prev.abs() {
            converged = true;
            break;
        }
    }
    Ok(ProjectionOutcome {
        theta,
        objective: f,
        iterations,
        converged,
    })
}

/// `20[√(2 log(1/δ) + d log(λ^{1−1/d} + 4t/(d λ^{1/d}))) + √λ]`
pub fn confidence_radius(t: usize, d: usize, lambda: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(OdpoError::DomainError(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(lambda > 0.0) || d == 0 {
        return Err(OdpoError::DomainError(format!(
            "need lambda > 0 and d >= 1, got lambda = {lambda}, d = {d}"
        )));
    }
    let df = d as f64;
    let log_arg = lambda.powf(1.0 - 1.0 / df) + 4.0 * t as f64 / (df * lambda.powf(1.0 / df));
    if !(log_arg > 0.0) {
        return Err(OdpoError::DomainError(format!("log argument {log_arg} is not positive")));
    }
    let inner = 2.0 * (1.0 / delta).ln() + df * log_arg.ln();
    if inner < 0.0 {
        return Err(OdpoError::DomainError(format!("square-root argument {inner} is negative")));
    }
    Ok(RADIUS_CONSTANT * (inner.sqrt() + lambda.sqrt()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorDiagnostics {
    pub newton_iters: usize,
    pub grad_norm: f64,
    pub mle_converged: bool,
    pub projection_objective: f64,
    pub projection_iters: usize,
    pub projection_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub theta_hat: FeatureVector,
    pub theta_hat_projected: FeatureVector,
    pub v: DesignMatrix,
    pub radius: f64,
    pub diagnostics: EstimatorDiagnostics,
}

/// MLE, projection, realised design matrix and confidence radius.
pub fn estimate(data: &Dataset, lambda: f64, delta: f64) -> Result<EstimatorResult> {
    let fit = mle(data, lambda, &MleConfig::default())?;
    let v = data.design_matrix(lambda);
    let proj = project_mle(&fit.theta, data, &v, lambda, &ProjectionConfig::default())?;
    let radius = confidence_radius(data.n_samples(), data.dimension, lambda, delta)?;
    Ok(EstimatorResult {
        theta_hat: fit.theta,
        theta_hat_projected: proj.theta,
        v,
        radius,
        diagnostics: EstimatorDiagnostics {
            newton_iters: fit.iterations,
            grad_norm: fit.grad_norm,
            mle_converged: fit.converged,
            projection_objective: proj.objective,
            projection_iters: proj.iterations,
            projection_converged: proj.converged,
        },
    })
}

fn join(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// `key = value` block followed by the rows of `V`.
pub fn write_estimator_result(result: &EstimatorResult) -> String {
    let d = &result.diagnostics;
    let mut out = String::new();
    let _ = writeln!(out, "theta_hat = {}", join(result.theta_hat.iter().copied()));
    let _ = writeln!(out, "theta_hat_projected = {}", join(result.theta_hat_projected.iter().copied()));
    let _ = writeln!(out, "radius = {}", result.radius);
    let _ = writeln!(out, "lambda = {}", result.v.lambda);
    let _ = writeln!(out, "newton_iters = {}", d.newton_iters);
    let _ = writeln!(out, "grad_norm = {}", d.grad_norm);
    let _ = writeln!(out, "projection_objective = {}", d.projection_objective);
    let _ = writeln!(out, "projection_iters = {}", d.projection_iters);
    let _ = writeln!(out, "V =");
    for row in result.v.matrix.row_iter() {
        let _ = writeln!(out, "{}", join(row.iter().copied()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1(d: usize) -> FeatureVector {
        let mut v = DVector::zeros(d);
        v[0] = 1.0;
        v
    }

    #[test]
    fn empty_data() {
        let data = Dataset::new(3);
        let theta = DVector::zeros(3);
        assert_eq!(log_likelihood(&data, &theta, 0.7), 0.0);
        let fit = mle(&data, 0.5, &MleConfig::default()).unwrap();
        assert_eq!(fit.theta, theta);
        assert!(fit.converged);
    }

    #[test]
    fn single_sample_at_origin() {
        let mut data = Dataset::new(2);
        data.push(e1(2), 1);
        let v = log_likelihood(&data, &DVector::zeros(2), 0.0);
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn opposite_labels_cancel() {
        let mut data = Dataset::new(2);
        data.push(e1(2), 1);
        data.push(e1(2), 0);
        assert_eq!(likelihood_gradient(&data, &DVector::zeros(2), 0.3), DVector::zeros(2));
    }

    #[test]
    fn h_map_at_origin_and_lambda_linearity() {
        let mut data = Dataset::new(2);
        let b1 = DVector::from_vec(vec![0.4, -0.2]);
        let b2 = DVector::from_vec(vec![-0.1, 0.9]);
        data.push(b1.clone(), 1);
        data.push(b2.clone(), 0);
        let h0 = h_map(&data, &DVector::zeros(2), 3.0);
        assert!((h0 - (b1 + b2) * 0.5).amax() < 1e-15);
        let theta = DVector::from_vec(vec![0.3, 0.8]);
        let diff = h_map(&data, &theta, 2.5) - h_map(&data, &theta, 1.0);
        assert!((diff - &theta * 1.5).amax() < 1e-14);
    }

    #[test]
    fn sampling_matrix_examples() {
        let arms = vec![e1(3)];
        let empty = sampling_design_matrix(&arms, &[], 3, 0.5);
        assert_eq!(empty.matrix, DMatrix::identity(3, 3) * 0.5);
        let m = sampling_design_matrix(&arms, &[(0, 3)], 3, 1.0);
        assert_eq!(m.matrix, DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 1.0])));
    }

    #[test]
    fn radius_examples() {
        let r = confidence_radius(0, 1, 1.0, (-1.0f64).exp()).unwrap();
        assert!((r - 20.0 * (2f64.sqrt() + 1.0)).abs() < 1e-12);
        let a = confidence_radius(10, 4, 0.25, 0.1).unwrap();
        let b = confidence_radius(100, 4, 0.25, 0.1).unwrap();
        let c = confidence_radius(100, 4, 0.25, 0.01).unwrap();
        assert!(a < b && b < c);
        assert!(confidence_radius(5, 2, 0.5, 1.0).is_err());
        assert!(matches!(confidence_radius(0, 4, 1e-6, 0.9), Err(OdpoError::DomainError(_))));
    }

    #[test]
    fn feasible_mle_is_returned_unchanged() {
        let mut data = Dataset::new(2);
        data.push(e1(2), 1);
        let theta = DVector::from_vec(vec![0.7, 0.0]);
        let v = data.design_matrix(0.5);
        let out = project_mle(&theta, &data, &v, 0.5, &ProjectionConfig::default()).unwrap();
        assert_eq!(out.theta, theta);
        assert_eq!(out.objective, 0.0);
    }
}
