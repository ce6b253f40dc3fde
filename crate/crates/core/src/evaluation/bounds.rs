use crate::error::{OdpoError, Result};
use crate::estimator::confidence_radius;

/// High-probability regret bound for a `(1+ε)`-approximate design:
/// `(1+ε)·√(d/T)` times the confidence radius at `t = T`.
pub fn theorem1_bound(d: usize, t: usize, epsilon: f64, lambda: f64, delta: f64) -> Result<f64> {
    if t == 0 {
        return Err(OdpoError::DomainError("T must be >= 1".into()));
    }
    let scale = (1.0 + epsilon) * (d as f64 / t as f64).sqrt();
    Ok(scale * confidence_radius(t, d, lambda, delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryBound {
    d: usize,
    t: usize,
}

impl CorollaryBound {
    /// `d^{1−1/d}`
    fn d_power(&self) -> f64 {
        let d = self.d as f64;
        d.powf(1.0 - 1.0 / d)
    }

    /// `30√(d/T)[√(2 log(1/δ) + d log((1+4T)/d^{1−1/d})) + 1/√d]`
    pub fn high_prob(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(OdpoError::DomainError(format!("delta must lie in (0, 1), got {delta}")));
        }
        let d = self.d as f64;
        let t = self.t as f64;
        let log_arg = (1.0 + 4.0 * t) / self.d_power();
        let inner = 2.0 * (1.0 / delta).ln() + d * log_arg.ln();
        if !(log_arg > 0.0) || inner < 0.0 {
            return Err(OdpoError::DomainError(format!("invalid log argument {log_arg}")));
        }
        Ok(30.0 * (d / t).sqrt() * (inner.sqrt() + 1.0 / d.sqrt()))
    }

    /// `30((d+2)/√T)√(log((4T+1)/d^{1−1/d})) + 31/√T`
    pub fn expected(&self) -> Result<f64> {
        let d = self.d as f64;
        let t = self.t as f64;
        let log_arg = (4.0 * t + 1.0) / self.d_power();
        let log = log_arg.ln();
        if log < 0.0 {
            return Err(OdpoError::DomainError(format!("log argument {log_arg} is below 1")));
        }
        Ok(30.0 * (d + 2.0) / t.sqrt() * log.sqrt() + 31.0 / t.sqrt())
    }

    /// `δ = d^{1−1/d}/(4T+1)` used for the expected-regret form.
    pub fn expected_delta(&self) -> f64 {
        self.d_power() / (4.0 * self.t as f64 + 1.0)
    }
}

/// Bounds for a `3/2`-approximate design with `λ = 1/d`.
pub fn corollary_bound(d: usize, t: usize) -> Result<CorollaryBound> {
    if d == 0 || t == 0 {
        return Err(OdpoError::DomainError("need d >= 1 and T >= 1".into()));
    }
    Ok(CorollaryBound { d, t })
}

/// Minimax floor `d·e^{−5}/(4√T)` of the hypercube construction.
pub fn hypercube_floor(d: usize, t: usize) -> f64 {
    d as f64 * (-5.0f64).exp() / (4.0 * (t as f64).sqrt())
}
