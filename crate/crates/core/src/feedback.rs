//! Simulated labeler: Bradley–Terry preferences under a hidden parameter.

use std::fmt::Write as _;

use rand::Rng;

use crate::instance::{FeatureVector, Instance};

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// `log σ(x)`, stable on both tails.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// One labeled duel on difference arm `arm` (an index into the instance's
/// difference arms). `outcome` is 1 when the first completion wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreferenceSample {
    pub arm: usize,
    pub outcome: u8,
    pub draw_index: usize,
}

/// Draws `Y ~ Bernoulli(σ(⟨θ*, b⟩))` using exactly one uniform from `rng`.
pub fn sample_outcome<R: Rng + ?Sized>(theta_star: &FeatureVector, b: &FeatureVector, rng: &mut R) -> u8 {
    let p = sigmoid(theta_star.dot(b));
    let u: f64 = rng.gen();
    u8::from(u < p)
}

pub fn sample_preference<R: Rng + ?Sized>(
    instance: &Instance,
    arm: usize,
    draw_index: usize,
    rng: &mut R,
) -> PreferenceSample {
    let outcome = sample_outcome(&instance.theta_star, &instance.diff_arms[arm].vector, rng);
    PreferenceSample {
        arm,
        outcome,
        draw_index,
    }
}

/// Labels every `(arm, count)` entry `count` times, in allocation order.
pub fn collect_feedback<R: Rng + ?Sized>(
    instance: &Instance,
    allocation: &[(usize, usize)],
    rng: &mut R,
) -> Vec<PreferenceSample> {
    let total = allocation.iter().map(|&(_, c)| c).sum();
    let mut out = Vec::with_capacity(total);
    for &(arm, count) in allocation {
        for _ in 0..count {
            let t = out.len();
            out.push(sample_preference(instance, arm, t, rng));
        }
    }
    out
}

/// CSV sample log: `draw_index,context_id,i,j,y`.
pub fn write_sample_log(instance: &Instance, samples: &[PreferenceSample]) -> String {
    let mut out = String::from("draw_index,context_id,i,j,y\n");
    for s in samples {
        let b = &instance.diff_arms[s.arm];
        let _ = writeln!(out, "{},{},{},{},{}", s.draw_index, b.context_id, b.i, b.j, s.outcome);
    }
    out
}
