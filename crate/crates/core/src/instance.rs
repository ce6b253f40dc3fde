//! Problem instances: per-context action sets, the hidden reward parameter and
//! the derived set of difference arms, plus the two adversarial families used
//! by the lower-bound checks.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{OdpoError, Result};
use crate::rng;

/// Embedding of a (context, completion) pair in R^d.
pub type FeatureVector = DVector<f64>;

/// Slack on the unit-ball constraint for vectors read from text or produced by
/// floating-point normalisation.
pub const NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    pub context_id: usize,
    pub arms: Vec<FeatureVector>,
}

impl ActionSet {
    pub fn new(context_id: usize, arms: Vec<FeatureVector>) -> Self {
        Self { context_id, arms }
    }

    pub fn len(&self) -> usize {
        self.arms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arms.is_empty()
    }
}

/// `vector = a_n^i - a_n^j` for two completions of context `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceArm {
    pub vector: FeatureVector,
    pub context_id: usize,
    pub i: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub action_sets: Vec<ActionSet>,
    pub theta_star: FeatureVector,
    pub diff_arms: Vec<DifferenceArm>,
    pub dimension: usize,
    /// Whether `diff_arms` spans R^d.
    pub spans: bool,
}

impl Instance {
    pub fn n_contexts(&self) -> usize {
        self.action_sets.len()
    }

    /// Largest action-set size.
    pub fn max_arms(&self) -> usize {
        self.action_sets.iter().map(ActionSet::len).max().unwrap_or(0)
    }

    pub fn arm_vectors(&self) -> Vec<FeatureVector> {
        self.diff_arms.iter().map(|b| b.vector.clone()).collect()
    }

    /// Same action sets under a different hidden parameter.
    pub fn with_theta(&self, theta_star: FeatureVector) -> Result<Instance> {
        check_vector("theta_star", &theta_star, self.dimension, 1.0)?;
        Ok(Instance {
            theta_star,
            ..self.clone()
        })
    }
}

fn check_vector(what: &str, v: &FeatureVector, dim: usize, bound: f64) -> Result<()> {
    if v.len() != dim {
        return Err(OdpoError::DimensionMismatch {
            expected: dim,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(OdpoError::NonFinite(what.to_string()));
    }
    let norm = v.norm();
    if norm > bound + NORM_SLACK {
        return Err(OdpoError::NormViolation {
            what: what.to_string(),
            norm,
            bound,
        });
    }
    Ok(())
}

fn bits_key(v: &FeatureVector) -> Vec<u64> {
    // -0.0 and 0.0 are the same arm
    v.iter().map(|&x| if x == 0.0 { 0 } else { x.to_bits() }).collect()
}

/// Rank of the span of `vectors` via the eigenvalues of their Gram sum.
pub fn span_rank(vectors: &[FeatureVector], dim: usize) -> usize {
    if vectors.is_empty() || dim == 0 {
        return 0;
    }
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for v in vectors {
        gram.ger(1.0, v, v, 1.0);
    }
    let eig = SymmetricEigen::new(gram).eigenvalues;
    let top = eig.iter().cloned().fold(0.0_f64, f64::max);
    if top <= 0.0 {
        return 0;
    }
    eig.iter().filter(|&&e| e > top * 1e-10).count()
}

/// Builds an instance, enumerating every ordered pair `(i, j)` with `i != j`
/// in each context. Zero differences and exact duplicates are dropped; the
/// first occurrence in `(n, i, j)` order is kept.
pub fn build_instance(action_sets: Vec<ActionSet>, theta_star: FeatureVector) -> Result<Instance> {
    let dimension = theta_star.len();
    check_vector("theta_star", &theta_star, dimension, 1.0)?;
    for set in &action_sets {
        if set.is_empty() {
            return Err(OdpoError::InvalidArgument(format!(
                "context {} has no arms",
                set.context_id
            )));
        }
        for (i, a) in set.arms.iter().enumerate() {
            check_vector(
                &format!("arm {} of context {}", i, set.context_id),
                a,
                dimension,
                1.0,
            )?;
        }
    }

    let mut seen = HashSet::new();
    let mut diff_arms = Vec::new();
    for set in &action_sets {
        for (i, ai) in set.arms.iter().enumerate() {
            for (j, aj) in set.arms.iter().enumerate() {
                if i == j {
                    continue;
                }
                let b = ai - aj;
                if b.iter().all(|&x| x == 0.0) {
                    continue;
                }
                if seen.insert(bits_key(&b)) {
                    diff_arms.push(DifferenceArm {
                        vector: b,
                        context_id: set.context_id,
                        i,
                        j,
                    });
                }
            }
        }
    }

    let vectors: Vec<FeatureVector> = diff_arms.iter().map(|b| b.vector.clone()).collect();
    let spans = span_rank(&vectors, dimension) == dimension;
    Ok(Instance {
        action_sets,
        theta_star,
        diff_arms,
        dimension,
        spans,
    })
}

/// Uniform draw from the closed unit ball of R^d: a Gaussian direction scaled
/// by the exact radius law `U^{1/d}`.
pub fn sample_unit_ball<R: Rng + ?Sized>(d: usize, rng: &mut R) -> FeatureVector {
    loop {
        let z = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal));
        let norm = z.norm();
        if norm > 0.0 {
            let u: f64 = rng.gen();
            let radius = u.powf(1.0 / d as f64);
            let v = z * (radius / norm);
            let n = v.norm();
            // rounding can push the norm past 1 by an ulp
            return if n > 1.0 { v / n } else { v };
        }
    }
}

/// Synthetic instance with `n` contexts of `k` arms in the unit ball of R^d.
pub fn make_random_instance(n: usize, k: usize, d: usize, seed: u64) -> Instance {
    let mut rng = rng::stream(seed, &[0x696e_7374]);
    let action_sets = (0..n)
        .map(|c| ActionSet::new(c, (0..k).map(|_| sample_unit_ball(d, &mut rng)).collect()))
        .collect();
    let theta = sample_unit_ball(d, &mut rng);
    build_instance(action_sets, theta).expect("generated vectors lie in the unit ball")
}

/// Instance where one direction is informative only through a single context.
///
/// Contexts `0..n-1` compare arms that differ along the first `d - 1` axes
/// (with a small random jitter so that no two difference arms coincide); the
/// last context compares `±scale·e_d`. The hidden parameter puts weight
/// `rare_weight` on `e_d` and spreads the rest over the other axes.
pub fn make_anisotropic_instance(n: usize, d: usize, rare_weight: f64, seed: u64) -> Instance {
    assert!(n >= 2 && d >= 2, "anisotropic instance needs n >= 2 and d >= 2");
    let mut rng = rng::stream(seed, &[0x616e_6973]);
    let mut sets = Vec::with_capacity(n);
    for c in 0..n - 1 {
        let axis = c % (d - 1);
        let mut a = DVector::<f64>::zeros(d);
        a[axis] = 0.8;
        for x in a.iter_mut().take(d - 1) {
            *x += 0.05 * (rng.gen::<f64>() - 0.5);
        }
        let b = -a.clone();
        sets.push(ActionSet::new(c, vec![a, b]));
    }
    let mut rare = DVector::<f64>::zeros(d);
    rare[d - 1] = 0.8;
    sets.push(ActionSet::new(n - 1, vec![rare.clone(), -rare]));

    let rest = (1.0 - rare_weight * rare_weight).max(0.0).sqrt() / ((d - 1) as f64).sqrt();
    // Random signs, so that a coordinate with no data is guessed right only
    // half of the time whatever the tie-break.
    let mut theta = DVector::<f64>::from_element(d, rest);
    theta[d - 1] = rare_weight;
    for x in theta.iter_mut() {
        if rng.gen::<bool>() {
            *x = -*x;
        }
    }
    let norm = theta.norm();
    if norm > 1.0 {
        theta /= norm;
    }
    build_instance(sets, theta).expect("anisotropic construction lies in the unit ball")
}

/// Changing-action-set construction in R^2: `A_1 = … = A_{T-1} = {±e1}`,
/// `A_T = {±e2}` with hidden parameter `e2` or `-e2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineLowerBoundFamily {
    pub horizon: usize,
    pub action_sets: Vec<ActionSet>,
    pub thetas: [FeatureVector; 2],
}

impl OnlineLowerBoundFamily {
    pub fn instance(&self, which: usize) -> Instance {
        build_instance(self.action_sets.clone(), self.thetas[which].clone())
            .expect("construction lies in the unit ball")
    }
}

pub fn make_online_lower_bound_instance(horizon: usize) -> Result<OnlineLowerBoundFamily> {
    if horizon < 2 {
        return Err(OdpoError::InvalidArgument(format!(
            "online construction needs T >= 2, got {horizon}"
        )));
    }
    let e1 = DVector::from_vec(vec![1.0, 0.0]);
    let e2 = DVector::from_vec(vec![0.0, 1.0]);
    let mut action_sets: Vec<ActionSet> = (0..horizon - 1)
        .map(|t| ActionSet::new(t, vec![e1.clone(), -e1.clone()]))
        .collect();
    action_sets.push(ActionSet::new(horizon - 1, vec![e2.clone(), -e2.clone()]));
    Ok(OnlineLowerBoundFamily {
        horizon,
        action_sets,
        thetas: [e2.clone(), -e2],
    })
}

/// Hypercube family: action set `[±1/√d]^d` and parameters `{±√(d/T)}^d`.
///
/// The action set is never materialised. Both the regret and the best arm
/// decompose over coordinates, so arms and parameters are handled through
/// their sign vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypercubeFamily {
    pub dimension: usize,
    pub horizon: usize,
}

impl HypercubeFamily {
    /// Magnitude of every coordinate of a parameter.
    pub fn theta_scale(&self) -> f64 {
        (self.dimension as f64 / self.horizon as f64).sqrt()
    }

    /// Magnitude of every coordinate of an arm.
    pub fn arm_scale(&self) -> f64 {
        1.0 / (self.dimension as f64).sqrt()
    }

    pub fn theta(&self, signs: &[bool]) -> FeatureVector {
        let s = self.theta_scale();
        DVector::from_iterator(signs.len(), signs.iter().map(|&p| if p { s } else { -s }))
    }

    pub fn arm(&self, signs: &[bool]) -> FeatureVector {
        let s = self.arm_scale();
        DVector::from_iterator(signs.len(), signs.iter().map(|&p| if p { s } else { -s }))
    }

    pub fn sample_signs<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<bool> {
        (0..self.dimension).map(|_| rng.gen::<bool>()).collect()
    }

    /// Lazily enumerates all `2^d` parameters; bit `i` of the counter is the
    /// sign of coordinate `i`.
    pub fn thetas(&self) -> impl Iterator<Item = FeatureVector> + '_ {
        let d = self.dimension;
        (0..1u64 << d).map(move |mask| {
            let signs: Vec<bool> = (0..d).map(|i| mask >> i & 1 == 1).collect();
            self.theta(&signs)
        })
    }

    /// Best arm under `theta`: `sign(θ_i)/√d` per coordinate, zero mapped to +.
    pub fn best_arm_signs(theta: &FeatureVector) -> Vec<bool> {
        theta.iter().map(|&x| x >= 0.0).collect()
    }

    /// Simple regret of predicting the vertex `predicted` under `theta`.
    pub fn regret(&self, theta: &FeatureVector, predicted: &[bool]) -> f64 {
        let s = self.arm_scale();
        theta
            .iter()
            .zip(predicted)
            .map(|(&t, &p)| {
                let best = if t >= 0.0 { s } else { -s };
                let chosen = if p { s } else { -s };
                t * (best - chosen)
            })
            .sum()
    }

    /// Difference arms `±2s/√d` where `s` ranges over the rows of a Sylvester
    /// Hadamard matrix truncated to `d` columns. The columns stay orthogonal,
    /// so the uniform design over this pool has `M = (4/d)·I`, which is
    /// optimal for the full set of vertex differences.
    pub fn design_pool(&self) -> Vec<FeatureVector> {
        let d = self.dimension;
        let m = d.next_power_of_two();
        let scale = 2.0 / (d as f64).sqrt();
        let mut pool = Vec::with_capacity(2 * m);
        for sign in [1.0, -1.0] {
            for r in 0..m {
                pool.push(DVector::from_fn(d, |c, _| {
                    let parity = (r & c).count_ones() % 2;
                    sign * scale * if parity == 0 { 1.0 } else { -1.0 }
                }));
            }
        }
        pool
    }

    /// Every non-zero difference of two vertices, entries in `{0, ±2/√d}`.
    /// Exponential in `d`; intended for verification at small `d`.
    pub fn all_difference_arms(&self) -> Vec<FeatureVector> {
        let d = self.dimension;
        let scale = 2.0 / (d as f64).sqrt();
        let total = 3usize.pow(d as u32);
        (1..total)
            .map(|mut code| {
                DVector::from_fn(d, |_, _| {
                    let digit = code % 3;
                    code /= 3;
                    match digit {
                        0 => 0.0,
                        1 => scale,
                        _ => -scale,
                    }
                })
            })
            .collect()
    }
}

pub fn make_hypercube_instance(dimension: usize, horizon: usize) -> Result<HypercubeFamily> {
    if dimension == 0 || horizon == 0 {
        return Err(OdpoError::InvalidArgument(
            "hypercube family needs d >= 1 and T >= 1".into(),
        ));
    }
    let family = HypercubeFamily { dimension, horizon };
    if family.theta_scale() > 1.0 {
        return Err(OdpoError::InvalidScale(format!(
            "sqrt(d/T) = {} exceeds 1 for d = {dimension}, T = {horizon}",
            family.theta_scale()
        )));
    }
    Ok(family)
}

/// Text form: header `N K d`, `N` blocks of `K` arm lines, one line for θ*.
pub fn write_instance(instance: &Instance) -> Result<String> {
    let k = instance.max_arms();
    if instance.action_sets.iter().any(|s| s.len() != k) {
        return Err(OdpoError::InvalidArgument(
            "text format requires the same number of arms in every context".into(),
        ));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", instance.n_contexts(), k, instance.dimension);
    let line = |v: &FeatureVector| {
        v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
    };
    for set in &instance.action_sets {
        for a in &set.arms {
            let _ = writeln!(out, "{}", line(a));
        }
    }
    let _ = writeln!(out, "{}", line(&instance.theta_star));
    Ok(out)
}

/// Parses the text form. Blank lines and lines starting with `#` are skipped;
/// errors carry 1-based physical line numbers.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(OdpoError::Parse {
        line: 1,
        msg: "missing header `N K d`".into(),
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str| {
        s.parse::<usize>().map_err(|_| OdpoError::Parse {
            line: hline,
            msg: format!("header field `{s}` is not a non-negative integer"),
        })
    };
    if fields.len() != 3 {
        return Err(OdpoError::Parse {
            line: hline,
            msg: format!("header must be `N K d`, got {} fields", fields.len()),
        });
    }
    let (n, k, d) = (parse_usize(fields[0])?, parse_usize(fields[1])?, parse_usize(fields[2])?);
    if n == 0 || k == 0 || d == 0 {
        return Err(OdpoError::Parse {
            line: hline,
            msg: "N, K and d must be positive".into(),
        });
    }

    let mut read_vector = |what: &str| -> Result<FeatureVector> {
        let (ln, l) = lines.next().ok_or(OdpoError::Parse {
            line: hline,
            msg: format!("unexpected end of file while reading {what}"),
        })?;
        let coords = l
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>().map_err(|_| OdpoError::Parse {
                    line: ln,
                    msg: format!("`{s}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if coords.len() != d {
            return Err(OdpoError::Parse {
                line: ln,
                msg: format!("expected {d} coordinates, found {}", coords.len()),
            });
        }
        let v = DVector::from_vec(coords);
        check_vector(what, &v, d, 1.0).map_err(|e| OdpoError::Parse {
            line: ln,
            msg: e.to_string(),
        })?;
        Ok(v)
    };

    let mut sets = Vec::with_capacity(n);
    for c in 0..n {
        let mut arms = Vec::with_capacity(k);
        for i in 0..k {
            arms.push(read_vector(&format!("arm {i} of context {c}"))?);
        }
        sets.push(ActionSet::new(c, arms));
    }
    let theta = read_vector("theta_star")?;
    if let Some((ln, _)) = lines.next() {
        return Err(OdpoError::Parse {
            line: ln,
            msg: "trailing content after theta_star".into(),
        });
    }
    build_instance(sets, theta)
}
