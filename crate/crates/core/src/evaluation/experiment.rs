//! Replicated regret experiments over a grid of `(d, T)`.
//!
//! Every `(grid point, replica)` cell derives its own random streams from the
//! master seed, so the report does not depend on how cells are scheduled.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{OdpoError, Result};
use crate::instance::{make_anisotropic_instance, make_random_instance, Instance};
use crate::pipeline::{run_algorithm, Algorithm, OdpoConfig, RunRecord};
use crate::rng;

use super::bounds::{corollary_bound, hypercube_floor, theorem1_bound};
use super::regret::simple_regret;

pub const CSV_HEADER: &str = "replica,seed,algorithm,d,T,effective_T,N,K,regret,theorem1_bound,corollary_hp_bound,corollary_exp_bound,lower_bound,status";

const INSTANCE_STREAM: u64 = 0x696e_7374;
const RUN_STREAM: u64 = 0x7275_6e73;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InstanceGenerator {
    /// `n` contexts of `k` arms drawn uniformly from the unit ball.
    Random { n: usize, k: usize },
    /// One informative direction that appears in a single context out of `n`.
    Anisotropic { n: usize, rare_weight: f64 },
}

impl InstanceGenerator {
    pub fn generate(&self, d: usize, seed: u64) -> Instance {
        match *self {
            InstanceGenerator::Random { n, k } => make_random_instance(n, k, d, seed),
            InstanceGenerator::Anisotropic { n, rare_weight } => make_anisotropic_instance(n, d, rare_weight, seed),
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        match *self {
            InstanceGenerator::Random { n, k } if n == 0 || k == 0 => {
                Err(OdpoError::InvalidArgument("random generator needs N, K >= 1".into()))
            }
            InstanceGenerator::Anisotropic { n, rare_weight } if n < 2 || d < 2 || !(0.0..=1.0).contains(&rare_weight) => {
                Err(OdpoError::InvalidArgument(
                    "anisotropic generator needs N >= 2, d >= 2 and a rare weight in [0, 1]".into(),
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub generator: InstanceGenerator,
    pub algorithms: Vec<Algorithm>,
    /// `(d, T)` grid points.
    pub grid: Vec<(usize, usize)>,
    pub replicas: usize,
    pub master_seed: u64,
    /// Template for every run; its `seed` is replaced per cell.
    pub odpo: OdpoConfig,
    /// Keep the full per-run JSON records.
    pub keep_records: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(OdpoError::InvalidArgument("no algorithms selected".into()));
        }
        if self.grid.is_empty() {
            return Err(OdpoError::InvalidArgument("empty (d, T) grid".into()));
        }
        if self.replicas == 0 {
            return Err(OdpoError::InvalidArgument("replicas must be >= 1".into()));
        }
        for &(d, t) in &self.grid {
            if d == 0 || t == 0 {
                return Err(OdpoError::InvalidArgument(format!("grid point ({d}, {t}) must be positive")));
            }
            self.generator.validate(d)?;
        }
        self.odpo.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaRow {
    pub replica: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub d: usize,
    pub t: usize,
    pub effective_t: usize,
    pub n: usize,
    pub k: usize,
    pub regret: Option<f64>,
    pub theorem1_bound: Option<f64>,
    pub corollary_hp_bound: Option<f64>,
    pub corollary_exp_bound: Option<f64>,
    pub lower_bound: f64,
    pub status: String,
    #[serde(skip)]
    pub record: Option<RunRecord>,
}

impl ReplicaRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub d: usize,
    pub t: usize,
    pub replicas: usize,
    pub ok: usize,
    pub mean: f64,
    pub std_error: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub mean_effective_t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretReport {
    /// Sorted by `(algorithm, seed)`.
    pub rows: Vec<ReplicaRow>,
    /// Sorted by `(algorithm, d, T)`.
    pub aggregates: Vec<AggregateRow>,
}

impl RegretReport {
    pub fn aggregate(&self, algorithm: Algorithm, d: usize, t: usize) -> Option<&AggregateRow> {
        self.aggregates
            .iter()
            .find(|a| a.algorithm == algorithm && a.d == d && a.t == t)
    }

    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| !r.is_ok())
    }
}

/// Nearest-rank quantile of sorted data.
fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn run_cell(config: &ExperimentConfig, grid_index: usize, replica: usize) -> Vec<ReplicaRow> {
    let (d, t) = config.grid[grid_index];
    let instance_seed = rng::derived_seed(config.master_seed, &[INSTANCE_STREAM, d as u64, replica as u64]);
    let run_seed = rng::derived_seed(config.master_seed, &[RUN_STREAM, d as u64, t as u64, replica as u64]);
    let instance = config.generator.generate(d, instance_seed);
    let run_config = OdpoConfig {
        seed: run_seed,
        ..config.odpo
    };
    let lambda = run_config.lambda_est_for(d);

    config
        .algorithms
        .iter()
        .map(|&algorithm| {
            let mut row = ReplicaRow {
                replica,
                seed: run_seed,
                algorithm,
                d,
                t,
                effective_t: 0,
                n: instance.n_contexts(),
                k: instance.max_arms(),
                regret: None,
                theorem1_bound: None,
                corollary_hp_bound: None,
                corollary_exp_bound: None,
                lower_bound: hypercube_floor(d, t),
                status: "ok".into(),
                record: None,
            };
            let outcome = run_algorithm(&instance, t, algorithm, &run_config).and_then(|out| {
                let eff = out.allocation.effective_t;
                let cb = corollary_bound(d, eff)?;
                Ok((
                    out.clone(),
                    theorem1_bound(d, eff, run_config.epsilon, lambda, run_config.delta)?,
                    cb.high_prob(run_config.delta)?,
                    cb.expected()?,
                ))
            });
            match outcome {
                Ok((out, th1, hp, exp)) => {
                    row.effective_t = out.allocation.effective_t;
                    row.regret = Some(simple_regret(&instance, &out.prediction));
                    row.theorem1_bound = Some(th1);
                    row.corollary_hp_bound = Some(hp);
                    row.corollary_exp_bound = Some(exp);
                    if config.keep_records {
                        row.record = Some(out.record(&instance, &run_config));
                    }
                }
                Err(e) => row.status = format!("error:{}", e.kind()),
            }
            row
        })
        .collect()
}

/// Runs every `(algorithm, grid point, replica)` and aggregates.
///
/// Cells run on the current rayon pool; a failed cell yields a row with an
/// `error:<kind>` status instead of aborting the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RegretReport> {
    config.validate()?;
    let cells: Vec<(usize, usize)> = (0..config.grid.len())
        .flat_map(|g| (0..config.replicas).map(move |r| (g, r)))
        .collect();
    let mut rows: Vec<ReplicaRow> = cells
        .par_iter()
        .flat_map_iter(|&(g, r)| run_cell(config, g, r))
        .collect();
    rows.sort_by(|a, b| {
        (a.algorithm, a.seed, a.d, a.t, a.replica).cmp(&(b.algorithm, b.seed, b.d, b.t, b.replica))
    });

    let mut aggregates = Vec::new();
    let mut algorithms = config.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let mut grid = config.grid.clone();
    grid.sort();
    grid.dedup();
    for &algorithm in &algorithms {
        for &(d, t) in &grid {
            let cell: Vec<&ReplicaRow> = rows
                .iter()
                .filter(|r| r.algorithm == algorithm && r.d == d && r.t == t)
                .collect();
            let mut regrets: Vec<f64> = cell.iter().filter_map(|r| r.regret).collect();
            regrets.sort_by(f64::total_cmp);
            let n = regrets.len() as f64;
            let mean = regrets.iter().sum::<f64>() / n;
            let std_error = if regrets.len() > 1 {
                (regrets.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            let ok: Vec<&&ReplicaRow> = cell.iter().filter(|r| r.is_ok()).collect();
            aggregates.push(AggregateRow {
                algorithm,
                d,
                t,
                replicas: cell.len(),
                ok: regrets.len(),
                mean,
                std_error,
                q05: nearest_rank(&regrets, 0.05),
                q50: nearest_rank(&regrets, 0.5),
                q95: nearest_rank(&regrets, 0.95),
                mean_effective_t: ok.iter().fold(0.0, |acc, r| acc + r.effective_t as f64) / ok.len().max(1) as f64,
            });
        }
    }
    Ok(RegretReport { rows, aggregates })
}

/// Decimal with 12 significant digits.
pub fn format_decimal(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(format_decimal).unwrap_or_default()
}

/// Empty field for statistics of a cell with no successful replica.
fn finite(x: f64) -> String {
    opt(Some(x).filter(|v| v.is_finite()))
}

pub fn write_regret_csv(report: &RegretReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.replica,
            r.seed,
            r.algorithm,
            r.d,
            r.t,
            r.effective_t,
            r.n,
            r.k,
            opt(r.regret),
            opt(r.theorem1_bound),
            opt(r.corollary_hp_bound),
            opt(r.corollary_exp_bound),
            format_decimal(r.lower_bound),
            r.status
        );
    }
    out
}

pub fn write_aggregate_csv(report: &RegretReport) -> String {
    let mut out = String::from("algorithm,d,T,replicas,ok,mean_regret,std_error,q05,q50,q95,mean_effective_T\n");
    for a in &report.aggregates {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            a.algorithm,
            a.d,
            a.t,
            a.replicas,
            a.ok,
            finite(a.mean),
            finite(a.std_error),
            finite(a.q05),
            finite(a.q50),
            finite(a.q95),
            format_decimal(a.mean_effective_t)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(replicas: usize) -> ExperimentConfig {
        ExperimentConfig {
            generator: InstanceGenerator::Random { n: 6, k: 3 },
            algorithms: vec![Algorithm::Odpo],
            grid: vec![(3, 18)],
            replicas,
            master_seed: 5,
            odpo: OdpoConfig::default(),
            keep_records: false,
        }
    }

    #[test]
    fn one_cell_three_replicas() {
        let report = run_experiment(&small_config(3)).unwrap();
        assert_eq!(report.rows.len(), 3);
        assert_eq!(report.aggregates.len(), 1);
        assert!(report.rows.iter().all(|r| r.is_ok()));
        let seeds: Vec<u64> = report.rows.iter().map(|r| r.seed).collect();
        let mut sorted = seeds.clone();
        sorted.sort();
        assert_eq!(seeds, sorted);
    }

    #[test]
    fn csv_is_reproducible() {
        let a = write_regret_csv(&run_experiment(&small_config(4)).unwrap());
        let b = write_regret_csv(&run_experiment(&small_config(4)).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with(CSV_HEADER));
        assert_eq!(a.lines().count(), 5);
    }

    #[test]
    fn failing_cells_are_tagged() {
        let mut cfg = small_config(2);
        cfg.generator = InstanceGenerator::Random { n: 1, k: 2 };
        let report = run_experiment(&cfg).unwrap();
        assert!(report.rows.iter().all(|r| r.status == "error:SpanDeficient"));
        assert!(report.has_errors());
    }

    #[test]
    fn nearest_rank_quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&xs, 0.5), 2.0);
        assert_eq!(nearest_rank(&xs, 0.95), 4.0);
        assert_eq!(nearest_rank(&xs, 0.05), 1.0);
    }

    #[test]
    fn decimal_has_twelve_significant_digits() {
        assert_eq!(format_decimal(0.1), "1.00000000000e-1");
        assert_eq!(format_decimal(2.0 / 3.0), "6.66666666667e-1");
    }
}
