//! Configuration-driven runner: parses a versioned JSON config, executes
//! one command (derive, taylor, verify, or a named experiment), and emits
//! report JSON plus CSV series. Identical config and seed reproduce
//! byte-identical report payloads; reports carry no timestamps.

mod config;

pub use config::{Command, FunctionSpec, RunConfig, SCHEMA_VERSION};

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    self, DiagonalModel, ExperimentReport, MollifierConvergenceConfig, NecessityConfig,
    NormBoundConfig, Verdict,
};
use crate::frechet;
use crate::scalar_fn::linspace;
use crate::spectral::{random_hermitian, schatten_norm, HermitianOperator, SchattenIndex};
use crate::C64;

/// Dense complex matrix wire format: row-major [re, im] pairs with the
/// dimension declared explicitly.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<C64>) -> Self {
        let dim = m.nrows();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push([m[(i, j)].re, m[(i, j)].im]);
            }
        }
        MatrixJson { dim, entries }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<C64>> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix payload has {} entries for dim {}",
                self.entries.len(),
                self.dim
            )));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let e = self.entries[i * self.dim + j];
            C64::new(e[0], e[1])
        }))
    }
}

/// Outcome of one `run`: the reports produced and the files written.
#[derive(Debug)]
pub struct RunOutcome {
    pub reports: Vec<ExperimentReport>,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn all_passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed())
    }

    /// Exit status per the contract: 0 iff all verdicts pass, 2 on verdict
    /// failure. Input errors exit 1 before an outcome exists.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            2
        }
    }
}

/// Parses a config file, reporting schema violations with a field locator.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: RunConfig =
        serde_path_to_error::deserialize(de).map_err(|e| Error::SchemaViolation {
            locator: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Executes the configured command and writes report files under
/// `out_dir`. File names embed the experiment id and seed.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let mut reports = match cfg.command {
        Command::Derive => vec![run_derive(cfg)?],
        Command::Taylor => vec![run_taylor(cfg)?],
        Command::Verify => vec![run_verify(cfg)?],
        Command::Experiment => vec![run_experiment(cfg)?],
    };
    // uniform provenance wrapper: the run config under "config" (the
    // round-trip contract keys on it), the probe's own echo under "probe"
    for report in &mut reports {
        let probe = std::mem::take(&mut report.config);
        report.config = json!({
            "schema_version": SCHEMA_VERSION,
            "config": serde_json::to_value(cfg).expect("config serializes"),
            "probe": probe,
        });
    }

    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for report in &reports {
        let stem = format!("{}_seed{}", report.experiment, cfg.seed);
        let json_path = out_dir.join(format!("{stem}.json"));
        let payload = serde_json::to_string_pretty(report).expect("report serializes");
        write_atomic(&json_path, payload.as_bytes())?;
        written.push(json_path);
        for series in &report.series {
            let csv_path = out_dir.join(format!("{stem}_{}.csv", series.name));
            let csv = report
                .series_csv(&series.name)
                .expect("series exists by construction");
            write_atomic(&csv_path, csv.as_bytes())?;
            written.push(csv_path);
        }
    }
    Ok(RunOutcome { reports, written })
}

/// Write-temp-then-rename so report files appear atomically.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Stable, sorted experiment catalog lines: "id — anchor".
pub fn list_experiments() -> Vec<String> {
    experiments::catalog()
        .into_iter()
        .map(|(id, anchor)| format!("{id} — {anchor}"))
        .collect()
}

fn unit_direction(seed: u64, d: usize, p: SchattenIndex) -> DMatrix<C64> {
    let h = random_hermitian(seed, d, None);
    let m = h.matrix().clone();
    let norm = schatten_norm(&m, p);
    m / C64::new(norm, 0.0)
}

/// derive: D^n f(A)[X,...,X] for a seeded (A, X), cross-validated against
/// the central finite difference of t -> f(A + tX).
fn run_derive(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let d = cfg.dimension;
    let n = cfg.n;
    let a = random_hermitian(cfg.seed, d, None);
    let x_mat = unit_direction(cfg.seed.wrapping_add(1), d, cfg.p);
    let x = HermitianOperator::new(x_mat.clone())?;

    let xs: Vec<&DMatrix<C64>> = std::iter::repeat_n(&x_mat, n).collect();
    let derivative = if cfg.override_smoothness {
        frechet::frechet_derivative_unchecked(&f, &a, &xs)?
    } else {
        frechet::frechet_derivative(&f, &a, &xs)?
    };
    let h = frechet::gateaux_default_step(n, &a);
    let fd = frechet::gateaux_fd(&f, n, &a, &x, h)?;
    let gap = (&derivative - &fd).norm() / (1.0 + derivative.norm());
    let tol = cfg.tolerance("fd_cross_tol", 1e-4);

    let mut report = ExperimentReport::new(
        "derive",
        json!({
            "function": f.id(),
            "order": n,
            "dimension": d,
            "seed": cfg.seed,
            "fd_cross_tol": tol,
            "derivative": MatrixJson::from_matrix(&derivative),
        }),
    );
    report.push_scalar("fd_cross_gap", "Eq. perturbation_formula", gap);
    report.push_scalar("fd_step", "Eq. perturbation_formula", h);
    report.push_scalar(
        "derivative_frobenius",
        "Eq. perturbation_formula",
        derivative.norm(),
    );
    report.verdict = if gap <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// taylor: the exact-identity check approximation + remainder = f(A+X).
fn run_taylor(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let d = cfg.dimension;
    let n = cfg.n;
    let a = random_hermitian(cfg.seed, d, None);
    let x = HermitianOperator::new(unit_direction(cfg.seed.wrapping_add(1), d, cfg.p))?.scale(0.2);

    let (approx, remainder) = frechet::taylor_expand(&f, n, &a, &x)?;
    let target = crate::spectral::apply_function(&f, &a.add(&x))?;
    let gap = (&approx + &remainder - &target).norm() / (1.0 + target.norm());
    let tol = cfg.tolerance("identity_tol", 1e-8);

    let mut report = ExperimentReport::new(
        "taylor",
        json!({
            "function": f.id(),
            "order": n,
            "dimension": d,
            "seed": cfg.seed,
            "identity_tol": tol,
        }),
    );
    report.push_scalar("max_identity_gap", "Eq. taylor_expansion", gap);
    report.push_scalar(
        "remainder_norm_p",
        "Eq. taylor_expansion",
        schatten_norm(&remainder, cfg.p),
    );
    report.verdict = if gap <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// verify: remainder-scaling differentiability report.
fn run_verify(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let d = cfg.dimension;
    let a = random_hermitian(cfg.seed, d, None);
    let t_grid = cfg.grid("t_grid", &[1e-1, 1e-2, 1e-3, 1e-4]);
    let gaussian = cfg.tolerance("gaussian_directions", 6.0) as usize;
    let rank_one = cfg.tolerance("rank_one_directions", 2.0) as usize;
    let dirs = frechet::sample_directions(cfg.seed.wrapping_add(17), d, gaussian, rank_one, cfg.p);
    let rep = frechet::differentiability_report(&f, cfg.n, &a, cfg.p, &dirs, &t_grid)?;

    let mut report = ExperimentReport::new(
        "verify",
        json!({
            "function": f.id(),
            "order": cfg.n,
            "dimension": d,
            "seed": cfg.seed,
            "derivative_report": &rep,
        }),
    );
    report.push_scalar(
        "slope_estimate",
        "first-order remainder scaling",
        rep.slope_estimate,
    );
    report.push_scalar(
        "slope_threshold",
        "first-order remainder scaling",
        rep.slope_threshold,
    );
    report.push_series(
        "max_remainder_ratio",
        "first-order remainder scaling",
        rep.max_ratio_series(),
    );
    report.notes.push(rep.uniformity.clone());
    report.verdict = if rep.verdict {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    let id = cfg
        .experiment
        .as_deref()
        .ok_or_else(|| Error::SchemaViolation {
            locator: "experiment".into(),
            message: "command \"experiment\" requires an experiment id".into(),
        })?;
    match id {
        "rank_one_check" => run_rank_one(cfg),
        "necessity_probe" => run_necessity(cfg),
        "mollifier_convergence" => run_mollifier(cfg),
        "norm_bound_probe" => run_norm_bound(cfg),
        "commutative_counterexample" => run_commutative(cfg),
        other => Err(Error::SchemaViolation {
            locator: "experiment".into(),
            message: format!("unknown experiment {other:?}; see `opint list-experiments`"),
        }),
    }
}

/// Batch of rank-one identity checks over sampled (k, t) pairs, merged
/// into one report.
fn run_rank_one(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let range = cfg.grid("lambda_range", &[-10.0, 10.0]);
    let model = DiagonalModel::low_discrepancy(cfg.dimension, range[0], range[1]);
    let t_list = cfg.grid("t_list", &[0.0, 0.5, -1.0, std::f64::consts::PI]);
    let k_count = cfg.tolerance("k_count", 4.0) as usize;

    let mut report = ExperimentReport::new(
        "rank_one_check",
        json!({
            "function": f.id(),
            "max_order": cfg.n,
            "dimension": cfg.dimension,
            "lambda_range": range,
            "t_list": t_list,
            "k_count": k_count,
        }),
    );
    let mut worst = 0.0_f64;
    let mut all_pass = true;
    let mut checks = 0.0;
    for m in 0..=cfg.n {
        for i in 0..k_count.min(model.dim()) {
            let k = (i * model.dim()) / k_count.min(model.dim()).max(1);
            for &t in &t_list {
                let sub = experiments::rank_one_check(&f, m, &model, k, t)?;
                let gap = sub.scalar("gap").unwrap_or(f64::INFINITY);
                worst = worst.max(gap);
                all_pass &= sub.passed();
                checks += 1.0;
            }
        }
    }
    report.push_scalar("checks", "Eq. derivative_at_Q_k", checks);
    report.push_scalar("worst_gap", "Eq. derivative_at_Q_k", worst);
    report.verdict = if all_pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

fn run_necessity(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let range = cfg.grid("lambda_range", &[0.0, 1000.0]);
    let step = cfg.tolerance("lambda_step", 0.05);
    let count = ((range[1] - range[0]) / step).round() as usize + 1;
    let lambdas = linspace(range[0], range[1], count.max(2));
    let t_grid = cfg.grid("t_grid", &[1e-1, 1e-2, 1e-3]);
    let nc = NecessityConfig {
        uniform_eps: cfg.tolerance("uniform_eps", 0.05),
        expect_uniform: cfg.expectation(),
    };
    experiments::necessity_probe(&f, cfg.n, &lambdas, &t_grid, nc)
}

fn run_mollifier(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let eps_list = cfg.grid("eps_list", &[0.5, 0.1, 0.02]);
    let range = cfg.grid("lambda_range", &[0.0, 20.0]);
    let step = cfg.tolerance("lambda_step", 0.01);
    let count = ((range[1] - range[0]) / step).round() as usize + 1;
    let grid = linspace(range[0], range[1], count.max(2));
    let mc = MollifierConvergenceConfig {
        quadrature_nodes: cfg.tolerance("quadrature_nodes", 2049.0) as usize,
        noise_factor: cfg.tolerance("noise_factor", 1.05),
        expect_convergence: cfg.expectation(),
    };
    experiments::mollifier_convergence(&f, cfg.n, &eps_list, &grid, mc)
}

fn run_norm_bound(cfg: &RunConfig) -> Result<ExperimentReport> {
    let f = cfg.resolve_function()?;
    let a = random_hermitian(cfg.seed, cfg.dimension, None);
    let trials = cfg.tolerance("trials", 16.0) as usize;
    let nb = NormBoundConfig {
        eps_list: cfg.grid("eps_list", &[0.5, 0.25, 0.1, 0.05]),
        ..Default::default()
    };
    experiments::norm_bound_probe(&f, cfg.n, cfg.p, &a, trials, cfg.seed, nb)
}

fn run_commutative(cfg: &RunConfig) -> Result<ExperimentReport> {
    let resolution = cfg.tolerance("resolution", 1000.0) as usize;
    let k_list: Vec<usize> = cfg
        .grid("k_list", &[100.0, 10.0, 1.0])
        .iter()
        .map(|&k| k as usize)
        .collect();
    experiments::commutative_counterexample(cfg.p, resolution, &k_list)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_json_round_trip() {
        let m = random_hermitian(3, 4, None);
        let wire = MatrixJson::from_matrix(m.matrix());
        let back = wire.to_matrix().unwrap();
        assert_eq!(m.matrix(), &back);
    }

    #[test]
    fn matrix_json_rejects_bad_length() {
        let wire = MatrixJson {
            dim: 3,
            entries: vec![[0.0, 0.0]; 4],
        };
        assert!(wire.to_matrix().is_err());
    }

    #[test]
    fn catalog_lines() {
        let lines = list_experiments();
        assert!(lines.contains(&"rank_one_check — Eq. derivative_at_Q_k".to_string()));
        assert!(lines.contains(&"commutative_counterexample — Comment 2".to_string()));
        let again = list_experiments();
        assert_eq!(lines, again);
    }
}
