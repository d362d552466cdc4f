//! Executable probes of the derivative theory at desk scale: rank-one
//! identities on a dense-spectrum diagonal model, the uniform-continuity
//! necessity probe, mollifier convergence, the norm-bound probe, and the
//! commutative counterexample.
//!
//! Each probe returns an [`ExperimentReport`]: a structured record of the
//! configuration, named measurements (each tagged with the anchor string
//! of the claim it probes), and a verdict. Verdicts on finite grids and
//! sampled directions are sampled statements, flagged as such in the
//! report notes.

mod commutative;
mod mollifier_conv;
mod necessity;
mod norm_bound;
mod rank_one;

pub use commutative::{commutative_counterexample, CommutativeModel};
pub use mollifier_conv::{mollifier_convergence, MollifierConvergenceConfig};
pub use necessity::{necessity_probe, NecessityConfig};
pub use norm_bound::{norm_bound_probe, NormBoundConfig};
pub use rank_one::rank_one_check;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::spectral::HermitianOperator;
use crate::C64;

/// Experiment outcome. `Informational` marks probes that record measured
/// constants without asserting them a priori.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Informational,
}

/// One measured scalar, tagged with the anchor string of the claim it
/// probes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub anchor: String,
    pub value: f64,
}

/// One measured series (for CSV export and plotting).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub anchor: String,
    pub points: Vec<(f64, f64)>,
}

/// Structured record of one probe run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Echo of the configuration (seeds, grids, tolerances).
    pub config: serde_json::Value,
    pub measurements: Vec<Measurement>,
    pub series: Vec<Series>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: serde_json::Value) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            config,
            measurements: Vec::new(),
            series: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Informational,
        }
    }

    pub fn push_scalar(&mut self, name: &str, anchor: &str, value: f64) {
        self.measurements.push(Measurement {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
        });
    }

    pub fn push_series(&mut self, name: &str, anchor: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series {
            name: name.to_string(),
            anchor: anchor.to_string(),
            points,
        });
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.measurements
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.value)
    }

    pub fn get_series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    /// CSV with one (x, y) row per point of the named series.
    pub fn series_csv(&self, name: &str) -> Option<String> {
        let s = self.get_series(name)?;
        let mut out = String::from("x,y\n");
        for (x, y) in &s.points {
            out.push_str(&format!("{x},{y}\n"));
        }
        Some(out)
    }
}

/// Finite truncation of the diagonal model: A e_k = lambda_k e_k with the
/// rank-one coordinate projections Q_k. Insertion order of the lambdas is
/// preserved so that Q_k pairs with lambda_k.
#[derive(Clone, Debug)]
pub struct DiagonalModel {
    lambdas: Vec<f64>,
    operator: HermitianOperator,
}

impl DiagonalModel {
    pub fn new(lambdas: Vec<f64>) -> Self {
        let operator = HermitianOperator::from_diagonal(&lambdas);
        DiagonalModel { lambdas, operator }
    }

    /// Golden-ratio low-discrepancy enumeration of [lo, hi]: the finite
    /// stand-in for a dense sequence, maximizing coverage per dimension.
    pub fn low_discrepancy(d: usize, lo: f64, hi: f64) -> Self {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let lambdas = (0..d)
            .map(|k| {
                let u = ((k + 1) as f64 * INV_PHI).fract();
                lo + (hi - lo) * u
            })
            .collect();
        Self::new(lambdas)
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    /// Q_k, the rank-one projection onto the k-th coordinate.
    pub fn projection(&self, k: usize) -> DMatrix<C64> {
        let d = self.dim();
        let mut q = DMatrix::zeros(d, d);
        q[(k, k)] = C64::new(1.0, 0.0);
        q
    }
}

/// Sorted experiment catalog: (id, anchor of the claim it probes).
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("commutative_counterexample", "Comment 2"),
        ("mollifier_convergence", "convolution smoothing lemma"),
        (
            "necessity_probe",
            "uniform-continuity necessity; trace-norm diagnostics included",
        ),
        (
            "norm_bound_probe",
            "bound C_{p,n}||(f_eps-f)^(n)||_inf",
        ),
        ("rank_one_check", "Eq. derivative_at_Q_k"),
    ]
}
