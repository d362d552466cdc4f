//! Norm-bound probe: the ratio ||Gamma(g)[Xs]||_p / prod ||X_j||_p over
//! seeded Hermitian direction tuples, for g drawn from the mollified
//! family {f, f_eps, f - f_eps}. The fitted constant R(g) / ||g^(n)||_inf
//! is recorded per family member; the theory says one constant depending
//! only on (p, n) covers the whole family, so the measured spread is the
//! quantity of interest. Informational by design: constants are measured,
//! never asserted a priori.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::ExperimentReport;
use crate::error::{Error, Result};
use crate::moi;
use crate::scalar_fn::{grid_sup, linspace, mollify_with, Mollifier, ScalarFunction};
use crate::spectral::{
    decompose, default_cluster_tol, random_hermitian, schatten_norm, HermitianOperator,
    SchattenIndex,
};
use crate::C64;

const ANCHOR: &str = "bound C_{p,n}||(f_eps-f)^(n)||_inf";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormBoundConfig {
    /// Epsilons of the mollified family; decreasing.
    pub eps_list: Vec<f64>,
    /// Sup norms of g^(n) are grid suprema over [grid_lo, grid_hi].
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_points: usize,
    pub quadrature_nodes: usize,
}

impl Default for NormBoundConfig {
    fn default() -> Self {
        NormBoundConfig {
            eps_list: vec![0.5, 0.25, 0.1, 0.05],
            grid_lo: -3.0,
            grid_hi: 3.0,
            grid_points: 601,
            quadrature_nodes: crate::scalar_fn::DEFAULT_QUADRATURE_NODES,
        }
    }
}

/// Max ratio ||Gamma(g)[Xs]||_p / prod ||X_j||_p over the direction tuples.
fn max_ratio(
    g: &ScalarFunction,
    sd: &crate::spectral::SpectralData,
    tuples: &[Vec<DMatrix<C64>>],
    p: SchattenIndex,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for xs in tuples {
        let refs: Vec<&DMatrix<C64>> = xs.iter().collect();
        let gamma = moi::moi_symmetrized(g, sd, &refs)?.value;
        worst = worst.max(schatten_norm(&gamma, p));
    }
    Ok(worst)
}

pub fn norm_bound_probe(
    f: &ScalarFunction,
    n: usize,
    p: SchattenIndex,
    a: &HermitianOperator,
    trials: usize,
    seed: u64,
    cfg: NormBoundConfig,
) -> Result<ExperimentReport> {
    if !f.is_cnb(n) {
        return Err(Error::SmoothnessInsufficient {
            id: f.id().to_string(),
            class: f.smoothness_class().to_string(),
            declared: f.smooth_order(),
            requested: n,
        });
    }
    assert!(trials >= 1);
    let d = a.dim();
    let sd = decompose(a, default_cluster_tol(a))?;
    let grid = linspace(cfg.grid_lo, cfg.grid_hi, cfg.grid_points);

    // seeded direction tuples, unit p-norm each
    let tuples: Vec<Vec<DMatrix<C64>>> = (0..trials)
        .map(|trial| {
            (0..n)
                .map(|j| {
                    let h = random_hermitian(seed.wrapping_add((trial * n + j) as u64), d, None);
                    let m = h.matrix().clone();
                    let norm = schatten_norm(&m, p);
                    m / C64::new(norm, 0.0)
                })
                .collect()
        })
        .collect();

    let mut report = ExperimentReport::new(
        "norm_bound_probe",
        json!({
            "function": f.id(),
            "order": n,
            "p": p,
            "dimension": d,
            "trials": trials,
            "seed": seed,
            "eps_list": cfg.eps_list,
            "sup_grid": [cfg.grid_lo, cfg.grid_hi, cfg.grid_points],
            "quadrature_nodes": cfg.quadrature_nodes,
        }),
    );

    let mut fitted = Vec::new();
    let mut record =
        |report: &mut ExperimentReport, label: &str, g: &ScalarFunction| -> Result<()> {
            let ratio = max_ratio(g, &sd, &tuples, p)?;
            let sup = grid_sup(g, n, &grid)?;
            report.push_scalar(&format!("ratio[{label}]"), ANCHOR, ratio);
            report.push_scalar(&format!("sup_dn[{label}]"), ANCHOR, sup);
            if sup > 0.0 {
                let c = ratio / sup;
                report.push_scalar(&format!("fitted[{label}]"), ANCHOR, c);
                fitted.push(c);
            }
            Ok(())
        };

    record(&mut report, "f", f)?;
    for &eps in &cfg.eps_list {
        let smoothed = mollify_with(f, Mollifier::with_nodes(eps, cfg.quadrature_nodes)?)?;
        record(&mut report, &format!("f_eps[{eps}]"), &smoothed)?;
        let diff = f.subtract(&smoothed);
        record(&mut report, &format!("f-f_eps[{eps}]"), &diff)?;
    }

    let spread = if fitted.is_empty() {
        0.0
    } else {
        let max = fitted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = fitted.iter().cloned().fold(f64::INFINITY, f64::min);
        if min > 0.0 {
            max / min
        } else {
            f64::INFINITY
        }
    };
    report.push_scalar("fitted_spread", ANCHOR, spread);
    report
        .notes
        .push("fitted constants are lower-bound surrogates from sampled directions".into());
    Ok(report)
}
