//! Necessity probe: uniform differentiability of f^(n-1) across a lambda
//! grid. D(t) = max over lambda of |(f^(n-1)(l+t) - f^(n-1)(l))/t - f^(n)(l)|
//! must sink below a configured epsilon as t shrinks when f^(n) is
//! uniformly continuous; witnesses with oscillating top derivatives leave
//! a positive floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ExperimentReport, Verdict};
use crate::error::{Error, Result};
use crate::scalar_fn::ScalarFunction;

const ANCHOR: &str = "uniform-continuity necessity";

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NecessityConfig {
    /// D(t_min) below this reads "uniformly differentiable".
    pub uniform_eps: f64,
    /// When set, the verdict grades the outcome against the expectation;
    /// otherwise the report is informational.
    pub expect_uniform: Option<bool>,
}

impl Default for NecessityConfig {
    fn default() -> Self {
        NecessityConfig {
            uniform_eps: 0.05,
            expect_uniform: None,
        }
    }
}

pub fn necessity_probe(
    f: &ScalarFunction,
    n: usize,
    lambdas: &[f64],
    t_grid: &[f64],
    cfg: NecessityConfig,
) -> Result<ExperimentReport> {
    if lambdas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if n == 0 || n > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: n,
            max: f.max_order(),
        });
    }
    if t_grid.is_empty()
        || t_grid.iter().any(|&t| t <= 0.0)
        || t_grid.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::DegenerateGrid(
            "t grid must be positive and strictly decreasing".into(),
        ));
    }

    let series: Vec<(f64, f64)> = t_grid
        .iter()
        .map(|&t| {
            let d = lambdas
                .par_iter()
                .map(|&l| {
                    let upper = f.raw_eval(n - 1, l + t);
                    let lower = f.raw_eval(n - 1, l);
                    let slope = (upper - lower) / t;
                    (slope - f.raw_eval(n, l)).norm()
                })
                .reduce(|| 0.0, f64::max);
            (t, d)
        })
        .collect();
    let floor = series.last().unwrap().1;
    let uniform = floor <= cfg.uniform_eps;

    let mut report = ExperimentReport::new(
        "necessity_probe",
        json!({
            "function": f.id(),
            "order": n,
            "lambda_count": lambdas.len(),
            "lambda_min": lambdas.iter().cloned().fold(f64::INFINITY, f64::min),
            "lambda_max": lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            "t_grid": t_grid,
            "uniform_eps": cfg.uniform_eps,
            "expect_uniform": cfg.expect_uniform,
        }),
    );
    report.push_series("difference_quotient_gap", ANCHOR, series);
    report.push_scalar("floor", ANCHOR, floor);
    report.notes.push(if uniform {
        format!(
            "uniformly differentiable: D(t_min) = {floor:.3e} <= {}",
            cfg.uniform_eps
        )
    } else {
        format!(
            "necessity violated: D(t_min) = {floor:.3e} > {}",
            cfg.uniform_eps
        )
    });
    report
        .notes
        .push("supremum sampled on a finite lambda grid".into());
    report.verdict = match cfg.expect_uniform {
        None => Verdict::Informational,
        Some(expected) => {
            if expected == uniform {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
    };
    Ok(report)
}
