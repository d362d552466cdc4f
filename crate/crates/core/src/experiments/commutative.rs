//! Commutative counterexample: in the weighted diagonal algebra modeling
//! L^p[0,1], the indicator X of the first k of N coordinates satisfies
//! X^2 = X, so with f(t) = t^2 near 1 the candidate derivative X -> 2X
//! leaves the remainder X^2 with ||X^2||_p / ||X||_p = 1 while
//! ||X||_p = (k/N)^(1/p) -> 0: the remainder is not o(||X||_p). The
//! Schatten contrast X = t Q (rank one) has ratio t -> 0 instead, which is
//! why no such example exists in the Schatten classes.

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ExperimentReport, Verdict};
use crate::error::{Error, Result};
use crate::spectral::{random_hermitian, schatten_norm, SchattenIndex};
use crate::C64;

const ANCHOR: &str = "Comment 2";

/// Simulated commutative L^p space: N atoms of trace weight 1/N each.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CommutativeModel {
    pub resolution: usize,
    pub p: SchattenIndex,
}

impl CommutativeModel {
    pub fn new(resolution: usize, p: SchattenIndex) -> Self {
        CommutativeModel { resolution, p }
    }

    /// ||x||_p = (sum |x_i|^p / N)^(1/p).
    pub fn norm(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.resolution);
        let n = self.resolution as f64;
        let pv = self.p.value();
        (x.iter().map(|v| v.abs().powf(pv)).sum::<f64>() / n).powf(1.0 / pv)
    }

    /// Indicator of the first k coordinates.
    pub fn indicator(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.resolution];
        for v in x.iter_mut().take(k) {
            *v = 1.0;
        }
        x
    }
}

/// Schatten contrast values of t for the rank-one comparison series.
const CONTRAST_TS: [f64; 3] = [1e-1, 1e-2, 1e-3];

pub fn commutative_counterexample(
    p: SchattenIndex,
    resolution: usize,
    k_list: &[usize],
) -> Result<ExperimentReport> {
    if !p.in_theorem_scope() {
        return Err(Error::InvalidP(p.value()));
    }
    if k_list.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &k in k_list {
        if k == 0 || k > resolution {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: resolution,
            });
        }
    }
    let model = CommutativeModel::new(resolution, p);

    let mut report = ExperimentReport::new(
        "commutative_counterexample",
        json!({
            "p": p,
            "resolution": resolution,
            "k_list": k_list,
            "contrast_ts": CONTRAST_TS,
        }),
    );

    // constant-1 element has norm 1 for every p
    let ones = vec![1.0; resolution];
    report.push_scalar("norm_of_one", ANCHOR, model.norm(&ones));

    let mut norms = Vec::new();
    let mut ratio_series = Vec::new();
    let mut max_identity_gap = 0.0_f64;
    for &k in k_list {
        let x = model.indicator(k);
        let x_sq: Vec<f64> = x.iter().map(|v| v * v).collect();
        let nx = model.norm(&x);
        let nx2 = model.norm(&x_sq);
        let expect = (k as f64 / resolution as f64).powf(1.0 / p.value());
        report.push_scalar(&format!("norm[k={k}]"), ANCHOR, nx);
        report.push_scalar(&format!("norm_expected[k={k}]"), ANCHOR, expect);
        // f(1+X) - f(1) = 2X + X^2 coordinatewise for f(t) = t^2 near 1
        let gap = x
            .iter()
            .map(|&v| {
                let lhs = (1.0 + v) * (1.0 + v) - 1.0;
                let rhs = 2.0 * v + v * v;
                (lhs - rhs).abs()
            })
            .fold(0.0_f64, f64::max);
        max_identity_gap = max_identity_gap.max(gap);
        norms.push(nx);
        ratio_series.push((nx, nx2 / nx));
    }
    report.push_scalar("max_identity_gap", ANCHOR, max_identity_gap);
    report.push_series("remainder_ratio_vs_norm", ANCHOR, ratio_series.clone());

    // Schatten contrast: X = t Q rank one, ratio ||X^2||_p/||X||_p = t
    let q = random_hermitian(1, 4, Some(&[1.0, 0.0, 0.0, 0.0]));
    let contrast: Vec<(f64, f64)> = CONTRAST_TS
        .iter()
        .map(|&t| {
            let x = q.matrix() * C64::new(t, 0.0);
            let x_sq = &x * &x;
            (t, schatten_norm(&x_sq, p) / schatten_norm(&x, p))
        })
        .collect();
    report.push_series("schatten_contrast_ratio", ANCHOR, contrast);

    // verdict: differentiability fails iff the ratio pins at 1 while the
    // perturbation norms shrink
    let ratios_all_one = ratio_series.iter().all(|&(_, r)| (r - 1.0).abs() <= 1e-12);
    let norms_shrink = norms.windows(2).all(|w| w[1] < w[0]) && norms.len() >= 2;
    report.verdict = if ratios_all_one && norms_shrink {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    report.notes.push(if report.verdict == Verdict::Pass {
        "Frechet differentiability fails: ||X^2||_p = ||X||_p along a vanishing sequence".into()
    } else {
        "expected counterexample signature not reproduced".into()
    });
    Ok(report)
}
