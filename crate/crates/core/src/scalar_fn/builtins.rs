//! Builtin scalar functions.
//!
//! Besides the smooth standards (polynomials, sin, cos, exp, the Runge
//! function 1/(1+t^2)) and |t|, the library carries two witnesses whose
//! top derivative is bounded but not uniformly continuous:
//!
//! - `fresnel`: f' = sin(t^2) with f its numerically evaluated
//!   antiderivative (order-1 witness);
//! - `bump_train(n)`: f^(n) is a train of unit-height polynomial bumps of
//!   width 1/k in alternating-sign pairs; lower derivatives stay bounded
//!   because the per-pair contributions are summable like 1/k^2.
//!
//! Smoothness classes are declarations: polynomials and exp are tagged as
//! smooth for use on the bounded spectral windows this crate works with,
//! even though their derivatives grow off any compact set.

use std::sync::Arc;

use super::fresnel::sin_sq_antiderivative;
use super::piecewise::{PiecewisePoly, Poly};
use super::{DerivBound, Evaluator, ScalarFunction, SmoothnessClass};
use crate::error::{Error, Result};
use crate::C64;

const ANALYTIC_MAX_ORDER: usize = 64;

fn real(v: f64) -> C64 {
    C64::new(v, 0.0)
}

struct SinEval;

impl Evaluator for SinEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        real(match order % 4 {
            0 => t.sin(),
            1 => t.cos(),
            2 => -t.sin(),
            _ => -t.cos(),
        })
    }
}

struct CosEval;

impl Evaluator for CosEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        real(match order % 4 {
            0 => t.cos(),
            1 => -t.sin(),
            2 => -t.cos(),
            _ => t.sin(),
        })
    }
}

struct ExpEval;

impl Evaluator for ExpEval {
    fn eval(&self, _order: usize, t: f64) -> C64 {
        real(t.exp())
    }
}

/// 1/(1+t^2) via the pole representation: f^(m)(t) = (-1)^(m+1) m! Im[(t+i)^-(m+1)].
struct RungeEval;

impl Evaluator for RungeEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        let z = C64::new(1.0, 0.0) / C64::new(t, 1.0);
        let w = z.powu(order as u32 + 1);
        let sign = if order.is_multiple_of(2) { -1.0 } else { 1.0 };
        real(sign * super::factorial(order) * w.im)
    }
}

struct AbsEval;

impl Evaluator for AbsEval {
    fn eval(&self, _order: usize, t: f64) -> C64 {
        real(t.abs())
    }
}

struct PolyEval {
    coeffs: Vec<f64>,
}

impl Evaluator for PolyEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        if order >= self.coeffs.len() {
            return real(0.0);
        }
        // Horner on the coefficient tail with falling-factorial weights.
        let mut acc = 0.0;
        for j in (order..self.coeffs.len()).rev() {
            let mut w = self.coeffs[j];
            for i in 0..order {
                w *= (j - i) as f64;
            }
            acc = acc * t + w;
        }
        real(acc)
    }
}

struct FresnelEval;

impl Evaluator for FresnelEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        real(match order {
            0 => sin_sq_antiderivative(t),
            1 => (t * t).sin(),
            _ => 2.0 * t * (t * t).cos(),
        })
    }
}

struct BumpTrainEval {
    levels: Vec<PiecewisePoly>, // levels[m] evaluates f^(m)
}

impl Evaluator for BumpTrainEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        real(self.levels[order].eval(t))
    }
}

/// Polynomial with ascending real coefficients.
pub fn polynomial(coeffs: &[f64]) -> ScalarFunction {
    let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let lipschitz = if degree <= 1 {
        Some(coeffs.get(1).copied().unwrap_or(0.0).abs())
    } else {
        None
    };
    let bound = if degree <= 1 {
        DerivBound::Uniform(coeffs.get(1).copied().unwrap_or(0.0).abs())
    } else {
        DerivBound::None
    };
    let id = format!(
        "poly[{}]",
        coeffs
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    ScalarFunction::from_parts(
        id,
        ANALYTIC_MAX_ORDER,
        ANALYTIC_MAX_ORDER,
        SmoothnessClass::CnbUniform,
        lipschitz,
        bound,
        ANALYTIC_MAX_ORDER,
        Arc::new(PolyEval {
            coeffs: coeffs.to_vec(),
        }),
    )
}

/// t^m.
pub fn monomial(m: usize) -> ScalarFunction {
    let mut coeffs = vec![0.0; m + 1];
    coeffs[m] = 1.0;
    let mut f = polynomial(&coeffs);
    f.id = format!("t^{m}");
    f
}

pub fn sin() -> ScalarFunction {
    ScalarFunction::from_parts(
        "sin".into(),
        ANALYTIC_MAX_ORDER,
        ANALYTIC_MAX_ORDER,
        SmoothnessClass::CnbUniform,
        Some(1.0),
        DerivBound::Uniform(1.0),
        ANALYTIC_MAX_ORDER,
        Arc::new(SinEval),
    )
}

pub fn cos() -> ScalarFunction {
    ScalarFunction::from_parts(
        "cos".into(),
        ANALYTIC_MAX_ORDER,
        ANALYTIC_MAX_ORDER,
        SmoothnessClass::CnbUniform,
        Some(1.0),
        DerivBound::Uniform(1.0),
        ANALYTIC_MAX_ORDER,
        Arc::new(CosEval),
    )
}

pub fn exp() -> ScalarFunction {
    ScalarFunction::from_parts(
        "exp".into(),
        ANALYTIC_MAX_ORDER,
        ANALYTIC_MAX_ORDER,
        SmoothnessClass::CnbUniform,
        None,
        DerivBound::None,
        0,
        Arc::new(ExpEval),
    )
}

/// 1/(1+t^2). |f^(m)| <= m! everywhere.
pub fn runge() -> ScalarFunction {
    ScalarFunction::from_parts(
        "runge".into(),
        ANALYTIC_MAX_ORDER,
        ANALYTIC_MAX_ORDER,
        SmoothnessClass::CnbUniform,
        Some(0.649_519_052_838_329), // 3 sqrt(3) / 8
        DerivBound::Factorial,
        ANALYTIC_MAX_ORDER,
        Arc::new(RungeEval),
    )
}

/// |t|, Lipschitz only.
pub fn abs() -> ScalarFunction {
    ScalarFunction::from_parts(
        "abs".into(),
        0,
        0,
        SmoothnessClass::LipschitzOnly,
        Some(1.0),
        DerivBound::None,
        0,
        Arc::new(AbsEval),
    )
}

/// Order-1 necessity witness: f' = sin(t^2), bounded but not uniformly
/// continuous; f'' is evaluable for diagnostics but unbounded, so the
/// declared smooth order stays 1.
pub fn fresnel() -> ScalarFunction {
    ScalarFunction::from_parts(
        "fresnel".into(),
        2,
        1,
        SmoothnessClass::CnbOnly,
        Some(1.0),
        DerivBound::Uniform(1.0),
        1,
        Arc::new(FresnelEval),
    )
}

/// Order-n necessity witness with 320 bump pairs, n in 1..=3.
pub fn bump_train(order: usize) -> ScalarFunction {
    bump_train_with(order, 320)
}

/// Bump-train witness: f^(order) is, for k = 1..=pairs, a +psi/-psi pair of
/// unit-height bumps of width 1/k starting at t = 4k, with the pair sign
/// alternating in k. psi(v) = 64 v^3 (1-v)^3 on [0,1]. Lower derivatives
/// follow by exact antidifferentiation and stay bounded: the first
/// antiderivative of each pair returns to zero, and the next accumulates
/// alternating steps of size O(1/k^2).
pub fn bump_train_with(order: usize, pairs: usize) -> ScalarFunction {
    assert!(
        (1..=3).contains(&order),
        "bump train witness supports orders 1..=3"
    );
    assert!(pairs >= 1);
    let psi = Poly(vec![0.0, 0.0, 0.0, 64.0, -192.0, 192.0, -64.0]);

    let mut breaks = Vec::new();
    let mut pieces = Vec::new();
    for k in 1..=pairs {
        let c = 4.0 * k as f64;
        let w = 1.0 / k as f64;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        // psi(u/w): coefficient j picks up w^-j
        let scaled: Vec<f64> = psi
            .0
            .iter()
            .enumerate()
            .map(|(j, &cj)| cj / w.powi(j as i32))
            .collect();
        let up = Poly(scaled.clone()).scale(sign);
        let down = Poly(scaled).scale(-sign);
        breaks.push(c);
        pieces.push(up);
        breaks.push(c + w);
        pieces.push(down);
        if k < pairs {
            breaks.push(c + 2.0 * w);
            pieces.push(Poly::zero());
        } else {
            breaks.push(c + 2.0 * w);
        }
    }
    let train = PiecewisePoly::new(breaks, pieces, Poly::zero());

    // tops[i] = i-fold antiderivative of the train
    let mut tops = vec![train];
    for _ in 0..order {
        let next = tops.last().unwrap().antiderivative();
        tops.push(next);
    }
    let levels: Vec<PiecewisePoly> = (0..=order).map(|m| tops[order - m].clone()).collect();

    ScalarFunction::from_parts(
        format!("bump_train[{order}]"),
        order,
        order,
        SmoothnessClass::CnbOnly,
        Some(2.0),
        DerivBound::Uniform(2.0),
        order,
        Arc::new(BumpTrainEval { levels }),
    )
}

/// Resolves a builtin by id; `params` feeds the parametric entries
/// ("poly" coefficients, "monomial" power, "bump_train" order).
pub fn from_id(id: &str, params: &[f64]) -> Result<ScalarFunction> {
    match id {
        "sin" => Ok(sin()),
        "cos" => Ok(cos()),
        "exp" => Ok(exp()),
        "runge" => Ok(runge()),
        "abs" => Ok(abs()),
        "fresnel" => Ok(fresnel()),
        "poly" => {
            if params.is_empty() {
                return Err(Error::SchemaViolation {
                    locator: "function.params".into(),
                    message: "poly requires at least one coefficient".into(),
                });
            }
            Ok(polynomial(params))
        }
        "monomial" => {
            let m = params.first().copied().unwrap_or(1.0);
            if m < 0.0 || m.fract() != 0.0 {
                return Err(Error::SchemaViolation {
                    locator: "function.params".into(),
                    message: format!("monomial power must be a nonnegative integer, got {m}"),
                });
            }
            Ok(monomial(m as usize))
        }
        "bump_train" => {
            let n = params.first().copied().unwrap_or(2.0);
            if !(1.0..=3.0).contains(&n) || n.fract() != 0.0 {
                return Err(Error::SchemaViolation {
                    locator: "function.params".into(),
                    message: format!("bump_train order must be 1, 2 or 3, got {n}"),
                });
            }
            Ok(bump_train(n as usize))
        }
        other => Err(Error::UnknownFunction(other.to_string())),
    }
}

/// Sorted list of builtin ids accepted by [`from_id`].
pub fn builtin_ids() -> &'static [&'static str] {
    &[
        "abs",
        "bump_train",
        "cos",
        "exp",
        "fresnel",
        "monomial",
        "poly",
        "runge",
        "sin",
    ]
}
