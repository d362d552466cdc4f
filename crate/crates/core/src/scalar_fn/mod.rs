//! Scalar calculus backbone: functions with evaluable derivatives,
//! confluent divided differences, mollification, and uniform-continuity
//! diagnostics.

pub mod builtins;
pub mod fresnel;
pub mod mollify;
pub mod piecewise;
pub mod quad;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

pub use mollify::{mollify, mollify_with, Mollifier, DEFAULT_QUADRATURE_NODES};

/// Declared smoothness of a scalar function. Classes are declared when a
/// function is constructed and probed by the experiment layer, never
/// inferred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SmoothnessClass {
    /// Derivatives 1..=smooth_order bounded and the top one uniformly
    /// continuous.
    CnbUniform,
    /// Derivatives 1..=smooth_order bounded, top derivative not uniformly
    /// continuous.
    CnbOnly,
    /// Lipschitz continuous only.
    LipschitzOnly,
}

impl fmt::Display for SmoothnessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SmoothnessClass::CnbUniform => "C^n_b with uniformly continuous top derivative",
            SmoothnessClass::CnbOnly => "C^n_b only",
            SmoothnessClass::LipschitzOnly => "Lipschitz only",
        };
        f.write_str(s)
    }
}

/// Declared sup bound on |f^(m)| for 1 <= m <= bound_order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivBound {
    None,
    /// One constant covering every order up to bound_order.
    Uniform(f64),
    /// m! covers order m (rational functions with poles at distance >= 1).
    Factorial,
}

/// Evaluation backend: `eval(m, t)` returns f^(m)(t). Implementations may
/// assume `m` was gated against `max_order` by the caller.
pub trait Evaluator: Send + Sync {
    fn eval(&self, order: usize, t: f64) -> C64;
}

/// A scalar function f with evaluable derivatives up to `max_order` and a
/// declared smoothness class.
#[derive(Clone)]
pub struct ScalarFunction {
    id: String,
    max_order: usize,
    smooth_order: usize,
    class: SmoothnessClass,
    lipschitz_bound: Option<f64>,
    bound: DerivBound,
    bound_order: usize,
    evaluator: Arc<dyn Evaluator>,
}

impl fmt::Debug for ScalarFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarFunction")
            .field("id", &self.id)
            .field("max_order", &self.max_order)
            .field("smooth_order", &self.smooth_order)
            .field("class", &self.class)
            .finish()
    }
}

impl ScalarFunction {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        id: String,
        max_order: usize,
        smooth_order: usize,
        class: SmoothnessClass,
        lipschitz_bound: Option<f64>,
        bound: DerivBound,
        bound_order: usize,
        evaluator: Arc<dyn Evaluator>,
    ) -> Self {
        ScalarFunction {
            id,
            max_order,
            smooth_order,
            class,
            lipschitz_bound,
            bound,
            bound_order,
            evaluator,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Highest derivative order this function can evaluate.
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Largest n for which the function is declared C^n_b.
    pub fn smooth_order(&self) -> usize {
        self.smooth_order
    }

    pub fn smoothness_class(&self) -> SmoothnessClass {
        self.class
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.lipschitz_bound
    }

    pub(crate) fn bound_rule(&self) -> DerivBound {
        self.bound
    }

    pub(crate) fn bound_order(&self) -> usize {
        self.bound_order
    }

    /// Declared sup bound on |f^(m)|, when one is available.
    pub fn derivative_bound(&self, m: usize) -> Option<f64> {
        if m == 0 || m > self.bound_order {
            return None;
        }
        match self.bound {
            DerivBound::None => None,
            DerivBound::Uniform(b) => Some(b),
            DerivBound::Factorial => Some(factorial(m)),
        }
    }

    /// True when the function is declared at least C^n_b.
    pub fn is_cnb(&self, n: usize) -> bool {
        self.class != SmoothnessClass::LipschitzOnly && self.smooth_order >= n
    }

    /// True when declared C^n_b with uniformly continuous f^(n).
    pub fn is_cnb_uniform(&self, n: usize) -> bool {
        self.class == SmoothnessClass::CnbUniform && self.smooth_order >= n
    }

    /// f^(m)(t).
    pub fn eval(&self, m: usize, t: f64) -> Result<C64> {
        if m > self.max_order {
            return Err(Error::OrderExceeded {
                requested: m,
                max: self.max_order,
            });
        }
        Ok(self.evaluator.eval(m, t))
    }

    /// Evaluation without the order gate; callers gate once up front.
    pub(crate) fn raw_eval(&self, m: usize, t: f64) -> C64 {
        debug_assert!(m <= self.max_order);
        self.evaluator.eval(m, t)
    }

    /// Pointwise difference self - other. Orders and declared smoothness
    /// drop to the weaker of the two operands.
    pub fn subtract(&self, other: &ScalarFunction) -> ScalarFunction {
        let max_order = self.max_order.min(other.max_order);
        let smooth_order = self.smooth_order.min(other.smooth_order);
        let class = weaker_class(self.class, other.class);
        let lipschitz = match (self.lipschitz_bound, other.lipschitz_bound) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let bound_order = self.bound_order.min(other.bound_order);
        let bound = match (self.bound, other.bound) {
            (DerivBound::Uniform(a), DerivBound::Uniform(b)) => DerivBound::Uniform(a + b),
            _ => DerivBound::None,
        };
        ScalarFunction {
            id: format!("({})-({})", self.id, other.id),
            max_order,
            smooth_order,
            class,
            lipschitz_bound: lipschitz,
            bound,
            bound_order,
            evaluator: Arc::new(DifferenceEval {
                a: self.clone(),
                b: other.clone(),
            }),
        }
    }
}

fn weaker_class(a: SmoothnessClass, b: SmoothnessClass) -> SmoothnessClass {
    use SmoothnessClass::*;
    match (a, b) {
        (LipschitzOnly, _) | (_, LipschitzOnly) => LipschitzOnly,
        (CnbOnly, _) | (_, CnbOnly) => CnbOnly,
        _ => CnbUniform,
    }
}

struct DifferenceEval {
    a: ScalarFunction,
    b: ScalarFunction,
}

impl Evaluator for DifferenceEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        self.a.raw_eval(order, t) - self.b.raw_eval(order, t)
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

/// f^(m)(t); the free-function form of [`ScalarFunction::eval`].
pub fn eval_derivative(f: &ScalarFunction, m: usize, t: f64) -> Result<C64> {
    f.eval(m, t)
}

/// Confluent divided difference f^[k] over `nodes` (k = nodes.len() - 1).
///
/// Nodes are sorted and the Newton table is filled bottom-up; any cell
/// whose node range is tighter than tau_dd = 1e-6 (1 + max|node|) switches
/// to the confluent value f^(j)(mean)/j!, which keeps near-coincident
/// nodes away from catastrophic cancellation. The sorted evaluation makes
/// the result exactly permutation invariant.
pub fn divided_difference(f: &ScalarFunction, nodes: &[f64]) -> Result<C64> {
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let k = nodes.len() - 1;
    if k > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: k,
            max: f.max_order(),
        });
    }
    let mut xs = nodes.to_vec();
    xs.sort_by(f64::total_cmp);
    let scale = xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let tau = 1e-6 * (1.0 + scale);

    let mut col: Vec<C64> = xs.iter().map(|&x| f.raw_eval(0, x)).collect();
    for j in 1..=k {
        let mut next = Vec::with_capacity(k + 1 - j);
        for i in 0..=(k - j) {
            let span = xs[i + j] - xs[i];
            let v = if span < tau {
                let mean = xs[i..=i + j].iter().sum::<f64>() / (j + 1) as f64;
                f.raw_eval(j, mean) / factorial(j)
            } else {
                (col[i + 1] - col[i]) / span
            };
            next.push(v);
        }
        col = next;
    }
    Ok(col[0])
}

/// Grid approximation of sup over |s-r| < eta of |f^(m)(s) - f^(m)(r)|.
pub fn uc_modulus(f: &ScalarFunction, m: usize, eta: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    assert!(eta > 0.0, "uc_modulus requires eta > 0");
    if m > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: m,
            max: f.max_order(),
        });
    }
    let mut pts: Vec<f64> = grid.to_vec();
    pts.sort_by(f64::total_cmp);
    let vals: Vec<C64> = pts.par_iter().map(|&x| f.raw_eval(m, x)).collect();
    let sup = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut local = 0.0_f64;
            for j in i + 1..pts.len() {
                if pts[j] - pts[i] >= eta {
                    break;
                }
                local = local.max((vals[j] - vals[i]).norm());
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup)
}

/// Grid sup of |f^(m)|; the auditable stand-in for a true sup norm.
pub fn grid_sup(f: &ScalarFunction, m: usize, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if m > f.max_order() {
        return Err(Error::OrderExceeded {
            requested: m,
            max: f.max_order(),
        });
    }
    Ok(grid
        .par_iter()
        .map(|&x| f.raw_eval(m, x).norm())
        .reduce(|| 0.0, f64::max))
}

/// Uniform grid including both endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}
