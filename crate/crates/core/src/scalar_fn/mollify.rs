//! Mollification: convolution against a rescaled smooth bump.
//!
//! The bump is phi(t) = c exp(-1/(1-t^2)) on (-1,1), zero elsewhere, with c
//! fixed once so the bump has unit mass. phi_eps(t) = phi(t/eps)/eps is
//! supported in (-eps, eps). Convolution is evaluated by composite Simpson
//! quadrature over [t-eps, t+eps]; for derivative orders the base function
//! cannot supply, the derivative is moved onto the kernel.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::piecewise::Poly;
use super::{Evaluator, ScalarFunction, SmoothnessClass};
use crate::error::{Error, Result};
use crate::scalar_fn::quad;
use crate::C64;

/// Default resolution of the convolution quadrature.
pub const DEFAULT_QUADRATURE_NODES: usize = 2049;

/// Highest derivative order placed on the kernel; mollification raises
/// `max_order` by this amount.
pub const KERNEL_DERIV_MAX: usize = 4;

/// The fixed smooth bump, rescaled by epsilon.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct Mollifier {
    pub epsilon: f64,
    pub quadrature_nodes: usize,
}

impl Mollifier {
    pub fn new(epsilon: f64) -> Result<Self> {
        Self::with_nodes(epsilon, DEFAULT_QUADRATURE_NODES)
    }

    pub fn with_nodes(epsilon: f64, quadrature_nodes: usize) -> Result<Self> {
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(Error::NonpositiveEpsilon(epsilon));
        }
        Ok(Mollifier {
            epsilon,
            quadrature_nodes,
        })
    }

    /// phi_eps(t) = phi(t/eps)/eps.
    pub fn kernel(&self, t: f64) -> f64 {
        bump(t / self.epsilon) / self.epsilon
    }

    /// Numerical mass of phi_eps over [-eps, eps]; 1 up to quadrature error.
    pub fn mass(&self) -> f64 {
        let eps = self.epsilon;
        quad::adaptive_simpson(&|t| self.kernel(t), -eps, eps, 1e-13)
    }
}

/// Normalized bump phi(t) = c exp(-1/(1-t^2)) on (-1,1).
pub fn bump(t: f64) -> f64 {
    normalization() * raw_bump(t)
}

/// j-th derivative of the normalized bump, exact rational-times-bump form.
pub fn bump_derivative(j: usize, t: f64) -> f64 {
    if j == 0 {
        return bump(t);
    }
    let numerators = kernel_numerators();
    assert!(
        j < numerators.len(),
        "kernel derivative order {j} exceeds supported {KERNEL_DERIV_MAX}"
    );
    let s = 1.0 - t * t;
    if s <= 1e-30 {
        return 0.0;
    }
    let b = bump(t);
    if b == 0.0 {
        return 0.0;
    }
    numerators[j].eval(t) / s.powi(2 * j as i32) * b
}

fn raw_bump(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 1e-12 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn normalization() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        let mass = quad::adaptive_simpson(&raw_bump, -1.0, 1.0, 1e-14);
        1.0 / mass
    })
}

/// Numerator polynomials N_j with phi^(j) = N_j(t) (1-t^2)^(-2j) phi(t).
///
/// N_{j+1} = N_j' (1-t^2)^2 + 4 j t N_j (1-t^2) - 2 t N_j.
fn kernel_numerators() -> &'static Vec<Poly> {
    static NUMS: OnceLock<Vec<Poly>> = OnceLock::new();
    NUMS.get_or_init(|| {
        let one_minus_t2 = Poly(vec![1.0, 0.0, -1.0]);
        let sq = one_minus_t2.mul(&one_minus_t2);
        let two_t = Poly(vec![0.0, 2.0]);
        let mut nums = vec![Poly(vec![1.0])];
        for j in 0..KERNEL_DERIV_MAX {
            let n = &nums[j];
            let term1 = n.derivative().mul(&sq);
            let term2 = two_t.mul(n).mul(&one_minus_t2).scale(2.0 * j as f64);
            let term3 = two_t.mul(n).scale(-1.0);
            nums.push(term1.add(&term2).add(&term3));
        }
        nums
    })
}

struct MollifiedEval {
    base: ScalarFunction,
    epsilon: f64,
    nodes: usize,
}

impl MollifiedEval {
    /// Positive-kernel quadrature, self-normalized so the discrete weights
    /// sum to one; reproduces affine functions to rounding and keeps the
    /// sup bound |f_eps - f| <= sup_{|s|<eps} |f(.-s) - f(.)| exact for the
    /// discrete measure.
    fn convolve(&self, g_order: usize, t: f64) -> C64 {
        let eps = self.epsilon;
        let n = self.nodes.max(3) | 1;
        let h = 2.0 * eps / (n - 1) as f64;
        let mut num = C64::new(0.0, 0.0);
        let mut den = 0.0;
        for i in 0..n {
            let s = -eps + h * i as f64;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let k = w * raw_bump(s / eps);
            if k == 0.0 {
                continue;
            }
            den += k;
            num += self.base.raw_eval(g_order, t - s) * k;
        }
        num / den
    }

    /// Derivative moved onto the kernel: int phi_eps^(j)(s) g(t-s) ds.
    fn convolve_kernel_deriv(&self, j: usize, g_order: usize, t: f64) -> C64 {
        let eps = self.epsilon;
        let scale = eps.powi(-(1 + j as i32));
        quad::simpson_c(
            |s| self.base.raw_eval(g_order, t - s) * (bump_derivative(j, s / eps) * scale),
            -eps,
            eps,
            self.nodes,
        )
    }
}

impl Evaluator for MollifiedEval {
    fn eval(&self, order: usize, t: f64) -> C64 {
        let base_max = self.base.max_order();
        if order <= base_max {
            self.convolve(order, t)
        } else {
            let j = order - base_max;
            self.convolve_kernel_deriv(j, base_max, t)
        }
    }
}

/// phi_eps * f with the default quadrature resolution.
pub fn mollify(f: &ScalarFunction, epsilon: f64) -> Result<ScalarFunction> {
    mollify_with(f, Mollifier::new(epsilon)?)
}

/// phi_eps * f with an explicit mollifier.
pub fn mollify_with(f: &ScalarFunction, mollifier: Mollifier) -> Result<ScalarFunction> {
    let max_order = f.max_order() + KERNEL_DERIV_MAX;
    let eval = MollifiedEval {
        base: f.clone(),
        epsilon: mollifier.epsilon,
        nodes: mollifier.quadrature_nodes,
    };
    Ok(ScalarFunction::from_parts(
        format!("mollified({},eps={})", f.id(), mollifier.epsilon),
        max_order,
        max_order,
        SmoothnessClass::CnbUniform,
        f.lipschitz_bound(),
        // |phi_eps * g| <= sup|g| transfers any declared derivative bound.
        f.bound_rule(),
        f.bound_order(),
        Arc::new(eval),
    ))
}
