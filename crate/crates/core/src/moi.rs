//! Multiple operator integral engine.
//!
//! Evaluates the spectral-sum realization
//!
//! ```text
//! T(X_1,...,X_n) = sum_{i_0..i_n} f^[n](l_{i_0},...,l_{i_n})
//!                  P_{i_0} X_1 P_{i_1} ... X_n P_{i_n}
//! ```
//!
//! over cluster tuples of the (possibly distinct) base decompositions,
//! with divided differences memoized by the sorted tuple of cluster
//! representatives. Work is organized as: transform each perturbation into
//! the eigenbases of its neighboring operators once, fill a dense
//! divided-difference weight table over cluster tuples, then accumulate
//! the (n+1)-fold index sum in parallel over the outermost eigenindex with
//! a fixed inner order, which keeps results deterministic.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar_fn::{divided_difference, ScalarFunction};
use crate::spectral::{decompose, default_cluster_tol, HermitianOperator, SpectralData};
use crate::C64;

/// Default cost ceiling in scalar multiply-adds per call.
pub const DEFAULT_BUDGET: f64 = 1e9;

/// Cap on the dense divided-difference table size.
const MAX_TUPLE_TABLE: u64 = 1 << 26;

/// One MOI evaluation request: n perturbations sandwiched between n+1
/// base decompositions.
pub struct MoiRequest<'a> {
    pub f: &'a ScalarFunction,
    pub bases: Vec<&'a SpectralData>,
    pub perturbations: Vec<&'a DMatrix<C64>>,
}

impl<'a> MoiRequest<'a> {
    pub fn order(&self) -> usize {
        self.perturbations.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.order();
        if n == 0 {
            return Err(Error::DimensionMismatch(
                "at least one perturbation is required".into(),
            ));
        }
        if self.bases.len() != n + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} bases supplied for order {n}; need n + 1 = {}",
                self.bases.len(),
                n + 1
            )));
        }
        if n > self.f.max_order() {
            return Err(Error::OrderExceeded {
                requested: n,
                max: self.f.max_order(),
            });
        }
        let d = self.bases[0].dim();
        if self.bases.iter().any(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch(
                "bases disagree on dimension".into(),
            ));
        }
        if self
            .perturbations
            .iter()
            .any(|x| x.nrows() != d || x.ncols() != d)
        {
            return Err(Error::DimensionMismatch(
                "perturbation dimension differs from the bases".into(),
            ));
        }
        Ok(())
    }
}

/// MOI output with evaluation diagnostics.
#[derive(Clone, Debug)]
pub struct MultilinearResult {
    pub value: DMatrix<C64>,
    /// Number of cluster index tuples summed (product of cluster counts).
    pub tuple_count: u64,
    /// Divided-difference lookups served by the memo table.
    pub dd_cache_hits: u64,
}

/// Sorted-representative key for the divided-difference memo table.
fn memo_key(reps: &[f64]) -> Vec<u64> {
    let mut sorted = reps.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.into_iter().map(f64::to_bits).collect()
}

struct WeightTable {
    weights: Vec<C64>,
    strides: Vec<u64>,
    tuple_count: u64,
    cache_hits: u64,
}

/// Fills the dense weight table over cluster tuples, memoizing the
/// divided difference by sorted representative multiset.
fn fill_weights(f: &ScalarFunction, bases: &[&SpectralData]) -> Result<WeightTable> {
    let levels: Vec<Vec<f64>> = bases
        .iter()
        .map(|b| b.clusters().iter().map(|c| c.representative).collect())
        .collect();
    let mut tuple_count: u64 = 1;
    for l in &levels {
        tuple_count = tuple_count.saturating_mul(l.len() as u64);
    }
    if tuple_count > MAX_TUPLE_TABLE {
        return Err(Error::BudgetExceeded {
            estimated: tuple_count as f64,
            budget: MAX_TUPLE_TABLE as f64,
        });
    }
    let mut strides = vec![1u64; levels.len()];
    for j in (0..levels.len() - 1).rev() {
        strides[j] = strides[j + 1] * levels[j + 1].len() as u64;
    }

    let mut weights = vec![C64::new(0.0, 0.0); tuple_count as usize];
    let mut memo: HashMap<Vec<u64>, C64> = HashMap::new();
    let mut cache_hits = 0u64;
    let mut reps = vec![0.0_f64; levels.len()];

    // row-major tuple enumeration
    let mut idx = vec![0usize; levels.len()];
    for slot in weights.iter_mut() {
        for (j, &c) in idx.iter().enumerate() {
            reps[j] = levels[j][c];
        }
        let key = memo_key(&reps);
        let w = match memo.get(&key) {
            Some(&w) => {
                cache_hits += 1;
                w
            }
            None => {
                let w = divided_difference(f, &reps)?;
                memo.insert(key, w);
                w
            }
        };
        *slot = w;
        // advance mixed-radix counter
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < levels[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }

    Ok(WeightTable {
        weights,
        strides,
        tuple_count,
        cache_hits,
    })
}

#[allow(clippy::too_many_arguments)]
fn accumulate_row(
    level: usize,
    n: usize,
    i_prev: usize,
    widx: u64,
    prefix: C64,
    xt: &[DMatrix<C64>],
    cluster_of: &[&[usize]],
    strides: &[u64],
    weights: &[C64],
    row: &mut [C64],
) {
    let d = row.len();
    let x = &xt[level - 1];
    for i in 0..d {
        let p = prefix * x[(i_prev, i)];
        if p.norm_sqr() == 0.0 {
            continue;
        }
        let w = widx + cluster_of[level][i] as u64 * strides[level];
        if level == n {
            row[i] += weights[w as usize] * p;
        } else {
            accumulate_row(level + 1, n, i, w, p, xt, cluster_of, strides, weights, row);
        }
    }
}

fn evaluate_with_table(
    table: &WeightTable,
    bases: &[&SpectralData],
    xt: &[DMatrix<C64>],
) -> DMatrix<C64> {
    let n = xt.len();
    let d = bases[0].dim();
    let cluster_of: Vec<&[usize]> = bases.iter().map(|b| b.cluster_of()).collect();
    let rows: Vec<Vec<C64>> = (0..d)
        .into_par_iter()
        .map(|i0| {
            let mut row = vec![C64::new(0.0, 0.0); d];
            let widx = cluster_of[0][i0] as u64 * table.strides[0];
            accumulate_row(
                1,
                n,
                i0,
                widx,
                C64::new(1.0, 0.0),
                xt,
                &cluster_of,
                &table.strides,
                &table.weights,
                &mut row,
            );
            row
        })
        .collect();
    let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
    bases[0].basis() * m * bases[n].basis().adjoint()
}

/// T^{A_0,...,A_n}_{f^[n]}(X_1,...,X_n) with the default cost budget.
pub fn moi_evaluate(req: &MoiRequest) -> Result<MultilinearResult> {
    moi_evaluate_with(req, DEFAULT_BUDGET)
}

/// MOI evaluation with an explicit multiply-add budget.
pub fn moi_evaluate_with(req: &MoiRequest, budget: f64) -> Result<MultilinearResult> {
    req.validate()?;
    let n = req.order();
    let d = req.bases[0].dim();
    let estimated = (d as f64).powi(n as i32 + 1);
    if estimated > budget {
        return Err(Error::BudgetExceeded { estimated, budget });
    }
    let table = fill_weights(req.f, &req.bases)?;
    let xt: Vec<DMatrix<C64>> = (0..n)
        .map(|j| req.bases[j].basis().adjoint() * req.perturbations[j] * req.bases[j + 1].basis())
        .collect();
    let value = evaluate_with_table(&table, &req.bases, &xt);
    Ok(MultilinearResult {
        value,
        tuple_count: table.tuple_count,
        dd_cache_hits: table.cache_hits,
    })
}

/// All permutations of 0..n by Heap's algorithm; n <= 5 in every use.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(n, &mut items, &mut out);
    out
}

/// Gamma(f)[X_1,...,X_n]: the sum over all n! permutations of
/// `moi_evaluate` with identical bases A. The weight table and eigenbasis
/// transforms are shared across permutations.
pub fn moi_symmetrized(
    f: &ScalarFunction,
    a: &SpectralData,
    xs: &[&DMatrix<C64>],
) -> Result<MultilinearResult> {
    moi_symmetrized_with(f, a, xs, DEFAULT_BUDGET)
}

pub fn moi_symmetrized_with(
    f: &ScalarFunction,
    a: &SpectralData,
    xs: &[&DMatrix<C64>],
    budget: f64,
) -> Result<MultilinearResult> {
    let n = xs.len();
    if n > 5 {
        return Err(Error::DimensionMismatch(format!(
            "symmetrized MOI supports n <= 5, got {n}"
        )));
    }
    let bases: Vec<&SpectralData> = vec![a; n + 1];
    let req = MoiRequest {
        f,
        bases: bases.clone(),
        perturbations: xs.to_vec(),
    };
    req.validate()?;
    let d = a.dim();
    let n_fact: f64 = (1..=n).fold(1.0, |acc, k| acc * k as f64);
    let estimated = n_fact * (d as f64).powi(n as i32 + 1);
    if estimated > budget {
        return Err(Error::BudgetExceeded { estimated, budget });
    }

    let table = fill_weights(f, &bases)?;
    // one transform per distinct perturbation slot; bases all share U
    let xt_all: Vec<DMatrix<C64>> = xs
        .iter()
        .map(|x| a.basis().adjoint() * *x * a.basis())
        .collect();

    let d_ = a.dim();
    let mut value = DMatrix::<C64>::zeros(d_, d_);
    for perm in permutations(n) {
        let xt: Vec<DMatrix<C64>> = perm.iter().map(|&j| xt_all[j].clone()).collect();
        value += evaluate_with_table(&table, &bases, &xt);
    }
    Ok(MultilinearResult {
        value,
        tuple_count: table.tuple_count,
        dd_cache_hits: table.cache_hits,
    })
}

/// T^{A+X,A,...,A}_{f^[n]}(X,...,X): the exact order-n Taylor remainder.
pub fn taylor_remainder(
    f: &ScalarFunction,
    n: usize,
    a: &HermitianOperator,
    x: &HermitianOperator,
) -> Result<DMatrix<C64>> {
    let perturbed = a.add(x);
    let first = decompose(&perturbed, default_cluster_tol(&perturbed))?;
    let rest = decompose(a, default_cluster_tol(a))?;
    let mut bases: Vec<&SpectralData> = Vec::with_capacity(n + 1);
    bases.push(&first);
    for _ in 0..n {
        bases.push(&rest);
    }
    let req = MoiRequest {
        f,
        bases,
        perturbations: vec![x.matrix(); n],
    };
    Ok(moi_evaluate(&req)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_fn::builtins;
    use crate::spectral::random_hermitian;

    fn sd(a: &HermitianOperator) -> SpectralData {
        decompose(a, default_cluster_tol(a)).unwrap()
    }

    fn rel_err(got: &DMatrix<C64>, want: &DMatrix<C64>) -> f64 {
        (got - want).norm() / (1.0 + want.norm())
    }

    #[test]
    fn first_order_square_is_anticommutator() {
        let a = random_hermitian(1, 4, None);
        let x = random_hermitian(2, 4, None);
        let base = sd(&a);
        let req = MoiRequest {
            f: &builtins::monomial(2),
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        let got = moi_evaluate(&req).unwrap();
        let want = a.matrix() * x.matrix() + x.matrix() * a.matrix();
        assert!(rel_err(&got.value, &want) < 1e-10);
        assert_eq!(got.tuple_count, (base.cluster_count() as u64).pow(2));
    }

    #[test]
    fn first_order_exp_daleckii_krein_entries() {
        // bases diag(0, ln 2), X the flip: off-diagonal entries are
        // (e^{ln 2} - e^0)/ln 2 = 1/ln 2, diagonal entries are zero
        let a = HermitianOperator::from_diagonal(&[0.0, std::f64::consts::LN_2]);
        let x = HermitianOperator::from_real_rows(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let base = sd(&a);
        let req = MoiRequest {
            f: &builtins::exp(),
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        let got = moi_evaluate(&req).unwrap().value;
        let expect = 1.0 / std::f64::consts::LN_2; // 1.442695...
        assert!((got[(0, 1)].re - expect).abs() < 1e-12, "{}", got[(0, 1)]);
        assert!((got[(1, 0)].re - expect).abs() < 1e-12);
        assert!(got[(0, 0)].norm() < 1e-12 && got[(1, 1)].norm() < 1e-12);

        // independent finite-difference oracle: d/dt exp(A + tX) at 0
        let h = 1e-6;
        let ep = crate::spectral::apply_function(&builtins::exp(), &a.add_scaled(h, &x)).unwrap();
        let em = crate::spectral::apply_function(&builtins::exp(), &a.add_scaled(-h, &x)).unwrap();
        let fd = (ep - em) / C64::new(2.0 * h, 0.0);
        assert!(rel_err(&got, &fd) < 1e-8);
    }

    #[test]
    fn commuting_perturbation_collapses_to_derivative() {
        // X diagonal commutes with diagonal A: T(X) = f'(A) X
        let a = HermitianOperator::from_diagonal(&[0.3, 1.1, -0.4]);
        let x = HermitianOperator::from_diagonal(&[1.0, -2.0, 0.5]);
        let base = sd(&a);
        let f = builtins::sin();
        let req = MoiRequest {
            f: &f,
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        let got = moi_evaluate(&req).unwrap().value;
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.3_f64.cos() * 1.0, 0.0),
            C64::new(1.1_f64.cos() * -2.0, 0.0),
            C64::new((-0.4_f64).cos() * 0.5, 0.0),
        ]));
        assert!(rel_err(&got, &want) < 1e-9);
    }

    #[test]
    fn symmetrized_cube_second_order() {
        let a = random_hermitian(5, 4, None);
        let x = random_hermitian(6, 4, None);
        let base = sd(&a);
        let got = moi_symmetrized(&builtins::monomial(3), &base, &[x.matrix(), x.matrix()])
            .unwrap()
            .value;
        let (am, xm) = (a.matrix(), x.matrix());
        let want = (am * xm * xm + xm * am * xm + xm * xm * am) * C64::new(2.0, 0.0);
        assert!(rel_err(&got, &want) < 1e-10);
    }

    #[test]
    fn symmetrized_square_mixed_directions() {
        // f = t^2: f^[2] is identically 1 only through its collapse; the
        // symmetrized second order is X1 X2 + X2 X1
        let a = random_hermitian(7, 3, None);
        let x1 = random_hermitian(8, 3, None);
        let x2 = random_hermitian(9, 3, None);
        let base = sd(&a);
        let got = moi_symmetrized(&builtins::monomial(2), &base, &[x1.matrix(), x2.matrix()])
            .unwrap()
            .value;
        let want = x1.matrix() * x2.matrix() + x2.matrix() * x1.matrix();
        assert!(rel_err(&got, &want) < 1e-10);
    }

    #[test]
    fn symmetrized_order_one_equals_plain() {
        let a = random_hermitian(10, 5, None);
        let x = random_hermitian(11, 5, None);
        let base = sd(&a);
        let f = builtins::runge();
        let sym = moi_symmetrized(&f, &base, &[x.matrix()]).unwrap().value;
        let req = MoiRequest {
            f: &f,
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        let plain = moi_evaluate(&req).unwrap().value;
        assert_eq!(sym, plain);
    }

    #[test]
    fn taylor_remainder_cube_is_x_cubed() {
        let a = random_hermitian(12, 4, None);
        let x = random_hermitian(13, 4, None);
        let got = taylor_remainder(&builtins::monomial(3), 3, &a, &x).unwrap();
        let want = x.matrix() * x.matrix() * x.matrix();
        assert!(rel_err(&got, &want) < 1e-10);
    }

    #[test]
    fn taylor_remainder_zero_perturbation() {
        let a = random_hermitian(14, 3, None);
        let z = HermitianOperator::from_diagonal(&[0.0, 0.0, 0.0]);
        let got = taylor_remainder(&builtins::sin(), 2, &a, &z).unwrap();
        assert!(got.norm() < 1e-12);
    }

    #[test]
    fn taylor_remainder_sin_second_order_rearrangement() {
        // T^{A+X,A,A}(X,X) = sin(A+X) - sin(A) - Gamma(sin)[X]
        let a = HermitianOperator::from_diagonal(&[0.0, 1.0]);
        let x = random_hermitian(20, 2, None).scale(0.05);
        let f = builtins::sin();
        let rem = taylor_remainder(&f, 2, &a, &x).unwrap();
        let base = sd(&a);
        let first = moi_symmetrized(&f, &base, &[x.matrix()]).unwrap().value;
        let fat = crate::spectral::apply_function(&f, &a.add(&x)).unwrap();
        let fa = crate::spectral::apply_function(&f, &a).unwrap();
        let want = fat - fa - first;
        assert!((rem - &want).norm() < 1e-8 * (1.0 + want.norm()));
    }

    #[test]
    fn budget_guard_fires() {
        let a = random_hermitian(15, 6, None);
        let x = random_hermitian(16, 6, None);
        let base = sd(&a);
        let req = MoiRequest {
            f: &builtins::sin(),
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        assert!(matches!(
            moi_evaluate_with(&req, 10.0),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_detected() {
        let a = random_hermitian(17, 3, None);
        let x = random_hermitian(18, 4, None);
        let base = sd(&a);
        let req = MoiRequest {
            f: &builtins::sin(),
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        assert!(matches!(
            moi_evaluate(&req),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn cache_reuses_repeated_cluster_tuples() {
        // diagonal with a repeated eigenvalue: plenty of repeated sorted
        // representative multisets across tuples
        let a = HermitianOperator::from_diagonal(&[1.0, 1.0 + 1e-12, 2.0, 3.0]);
        let x = random_hermitian(19, 4, None);
        let base = decompose(&a, 1e-8).unwrap();
        let req = MoiRequest {
            f: &builtins::sin(),
            bases: vec![&base, &base],
            perturbations: vec![x.matrix()],
        };
        let res = moi_evaluate(&req).unwrap();
        assert_eq!(res.tuple_count, 9); // 3 clusters squared
        assert!(res.dd_cache_hits >= 3); // symmetric pairs collapse
    }
}
