//! Destructive kernel orthogonal matching pursuit.
//!
//! Given a reference function `h_ref` with dictionary `D_ref`, KOMP repeatedly
//! removes the element whose removal costs the least, refitting the surviving
//! weights by least squares against `h_ref` (never against the partially
//! pruned iterate), and stops before the Hilbert-norm error would exceed the
//! budget `epsilon`.
//!
//! The active dictionary is always a subset of `D_ref`, so every gram block is
//! a sub-matrix of one `M x M` gram and every residual can be written as a
//! coefficient vector over `D_ref`. Candidate errors are evaluated in that
//! residual form, which keeps them accurate when they are tiny compared to
//! `||h_ref||^2`.
//!
//! Each round factors the active gram `K = V diag(lambda) V^T` once, dropping
//! eigenvalues below `1e-10 lambda_max`. With `G` the resulting pseudo-inverse,
//! `P` the projector onto the dropped directions and `w` the minimum-norm
//! weights of the current iterate, the refit after dropping element `j` is
//! `w - G_{.j} w_j / G_jj` when `P_jj = 0` (the standard leave-one-out
//! identity), and `w - P_{.j} w_j / P_jj` when `P_jj > 0`, i.e. when element
//! `j` is numerically a combination of the others and can go for free.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::kernel::RkhsFunction;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const PINV_RTOL: f64 = 1e-10;

/// `P_jj` above this marks element `j` as redundant.
const LEVERAGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    pub pruned: RkhsFunction,
    /// `||pruned - reference||_H`.
    pub final_error: f64,
    pub removed: usize,
    /// Reference indices in the order they were removed.
    pub removal_order: Vec<usize>,
    /// Reference indices of the surviving elements, in dictionary order.
    pub kept: Vec<usize>,
}

struct Candidate {
    error_sq: f64,
    weights: DMatrix<f64>,
}

struct Pruner<'a> {
    reference: &'a RkhsFunction,
    gram: DMatrix<f64>,
    w_ref: DMatrix<f64>,
    active: Vec<usize>,
    weights: DMatrix<f64>,
    error_sq: f64,
}

impl<'a> Pruner<'a> {
    fn new(reference: &'a RkhsFunction) -> Self {
        let w_ref = reference.weight_matrix();
        Self {
            reference,
            gram: reference.gram(),
            active: (0..reference.len()).collect(),
            weights: w_ref.clone(),
            w_ref,
            error_sq: 0.0,
        }
    }

    fn sub_gram(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.gram[(rows[a], cols[b])])
    }

    /// `||sum_k w_k k(s_{idx_k}, .) - h_ref||^2` evaluated on reference coefficients.
    fn residual_error_sq(&self, idx: &[usize], weights: &DMatrix<f64>) -> Result<f64> {
        let mut r = -self.w_ref.clone();
        for (row, &j) in idx.iter().enumerate() {
            let mut dst = r.row_mut(j);
            dst += weights.row(row);
        }
        let q = (r.transpose() * &self.gram * &r).trace();
        if q >= 0.0 {
            Ok(q)
        } else if q >= -1e-9 {
            Ok(0.0)
        } else {
            Err(Error::NegativeNorm(q))
        }
    }

    fn without(&self, pos: usize) -> Vec<usize> {
        let mut idx = self.active.clone();
        idx.remove(pos);
        idx
    }

    /// Leave-one-out candidates for every active position.
    fn candidates(&self) -> Result<Vec<Candidate>> {
        let m = self.active.len();
        let eig = SymmetricEigen::new(self.sub_gram(&self.active, &self.active));
        let cut = PINV_RTOL * eig.eigenvalues.max().max(0.0);
        let kept: Vec<usize> = (0..m).filter(|&k| eig.eigenvalues[k] > cut && eig.eigenvalues[k] > 0.0).collect();
        let v = DMatrix::from_fn(m, kept.len(), |i, k| eig.eigenvectors[(i, kept[k])]);
        let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            kept.len(),
            kept.iter().map(|&k| 1.0 / eig.eigenvalues[k]),
        ));
        let g = &v * inv * v.transpose();
        let range = &v * v.transpose();
        let null = DMatrix::identity(m, m) - &range;
        let w = &range * &self.weights;
        (0..m)
            .map(|j| {
                let wj = w.row(j).into_owned();
                let refit = |col: nalgebra::DVector<f64>, pivot: f64| -> Result<Candidate> {
                    let weights = (&w - (col / pivot) * &wj).remove_row(j);
                    let error_sq = self.residual_error_sq(&self.without(j), &weights)?;
                    Ok(Candidate { error_sq, weights })
                };
                let mut best = refit(g.column(j).into_owned(), g[(j, j)])?;
                if null[(j, j)] > LEVERAGE_TOL {
                    let alt = refit(null.column(j).into_owned(), null[(j, j)])?;
                    if alt.error_sq < best.error_sq {
                        best = alt;
                    }
                }
                Ok(best)
            })
            .collect()
    }

    fn remove(&mut self, pos: usize, cand: Candidate) {
        self.active.remove(pos);
        self.error_sq = cand.error_sq;
        self.weights = cand.weights;
    }

    fn current(&self) -> RkhsFunction {
        self.reference.with_subset(&self.active, &self.weights)
    }
}

fn argmin(errors: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    errors.enumerate().fold(None, |best, (j, e)| match best {
        Some((_, b)) if b <= e => best,
        _ => Some((j, e)),
    })
}

/// Minimum-norm solution of `k x = rhs` with eigenvalues below
/// `PINV_RTOL * lambda_max` discarded.
pub fn pinv_solve(k: DMatrix<f64>, rhs: &DMatrix<f64>) -> DMatrix<f64> {
    if k.nrows() == 0 {
        return DMatrix::zeros(0, rhs.ncols());
    }
    let eig = SymmetricEigen::new(k);
    let cut = PINV_RTOL * eig.eigenvalues.max().max(0.0);
    let inv = eig.eigenvalues.map(|l| if l > cut && l > 0.0 { 1.0 / l } else { 0.0 });
    let proj = eig.eigenvectors.transpose() * rhs;
    let scaled = DMatrix::from_diagonal(&inv) * proj;
    &eig.eigenvectors * scaled
}

/// Squared error of the best approximation of `reference` that omits element
/// `j`, with the refit weights of the remaining elements (in order).
pub fn leave_one_out_error(reference: &RkhsFunction, j: usize) -> Result<(f64, Vec<Vec<f64>>)> {
    let m = reference.len();
    if j >= m {
        return Err(Error::IndexOutOfRange { index: j, len: m });
    }
    let pruner = Pruner::new(reference);
    let cand = pruner.candidates()?.swap_remove(j);
    let weights = cand
        .weights
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect();
    Ok((cand.error_sq.max(0.0), weights))
}

/// Greedy pruning of `reference` within Hilbert-norm budget `epsilon`.
///
/// Removal stops as soon as the cheapest candidate would push
/// `||pruned - reference||_H` above `epsilon`. Squared errors below
/// `(1e-12 ||reference||_H)^2` count as exact zeros, so exact duplicates and
/// zero-weight elements go even at `epsilon = 0`.
pub fn komp(reference: &RkhsFunction, epsilon: f64) -> Result<PruneResult> {
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("budget must be nonnegative, got {epsilon}")));
    }
    let mut pruner = Pruner::new(reference);
    let floor = 1e-24 * reference.hilbert_norm_sq()?.max(1.0);
    let threshold = epsilon * epsilon + floor;
    let mut removal_order = Vec::new();
    while !pruner.active.is_empty() {
        let cands = pruner.candidates()?;
        let Some((pos, err)) = argmin(cands.iter().map(|c| c.error_sq)) else {
            break;
        };
        if err > threshold {
            break;
        }
        let cand = cands.into_iter().nth(pos).expect("argmin index in range");
        removal_order.push(pruner.active[pos]);
        pruner.remove(pos, cand);
    }
    Ok(PruneResult {
        pruned: pruner.current(),
        final_error: pruner.error_sq.sqrt(),
        removed: removal_order.len(),
        removal_order,
        kept: pruner.active,
    })
}
