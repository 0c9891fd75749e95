//! Vector-valued RKHS functions built on a diagonal Gaussian kernel.
//!
//! The matrix-valued kernel is the scalar kernel times the identity on the
//! action coordinates, so every operation reduces to scalar gram matrices
//! applied to `p` weight columns.
//!
//! ```
//! use rkhs_pg::kernel::{KernelSpec, RkhsFunction};
//!
//! let kernel = KernelSpec::new(vec![0.15, 0.015]).unwrap();
//! let h = RkhsFunction::zero(kernel, 1)
//!     .add_scaled_kernel(&[0.65, -0.02], &[0.5])
//!     .unwrap()
//!     .add_scaled_kernel(&[-0.35, 0.02], &[-0.5])
//!     .unwrap();
//! assert_eq!(h.len(), 2);
//! assert!((h.evaluate(&[0.65, -0.02]).unwrap()[0] - 0.5).abs() < 0.2);
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Diagonal Gaussian kernel `exp(-0.5 * sum_i (x_i - y_i)^2 / b_i)`.
///
/// The bandwidths `b_i` are squared length-scales, so `diag(b)` plays the
/// role of the kernel covariance matrix. `k(x, x) = 1` for every `x`, which
/// gives every kernel section unit Hilbert norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KernelSpec {
    bandwidths: Vec<f64>,
}

impl KernelSpec {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::invalid("kernel needs at least one bandwidth"));
        }
        if let Some(b) = bandwidths.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {b}")));
        }
        Ok(Self { bandwidths })
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        check_dim(self.dim(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((a, b), w) in x.iter().zip(y).zip(&self.bandwidths) {
            let d = a - b;
            q += d * d / w;
        }
        (-0.5 * q).exp()
    }
}

impl TryFrom<Vec<f64>> for KernelSpec {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        KernelSpec::new(v)
    }
}

impl From<KernelSpec> for Vec<f64> {
    fn from(k: KernelSpec) -> Self {
        k.bandwidths
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Gram matrix with entry `(l, m) = k(d1[l], d2[m])`.
pub fn gram_matrix(spec: &KernelSpec, d1: &[Vec<f64>], d2: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    for c in d1.iter().chain(d2) {
        check_dim(spec.dim(), c.len())?;
    }
    Ok(DMatrix::from_fn(d1.len(), d2.len(), |l, m| {
        spec.eval_unchecked(&d1[l], &d2[m])
    }))
}

/// `h(.) = sum_j k(s_j, .) w_j` with centers `s_j` in R^n and weights `w_j` in R^p.
///
/// Centers and weights are stored row-major in flat buffers. Values are
/// immutable: every update returns a new function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionDoc", into = "FunctionDoc")]
pub struct RkhsFunction {
    kernel: KernelSpec,
    p: usize,
    centers: Vec<f64>,
    weights: Vec<f64>,
}

impl RkhsFunction {
    /// The zero function with action dimension `p`.
    pub fn zero(kernel: KernelSpec, p: usize) -> Self {
        assert!(p > 0, "action dimension must be positive");
        Self {
            kernel,
            p,
            centers: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn from_parts(
        kernel: KernelSpec,
        p: usize,
        centers: &[Vec<f64>],
        weights: &[Vec<f64>],
    ) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("action dimension must be positive"));
        }
        check_dim(centers.len(), weights.len())?;
        let mut h = Self::zero(kernel, p);
        for (c, w) in centers.iter().zip(weights) {
            h.push(c, w)?;
        }
        Ok(h)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.kernel.dim()
    }

    /// Action dimension `p`.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Model order `M`.
    pub fn len(&self) -> usize {
        self.weights.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn center(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.centers[j * n..(j + 1) * n]
    }

    pub fn weight(&self, j: usize) -> &[f64] {
        &self.weights[j * self.p..(j + 1) * self.p]
    }

    pub fn centers(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.centers.chunks_exact(self.n())
    }

    pub fn weights(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.weights.chunks_exact(self.p)
    }

    pub fn center_list(&self) -> Vec<Vec<f64>> {
        self.centers().map(<[f64]>::to_vec).collect()
    }

    pub fn weight_list(&self) -> Vec<Vec<f64>> {
        self.weights().map(<[f64]>::to_vec).collect()
    }

    fn push(&mut self, center: &[f64], coeff: &[f64]) -> Result<()> {
        check_dim(self.n(), center.len())?;
        check_dim(self.p, coeff.len())?;
        if center.iter().chain(coeff).any(|v| !v.is_finite()) {
            return Err(Error::invalid("centers and weights must be finite"));
        }
        self.centers.extend_from_slice(center);
        self.weights.extend_from_slice(coeff);
        Ok(())
    }

    /// `h(s) = sum_j k(s_j, s) w_j`; the zero vector when `M = 0`.
    pub fn evaluate(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n(), s.len())?;
        let mut out = vec![0.0; self.p];
        self.evaluate_into(s, &mut out);
        Ok(out)
    }

    /// Hot-path evaluation without dimension checks.
    pub(crate) fn evaluate_into(&self, s: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, w) in self.centers().zip(self.weights()) {
            let k = self.kernel.eval_unchecked(c, s);
            for (o, wi) in out.iter_mut().zip(w) {
                *o += k * wi;
            }
        }
    }

    /// Gram matrix of this function's own centers.
    pub fn gram(&self) -> DMatrix<f64> {
        let m = self.len();
        let mut k = DMatrix::zeros(m, m);
        for l in 0..m {
            k[(l, l)] = 1.0;
            for j in 0..l {
                let v = self.kernel.eval_unchecked(self.center(l), self.center(j));
                k[(l, j)] = v;
                k[(j, l)] = v;
            }
        }
        k
    }

    /// Weights as an `M x p` matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.p, &self.weights)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.kernel != other.kernel {
            return Err(Error::KernelMismatch);
        }
        check_dim(self.p, other.p)
    }

    /// `<h1, h2>_H = sum_{j,l} k(s_j, s'_l) <w_j, w'_l>`.
    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        let mut total = 0.0;
        for (c1, w1) in self.centers().zip(self.weights()) {
            for (c2, w2) in other.centers().zip(other.weights()) {
                let dot: f64 = w1.iter().zip(w2).map(|(a, b)| a * b).sum();
                if dot != 0.0 {
                    total += self.kernel.eval_unchecked(c1, c2) * dot;
                }
            }
        }
        Ok(total)
    }

    /// `||h||_H^2`, clamped at zero when round-off makes it slightly negative.
    pub fn hilbert_norm_sq(&self) -> Result<f64> {
        let q = self.inner_product(self)?;
        clamp_norm_sq(q, self.len())
    }

    pub fn hilbert_norm(&self) -> Result<f64> {
        Ok(self.hilbert_norm_sq()?.sqrt())
    }

    /// Appends one dictionary element: `h + k(center, .) coeff`.
    pub fn add_scaled_kernel(&self, center: &[f64], coeff: &[f64]) -> Result<Self> {
        let mut out = self.clone();
        out.push(center, coeff)?;
        Ok(out)
    }

    /// `alpha * h`, same dictionary.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= alpha);
        out
    }

    /// `h1 + h2` by dictionary concatenation (no center deduplication).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.centers.extend_from_slice(&other.centers);
        out.weights.extend_from_slice(&other.weights);
        Ok(out)
    }

    /// `h1 - h2` by concatenation with negated weights.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.concat(&other.scaled(-1.0))
    }

    /// Keeps the listed dictionary elements (in the given order) with new weights.
    pub(crate) fn with_subset(&self, keep: &[usize], weights: &DMatrix<f64>) -> Self {
        debug_assert_eq!(weights.nrows(), keep.len());
        let mut out = Self::zero(self.kernel.clone(), self.p);
        for (row, &j) in keep.iter().enumerate() {
            out.centers.extend_from_slice(self.center(j));
            out.weights.extend(weights.row(row).iter().copied());
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

pub(crate) fn clamp_norm_sq(q: f64, m: usize) -> Result<f64> {
    if q >= 0.0 {
        Ok(q)
    } else if q >= -1e-9 * m.max(1) as f64 {
        Ok(0.0)
    } else {
        Err(Error::NegativeNorm(q))
    }
}

/// Free-function form of [`RkhsFunction::evaluate`].
pub fn evaluate(h: &RkhsFunction, s: &[f64]) -> Result<Vec<f64>> {
    h.evaluate(s)
}

pub fn inner_product(h1: &RkhsFunction, h2: &RkhsFunction) -> Result<f64> {
    h1.inner_product(h2)
}

pub fn hilbert_norm_sq(h: &RkhsFunction) -> Result<f64> {
    h.hilbert_norm_sq()
}

pub fn add_scaled_kernel(h: &RkhsFunction, center: &[f64], coeff: &[f64]) -> Result<RkhsFunction> {
    h.add_scaled_kernel(center, coeff)
}

/// On-disk layout of an [`RkhsFunction`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionDoc {
    n: usize,
    p: usize,
    bandwidths: Vec<f64>,
    centers: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
}

impl TryFrom<FunctionDoc> for RkhsFunction {
    type Error = Error;

    fn try_from(doc: FunctionDoc) -> Result<Self> {
        let kernel = KernelSpec::new(doc.bandwidths)?;
        check_dim(doc.n, kernel.dim())?;
        RkhsFunction::from_parts(kernel, doc.p, &doc.centers, &doc.weights)
    }
}

impl From<RkhsFunction> for FunctionDoc {
    fn from(h: RkhsFunction) -> Self {
        FunctionDoc {
            n: h.n(),
            p: h.p,
            centers: h.center_list(),
            weights: h.weight_list(),
            bandwidths: h.kernel.bandwidths,
        }
    }
}
