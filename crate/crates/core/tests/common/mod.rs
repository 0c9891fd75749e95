//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the library's linear algebra: kernels, gram
//! matrices and least-squares solves are recomputed from scratch with plain
//! loops and Gaussian elimination.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rkhs_pg::env::ChainMdpSpec;
use rkhs_pg::{GaussianPolicy, KernelSpec, RkhsFunction};

pub fn kernel(bw: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut q = 0.0;
    for i in 0..bw.len() {
        q += (x[i] - y[i]) * (x[i] - y[i]) / bw[i];
    }
    (-0.5 * q).exp()
}

/// Plain dense representation of a function.
#[derive(Debug, Clone)]
pub struct Dense {
    pub bw: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

impl Dense {
    pub fn of(h: &RkhsFunction) -> Self {
        Self {
            bw: h.kernel().bandwidths().to_vec(),
            centers: h.center_list(),
            weights: h.weight_list(),
        }
    }

    pub fn p(&self) -> usize {
        self.weights.first().map_or(1, Vec::len)
    }

    pub fn eval(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p()];
        for (c, w) in self.centers.iter().zip(&self.weights) {
            let k = kernel(&self.bw, c, s);
            for i in 0..out.len() {
                out[i] += k * w[i];
            }
        }
        out
    }
}

/// `sum_{l,m} k(c_l, c_m) <w_l, w_m>` by explicit double loop.
pub fn quad_form(bw: &[f64], centers: &[Vec<f64>], weights: &[Vec<f64>]) -> f64 {
    let mut q = 0.0;
    for l in 0..centers.len() {
        for m in 0..centers.len() {
            let k = kernel(bw, &centers[l], &centers[m]);
            let dot: f64 = weights[l].iter().zip(&weights[m]).map(|(a, b)| a * b).sum();
            q += k * dot;
        }
    }
    q
}

/// Solves `a x = b` (b with several columns) by Gaussian elimination with
/// partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            for k in 0..b[row].len() {
                b[row][k] -= f * b[col][k];
            }
        }
    }
    let mut x = b.clone();
    for row in (0..n).rev() {
        for k in 0..x[row].len() {
            let mut v = b[row][k];
            for j in row + 1..n {
                v -= a[row][j] * x[j][k];
            }
            x[row][k] = v / a[row][row];
        }
    }
    x
}

/// Least-squares fit of the reference function `r` on the centers `keep`
/// (indices into `r`) via the normal equations. Returns
/// `(squared error, weights)`.
pub fn project(r: &Dense, keep: &[usize]) -> (f64, Vec<Vec<f64>>) {
    let p = r.p();
    if keep.is_empty() {
        return (quad_form(&r.bw, &r.centers, &r.weights), Vec::new());
    }
    let a: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| kernel(&r.bw, &r.centers[i], &r.centers[j])).collect())
        .collect();
    let b: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| {
            let mut row = vec![0.0; p];
            for (c, w) in r.centers.iter().zip(&r.weights) {
                let k = kernel(&r.bw, &r.centers[i], c);
                for t in 0..p {
                    row[t] += k * w[t];
                }
            }
            row
        })
        .collect();
    let x = gauss_solve(a, b);
    // Residual coefficients over the reference dictionary.
    let mut res: Vec<Vec<f64>> = r.weights.iter().map(|w| w.iter().map(|v| -v).collect()).collect();
    for (row, &i) in keep.iter().enumerate() {
        for t in 0..p {
            res[i][t] += x[row][t];
        }
    }
    (quad_form(&r.bw, &r.centers, &res).max(0.0), x)
}

/// Result of the brute-force greedy pruning oracle.
#[derive(Debug, Clone)]
pub struct GreedyTrace {
    pub removed: Vec<usize>,
    pub kept: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub error_sq: f64,
}

/// Enumerates every leave-one-out projection each round, removes the
/// cheapest (first on ties) while its error norm stays within `eps`.
pub fn greedy_oracle(r: &Dense, eps: f64) -> GreedyTrace {
    let mut kept: Vec<usize> = (0..r.centers.len()).collect();
    let mut weights = r.weights.clone();
    let mut error_sq = 0.0;
    let mut removed = Vec::new();
    while !kept.is_empty() {
        let mut best: Option<(usize, f64, Vec<Vec<f64>>)> = None;
        for pos in 0..kept.len() {
            let mut rest = kept.clone();
            rest.remove(pos);
            let (e, w) = project(r, &rest);
            if best.as_ref().is_none_or(|b| e < b.1) {
                best = Some((pos, e, w));
            }
        }
        let (pos, e, w) = best.unwrap();
        if e.sqrt() > eps && e > 1e-24 * quad_form(&r.bw, &r.centers, &r.weights).max(1.0) {
            break;
        }
        removed.push(kept.remove(pos));
        weights = w;
        error_sq = e;
    }
    GreedyTrace {
        removed,
        kept,
        weights,
        error_sq,
    }
}

/// Random function with `m` elements, state dim `n`, action dim `p`.
pub fn random_function(rng: &mut impl Rng, m: usize, n: usize, p: usize) -> RkhsFunction {
    let bw: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
    let centers: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let weights: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    RkhsFunction::from_parts(KernelSpec::new(bw).unwrap(), p, &centers, &weights).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The fixed two-element policy used for chain-MDP oracle checks.
pub fn chain_policy() -> GaussianPolicy {
    let k = KernelSpec::new(vec![0.25]).unwrap();
    let h = RkhsFunction::from_parts(k, 1, &[vec![-0.5], vec![0.5]], &[vec![0.4], vec![-0.3]]).unwrap();
    GaussianPolicy::new(h, vec![1.0]).unwrap()
}

pub fn five_state() -> ChainMdpSpec {
    ChainMdpSpec::five_state()
}

/// Standard normal CDF via the complementary error function (independent
/// of the library's statistics dependency).
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
