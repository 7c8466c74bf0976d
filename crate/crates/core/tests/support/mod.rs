//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical kernels.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Columns drawn uniformly-ish from the simplex, with occasional exact zeros.
pub fn simplex_columns(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m, n);
    for j in 0..n {
        let v = simplex_vec(rng, m);
        for i in 0..m {
            out[(i, j)] = v[i];
        }
    }
    out
}

pub fn simplex_vec(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..m)
        .map(|_| {
            if m > 1 && rng.random_bool(0.1) {
                0.0
            } else {
                -rng.random_range(1e-12f64..1.0).ln()
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0.0) {
        v[0] = 1.0;
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

pub fn binary(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::from_fn(m, n, |_, _| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
    for j in 0..n {
        if l.column(j).sum() == 0.0 {
            l[(rng.random_range(0..m), j)] = 1.0;
        }
    }
    l
}

/// One-sided Jacobi SVD. Returns `(A V, V, σ)` where the columns of `A V`
/// are mutually orthogonal with norms `σ`.
pub fn jacobi_svd(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let mut u = a.clone();
    let n = a.ncols();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).iter().map(|x| x * x).sum();
                let beta: f64 = u.column(q).iter().map(|x| x * x).sum();
                let gamma: f64 = u
                    .column(p)
                    .iter()
                    .zip(u.column(q).iter())
                    .map(|(x, y)| x * y)
                    .sum();
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut u, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)];
                        mat[(i, p)] = c * x - s * y;
                        mat[(i, q)] = s * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n).map(|k| u.column(k).norm()).collect();
    (u, v, sigma)
}

/// Singular value soft-thresholding via the Jacobi factorization.
pub fn svt_oracle(a: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    // work on the orientation with fewer columns
    if a.ncols() > a.nrows() {
        return svt_oracle(&a.transpose(), tau).transpose();
    }
    let (av, v, sigma) = jacobi_svd(a);
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for (k, &s) in sigma.iter().enumerate() {
        if s <= tau || s == 0.0 {
            continue;
        }
        let scale = (s - tau) / s;
        out += (av.column(k) * v.column(k).transpose()) * scale;
    }
    out
}

pub fn singular_values_oracle(a: &DMatrix<f64>) -> Vec<f64> {
    let a = if a.ncols() > a.nrows() {
        a.transpose()
    } else {
        a.clone()
    };
    let mut s = jacobi_svd(&a).2;
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Gauss-Jordan solve of `a x = b` with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut aug = DMatrix::zeros(n, n + b.ncols());
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, b.ncols())).copy_from(b);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| aug[(i, col)].abs().total_cmp(&aug[(j, col)].abs()))
            .unwrap();
        aug.swap_rows(col, piv);
        let d = aug[(col, col)];
        for k in 0..aug.ncols() {
            aug[(col, k)] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = aug[(r, col)];
                if f != 0.0 {
                    for k in 0..aug.ncols() {
                        aug[(r, k)] -= f * aug[(col, k)];
                    }
                }
            }
        }
    }
    aug.columns(n, b.ncols()).into_owned()
}

/// Ridge weights from the normal equations, `W (XᵀX + 2λI) = D X`.
pub fn ridge_oracle(x: &DMatrix<f64>, d: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
    let mut gram = x.transpose() * x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += 2.0 * lambda;
    }
    // W gram = DX  <=>  gram Wᵀ = (DX)ᵀ  (gram symmetric)
    gauss_solve(&gram, &(d * x).transpose()).transpose()
}

fn sq(v: f64) -> f64 {
    v * v
}

/// One row of the W-step objective; the objective is the sum over rows of `W`.
#[allow(clippy::too_many_arguments)]
pub fn w_row_objective(
    w_row: &[f64],
    i: usize,
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l: &DMatrix<f64>,
    o: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> f64 {
    let n = x.nrows();
    let p: Vec<f64> = (0..n)
        .map(|s| (0..x.ncols()).map(|k| w_row[k] * x[(s, k)]).sum())
        .collect();
    let mut f = 0.0;
    for s in 0..n {
        f += 0.5 * sq(p[s] - d[(i, s)]);
        let po: f64 = (0..n).map(|t| p[t] * o[(t, s)]).sum();
        f += 0.5 * sq(po - l[(i, s)]);
        f += 0.5 * mu * sq(g[(i, s)] - po - gamma[(i, s)] / mu);
    }
    f + lambda * w_row.iter().map(|v| v * v).sum::<f64>()
}

#[allow(clippy::too_many_arguments)]
pub fn w_objective(
    w: &DMatrix<f64>,
    x: &DMatrix<f64>,
    d: &DMatrix<f64>,
    l: &DMatrix<f64>,
    o: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> f64 {
    (0..w.nrows())
        .map(|i| {
            let row: Vec<f64> = w.row(i).iter().copied().collect();
            w_row_objective(&row, i, x, d, l, o, g, gamma, mu, lambda)
        })
        .sum()
}

/// One column of the O-step objective with `P = W Xᵀ` given.
#[allow(clippy::too_many_arguments)]
pub fn o_col_objective(
    o_col: &[f64],
    s: usize,
    p: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> f64 {
    let mut f = 0.0;
    for i in 0..p.nrows() {
        let po: f64 = (0..p.ncols()).map(|t| p[(i, t)] * o_col[t]).sum();
        f += 0.5 * sq(po - l[(i, s)]);
        f += 0.5 * mu * sq(g[(i, s)] - po - gamma[(i, s)] / mu);
    }
    f + lambda * o_col.iter().map(|v| v * v).sum::<f64>()
}

#[allow(clippy::too_many_arguments)]
pub fn o_objective(
    o: &DMatrix<f64>,
    p: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    mu: f64,
    lambda: f64,
) -> f64 {
    (0..o.ncols())
        .map(|s| {
            let col: Vec<f64> = o.column(s).iter().copied().collect();
            o_col_objective(&col, s, p, l, g, gamma, mu, lambda)
        })
        .sum()
}

/// Central finite-difference gradient of `f` at `v`.
pub fn fd_gradient(v: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut work = v.to_vec();
    (0..v.len())
        .map(|k| {
            work[k] = v[k] + h;
            let up = f(&work);
            work[k] = v[k] - h;
            let down = f(&work);
            work[k] = v[k];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn naive_chebyshev(d: &[f64], p: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for j in 0..d.len() {
        let v = (d[j] - p[j]).abs();
        if v > best {
            best = v;
        }
    }
    best
}

pub fn naive_clark(d: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..d.len() {
        if d[j] + p[j] > 0.0 {
            s += sq(d[j] - p[j]) / sq(d[j] + p[j]);
        }
    }
    s.sqrt()
}

pub fn naive_canberra(d: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..d.len() {
        if d[j] + p[j] > 0.0 {
            s += (d[j] - p[j]).abs() / (d[j] + p[j]);
        }
    }
    s
}

pub fn naive_kl(d: &[f64], p: &[f64]) -> f64 {
    let q: Vec<f64> = p
        .iter()
        .map(|&v| if v < 1e-12 { 1e-12 } else { v })
        .collect();
    let z: f64 = q.iter().sum();
    let mut s = 0.0;
    for j in 0..d.len() {
        if d[j] != 0.0 {
            s += d[j] * d[j].ln() - d[j] * (q[j] / z).ln();
        }
    }
    s
}

pub fn naive_cosine(d: &[f64], p: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut a = 0.0;
    let mut b = 0.0;
    for j in 0..d.len() {
        dot += d[j] * p[j];
        a += d[j] * d[j];
        b += p[j] * p[j];
    }
    dot / (a.sqrt() * b.sqrt())
}

pub fn naive_intersection(d: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for j in 0..d.len() {
        s += if d[j] < p[j] { d[j] } else { p[j] };
    }
    s
}

/// All six, in the library's reporting order.
pub fn naive_all(d: &[f64], p: &[f64]) -> [f64; 6] {
    [
        naive_chebyshev(d, p),
        naive_clark(d, p),
        naive_canberra(d, p),
        naive_kl(d, p),
        naive_cosine(d, p),
        naive_intersection(d, p),
    ]
}

/// Relative Frobenius error of the best rank-`r` approximation.
pub fn rank_truncation_error(a: &DMatrix<f64>, r: usize) -> f64 {
    let s = singular_values_oracle(a);
    let total: f64 = s.iter().map(|v| v * v).sum();
    let tail: f64 = s.iter().skip(r).map(|v| v * v).sum();
    (tail / total).sqrt()
}
