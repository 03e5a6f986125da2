//! Independent reference computations used by the integration and
//! acceptance tests. Nothing here calls into the library's numerics.

#![allow(dead_code)]

use blockcap::{BlockStructure, CMatrix, CVector, Complex64};
use nalgebra::{DMatrix, DVector};

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                let (rp, rq) = (a[p].clone(), a[q].clone());
                for k in 0..n {
                    a[p][k] = c * rp[k] - s * rq[k];
                    a[q][k] = s * rp[k] + c * rq[k];
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Extreme eigenvalues of the Gram matrix of the given columns, through the
/// real symmetric embedding `[[X, -Y], [Y, X]]` of `G = X + jY`.
pub fn gram_extremes(a: &CMatrix, cols: &[usize]) -> (f64, f64) {
    let n = cols.len();
    let g = |i: usize, j: usize| -> Complex64 {
        (0..a.nrows()).map(|m| a[(m, cols[i])].conj() * a[(m, cols[j])]).sum()
    };
    let mut e = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let v = g(i, j);
            e[i][j] = v.re;
            e[i + n][j + n] = v.re;
            e[i][j + n] = -v.im;
            e[i + n][j] = v.im;
        }
    }
    let ev = jacobi_eigenvalues(e);
    (ev.iter().copied().fold(f64::INFINITY, f64::min), ev.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn subsets(k: usize, t: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == t {
        out.push(cur.clone());
        return;
    }
    for b in start..k {
        cur.push(b);
        subsets(k, t, b + 1, cur, out);
        cur.pop();
    }
}

/// Block RIC by sweeping every `t`-block support.
pub fn ric_sweep(a: &CMatrix, bs: &BlockStructure, t: usize) -> f64 {
    let mut all = Vec::new();
    subsets(bs.num_blocks(), t, 0, &mut Vec::new(), &mut all);
    all.iter()
        .map(|s| {
            let cols: Vec<usize> = s.iter().flat_map(|&b| bs.block(b).iter().copied()).collect();
            let (lo, hi) = gram_extremes(a, &cols);
            (1.0 - lo).max(hi - 1.0)
        })
        .fold(0.0, f64::max)
}

/// Largest |<a_i, a_j>| over distinct columns, computed directly.
pub fn coherence(a: &CMatrix) -> f64 {
    let mut best = 0.0f64;
    for i in 0..a.ncols() {
        for j in (i + 1)..a.ncols() {
            let v: Complex64 = (0..a.nrows()).map(|m| a[(m, i)].conj() * a[(m, j)]).sum();
            best = best.max(v.norm());
        }
    }
    best
}

/// Minimizer of the convex scalar function whose derivative is the
/// non-decreasing `deriv`, on `[lo, hi]`, by bisection.
fn bisect_derivative(lo: f64, hi: f64, deriv: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    if deriv(lo) >= 0.0 {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Projection onto the l1 ball as soft thresholding at the minimizer of the
/// dual `theta -> r theta + 1/2 sum max(|v_i| - theta, 0)^2` over `theta >= 0`.
pub fn l1_ball_oracle(v: &[f64], r: f64) -> Vec<f64> {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let theta = bisect_derivative(0.0, top, |t| r - v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>());
    v.iter().map(|&x| x.signum() * (x.abs() - theta).max(0.0)).collect()
}

/// `argmin_u lam |u|_inf + |u - v|^2 / 2`: the optimum clips `v` at a level
/// `s`, which minimizes `lam s + 1/2 sum max(|v_i| - s, 0)^2` over `s >= 0`.
pub fn prox_linf_oracle(v: &[f64], lam: f64) -> Vec<f64> {
    let top = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let s = bisect_derivative(0.0, top, |s| lam - v.iter().map(|x| (x.abs() - s).max(0.0)).sum::<f64>());
    v.iter().map(|&x| x.clamp(-s, s)).collect()
}

/// Real embedding of a complex matrix: `[[Re, -Im], [Im, Re]]`.
fn real_embed(a: &CMatrix) -> DMatrix<f64> {
    let (m, n) = a.shape();
    DMatrix::from_fn(2 * m, 2 * n, |i, j| {
        let z = a[(i % m, j % n)];
        match (i < m, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

fn real_vec(y: &CVector) -> DVector<f64> {
    let m = y.len();
    DVector::from_fn(2 * m, |i, _| if i < m { y[i].re } else { y[i - m].im })
}

/// Smoothed group norm `sum_k sqrt(|x_k|^2 + eps^2)` with gradient and Hessian.
fn smoothed_group(x: &DVector<f64>, groups: &[Vec<usize>], eps: f64) -> (f64, DVector<f64>, DMatrix<f64>) {
    let n = x.len();
    let mut f = 0.0;
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    for grp in groups {
        let s: f64 = grp.iter().map(|&i| x[i] * x[i]).sum::<f64>() + eps * eps;
        let r = s.sqrt();
        f += r;
        for &i in grp {
            g[i] += x[i] / r;
            for &j in grp {
                h[(i, j)] += if i == j { 1.0 / r } else { 0.0 } - x[i] * x[j] / (r * r * r);
            }
        }
    }
    (f, g, h)
}

fn group_value(x: &DVector<f64>, groups: &[Vec<usize>]) -> f64 {
    groups.iter().map(|g| g.iter().map(|&i| x[i] * x[i]).sum::<f64>().sqrt()).sum()
}

/// Objective of `min sum_k |x_k|_2 s.t. |Ax - y| <= eta` by a damped Newton
/// method on smoothed problems with the smoothing driven to ~1e-11.
///
/// For `eta = 0` the equality constraint is eliminated through a null-space
/// basis; for `eta > 0` a log barrier keeps the iterate strictly feasible.
pub fn group_bp_oracle(a: &CMatrix, y: &CVector, bs: &BlockStructure, eta: f64) -> f64 {
    let n = a.ncols();
    let r = real_embed(a);
    let yr = real_vec(y);
    let groups: Vec<Vec<usize>> =
        bs.blocks().iter().map(|b| b.iter().copied().chain(b.iter().map(|&i| i + n)).collect()).collect();
    let rrt = &r * r.transpose();
    let chol = rrt.clone().cholesky().expect("A has full row rank");
    let x0 = r.transpose() * chol.solve(&yr);

    // Parametrization x = x0 + Z z.
    let z_basis = if eta == 0.0 {
        let proj = DMatrix::identity(2 * n, 2 * n) - r.transpose() * chol.solve(&r);
        let eig = nalgebra::SymmetricEigen::new(proj);
        let keep: Vec<usize> = (0..2 * n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
        DMatrix::from_fn(2 * n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
    } else {
        DMatrix::identity(2 * n, 2 * n)
    };

    let barrier = |x: &DVector<f64>, mu: f64| -> Option<(f64, DVector<f64>, DMatrix<f64>)> {
        if eta == 0.0 {
            return Some((0.0, DVector::zeros(2 * n), DMatrix::zeros(2 * n, 2 * n)));
        }
        let res = &r * x - &yr;
        let s = eta * eta - res.norm_squared();
        if s <= 0.0 {
            return None;
        }
        let rt_res = r.transpose() * &res;
        let g = &rt_res * (2.0 * mu / s);
        let h = (r.transpose() * &r) * (2.0 * mu / s) + (&rt_res * rt_res.transpose()) * (4.0 * mu / (s * s));
        Some((-mu * s.ln(), g, h))
    };
    let total = |x: &DVector<f64>, eps: f64, mu: f64| -> Option<f64> {
        let (b, _, _) = barrier(x, mu)?;
        Some(smoothed_group(x, &groups, eps).0 + b)
    };

    let mut z = DVector::zeros(z_basis.ncols());
    let mut eps = 1e-1;
    while eps >= 1e-11 {
        let mu = eps;
        for _ in 0..200 {
            let x = &x0 + &z_basis * &z;
            let (_, gf, hf) = smoothed_group(&x, &groups, eps);
            let (_, gb, hb) = barrier(&x, mu).expect("iterate stays feasible");
            let g = z_basis.transpose() * (gf + gb);
            let h = z_basis.transpose() * (hf + hb) * &z_basis;
            let step = match h.clone().cholesky() {
                Some(c) => -c.solve(&g),
                None => -&g,
            };
            let decrement = -g.dot(&step);
            if decrement < 1e-24 {
                break;
            }
            let f0 = total(&x, eps, mu).unwrap();
            let mut t = 1.0;
            loop {
                let zt = &z + &step * t;
                let xt = &x0 + &z_basis * &zt;
                if let Some(ft) = total(&xt, eps, mu) {
                    if ft <= f0 - 0.25 * t * decrement {
                        z = zt;
                        break;
                    }
                }
                t *= 0.5;
                if t < 1e-20 {
                    break;
                }
            }
            if t < 1e-20 {
                break;
            }
        }
        eps /= 10.0;
    }
    group_value(&(&x0 + &z_basis * &z), &groups)
}
