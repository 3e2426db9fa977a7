//! Thin SVD by one-sided (Hestenes) Jacobi rotations, and a seeded randomized
//! truncated SVD built on top of it.

use alloc::vec::Vec;

use crate::math;
use crate::numcore::{axpy, dot, norm2, Matrix, Rng};

/// `A = U diag(s) Vᵀ` with `s` nonincreasing; `U` is `m × r`, `V` is `n × r`,
/// `r = min(m, n)`. Columns of `U` belonging to zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

const MAX_SWEEPS: usize = 80;

pub fn thin_svd(a: &Matrix) -> Svd {
    if a.cols() > a.rows() {
        let Svd { u, s, v } = thin_svd(&a.transpose());
        return Svd { u: v, s, v: u };
    }
    let (m, n) = (a.rows(), a.cols());
    // work on columns of A as contiguous rows of Aᵀ
    let mut cols = a.transpose();
    let mut rot = Matrix::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(cols.row(p), cols.row(p));
                let beta = dot(cols.row(q), cols.row(q));
                let gamma = dot(cols.row(p), cols.row(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * math::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + math::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / math::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_rows(&mut cols, p, q, c, s);
                rotate_rows(&mut rot, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| norm2(cols.row(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let mut u = Matrix::zeros(m, n);
    let mut v = Matrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        let sigma = norms[j];
        s.push(sigma);
        if sigma > 0.0 {
            for i in 0..m {
                u[(i, k)] = cols[(j, i)] / sigma;
            }
        }
        for i in 0..n {
            v[(i, k)] = rot[(j, i)];
        }
    }
    Svd { u, s, v }
}

fn rotate_rows(m: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let cols = m.cols();
    let data = m.as_mut_slice();
    let (head, tail) = data.split_at_mut(q * cols);
    let rp = &mut head[p * cols..(p + 1) * cols];
    let rq = &mut tail[..cols];
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Orthonormalises the columns in place by twice-iterated modified
/// Gram–Schmidt. Columns that are (numerically) dependent on earlier ones are
/// replaced by the standard basis direction with the largest residual, so the
/// result always has orthonormal columns.
pub fn orthonormalize_columns(m: &mut Matrix) {
    let (rows, k) = (m.rows(), m.cols());
    assert!(k <= rows, "cannot orthonormalise {k} columns in dimension {rows}");
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut c = m.column(j);
        let original = norm2(&c);
        project_out(&mut c, &basis);
        project_out(&mut c, &basis);
        let mut nrm = norm2(&c);
        if !(nrm > 1e-10 * original.max(1e-300)) || nrm == 0.0 {
            c = best_unit_completion(&basis, rows);
            project_out(&mut c, &basis);
            project_out(&mut c, &basis);
            nrm = norm2(&c);
        }
        c.iter_mut().for_each(|x| *x /= nrm);
        basis.push(c);
    }
    for (j, c) in basis.iter().enumerate() {
        m.set_column(j, c);
    }
}

fn project_out(c: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let d = dot(b, c);
        axpy(-d, b, c);
    }
}

fn best_unit_completion(basis: &[Vec<f64>], rows: usize) -> Vec<f64> {
    // residual norm of e_i is 1 - Σ_b b_i²
    let mut best = 0;
    let mut best_res = f64::NEG_INFINITY;
    for i in 0..rows {
        let res = 1.0 - basis.iter().map(|b| b[i] * b[i]).sum::<f64>();
        if res > best_res {
            best_res = res;
            best = i;
        }
    }
    let mut e = alloc::vec![0.0; rows];
    e[best] = 1.0;
    e
}

/// Randomized range finder with power iterations followed by an exact SVD
/// of the small projected matrix. Returns the leading `k` right-singular
/// vectors (`n × k`) and singular values.
pub fn randomized_svd(
    a: &Matrix,
    k: usize,
    oversample: usize,
    power_iters: usize,
    rng: &mut Rng,
) -> (Matrix, Vec<f64>) {
    let (m, n) = (a.rows(), a.cols());
    let l = (k + oversample).min(m).min(n);
    let omega = Matrix::from_fn(n, l, |_, _| rng.normal());
    let mut q = a.matmul(&omega);
    orthonormalize_columns(&mut q);
    for _ in 0..power_iters {
        let mut z = a.t_matmul(&q);
        orthonormalize_columns(&mut z);
        q = a.matmul(&z);
        orthonormalize_columns(&mut q);
    }
    // B = Qᵀ A, held as Bᵀ = Aᵀ Q (n × l)
    let bt = a.t_matmul(&q);
    let svd = thin_svd(&bt.transpose());
    (svd.v.leading_columns(k), svd.s[..k].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(svd: &Svd) -> Matrix {
        let r = svd.s.len();
        Matrix::from_fn(svd.u.rows(), svd.v.rows(), |i, j| {
            (0..r).map(|k| svd.u[(i, k)] * svd.s[k] * svd.v[(j, k)]).sum()
        })
    }

    #[test]
    fn reconstructs_tall_and_wide() {
        let mut rng = Rng::new(4);
        for (m, n) in [(7, 4), (4, 7), (5, 5)] {
            let a = Matrix::from_fn(m, n, |_, _| rng.normal());
            let svd = thin_svd(&a);
            assert!(reconstruct(&svd).sub(&a).frobenius_norm() < 1e-12);
            assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
            let vtv = svd.v.t_matmul(&svd.v);
            assert!(vtv.sub(&Matrix::identity(vtv.rows())).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn completion_handles_dependent_columns() {
        let mut m = Matrix::from_vec(3, 3, alloc::vec![1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        orthonormalize_columns(&mut m);
        let g = m.t_matmul(&m);
        assert!(g.sub(&Matrix::identity(3)).frobenius_norm() < 1e-14);
    }
}
