//! Matrix-free conjugate gradients for symmetric positive (semi)definite
//! operators, with an optional projector onto a constraint subspace.

use crate::error::{MagError, Result};
use crate::grid::dot_slices;

/// Statistics of a converged solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final relative residual `|b - A x| / |b|` (true residual, not the recurrence).
    pub residual: f64,
}

/// Solves `A x = b` starting from `x`. `apply(p, out)` must overwrite `out`
/// with `A p`. When `project` is given the iteration stays in the range of
/// that (orthogonal) projector: `b` and the initial `x` are projected and so
/// is every residual, which is projected CG for `P A P`.
pub fn conjugate_gradient(
    mut apply: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
    mut project: Option<&mut dyn FnMut(&mut [f64])>,
) -> Result<CgOutcome> {
    let n = b.len();
    assert_eq!(x.len(), n);
    let mut rhs = b.to_vec();
    if let Some(p) = project.as_mut() {
        p(&mut rhs);
        p(x);
    }
    let b_norm = dot_slices(&rhs, &rhs).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgOutcome { iterations: 0, residual: 0.0 });
    }

    let mut r = vec![0.0; n];
    let mut q = vec![0.0; n];
    let true_residual = |x: &[f64], r: &mut [f64], q: &mut [f64], apply: &mut dyn FnMut(&[f64], &mut [f64])| {
        apply(x, q);
        for i in 0..n {
            r[i] = rhs[i] - q[i];
        }
    };
    true_residual(x, &mut r, &mut q, &mut apply);
    if let Some(p) = project.as_mut() {
        p(&mut r);
    }
    let mut p_dir = r.clone();
    let mut rr = dot_slices(&r, &r);
    let target = tol * b_norm;
    let mut it = 0;
    let mut restarts = 0;
    loop {
        if rr.sqrt() <= target {
            // confirm with the true residual; restart once or twice on drift
            true_residual(x, &mut r, &mut q, &mut apply);
            if let Some(p) = project.as_mut() {
                p(&mut r);
            }
            rr = dot_slices(&r, &r);
            if rr.sqrt() <= 1.5 * target || restarts >= 3 {
                let residual = rr.sqrt() / b_norm;
                if residual <= 2.0 * tol {
                    return Ok(CgOutcome { iterations: it, residual });
                }
                return Err(MagError::NotConverged { iterations: it, residual });
            }
            restarts += 1;
            p_dir.copy_from_slice(&r);
        }
        if it >= max_iter {
            return Err(MagError::NotConverged { iterations: it, residual: rr.sqrt() / b_norm });
        }
        apply(&p_dir, &mut q);
        let pq = dot_slices(&p_dir, &q);
        if !(pq > 0.0) {
            if rr == 0.0 {
                continue;
            }
            return Err(MagError::NotConverged { iterations: it, residual: rr.sqrt() / b_norm });
        }
        let alpha = rr / pq;
        let rr_new = match project.as_mut() {
            None => update_and_norm(x, &mut r, &p_dir, &q, alpha),
            Some(p) => {
                update_and_norm(x, &mut r, &p_dir, &q, alpha);
                p(&mut r);
                dot_slices(&r, &r)
            }
        };
        let beta = rr_new / rr;
        for i in 0..n {
            p_dir[i] = r[i] + beta * p_dir[i];
        }
        rr = rr_new;
        it += 1;
    }
}

/// `x += alpha p; r -= alpha q`, returning `|r|^2` with the same fixed
/// summation order as [`dot_slices`].
fn update_and_norm(x: &mut [f64], r: &mut [f64], p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let n = x.len();
    let (x, r, p, q) = (&mut x[..n], &mut r[..n], &p[..n], &q[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        for l in 0..4 {
            let i = 4 * c + l;
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
            acc[l] += r[i] * r[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
        s += r[i] * r[i];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let r = if i + 1 < n { x[i + 1] } else { 0.0 };
            out[i] = 2.0 * x[i] - l - r;
        }
    }

    #[test]
    fn solves_1d_dirichlet_laplacian() {
        let n = 50;
        let exact: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        tridiag(&exact, &mut b);
        let mut x = vec![0.0; n];
        let out = conjugate_gradient(tridiag, &b, &mut x, 1e-12, 200, None).unwrap();
        assert!(out.residual <= 2e-12);
        // CG terminates in at most n steps in exact arithmetic
        assert!(out.iterations <= n + 5);
        for (a, e) in x.iter().zip(&exact) {
            assert!((a - e).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let mut x = vec![1.0; 10];
        let out = conjugate_gradient(tridiag, &[0.0; 10], &mut x, 1e-8, 10, None).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reports_nonconvergence_with_residual() {
        let b: Vec<f64> = (0..100).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; 100];
        match conjugate_gradient(tridiag, &b, &mut x, 1e-12, 3, None) {
            Err(MagError::NotConverged { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 0.0 && residual.is_finite());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn projected_solve_stays_in_subspace() {
        // singular 1d Neumann Laplacian restricted to mean-zero vectors
        let neumann = |x: &[f64], out: &mut [f64]| {
            let n = x.len();
            for i in 0..n {
                let mut s = 0.0;
                if i > 0 {
                    s += x[i] - x[i - 1];
                }
                if i + 1 < n {
                    s += x[i] - x[i + 1];
                }
                out[i] = s;
            }
        };
        let mut demean = |v: &mut [f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter_mut().for_each(|x| *x -= m);
        };
        let b: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin() + 3.0).collect();
        let mut x = vec![0.5; 40];
        conjugate_gradient(neumann, &b, &mut x, 1e-12, 500, Some(&mut demean)).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-9);
    }
}
