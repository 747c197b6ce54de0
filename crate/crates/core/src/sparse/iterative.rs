use super::{symmetric_eigenvalues, DenseMatrix};
use crate::scalar::{vec_dot, vec_norm, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome<T> {
    pub iterations: usize,
    pub relative_residual: T,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for an SPD operator.
///
/// `apply` computes `A v`, `precond` computes `M⁻¹ r`. Iterates until
/// `‖r‖ ≤ tol·‖b‖` or `max_iter` is reached; `x` holds the initial guess.
pub fn pcg<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    precond: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    x: &mut [T],
    tol: T,
    max_iter: usize,
) -> CgOutcome<T> {
    let bnorm = vec_norm(b);
    if bnorm == T::zero() {
        x.iter_mut().for_each(|v| *v = T::zero());
        return CgOutcome {
            iterations: 0,
            relative_residual: T::zero(),
            converged: true,
        };
    }
    let ax = apply(x);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = vec_dot(&r, &z);
    let mut res = vec_norm(&r) / bnorm;
    for it in 0..max_iter {
        if res <= tol {
            return CgOutcome {
                iterations: it,
                relative_residual: res,
                converged: true,
            };
        }
        let ap = apply(&p);
        let pap = vec_dot(&p, &ap);
        if pap <= T::zero() {
            break;
        }
        let alpha = rz / pap;
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = vec_norm(&r) / bnorm;
        z = precond(&r);
        let rz_new = vec_dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: max_iter,
        relative_residual: res,
        converged: res <= tol,
    }
}

/// Ritz values (ascending) after `steps` Lanczos iterations with full
/// reorthogonalization, started from `start`.
pub fn lanczos_ritz_values<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    start: &[T],
    steps: usize,
) -> Vec<T> {
    let n = start.len();
    let steps = steps.min(n);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(steps);
    let mut alphas = Vec::with_capacity(steps);
    let mut betas: Vec<T> = Vec::with_capacity(steps);
    let nrm = vec_norm(start);
    if nrm == T::zero() || steps == 0 {
        return Vec::new();
    }
    let mut q: Vec<T> = start.iter().map(|&v| v / nrm).collect();
    for k in 0..steps {
        let mut w = apply(&q);
        let alpha = vec_dot(&w, &q);
        alphas.push(alpha);
        basis.push(q.clone());
        for _ in 0..2 {
            for v in &basis {
                let c = vec_dot(&w, v);
                for i in 0..n {
                    w[i] -= c * v[i];
                }
            }
        }
        let beta = vec_norm(&w);
        if k + 1 == steps || beta <= T::epsilon() * alpha.abs().max(T::one()) {
            break;
        }
        betas.push(beta);
        q = w.iter().map(|&v| v / beta).collect();
    }
    let k = alphas.len();
    let mut t = DenseMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    symmetric_eigenvalues(&t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_diagonal_system() {
        let d = [1.0, 2.0, 4.0, 8.0];
        let b = [1.0, 1.0, 1.0, 1.0];
        let mut x = [0.0; 4];
        let out = pcg(
            |v: &[f64]| v.iter().zip(&d).map(|(a, b)| a * b).collect(),
            |r: &[f64]| r.to_vec(),
            &b,
            &mut x,
            1e-14,
            50,
        );
        assert!(out.converged);
        for i in 0..4 {
            assert!((x[i] - 1.0 / d[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn lanczos_recovers_extreme_eigenvalues() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let start = vec![1.0; 10];
        let ritz = lanczos_ritz_values(|v: &[f64]| v.iter().zip(&d).map(|(a, b)| a * b).collect(), &start, 10);
        assert!((ritz[0] - 1.0).abs() < 1e-10);
        assert!((ritz.last().unwrap() - 10.0).abs() < 1e-10);
    }
}
