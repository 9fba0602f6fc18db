//! Reference computations written independently of the library's closed forms.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// `uu' + lambda I`.
pub fn ppca_covariance(u: &[f64], lambda: f64) -> DMatrix<f64> {
    let d = u.len();
    let uv = DVector::from_column_slice(u);
    &uv * uv.transpose() + DMatrix::identity(d, d) * lambda
}

/// Conditional mean and variance of the factor given `y`, from the joint
/// Gaussian of `(X, Y)` with a dense inverse of the observation covariance.
pub fn ppca_posterior_dense(u: &[f64], lambda: f64, y: &[f64]) -> (f64, f64) {
    let inv = ppca_covariance(u, lambda)
        .try_inverse()
        .expect("covariance is invertible");
    let uv = DVector::from_column_slice(u);
    let yv = DVector::from_column_slice(y);
    let gain = uv.transpose() * &inv;
    let mean = (&gain * yv)[(0, 0)];
    let var = 1.0 - (&gain * uv)[(0, 0)];
    (mean, var)
}

/// Expected statistic `(|y|^2, y E[X|y], E[X^2|y])` by dense conditioning.
pub fn ppca_estep_dense(u: &[f64], lambda: f64, y: &[f64]) -> (f64, Vec<f64>, f64) {
    let (mean, var) = ppca_posterior_dense(u, lambda, y);
    let s0 = y.iter().map(|v| v * v).sum();
    let s1 = y.iter().map(|v| v * mean).collect();
    (s0, s1, var + mean * mean)
}

/// Dense `N(0, uu' + lambda I)` log-density.
pub fn ppca_logpdf_dense(u: &[f64], lambda: f64, y: &[f64]) -> f64 {
    let sigma = ppca_covariance(u, lambda);
    let det = sigma.determinant();
    let inv = sigma.try_inverse().expect("covariance is invertible");
    let yv = DVector::from_column_slice(y);
    let quad = (yv.transpose() * inv * &yv)[(0, 0)];
    -0.5 * (y.len() as f64 * LN_2PI + det.ln() + quad)
}

/// Expected complete-data log-likelihood of PPCA (per observation, up to
/// constants) at statistic `(s0, s1, s2)`.
pub fn ppca_complete_objective(u: &[f64], lambda: f64, s0: f64, s1: &[f64], s2: f64) -> f64 {
    let d = u.len() as f64;
    let us1: f64 = u.iter().zip(s1).map(|(a, b)| a * b).sum();
    let uu: f64 = u.iter().map(|a| a * a).sum();
    -0.5 * d * lambda.ln() - (s0 - 2.0 * us1 + s2 * uu) / (2.0 * lambda)
}

/// Gradient and Hessian of `f` at `x` by central differences.
fn numeric_derivatives(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = x.len();
    let f0 = f(x);
    let eval = |i: usize, di: f64, j: usize, dj: f64| {
        let mut z = x.to_vec();
        z[i] += di;
        z[j] += dj;
        f(&z)
    };
    let mut grad = vec![0.0; n];
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        grad[i] = (eval(i, h, i, 0.0) - eval(i, -h, i, 0.0)) / (2.0 * h);
        hess[(i, i)] = (eval(i, h, i, 0.0) - 2.0 * f0 + eval(i, -h, i, 0.0)) / (h * h);
        for j in 0..i {
            let v = (eval(i, h, j, h) - eval(i, h, j, -h) - eval(i, -h, j, h) + eval(i, -h, j, -h)) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    (grad, hess)
}

/// Maximise `f` by damped Newton steps on numerical derivatives.
pub fn newton_maximise(f: &dyn Fn(&[f64]) -> f64, x0: &[f64]) -> Vec<f64> {
    let mut x = x0.to_vec();
    for _ in 0..200 {
        let (grad, hess) = numeric_derivatives(f, &x, 1e-4);
        let step = match (-hess).cholesky() {
            Some(c) => c.solve(&DVector::from_vec(grad.clone())),
            None => DVector::from_vec(grad.clone()) * 0.1,
        };
        let mut t = 1.0;
        let f0 = f(&x);
        let mut next: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
        while (f(&next) < f0 || f(&next).is_nan()) && t > 1e-12 {
            t *= 0.5;
            next = x.iter().zip(step.iter()).map(|(a, b)| a + t * b).collect();
        }
        let moved = step.norm() * t;
        x = next;
        if moved < 1e-13 {
            break;
        }
    }
    // polish with finer gradient information
    for _ in 0..5 {
        let (grad, hess) = numeric_derivatives(f, &x, 1e-5);
        if let Some(c) = (-hess).cholesky() {
            let step = c.solve(&DVector::from_vec(grad));
            x.iter_mut().zip(step.iter()).for_each(|(a, b)| *a += b);
        }
    }
    x
}

/// Numerical maximiser `(u, lambda)` of the PPCA complete objective,
/// optimised over `(u, ln lambda)`.
pub fn ppca_mstep_numeric(s0: f64, s1: &[f64], s2: f64) -> (Vec<f64>, f64) {
    let d = s1.len();
    let f = |z: &[f64]| ppca_complete_objective(&z[..d], z[d].exp(), s0, s1, s2);
    let mut x0 = vec![0.0; d + 1];
    x0[d] = (s0 / d as f64).max(1e-3).ln();
    let z = newton_maximise(&f, &x0);
    (z[..d].to_vec(), z[d].exp())
}

pub fn ln_factorial(y: u64) -> f64 {
    (1..=y).map(|k| (k as f64).ln()).sum()
}

/// Poisson pmf by direct arithmetic.
pub fn poisson_pmf(beta: f64, y: u64) -> f64 {
    let mut p = (-beta).exp();
    for k in 1..=y {
        p *= beta / k as f64;
    }
    p
}

/// `sum_i w_i Poisson(y; beta_i)`.
pub fn mixture_density(w: &[f64], beta: &[f64], y: u64) -> f64 {
    w.iter().zip(beta).map(|(wi, bi)| wi * poisson_pmf(*bi, y)).sum()
}

/// Responsibilities by direct density arithmetic.
pub fn responsibilities(w: &[f64], beta: &[f64], y: u64) -> Vec<f64> {
    let joint: Vec<f64> = w.iter().zip(beta).map(|(wi, bi)| wi * poisson_pmf(*bi, y)).collect();
    let total: f64 = joint.iter().sum();
    joint.iter().map(|j| j / total).collect()
}

/// One EM iteration for a Poisson mixture, written out explicitly.
pub fn poisson_em_iteration(w: &[f64], beta: &[f64], data: &[u64]) -> (Vec<f64>, Vec<f64>) {
    let m = w.len();
    let mut mass = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for &y in data {
        let r = responsibilities(w, beta, y);
        for i in 0..m {
            mass[i] += r[i];
            weighted[i] += r[i] * y as f64;
        }
    }
    let n = data.len() as f64;
    let w_next = mass.iter().map(|a| a / n).collect();
    let beta_next = weighted.iter().zip(&mass).map(|(a, b)| a / b).collect();
    (w_next, beta_next)
}

/// Run [`poisson_em_iteration`] until the parameter stops moving.
pub fn poisson_em_fixed_point(w: &[f64], beta: &[f64], data: &[u64]) -> (Vec<f64>, Vec<f64>) {
    let (mut w, mut beta) = (w.to_vec(), beta.to_vec());
    for _ in 0..1_000_000 {
        let (w2, b2) = poisson_em_iteration(&w, &beta, data);
        let moved = w
            .iter()
            .zip(&w2)
            .chain(beta.iter().zip(&b2))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = w2;
        beta = b2;
        if moved < 1e-15 {
            break;
        }
    }
    (w, beta)
}

/// Five-point central difference of `f` along each coordinate.
pub fn gradient_5pt(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let at = |k: f64| {
                let mut z = x.to_vec();
                z[i] += k * h;
                f(&z)
            };
            (at(-2.0) - 8.0 * at(-1.0) + 8.0 * at(1.0) - at(2.0)) / (12.0 * h)
        })
        .collect()
}

/// Complete-data Fisher information of a Poisson mixture in
/// `(w_1, ..., w_{m-1}, beta_1, ..., beta_m)`.
pub fn poisson_mixture_fisher(w: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = w.len();
    let p = 2 * m - 1;
    let mut fisher = DMatrix::zeros(p, p);
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            fisher[(i, j)] = 1.0 / w[m - 1] + if i == j { 1.0 / w[i] } else { 0.0 };
        }
    }
    for i in 0..m {
        fisher[(m - 1 + i, m - 1 + i)] = w[i] / beta[i];
    }
    fisher
}

/// Mixture log-density as a function of the reduced coordinates.
pub fn mixture_loglik_reduced(z: &[f64], m: usize, y: u64) -> f64 {
    let mut w: Vec<f64> = z[..m - 1].to_vec();
    w.push(1.0 - w.iter().sum::<f64>());
    mixture_density(&w, &z[m - 1..], y).ln()
}

pub fn random_simplex<R: Rng>(rng: &mut R, m: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(floor..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
