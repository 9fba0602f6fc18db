//! Single-factor probabilistic PCA.
//!
//! `Y = u X + sqrt(lambda) N` with a scalar standard-normal latent `X` and
//! `N ~ N(0, I_d)`, so `Y ~ N(0, uu' + lambda I_d)`. The complete-data
//! statistic is reduced to the triple `(|y|^2, x y, x^2)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LatentModel, SufficientStat};

/// Smallest latent second moment for which the M-step is attempted.
pub const MIN_LATENT_MOMENT: f64 = 1e-12;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ppca1Param {
    /// Factor loading.
    pub u: Vec<f64>,
    /// Isotropic noise variance.
    pub lambda: f64,
}

impl Ppca1Param {
    pub fn new(u: Vec<f64>, lambda: f64) -> Self {
        Self { u, lambda }
    }

    pub fn norm_u_sq(&self) -> f64 {
        dot(&self.u, &self.u)
    }
}

/// Flat layout `[s0, s1_1 .. s1_d, s2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ppca1Stat {
    coords: Vec<f64>,
}

impl Ppca1Stat {
    pub fn new(s0: f64, s1: &[f64], s2: f64) -> Self {
        let mut coords = Vec::with_capacity(s1.len() + 2);
        coords.push(s0);
        coords.extend_from_slice(s1);
        coords.push(s2);
        Self { coords }
    }

    /// Average squared norm of the observations.
    pub fn s0(&self) -> f64 {
        self.coords[0]
    }

    /// Cross moment `E[X Y]`.
    pub fn s1(&self) -> &[f64] {
        &self.coords[1..self.coords.len() - 1]
    }

    /// Latent second moment `E[X^2]`.
    pub fn s2(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }
}

impl SufficientStat for Ppca1Stat {
    fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }
}

/// Single-factor PPCA in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ppca1 {
    dim: usize,
}

impl Ppca1 {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Argument("PPCA dimension must be at least 1".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_lambda(lambda: f64) -> Result<()> {
        if lambda > 0.0 && lambda.is_finite() {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "noise variance lambda must be > 0, got {lambda}"
            )))
        }
    }

    /// `(lambda + |u|^2, u'y)`, the two scalars every closed form needs.
    fn projections(&self, theta: &Ppca1Param, y: &[f64]) -> (f64, f64) {
        (theta.lambda + theta.norm_u_sq(), dot(&theta.u, y))
    }

    /// The M-step noise variance `(s0 - |s1|^2 / s2) / d`, unchecked.
    fn lambda_of(&self, s: &Ppca1Stat) -> f64 {
        (s.s0() - dot(s.s1(), s.s1()) / s.s2()) / self.dim as f64
    }
}

impl LatentModel for Ppca1 {
    type Obs = Vec<f64>;
    type Param = Ppca1Param;
    type Stat = Ppca1Stat;

    fn stat_dim(&self) -> usize {
        self.dim + 2
    }

    fn zero_stat(&self) -> Ppca1Stat {
        Ppca1Stat {
            coords: vec![0.0; self.dim + 2],
        }
    }

    fn admissible(&self, s: &Ppca1Stat) -> bool {
        s.dim() == self.stat_dim()
            && s.is_finite()
            && s.s0() >= 0.0
            && s.s2() >= MIN_LATENT_MOMENT
            && self.lambda_of(s) > 0.0
    }

    fn validate_param(&self, theta: &Ppca1Param) -> Result<()> {
        if theta.u.len() != self.dim {
            return Err(Error::Domain(format!(
                "loading has dimension {}, model has {}",
                theta.u.len(),
                self.dim
            )));
        }
        if theta.u.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("loading u has a non-finite coordinate".into()));
        }
        Self::check_lambda(theta.lambda)
    }

    fn validate_obs(&self, y: &Vec<f64>) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::Observation(format!(
                "expected {} coordinates, got {}",
                self.dim,
                y.len()
            )));
        }
        if y.iter().any(|c| !c.is_finite()) {
            return Err(Error::Observation("non-finite coordinate".into()));
        }
        Ok(())
    }

    fn estep(&self, theta: &Ppca1Param, y: &Vec<f64>) -> Result<Ppca1Stat> {
        self.validate_param(theta)?;
        self.validate_obs(y)?;
        let (c, uy) = self.projections(theta, y);
        let s0 = dot(y, y);
        let scale = uy / c;
        let mut coords = Vec::with_capacity(self.dim + 2);
        coords.push(s0);
        coords.extend(y.iter().map(|v| v * scale));
        coords.push(theta.lambda / c + scale * scale);
        Ok(Ppca1Stat { coords })
    }

    fn mstep(&self, s: &Ppca1Stat) -> Result<Ppca1Param> {
        if s.dim() != self.stat_dim() || !s.is_finite() {
            return Err(Error::Inadmissible(
                "statistic has wrong dimension or non-finite entries".into(),
            ));
        }
        if s.s2() < MIN_LATENT_MOMENT {
            return Err(Error::Inadmissible(format!(
                "latent moment s2 = {} below {MIN_LATENT_MOMENT}",
                s.s2()
            )));
        }
        let lambda = self.lambda_of(s);
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::Inadmissible(format!(
                "M-step noise variance {lambda} is not positive"
            )));
        }
        let u = s.s1().iter().map(|v| v / s.s2()).collect();
        Ok(Ppca1Param { u, lambda })
    }

    fn log_likelihood(&self, theta: &Ppca1Param, y: &Vec<f64>) -> Result<f64> {
        self.validate_param(theta)?;
        self.validate_obs(y)?;
        let d = self.dim as f64;
        let lambda = theta.lambda;
        let (c, uy) = self.projections(theta, y);
        let log_det = (d - 1.0) * lambda.ln() + c.ln();
        let quad = dot(y, y) / lambda - uy * uy / (lambda * c);
        Ok(-0.5 * (d * LN_2PI + log_det + quad))
    }

    fn complete_objective(&self, theta: &Ppca1Param, s: &Ppca1Stat) -> Result<f64> {
        self.validate_param(theta)?;
        let d = self.dim as f64;
        let fit = s.s0() - 2.0 * dot(&theta.u, s.s1()) + s.s2() * theta.norm_u_sq();
        Ok(-0.5 * (d * theta.lambda.ln() + fit / theta.lambda))
    }

    fn param_coords(&self, theta: &Ppca1Param) -> Vec<f64> {
        let mut v = theta.u.clone();
        v.push(theta.lambda);
        v
    }

    fn param_from_coords(&self, coords: &[f64]) -> Result<Ppca1Param> {
        if coords.len() != self.dim + 1 {
            return Err(Error::Argument(format!(
                "expected {} coordinates, got {}",
                self.dim + 1,
                coords.len()
            )));
        }
        let theta = Ppca1Param {
            u: coords[..self.dim].to_vec(),
            lambda: coords[self.dim],
        };
        self.validate_param(&theta)?;
        Ok(theta)
    }

    fn param_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = (1..=self.dim).map(|i| format!("u{i}")).collect();
        labels.push("lambda".into());
        labels
    }

    fn reduced_coords(&self, theta: &Ppca1Param) -> Vec<f64> {
        self.param_coords(theta)
    }

    fn param_from_reduced(&self, reduced: &[f64]) -> Result<Ppca1Param> {
        self.param_from_coords(reduced)
    }

    /// Gradient in `(u, lambda)`. With `w = Sigma^{-1} y`,
    /// `d/du = -u / (lambda + |u|^2) + (u'w) w` and
    /// `d/dlambda = (|w|^2 - tr Sigma^{-1}) / 2`.
    fn score(&self, theta: &Ppca1Param, y: &Vec<f64>) -> Result<Vec<f64>> {
        self.validate_param(theta)?;
        self.validate_obs(y)?;
        let d = self.dim as f64;
        let lambda = theta.lambda;
        let (c, uy) = self.projections(theta, y);
        let w: Vec<f64> = y
            .iter()
            .zip(&theta.u)
            .map(|(yi, ui)| yi / lambda - uy * ui / (lambda * c))
            .collect();
        let uw = dot(&theta.u, &w);
        let mut grad: Vec<f64> = theta.u.iter().zip(&w).map(|(ui, wi)| -ui / c + uw * wi).collect();
        let trace_inv = (d - 1.0) / lambda + 1.0 / c;
        grad.push(0.5 * (dot(&w, &w) - trace_inv));
        Ok(grad)
    }

    /// `diag(1/lambda, ..., 1/lambda, d / (2 lambda^2))`.
    fn complete_fisher(&self, theta: &Ppca1Param) -> Result<DMatrix<f64>> {
        self.validate_param(theta)?;
        let d = self.dim;
        let lambda = theta.lambda;
        let mut m = DMatrix::zeros(d + 1, d + 1);
        for i in 0..d {
            m[(i, i)] = 1.0 / lambda;
        }
        m[(d, d)] = d as f64 / (2.0 * lambda * lambda);
        Ok(m)
    }

    fn project_reduced(&self, reduced: &mut [f64], eps: f64) -> bool {
        let last = reduced.len() - 1;
        if reduced[last] < eps {
            reduced[last] = eps;
            true
        } else {
            false
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
