//! Finite mixtures whose components belong to an exponential family.
//!
//! The complete-data statistic of an `m`-component mixture is the pair of
//! membership indicators `1{X = i}` and masked component statistics
//! `1{X = i} s(y)`. The M-step sets each weight to its indicator average and
//! each component parameter to the component MLE evaluated at the ratio of
//! the two averages.
//!
//! Components plug in through [`ComponentFamily`]. Only [`Poisson`] ships; a
//! Gaussian family would implement the same trait with `s(y) = (y, y^2)`.

use std::fmt::Debug;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{Error, Result};
use crate::model::{LatentModel, SufficientStat};

/// Smallest weight statistic for which the M-step is attempted.
pub const MIN_WEIGHT_STAT: f64 = 1e-12;

/// A component density `g_beta` with an exponential-family representation.
pub trait ComponentFamily: Clone + Debug + Send + Sync {
    type Obs: Clone + Debug + Send + Sync;

    fn param_dim(&self) -> usize;
    fn stat_dim(&self) -> usize;

    /// Column suffixes for one component's parameters, e.g. `["mean"]`.
    fn param_labels(&self) -> Vec<&'static str>;

    fn validate_obs(&self, y: &Self::Obs) -> Result<()>;
    fn is_valid(&self, beta: &[f64]) -> bool;

    /// Component sufficient statistic `s(y)`, written into `out`.
    fn stat(&self, y: &Self::Obs, out: &mut [f64]);

    /// The component MLE map evaluated at an averaged statistic.
    fn mle(&self, mean_stat: &[f64]) -> Result<Vec<f64>>;

    fn log_density(&self, beta: &[f64], y: &Self::Obs) -> f64;

    fn grad_log_density(&self, beta: &[f64], y: &Self::Obs) -> Vec<f64>;

    /// Per-observation Fisher information of the component.
    fn fisher(&self, beta: &[f64]) -> DMatrix<f64>;

    /// `<stat, psi(beta)> - weight A(beta)` up to beta-free terms.
    fn natural_objective(&self, beta: &[f64], weight: f64, stat: &[f64]) -> f64;

    /// Clip `beta` into the interior; returns whether it moved.
    fn project(&self, beta: &mut [f64], eps: f64) -> bool;
}

/// Poisson components `g_beta(y) = e^{-beta} beta^y / y!`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Poisson;

impl ComponentFamily for Poisson {
    type Obs = u64;

    fn param_dim(&self) -> usize {
        1
    }

    fn stat_dim(&self) -> usize {
        1
    }

    fn param_labels(&self) -> Vec<&'static str> {
        vec!["mean"]
    }

    fn validate_obs(&self, _y: &u64) -> Result<()> {
        Ok(())
    }

    fn is_valid(&self, beta: &[f64]) -> bool {
        beta.len() == 1 && beta[0] > 0.0 && beta[0].is_finite()
    }

    fn stat(&self, y: &u64, out: &mut [f64]) {
        out[0] = *y as f64;
    }

    /// The Poisson MLE is the identity on the averaged count.
    fn mle(&self, mean_stat: &[f64]) -> Result<Vec<f64>> {
        let beta = mean_stat[0];
        if beta > 0.0 && beta.is_finite() {
            Ok(vec![beta])
        } else {
            Err(Error::Inadmissible(format!(
                "Poisson mean statistic {beta} is not positive"
            )))
        }
    }

    fn log_density(&self, beta: &[f64], y: &u64) -> f64 {
        let y = *y;
        let b = beta[0];
        let yf = y as f64;
        let log_pow = if y == 0 { 0.0 } else { yf * b.ln() };
        -b + log_pow - ln_factorial(y)
    }

    fn grad_log_density(&self, beta: &[f64], y: &u64) -> Vec<f64> {
        vec![*y as f64 / beta[0] - 1.0]
    }

    fn fisher(&self, beta: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0 / beta[0])
    }

    fn natural_objective(&self, beta: &[f64], weight: f64, stat: &[f64]) -> f64 {
        let log_term = if stat[0] == 0.0 { 0.0 } else { stat[0] * beta[0].ln() };
        log_term - weight * beta[0]
    }

    fn project(&self, beta: &mut [f64], eps: f64) -> bool {
        if beta[0] < eps {
            beta[0] = eps;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParam {
    /// Mixing weights, on the probability simplex.
    pub weights: Vec<f64>,
    /// One parameter vector per component.
    pub components: Vec<Vec<f64>>,
}

impl MixtureParam {
    pub fn new(weights: Vec<f64>, components: Vec<Vec<f64>>) -> Self {
        Self { weights, components }
    }

    /// Poisson mixture from weights and means.
    pub fn poisson(weights: &[f64], means: &[f64]) -> Self {
        Self {
            weights: weights.to_vec(),
            components: means.iter().map(|&b| vec![b]).collect(),
        }
    }

    /// First parameter of each component (the mean, for Poisson).
    pub fn means(&self) -> Vec<f64> {
        self.components.iter().map(|c| c[0]).collect()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }
}

/// Flat layout `[S_w(1..m), S_beta(1), ..., S_beta(m)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureStat {
    coords: Vec<f64>,
    n_components: usize,
}

impl MixtureStat {
    pub fn new(weight_stats: &[f64], component_stats: &[Vec<f64>]) -> Self {
        let mut coords = weight_stats.to_vec();
        for s in component_stats {
            coords.extend_from_slice(s);
        }
        Self {
            coords,
            n_components: weight_stats.len(),
        }
    }

    pub fn weight_stats(&self) -> &[f64] {
        &self.coords[..self.n_components]
    }

    pub fn component_stat(&self, i: usize) -> &[f64] {
        let k = (self.coords.len() - self.n_components) / self.n_components;
        let start = self.n_components + i * k;
        &self.coords[start..start + k]
    }
}

impl SufficientStat for MixtureStat {
    fn coords(&self) -> &[f64] {
        &self.coords
    }

    fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }
}

/// An `m`-component mixture of `C` densities.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMixture<C: ComponentFamily> {
    family: C,
    n_components: usize,
}

pub type PoissonMixture = FiniteMixture<Poisson>;

impl PoissonMixture {
    pub fn poisson(n_components: usize) -> Result<Self> {
        Self::new(Poisson, n_components)
    }
}

impl<C: ComponentFamily> FiniteMixture<C> {
    pub fn new(family: C, n_components: usize) -> Result<Self> {
        if n_components == 0 {
            return Err(Error::Argument("a mixture needs at least one component".into()));
        }
        Ok(Self { family, n_components })
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn family(&self) -> &C {
        &self.family
    }

    fn log_joint(&self, theta: &MixtureParam, y: &C::Obs) -> Vec<f64> {
        theta
            .weights
            .iter()
            .zip(&theta.components)
            .map(|(w, beta)| {
                if *w > 0.0 {
                    w.ln() + self.family.log_density(beta, y)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// Posterior membership probabilities `P(X = i | Y = y)`, computed in
    /// log space with the largest term factored out.
    pub fn posteriors(&self, theta: &MixtureParam, y: &C::Obs) -> Result<Vec<f64>> {
        self.validate_param(theta)?;
        self.family.validate_obs(y)?;
        let mut r = self.log_joint(theta, y);
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Domain(format!(
                "all component densities vanish at observation {y:?}"
            )));
        }
        let mut total = 0.0;
        for v in r.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        r.iter_mut().for_each(|v| *v /= total);
        Ok(r)
    }

    fn check_interior(&self, theta: &MixtureParam) -> Result<()> {
        self.validate_param(theta)?;
        if theta.weights.iter().any(|w| *w <= 0.0 || *w >= 1.0) && self.n_components > 1 {
            return Err(Error::Domain("weights must lie strictly inside (0, 1)".into()));
        }
        Ok(())
    }

    fn reduced_len(&self) -> usize {
        self.n_components - 1 + self.n_components * self.family.param_dim()
    }
}

impl<C: ComponentFamily> LatentModel for FiniteMixture<C> {
    type Obs = C::Obs;
    type Param = MixtureParam;
    type Stat = MixtureStat;

    fn stat_dim(&self) -> usize {
        self.n_components * (1 + self.family.stat_dim())
    }

    fn zero_stat(&self) -> MixtureStat {
        MixtureStat {
            coords: vec![0.0; self.stat_dim()],
            n_components: self.n_components,
        }
    }

    fn admissible(&self, s: &MixtureStat) -> bool {
        if s.coords.len() != self.stat_dim() || !s.is_finite() {
            return false;
        }
        (0..self.n_components).all(|i| {
            let w = s.weight_stats()[i];
            if w < MIN_WEIGHT_STAT {
                return false;
            }
            let ratio: Vec<f64> = s.component_stat(i).iter().map(|v| v / w).collect();
            self.family.mle(&ratio).is_ok()
        })
    }

    fn validate_param(&self, theta: &MixtureParam) -> Result<()> {
        if theta.weights.len() != self.n_components || theta.components.len() != self.n_components {
            return Err(Error::Domain(format!(
                "expected {} components, got {} weights and {} component parameters",
                self.n_components,
                theta.weights.len(),
                theta.components.len()
            )));
        }
        if theta.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Domain(format!("weights {:?} outside [0, 1]", theta.weights)));
        }
        let total: f64 = theta.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("weights sum to {total}, not 1")));
        }
        for (i, beta) in theta.components.iter().enumerate() {
            if !self.family.is_valid(beta) {
                return Err(Error::Domain(format!("component {i} parameter {beta:?} is invalid")));
            }
        }
        Ok(())
    }

    fn validate_obs(&self, y: &C::Obs) -> Result<()> {
        self.family.validate_obs(y)
    }

    fn estep(&self, theta: &MixtureParam, y: &C::Obs) -> Result<MixtureStat> {
        let post = self.posteriors(theta, y)?;
        let k = self.family.stat_dim();
        let mut sy = vec![0.0; k];
        self.family.stat(y, &mut sy);
        let mut coords = Vec::with_capacity(self.stat_dim());
        coords.extend_from_slice(&post);
        for p in &post {
            coords.extend(sy.iter().map(|v| v * p));
        }
        Ok(MixtureStat {
            coords,
            n_components: self.n_components,
        })
    }

    fn mstep(&self, s: &MixtureStat) -> Result<MixtureParam> {
        if s.coords.len() != self.stat_dim() || !s.is_finite() {
            return Err(Error::Inadmissible(
                "statistic has wrong dimension or non-finite entries".into(),
            ));
        }
        let ws = s.weight_stats();
        if let Some(i) = ws.iter().position(|w| *w < MIN_WEIGHT_STAT) {
            return Err(Error::Inadmissible(format!(
                "weight statistic of component {i} is {} (< {MIN_WEIGHT_STAT})",
                ws[i]
            )));
        }
        let total: f64 = ws.iter().sum();
        let weights = ws.iter().map(|w| w / total).collect();
        let components = (0..self.n_components)
            .map(|i| {
                let ratio: Vec<f64> = s.component_stat(i).iter().map(|v| v / ws[i]).collect();
                self.family.mle(&ratio).map_err(|e| e.context(format!("component {i}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MixtureParam { weights, components })
    }

    fn log_likelihood(&self, theta: &MixtureParam, y: &C::Obs) -> Result<f64> {
        self.validate_param(theta)?;
        self.family.validate_obs(y)?;
        let terms = self.log_joint(theta, y);
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::Domain(format!(
                "all component densities vanish at observation {y:?}"
            )));
        }
        Ok(max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln())
    }

    fn complete_objective(&self, theta: &MixtureParam, s: &MixtureStat) -> Result<f64> {
        self.validate_param(theta)?;
        let mut total = 0.0;
        for i in 0..self.n_components {
            let w = s.weight_stats()[i];
            if w != 0.0 {
                total += w * theta.weights[i].ln();
            }
            total += self
                .family
                .natural_objective(&theta.components[i], w, s.component_stat(i));
        }
        Ok(total)
    }

    fn param_coords(&self, theta: &MixtureParam) -> Vec<f64> {
        let mut v = theta.weights.clone();
        for c in &theta.components {
            v.extend_from_slice(c);
        }
        v
    }

    /// Weights are renormalised to the simplex.
    fn param_from_coords(&self, coords: &[f64]) -> Result<MixtureParam> {
        let m = self.n_components;
        let p = self.family.param_dim();
        if coords.len() != m * (1 + p) {
            return Err(Error::Argument(format!(
                "expected {} coordinates, got {}",
                m * (1 + p),
                coords.len()
            )));
        }
        let total: f64 = coords[..m].iter().sum();
        let weights = coords[..m].iter().map(|w| w / total).collect();
        let components = coords[m..].chunks(p).map(|c| c.to_vec()).collect();
        let theta = MixtureParam { weights, components };
        self.validate_param(&theta)?;
        Ok(theta)
    }

    fn param_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = (1..=self.n_components).map(|i| format!("w{i}")).collect();
        let suffixes = self.family.param_labels();
        for i in 1..=self.n_components {
            for s in &suffixes {
                labels.push(format!("{s}{i}"));
            }
        }
        labels
    }

    /// `(w_1, ..., w_{m-1}, beta_1, ..., beta_m)`; the last weight is implied.
    fn reduced_coords(&self, theta: &MixtureParam) -> Vec<f64> {
        let mut v = theta.weights[..self.n_components - 1].to_vec();
        for c in &theta.components {
            v.extend_from_slice(c);
        }
        v
    }

    fn param_from_reduced(&self, reduced: &[f64]) -> Result<MixtureParam> {
        if reduced.len() != self.reduced_len() {
            return Err(Error::Argument(format!(
                "expected {} reduced coordinates, got {}",
                self.reduced_len(),
                reduced.len()
            )));
        }
        let m = self.n_components;
        let mut weights = reduced[..m - 1].to_vec();
        weights.push(1.0 - weights.iter().sum::<f64>());
        let components = reduced[m - 1..]
            .chunks(self.family.param_dim())
            .map(|c| c.to_vec())
            .collect();
        let theta = MixtureParam { weights, components };
        self.validate_param(&theta)?;
        Ok(theta)
    }

    /// Weight block: `r_i / w_i - r_m / w_m`; component block: `r_i grad log g_i`.
    fn score(&self, theta: &MixtureParam, y: &C::Obs) -> Result<Vec<f64>> {
        self.check_interior(theta)?;
        let post = self.posteriors(theta, y)?;
        let m = self.n_components;
        let last = post[m - 1] / theta.weights[m - 1];
        let mut grad: Vec<f64> = (0..m - 1).map(|i| post[i] / theta.weights[i] - last).collect();
        for (p, beta) in post.iter().zip(&theta.components) {
            let g = self.family.grad_log_density(beta, y);
            grad.extend(g.iter().map(|v| p * v));
        }
        Ok(grad)
    }

    /// Weight block `diag(1/w_i) + 1/w_m`, component blocks `w_i I_g(beta_i)`.
    fn complete_fisher(&self, theta: &MixtureParam) -> Result<DMatrix<f64>> {
        self.check_interior(theta)?;
        let m = self.n_components;
        let p = self.family.param_dim();
        let n = self.reduced_len();
        let mut f = DMatrix::zeros(n, n);
        let w_last = theta.weights[m - 1];
        for i in 0..m - 1 {
            for j in 0..m - 1 {
                f[(i, j)] = 1.0 / w_last;
            }
            f[(i, i)] += 1.0 / theta.weights[i];
        }
        for i in 0..m {
            let block = self.family.fisher(&theta.components[i]);
            let off = m - 1 + i * p;
            for a in 0..p {
                for b in 0..p {
                    f[(off + a, off + b)] = theta.weights[i] * block[(a, b)];
                }
            }
        }
        Ok(f)
    }

    fn project_reduced(&self, reduced: &mut [f64], eps: f64) -> bool {
        let m = self.n_components;
        let p = self.family.param_dim();
        let mut moved = false;
        if m > 1 {
            let mut w = reduced[..m - 1].to_vec();
            w.push(1.0 - w.iter().sum::<f64>());
            for v in w.iter_mut() {
                let clipped = v.clamp(eps, 1.0 - eps);
                if clipped != *v {
                    moved = true;
                    *v = clipped;
                }
            }
            if moved {
                let total: f64 = w.iter().sum();
                for (r, v) in reduced[..m - 1].iter_mut().zip(&w) {
                    *r = v / total;
                }
            }
        }
        for beta in reduced[m - 1..].chunks_mut(p) {
            moved |= self.family.project(beta, eps);
        }
        moved
    }
}
