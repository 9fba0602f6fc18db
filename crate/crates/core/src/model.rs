//! The contract shared by every latent-variable model.
//!
//! A model is a complete-data exponential family whose conditional
//! expectation of the sufficient statistic given an observation (the E-step)
//! and whose complete-data maximiser (the M-step map from statistics to
//! parameters) are both available in closed form. Every estimator in
//! [`crate::estimators`] is written once against [`LatentModel`].
//!
//! Sufficient statistics are points of a finite-dimensional convex set and
//! are manipulated through their flat coordinates, so convex combinations,
//! block averages and incremental refreshes are model-agnostic.

use std::fmt::Debug;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A point in a model's convex statistic space, viewed as flat coordinates.
pub trait SufficientStat: Clone + Debug + PartialEq + Send + Sync {
    fn coords(&self) -> &[f64];
    fn coords_mut(&mut self) -> &mut [f64];

    fn dim(&self) -> usize {
        self.coords().len()
    }

    fn is_finite(&self) -> bool {
        self.coords().iter().all(|c| c.is_finite())
    }
}

/// Complete-data exponential-family model with closed-form E- and M-steps.
///
/// Parameters have two coordinate systems: the full one returned by
/// [`param_coords`](LatentModel::param_coords) (used for averaging and for
/// output) and the reduced, unconstrained-dimension one used for scores and
/// Fisher matrices (e.g. a mixture drops its last weight).
pub trait LatentModel: Send + Sync {
    type Obs: Clone + Debug + Send + Sync;
    type Param: Clone + Debug + PartialEq + Send + Sync;
    type Stat: SufficientStat;

    fn stat_dim(&self) -> usize;

    /// The all-zero statistic (not necessarily admissible).
    fn zero_stat(&self) -> Self::Stat;

    /// Whether the M-step is defined at `s`.
    fn admissible(&self, s: &Self::Stat) -> bool;

    fn validate_param(&self, theta: &Self::Param) -> Result<()>;

    fn validate_obs(&self, y: &Self::Obs) -> Result<()>;

    /// Conditional expectation of the complete-data statistic given `y`.
    fn estep(&self, theta: &Self::Param, y: &Self::Obs) -> Result<Self::Stat>;

    /// Complete-data maximiser at statistic `s`.
    fn mstep(&self, s: &Self::Stat) -> Result<Self::Param>;

    /// Observed-data log-density of `y`.
    fn log_likelihood(&self, theta: &Self::Param, y: &Self::Obs) -> Result<f64>;

    /// The complete-data objective `<s, psi(theta)> - A(theta)`, up to
    /// parameter-free constants. `mstep(s)` maximises it over `theta`.
    fn complete_objective(&self, theta: &Self::Param, s: &Self::Stat) -> Result<f64>;

    fn param_coords(&self, theta: &Self::Param) -> Vec<f64>;

    fn param_from_coords(&self, coords: &[f64]) -> Result<Self::Param>;

    /// Column names matching [`param_coords`](LatentModel::param_coords).
    fn param_labels(&self) -> Vec<String>;

    fn reduced_coords(&self, theta: &Self::Param) -> Vec<f64>;

    fn param_from_reduced(&self, reduced: &[f64]) -> Result<Self::Param>;

    /// Gradient of [`log_likelihood`](LatentModel::log_likelihood) in reduced coordinates.
    fn score(&self, theta: &Self::Param, y: &Self::Obs) -> Result<Vec<f64>>;

    /// Complete-data Fisher information in reduced coordinates.
    fn complete_fisher(&self, _theta: &Self::Param) -> Result<DMatrix<f64>> {
        Err(Error::Unsupported("complete_fisher"))
    }

    /// Clip reduced coordinates back into the parameter set, at distance
    /// `eps` from its boundary. Returns whether anything moved.
    fn project_reduced(&self, _reduced: &mut [f64], _eps: f64) -> bool {
        false
    }
}

/// `s <- (1 - gamma) s + gamma e`, coordinate-wise.
pub fn convex_update<S: SufficientStat>(s: &mut S, gamma: f64, e: &S) {
    for (a, b) in s.coords_mut().iter_mut().zip(e.coords()) {
        *a = (1.0 - gamma) * *a + gamma * *b;
    }
}

/// `s <- s + w e`, coordinate-wise.
pub fn add_scaled<S: SufficientStat>(s: &mut S, w: f64, e: &S) {
    for (a, b) in s.coords_mut().iter_mut().zip(e.coords()) {
        *a += w * *b;
    }
}

/// Average of the E-step statistics of `data` at `theta`.
pub fn mean_estep<M: LatentModel>(model: &M, theta: &M::Param, data: &[M::Obs]) -> Result<M::Stat> {
    mean_estep_iter(model, theta, data.iter())
}

/// [`mean_estep`] over borrowed observations: sums the per-observation
/// statistics in order, then divides by their count.
pub fn mean_estep_iter<'a, M, I>(model: &M, theta: &M::Param, data: I) -> Result<M::Stat>
where
    M: LatentModel,
    M::Obs: 'a,
    I: IntoIterator<Item = &'a M::Obs>,
{
    let mut acc = model.zero_stat();
    let mut count = 0usize;
    for (t, y) in data.into_iter().enumerate() {
        let e = model
            .estep(theta, y)
            .map_err(|e| e.context(format!("observation {t}")))?;
        for (a, b) in acc.coords_mut().iter_mut().zip(e.coords()) {
            *a += *b;
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Argument("cannot average E-step over empty data".into()));
    }
    let n = count as f64;
    for a in acc.coords_mut() {
        *a /= n;
    }
    Ok(acc)
}

/// `(1/N) sum_t log f_theta(y_t)`.
pub fn normalized_loglik<M: LatentModel>(model: &M, theta: &M::Param, data: &[M::Obs]) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Argument("log-likelihood of empty data".into()));
    }
    let mut total = 0.0;
    for y in data {
        total += model.log_likelihood(theta, y)?;
    }
    Ok(total / data.len() as f64)
}

/// Average analytic score over `data`.
pub fn empirical_score<M: LatentModel>(model: &M, theta: &M::Param, data: &[M::Obs]) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Argument("score of empty data".into()));
    }
    let mut acc = vec![0.0; model.reduced_coords(theta).len()];
    for y in data {
        for (a, g) in acc.iter_mut().zip(model.score(theta, y)?) {
            *a += g;
        }
    }
    let n = data.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Ok(acc)
}

/// Central finite-difference gradient of the normalised log-likelihood in
/// reduced coordinates. Independent of [`LatentModel::score`].
pub fn finite_difference_score<M: LatentModel>(
    model: &M,
    theta: &M::Param,
    data: &[M::Obs],
    step: f64,
) -> Result<Vec<f64>> {
    let base = model.reduced_coords(theta);
    let mut grad = Vec::with_capacity(base.len());
    for i in 0..base.len() {
        let h = step * base[i].abs().max(1.0);
        let mut up = base.clone();
        let mut down = base.clone();
        up[i] += h;
        down[i] -= h;
        let f_up = normalized_loglik(model, &model.param_from_reduced(&up)?, data)?;
        let f_down = normalized_loglik(model, &model.param_from_reduced(&down)?, data)?;
        grad.push((f_up - f_down) / (2.0 * h));
    }
    Ok(grad)
}

pub fn euclidean_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
