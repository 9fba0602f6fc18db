use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson as PoissonDist, StandardNormal};

use crate::error::{Error, Result};
use crate::model::LatentModel;
use crate::models::{MixtureParam, PoissonMixture, Ppca1, Ppca1Param};

/// `n` draws of `Y = u X + sqrt(lambda) N` with `X ~ N(0, 1)` and
/// `N ~ N(0, I_d)` independent.
pub fn sample_ppca1<R: Rng + ?Sized>(theta: &Ppca1Param, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    Ppca1::new(theta.u.len())?.validate_param(theta)?;
    let sd = theta.lambda.sqrt();
    let draws = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(rng);
            theta
                .u
                .iter()
                .map(|&u| {
                    let z: f64 = StandardNormal.sample(rng);
                    u * x + sd * z
                })
                .collect()
        })
        .collect();
    Ok(draws)
}

/// `n` draws from a Poisson mixture: a component index with probabilities
/// `weights`, then a Poisson count with that component's mean.
pub fn sample_poisson_mixture<R: Rng + ?Sized>(theta: &MixtureParam, n: usize, rng: &mut R) -> Result<Vec<u64>> {
    PoissonMixture::poisson(theta.n_components())?.validate_param(theta)?;
    let pick = WeightedIndex::new(&theta.weights).map_err(|e| Error::Domain(format!("mixture weights: {e}")))?;
    let counts = theta
        .means()
        .into_iter()
        .map(|b| PoissonDist::new(b).map_err(|e| Error::Domain(format!("Poisson mean {b}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..n)
        .map(|_| {
            let i = pick.sample(rng);
            counts[i].sample(rng) as u64
        })
        .collect())
}
