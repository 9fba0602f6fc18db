//! Concrete models: single-factor PPCA and finite exponential-family mixtures.

pub mod mixture;
pub mod ppca1;

pub use mixture::{ComponentFamily, FiniteMixture, MixtureParam, MixtureStat, Poisson, PoissonMixture};
pub use ppca1::{Ppca1, Ppca1Param, Ppca1Stat};
