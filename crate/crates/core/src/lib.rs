//! Disintegrated PAC-Bayes bounds for single hypotheses drawn from a
//! posterior, bound-minimizing training of Gaussian-perturbed networks,
//! information-theoretic variants on finite problems, and an exact or Monte
//! Carlo simulator that checks each bound holds with probability `1 - delta`.

pub mod binary_kl;
pub mod bounds;
pub mod divergences;
pub mod error;
pub mod gaussian_net;
pub mod mutual_info;
pub mod training;
pub mod validity_sim;

pub use binary_kl::{kl, kl_inv, kl_inverse, kl_inverse_grad, pinsker_gap, KlInverseResult, RiskPair};
pub use bounds::{BoundContext, BoundReport, Method};
pub use divergences::{DiscreteMeasure, IsotropicGaussian};
pub use error::{Error, Result};
