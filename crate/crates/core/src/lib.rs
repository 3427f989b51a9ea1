//! Exact-enumeration laboratory for contrastive representation learning
//! over finite latent-class models.
//!
//! Numeric modules are generic over [`scalar::Real`] (`f32` or `f64`).
//! The aliases below fix `f64`, which is what the verifier and the command
//! line runner use.

pub mod complexity;
pub mod deviation;
pub mod error;
pub mod latent_model;
pub mod linalg;
pub mod losses;
pub mod representation;
pub mod rng;
pub mod scalar;
pub mod supervised;
pub mod training;
pub mod verifier;

pub use error::{Error, Result};

pub type Distribution = latent_model::FiniteDistribution<f64>;
pub type Model = latent_model::LatentClassModel<f64>;
pub type Stats = latent_model::CollisionStats<f64>;
pub type Repr = representation::Representation<f64>;
pub type Loss = losses::LossKind<f64>;
