//! Hidden stochastic games: beliefs, structural coefficients, Doeblin
//! certificates, finite abstractions and their uniform values.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

// `!(x > 0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod belief;
pub mod coupling;
pub mod error;
pub mod fixtures;
pub mod format;
pub mod game;
pub mod matrix;
pub mod pipeline;
pub mod scalar;
pub mod solver;
pub mod stochastic;
pub mod strategy;
pub mod structure;

pub use error::{Error, Result};
pub use game::{Belief, GameSpec};
pub use scalar::Scalar;
pub use stochastic::StochasticGame;
pub use strategy::{History, PlayView, Step, Strategy};
pub use structure::DoeblinCertificate;

pub type Game64 = GameSpec<f64>;
pub type Game32 = GameSpec<f32>;
pub type Belief64 = Belief<f64>;
pub type Belief32 = Belief<f32>;
pub type AbstractGame64 = abstraction::AbstractGame<f64>;
pub type Stochastic64 = StochasticGame<f64>;
pub type Strategy64 = Strategy<f64>;
