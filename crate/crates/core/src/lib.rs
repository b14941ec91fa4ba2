//! Pool-based active learning under biased label non-response.
//!
//! The crate simulates active-learning loops where a queried label may never
//! arrive, with response probabilities drawn from full, MCAR or MAR
//! mechanisms. Acquisition strategies are registered by name in
//! [`acquisition::StrategyRegistry`]; the optional UCB-EU correction weights
//! informativeness by an optimistic response-probability estimate.

pub mod acquisition;
pub mod config;
pub mod data;
pub mod dgp;
pub mod engine;
pub mod error;
pub mod io;
pub mod learners;
pub mod nonresponse;
pub mod numerics;
pub mod response_model;
pub mod rng;

pub use error::{Error, Result};
