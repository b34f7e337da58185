//! Recourse generation and recourse invalidation under model updates.
//!
//! The crate trains paired classifiers on shifted data, generates recourses
//! against the first model, measures how many the second model rejects, and
//! checks the closed-form invalidation probabilities for boundaries that move
//! in parallel. The `book/` directory alongside the workspace walks through
//! each piece with runnable snippets.

pub mod dataset;
pub mod error;
pub mod models;
mod optim;
pub mod recourse;
pub mod seed;
pub mod shiftlab;
pub mod theory;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/datasets.md")]
    mod datasets {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/recourse.md")]
    mod recourse {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
}
