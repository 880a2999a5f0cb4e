//! Exhaustive recovery of sufficient adjustment sets.
//!
//! Given an outcome `Y`, a binary treatment `T` and predictors `X1..Xp`,
//! `adjustkit` scores every subset `A` of the predictors with an inverse
//! regression criterion that vanishes exactly on the sets with
//! `Y(t) ⟂ T | X_A`, and cuts the sorted scores with a ridge-ratio rule.
//!
//! ```
//! use adjustkit::{criterion_table, select, CriterionConfig, SelectorConfig, Variant};
//! use adjustkit::sim::{sample_model, ModelSpec};
//!
//! let sample = sample_model(&ModelSpec::new(1, 800, 7)?)?;
//! let table = criterion_table(&sample.data, 0, Variant::Normal, &CriterionConfig::default())?;
//! let result = select(&table, &SelectorConfig::for_sample_size(800))?;
//! assert!(result.selected.len() > 0);
//! # Ok::<(), adjustkit::Error>(())
//! ```
//!
//! The accompanying book (`book/`) walks through each stage.

pub mod analysis;
pub mod collection;
pub mod copula;
pub mod criterion;
pub mod dag;
pub mod data;
pub mod error;
pub mod inverse_regression;
pub mod linalg;
pub mod selection;
pub mod sim;
pub mod subset;

pub use analysis::{estimate_ate, Hints, StructureReport};
pub use collection::{AdjustmentCollection, Source};
pub use criterion::{criterion_table, criterion_table_over, CriterionConfig, CriterionTable, Variant};
pub use dag::{Dag, Node};
pub use data::Dataset;
pub use error::{Error, Result};
pub use inverse_regression::{CandidateOptions, Method};
pub use selection::{select, SelectionResult, SelectorConfig};
pub use subset::SubsetId;

// Book chapters are compiled as doc-tests so their snippets stay current.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/subsets.md")]
    mod subsets {}
    #[doc = include_str!("../../../book/src/inverse_regression.md")]
    mod inverse_regression {}
    #[doc = include_str!("../../../book/src/criterion.md")]
    mod criterion {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/copula.md")]
    mod copula {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
