//! Exact construction and verification of Følner sets in finitely
//! generated amenable groups: cubes of commuting elements, extension
//! combinators, enumerate-and-check search, Følner-function tabulation,
//! distortion functions, and Følner-function upper bounds.
//!
//! All defect arithmetic is exact rational; there are no tolerances.

pub mod cli;
pub mod combinators;
pub mod error;
pub mod folner;
pub mod groups;
pub mod search;
pub mod spec;
pub mod words;

pub use error::{Error, Result};
