//! Exact return-set computation for self-maps of split torus-by-abelian
//! models: finitely generated abelian group algebra, multiplicative groups
//! via factorization, integer and group-valued linear recurrences with
//! certified zero-set decompositions, orbit analysis, and an executable
//! verification pipeline for the underlying subgroup constructions.

pub mod error;
pub mod matrix;

pub mod fgab;
pub mod mulgroup;
pub mod lrs;
pub mod decomp;
pub mod expr;
pub mod dynamics;
pub mod semiabelian;
pub mod cli;

pub use error::{Error, Result};
