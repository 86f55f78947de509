//! Set families in the Boolean lattice: forbidden-subposet detection,
//! cyclic-interval chain certificates, and exact extremal search.
//!
//! The crate is organized around [`lattice::SetFamily`], a duplicate-free
//! collection of subsets of `[n] = {1, …, n}` ordered by containment.
//! On top of it sit four subsystems:
//!
//! * [`lattice`] — ground-set arithmetic, levels, the standard extremal
//!   constructions, and the family file format.
//! * [`pattern`] — finite poset patterns (chains, V, Λ, Y_k, Y_k′, the
//!   butterfly) and weak/induced embedding search.
//! * [`cyclic`] — the cyclic interval system and its two chain partitions.
//! * [`grouping`] — weight certificates over the `2n` interval chains that
//!   prove `|A ∩ I(n)^π| ≤ kn` for induced {Y_k, Y_k′}-free families, with
//!   an independent re-checker.
//! * [`certio`] — the line-oriented certificate text format.
//! * [`search`] — brute-force and branch-and-bound computation of the
//!   extremal functions, LYM sums in exact rational arithmetic, and the
//!   permutation double-counting identity.
//!
//! The `yfree` binary (see [`cli`]) exposes all of this as reproducible
//! command-line experiments.

pub mod certio;
pub mod cli;
pub mod cyclic;
pub mod grouping;
pub mod lattice;
pub mod pattern;
pub mod search;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A text input failed to parse. `line` is 1-based.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// An argument violated a documented precondition.
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
