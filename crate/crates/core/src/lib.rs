//! Computational engine for self-similar groups acting on rooted trees.
//!
//! Elements are words over the states of a finite wreath recursion ([`Automaton`]). On top of
//! exact element arithmetic the crate offers nucleus computation for contracting groups,
//! classification of fixed ends, finite level quotients with their uniform (Haar) measure,
//! the subindependence check for cone sets, and the fixed-point statistics used to show that
//! almost no element of the closure fixes an end.
//!
//! All measures are exact rationals.

pub mod ends;
pub mod error;
pub mod fpp;
pub mod nucleus;
pub mod quotient;
pub mod text;
pub mod wreath;

pub use error::{Diagnostic, Error, Result};
pub use text::{parse_automaton, parse_element};
pub use wreath::{
    Automaton, Element, Equality, LevelPerm, Letter, MachineNode, Perm, SectionMachine, StateSpec,
    Symbol, Target, Vertex,
};

/// Exact measure values.
pub type Measure = num_rational::Ratio<u64>;

/// Largest permutation table (number of leaves) built by default.
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 22;
/// Default cap on explored sections per closure or equality test.
pub const DEFAULT_CLOSURE_BUDGET: usize = 10_000;
/// Default cap on the order of an enumerated level quotient.
pub const DEFAULT_QUOTIENT_BUDGET: usize = 2_000_000;

/// Every resource cap used by the engine, with the documented defaults.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Budgets {
    /// Largest number of leaves of a permutation table.
    pub table_leaves: usize,
    /// Distinct section words explored per closure or equality test.
    pub closure_nodes: usize,
    /// Largest enumerated level quotient.
    pub quotient_elements: usize,
    /// Largest nucleus.
    pub nucleus_elements: usize,
    /// Generations of the nucleus closure.
    pub nucleus_generations: usize,
    /// Word length for subgroup membership searches.
    pub word_search_len: usize,
    /// Elements visited by a membership word search.
    pub word_search_elements: usize,
    /// Highest level used by the quotient membership sieve.
    pub sieve_level: usize,
    /// Candidates examined per search run.
    pub search_candidates: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            table_leaves: DEFAULT_TABLE_BUDGET,
            closure_nodes: DEFAULT_CLOSURE_BUDGET,
            quotient_elements: DEFAULT_QUOTIENT_BUDGET,
            nucleus_elements: 50_000,
            nucleus_generations: 64,
            word_search_len: 12,
            word_search_elements: 20_000,
            sieve_level: 6,
            search_candidates: 1_000_000,
        }
    }
}

pub(crate) mod serde_ratio {
    use serde::Serializer;

    use crate::Measure;

    pub fn serialize<S: Serializer>(r: &Measure, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(r: &Option<Measure>, s: S) -> Result<S::Ok, S::Error> {
            match r {
                Some(r) => super::serialize(r, s),
                None => s.serialize_none(),
            }
        }
    }
}
