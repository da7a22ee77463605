//! Codes over q-ary alphabets that correct a single burst of at most `t`
//! deletions, or `t` deletions localized to a window of length `t`, plus the
//! supporting machinery: the differential map ψ and its VT-style syndromes,
//! locally-balanced sequence predicates and counting, the good-triple
//! parameter analysis, P-bounded burst-error sketches, and a two-stage
//! systematic encoder into sequences whose differential is strongly
//! locally balanced.
//!
//! Index conventions: all public positions are 1-based, words are sequences
//! over `{0, .., q-1}` with `2 <= q <= 256`, and the empty word is valid
//! input wherever a length precondition does not say otherwise.

pub mod balance;
pub mod codes;
pub mod sbl;
pub mod seq;
pub mod sketch;
pub mod triples;

pub use seq::Word;
