//! From Li-Yorke data to a time sequence Q along which the same points are
//! distributionally scrambled.
//!
//! Pairwise: collect proximal times (k-th one within `2^-k`) and distal
//! times (beyond `δ`) for every pair, then merge all of them into one Q in
//! which each has upper density one. Uniform: a nested family of point sets
//! that are simultaneously proximal and rigid supplies one proximal and one
//! rigidity sequence per level, merged the same way.

mod pipeline;
mod uniform;
mod witnesses;

pub use pipeline::{chaotic_set_to_sequence, MemberAudit, PairReport, SequenceReport};
pub use uniform::{
    synthetic_uniform_witness, uniform_chaotic_to_sequence, Claim, ReturnCheck, SyntheticLayout,
    UniformChaoticWitness, UniformReport, WitnessLevel,
};
pub use witnesses::{extract_witnesses, DeltaPolicy, PairWitness, WitnessSequences, FLOAT_TOLERANCE};
