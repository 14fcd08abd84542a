//! Author name disambiguation over bibliographic records.
//!
//! Records are blocked on atomic name variates (first initial plus last
//! name); each block gets its own feed-forward classifier over character-level
//! name embeddings and contextual title/source embeddings. Ambiguous names in
//! new records are resolved by summing the classifier's probabilities over all
//! co-author pairs of the record.

pub mod blocking;
pub mod classifier;
pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod inference;
pub mod synthgen;
pub mod training;
pub mod util;
