//! Name index, per-variate blocks and the train/validation/test split.

pub mod block;
pub mod index;
pub mod split;

pub use block::{assemble_block, Block, BlockError, TargetPair};
pub use index::{build_name_index, correspondence_frequency, IndexError, NameIndex};
pub use split::{split_block, SplitAssignment, SplitError, SplitRatios, SplitSet};
