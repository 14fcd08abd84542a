//! Bibliographic ingestion: DBLP parsing, name normalization, canonical
//! records and corpus statistics.

pub mod dblp;
pub mod names;
pub mod record;
pub mod stats;

pub use dblp::{default_filter, parse_dblp_stream, DblpError, DblpReader};
pub use names::{atomic_name_variate, parse_author_name, AtomicNameVariate, AuthorRef, NameError};
pub use record::{normalize_whitespace, read_all_records, read_records, write_records, BibRecord, RecordError};
pub use stats::{
    compute_block_stats, corpus_counts, name_frequency_histogram, record_in_block, BlockStats, BlockStatsBuilder,
    CorpusCounts, CorpusCountsBuilder, NameHistograms,
};
