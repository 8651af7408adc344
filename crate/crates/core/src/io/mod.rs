//! Readers, writers, artifact formats and synthetic data.

pub mod artifact;
pub mod codec;
pub mod sparse;
pub mod synth;
pub mod table;
pub mod vecs;

pub use artifact::{
    read_buckets, read_clustering, read_seed_groups, write_assignment_text, write_buckets,
    write_clustering, write_seed_groups,
};
pub use sparse::{parse_sparse, read_sparse, write_sparse};
pub use synth::{gen_synthetic, SynthKind, SynthSpec, Synthetic, Truth};
pub use table::{parse_csv, read_categorical_csv, ColumnType, CsvTable, Dictionaries, Schema};
pub use vecs::{
    parse_vecs, read_bvecs, read_fvecs, read_vecs, write_bvecs, write_fvecs, write_vecs, VecsFormat,
};
