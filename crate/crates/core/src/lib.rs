//! Generic clustering over dense vectors, categorical records and sparse sets.
//!
//! The pipeline has three phases:
//!
//! 1. **Transformation** ([`transform`]): every data type is hashed into a
//!    collection of [`Bucket`]s. Dense vectors are projected onto random
//!    Gaussian directions and each table is split evenly into `t` buckets;
//!    categorical records and sparse sets go through MinHash `(K, L)`
//!    bucketing (sparse sets are first reduced with densified one
//!    permutation hashing).
//! 2. **Seeding** ([`silk`]): buckets with similar member sets are grouped
//!    into bins by MinHash, the IDs present in a strict majority of a bin's
//!    buckets form a [`SeedGroup`], and near-duplicate groups are removed.
//!    The number of seeds is an output, never an input.
//! 3. **Assignment** ([`assign`]): one central vector per seed group
//!    (centroid or mode), then one nearest-center pass.
//!
//! [`engine`] runs the same pipeline on `g` shared-nothing workers that
//! exchange only serialized messages. [`baselines`] and [`metrics`] hold the
//! comparators (Lloyd, k-means++, random seeding, k-modes) and the radius
//! report; [`io`] holds the readers, artifact formats, configuration and
//! synthetic data generators.

pub mod assign;
pub mod baselines;
pub mod centers;
pub mod engine;
mod error;
pub mod hashing;
pub mod io;
pub mod metrics;
pub mod model;
pub mod silk;
pub mod transform;

pub use assign::{assign, refine, Clustering};
pub use centers::{seeds_to_centers, PartialCenter};
pub use error::{Error, Result};
pub use hashing::{
    DophReducer, MinHashFunction, Permutation, ProjectionFunction, SetSigner, Signature,
    SignatureScheme,
};
pub use model::{
    categorical_tokens, dist_euclidean, dist_jaccard, Bin, Bucket, BucketId, CategoricalData,
    CenterRepr, CentralVector, Column, DataId, DataSet, DenseData, Metric, MixedData, PayloadKind,
    SeedGroup, SparseData,
};
pub use silk::{bin_buckets, majority_vote, Silk, SilkParams};
pub use transform::{
    discretize_numeric, transform_hetero, transform_homo, transform_mixed, transform_sparse,
    HomoTransformParams, MinhashTransformParams, Transformer,
};
