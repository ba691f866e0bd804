//! Word sense disambiguation benchmark suite.
//!
//! The crate covers the whole experimental pipeline for lexical-sample WSD:
//! corpus ingestion ([`corpus`]), text preprocessing ([`textproc`]), sparse
//! binary feature extraction ([`features`]), dense linear algebra
//! ([`linalg`]), PCA / kernel PCA ([`reduction`]), the shallow learners
//! ([`baselines`]), deep belief networks ([`dbn`]) and scoring plus the
//! benchmark driver ([`eval`]). The `wsd` binary in this crate wires those
//! pieces together (see [`cli`]).

pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod dbn;
pub mod eval;
pub mod features;
pub mod linalg;
pub mod model;
pub mod reduction;
pub mod synthetic;
pub mod textproc;
pub mod util;

pub use corpus::{Corpus, Split, WsdInstance};
pub use features::{FeatureConfig, FeatureSet, Featurizer, SparseBinaryVector, Vocabulary};
pub use model::{Algorithm, ModelConfig, ModelFile};

