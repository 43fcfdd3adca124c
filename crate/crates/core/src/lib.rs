//! Holographic Graph Neuron.
//!
//! Patterns observed by a flat array of Graph Neurons are encoded as a
//! single binary hypervector (a majority sum of per-neuron symbol codes),
//! stored in an unsorted list and recalled by Hamming distance. The
//! [`analysis`] module predicts how many components a bundle can hold and
//! how much overlap two bundles need before it shows in their distance.

pub mod analysis;
pub mod bsc;
pub mod encoder;
pub mod error;
pub mod experiments;
pub mod glyphs;
pub mod memory;
pub mod seed;

pub use bsc::{majority_bundle, BitAccumulator, Distance, HDVector, MIN_DIMENSION};
pub use encoder::{bundle_class, Codebook, GnArraySpec, SymbolPattern};
pub use error::{Error, Result};
pub use glyphs::{Bitmap, GlyphSet};
pub use memory::{Engine, Hit, PatternStore, QueryResult};
pub use seed::Seed;
