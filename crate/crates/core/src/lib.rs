pub mod error;
pub mod experiment;
pub mod features;
pub mod forest;
pub mod graph;
pub mod logistic;
pub mod persist;
pub mod prevision;
pub mod rng;
pub mod sfbn;
pub mod triads;

pub use error::{Error, Result};
pub use features::{featurize, FeatureVector, FEATURE_NAMES};
pub use graph::{DiGraph, ValuedEdgeList};
pub use sfbn::{EventCounts, ModelSpec, ParamVector, Sampler};
