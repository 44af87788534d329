pub mod completion;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod normalizer;
pub mod paths;
pub mod relation;
pub mod scorer;
pub mod store;
