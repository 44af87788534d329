//! Test support shared by the densekg crates: random inputs, brute-force
//! reference implementations and an in-process HTTP scoring service.

pub mod checks;
pub mod corpus;
pub mod graphs;
pub mod oracles;
pub mod service;
pub mod synthetic;
