//! Static cost estimation for SPARQL basic graph patterns evaluated by
//! zero-knowledge link traversal.

pub mod query;
pub mod analysis;
mod http;
pub mod estimator;
pub mod stats;
pub mod traversal;
pub mod eval;
pub mod route;

#[cfg(test)]
mod samples;
