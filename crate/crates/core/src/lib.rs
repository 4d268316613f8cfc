//! Exact singular modules for truncated current algebras `g[z]/z^p`, their Sugawara
//! operators and coinvariants, and the universal irregular KZ connection.

pub mod lie_core;
pub mod linalg;
pub mod rational;
pub mod current_algebra;
pub mod weights;
pub mod singular_module;
pub mod tensor;
pub mod connection;
pub mod cli;
pub mod coinvariants;
pub mod config;
pub mod transport;
