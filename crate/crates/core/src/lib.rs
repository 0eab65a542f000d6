pub mod core_algebra;
pub mod error;
pub mod lattices;
pub mod orders;
pub mod quad;
pub mod classsets;
pub mod embeddings;
pub mod bimodules;
pub mod specialize;
pub mod cli;
