pub mod cli;
pub mod engine;
pub mod filter;
pub mod fixtures;
pub mod plan;
pub mod retrieval;
pub mod service;
pub mod text;
