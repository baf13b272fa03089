pub mod alignment;
pub mod cdn_extract;
pub mod dataset;
pub mod embedding;
pub mod evaluation;
pub mod graph;
pub mod learner;
pub mod pipeline;
pub mod seed;
pub mod synthetic;
