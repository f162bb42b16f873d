pub mod agreement;
pub mod analysis;
pub mod bio;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod llm;
pub mod metrics;
pub mod pooling;
pub mod span;
