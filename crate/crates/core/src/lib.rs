pub mod attribute;
pub mod bracket;
pub mod corpus;
pub mod enrich;
pub mod export;
pub mod grammar;
pub mod metrics;
pub mod pipeline;
pub mod rewrite;
pub mod similarity;
pub mod synthetic;
pub mod tree;
