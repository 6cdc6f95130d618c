//! Interaction-network extraction from web-service descriptions and the
//! complex-network measures used to compare syntactic and semantic networks.

pub mod community;
pub mod corpus;
pub mod export;
pub mod gen;
pub mod graph;
pub mod matcher;
pub mod metrics;
pub mod netbuild;
pub mod ontology;
pub mod plfit;
pub mod report;
