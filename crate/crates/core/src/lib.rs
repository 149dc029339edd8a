pub mod corpus;
pub mod linguistics;
pub mod perturb;
pub mod resources;
pub mod synthetic;
pub mod metrics;
pub mod harness;
pub mod curation;
pub mod cli;
