pub mod campaign;
pub mod context;
pub mod execution;
pub mod corpus;
pub mod generation;
pub mod instrumentation;
pub mod java;
pub mod journal;
pub mod prompting;
pub mod reporting;
pub mod smells;
