pub mod ats;
pub mod harness;
pub mod metrics;
pub mod sampling;
pub mod store;
pub mod types;
