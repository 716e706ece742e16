//! Batch runner, report export and review service around `dehesa-core`.

pub mod batch;
pub mod export;
pub mod pipeline;
pub mod server;

pub use batch::{run_batch, BatchConfig, BatchError};
pub use server::{router, Workspace};
