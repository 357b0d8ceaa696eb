//! Service side of the workbench: persistent session records, the HTTP API,
//! and helpers shared with the command line.

pub mod api;
pub mod store;

use std::path::Path;
use std::sync::Arc;

use blockvision_core::detect::PipelineConfig;

pub use api::{router, AppState};
pub use store::{SessionRecord, Store, StoreError};

/// Env var naming the persistence root.
pub const DATA_ENV: &str = "BLOCKVISION_DATA";

/// Builds the app state over `data` (in memory when `None`).
pub fn app_state(data: Option<&Path>, pipeline: PipelineConfig) -> Result<Arc<AppState>, StoreError> {
    let store = match data {
        Some(root) => Store::open(root)?,
        None => Store::in_memory(),
    };
    Ok(Arc::new(AppState { store, pipeline }))
}
