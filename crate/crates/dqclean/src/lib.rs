//! Storage, file formats, HTTP service and CLI support for the cleaning engine.

pub mod analysis;
pub mod embed;
pub mod error;
pub mod formats;
pub mod service;
pub mod simulate;
pub mod store;

pub use dqclean_core as core;
pub use error::{Error, ErrorClass, Result};
pub use store::Store;
