//! Pipeline driver, bundle format, story components and HTTP service.

pub mod bundle;
pub mod pipeline;
pub mod server;
pub mod story;
