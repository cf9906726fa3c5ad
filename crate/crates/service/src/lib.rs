//! Annotation service: the corpus, the tagger model and the HTTP interface
//! used by the annotation client.
//!
//! - [`wire`]: JSON bodies exchanged with clients.
//! - [`service`]: the shared state and its operations.
//! - [`http`]: routes over [`service::AnnotationService`].

pub mod http;
pub mod service;
pub mod wire;

pub use http::{router, serve};
pub use service::{AnnotationService, ServiceConfig, ServiceError};
