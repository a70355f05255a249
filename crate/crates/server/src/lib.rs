//! Factory sensor dashboard service: UDP ingest, HTTP/JSON API with a
//! server-sent event stream, and the `sensordash` command-line tool.

pub mod api;
pub mod cli;
pub mod config;
pub mod service;
pub mod udp;

pub use config::{ConfigError, ServiceConfig};
pub use service::{start, start_with_clock, ServeError, ServiceHandle};
