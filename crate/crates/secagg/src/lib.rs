//! Command-line front end and std-only pieces for `secagg-core`: CSV/JSON
//! emission, a socket-backed transport, and parallel experiment drivers.

pub mod cli;
pub mod format;
pub mod socket;

pub use cli::{run, Cli, CliError};
pub use socket::SocketTransport;
