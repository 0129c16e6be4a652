//! Plumbing behind the `paft` binary: flat configs, run directories, exit-code
//! classification and one function per subcommand.

pub mod commands;
pub mod config;
pub mod error;

pub use config::{run_dir, RunConfig};
pub use error::CliError;
