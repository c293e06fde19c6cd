//! Library side of the `picard` command-line tool: configuration, builtin
//! problems, reference solutions and the four commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod problems;
pub mod report;
pub mod sampling;

use config::RunConfig;
use error::{CliError, CliResult};

pub use commands::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Compile,
    Pipeline,
    Interp,
}

/// Validates `cfg` and runs `cmd` on a pool of `cfg.threads` workers.
pub fn run(cmd: Command, cfg: &RunConfig) -> CliResult<Summary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
    let job = || match cmd {
        Command::Solve => commands::solve::run(cfg),
        Command::Compile => commands::compile::run(cfg),
        Command::Pipeline => commands::pipeline::run(cfg),
        Command::Interp => commands::interp::run(cfg),
    };
    with_threads(cfg.threads, job)
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(threads: usize, job: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Internal(format!("cannot start worker pool: {e}")))?;
    pool.install(job)
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_threads: usize, job: impl FnOnce() -> CliResult<T> + Send) -> CliResult<T> {
    job()
}
