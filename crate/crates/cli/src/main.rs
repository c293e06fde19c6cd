use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use picard_cli::config::{Overrides, RunConfig};
use picard_cli::{run, Command};

const SOLVE_HELP: &str = "\
Estimates u(t, x) by Monte Carlo over independent MLP realizations.

report.csv columns:
  d             spatial dimension
  point         evaluation point, coordinates separated by ';'
  t             evaluation time
  n             MLP level
  M             MLP branching
  runs          number of independent realizations
  estimate      mean of the realizations
  reference     reference solution u(t, x)
  error         |estimate - reference|
  rmse          root mean squared error of the realizations against the reference
  rmse_se       standard error of rmse (delta method)
  m06_bound     theoretical L2 error bound of the MLP approximation
  within_bound  rmse <= m06_bound";

const COMPILE_HELP: &str = "\
Compiles fixed-randomness MLP evaluations into ReLU networks, checks them
against the direct evaluator and against the size formulas.

report.csv columns:
  d                 spatial dimension
  n                 MLP level
  M                 MLP branching
  depth             entries of the dimension vector (layers + 1)
  depth_expected    depth predicted by the size formula
  width_max         largest hidden width
  width_bound       c (3M)^n
  param_count       weights plus biases
  param_bound       2 depth w (w + 1) with w = width_bound
  max_scaled_error  max |network - evaluator| / max(1, |evaluator|) over the check points
  equivalence_ok    max_scaled_error <= tolerance
  bounds_ok         depth matches and width, parameter bounds hold
  network_file      path of the network JSON, relative to the output directory";

const PIPELINE_HELP: &str = "\
Sizes, compiles and measures the end-to-end network for every (d, eps).

report.csv columns:
  d              spatial dimension
  eps            target L2 accuracy
  theory_levels  theoretical level N (with M = N)
  theory_delta   theoretical accuracy of the f- and g-networks
  c_d            theoretical error constant
  n              level used to build the network
  M              branching used to build the network
  f_delta        accuracy used for the f- and g-networks
  depth          entries of the dimension vector (empty when skipped)
  width          largest hidden width (empty when skipped)
  param_count    weights plus biases (empty when skipped)
  l2_error       Monte Carlo estimate of the L2 error over the measure (empty when skipped)
  l2_se          standard error of l2_error (empty when skipped)
  within_eps     l2_error + 2 l2_se <= eps
  status         ok, fail, or skipped (resource ceiling)";

const INTERP_HELP: &str = "\
Builds clipped piecewise-linear networks for named scalar functions.

report.csv columns:
  function        function name
  lipschitz       Lipschitz constant L
  f0_abs          |f(0)|
  q               growth exponent of the error weight
  eps             target weighted accuracy
  radius          clipping radius R
  cells           number of grid cells N
  width           hidden width (N + 1)
  width_bound     closed-form width guarantee
  width_ok        width <= width_bound
  weighted_error  max |f - network| / (1 + |x|^q) over the scan
  error_ok        weighted_error <= eps
  network_file    path of the network JSON, relative to the output directory";

/// Multilevel Picard solvers for semilinear heat equations and their
/// compilation into ReLU networks.
///
/// Exit codes: 0 success, 2 config error, 3 check failure, 4 resource ceiling.
#[derive(Parser, Debug)]
#[command(name = "picard", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Monte Carlo MLP estimates against reference solutions.
    #[command(after_long_help = SOLVE_HELP)]
    Solve(Common),
    /// Compile MLP evaluations into ReLU networks and check them.
    #[command(after_long_help = COMPILE_HELP)]
    Compile(Common),
    /// End-to-end sizing, compilation and error measurement over (d, eps).
    #[command(after_long_help = PIPELINE_HELP)]
    Pipeline(Common),
    /// Clipped piecewise-linear approximations of scalar functions.
    #[command(after_long_help = INTERP_HELP)]
    Interp(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed of all random draws.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "INT")]
    threads: Option<usize>,
    /// Node and parameter ceiling.
    #[arg(long, value_name = "INT")]
    ceiling: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (cmd, common) = match cli.command {
        Cmd::Solve(c) => (Command::Solve, c),
        Cmd::Compile(c) => (Command::Compile, c),
        Cmd::Pipeline(c) => (Command::Pipeline, c),
        Cmd::Interp(c) => (Command::Interp, c),
    };
    let mut cfg = match &common.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("picard: {e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides { seed: common.seed, out: common.out, threads: common.threads, ceiling: common.ceiling });
    match run(cmd, &cfg) {
        Ok(summary) => {
            for line in summary.lines {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("picard: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use picard_cli::commands;

    #[test]
    fn every_column_is_documented() {
        for (help, cols) in [
            (SOLVE_HELP, commands::solve::COLUMNS),
            (COMPILE_HELP, commands::compile::COLUMNS),
            (PIPELINE_HELP, commands::pipeline::COLUMNS),
            (INTERP_HELP, commands::interp::COLUMNS),
        ] {
            let documented: Vec<&str> = help
                .lines()
                .filter(|l| l.starts_with("  "))
                .filter_map(|l| l.split_whitespace().next())
                .collect();
            assert_eq!(documented, cols);
        }
    }

    #[test]
    fn cli_parses() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
