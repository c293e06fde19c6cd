//! Run configuration: one JSON document, with a few fields overridable from
//! the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    /// Spatial dimensions to sweep.
    pub dims: Vec<usize>,
    /// Target accuracies, each in `(0, 1]`.
    pub eps: Vec<f64>,
    /// `(n, M)` pairs. `solve` and `compile` run every pair; `pipeline`
    /// reads one pair per accuracy (a single pair applies to all). When
    /// empty, `pipeline` uses the theoretical sizing.
    pub levels: Vec<(usize, usize)>,
    /// Evaluation time `t`.
    pub time: f64,
    /// Evaluation points for `solve`; a length-1 point is repeated across
    /// all coordinates.
    pub points: Vec<Vec<f64>>,
    pub seed: u64,
    /// Independent MLP realizations per `solve` cell.
    pub runs: usize,
    /// Samples of the measure used to estimate L2 errors in `pipeline`.
    pub samples: usize,
    pub measure: Measure,
    /// Largest admissible node count of one MLP evaluation and parameter
    /// count of one compiled network.
    pub ceiling: f64,
    pub out: PathBuf,
    pub threads: usize,
    /// Accuracy of the f-network in `compile`.
    pub f_accuracy: f64,
    /// When set, `pipeline` builds the f-network at `factor * eps` instead
    /// of the theoretical accuracy.
    pub f_accuracy_factor: Option<f64>,
    /// Random points for the equivalence check of `compile`.
    pub check_points: usize,
    /// Scaled tolerance of the equivalence check.
    pub tolerance: f64,
    /// Whether `pipeline` writes every compiled network to disk.
    pub write_networks: bool,
    pub interp: InterpConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemConfig::default(),
            dims: vec![1],
            eps: vec![0.5],
            levels: vec![(2, 2)],
            time: 0.0,
            points: vec![vec![0.0]],
            seed: 0,
            runs: 100,
            samples: 256,
            measure: Measure::Cube,
            ceiling: picard_core::mlp::DEFAULT_NODE_CEILING,
            out: PathBuf::from("out"),
            threads: 1,
            f_accuracy: 0.25,
            f_accuracy_factor: None,
            check_points: 100,
            tolerance: 1e-9,
            write_networks: false,
            interp: InterpConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    /// One of `linear-norm2`, `ode-exp`, `ode-sin`, `abs-sum`.
    pub name: String,
    pub horizon: f64,
    /// Value of the constant terminal condition of the ODE problems.
    pub terminal: f64,
    /// Stability exponent `q >= 2`.
    pub q: u32,
    /// Level and number of runs of the high-level MLP reference.
    pub reference_level: usize,
    pub reference_runs: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            name: "ode-exp".into(),
            horizon: 1.0,
            terminal: 1.0,
            q: 2,
            reference_level: 4,
            reference_runs: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Measure {
    /// Uniform distribution on `[0, 1]^d`.
    Cube,
    /// Uniform distribution on a finite point list; a length-1 point is
    /// repeated across all coordinates.
    Points { points: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InterpConfig {
    /// Names from `sin`, `abs`, `const`, `clip`, `identity`, `tanh`.
    pub functions: Vec<String>,
    pub q: f64,
    pub eps: Vec<f64>,
    /// Sample points of the weighted error scan.
    pub scan_points: usize,
}

impl Default for InterpConfig {
    fn default() -> Self {
        Self {
            functions: vec!["sin".into()],
            q: 2.0,
            eps: vec![0.1],
            scan_points: 20_001,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub ceiling: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(threads) = o.threads {
            self.threads = threads;
        }
        if let Some(ceiling) = o.ceiling {
            self.ceiling = ceiling as f64;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.dims.is_empty() || self.eps.is_empty() || self.points.is_empty() {
            return bad("dims, eps and points must be nonempty".into());
        }
        if self.dims.contains(&0) {
            return bad("dimensions must be positive".into());
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("accuracy {e} outside (0, 1]"));
        }
        if self.levels.iter().any(|&(_, m)| m == 0) {
            return bad("branching M must be >= 1".into());
        }
        if !(self.problem.horizon > 0.0 && self.problem.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.problem.horizon));
        }
        if !(0.0..=self.problem.horizon).contains(&self.time) {
            return bad(format!("time {} outside [0, {}]", self.time, self.problem.horizon));
        }
        if self.problem.q < 2 {
            return bad(format!("q must be >= 2, got {}", self.problem.q));
        }
        if self.runs == 0 || self.samples == 0 || self.problem.reference_runs == 0 {
            return bad("runs, samples and reference_runs must be positive".into());
        }
        if self.threads == 0 {
            return bad("threads must be >= 1".into());
        }
        if !(self.ceiling > 0.0) {
            return bad("ceiling must be positive".into());
        }
        if !(self.f_accuracy > 0.0 && self.f_accuracy < 1.0) {
            return bad(format!("f_accuracy must lie in (0, 1), got {}", self.f_accuracy));
        }
        if let Some(f) = self.f_accuracy_factor {
            if !(f > 0.0 && f < 1.0) {
                return bad(format!("f_accuracy_factor must lie in (0, 1), got {f}"));
            }
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        if let Measure::Points { points } = &self.measure {
            if points.is_empty() {
                return bad("measure point list is empty".into());
            }
        }
        if self.interp.functions.is_empty() || self.interp.eps.is_empty() {
            return bad("interp functions and eps must be nonempty".into());
        }
        if !(self.interp.q > 1.0) {
            return bad(format!("interp q must be > 1, got {}", self.interp.q));
        }
        if let Some(e) = self.interp.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("interp accuracy {e} outside (0, 1)"));
        }
        if self.interp.scan_points < 2 {
            return bad("interp scan_points must be >= 2".into());
        }
        Ok(())
    }

    /// The `(n, M)` pair used by `pipeline` for the `k`-th accuracy.
    pub fn pipeline_levels(&self, k: usize) -> CliResult<Option<(usize, usize)>> {
        match self.levels.len() {
            0 => Ok(None),
            1 => Ok(Some(self.levels[0])),
            n if n == self.eps.len() => Ok(Some(self.levels[k])),
            n => Err(CliError::Config(format!(
                "pipeline needs one (n, M) pair or one per accuracy; got {n} pairs for {} accuracies",
                self.eps.len()
            ))),
        }
    }
}

/// Expands a configured point to dimension `d`.
pub fn expand_point(p: &[f64], d: usize) -> CliResult<Vec<f64>> {
    match p.len() {
        1 => Ok(vec![p[0]; d]),
        n if n == d => Ok(p.to_vec()),
        n => Err(CliError::Config(format!("point of length {n} does not fit dimension {d}"))),
    }
}
