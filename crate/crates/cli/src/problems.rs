//! Builtin problem instances with their terminal-network families and
//! reference solutions.
//!
//! | name           | f            | g                     | reference            |
//! |----------------|--------------|-----------------------|----------------------|
//! | `linear-norm2` | `0`          | `|x|^2`               | `|x|^2 + d (T - t)`  |
//! | `ode-exp`      | `v`          | `c`                   | `c e^(T - t)`        |
//! | `ode-sin`      | `sin v`      | `c`                   | ODE integration      |
//! | `abs-sum`      | `sin v`      | `mean_i |x_i|`        | high-level MLP       |
//!
//! The g-networks are illustrative families whose size and accuracy follow
//! a known power law in `(d, 1/delta)`; they are not general-purpose
//! approximators of arbitrary terminal conditions.

use std::sync::Arc;

use ode_solvers::{Dopri5, OutputType, System, Vector1};
use picard_core::mlp::{mc_samples, norm};
use picard_core::pwl::interp_net;
use picard_core::{Grid, Layer, LipschitzFn, Network, Problem, RandTree};
use serde::Serialize;

use crate::config::ProblemConfig;
use crate::error::{CliError, CliResult};

/// ODE tolerance of the reference integrator, relative and absolute.
pub const ODE_TOLERANCE: f64 = 1e-10;

/// Seed offset separating the reference MLP draws from the draws under test.
const REFERENCE_SALT: u64 = 0x5EED_0F0A_C1E5;

pub struct Builtin {
    pub name: String,
    pub problem: Problem,
    pub family: GFamily,
    pub reference: Reference,
}

/// A family `delta -> Phi_g` of terminal networks on `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum GFamily {
    /// `x -> c`, exact, widths `(d, 1, 1)`.
    Constant { value: f64 },
    /// `x -> mean_i |x_i|`, exact, widths `(d, 2d, 1)`.
    AbsMean,
    /// `x -> sum_i h(x_i)` with `h` the interpolant of `s^2` on
    /// `[-1/sqrt(delta), 1/sqrt(delta)]` with `ceil(1/delta)` cells: error at
    /// most `delta` on that box. Widths `(d, d (ceil(1/delta) + 1), 1)`.
    NormSquared,
}

/// Constants of a family: `|||dims||| <= B d^p delta^-alpha` and
/// `len(dims) <= B d^p delta^-beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyConstants {
    pub growth: f64,
    pub p: u32,
    pub alpha: f64,
    pub beta: f64,
    pub exact: bool,
}

impl GFamily {
    pub fn network(&self, d: usize, delta: f64) -> CliResult<Network> {
        match self {
            GFamily::Constant { value } => {
                let hidden = Layer::zeros(1, d);
                let mut out = Layer::zeros(1, 1);
                out.bias[0] = *value;
                Ok(Network::new(vec![hidden, out])?)
            }
            GFamily::AbsMean => {
                let mut rows = Vec::with_capacity(2 * d);
                for sign in [1.0, -1.0] {
                    for i in 0..d {
                        let mut row = vec![0.0; d];
                        row[i] = sign;
                        rows.push(row);
                    }
                }
                let out = vec![vec![1.0 / d as f64; 2 * d]];
                Ok(Network::from_rows(vec![(rows, vec![0.0; 2 * d]), (out, vec![0.0])])?)
            }
            GFamily::NormSquared => {
                if !(delta > 0.0 && delta <= 1.0) {
                    return Err(CliError::Config(format!("g accuracy must lie in (0, 1], got {delta}")));
                }
                let radius = delta.sqrt().recip();
                let cells = delta.recip().ceil() as usize;
                let square = LipschitzFn::new(2.0 * radius, |s: f64| s * s)?;
                let scalar = interp_net(&square, &Grid::new(-radius, radius, cells)?);
                let lifted: Vec<Network> = (0..d).map(|i| lift_coordinate(&scalar, d, i)).collect::<CliResult<_>>()?;
                let terms: Vec<(f64, &Network)> = lifted.iter().map(|n| (1.0, n)).collect();
                Ok(Network::parallel_sum(&terms)?)
            }
        }
    }

    /// Largest hidden width of [`GFamily::network`], without building it.
    pub fn hidden_width(&self, d: usize, delta: f64) -> f64 {
        match self {
            GFamily::Constant { .. } => 1.0,
            GFamily::AbsMean => 2.0 * d as f64,
            GFamily::NormSquared => d as f64 * (delta.recip().ceil() + 1.0),
        }
    }

    pub fn constants(&self) -> FamilyConstants {
        match self {
            GFamily::Constant { .. } => FamilyConstants { growth: 3.0, p: 1, alpha: 2.0, beta: 0.0, exact: true },
            GFamily::AbsMean => FamilyConstants { growth: 3.0, p: 1, alpha: 2.0, beta: 0.0, exact: true },
            GFamily::NormSquared => FamilyConstants { growth: 3.0, p: 1, alpha: 2.0, beta: 0.0, exact: false },
        }
    }
}

/// The scalar network `s -> R(net)(s)` applied to coordinate `i` of `R^d`.
fn lift_coordinate(net: &Network, d: usize, i: usize) -> CliResult<Network> {
    let mut layers = net.layers().to_vec();
    let src = &net.layers()[0];
    let mut first = Layer::zeros(src.out_dim(), d);
    for r in 0..src.out_dim() {
        first.weight[[r, i]] = src.weight[[r, 0]];
    }
    first.bias = src.bias.clone();
    layers[0] = first;
    Ok(Network::new(layers)?)
}

/// Source of the exact solution `u(t, x)` at the evaluation points.
pub enum Reference {
    Closed(Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>),
    /// `u' = -f(u)`, `u(T) = c`: the solution for constant `g`.
    Ode { f: LipschitzFn, horizon: f64, terminal: f64 },
    /// Mean of `runs` MLP realizations at `level = M`, drawn from a seed
    /// disjoint from the one under test.
    Mlp { level: usize, runs: usize },
}

impl Reference {
    pub fn kind(&self) -> &'static str {
        match self {
            Reference::Closed(_) => "closed-form",
            Reference::Ode { .. } => "ode",
            Reference::Mlp { .. } => "mlp",
        }
    }

    pub fn value(&self, prob: &Problem, seed: u64, t: f64, x: &[f64]) -> CliResult<f64> {
        match self {
            Reference::Closed(u) => Ok(u(t, x)),
            Reference::Ode { f, horizon, terminal } => ode_solution(f, *horizon, *terminal, t),
            Reference::Mlp { level, runs } => {
                let tree = RandTree::new(seed ^ REFERENCE_SALT, prob.dim)?;
                let s = mc_samples(prob, *level, *level, t, x, *runs, &tree, f64::INFINITY)?;
                Ok(s.iter().sum::<f64>() / s.len() as f64)
            }
        }
    }

    /// Whether `u(t, .)` is constant in `x`, so one value serves every point.
    pub fn is_spatially_constant(&self) -> bool {
        matches!(self, Reference::Ode { .. })
    }
}

/// `v(tau) = u(T - tau)` solves `v' = f(v)`, `v(0) = c`, forward in `tau`.
struct Reversed {
    f: LipschitzFn,
}

impl System<f64, Vector1<f64>> for Reversed {
    fn system(&self, _tau: f64, y: &Vector1<f64>, dy: &mut Vector1<f64>) {
        dy[0] = self.f.eval(y[0]);
    }
}

/// Solves `u'(s) = -f(u(s))`, `u(T) = terminal` backward to `s = t`.
pub fn ode_solution(f: &LipschitzFn, horizon: f64, terminal: f64, t: f64) -> CliResult<f64> {
    let span = horizon - t;
    if span == 0.0 {
        return Ok(terminal);
    }
    let mut solver = Dopri5::new(
        Reversed { f: f.clone() },
        0.0,
        span,
        span,
        Vector1::new(terminal),
        ODE_TOLERANCE,
        ODE_TOLERANCE,
    );
    solver.set_output(OutputType::Sparse);
    solver
        .integrate()
        .map_err(|e| CliError::Internal(format!("reference ODE integration failed: {e:?}")))?;
    let (xs, ys) = solver.results().get();
    match (xs.last(), ys.last()) {
        (Some(&x), Some(y)) if (x - span).abs() <= 1e-12 * span.max(1.0) => Ok(y[0]),
        _ => Err(CliError::Internal("ODE solver stopped before the target time".into())),
    }
}

pub fn builtin(cfg: &ProblemConfig, d: usize) -> CliResult<Builtin> {
    let horizon = cfg.horizon;
    let c = cfg.terminal;
    let q = cfg.q;
    let (problem, family, reference) = match cfg.name.as_str() {
        "linear-norm2" => {
            let f = LipschitzFn::new(0.0, |_| 0.0)?;
            let prob = Problem::new(d, horizon, f, |x: &[f64]| x.iter().map(|v| v * v).sum(), 1.0, 2, q)?;
            let dim = d as f64;
            let u = move |t: f64, x: &[f64]| norm(x).powi(2) + dim * (horizon - t);
            (prob, GFamily::NormSquared, Reference::Closed(Arc::new(u)))
        }
        "ode-exp" => {
            let f = LipschitzFn::new(1.0, |v| v)?;
            let prob = Problem::new(d, horizon, f, move |_: &[f64]| c, c.abs(), 1, q)?;
            let u = move |t: f64, _: &[f64]| c * (horizon - t).exp();
            (prob, GFamily::Constant { value: c }, Reference::Closed(Arc::new(u)))
        }
        "ode-sin" => {
            let f = LipschitzFn::new(1.0, f64::sin)?;
            let prob = Problem::new(d, horizon, f.clone(), move |_: &[f64]| c, c.abs(), 1, q)?;
            (prob, GFamily::Constant { value: c }, Reference::Ode { f, horizon, terminal: c })
        }
        "abs-sum" => {
            let f = LipschitzFn::new(1.0, f64::sin)?;
            let g = |x: &[f64]| x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
            let prob = Problem::new(d, horizon, f, g, 1.0, 1, q)?;
            let reference = Reference::Mlp { level: cfg.reference_level, runs: cfg.reference_runs };
            (prob, GFamily::AbsMean, reference)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown problem {other:?}; expected linear-norm2, ode-exp, ode-sin or abs-sum"
            )))
        }
    };
    Ok(Builtin { name: cfg.name.clone(), problem, family, reference })
}
