//! Compiles one fixed-randomness MLP evaluation `x -> U_{n,M}^theta(t, x)`
//! into an explicit ReLU network.
//!
//! The construction is by induction on the level. Level 0 is an all-zero
//! network with as many layers as the g-network. For level `n >= 1` every
//! summand of the recursion becomes one network of the common depth
//! `n (layers(f) ) + layers(g)`:
//!
//! - terminal samples: the g-network shifted by the Brownian increment and
//!   padded with an identity chain;
//! - `f ∘ U_l` terms: the compiled level-`l` network at the sampled time,
//!   shifted by its increment, padded, then composed with the f-network.
//!
//! All summands are merged by one parallel sum whose coefficients are
//! `1/M^n` for terminal samples and `±(T - t)/M^(n-l)` for the rest. Draws
//! and traversal order are the ones of [`crate::mlp::evaluate`].

use serde::{Deserialize, Serialize};

use crate::dims::DimVector;
use crate::error::{Error, Result};
use crate::mlp::{self, sub_point, terminal_shift, MlpParams, Problem};
use crate::net::Network;
use crate::par;
use crate::pwl::LipschitzFn;
use crate::rand_tree::{check_time, MultiIndex, RandTree};

/// Everything that determines one compiled network.
#[derive(Debug, Clone)]
pub struct CompileSpec {
    /// Scalar network used in place of `f`.
    pub net_f: Network,
    /// Network `R^d -> R` used in place of `g`.
    pub net_g: Network,
    pub level: usize,
    pub branching: usize,
    pub time: f64,
    pub horizon: f64,
    pub root: MultiIndex,
    pub tree: RandTree,
    /// Width constant `c >= max{2, |||dims(f)|||, |||dims(g)|||}`.
    pub width_constant: f64,
    pub ceiling: f64,
}

impl CompileSpec {
    /// A spec with the smallest admissible width constant and the default ceiling.
    pub fn new(
        net_f: Network,
        net_g: Network,
        level: usize,
        branching: usize,
        time: f64,
        horizon: f64,
        root: MultiIndex,
        tree: RandTree,
    ) -> Self {
        let width_constant = min_width_constant(&net_f, &net_g);
        Self {
            net_f,
            net_g,
            level,
            branching,
            time,
            horizon,
            root,
            tree,
            width_constant,
            ceiling: mlp::DEFAULT_NODE_CEILING,
        }
    }

    pub fn dim(&self) -> usize {
        self.net_g.input_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.net_f.input_dim() != 1 || self.net_f.output_dim() != 1 {
            return Err(Error::Shape(format!("f-network must be scalar, has widths {}", self.net_f.dims())));
        }
        if self.net_g.output_dim() != 1 {
            return Err(Error::Shape(format!("g-network must have scalar output, has widths {}", self.net_g.dims())));
        }
        if self.tree.dim() != self.dim() {
            return Err(Error::Shape(format!(
                "random tree has dimension {}, g-network input width is {}",
                self.tree.dim(),
                self.dim()
            )));
        }
        if self.branching == 0 {
            return Err(Error::InvalidArgument("branching M must be >= 1".into()));
        }
        check_time(self.time, self.horizon)?;
        let needed = min_width_constant(&self.net_f, &self.net_g);
        if !(self.width_constant >= needed) {
            return Err(Error::InvalidArgument(format!(
                "width constant {} is below max{{2, |||dims(f)|||, |||dims(g)|||}} = {needed}",
                self.width_constant
            )));
        }
        Ok(())
    }

    /// Number of entries of the compiled dimension vector:
    /// `n (len(dims f) - 1) + len(dims g)`.
    pub fn expected_depth(&self) -> usize {
        self.level * (self.net_f.dims().len() - 1) + self.net_g.dims().len()
    }

    /// `c (3M)^n`.
    pub fn width_bound(&self) -> f64 {
        self.width_constant * (3.0 * self.branching as f64).powi(self.level as i32)
    }

    /// The problem whose MLP evaluation the compiled network reproduces:
    /// `f` and `g` are the realizations of the two networks. Growth
    /// constants are placeholders; only the evaluator uses this problem.
    pub fn problem(&self) -> Result<Problem> {
        let f = LipschitzFn::from_network(self.net_f.clone(), lipschitz_upper_bound(&self.net_f))?;
        let g = self.net_g.clone();
        Problem::new(self.dim(), self.horizon, f, move |x| g.realize(x).expect("checked width")[0], 1.0, 1, 2)
    }

    pub fn params(&self) -> MlpParams {
        MlpParams::new(self.level, self.branching, self.time, self.root.clone())
    }
}

/// `max{2, |||dims(f)|||, |||dims(g)|||}`.
pub fn min_width_constant(net_f: &Network, net_g: &Network) -> f64 {
    2usize.max(net_f.dims().sup_norm()).max(net_g.dims().sup_norm()) as f64
}

/// Product of Frobenius norms of the weight matrices; ReLU is 1-Lipschitz.
pub fn lipschitz_upper_bound(net: &Network) -> f64 {
    net.layers().iter().map(|l| l.weight.iter().map(|w| w * w).sum::<f64>().sqrt()).product()
}

struct Compiler<'a> {
    spec: &'a CompileSpec,
}

impl Compiler<'_> {
    fn build(&self, n: usize, t: f64, theta: &MultiIndex) -> Result<Network> {
        let spec = self.spec;
        let g_layers = spec.net_g.layer_count();
        if n == 0 {
            return Network::zero(spec.dim(), 1, g_layers);
        }
        let f_layers = spec.net_f.layer_count();
        let layers = n * f_layers + g_layers;
        let horizon = spec.horizon;
        let m = spec.branching as f64;
        let dt = horizon - t;

        let mut terms: Vec<(f64, Network)> = Vec::new();
        let g_weight = 1.0 / m.powi(n as i32);
        for i in 1..=spec.branching.pow(n as u32) {
            let shift = terminal_shift(&spec.tree, &theta.child(0, -(i as i64)), t, horizon);
            let net = spec.net_g.affine_wrap(1.0, &shift, &[0.0])?.extend_depth(layers)?;
            terms.push((g_weight, net));
        }
        for l in 0..n {
            let weight = dt / m.powi((n - l) as i32);
            for i in 1..=spec.branching.pow((n - l) as u32) {
                let eta = theta.child(l as i64, i as i64);
                let (r, shift) = sub_point(&spec.tree, &eta, t, horizon);
                terms.push((weight, self.f_of(l, r, &eta, &shift, layers)?));
                if l >= 1 {
                    let coarse = theta.child(-(l as i64), i as i64);
                    terms.push((-weight, self.f_of(l - 1, r, &coarse, &shift, layers)?));
                }
            }
        }
        let refs: Vec<(f64, &Network)> = terms.iter().map(|(h, net)| (*h, net)).collect();
        Network::parallel_sum(&refs)
    }

    /// `y -> f(U_level^theta(r, y + shift))` with exactly `layers` layers.
    fn f_of(&self, level: usize, r: f64, theta: &MultiIndex, shift: &[f64], layers: usize) -> Result<Network> {
        let f = &self.spec.net_f;
        let inner = self.build(level, r, theta)?.affine_wrap(1.0, shift, &[0.0])?;
        f.compose(&inner.extend_depth(layers - f.layer_count())?)
    }
}

/// Builds the network whose realization is `x -> U_{n,M}^theta(t, x)` for
/// the draws of `spec.tree`, with `f`, `g` replaced by the realizations of
/// `spec.net_f`, `spec.net_g`.
pub fn compile(spec: &CompileSpec) -> Result<Network> {
    spec.validate()?;
    mlp::check_ceiling(spec.level, spec.branching, spec.ceiling)?;
    Compiler { spec }.build(spec.level, spec.time, &spec.root)
}

/// The dimension vector [`compile`] produces, computed without building any
/// weights. Independent of `t` and `theta`.
pub fn predicted_dims(net_f: &DimVector, net_g: &DimVector, level: usize, branching: usize) -> Result<DimVector> {
    let f_layers = net_f.len() - 1;
    let g_layers = net_g.len() - 1;
    let d = net_g.input();
    // interior widths per level; level 0 is the zero network
    let mut hidden: Vec<Vec<u128>> = vec![vec![1; g_layers - 1]];
    let padded = |h: &[u128], layers: usize| -> Result<DimVector> {
        let mut v = Vec::with_capacity(h.len() + 2);
        v.push(d);
        for &w in h {
            v.push(usize::try_from(w).map_err(|_| Error::InvalidArgument("width overflows usize".into()))?);
        }
        v.push(1);
        let dims = DimVector::new(v)?;
        let extra = layers - (dims.len() - 1);
        Ok(if extra == 0 { dims } else { DimVector::neutral(extra + 1)?.odot(&dims) })
    };
    for n in 1..=level {
        let layers = n * f_layers + g_layers;
        let mut acc = vec![0u128; layers - 1];
        let mut add = |dims: &DimVector, times: u128| {
            for (a, &w) in acc.iter_mut().zip(dims.hidden()) {
                *a = a.saturating_add(times.saturating_mul(w as u128));
            }
        };
        let reps = |k: usize| (branching as u128).saturating_pow(k as u32);
        let g_hidden: Vec<u128> = net_g.hidden().iter().map(|&w| w as u128).collect();
        add(&padded(&g_hidden, layers)?, reps(n));
        for l in 0..n {
            add(&net_f.odot(&padded(&hidden[l], layers - f_layers)?), reps(n - l));
            if l >= 1 {
                add(&net_f.odot(&padded(&hidden[l - 1], layers - f_layers)?), reps(n - l));
            }
        }
        hidden.push(acc);
    }
    let last = hidden.pop().expect("nonempty");
    padded(&last, level * f_layers + g_layers)
}

/// Size checks of a compiled network against the depth identity and the
/// width and parameter bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// Entries of the dimension vector (layers + 1).
    pub depth: usize,
    pub depth_expected: usize,
    pub depth_exact_match: bool,
    /// Largest hidden width.
    pub width_max: usize,
    /// Largest entry including input and output widths.
    pub sup_norm: usize,
    pub width_bound: f64,
    pub width_ok: bool,
    pub param_count: u128,
    /// `2 depth w (w + 1)` with `w = c (3M)^n`.
    pub param_bound: f64,
    pub param_ok: bool,
}

impl BoundsReport {
    pub fn all_ok(&self) -> bool {
        self.depth_exact_match && self.width_ok && self.param_ok
    }
}

pub fn check_bounds(result: &Network, spec: &CompileSpec) -> BoundsReport {
    let dims = result.dims();
    let depth = dims.len();
    let depth_expected = spec.expected_depth();
    let width_max = dims.hidden().iter().copied().max().unwrap_or(0);
    let sup_norm = dims.sup_norm();
    let width_bound = spec.width_bound();
    let param_count = result.param_count();
    let param_bound = 2.0 * depth as f64 * width_bound * (width_bound + 1.0);
    BoundsReport {
        depth,
        depth_expected,
        depth_exact_match: depth == depth_expected,
        width_max,
        sup_norm,
        width_bound,
        width_ok: sup_norm as f64 <= width_bound,
        param_count,
        param_bound,
        param_ok: (param_count as f64) <= param_bound,
    }
}

/// `|a - b| <= tol * max{1, |b|}`: relative on values of magnitude at least
/// one, absolute below.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// Scaled discrepancy `|a - b| / max{1, |b|}`.
pub fn scaled_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub points: usize,
    pub max_scaled_error: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Compares the realization of `result` with the direct MLP evaluation at
/// every point.
pub fn check_equivalence(result: &Network, spec: &CompileSpec, points: &[Vec<f64>], tolerance: f64) -> Result<EquivalenceReport> {
    let prob = spec.problem()?;
    let params = spec.params();
    let errors = par::map_range(points.len(), |k| -> Result<f64> {
        let direct = mlp::evaluate_with_ceiling(&prob, &params, &points[k], &spec.tree, f64::INFINITY)?;
        let compiled = result.realize_scalar(&points[k])?;
        Ok(scaled_error(compiled, direct))
    });
    let mut worst = 0.0_f64;
    for e in errors {
        let e = e?;
        worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
    }
    Ok(EquivalenceReport {
        points: points.len(),
        max_scaled_error: worst,
        tolerance,
        ok: worst <= tolerance,
    })
}

/// Sidecar written next to a serialized compiled network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileMetadata {
    pub level: usize,
    pub branching: usize,
    pub time: f64,
    pub horizon: f64,
    pub root: Vec<i64>,
    pub seed: u64,
    pub dim: usize,
    pub width_constant: f64,
    pub depth: usize,
    pub width_max: usize,
    pub param_count: u128,
    pub dims: Vec<usize>,
}

impl CompileMetadata {
    pub fn new(result: &Network, spec: &CompileSpec) -> Self {
        Self {
            level: spec.level,
            branching: spec.branching,
            time: spec.time,
            horizon: spec.horizon,
            root: spec.root.as_slice().to_vec(),
            seed: spec.tree.seed(),
            dim: spec.dim(),
            width_constant: spec.width_constant,
            depth: result.dims().len(),
            width_max: result.dims().hidden().iter().copied().max().unwrap_or(0),
            param_count: result.param_count(),
            dims: result.dims().as_slice().to_vec(),
        }
    }
}
