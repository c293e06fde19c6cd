//! Multilevel Picard (MLP) approximations of semilinear heat equations, and
//! their exact representation as ReLU networks.
//!
//! - [`dims`]: layer-dimension vectors with the `⊙` / `⊞` operators.
//! - [`net`]: explicit ReLU networks, realization, and the constructive
//!   operations (identity, affine wrap, composition, parallel sum).
//! - [`pwl`]: clipped piecewise-linear interpolants of Lipschitz functions as
//!   one-hidden-layer networks.
//! - [`rand_tree`]: the `(seed, multi-index) -> draws` randomness oracle.
//! - [`mlp`]: the MLP recursion, Monte Carlo error estimates and the
//!   theoretical error bound and sizing rules.
//! - [`compiler`]: turns one fixed-randomness MLP evaluation into a network
//!   whose realization is exactly that evaluation as a function of `x`.

pub mod compiler;
pub mod dims;
pub mod error;
pub mod mlp;
pub mod net;
pub mod par;
pub mod pwl;
pub mod rand_tree;

pub use compiler::{compile, BoundsReport, CompileSpec};
pub use dims::DimVector;
pub use error::{Error, Result};
pub use mlp::{MlpParams, Problem};
pub use net::{Layer, Network};
pub use pwl::{Grid, LipschitzFn};
pub use rand_tree::{MultiIndex, RandTree};
