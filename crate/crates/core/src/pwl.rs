//! Clipped piecewise-linear interpolation of Lipschitz scalar functions and
//! its exact realization by a one-hidden-layer ReLU network.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::net::{Layer, Network};

/// A scalar function together with a Lipschitz constant for it.
#[derive(Clone)]
pub struct LipschitzFn {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    lipschitz: f64,
    f0_abs: f64,
}

impl LipschitzFn {
    pub fn new<F>(lipschitz: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant must be finite and >= 0, got {lipschitz}")));
        }
        let f0_abs = f(0.0).abs();
        Ok(Self { eval: Arc::new(f), lipschitz, f0_abs })
    }

    /// The realization of a scalar network, with a caller-supplied Lipschitz constant.
    pub fn from_network(net: Network, lipschitz: f64) -> Result<Self> {
        if net.input_dim() != 1 || net.output_dim() != 1 {
            return Err(Error::Shape(format!("expected a scalar network, got widths {}", net.dims())));
        }
        Self::new(lipschitz, move |v| net.realize(&[v]).expect("scalar input")[0])
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `|f(0)|`.
    pub fn f0_abs(&self) -> f64 {
        self.f0_abs
    }

    /// Spot-checks the Lipschitz constant on `pairs` random pairs in
    /// `[-radius, radius]`; returns the largest observed difference quotient.
    pub fn check_lipschitz(&self, pairs: usize, radius: f64, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..pairs {
            let x = radius * (2.0 * unit(&mut rng) - 1.0);
            let y = radius * (2.0 * unit(&mut rng) - 1.0);
            if x == y {
                continue;
            }
            let ratio = (self.eval(x) - self.eval(y)).abs() / (x - y).abs();
            worst = worst.max(ratio);
        }
        if worst > self.lipschitz * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "observed difference quotient {worst} exceeds the Lipschitz constant {}",
                self.lipschitz
            )));
        }
        Ok(worst)
    }
}

fn unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl fmt::Debug for LipschitzFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzFn")
            .field("lipschitz", &self.lipschitz)
            .field("f0_abs", &self.f0_abs)
            .finish_non_exhaustive()
    }
}

/// Equispaced grid `xi_n = a + (b - a) n / N`, `n = 0..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    a: f64,
    b: f64,
    cells: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidArgument(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if cells == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell".into()));
        }
        Ok(Self { a, b, cells })
    }

    pub fn left(&self) -> f64 {
        self.a
    }

    pub fn right(&self) -> f64 {
        self.b
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn point(&self, n: usize) -> f64 {
        if n == self.cells {
            return self.b;
        }
        self.a + (self.b - self.a) * n as f64 / self.cells as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.cells).map(|n| self.point(n)).collect()
    }
}

/// The clipped interpolant: linear between knots, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlInterpolant {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    /// `slopes[n]` is the slope on `(knots[n], knots[n+1]]`.
    pub slopes: Vec<f64>,
}

impl PwlInterpolant {
    /// Evaluates with half-open cells `(xi_n, xi_{n+1}]`.
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.knots.len() - 1;
        if x <= self.knots[0] {
            return self.values[0];
        }
        if x > self.knots[last] {
            return self.values[last];
        }
        // first knot >= x closes the cell containing x
        let hi = self.knots.partition_point(|&k| k < x);
        let lo = hi - 1;
        let (x0, x1) = (self.knots[lo], self.knots[hi]);
        (self.values[lo] * (x1 - x) + self.values[hi] * (x - x0)) / (x1 - x0)
    }
}

pub fn interp_values(f: &LipschitzFn, grid: &Grid) -> PwlInterpolant {
    let knots = grid.points();
    let values: Vec<f64> = knots.iter().map(|&k| f.eval(k)).collect();
    let slopes = knots
        .windows(2)
        .zip(values.windows(2))
        .map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0]))
        .collect();
    PwlInterpolant { knots, values, slopes }
}

/// Network with widths `(1, N+1, 1)` realizing
/// `f(xi_0) + sum_k c_k max{x - xi_k, 0}`, `c_k = a_k - a_{k-1}`,
/// `a_{-1} = a_N = 0`, which is the clipped interpolant.
pub fn interp_net(f: &LipschitzFn, grid: &Grid) -> Network {
    network_for(&interp_values(f, grid))
}

pub fn network_for(pwl: &PwlInterpolant) -> Network {
    let n = pwl.slopes.len();
    let slope = |k: isize| if k < 0 || k as usize >= n { 0.0 } else { pwl.slopes[k as usize] };
    let c: Vec<f64> = (0..=n as isize).map(|k| slope(k) - slope(k - 1)).collect();
    let hidden = Layer::new(
        Array2::ones((n + 1, 1)),
        Array1::from_iter(pwl.knots.iter().map(|&k| -k)),
    )
    .expect("consistent shapes");
    let out = Layer::new(
        Array2::from_shape_vec((1, n + 1), c).expect("consistent shapes"),
        Array1::from_elem(1, pwl.values[0]),
    )
    .expect("consistent shapes");
    Network::new(vec![hidden, out]).expect("two layers")
}

const MAX_CELLS: f64 = 4_503_599_627_370_496.0;

/// Radius and cell count of the clipped approximation at accuracy `eps`
/// with growth exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedSizing {
    pub radius: f64,
    pub cells: usize,
}

impl ClippedSizing {
    /// `R` solves `(4L + 2|f(0)|) / R^(q-1) = eps`;
    /// `N = min{n >= 2 : 4 L R / n <= eps}`. When `4L + 2|f(0)| = 0` the
    /// function is identically zero and `R = 1`, `N = 2`.
    pub fn new(f: &LipschitzFn, q: f64, eps: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth exponent q must be > 1, got {q}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("accuracy must lie in (0, 1), got {eps}")));
        }
        let l = f.lipschitz();
        let scale = 4.0 * l + 2.0 * f.f0_abs();
        if scale == 0.0 {
            return Ok(Self { radius: 1.0, cells: 2 });
        }
        let radius = (scale / eps).powf(1.0 / (q - 1.0));
        let spread = 4.0 * l * radius;
        // beyond 2^52 cells the grid spacing is no longer representable
        let ratio = spread / eps;
        if !(ratio < MAX_CELLS) {
            return Err(Error::Ceiling { estimated: ratio, ceiling: MAX_CELLS });
        }
        let mut cells = ((spread / eps).ceil() as usize).max(2);
        while cells > 2 && spread / (cells - 1) as f64 <= eps {
            cells -= 1;
        }
        while spread / cells as f64 > eps {
            cells += 1;
        }
        Ok(Self { radius, cells })
    }

    pub fn grid(&self) -> Grid {
        Grid::new(-self.radius, self.radius, self.cells).expect("positive radius")
    }

    pub fn hidden_width(&self) -> usize {
        self.cells + 1
    }
}

/// Width guarantee of the clipped approximation:
/// `16 max{1, (L (4L + 2|f(0)|))^(1/(q-1))} eps^(-q/(q-1))`.
pub fn clipped_width_bound(lipschitz: f64, f0_abs: f64, q: f64, eps: f64) -> f64 {
    let core = (lipschitz * (4.0 * lipschitz + 2.0 * f0_abs)).powf(1.0 / (q - 1.0));
    16.0 * core.max(1.0) * eps.powf(-q / (q - 1.0))
}

/// One-hidden-layer network `g` with `|f(x) - g(x)| <= eps (1 + |x|^q)` for
/// all `x`, Lipschitz with the constant of `f`.
pub fn clipped_approx(f: &LipschitzFn, q: f64, eps: f64) -> Result<Network> {
    let sizing = ClippedSizing::new(f, q, eps)?;
    Ok(interp_net(f, &sizing.grid()))
}
