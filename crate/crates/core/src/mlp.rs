//! The multilevel Picard recursion for
//! `u(s, x) = E[g(x + W_{T-s}) + ∫_s^T f(u(t, x + W_{t-s})) dt]`
//! and the accompanying error bound and sizing rules.
//!
//! `U_{n,M}^theta(t, x)` for `n >= 1` is
//!
//! ```text
//!   M^-n sum_{i=1}^{M^n} g(x + sqrt(T - t) z^(theta,0,-i))
//! + sum_{l=0}^{n-1} (T - t) M^-(n-l) sum_{i=1}^{M^(n-l)}
//!       [ f(U_l^(theta,l,i)) - 1{l>=1} f(U_{l-1}^(theta,-l,i)) ](R, x + sqrt(R - t) z^(theta,l,i))
//! ```
//!
//! with `R = t + (T - t) u^(theta,l,i)` and `U_0 = U_{-1} = 0`. Sub-terms are
//! visited in the order above: g-samples by `i`, then `l` ascending, `i`
//! ascending. The compiler in [`crate::compiler`] uses the same order and the
//! same draws.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::pwl::LipschitzFn;
use crate::rand_tree::{check_time, MultiIndex, RandTree};

/// Default ceiling on the estimated number of recursion nodes.
pub const DEFAULT_NODE_CEILING: f64 = 1e8;

pub type TerminalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// One semilinear fixed-point instance with time-independent `f` and `g`.
///
/// `growth` and `growth_exp` are the constants `B`, `p` of
/// `max{|f(0)|, |g(x)|} <= B (1 + |x|)^p`; `stability` is the exponent
/// `q >= 2` used by the error bound.
#[derive(Clone)]
pub struct Problem {
    pub dim: usize,
    pub horizon: f64,
    pub f: LipschitzFn,
    pub g: TerminalFn,
    pub growth: f64,
    pub growth_exp: u32,
    pub stability: u32,
}

impl Problem {
    pub fn new<G>(
        dim: usize,
        horizon: f64,
        f: LipschitzFn,
        g: G,
        growth: f64,
        growth_exp: u32,
        stability: u32,
    ) -> Result<Self>
    where
        G: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        if !(growth >= 0.0 && growth.is_finite()) {
            return Err(Error::InvalidArgument(format!("growth constant must be >= 0, got {growth}")));
        }
        if growth_exp == 0 {
            return Err(Error::InvalidArgument("growth exponent p must be >= 1".into()));
        }
        if stability < 2 {
            return Err(Error::InvalidArgument(format!("stability exponent q must be >= 2, got {stability}")));
        }
        Ok(Self { dim, horizon, f, g: Arc::new(g), growth, growth_exp, stability })
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    /// Spot-checks `max{|f(0)|, |g(x)|} <= B (1 + |x|)^p` at `samples`
    /// Gaussian points of scale `scale`.
    pub fn check_growth(&self, samples: usize, scale: f64, seed: u64) -> Result<()> {
        let tree = RandTree::new(seed, self.dim)?;
        let p = self.growth_exp as i32;
        if self.f.f0_abs() > self.growth * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "|f(0)| = {} exceeds the growth constant {}",
                self.f.f0_abs(),
                self.growth
            )));
        }
        for k in 0..samples {
            let x: Vec<f64> = tree.gaussian(&MultiIndex::root(k as i64)).iter().map(|z| scale * z).collect();
            let bound = self.growth * (1.0 + norm(&x)).powi(p);
            let gx = (self.g)(&x);
            if gx.abs() > bound * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("|g(x)| = {gx} exceeds the growth bound {bound}")));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("dim", &self.dim)
            .field("horizon", &self.horizon)
            .field("f", &self.f)
            .field("growth", &self.growth)
            .field("growth_exp", &self.growth_exp)
            .field("stability", &self.stability)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub level: usize,
    pub branching: usize,
    pub time: f64,
    pub root: MultiIndex,
}

impl MlpParams {
    pub fn new(level: usize, branching: usize, time: f64, root: MultiIndex) -> Self {
        Self { level, branching, time, root }
    }

    pub(crate) fn validate(&self, horizon: f64) -> Result<()> {
        if self.branching == 0 {
            return Err(Error::InvalidArgument("branching M must be >= 1".into()));
        }
        check_time(self.time, horizon)
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Estimated number of nodes (g-samples plus f-evaluations) visited when
/// evaluating `U_{n,M}` once.
pub fn node_estimate(level: usize, branching: usize) -> f64 {
    let m = branching as f64;
    let mut cost = vec![0.0_f64; level + 1];
    for n in 1..=level {
        let mut c = m.powi(n as i32);
        for l in 0..n {
            let reps = m.powi((n - l) as i32);
            c += reps * (1.0 + cost[l]);
            if l >= 1 {
                c += reps * (1.0 + cost[l - 1]);
            }
        }
        cost[n] = c;
    }
    cost[level]
}

pub(crate) fn check_ceiling(level: usize, branching: usize, ceiling: f64) -> Result<()> {
    let estimated = node_estimate(level, branching);
    if estimated > ceiling {
        return Err(Error::Ceiling { estimated, ceiling });
    }
    Ok(())
}

/// The time point and spatial shift attached to sub-index `eta` of a node at
/// time `t`: `R = t + (T - t) u^eta` and `sqrt(R - t) z^eta`.
pub(crate) fn sub_point(tree: &RandTree, eta: &MultiIndex, t: f64, horizon: f64) -> (f64, Vec<f64>) {
    let draw = tree.draw(eta);
    let r = t + (horizon - t) * draw.uniform;
    let s = (r - t).sqrt();
    (r, draw.gaussian.into_iter().map(|z| s * z).collect())
}

/// Shift of the terminal sample `eta = (theta, 0, -i)` from time `t`.
pub(crate) fn terminal_shift(tree: &RandTree, eta: &MultiIndex, t: f64, horizon: f64) -> Vec<f64> {
    let s = (horizon - t).sqrt();
    tree.gaussian(eta).into_iter().map(|z| s * z).collect()
}

struct Recursion<'a> {
    prob: &'a Problem,
    tree: &'a RandTree,
    branching: usize,
}

impl Recursion<'_> {
    fn u(&self, n: usize, t: f64, x: &[f64], theta: &MultiIndex) -> f64 {
        if n == 0 {
            return 0.0;
        }
        let horizon = self.prob.horizon;
        let m = self.branching as f64;
        let dt = horizon - t;
        let mut y = vec![0.0; x.len()];

        let mut g_sum = 0.0;
        for i in 1..=self.branching.pow(n as u32) {
            let shift = terminal_shift(self.tree, &theta.child(0, -(i as i64)), t, horizon);
            shifted(x, &shift, &mut y);
            g_sum += (self.prob.g)(&y);
        }
        let mut out = g_sum / m.powi(n as i32);

        for l in 0..n {
            let mut s = 0.0;
            for i in 1..=self.branching.pow((n - l) as u32) {
                let eta = theta.child(l as i64, i as i64);
                let (r, shift) = sub_point(self.tree, &eta, t, horizon);
                shifted(x, &shift, &mut y);
                let fine = self.prob.f.eval(self.u(l, r, &y, &eta));
                if l >= 1 {
                    let coarse_idx = theta.child(-(l as i64), i as i64);
                    let coarse = self.prob.f.eval(self.u(l - 1, r, &y, &coarse_idx));
                    s += fine - coarse;
                } else {
                    s += fine;
                }
            }
            out += dt / m.powi((n - l) as i32) * s;
        }
        out
    }
}

fn shifted(x: &[f64], shift: &[f64], out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(x).zip(shift) {
        *o = a + b;
    }
}

/// `U_{n,M}^theta(t, x)` for the draws of `tree`.
pub fn evaluate(prob: &Problem, params: &MlpParams, x: &[f64], tree: &RandTree) -> Result<f64> {
    evaluate_with_ceiling(prob, params, x, tree, DEFAULT_NODE_CEILING)
}

pub fn evaluate_with_ceiling(
    prob: &Problem,
    params: &MlpParams,
    x: &[f64],
    tree: &RandTree,
    ceiling: f64,
) -> Result<f64> {
    params.validate(prob.horizon)?;
    if x.len() != prob.dim {
        return Err(Error::Shape(format!("point has length {}, problem dimension is {}", x.len(), prob.dim)));
    }
    if tree.dim() != prob.dim {
        return Err(Error::Shape(format!(
            "random tree has dimension {}, problem dimension is {}",
            tree.dim(),
            prob.dim
        )));
    }
    check_ceiling(params.level, params.branching, ceiling)?;
    let rec = Recursion { prob, tree, branching: params.branching };
    Ok(rec.u(params.level, params.time, x, &params.root))
}

/// Independent realizations `U_{n,M}^(r)(t, x)` for roots `r = 0..runs`.
pub fn mc_samples(
    prob: &Problem,
    level: usize,
    branching: usize,
    t: f64,
    x: &[f64],
    runs: usize,
    tree: &RandTree,
    ceiling: f64,
) -> Result<Vec<f64>> {
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be >= 1".into()));
    }
    let est = node_estimate(level, branching) * runs as f64;
    if est > ceiling {
        return Err(Error::Ceiling { estimated: est, ceiling });
    }
    par::map_range(runs, |r| {
        let params = MlpParams::new(level, branching, t, MultiIndex::root(r as i64));
        evaluate_with_ceiling(prob, &params, x, tree, f64::INFINITY)
    })
    .into_iter()
    .collect()
}

/// Summary of Monte Carlo realizations against a reference value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseSummary {
    pub mean: f64,
    pub rmse: f64,
    /// Delta-method standard error of `rmse`.
    pub rmse_se: f64,
    pub runs: usize,
}

impl RmseSummary {
    pub fn from_samples(samples: &[f64], reference: f64) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let sq: Vec<f64> = samples.iter().map(|v| (v - reference).powi(2)).collect();
        let mse = sq.iter().sum::<f64>() / n;
        let rmse = mse.sqrt();
        let var_sq = if samples.len() > 1 {
            sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mse_se = (var_sq / n).sqrt();
        let rmse_se = if rmse > 0.0 { mse_se / (2.0 * rmse) } else { 0.0 };
        Self { mean, rmse, rmse_se, runs: samples.len() }
    }
}

/// `sqrt(mean_r (U^(r)_{n,M}(t, x) - reference)^2)` over `runs` roots.
#[allow(clippy::too_many_arguments)]
pub fn mc_rmse(
    prob: &Problem,
    level: usize,
    branching: usize,
    t: f64,
    x: &[f64],
    runs: usize,
    reference: f64,
    tree: &RandTree,
) -> Result<f64> {
    if !reference.is_finite() {
        return Err(Error::InvalidArgument("reference must be finite".into()));
    }
    let samples = mc_samples(prob, level, branching, t, x, runs, tree, f64::INFINITY)?;
    Ok(RmseSummary::from_samples(&samples, reference).rmse)
}

/// L2 error bound of the MLP approximation at `(0, x)`:
///
/// `(e^{LT}(T+1))^{q+1} (B^q + 1) (delta + e^{M/2} (1+2LT)^N / M^{N/2})
///  (1 + |x| + moment)^{pq}`
///
/// where `moment` bounds `(E|W_T|^{pq})^{1/(pq)}` and `delta` is the
/// accuracy of the approximate `f`, `g`. Uses the instance constants of `prob`.
pub fn error_bound_m06(prob: &Problem, levels: usize, branching: usize, delta: f64, x: &[f64], gaussian_moment: f64) -> f64 {
    let l = prob.lipschitz();
    let t = prob.horizon;
    let q = prob.stability as i32;
    let pq = (prob.growth_exp * prob.stability) as i32;
    let m = branching as f64;
    let n = levels as f64;
    let stab = ((l * t).exp() * (t + 1.0)).powi(q + 1) * (prob.growth.powi(q) + 1.0);
    let mc = (m / 2.0).exp() * (1.0 + 2.0 * l * t).powf(n) / m.powf(n / 2.0);
    stab * (delta + mc) * (1.0 + norm(x) + gaussian_moment).powi(pq)
}

/// `sqrt(2T(d/2 + pq - 1))`, an upper bound for `(E|W_T|^{pq})^{1/(pq)}`
/// with `W` a `d`-dimensional Brownian motion.
pub fn gaussian_moment_bound(d: usize, p: u32, q: u32, horizon: f64) -> f64 {
    (2.0 * horizon * (d as f64 / 2.0 + (p * q) as f64 - 1.0)).sqrt()
}

/// `(E |X|^{2m})^{1/(2m)}` for `X` uniform on `[0,1]^d`, computed exactly by
/// expanding `(X_1^2 + ... + X_d^2)^m` one coordinate at a time.
pub fn cube_moment(d: usize, m: u32) -> f64 {
    let m = m as usize;
    // coord[j] = E[X_1^{2j}] = 1 / (2j + 1)
    let coord: Vec<f64> = (0..=m).map(|j| 1.0 / (2 * j + 1) as f64).collect();
    let mut binom = vec![vec![1.0_f64; m + 1]; m + 1];
    for a in 1..=m {
        for b in 1..a {
            binom[a][b] = binom[a - 1][b - 1] + binom[a - 1][b];
        }
    }
    // acc[j] = E[S_k^j] for S_k the partial sum of squares
    let mut acc = coord.clone();
    for _ in 1..d {
        acc = (0..=m)
            .map(|j| (0..=j).map(|k| binom[j][k] * acc[k] * coord[j - k]).sum())
            .collect();
    }
    acc[m].powf(1.0 / (2 * m) as f64)
}

/// `c_d = (e^{LT}(T+1))^{q+1} ((B d^p)^q + 1) [1 + nu_moment + W-moment bound]^{pq}`
/// where `nu_moment = (∫|x|^{2pq} nu_d(dx))^{1/(2pq)}` and `B` is the family
/// growth constant stored in `prob.growth`.
pub fn theorem_constant(prob: &Problem, nu_moment: f64) -> f64 {
    let d = prob.dim;
    let (p, q) = (prob.growth_exp, prob.stability);
    let l = prob.lipschitz();
    let t = prob.horizon;
    let bd = prob.growth * (d as f64).powi(p as i32);
    ((l * t).exp() * (t + 1.0)).powi(q as i32 + 1)
        * (bd.powi(q as i32) + 1.0)
        * (1.0 + nu_moment + gaussian_moment_bound(d, p, q, t)).powi((p * q) as i32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sizing {
    pub levels: usize,
    pub delta: f64,
}

/// `N = min{n >= 2 : c_d (sqrt(e)(1+2LT)/sqrt(n))^n <= eps/2}` and
/// `delta = eps / (4 B d^p c_d)`.
pub fn sizing_rules(prob: &Problem, eps: f64, c_d: f64) -> Result<Sizing> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("accuracy must lie in (0, 1], got {eps}")));
    }
    if !(c_d >= 1.0 && c_d.is_finite()) {
        return Err(Error::InvalidArgument(format!("c_d must be finite and >= 1, got {c_d}")));
    }
    let l = prob.lipschitz();
    let base = 0.5 + (1.0 + 2.0 * l * prob.horizon).ln();
    let target = (eps / 2.0).ln() - c_d.ln();
    // the log of the bracket is n (base - ln(n)/2), which eventually decreases to -inf
    let levels = (2usize..)
        .find(|&n| n as f64 * (base - 0.5 * (n as f64).ln()) <= target)
        .expect("sequence tends to zero");
    let bd = prob.growth * (prob.dim as f64).powi(prob.growth_exp as i32);
    Ok(Sizing { levels, delta: eps / (4.0 * bd * c_d) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn problem(dim: usize, f: LipschitzFn, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Problem {
        Problem::new(dim, 1.0, f, g, 1.0, 1, 2).unwrap()
    }

    #[test]
    fn level_zero_is_zero() {
        let prob = problem(2, LipschitzFn::new(1.0, f64::sin).unwrap(), |x| x[0] + 3.0);
        let tree = RandTree::new(3, 2).unwrap();
        for t in [0.0, 0.4, 1.0] {
            let p = MlpParams::new(0, 3, t, MultiIndex::root(5));
            assert_eq!(evaluate(&prob, &p, &[1.0, -2.0], &tree).unwrap(), 0.0);
        }
    }

    #[test]
    fn level_one_single_branch() {
        let g = |x: &[f64]| x[0] * x[0] - 0.5 * x[0];
        let tree = RandTree::new(11, 1).unwrap();
        let theta = MultiIndex::root(0);
        let t = 0.25;
        let dw = tree.brownian_increment(&theta.child(0, -1), 1.0 - t).unwrap();
        let x = 0.7;

        let zero_f = problem(1, LipschitzFn::new(0.0, |_| 0.0).unwrap(), g);
        let p = MlpParams::new(1, 1, t, theta.clone());
        assert_relative_eq!(evaluate(&zero_f, &p, &[x], &tree).unwrap(), g(&[x + dw[0]]), epsilon = 1e-15);

        let affine_f = problem(1, LipschitzFn::new(2.0, |v| 2.0 * v + 0.3).unwrap(), g);
        let expected = g(&[x + dw[0]]) + (1.0 - t) * 0.3;
        assert_relative_eq!(evaluate(&affine_f, &p, &[x], &tree).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn linear_case_is_plain_monte_carlo() {
        let g = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let prob = problem(3, LipschitzFn::new(0.0, |_| 0.0).unwrap(), g);
        let tree = RandTree::new(2, 3).unwrap();
        let theta = MultiIndex::root(4);
        let (n, m, t) = (3, 2, 0.1);
        let x = [0.3, -0.2, 1.0];
        let got = evaluate(&prob, &MlpParams::new(n, m, t, theta.clone()), &x, &tree).unwrap();
        let count = m.pow(n as u32);
        let mut sum = 0.0;
        for i in 1..=count {
            let dw = tree.brownian_increment(&theta.child(0, -(i as i64)), 1.0 - t).unwrap();
            let y: Vec<f64> = x.iter().zip(&dw).map(|(a, b)| a + b).collect();
            sum += g(&y);
        }
        assert_eq!(got, sum / count as f64);
    }

    #[test]
    fn rejects_bad_input() {
        let prob = problem(2, LipschitzFn::new(1.0, f64::sin).unwrap(), |x| x[0]);
        let tree = RandTree::new(0, 2).unwrap();
        let ok = MlpParams::new(2, 2, 0.0, MultiIndex::root(0));
        assert!(evaluate(&prob, &ok, &[1.0], &tree).is_err());
        assert!(evaluate(&prob, &MlpParams::new(2, 0, 0.0, MultiIndex::root(0)), &[0.0, 0.0], &tree).is_err());
        assert!(evaluate(&prob, &MlpParams::new(2, 2, 1.5, MultiIndex::root(0)), &[0.0, 0.0], &tree).is_err());
        assert!(evaluate(&prob, &ok, &[0.0, 0.0], &RandTree::new(0, 3).unwrap()).is_err());
        let big = MlpParams::new(12, 12, 0.0, MultiIndex::root(0));
        assert!(matches!(evaluate(&prob, &big, &[0.0, 0.0], &tree), Err(Error::Ceiling { .. })));
    }

    #[test]
    fn node_estimates() {
        assert_eq!(node_estimate(0, 5), 0.0);
        // one g-sample and one f(U_0) evaluation
        assert_eq!(node_estimate(1, 1), 2.0);
        assert!(node_estimate(4, 4) < node_estimate(5, 5));
    }

    #[test]
    fn rmse_against_itself() {
        let prob = problem(1, LipschitzFn::new(1.0, f64::sin).unwrap(), |x| x[0].abs());
        let tree = RandTree::new(1, 1).unwrap();
        let v = evaluate(&prob, &MlpParams::new(2, 2, 0.0, MultiIndex::root(0)), &[0.5], &tree).unwrap();
        assert_eq!(mc_rmse(&prob, 2, 2, 0.0, &[0.5], 1, v, &tree).unwrap(), 0.0);
        assert!(mc_rmse(&prob, 2, 2, 0.0, &[0.5], 0, v, &tree).is_err());
    }

    #[test]
    fn bound_plug_in() {
        let prob = problem(1, LipschitzFn::new(0.0, |_| 0.0).unwrap(), |_| 0.0);
        for (n, m) in [(1, 1), (2, 3), (4, 4)] {
            let expected = 8.0 * 2.0 * (m as f64 / 2.0).exp() / (m as f64).powf(n as f64 / 2.0);
            assert_relative_eq!(error_bound_m06(&prob, n, m, 0.0, &[0.0], 0.0), expected, max_relative = 1e-14);
        }
        let lip = problem(2, LipschitzFn::new(1.0, f64::sin).unwrap(), |_| 0.0);
        let x = [0.5, 0.5];
        // (1 + 2LT)/sqrt(M) < 1 once M > 9, so the bound then decays in n
        assert!(error_bound_m06(&lip, 4, 16, 0.0, &x, 1.0) < error_bound_m06(&lip, 2, 16, 0.0, &x, 1.0));
    }

    #[test]
    fn gaussian_moment_examples() {
        assert_relative_eq!(gaussian_moment_bound(1, 1, 1, 0.5), 0.5f64.sqrt(), epsilon = 1e-15);
        for d in 1..10 {
            assert!(gaussian_moment_bound(d + 1, 1, 2, 1.0) > gaussian_moment_bound(d, 1, 2, 1.0));
            assert!(gaussian_moment_bound(d, 1, 1, 2.0) >= (d as f64 * 2.0).sqrt());
        }
    }

    #[test]
    fn sizing_example() {
        let prob = problem(1, LipschitzFn::new(0.0, |_| 0.0).unwrap(), |_| 0.0);
        let s = sizing_rules(&prob, 1.0, 1.0).unwrap();
        assert_eq!(s.levels, 4);
        assert_relative_eq!(s.delta, 0.25);
        let half = sizing_rules(&prob, 0.5, 1.0).unwrap();
        assert_relative_eq!(half.delta, 0.125);
        assert!(sizing_rules(&prob, 0.0, 1.0).is_err());
        assert!(sizing_rules(&prob, 0.5, 0.5).is_err());
    }

    #[test]
    fn cube_moments() {
        // E|X|^2 = d/3
        for d in 1..6 {
            assert_relative_eq!(cube_moment(d, 1), (d as f64 / 3.0).sqrt(), max_relative = 1e-14);
        }
        // d = 1: (E X^{2m})^{1/(2m)} = (1/(2m+1))^{1/(2m)}
        assert_relative_eq!(cube_moment(1, 3), (1.0f64 / 7.0).powf(1.0 / 6.0), max_relative = 1e-14);
        // d = 2, m = 2: E(X^2+Y^2)^2 = 2/5 + 2/9
        assert_relative_eq!(cube_moment(2, 2), (2.0f64 / 5.0 + 2.0 / 9.0).powf(0.25), max_relative = 1e-14);
    }
}
