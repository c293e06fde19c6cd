//! Cross-checks the MLP evaluator against a direct transcription of the
//! recursion built only on the public randomness API.

use picard_core::mlp::{evaluate, mc_samples, RmseSummary};
use picard_core::{LipschitzFn, MlpParams, MultiIndex, Problem, RandTree};

fn naive(prob: &Problem, tree: &RandTree, n: usize, m: usize, t: f64, x: &[f64], theta: &MultiIndex) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let big_t = prob.horizon;
    let plus = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + v).collect() };
    let mut g_sum = 0.0;
    for i in 1..=m.pow(n as u32) {
        let w = tree.brownian_increment(&theta.child(0, -(i as i64)), big_t - t).unwrap();
        g_sum += (prob.g)(&plus(x, &w));
    }
    let mut out = g_sum / (m as f64).powi(n as i32);
    for l in 0..n {
        let mut s = 0.0;
        for i in 1..=m.pow((n - l) as u32) {
            let eta = theta.child(l as i64, i as i64);
            let r = tree.time_point(&eta, t, big_t).unwrap();
            let y = plus(x, &tree.brownian_increment(&eta, r - t).unwrap());
            let fine = prob.f.eval(naive(prob, tree, l, m, r, &y, &eta));
            s += if l == 0 {
                fine
            } else {
                fine - prob.f.eval(naive(prob, tree, l - 1, m, r, &y, &theta.child(-(l as i64), i as i64)))
            };
        }
        out += (big_t - t) / (m as f64).powi((n - l) as i32) * s;
    }
    out
}

fn sin_problem(d: usize) -> Problem {
    let f = LipschitzFn::new(1.0, |v: f64| v.sin() + 0.1).unwrap();
    Problem::new(d, 1.0, f, |x| x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64, 1.0, 1, 2).unwrap()
}

#[test]
fn evaluator_matches_naive_recursion_bitwise() {
    for d in [1, 3] {
        let prob = sin_problem(d);
        let tree = RandTree::new(31, d).unwrap();
        for n in 0..=3 {
            for m in 1..=3 {
                let x: Vec<f64> = (0..d).map(|k| 0.3 * k as f64 - 0.2).collect();
                let root = MultiIndex::root(n as i64 * 10 + m as i64);
                let got = evaluate(&prob, &MlpParams::new(n, m, 0.25, root.clone()), &x, &tree).unwrap();
                let want = naive(&prob, &tree, n, m, 0.25, &x, &root);
                assert_eq!(got.to_bits(), want.to_bits(), "d={d} n={n} M={m}");
            }
        }
    }
}

#[test]
fn level_one_single_branch_by_hand() {
    // U_1 = g(x + sqrt(T) z) + T f(0) with one sample each
    let prob = sin_problem(1);
    let tree = RandTree::new(8, 1).unwrap();
    let root = MultiIndex::root(0);
    let z = tree.gaussian(&root.child(0, -1))[0];
    let want = (0.5 + z).abs() + 1.0 * (0.0f64.sin() + 0.1);
    let got = evaluate(&prob, &MlpParams::new(1, 1, 0.0, root), &[0.5], &tree).unwrap();
    assert!((got - want).abs() < 1e-15);
}

#[test]
fn heat_equation_mean_matches_closed_form() {
    // f = 0, g = |x|^2: u(t, x) = |x|^2 + d (T - t)
    let d = 2;
    let f = LipschitzFn::new(0.0, |_| 0.0).unwrap();
    let prob = Problem::new(d, 1.0, f, |x: &[f64]| x.iter().map(|v| v * v).sum(), 1.0, 2, 2).unwrap();
    let tree = RandTree::new(1234, d).unwrap();
    let x = [0.3, -0.4];
    let reference = 0.25 + d as f64 * 0.8;
    let samples = mc_samples(&prob, 2, 3, 0.2, &x, 2000, &tree, f64::INFINITY).unwrap();
    let summary = RmseSummary::from_samples(&samples, reference);
    let var = samples.iter().map(|v| (v - summary.mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
    let se = (var / samples.len() as f64).sqrt();
    assert!((summary.mean - reference).abs() < 4.0 * se, "mean {} vs {reference}", summary.mean);
    // one level-2 sample with M = 3 averages 9 terminal draws: Var = Var|x+W|^2 / 9
    let dt = 0.8;
    let exact_var = (2.0 * d as f64 * dt * dt + 4.0 * dt * 0.25) / 9.0;
    assert!((var / exact_var - 1.0).abs() < 0.15, "variance {var} vs {exact_var}");
}

#[test]
fn linear_ode_rmse_shrinks_with_level() {
    let f = LipschitzFn::new(1.0, |v| v).unwrap();
    let prob = Problem::new(1, 1.0, f, |_| 1.0, 1.0, 1, 2).unwrap();
    let tree = RandTree::new(6, 1).unwrap();
    let e = std::f64::consts::E;
    let rmse: Vec<f64> = (1..=4)
        .map(|k| {
            let s = mc_samples(&prob, k, k, 0.0, &[0.0], 200, &tree, f64::INFINITY).unwrap();
            RmseSummary::from_samples(&s, e).rmse
        })
        .collect();
    assert!(rmse.windows(2).all(|w| w[1] < w[0]), "{rmse:?}");
}

#[test]
fn parallel_and_sequential_sampling_agree() {
    let prob = sin_problem(2);
    let tree = RandTree::new(2, 2).unwrap();
    let a = mc_samples(&prob, 2, 2, 0.0, &[0.1, 0.2], 64, &tree, f64::INFINITY).unwrap();
    let b: Vec<f64> = (0..64)
        .map(|r| evaluate(&prob, &MlpParams::new(2, 2, 0.0, MultiIndex::root(r)), &[0.1, 0.2], &tree).unwrap())
        .collect();
    assert_eq!(a, b);
}

#[test]
fn ceiling_is_enforced() {
    let prob = sin_problem(1);
    let tree = RandTree::new(0, 1).unwrap();
    let err = picard_core::mlp::evaluate_with_ceiling(&prob, &MlpParams::new(5, 5, 0.0, MultiIndex::root(0)), &[0.0], &tree, 1e3);
    assert!(matches!(err, Err(picard_core::Error::Ceiling { .. })));
}
