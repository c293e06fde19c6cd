use picard_core::{MultiIndex, RandTree};
use statrs::distribution::{ContinuousCDF, Normal};

/// Kolmogorov-Smirnov statistic of `samples` against `cdf`.
fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// 0.1% critical value of the KS statistic.
fn ks_critical(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

#[test]
fn uniforms_pass_ks_over_roots_and_children() {
    let tree = RandTree::new(2024, 1).unwrap();
    let n = 20_000;
    let roots: Vec<f64> = (0..n).map(|i| tree.uniform(&MultiIndex::root(i))).collect();
    assert!(ks_statistic(roots.clone(), |x| x.clamp(0.0, 1.0)) < ks_critical(n as usize));
    let kids: Vec<f64> = (0..n).map(|i| tree.uniform(&MultiIndex::root(7).child(i % 5 - 2, i / 5 + 1))).collect();
    assert!(ks_statistic(kids, |x| x.clamp(0.0, 1.0)) < ks_critical(n as usize));
    assert!(roots.iter().all(|&u| u > 0.0 && u < 1.0));
}

#[test]
fn gaussians_pass_ks_per_coordinate() {
    let d = 5;
    let tree = RandTree::new(77, d).unwrap();
    let n = 10_000;
    let draws: Vec<Vec<f64>> = (0..n).map(|i| tree.gaussian(&MultiIndex::new(vec![1, i, -3]).unwrap())).collect();
    let normal = Normal::standard();
    for k in 0..d {
        let col: Vec<f64> = draws.iter().map(|z| z[k]).collect();
        assert!(ks_statistic(col, |x| normal.cdf(x)) < ks_critical(n as usize), "coordinate {k}");
    }
}

#[test]
fn moments_and_cross_correlation() {
    let tree = RandTree::new(5, 2).unwrap();
    let n = 40_000;
    let mut sums = [0.0f64; 5];
    for i in 0..n {
        let draw = tree.draw(&MultiIndex::root(i));
        let (a, b) = (draw.gaussian[0], draw.gaussian[1]);
        sums[0] += a;
        sums[1] += a * a;
        sums[2] += a * b;
        sums[3] += draw.uniform;
        sums[4] += (draw.uniform - 0.5) * a;
    }
    let n = n as f64;
    let se = 1.0 / n.sqrt();
    assert!((sums[0] / n).abs() < 4.0 * se);
    assert!((sums[1] / n - 1.0).abs() < 4.0 * 2f64.sqrt() * se);
    assert!((sums[2] / n).abs() < 4.0 * se);
    assert!((sums[3] / n - 0.5).abs() < 4.0 * se / 12f64.sqrt());
    assert!((sums[4] / n).abs() < 4.0 * se / 12f64.sqrt());
}

#[test]
fn brownian_increment_variance_scales_with_time() {
    let tree = RandTree::new(11, 3).unwrap();
    let n = 20_000;
    let dt = 0.37;
    let mean_sq: f64 = (0..n)
        .map(|i| tree.brownian_increment(&MultiIndex::root(i), dt).unwrap().iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    // E|W_dt|^2 = d dt; Var |W_dt|^2 = 2 d dt^2
    let se = (2.0 * 3.0 * dt * dt / n as f64).sqrt();
    assert!((mean_sq - 3.0 * dt).abs() < 4.0 * se, "{mean_sq}");
}

#[test]
fn draws_are_independent_of_query_order() {
    let tree = RandTree::new(99, 4).unwrap();
    let ids: Vec<MultiIndex> = (0..50).map(|i| MultiIndex::root(i).child(1, i)).collect();
    let forward: Vec<_> = ids.iter().map(|t| tree.draw(t)).collect();
    let backward: Vec<_> = ids.iter().rev().map(|t| tree.draw(t)).collect();
    assert!(forward.iter().eq(backward.iter().rev()));
}
