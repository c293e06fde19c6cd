#![allow(dead_code)]

use picard_core::Network;
use rand::{rngs::StdRng, Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// A network with the given widths and weights uniform in `[-1, 1]`.
pub fn random_net(rng: &mut StdRng, dims: &[usize]) -> Network {
    let layers = dims
        .windows(2)
        .map(|w| {
            let rows = (0..w[1]).map(|_| (0..w[0]).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let bias = (0..w[1]).map(|_| rng.random_range(-1.0..1.0)).collect();
            (rows, bias)
        })
        .collect();
    Network::from_rows(layers).unwrap()
}

/// Widths `(d_in, *, ..., *, d_out)` with `layers` layers and hidden widths in `1..=max_width`.
pub fn random_dims(rng: &mut StdRng, d_in: usize, d_out: usize, layers: usize, max_width: usize) -> Vec<usize> {
    let mut dims = vec![d_in];
    for _ in 1..layers {
        dims.push(rng.random_range(1..=max_width));
    }
    dims.push(d_out);
    dims
}

pub fn random_point(rng: &mut StdRng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn scaled_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// [`random_net`] over [`random_dims`].
pub fn random_shaped(rng: &mut StdRng, d_in: usize, d_out: usize, layers: usize, max_width: usize) -> Network {
    let dims = random_dims(rng, d_in, d_out, layers, max_width);
    random_net(rng, &dims)
}
