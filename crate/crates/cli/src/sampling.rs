//! Deterministic samples of the evaluation measure.

use picard_core::{par, MultiIndex, RandTree};

use crate::config::{expand_point, Measure};
use crate::error::CliResult;

const CUBE_SALT: u64 = 0xC0BE_5A17_0000_0001;

/// `count` points uniform on `[lo, hi]^d`, keyed by `(seed, k, j)` on a
/// stream disjoint from the MLP draws.
pub fn box_points(seed: u64, count: usize, d: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let tree = RandTree::new(seed ^ CUBE_SALT, 1).expect("positive dimension");
    par::map_range(count, |k| {
        (0..d)
            .map(|j| {
                let u = tree.uniform(&MultiIndex::new(vec![k as i64, j as i64]).expect("nonempty"));
                lo + (hi - lo) * u
            })
            .collect()
    })
}

/// Samples of the measure together with whether they are its full support
/// (so averages over them are exact integrals).
pub fn measure_points(measure: &Measure, seed: u64, count: usize, d: usize) -> CliResult<(Vec<Vec<f64>>, bool)> {
    match measure {
        Measure::Cube => Ok((box_points(seed, count, d, 0.0, 1.0), false)),
        Measure::Points { points } => {
            let pts = points.iter().map(|p| expand_point(p, d)).collect::<CliResult<_>>()?;
            Ok((pts, true))
        }
    }
}

/// `(∫ |y|^{2m} nu(dy))^{1/(2m)}`: exact for both supported measures.
pub fn measure_moment(measure: &Measure, d: usize, m: u32) -> CliResult<f64> {
    match measure {
        Measure::Cube => Ok(picard_core::mlp::cube_moment(d, m)),
        Measure::Points { points } => {
            let mut acc = 0.0;
            for p in points {
                let x = expand_point(p, d)?;
                acc += picard_core::mlp::norm(&x).powi(2 * m as i32);
            }
            Ok((acc / points.len() as f64).powf(1.0 / (2 * m) as f64))
        }
    }
}
