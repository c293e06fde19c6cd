use picard_core::pwl::{clipped_approx, clipped_width_bound, ClippedSizing};
use picard_core::LipschitzFn;
use serde_json::json;

use super::{metadata, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::report::{flag, num, write_bytes, write_json, Table};

pub const COLUMNS: &[&str] = &[
    "function", "lipschitz", "f0_abs", "q", "eps", "radius", "cells", "width", "width_bound", "width_ok",
    "weighted_error", "error_ok", "network_file",
];

/// Named scalar test functions with their Lipschitz constants.
pub fn named_function(name: &str) -> CliResult<LipschitzFn> {
    let f = match name {
        "sin" => LipschitzFn::new(1.0, f64::sin),
        "abs" => LipschitzFn::new(1.0, f64::abs),
        "const" => LipschitzFn::new(0.0, |_| 0.5),
        "clip" => LipschitzFn::new(2.0, |x: f64| (2.0 * x).clamp(-1.0, 3.0)),
        "identity" => LipschitzFn::new(1.0, |x| x),
        "tanh" => LipschitzFn::new(1.0, f64::tanh),
        other => {
            return Err(CliError::Config(format!(
                "unknown function {other:?}; expected sin, abs, const, clip, identity or tanh"
            )))
        }
    };
    Ok(f?)
}

/// Points of the weighted-error scan: an even grid over four times the
/// clipping radius, plus every knot.
fn scan(sizing: &ClippedSizing, count: usize) -> Vec<f64> {
    let span = 4.0 * sizing.radius;
    let mut xs: Vec<f64> = (0..count).map(|k| -span + 2.0 * span * k as f64 / (count - 1) as f64).collect();
    xs.extend(sizing.grid().points());
    xs
}

pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    let ic = &cfg.interp;
    let mut table = Table::new(COLUMNS);
    let mut failures = Vec::new();
    for name in &ic.functions {
        let f = named_function(name)?;
        for (k, &eps) in ic.eps.iter().enumerate() {
            let sizing = ClippedSizing::new(&f, ic.q, eps)?;
            if sizing.hidden_width() as f64 > cfg.ceiling {
                return Err(CliError::Ceiling(format!(
                    "{name} at eps={eps} needs width {}, ceiling is {:e}",
                    sizing.hidden_width(),
                    cfg.ceiling
                )));
            }
            let net = clipped_approx(&f, ic.q, eps)?;
            let xs = scan(&sizing, ic.scan_points);
            let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
            let values = net.realize_batch(&pts)?;
            let weighted = xs
                .iter()
                .zip(&values)
                .map(|(&x, v)| (v[0] - f.eval(x)).abs() / (1.0 + x.abs().powf(ic.q)))
                .fold(0.0, f64::max);
            let bound = clipped_width_bound(f.lipschitz(), f.f0_abs(), ic.q, eps);
            let width = net.dims().hidden()[0];
            let width_ok = width as f64 <= bound;
            let error_ok = weighted <= eps;
            if !width_ok {
                failures.push(format!("{name} eps={eps}: width {width} above bound {bound}"));
            }
            if !error_ok {
                failures.push(format!("{name} eps={eps}: weighted error {weighted}"));
            }
            let file = format!("networks/interp_{name}_e{k}.json");
            write_bytes(&cfg.out.join(&file), net.to_json().as_bytes())?;
            table.push(vec![
                name.clone(),
                num(f.lipschitz()),
                num(f.f0_abs()),
                num(ic.q),
                num(eps),
                num(sizing.radius),
                sizing.cells.to_string(),
                width.to_string(),
                num(bound),
                flag(width_ok),
                num(weighted),
                flag(error_ok),
                file,
            ]);
        }
    }
    table.write(&cfg.out.join("report.csv"))?;
    let extra = json!({ "rows": table.len(), "failures": failures });
    write_json(&cfg.out.join("metadata.json"), &metadata("interp", cfg, COLUMNS, extra))?;
    if !failures.is_empty() {
        return Err(CliError::Check(failures.join("; ")));
    }
    Ok(Summary { lines: vec![format!("interp: {} networks within accuracy and width bound", table.len())] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for n in ["sin", "abs", "const", "clip", "identity", "tanh"] {
            let f = named_function(n).unwrap();
            assert!(f.check_lipschitz(200, 5.0, 0).is_ok(), "{n}");
        }
        assert_eq!(named_function("cos").unwrap_err().exit_code(), 2);
    }
}
