use picard_core::mlp::{self, error_bound_m06, gaussian_moment_bound, mc_samples, RmseSummary};
use picard_core::RandTree;
use serde_json::json;

use super::{metadata, Summary};
use crate::config::{expand_point, RunConfig};
use crate::error::{CliError, CliResult};
use crate::problems::builtin;
use crate::report::{flag, num, point, write_json, Table};

pub const COLUMNS: &[&str] = &[
    "d", "point", "t", "n", "M", "runs", "estimate", "reference", "error", "rmse", "rmse_se", "m06_bound", "within_bound",
];

pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    if cfg.levels.is_empty() {
        return Err(CliError::Config("solve needs at least one (n, M) pair in levels".into()));
    }
    let mut table = Table::new(COLUMNS);
    let mut violations = 0;
    let mut reference_kind = "";
    for &d in &cfg.dims {
        let b = builtin(&cfg.problem, d)?;
        reference_kind = b.reference.kind();
        let prob = &b.problem;
        let tree = RandTree::new(cfg.seed, d)?;
        let moment = gaussian_moment_bound(d, prob.growth_exp, prob.stability, prob.horizon);
        for &(n, m) in &cfg.levels {
            let work = mlp::node_estimate(n, m) * cfg.runs as f64;
            if work > cfg.ceiling {
                return Err(CliError::Ceiling(format!(
                    "n={n}, M={m} with {} runs needs about {work:e} nodes, ceiling is {:e}",
                    cfg.runs, cfg.ceiling
                )));
            }
            for p in &cfg.points {
                let x = expand_point(p, d)?;
                let samples = mc_samples(prob, n, m, cfg.time, &x, cfg.runs, &tree, cfg.ceiling)?;
                let reference = b.reference.value(prob, cfg.seed, cfg.time, &x)?;
                let s = RmseSummary::from_samples(&samples, reference);
                let bound = error_bound_m06(prob, n, m, 0.0, &x, moment);
                let within = s.rmse <= bound;
                violations += usize::from(!within);
                table.push(vec![
                    d.to_string(),
                    point(&x),
                    num(cfg.time),
                    n.to_string(),
                    m.to_string(),
                    cfg.runs.to_string(),
                    num(s.mean),
                    num(reference),
                    num((s.mean - reference).abs()),
                    num(s.rmse),
                    num(s.rmse_se),
                    num(bound),
                    flag(within),
                ]);
            }
        }
    }
    table.write(&cfg.out.join("report.csv"))?;
    let extra = json!({ "reference": reference_kind, "rows": table.len(), "bound_violations": violations });
    write_json(&cfg.out.join("metadata.json"), &metadata("solve", cfg, COLUMNS, extra))?;
    if violations > 0 {
        return Err(CliError::Check(format!("{violations} rows exceed the MLP error bound")));
    }
    Ok(Summary { lines: vec![format!("solve: {} rows, all within the error bound", table.len())] })
}
