use picard_core::compiler::{check_bounds, check_equivalence, predicted_dims, BoundsReport, CompileMetadata, EquivalenceReport};
use picard_core::pwl::clipped_approx;
use picard_core::{compile, mlp, CompileSpec, MultiIndex, RandTree};
use serde::Serialize;
use serde_json::json;

use super::{metadata, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::problems::builtin;
use crate::report::{flag, num, write_bytes, write_json, Table};
use crate::sampling::box_points;

pub const COLUMNS: &[&str] = &[
    "d", "n", "M", "depth", "depth_expected", "width_max", "width_bound", "param_count", "param_bound",
    "max_scaled_error", "equivalence_ok", "bounds_ok", "network_file",
];

/// Half-width of the box the equivalence points are drawn from.
const CHECK_BOX: f64 = 2.0;

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    meta: CompileMetadata,
    bounds: &'a BoundsReport,
    equivalence: &'a EquivalenceReport,
}

pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    if cfg.levels.is_empty() {
        return Err(CliError::Config("compile needs at least one (n, M) pair in levels".into()));
    }
    let mut table = Table::new(COLUMNS);
    let mut failures = Vec::new();
    for &d in &cfg.dims {
        let b = builtin(&cfg.problem, d)?;
        let net_f = clipped_approx(&b.problem.f, b.problem.stability as f64, cfg.f_accuracy)?;
        let net_g = b.family.network(d, cfg.f_accuracy)?;
        for &(n, m) in &cfg.levels {
            if mlp::node_estimate(n, m) > cfg.ceiling {
                return Err(CliError::Ceiling(format!("n={n}, M={m} exceeds the node ceiling {:e}", cfg.ceiling)));
            }
            let params = predicted_dims(net_f.dims(), net_g.dims(), n, m)?.param_count();
            if params as f64 > cfg.ceiling {
                return Err(CliError::Ceiling(format!(
                    "n={n}, M={m} would build {params} parameters, ceiling is {:e}",
                    cfg.ceiling
                )));
            }
            let mut spec = CompileSpec::new(
                net_f.clone(),
                net_g.clone(),
                n,
                m,
                cfg.time,
                b.problem.horizon,
                MultiIndex::root(0),
                RandTree::new(cfg.seed, d)?,
            );
            spec.ceiling = cfg.ceiling;
            let net = compile(&spec)?;
            let bounds = check_bounds(&net, &spec);
            let points = box_points(cfg.seed, cfg.check_points, d, -CHECK_BOX, CHECK_BOX);
            let eq = check_equivalence(&net, &spec, &points, cfg.tolerance)?;

            let name = format!("compiled_d{d}_n{n}_m{m}");
            let file = format!("networks/{name}.json");
            write_bytes(&cfg.out.join(&file), net.to_json().as_bytes())?;
            let sidecar = Sidecar { meta: CompileMetadata::new(&net, &spec), bounds: &bounds, equivalence: &eq };
            write_json(&cfg.out.join(format!("networks/{name}.meta.json")), &sidecar)?;

            if !eq.ok {
                failures.push(format!("d={d} n={n} M={m}: equivalence error {}", eq.max_scaled_error));
            }
            if !bounds.all_ok() {
                failures.push(format!("d={d} n={n} M={m}: size bounds violated"));
            }
            table.push(vec![
                d.to_string(),
                n.to_string(),
                m.to_string(),
                bounds.depth.to_string(),
                bounds.depth_expected.to_string(),
                bounds.width_max.to_string(),
                num(bounds.width_bound),
                bounds.param_count.to_string(),
                num(bounds.param_bound),
                num(eq.max_scaled_error),
                flag(eq.ok),
                flag(bounds.all_ok()),
                file,
            ]);
        }
    }
    table.write(&cfg.out.join("report.csv"))?;
    let extra = json!({ "rows": table.len(), "failures": failures });
    write_json(&cfg.out.join("metadata.json"), &metadata("compile", cfg, COLUMNS, extra))?;
    if !failures.is_empty() {
        return Err(CliError::Check(failures.join("; ")));
    }
    Ok(Summary {
        lines: vec![format!("compile: {} networks, equivalence and size bounds pass", table.len())],
    })
}
