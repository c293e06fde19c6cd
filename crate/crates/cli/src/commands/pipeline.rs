//! Sizes, builds and measures the end-to-end network for every `(d, eps)`.
//!
//! Per cell: the theoretical constants `(c_d, N, delta)` are always reported.
//! The network itself is built at the configured `(n, M)` and f-accuracy
//! when given (the theoretical sizes are far beyond desk scale), otherwise
//! at the theoretical ones. Cells whose predicted work or parameter count
//! exceeds the ceiling are reported as skipped.

use picard_core::compiler::predicted_dims;
use picard_core::mlp::{self, sizing_rules, theorem_constant};
use picard_core::pwl::{clipped_approx, ClippedSizing};
use picard_core::{compile, CompileSpec, MultiIndex, Problem, RandTree};
use serde::Serialize;
use serde_json::json;

use super::{metadata, Summary};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::problems::{builtin, FamilyConstants};
use crate::report::{flag, num, write_bytes, write_json, Table};
use crate::sampling::{measure_moment, measure_points};

pub const COLUMNS: &[&str] = &[
    "d", "eps", "theory_levels", "theory_delta", "c_d", "n", "M", "f_delta", "depth", "width", "param_count",
    "l2_error", "l2_se", "within_eps", "status",
];

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    pub d: usize,
    pub eps: f64,
    pub theory_levels: usize,
    pub theory_delta: f64,
    pub c_d: f64,
    pub n: usize,
    pub m: usize,
    pub f_delta: f64,
    pub depth: usize,
    pub width: usize,
    pub param_count: u128,
    pub l2_error: f64,
    pub l2_se: f64,
    pub within_eps: bool,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Fail,
    Skipped,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
struct Fit {
    d: usize,
    points: usize,
    slope: Option<f64>,
    nondecreasing: bool,
}

/// The problem with growth constants raised to cover the g-family, so that
/// one `(B, p)` pair serves both the growth and the family hypotheses.
fn theorem_problem(prob: &Problem, fam: &FamilyConstants) -> Problem {
    let mut p = prob.clone();
    p.growth = p.growth.max(fam.growth);
    p.growth_exp = p.growth_exp.max(fam.p);
    p
}

fn cell(cfg: &RunConfig, d: usize, k: usize) -> CliResult<Cell> {
    let eps = cfg.eps[k];
    let b = builtin(&cfg.problem, d)?;
    let fam = b.family.constants();
    let prob = theorem_problem(&b.problem, &fam);
    let nu = measure_moment(&cfg.measure, d, prob.growth_exp * prob.stability)?;
    let c_d = theorem_constant(&prob, nu);
    let sizing = sizing_rules(&prob, eps, c_d)?;
    let (n, m) = cfg.pipeline_levels(k)?.unwrap_or((sizing.levels, sizing.levels));
    let f_delta = cfg.f_accuracy_factor.map_or(sizing.delta, |f| f * eps);
    let mut out = Cell {
        d,
        eps,
        theory_levels: sizing.levels,
        theory_delta: sizing.delta,
        c_d,
        n,
        m,
        f_delta,
        depth: 0,
        width: 0,
        param_count: 0,
        l2_error: f64::NAN,
        l2_se: f64::NAN,
        within_eps: false,
        status: Status::Skipped,
    };
    if mlp::node_estimate(n, m) > cfg.ceiling {
        return Ok(out);
    }
    let q = prob.stability as f64;
    let f_width = match ClippedSizing::new(&b.problem.f, q, f_delta) {
        Ok(s) => s.hidden_width() as f64,
        Err(picard_core::Error::Ceiling { .. }) => f64::INFINITY,
        Err(e) => return Err(e.into()),
    };
    if f_width > cfg.ceiling || b.family.hidden_width(d, f_delta) > cfg.ceiling {
        return Ok(out);
    }
    let net_f = clipped_approx(&b.problem.f, q, f_delta)?;
    let net_g = b.family.network(d, f_delta.min(1.0))?;
    let dims = predicted_dims(net_f.dims(), net_g.dims(), n, m)?;
    out.depth = dims.len();
    out.width = dims.hidden().iter().copied().max().unwrap_or(0);
    out.param_count = dims.param_count();
    if out.param_count as f64 > cfg.ceiling {
        return Ok(out);
    }

    let mut spec = CompileSpec::new(
        net_f,
        net_g,
        n,
        m,
        0.0,
        prob.horizon,
        MultiIndex::root(0),
        RandTree::new(cfg.seed, d)?,
    );
    spec.ceiling = cfg.ceiling;
    let net = compile(&spec)?;
    debug_assert_eq!(net.dims(), &dims);
    if cfg.write_networks {
        write_bytes(&cfg.out.join(format!("networks/pipeline_d{d}_e{k}.json")), net.to_json().as_bytes())?;
    }

    let (points, exact) = measure_points(&cfg.measure, cfg.seed, cfg.samples, d)?;
    let values = net.realize_batch(&points)?;
    let constant_ref = if b.reference.is_spatially_constant() {
        Some(b.reference.value(&b.problem, cfg.seed, 0.0, &points[0])?)
    } else {
        None
    };
    let mut sq = Vec::with_capacity(points.len());
    for (x, v) in points.iter().zip(&values) {
        let u = match constant_ref {
            Some(u) => u,
            None => b.reference.value(&b.problem, cfg.seed, 0.0, x)?,
        };
        sq.push((v[0] - u).powi(2));
    }
    let count = sq.len() as f64;
    let mse = sq.iter().sum::<f64>() / count;
    let mse_se = if exact || sq.len() < 2 {
        0.0
    } else {
        (sq.iter().map(|s| (s - mse).powi(2)).sum::<f64>() / (count - 1.0) / count).sqrt()
    };
    out.l2_error = mse.sqrt();
    out.l2_se = if out.l2_error > 0.0 { mse_se / (2.0 * out.l2_error) } else { 0.0 };
    out.within_eps = out.l2_error + 2.0 * out.l2_se <= eps;
    out.status = if out.within_eps { Status::Ok } else { Status::Fail };
    Ok(out)
}

pub fn run(cfg: &RunConfig) -> CliResult<Summary> {
    for k in 0..cfg.eps.len() {
        cfg.pipeline_levels(k)?;
    }
    let family = builtin(&cfg.problem, cfg.dims[0])?.family.constants();
    let exponent_bound = 4.0 + 2.0 * family.alpha + family.beta + 1.0;

    let mut cells = Vec::new();
    for &d in &cfg.dims {
        for k in 0..cfg.eps.len() {
            cells.push(cell(cfg, d, k)?);
        }
    }

    let mut table = Table::new(COLUMNS);
    for c in &cells {
        let built = c.status != Status::Skipped;
        let opt = |v: String| if built { v } else { String::new() };
        table.push(vec![
            c.d.to_string(),
            num(c.eps),
            c.theory_levels.to_string(),
            num(c.theory_delta),
            num(c.c_d),
            c.n.to_string(),
            c.m.to_string(),
            num(c.f_delta),
            opt(c.depth.to_string()),
            opt(c.width.to_string()),
            opt(c.param_count.to_string()),
            opt(num(c.l2_error)),
            opt(num(c.l2_se)),
            flag(c.within_eps),
            c.status.as_str().into(),
        ]);
    }

    let mut fits = Vec::new();
    for &d in &cfg.dims {
        let mut built: Vec<&Cell> = cells.iter().filter(|c| c.d == d && c.status != Status::Skipped).collect();
        built.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        let xs: Vec<f64> = built.iter().map(|c| (1.0 / c.eps).ln()).collect();
        let ys: Vec<f64> = built.iter().map(|c| (c.param_count as f64).ln()).collect();
        let nondecreasing = built.windows(2).all(|w| w[1].param_count >= w[0].param_count);
        fits.push(Fit { d, points: built.len(), slope: slope(&xs, &ys), nondecreasing });
    }
    let mut d_slopes = Vec::new();
    for &eps in &cfg.eps {
        let built: Vec<&Cell> = cells.iter().filter(|c| c.eps == eps && c.status != Status::Skipped).collect();
        let xs: Vec<f64> = built.iter().map(|c| (c.d as f64).ln()).collect();
        let ys: Vec<f64> = built.iter().map(|c| (c.param_count as f64).ln()).collect();
        d_slopes.push(json!({ "eps": eps, "points": built.len(), "slope": slope(&xs, &ys) }));
    }

    let failed: Vec<&Cell> = cells.iter().filter(|c| c.status == Status::Fail).collect();
    let skipped = cells.iter().filter(|c| c.status == Status::Skipped).count();
    let bad_slopes: Vec<&Fit> = fits
        .iter()
        .filter(|f| !f.nondecreasing || f.slope.is_some_and(|s| !s.is_finite() || s > exponent_bound))
        .collect();

    table.write(&cfg.out.join("report.csv"))?;
    let extra = json!({
        "family": family,
        "exponent_bound": exponent_bound,
        "eps_fits": fits,
        "d_fits": d_slopes,
        "cells": cells.len(),
        "failed": failed.len(),
        "skipped": skipped,
    });
    write_json(&cfg.out.join("metadata.json"), &metadata("pipeline", cfg, COLUMNS, extra))?;

    let mut problems = Vec::new();
    for c in &failed {
        problems.push(format!("d={} eps={}: L2 error {} (se {}) above eps", c.d, num(c.eps), num(c.l2_error), num(c.l2_se)));
    }
    for f in &bad_slopes {
        problems.push(format!("d={}: parameter growth slope {:?} vs bound {exponent_bound}", f.d, f.slope));
    }
    if !problems.is_empty() {
        return Err(CliError::Check(problems.join("; ")));
    }
    Ok(Summary {
        lines: vec![format!(
            "pipeline: {} cells, {} built within eps, {skipped} skipped",
            cells.len(),
            cells.len() - skipped
        )],
    })
}
