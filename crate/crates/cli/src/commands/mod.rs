pub mod compile;
pub mod interp;
pub mod pipeline;
pub mod solve;

use serde_json::{json, Value};

use crate::config::RunConfig;

/// Outcome of a command that finished writing its outputs.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub lines: Vec<String>,
}

/// The configuration as recorded in metadata: everything that influences
/// results, and nothing that does not (output directory, thread count).
pub(crate) fn config_echo(cfg: &RunConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Value::Object(map) = &mut v {
        map.remove("out");
        map.remove("threads");
    }
    v
}

pub(crate) fn metadata(command: &str, cfg: &RunConfig, columns: &[&str], extra: Value) -> Value {
    json!({
        "tool": "picard",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config_echo(cfg),
        "columns": columns,
        "results": extra,
    })
}
