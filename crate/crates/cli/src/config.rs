//! Configuration overrides.
//!
//! Precedence, lowest to highest: built-in defaults, the `--config` JSON
//! object, then dedicated flags such as `--seed`. The override is merged
//! shallowly: each top-level key replaces the default value wholesale, so
//! nested objects (e.g. `extent`) must be given in full.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{usage, CliResult};

/// Reads `arg` as inline JSON when it starts with `{`, otherwise as a path.
fn read_override(arg: &str) -> CliResult<serde_json::Map<String, Value>> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg))
            .map_err(|e| usage(format!("cannot read config {arg}: {e}")))?
    };
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage("config must be a JSON object")),
        Err(e) => Err(usage(format!("malformed config JSON: {e}"))),
    }
}

/// `T::default()` with every key of `arg` (if any) replaced.
pub fn merged<T>(arg: Option<&str>) -> CliResult<T>
where
    T: Serialize + DeserializeOwned + Default,
{
    let Some(arg) = arg else {
        return Ok(T::default());
    };
    let overrides = read_override(arg)?;
    let Value::Object(mut base) = serde_json::to_value(T::default()).map_err(usage)? else {
        return Err(usage("configuration defaults are not an object"));
    };
    for (key, value) in overrides {
        if !base.contains_key(&key) {
            let known: Vec<&str> = base.keys().map(String::as_str).collect();
            return Err(usage(format!(
                "unknown config key `{key}` (expected one of: {})",
                known.join(", ")
            )));
        }
        base.insert(key, value);
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| usage(format!("config: {e}")))
}
