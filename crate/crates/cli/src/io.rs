use std::fs;
use std::io::Write;
use std::path::Path;

use pruneobs::system_file::{load_system_csv, load_system_json, LoadedSystem};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::{invalid, CliError, CliResult, SystemArgs};

fn parse_error(what: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{what}: {e}"))
}

/// Reads a configuration object; a missing path yields an empty object.
pub fn read_config(path: Option<&Path>) -> CliResult<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = fs::read_to_string(path).map_err(|e| parse_error(&format!("cannot read {}", path.display()), e))?;
    match serde_json::from_str::<Value>(&text).map_err(|e| parse_error("invalid config", e))? {
        Value::Object(map) => Ok(map),
        _ => invalid("config file must hold a JSON object"),
    }
}

/// Removes the keys in `keys` from `map` and deserializes them as `T`.
pub fn take_keys<T: DeserializeOwned>(map: &mut Map<String, Value>, keys: &[&str]) -> CliResult<T> {
    let mut sub = Map::new();
    for k in keys {
        if let Some(v) = map.remove(*k) {
            sub.insert((*k).to_string(), v);
        }
    }
    serde_json::from_value(Value::Object(sub)).map_err(|e| parse_error("invalid config", e))
}

pub fn from_map<T: DeserializeOwned>(map: Map<String, Value>) -> CliResult<T> {
    serde_json::from_value(Value::Object(map)).map_err(|e| parse_error("invalid config", e))
}

pub fn take_system(map: &mut Map<String, Value>) -> CliResult<SystemArgs> {
    take_keys(map, &["system", "a_csv", "c_csv", "T"])
}

pub fn load_system(args: &SystemArgs) -> CliResult<LoadedSystem> {
    match (&args.system, &args.a_csv, &args.c_csv) {
        (Some(p), None, None) => Ok(load_system_json(p)?),
        (None, Some(a), Some(c)) => Ok(LoadedSystem {
            system: load_system_csv(a, c)?,
            x0: None,
        }),
        (None, None, None) => invalid("a system is required: --system FILE or --a-csv FILE --c-csv FILE"),
        _ => invalid("give either --system or the --a-csv/--c-csv pair, not both"),
    }
}

/// A JSON array of numbers or an object with the array under `key`.
pub fn read_vector(path: &Path, key: &str) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| parse_error(&format!("cannot read {}", path.display()), e))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| parse_error(&format!("invalid {key} file"), e))?;
    let arr = match value {
        Value::Object(mut m) => m.remove(key).unwrap_or(Value::Null),
        v => v,
    };
    serde_json::from_value(arr).map_err(|e| parse_error(&format!("{key} must be an array of numbers"), e))
}

/// Writes `text` to `out` through a temporary file in the same directory, or
/// to stdout when no path is given.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    let io_err = |e: std::io::Error| CliError::Validation(format!("cannot write output: {e}"));
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(io_err)?;
            stdout.flush().map_err(io_err)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
            tmp.write_all(text.as_bytes()).map_err(io_err)?;
            tmp.persist(path).map_err(|e| io_err(e.error))?;
            Ok(())
        }
    }
}
