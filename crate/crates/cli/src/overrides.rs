//! `--set key=value` edits applied to the scenario document before it is
//! parsed.

use serde_json::Value;

use crate::failure::Failure;

/// Top-level keys that may be set even when the file leaves them out.
const OPTIONAL_KEYS: &[&str] = &["targets", "noise_power", "sync_errors_s", "pairing", "seed"];

fn alias(key: &str) -> &str {
    match key {
        "bandwidth" => "bandwidth_hz",
        "f0" => "f0_hz",
        "noise" => "noise_power",
        other => other,
    }
}

/// Applies `key=value` to `doc`. The value is read as JSON, falling back to
/// a plain string. Keys must already exist in the document, apart from the
/// optional top-level fields.
pub fn apply(doc: &mut Value, spec: &str) -> Result<(), Failure> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Failure::validation("override", format!("`{spec}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    let path: Vec<&str> = key.trim().split('.').collect();
    let unknown = || Failure::validation("override", format!("`{key}` does not name a scenario field"));
    if path.iter().any(|p| p.is_empty()) {
        return Err(unknown());
    }

    let mut node = doc;
    for (i, seg) in path.iter().enumerate() {
        let last = i + 1 == path.len();
        let seg = if i == 0 { alias(seg) } else { seg };
        node = match node {
            Value::Object(map) => {
                if last {
                    if map.contains_key(seg) || (i == 0 && OPTIONAL_KEYS.contains(&seg)) {
                        map.insert(seg.to_string(), value);
                        return Ok(());
                    }
                    return Err(unknown());
                }
                map.get_mut(seg).ok_or_else(unknown)?
            }
            Value::Array(items) => {
                let idx: usize = seg.parse().map_err(|_| unknown())?;
                let slot = items.get_mut(idx).ok_or_else(unknown)?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(unknown()),
        };
    }
    Err(unknown())
}
