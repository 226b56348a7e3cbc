//! JSON/CSV number formatting shared by the reports.
//!
//! Floats are written with 17 significant digits so that reports round-trip
//! and diff cleanly; non-finite values become `null`.

use serde::Serialize;
use serde_json::{Number, Value};

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_sig17(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0e0"
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

fn rewrite(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(f) if f.is_finite() => {
                let text = fmt_sig17(f);
                Value::Number(text.parse::<Number>().expect("formatted float is a valid JSON number"))
            }
            _ => Value::Null,
        },
        Value::Array(items) => Value::Array(items.into_iter().map(rewrite).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rewrite(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float at 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&rewrite(v))?;
    text.push('\n');
    Ok(text)
}
