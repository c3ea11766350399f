//! Byte-stable JSON: sorted keys, floats with 17 significant digits, LF.

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;

pub fn format_float(x: f64) -> String {
    if !x.is_finite() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0.0".to_string();
    }
    format!("{:.16e}", x)
}

fn write_str(out: &mut String, s: &str) {
    // serde_json's string escaping is already canonical
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

fn write_value(out: &mut String, v: &Value, indent: Option<usize>, depth: usize) {
    let newline = |out: &mut String, d: usize| {
        if let Some(w) = indent {
            out.push('\n');
            out.push_str(&" ".repeat(w * d));
        }
    };
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => write_str(out, s),
        Value::Array(items) => {
            // arrays of scalars stay on one line
            let flat = items.iter().all(|x| !x.is_array() && !x.is_object());
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                if !flat {
                    newline(out, depth + 1);
                }
                write_value(out, item, indent, depth + 1);
            }
            if !flat && !items.is_empty() {
                newline(out, depth);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                newline(out, depth + 1);
                write_str(out, key);
                out.push(':');
                if indent.is_some() {
                    out.push(' ');
                }
                write_value(out, &map[*key], indent, depth + 1);
            }
            if !keys.is_empty() {
                newline(out, depth);
            }
            out.push('}');
        }
    }
}

pub fn value_to_string(v: &Value, pretty: bool) -> String {
    let mut out = String::new();
    write_value(&mut out, v, if pretty { Some(2) } else { None }, 0);
    out.push('\n');
    out
}

pub fn to_canonical_json<T: Serialize>(x: &T, pretty: bool) -> Result<String> {
    Ok(value_to_string(&serde_json::to_value(x)?, pretty))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn sorted_and_fixed_digits() {
        let v = json!({"b": 0.1, "a": [1, 2.5], "c": {"z": true, "y": null}});
        let s = value_to_string(&v, false);
        assert_eq!(
            s,
            "{\"a\":[1,2.5000000000000000e0],\"b\":1.0000000000000001e-1,\"c\":{\"y\":null,\"z\":true}}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn floats_round_trip() {
        for x in [1.0 / 3.0, 1e-300, 123456.789, -2.5e17, std::f64::consts::PI] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }
}
