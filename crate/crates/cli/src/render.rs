//! Output rendering: float precision control, closed-form annotation and
//! pretty printing.

use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    Six,
    Full,
}

/// Round every float leaf to six decimals (display default). Integral floats
/// keep a trailing `.0` through serde's shortest representation.
pub fn apply_precision(value: &mut Value, precision: Precision) {
    if precision == Precision::Full {
        return;
    }
    match value {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    let rounded = round6(f);
                    if let Some(num) = serde_json::Number::from_f64(rounded) {
                        *value = Value::Number(num);
                    }
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                apply_precision(item, precision);
            }
        }
        Value::Object(map) => {
            for (_, item) in map.iter_mut() {
                apply_precision(item, precision);
            }
        }
        _ => {}
    }
}

fn round6(x: f64) -> f64 {
    let r = (x * 1e6).round() / 1e6;
    if r == 0.0 {
        0.0 // normalize -0.0
    } else {
        r
    }
}

/// Recognize a value as an integer or as log2 of a small rational.
pub fn closed_form(v: f64) -> Option<String> {
    let rounded = v.round();
    if (v - rounded).abs() < 1e-9 {
        return Some(format!("{}", rounded as i64));
    }
    let mut best: Option<(u64, u64)> = None;
    for q in 1..=100u64 {
        for p in (q + 1)..=10_000u64 {
            if (v - (p as f64 / q as f64).log2()).abs() < 1e-9 {
                let g = gcd(p, q);
                let (p, q) = (p / g, q / g);
                if best.is_none_or(|(bp, bq)| (q, p) < (bq, bp)) {
                    best = Some((p, q));
                }
            }
        }
    }
    best.map(|(p, q)| {
        if q == 1 {
            format!("log2({p})")
        } else {
            format!("log2({p}/{q})")
        }
    })
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Render a JSON value as indented text lines for human consumption.
pub fn pretty_lines(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                match v {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        pretty_lines(v, indent + 1, out);
                    }
                    other => out.push_str(&format!("{pad}{k}: {other}\n")),
                }
            }
        }
        Value::Array(items) => {
            if items
                .iter()
                .all(|i| !matches!(i, Value::Object(_) | Value::Array(_)))
            {
                let joined: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                out.push_str(&format!("{pad}[{}]\n", joined.join(", ")));
            } else {
                for item in items {
                    pretty_lines(item, indent + 1, out);
                    out.push_str(&format!("{pad}-\n"));
                }
            }
        }
        other => out.push_str(&format!("{pad}{other}\n")),
    }
}
