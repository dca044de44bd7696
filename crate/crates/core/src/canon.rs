//! Byte-stable JSON emission.
//!
//! Object keys are always emitted in lexicographic order and coordinates are
//! written with a fixed number of decimals, so equal documents produce equal
//! bytes regardless of construction order.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Canon {
    Null,
    Bool(bool),
    Int(i64),
    /// Fixed-point number with three decimals.
    Fixed3(f64),
    /// Shortest round-trip representation.
    Num(f64),
    Str(String),
    Arr(Vec<Canon>),
    Obj(BTreeMap<String, Canon>),
}

impl Canon {
    pub fn obj<I, K>(entries: I) -> Canon
    where
        I: IntoIterator<Item = (K, Canon)>,
        K: Into<String>,
    {
        Canon::Obj(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn str(s: impl Into<String>) -> Canon {
        Canon::Str(s.into())
    }

    pub fn point(x: f64, y: f64) -> Canon {
        Canon::Arr(vec![Canon::Fixed3(x), Canon::Fixed3(y)])
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    pub fn write(&self, out: &mut String) {
        match self {
            Canon::Null => out.push_str("null"),
            Canon::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Canon::Int(i) => out.push_str(&i.to_string()),
            Canon::Fixed3(v) => out.push_str(&fixed3(*v)),
            Canon::Num(v) => {
                if v.is_finite() {
                    out.push_str(&serde_json::to_string(v).expect("finite float"));
                } else {
                    out.push_str("null");
                }
            }
            Canon::Str(s) => out.push_str(&serde_json::to_string(s).expect("string")),
            Canon::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Canon::Obj(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).expect("key"));
                    out.push(':');
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

/// Formats with three decimals, never emitting a negative zero.
pub fn fixed3(v: f64) -> String {
    if !v.is_finite() {
        return "null".to_string();
    }
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// Rounds to the value a three-decimal serialization would carry.
pub fn round3(v: f64) -> f64 {
    fixed3(v).parse().unwrap_or(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_sorted_and_fixed_decimals() {
        let doc = Canon::obj([
            ("zeta", Canon::Int(1)),
            ("alpha", Canon::point(1.25, -0.0001)),
            ("mid", Canon::str("a\"b")),
        ]);
        assert_eq!(
            doc.to_json(),
            r#"{"alpha":[1.250,0.000],"mid":"a\"b","zeta":1}"#
        );
    }

    #[test]
    fn shortest_float_and_nonfinite() {
        assert_eq!(Canon::Num(0.1).to_json(), "0.1");
        assert_eq!(Canon::Num(f64::NAN).to_json(), "null");
    }
}
