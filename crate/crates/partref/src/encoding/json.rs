//! Structured (JSON) input: the same data model as the text format.
//!
//! ```json
//! {
//!   "functor": "P (D (A x X))",
//!   "alphabets": {"A": ["a", "b"]},
//!   "constants": {},
//!   "states": [
//!     {"name": "q0", "value": {"Set": [{"Map": [[{"Tuple": [{"Name": "a"},
//!       {"Name": "q0"}]}, "1"]]}]}},
//!     {"name": "q1", "value": {"Set": []}}
//!   ]
//! }
//! ```
//!
//! Weights are strings in the same syntax as the text format (`"1/2"`,
//! `"0.25"`, `"-3"`). Values are rendered to the text grammar internally and
//! reuse its validation, so both formats accept exactly the same systems.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::text::{parse_rational, parse_spec_text, ParseError};
use super::CoalgebraSpec;

#[derive(Serialize, Deserialize, Debug)]
pub struct JsonSpec {
    pub functor: String,
    #[serde(default)]
    pub alphabets: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub constants: BTreeMap<String, Vec<String>>,
    pub states: Vec<JsonState>,
}

#[derive(Serialize, Deserialize, Debug)]
pub struct JsonState {
    pub name: String,
    pub value: JsonValue,
}

#[derive(Serialize, Deserialize, Debug)]
pub enum JsonValue {
    Set(Vec<JsonValue>),
    Map(Vec<(JsonValue, String)>),
    Tuple(Vec<JsonValue>),
    Inj(u32, Box<JsonValue>),
    Exp(Vec<(String, JsonValue)>),
    Name(String),
}

fn fail(msg: impl Into<String>) -> ParseError {
    ParseError {
        line: 0,
        col: 0,
        msg: msg.into(),
    }
}

pub fn parse_spec_json(src: &str) -> Result<CoalgebraSpec, ParseError> {
    let json: JsonSpec =
        serde_json::from_str(src).map_err(|e| fail(format!("bad JSON input: {e}")))?;
    let mut text = String::new();
    text.push_str(&format!("functor: {}\n", json.functor));
    for (name, elements) in &json.alphabets {
        text.push_str(&format!("alphabet {name}: {}\n", elements.join(" ")));
    }
    for (name, elements) in &json.constants {
        text.push_str(&format!("constants {name}: {}\n", elements.join(" ")));
    }
    for st in &json.states {
        let mut v = String::new();
        render(&st.value, &mut v)?;
        text.push_str(&format!("state {}: {v}\n", st.name));
    }
    parse_spec_text(&text)
}

fn render(v: &JsonValue, out: &mut String) -> Result<(), ParseError> {
    match v {
        JsonValue::Set(vs) => {
            out.push('{');
            for (i, m) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(m, out)?;
            }
            out.push('}');
        }
        JsonValue::Map(m) => {
            out.push('{');
            for (i, (k, w)) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(k, out)?;
                if parse_rational(w).is_none() {
                    return Err(fail(format!("bad weight `{w}`")));
                }
                out.push_str(": ");
                out.push_str(w);
            }
            out.push('}');
        }
        JsonValue::Tuple(vs) => {
            out.push('(');
            for (i, m) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render(m, out)?;
            }
            out.push(')');
        }
        JsonValue::Inj(k, inner) => {
            out.push_str(&format!("in{k}("));
            render(inner, out)?;
            out.push(')');
        }
        JsonValue::Exp(entries) => {
            out.push('[');
            for (i, (e, m)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(e);
                out.push_str(": ");
                render(m, out)?;
            }
            out.push(']');
        }
        JsonValue::Name(n) => out.push_str(n),
    }
    Ok(())
}
