//! The plain-text input format.
//!
//! ```text
//! # comment
//! functor: P (D (A x X))
//! alphabet A: a b
//! constants 2: 0 1          # numeric names auto-declare if omitted
//! state q0: {{(a, q0): 1/2, (b, q1): 1/2}}
//! state q1: {}
//! ```
//!
//! Header lines come first: exactly one `functor:` line, then any number of
//! `alphabet`/`constants` declarations (one shared namespace). Every
//! following `state <name>: <value>` line gives the transition value of one
//! state, on a single line. The value grammar mirrors the transition-type
//! term: sets `{v, v}`, weighted maps `{v: w, v: w}`, tuples `(v, v)`,
//! coproduct injections `in1(v)`, exponents `[a: v, b: v]` (total over the
//! set), constant elements and states by name. Weights are integers `3`,
//! fractions `-1/2` or decimals `0.25`; decimals are read exactly.
//!
//! Initial partitions live in their own files made of `class <name>: s1 s2…`
//! lines; unlisted states share an implicit default class.

use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::{CheckedAdd, Signed, Zero};

use super::{CoalgebraSpec, DeclKind, Decls, FunctorTerm, SetDecl, Value};
use crate::interfaces::GroupElem;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.msg)
        } else {
            write!(f, "line {}, column {}: {}", self.line, self.col, self.msg)
        }
    }
}

impl std::error::Error for ParseError {}

fn err<T>(line: u32, col: u32, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        col,
        msg: msg.into(),
    })
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Parses `p`, `-p`, `p/q` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational64> {
    let (neg, rest) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let apply = |r: Rational64| if neg { -r } else { r };
    if let Some((p, q)) = rest.split_once('/') {
        let p: i64 = p.parse().ok()?;
        let q: i64 = q.parse().ok()?;
        if q == 0 {
            return None;
        }
        return Some(apply(Rational64::new(p, q)));
    }
    if let Some((int, frac)) = rest.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let int: i64 = if int.is_empty() { 0 } else { int.parse().ok()? };
        let mut den: i64 = 1;
        for _ in 0..frac.len() {
            den = den.checked_mul(10)?;
        }
        let frac_num: i64 = frac.parse().ok()?;
        let num = int.checked_mul(den)?.checked_add(frac_num)?;
        return Some(apply(Rational64::new(num, den)));
    }
    let v: i64 = rest.parse().ok()?;
    Some(apply(Rational64::new(v, 1)))
}

// ---------------------------------------------------------------------------
// Value tokens.
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq, Debug)]
enum VTok {
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Colon,
    Atom(String),
}

struct VTokens {
    toks: Vec<(VTok, u32)>,
    pos: usize,
    line: u32,
    end_col: u32,
}

fn tokenize_value(text: &str, line: u32, col0: u32) -> Result<VTokens, ParseError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i];
        let col = col0 + i as u32;
        let tok = match c {
            b' ' | b'\t' => {
                i += 1;
                continue;
            }
            b'{' => VTok::LBrace,
            b'}' => VTok::RBrace,
            b'[' => VTok::LBrack,
            b']' => VTok::RBrack,
            b'(' => VTok::LParen,
            b')' => VTok::RParen,
            b',' => VTok::Comma,
            b':' => VTok::Colon,
            _ if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-' | b'/' | b'.') => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric()
                        || matches!(bytes[i], b'_' | b'-' | b'/' | b'.'))
                {
                    i += 1;
                }
                toks.push((
                    VTok::Atom(std::str::from_utf8(&bytes[start..i]).unwrap().to_string()),
                    col,
                ));
                continue;
            }
            _ => return err(line, col, format!("unexpected character `{}`", c as char)),
        };
        toks.push((tok, col));
        i += 1;
    }
    Ok(VTokens {
        toks,
        pos: 0,
        line,
        end_col: col0 + bytes.len() as u32,
    })
}

impl VTokens {
    fn peek(&self) -> Option<&(VTok, u32)> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<(VTok, u32)> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: VTok, what: &str) -> Result<u32, ParseError> {
        match self.next() {
            Some((t, col)) if t == want => Ok(col),
            Some((_, col)) => err(self.line, col, format!("expected {what}")),
            None => err(self.line, self.end_col, format!("expected {what}")),
        }
    }
}

#[derive(Clone, Debug)]
struct Raw {
    col: u32,
    node: RawNode,
}

#[derive(Clone, Debug)]
enum RawNode {
    Collection(Vec<(Raw, Option<(Rational64, u32)>)>),
    Tuple(Vec<Raw>),
    Inj(u32, Box<Raw>),
    Exp(Vec<(String, u32, Raw)>),
    Name(String),
}

fn parse_raw(t: &mut VTokens) -> Result<Raw, ParseError> {
    let (tok, col) = match t.next() {
        Some(x) => x,
        None => return err(t.line, t.end_col, "expected a value"),
    };
    let node = match tok {
        VTok::LBrace => {
            let mut entries = Vec::new();
            if let Some((VTok::RBrace, _)) = t.peek() {
                t.next();
            } else {
                loop {
                    let v = parse_raw(t)?;
                    let weight = if let Some((VTok::Colon, _)) = t.peek() {
                        t.next();
                        match t.next() {
                            Some((VTok::Atom(a), wcol)) => match parse_rational(&a) {
                                Some(r) => Some((r, wcol)),
                                None => return err(t.line, wcol, format!("bad weight `{a}`")),
                            },
                            Some((_, wcol)) => return err(t.line, wcol, "expected a weight"),
                            None => return err(t.line, t.end_col, "expected a weight"),
                        }
                    } else {
                        None
                    };
                    entries.push((v, weight));
                    match t.next() {
                        Some((VTok::Comma, _)) => continue,
                        Some((VTok::RBrace, _)) => break,
                        Some((_, c)) => return err(t.line, c, "expected `,` or `}`"),
                        None => return err(t.line, t.end_col, "unclosed `{`"),
                    }
                }
            }
            RawNode::Collection(entries)
        }
        VTok::LBrack => {
            let mut entries = Vec::new();
            if let Some((VTok::RBrack, _)) = t.peek() {
                t.next();
            } else {
                loop {
                    let (name, ncol) = match t.next() {
                        Some((VTok::Atom(a), c)) => (a, c),
                        Some((_, c)) => return err(t.line, c, "expected a set element"),
                        None => return err(t.line, t.end_col, "unclosed `[`"),
                    };
                    t.expect(VTok::Colon, "`:`")?;
                    let v = parse_raw(t)?;
                    entries.push((name, ncol, v));
                    match t.next() {
                        Some((VTok::Comma, _)) => continue,
                        Some((VTok::RBrack, _)) => break,
                        Some((_, c)) => return err(t.line, c, "expected `,` or `]`"),
                        None => return err(t.line, t.end_col, "unclosed `[`"),
                    }
                }
            }
            RawNode::Exp(entries)
        }
        VTok::LParen => {
            let mut items = vec![parse_raw(t)?];
            loop {
                match t.next() {
                    Some((VTok::Comma, _)) => items.push(parse_raw(t)?),
                    Some((VTok::RParen, _)) => break,
                    Some((_, c)) => return err(t.line, c, "expected `,` or `)`"),
                    None => return err(t.line, t.end_col, "unclosed `(`"),
                }
            }
            RawNode::Tuple(items)
        }
        VTok::Atom(a) => {
            let injection = a
                .strip_prefix("in")
                .and_then(|d| d.parse::<u32>().ok())
                .filter(|&k| k >= 1 && matches!(t.peek(), Some((VTok::LParen, _))));
            if let Some(k) = injection {
                t.next(); // consume `(`
                let inner = parse_raw(t)?;
                t.expect(VTok::RParen, "`)`")?;
                RawNode::Inj(k, Box::new(inner))
            } else {
                RawNode::Name(a)
            }
        }
        _ => return err(t.line, col, "expected a value"),
    };
    Ok(Raw { col, node })
}

// ---------------------------------------------------------------------------
// Shape-directed validation.
// ---------------------------------------------------------------------------

struct ValidateCtx<'a> {
    decls: &'a Decls,
    state_index: &'a HashMap<String, u32>,
    line: u32,
}

fn validate(raw: &Raw, shape: &FunctorTerm, ctx: &ValidateCtx) -> Result<Value, ParseError> {
    let line = ctx.line;
    match shape {
        FunctorTerm::Argument => match &raw.node {
            RawNode::Name(n) => match ctx.state_index.get(n) {
                Some(&i) => Ok(Value::State(i)),
                None => err(line, raw.col, format!("unknown state `{n}`")),
            },
            _ => err(line, raw.col, "expected a state name"),
        },
        FunctorTerm::Const(name) => {
            let set = ctx.decls.lookup(name).expect("sets resolved before values");
            match &raw.node {
                RawNode::Name(n) => match ctx.decls.elem_index(set, n) {
                    Some(e) => Ok(Value::ConstElem(set, e)),
                    None => err(line, raw.col, format!("`{n}` is not an element of `{name}`")),
                },
                _ => err(line, raw.col, format!("expected an element of `{name}`")),
            }
        }
        FunctorTerm::Powerset(c) => match &raw.node {
            RawNode::Collection(entries) => {
                let mut members = Vec::with_capacity(entries.len());
                for (v, w) in entries {
                    if let Some((_, wcol)) = w {
                        return err(line, *wcol, "set members take no weights");
                    }
                    members.push(validate(v, c, ctx)?);
                }
                // Duplicate members collapse silently: these are sets.
                Ok(Value::Set(members).normalize())
            }
            _ => err(line, raw.col, "expected a set `{...}`"),
        },
        FunctorTerm::Bag(c) => {
            let entries = weighted_entries(raw, c, ctx)?;
            let mut out = Vec::with_capacity(entries.len());
            for (v, w, wcol) in entries {
                if !w.is_integer() || w <= Rational64::zero() {
                    return err(line, wcol, "bag multiplicities are positive integers");
                }
                out.push((v, GroupElem::Int(*w.numer())));
            }
            finish_map(out, line, raw.col)
        }
        FunctorTerm::Dist(c) => {
            let entries = weighted_entries(raw, c, ctx)?;
            let mut out = Vec::with_capacity(entries.len());
            let mut total = Rational64::zero();
            for (v, w, wcol) in entries {
                if !w.is_positive() {
                    return err(line, wcol, "distribution weights must be positive");
                }
                total = match CheckedAdd::checked_add(&total, &w) {
                    Some(t) => t,
                    None => return err(line, wcol, "distribution weights overflow"),
                };
                out.push((v, GroupElem::Rat(w)));
            }
            if total != Rational64::new(1, 1) {
                return err(
                    line,
                    raw.col,
                    format!("distribution weights sum to {total}, not 1"),
                );
            }
            finish_map(out, line, raw.col)
        }
        FunctorTerm::Group(kind, c) => {
            let entries = weighted_entries(raw, c, ctx)?;
            let mut out = Vec::with_capacity(entries.len());
            for (v, w, wcol) in entries {
                if w.is_zero() {
                    return err(line, wcol, "weights must be nonzero");
                }
                let elem = match kind {
                    super::GroupKindTag::Int => {
                        if !w.is_integer() {
                            return err(line, wcol, "integer-weighted systems take integer weights");
                        }
                        GroupElem::Int(*w.numer())
                    }
                    super::GroupKindTag::Rat => GroupElem::Rat(w),
                };
                out.push((v, elem));
            }
            finish_map(out, line, raw.col)
        }
        FunctorTerm::Product(children) => match &raw.node {
            RawNode::Tuple(items) if items.len() == children.len() => {
                let mut vals = Vec::with_capacity(items.len());
                for (item, c) in items.iter().zip(children) {
                    vals.push(validate(item, c, ctx)?);
                }
                Ok(Value::Tuple(vals))
            }
            RawNode::Tuple(items) => err(
                line,
                raw.col,
                format!("expected a {}-tuple, got {} components", children.len(), items.len()),
            ),
            _ => err(line, raw.col, "expected a tuple `(...)`"),
        },
        FunctorTerm::Coproduct(children) => match &raw.node {
            RawNode::Inj(k, inner) => {
                if *k as usize > children.len() {
                    return err(
                        line,
                        raw.col,
                        format!("injection in{k} outside a {}-way choice", children.len()),
                    );
                }
                let inner = validate(inner, &children[(*k - 1) as usize], ctx)?;
                Ok(Value::Inj(*k, Box::new(inner)))
            }
            _ => err(line, raw.col, "expected an injection `in1(...)`"),
        },
        FunctorTerm::Exponent(c, name) => {
            let set = ctx.decls.lookup(name).expect("sets resolved before values");
            match &raw.node {
                RawNode::Exp(entries) => {
                    let elems = &ctx.decls.sets[set].elements;
                    let mut slots: Vec<Option<Value>> = vec![None; elems.len()];
                    for (ename, ecol, v) in entries {
                        let idx = match ctx.decls.elem_index(set, ename) {
                            Some(i) => i as usize,
                            None => {
                                return err(
                                    line,
                                    *ecol,
                                    format!("`{ename}` is not an element of `{name}`"),
                                )
                            }
                        };
                        if slots[idx].is_some() {
                            return err(line, *ecol, format!("element `{ename}` listed twice"));
                        }
                        slots[idx] = Some(validate(v, c, ctx)?);
                    }
                    if let Some(missing) = slots.iter().position(Option::is_none) {
                        return err(
                            line,
                            raw.col,
                            format!("missing entry for element `{}`", elems[missing]),
                        );
                    }
                    Ok(Value::Exp(slots.into_iter().map(Option::unwrap).collect()))
                }
                _ => err(line, raw.col, "expected a table `[a: v, ...]`"),
            }
        }
    }
}

fn weighted_entries(
    raw: &Raw,
    child: &FunctorTerm,
    ctx: &ValidateCtx,
) -> Result<Vec<(Value, Rational64, u32)>, ParseError> {
    match &raw.node {
        RawNode::Collection(entries) => {
            let mut out = Vec::with_capacity(entries.len());
            for (v, w) in entries {
                match w {
                    Some((r, wcol)) => out.push((validate(v, child, ctx)?, *r, *wcol)),
                    None => {
                        return err(ctx.line, v.col, "expected `value: weight` entries");
                    }
                }
            }
            Ok(out)
        }
        _ => err(ctx.line, raw.col, "expected a weighted map `{v: w, ...}`"),
    }
}

fn finish_map(entries: Vec<(Value, GroupElem)>, line: u32, col: u32) -> Result<Value, ParseError> {
    let normalized = Value::MapW(entries).normalize();
    if let Value::MapW(m) = &normalized {
        for pair in m.windows(2) {
            if pair[0].0 == pair[1].0 {
                return err(line, col, "map lists the same target twice");
            }
        }
    }
    Ok(normalized)
}

// ---------------------------------------------------------------------------
// File-level parsing.
// ---------------------------------------------------------------------------

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses a system description in the text format.
pub fn parse_spec_text(src: &str) -> Result<CoalgebraSpec, ParseError> {
    let mut functor: Option<(FunctorTerm, u32)> = None;
    let mut decls = Decls::default();
    let mut states: Vec<(String, u32, String, u32)> = Vec::new();
    let mut seen_state = false;

    for (lineno, full_line) in src.lines().enumerate() {
        let lineno = lineno as u32 + 1;
        let line = strip_comment(full_line);
        if line.trim().is_empty() {
            continue;
        }
        let trimmed = line.trim_start();
        let indent = (line.len() - trimmed.len()) as u32;
        let (word, rest) = match trimmed.split_once(char::is_whitespace) {
            Some((w, r)) => (w, r),
            None => (trimmed, ""),
        };
        match word.trim_end_matches(':') {
            "functor" => {
                if seen_state {
                    return err(lineno, indent + 1, "headers must precede state lines");
                }
                if functor.is_some() {
                    return err(lineno, indent + 1, "duplicate functor line");
                }
                let term_src = expect_colon(word, rest, lineno, indent)?;
                let offset = (line.len() - term_src.len()) as u32;
                let term = super::parse_functor_term(term_src).map_err(|e| ParseError {
                    line: lineno,
                    col: offset + e.col,
                    msg: e.msg,
                })?;
                functor = Some((term, lineno));
            }
            "alphabet" | "constants" => {
                if seen_state {
                    return err(lineno, indent + 1, "headers must precede state lines");
                }
                let kind = if word.starts_with("alphabet") {
                    DeclKind::Alphabet
                } else {
                    DeclKind::Constant
                };
                let (name, elements) = parse_decl(rest, lineno, indent)?;
                decls
                    .insert(SetDecl {
                        name,
                        kind,
                        elements,
                    })
                    .map_err(|msg| ParseError {
                        line: lineno,
                        col: indent + 1,
                        msg,
                    })?;
            }
            "state" => {
                seen_state = true;
                let (name, value_text, col) = split_name_colon(rest, lineno, indent, word.len())?;
                states.push((name, lineno, value_text, col));
            }
            "class" => {
                return err(
                    lineno,
                    indent + 1,
                    "`class` lines belong in an initial-partition file",
                );
            }
            other => {
                return err(
                    lineno,
                    indent + 1,
                    format!("unexpected directive `{other}`"),
                )
            }
        }
    }

    let (functor, _) = match functor {
        Some(f) => f,
        None => return err(0, 0, "missing `functor:` line"),
    };
    // Resolve every set the transition type mentions (numeric names
    // auto-declare) before looking at values.
    for name in functor.set_names() {
        decls.resolve_or_auto(&name).map_err(|msg| ParseError {
            line: 0,
            col: 0,
            msg,
        })?;
    }

    let mut state_index = HashMap::new();
    let mut state_names = Vec::with_capacity(states.len());
    for (name, lineno, _, col) in &states {
        if !is_name(name) {
            return err(*lineno, *col, format!("bad state name `{name}`"));
        }
        if state_index.insert(name.clone(), state_names.len() as u32).is_some() {
            return err(*lineno, *col, format!("state `{name}` declared twice"));
        }
        state_names.push(name.clone());
    }

    let mut values = Vec::with_capacity(states.len());
    for (_, lineno, value_text, col) in &states {
        let mut toks = tokenize_value(value_text, *lineno, *col)?;
        let raw = parse_raw(&mut toks)?;
        if let Some((_, c)) = toks.peek() {
            return err(*lineno, *c, "trailing input after value");
        }
        let ctx = ValidateCtx {
            decls: &decls,
            state_index: &state_index,
            line: *lineno,
        };
        values.push(validate(&raw, &functor, &ctx)?);
    }

    Ok(CoalgebraSpec {
        functor,
        decls,
        state_names,
        values,
    })
}

fn expect_colon<'a>(
    word: &str,
    rest: &'a str,
    lineno: u32,
    indent: u32,
) -> Result<&'a str, ParseError> {
    if word.ends_with(':') {
        Ok(rest)
    } else {
        let rest = rest.trim_start();
        match rest.strip_prefix(':') {
            Some(r) => Ok(r),
            None => err(lineno, indent + 1, "expected `:`"),
        }
    }
}

fn parse_decl(rest: &str, lineno: u32, indent: u32) -> Result<(String, Vec<String>), ParseError> {
    let (name_part, elems_part) = match rest.split_once(':') {
        Some((n, e)) => (n.trim(), e),
        None => return err(lineno, indent + 1, "expected `<name>: <elements>`"),
    };
    if !is_name(name_part) {
        return err(lineno, indent + 1, format!("bad set name `{name_part}`"));
    }
    let elements: Vec<String> = elems_part
        .split_whitespace()
        .map(|s| s.to_string())
        .collect();
    for e in &elements {
        if !is_name(e) {
            return err(lineno, indent + 1, format!("bad element name `{e}`"));
        }
    }
    Ok((name_part.to_string(), elements))
}

fn split_name_colon(
    rest: &str,
    lineno: u32,
    indent: u32,
    word_len: usize,
) -> Result<(String, String, u32), ParseError> {
    match rest.split_once(':') {
        Some((name, value)) => {
            let name = name.trim().to_string();
            let col = indent + word_len as u32 + (rest.len() - value.len()) as u32 + 2;
            Ok((name, value.to_string(), col))
        }
        None => err(lineno, indent + 1, "expected `state <name>: <value>`"),
    }
}

/// Parses an initial-partition file: `class <name>: s1 s2 …` lines.
pub fn parse_initial_partition(src: &str) -> Result<Vec<(String, Vec<String>)>, ParseError> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for (lineno, full_line) in src.lines().enumerate() {
        let lineno = lineno as u32 + 1;
        let line = strip_comment(full_line).trim();
        if line.is_empty() {
            continue;
        }
        let rest = match line.strip_prefix("class") {
            Some(r) => r,
            None => return err(lineno, 1, "expected a `class <name>: ...` line"),
        };
        let (name, states) = parse_decl(rest, lineno, 0)?;
        if out.iter().any(|(n, _)| n == &name) {
            return err(lineno, 1, format!("class `{name}` declared twice"));
        }
        out.push((name, states));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Rendering.
// ---------------------------------------------------------------------------

/// Renders a system in the text format; the output parses back to the same
/// system.
pub fn render_spec(spec: &CoalgebraSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("functor: {}\n", spec.functor));
    for set in &spec.decls.sets {
        let keyword = match set.kind {
            DeclKind::Alphabet => "alphabet",
            DeclKind::Constant => "constants",
            DeclKind::Auto => continue,
        };
        out.push_str(&format!(
            "{keyword} {}: {}\n",
            set.name,
            set.elements.join(" ")
        ));
    }
    for (name, value) in spec.state_names.iter().zip(&spec.values) {
        out.push_str(&format!("state {name}: "));
        render_value(value, &spec.functor, &spec.state_names, &spec.decls, &mut out);
        out.push('\n');
    }
    out
}

/// Renders one value against its transition-type shape.
pub fn render_value(
    v: &Value,
    shape: &FunctorTerm,
    state_names: &[String],
    decls: &Decls,
    out: &mut String,
) {
    match (v, shape) {
        (Value::State(i), FunctorTerm::Argument) => {
            out.push_str(&state_names[*i as usize]);
        }
        (Value::ConstElem(set, e), _) => {
            out.push_str(&decls.sets[*set].elements[*e as usize]);
        }
        (Value::Set(vs), FunctorTerm::Powerset(c)) => {
            out.push('{');
            for (i, m) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_value(m, c, state_names, decls, out);
            }
            out.push('}');
        }
        (Value::MapW(m), FunctorTerm::Bag(c))
        | (Value::MapW(m), FunctorTerm::Dist(c))
        | (Value::MapW(m), FunctorTerm::Group(_, c)) => {
            out.push('{');
            for (i, (k, w)) in m.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_value(k, c, state_names, decls, out);
                out.push_str(&format!(": {w}"));
            }
            out.push('}');
        }
        (Value::Tuple(vs), FunctorTerm::Product(cs)) => {
            out.push('(');
            for (i, (val, c)) in vs.iter().zip(cs).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                render_value(val, c, state_names, decls, out);
            }
            out.push(')');
        }
        (Value::Inj(k, inner), FunctorTerm::Coproduct(cs)) => {
            out.push_str(&format!("in{k}("));
            render_value(inner, &cs[(*k - 1) as usize], state_names, decls, out);
            out.push(')');
        }
        (Value::Exp(vs), FunctorTerm::Exponent(c, name)) => {
            let set = decls.lookup(name).expect("rendered spec is valid");
            out.push('[');
            for (i, val) in vs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&decls.sets[set].elements[i]);
                out.push_str(": ");
                render_value(val, c, state_names, decls, out);
            }
            out.push(']');
        }
        _ => unreachable!("value does not match its transition type"),
    }
}
