//! Seeded random instance generator.
//!
//! Produces a system file for a given transition-type term, state count and
//! edge target. The emitted text is a pure function of the parameters, so
//! identical invocations yield byte-identical files.
//!
//! When the outermost constructor is a collection (`P`, `B`, `D`, `Z`, `Q`),
//! the edge target `m` is hit exactly: it is distributed over the states as
//! the number of entries written per state (set literals may repeat members,
//! which the parser collapses; weighted maps use distinct targets).
//! Collections nested deeper draw small sizes at random, so `m` is only
//! approximate for them. Distributions are normalized exactly; their weights
//! always sum to one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::encoding::text::render_value;
use crate::encoding::{parse_functor_term, DeclKind, Decls, FunctorTerm, SetDecl, Value};
use crate::interfaces::GroupElem;
use num_rational::Rational64;

#[derive(Clone, Debug)]
pub struct GenParams {
    pub functor: String,
    pub states: u32,
    pub edges: u64,
    pub seed: u64,
    /// Bound on generated integer weights and bag multiplicities.
    pub weight_range: i64,
    /// Sizes of non-numeric sets the term mentions (default 2).
    pub alphabet_sizes: Vec<(String, u32)>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            functor: "P X".into(),
            states: 10,
            edges: 30,
            seed: 0,
            weight_range: 9,
            alphabet_sizes: Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GenError(pub String);

impl std::fmt::Display for GenError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for GenError {}

struct Ctx {
    term: FunctorTerm,
    decls: Decls,
    names: Vec<String>,
    weight_range: i64,
}

/// Generates the text of a random system file.
pub fn generate(params: &GenParams) -> Result<String, GenError> {
    let term = parse_functor_term(&params.functor)
        .map_err(|e| GenError(format!("bad transition-type term: {}", e.msg)))?;
    if !term.contains_argument() {
        return Err(GenError(
            "the transition type never mentions the argument X".into(),
        ));
    }
    if params.weight_range < 1 {
        return Err(GenError("weight range must be at least 1".into()));
    }

    let mut decls = Decls::default();
    for name in term.set_names() {
        if name.bytes().all(|b| b.is_ascii_digit()) {
            decls.resolve_or_auto(&name).map_err(GenError)?;
            continue;
        }
        let size = params
            .alphabet_sizes
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, s)| *s)
            .unwrap_or(2);
        if size == 0 {
            return Err(GenError(format!("alphabet `{name}` has no elements")));
        }
        decls
            .insert(SetDecl {
                name: name.clone(),
                kind: DeclKind::Alphabet,
                elements: (0..size)
                    .map(|i| format!("{}{}", name.to_lowercase(), i))
                    .collect(),
            })
            .map_err(GenError)?;
    }

    let n = params.states;
    let names: Vec<String> = (0..n).map(|i| format!("q{i}")).collect();
    let ctx = Ctx {
        term: term.clone(),
        decls,
        names,
        weight_range: params.weight_range,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);

    let mut out = String::new();
    out.push_str(&format!("functor: {term}\n"));
    for set in &ctx.decls.sets {
        if set.kind == DeclKind::Alphabet {
            out.push_str(&format!("alphabet {}: {}\n", set.name, set.elements.join(" ")));
        }
    }
    if n == 0 {
        return Ok(out);
    }

    // Per-state entry budgets for an outermost collection layer.
    let base = params.edges / n as u64;
    let extra = (params.edges % n as u64) as u32;
    for i in 0..n {
        let budget = base + u64::from(i < extra);
        out.push_str(&format!("state {}: ", ctx.names[i as usize]));
        render_top(&ctx, &mut rng, budget, &mut out)?;
        out.push('\n');
    }
    Ok(out)
}

fn render_top(ctx: &Ctx, rng: &mut ChaCha12Rng, budget: u64, out: &mut String) -> Result<(), GenError> {
    match &ctx.term {
        FunctorTerm::Powerset(c) => {
            // duplicates allowed: the budget counts written members
            out.push('{');
            for i in 0..budget {
                if i > 0 {
                    out.push_str(", ");
                }
                let v = typed(ctx, c, rng)?;
                render_value(&v, c, &ctx.names, &ctx.decls, out);
            }
            out.push('}');
            Ok(())
        }
        FunctorTerm::Bag(c) | FunctorTerm::Dist(c) | FunctorTerm::Group(_, c) => {
            let min = if matches!(ctx.term, FunctorTerm::Dist(_)) {
                1
            } else {
                0
            };
            let k = budget.max(min);
            let keys = distinct_keys(ctx, c, rng, k as usize)?;
            if matches!(ctx.term, FunctorTerm::Dist(_)) && keys.is_empty() {
                return Err(GenError(
                    "distribution layer needs at least one target".into(),
                ));
            }
            let map = weighted_map(ctx, &ctx.term, keys, rng);
            render_value(&map, &ctx.term, &ctx.names, &ctx.decls, out);
            Ok(())
        }
        shape => {
            let v = typed(ctx, shape, rng)?;
            render_value(&v, shape, &ctx.names, &ctx.decls, out);
            Ok(())
        }
    }
}

/// Distinct-by-structure child values; gives up on duplicates after a few
/// retries, so the entry count can fall short when the child space is small.
fn distinct_keys(
    ctx: &Ctx,
    child: &FunctorTerm,
    rng: &mut ChaCha12Rng,
    k: usize,
) -> Result<Vec<Value>, GenError> {
    let mut keys: Vec<Value> = Vec::with_capacity(k);
    let mut seen: std::collections::HashSet<Vec<u8>> = Default::default();
    let mut misses = 0;
    while keys.len() < k && misses < 20 {
        let v = typed(ctx, child, rng)?;
        if seen.insert(v.key()) {
            keys.push(v);
        } else {
            misses += 1;
        }
    }
    Ok(keys)
}

fn weighted_map(ctx: &Ctx, shape: &FunctorTerm, keys: Vec<Value>, rng: &mut ChaCha12Rng) -> Value {
    let w = ctx.weight_range;
    match shape {
        FunctorTerm::Bag(_) => Value::MapW(
            keys.into_iter()
                .map(|k| (k, GroupElem::Int(rng.gen_range(1..=w))))
                .collect(),
        ),
        FunctorTerm::Group(tag, _) => {
            let mut entries = Vec::new();
            for k in keys {
                let num = nonzero(rng, w);
                let elem = match tag {
                    crate::encoding::GroupKindTag::Int => GroupElem::Int(num),
                    crate::encoding::GroupKindTag::Rat => {
                        GroupElem::Rat(Rational64::new(num, rng.gen_range(1..=w)))
                    }
                };
                entries.push((k, elem));
            }
            Value::MapW(entries)
        }
        FunctorTerm::Dist(_) => {
            let parts: Vec<i64> = keys.iter().map(|_| rng.gen_range(1..=w)).collect();
            let total: i64 = parts.iter().sum();
            Value::MapW(
                keys.into_iter()
                    .zip(parts)
                    .map(|(k, p)| (k, GroupElem::Rat(Rational64::new(p, total))))
                    .collect(),
            )
        }
        _ => unreachable!("weighted_map on a collection shape"),
    }
}

/// A random value of the given shape; nested collections stay small.
fn typed(ctx: &Ctx, shape: &FunctorTerm, rng: &mut ChaCha12Rng) -> Result<Value, GenError> {
    let n = ctx.names.len() as u32;
    Ok(match shape {
        FunctorTerm::Argument => Value::State(rng.gen_range(0..n)),
        FunctorTerm::Const(name) => {
            let set = ctx.decls.lookup(name).expect("sets prepared");
            let size = ctx.decls.sets[set].elements.len() as u32;
            Value::ConstElem(set, rng.gen_range(0..size))
        }
        FunctorTerm::Powerset(c) => {
            let k = rng.gen_range(0..=3);
            let mut members = Vec::with_capacity(k);
            for _ in 0..k {
                members.push(typed(ctx, c, rng)?);
            }
            Value::Set(members).normalize()
        }
        FunctorTerm::Bag(_) | FunctorTerm::Group(_, _) => {
            let k = rng.gen_range(0..=3);
            let child = collection_child(shape);
            let keys = distinct_keys(ctx, child, rng, k)?;
            weighted_map(ctx, shape, keys, rng).normalize()
        }
        FunctorTerm::Dist(c) => {
            let k = rng.gen_range(1..=3);
            let keys = distinct_keys(ctx, c, rng, k)?;
            if keys.is_empty() {
                return Err(GenError(
                    "distribution layer needs at least one target".into(),
                ));
            }
            weighted_map(ctx, shape, keys, rng).normalize()
        }
        FunctorTerm::Product(children) => {
            let mut vals = Vec::with_capacity(children.len());
            for c in children {
                vals.push(typed(ctx, c, rng)?);
            }
            Value::Tuple(vals)
        }
        FunctorTerm::Coproduct(children) => {
            let k = rng.gen_range(0..children.len() as u32);
            Value::Inj(
                k + 1,
                Box::new(typed(ctx, &children[k as usize], rng)?),
            )
        }
        FunctorTerm::Exponent(c, name) => {
            let set = ctx.decls.lookup(name).expect("sets prepared");
            let size = ctx.decls.sets[set].elements.len();
            let mut vals = Vec::with_capacity(size);
            for _ in 0..size {
                vals.push(typed(ctx, c, rng)?);
            }
            Value::Exp(vals)
        }
    })
}

fn collection_child(shape: &FunctorTerm) -> &FunctorTerm {
    match shape {
        FunctorTerm::Powerset(c)
        | FunctorTerm::Bag(c)
        | FunctorTerm::Dist(c)
        | FunctorTerm::Group(_, c) => c,
        _ => unreachable!(),
    }
}

fn nonzero(rng: &mut ChaCha12Rng, w: i64) -> i64 {
    let v = rng.gen_range(-w..=w);
    if v == 0 {
        1
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::text::parse_spec_text;

    #[test]
    fn same_seed_same_bytes() {
        let params = GenParams {
            functor: "P (A x X)".into(),
            states: 20,
            edges: 60,
            seed: 42,
            ..GenParams::default()
        };
        assert_eq!(generate(&params).unwrap(), generate(&params).unwrap());
        let other = GenParams {
            seed: 43,
            ..params.clone()
        };
        assert_ne!(generate(&params).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn powerset_budget_is_exact() {
        let params = GenParams {
            functor: "P X".into(),
            states: 100,
            edges: 500,
            seed: 7,
            ..GenParams::default()
        };
        let text = generate(&params).unwrap();
        let members: usize = text
            .lines()
            .filter_map(|l| l.split_once(": "))
            .map(|(_, v)| v.matches('q').count())
            .sum();
        assert_eq!(members, 500);
        assert_eq!(text.lines().filter(|l| l.starts_with("state ")).count(), 100);
        parse_spec_text(&text).unwrap();
    }

    #[test]
    fn distributions_sum_to_one() {
        let params = GenParams {
            functor: "D X".into(),
            states: 30,
            edges: 90,
            seed: 3,
            ..GenParams::default()
        };
        let text = generate(&params).unwrap();
        // the parser enforces the exact-sum invariant
        parse_spec_text(&text).unwrap();
    }

    #[test]
    fn all_families_parse_and_encode() {
        for functor in [
            "P X",
            "B X",
            "D X",
            "Z X",
            "(2 x X^A)",
            "P (A x X)",
            "P (D (A x X))",
            "(D X + P (A x X))",
        ] {
            let params = GenParams {
                functor: functor.into(),
                states: 12,
                edges: 40,
                seed: 5,
                ..GenParams::default()
            };
            let text = generate(&params).unwrap();
            let spec = parse_spec_text(&text).unwrap_or_else(|e| {
                panic!("generated file for `{functor}` does not parse: {e}\n{text}")
            });
            crate::encoding::encode(&spec).unwrap();
        }
    }

    #[test]
    fn zero_states_gives_empty_system() {
        let params = GenParams {
            functor: "D X".into(),
            states: 0,
            edges: 0,
            seed: 1,
            ..GenParams::default()
        };
        let text = generate(&params).unwrap();
        let spec = parse_spec_text(&text).unwrap();
        assert_eq!(spec.state_count(), 0);
    }

    #[test]
    fn empty_alphabet_is_unsatisfiable() {
        let params = GenParams {
            functor: "P (A x X)".into(),
            states: 3,
            edges: 3,
            seed: 1,
            alphabet_sizes: vec![("A".into(), 0)],
            ..GenParams::default()
        };
        assert!(generate(&params).is_err());
    }
}
