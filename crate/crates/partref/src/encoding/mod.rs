//! From input systems to the edge encoding the engine consumes.
//!
//! A composite transition type is first *flattened*: every constructor of
//! the type term becomes a sort whose one-layer behaviour is a single base
//! transition type (powerset, bag, distribution, weighted map, or a
//! polynomial layer for products, coproducts, constants and exponents).
//! *Factoring* then introduces one intermediate state per distinct sub-value
//! at each non-root sort, and *de-sorting* lays all sorts out in one state
//! space whose transition type is the coproduct of the per-sort base types.
//! The resulting [`EncodedCoalgebra`] keeps states as indices, edges in one
//! table and predecessor lists inverted from it.
//!
//! Minimizing the de-sorted system and restricting the result to the
//! original states yields exactly the behavioural equivalence of the input
//! system.

pub mod functor_term;
pub mod json;
pub mod text;

use std::collections::HashMap;

use crate::interfaces::{
    coproduct, BaseInterface, GroupElem, GroupKind, H1Inner, H1Value, Interface, Label,
    LabelInner, Overflow, PolySignature,
};

pub use functor_term::{parse_functor_term, FunctorTerm, GroupKindTag};

/// How a declared finite set entered the input system.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeclKind {
    Alphabet,
    Constant,
    /// Auto-declared numeric name `k`, with elements `0 .. k-1`.
    Auto,
}

#[derive(Clone, Debug)]
pub struct SetDecl {
    pub name: String,
    pub kind: DeclKind,
    pub elements: Vec<String>,
}

/// Declared alphabets and constant sets (one namespace).
#[derive(Clone, Debug, Default)]
pub struct Decls {
    pub sets: Vec<SetDecl>,
    index: HashMap<String, usize>,
}

impl Decls {
    pub fn insert(&mut self, decl: SetDecl) -> Result<usize, String> {
        if self.index.contains_key(&decl.name) {
            return Err(format!("set `{}` declared twice", decl.name));
        }
        let mut seen = HashMap::new();
        for (i, e) in decl.elements.iter().enumerate() {
            if seen.insert(e.clone(), i).is_some() {
                return Err(format!("set `{}` lists element `{e}` twice", decl.name));
            }
        }
        let id = self.sets.len();
        self.index.insert(decl.name.clone(), id);
        self.sets.push(decl);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn elem_index(&self, set: usize, elem: &str) -> Option<u32> {
        self.sets[set]
            .elements
            .iter()
            .position(|e| e == elem)
            .map(|i| i as u32)
    }

    /// Resolves a set name, auto-declaring `k` as `{0, …, k-1}` for numeric
    /// names.
    pub fn resolve_or_auto(&mut self, name: &str) -> Result<usize, String> {
        if let Some(id) = self.lookup(name) {
            return Ok(id);
        }
        if name.bytes().all(|b| b.is_ascii_digit()) {
            let k: usize = name
                .parse()
                .map_err(|_| format!("constant `{name}` is out of range"))?;
            if k == 0 || k > 4096 {
                return Err(format!(
                    "numeric constant `{name}` must be between 1 and 4096"
                ));
            }
            return self.insert(SetDecl {
                name: name.to_string(),
                kind: DeclKind::Auto,
                elements: (0..k).map(|i| i.to_string()).collect(),
            });
        }
        Err(format!("undeclared alphabet or constant set `{name}`"))
    }
}

/// A parsed, validated transition value. Sets are deduplicated and stored in
/// canonical order; weighted maps have distinct keys in canonical order;
/// exponent entries follow the declaration order of their set.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Value {
    State(u32),
    ConstElem(usize, u32),
    Set(Vec<Value>),
    MapW(Vec<(Value, GroupElem)>),
    Tuple(Vec<Value>),
    Inj(u32, Box<Value>),
    Exp(Vec<Value>),
}

impl Value {
    /// Canonical bytes; structural equality of values is equality of keys.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_key(&mut out);
        out
    }

    fn write_key(&self, out: &mut Vec<u8>) {
        match self {
            Value::State(i) => {
                out.push(0);
                out.extend_from_slice(&i.to_be_bytes());
            }
            Value::ConstElem(s, e) => {
                out.push(1);
                out.extend_from_slice(&(*s as u32).to_be_bytes());
                out.extend_from_slice(&e.to_be_bytes());
            }
            Value::Set(vs) => {
                out.push(2);
                out.extend_from_slice(&(vs.len() as u32).to_be_bytes());
                for v in vs {
                    v.write_key(out);
                }
            }
            Value::MapW(m) => {
                out.push(3);
                out.extend_from_slice(&(m.len() as u32).to_be_bytes());
                for (v, w) in m {
                    v.write_key(out);
                    w.write_bytes(out);
                }
            }
            Value::Tuple(vs) => {
                out.push(4);
                out.extend_from_slice(&(vs.len() as u32).to_be_bytes());
                for v in vs {
                    v.write_key(out);
                }
            }
            Value::Inj(k, v) => {
                out.push(5);
                out.extend_from_slice(&k.to_be_bytes());
                v.write_key(out);
            }
            Value::Exp(vs) => {
                out.push(6);
                out.extend_from_slice(&(vs.len() as u32).to_be_bytes());
                for v in vs {
                    v.write_key(out);
                }
            }
        }
    }

    /// Canonicalize: sort set members and map entries by key, deduplicate
    /// set members, drop zero map weights (merging duplicates is the
    /// caller's choice; parsing rejects duplicate keys, quotienting sums
    /// them).
    pub fn normalize(self) -> Value {
        match self {
            Value::Set(vs) => {
                let mut vs: Vec<Value> = vs.into_iter().map(Value::normalize).collect();
                vs.sort_by_cached_key(|v| v.key());
                vs.dedup();
                Value::Set(vs)
            }
            Value::MapW(m) => {
                let mut m: Vec<(Value, GroupElem)> = m
                    .into_iter()
                    .map(|(v, w)| (v.normalize(), w))
                    .filter(|(_, w)| !w.is_zero())
                    .collect();
                m.sort_by_cached_key(|(v, _)| v.key());
                Value::MapW(m)
            }
            Value::Tuple(vs) => Value::Tuple(vs.into_iter().map(Value::normalize).collect()),
            Value::Inj(k, v) => Value::Inj(k, Box::new(v.normalize())),
            Value::Exp(vs) => Value::Exp(vs.into_iter().map(Value::normalize).collect()),
            v => v,
        }
    }
}

/// A parsed and validated input system.
#[derive(Clone, Debug)]
pub struct CoalgebraSpec {
    pub functor: FunctorTerm,
    pub decls: Decls,
    pub state_names: Vec<String>,
    pub values: Vec<Value>,
}

impl CoalgebraSpec {
    pub fn state_count(&self) -> u32 {
        self.state_names.len() as u32
    }
}

// ---------------------------------------------------------------------------
// Flattening: one sort per constructor of the type term.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ChildRef {
    /// The argument: refers to the root sort.
    Argument,
    Sort(u32),
}

impl ChildRef {
    pub fn sort(self) -> u32 {
        match self {
            ChildRef::Argument => 0,
            ChildRef::Sort(k) => k,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CollKind {
    Pow,
    Bag,
    Dist,
    Grp(GroupKind),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ProdField {
    Const(usize),
    Child(ChildRef),
}

/// What a polynomial sort decomposes: constants in products and coproducts
/// are baked into the symbol set instead of becoming sorts of their own.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PolyFlavor {
    Product { fields: Vec<ProdField> },
    Coprod { summands: Vec<ProdField> },
    Exponent { set: usize, child: ChildRef },
    ConstSort { set: usize },
    Identity,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolySymbol {
    pub children: Vec<ChildRef>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolySort {
    pub flavor: PolyFlavor,
    pub symbols: Vec<PolySymbol>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SortShape {
    Collection { kind: CollKind, child: ChildRef },
    Poly(PolySort),
}

/// The flattening of a type term: sort 0 is the root, every other sort is a
/// constructor of the term (duplicate subterms stay distinct).
#[derive(Clone, Debug)]
pub struct SortTable {
    pub sorts: Vec<SortShape>,
}

impl SortTable {
    pub fn interface(&self) -> Interface {
        coproduct(
            self.sorts
                .iter()
                .map(|s| match s {
                    SortShape::Collection { kind, .. } => match kind {
                        CollKind::Pow => BaseInterface::Powerset,
                        CollKind::Bag => BaseInterface::Bag,
                        CollKind::Dist => BaseInterface::Distribution,
                        CollKind::Grp(k) => BaseInterface::GroupValued(*k),
                    },
                    SortShape::Poly(p) => BaseInterface::Polynomial(PolySignature {
                        arities: p.symbols.iter().map(|s| s.children.len() as u32).collect(),
                    }),
                })
                .collect(),
        )
    }
}

/// Flattens a type term into its sort table, auto-declaring numeric set
/// names along the way.
pub fn flatten(term: &FunctorTerm, decls: &mut Decls) -> Result<SortTable, String> {
    if !term.contains_argument() {
        return Err("the transition type never mentions the argument X".into());
    }
    let mut sorts: Vec<Option<SortShape>> = Vec::new();
    alloc_sort(term, decls, &mut sorts, true)?;
    Ok(SortTable {
        sorts: sorts.into_iter().map(Option::unwrap).collect(),
    })
}

fn child_ref(
    term: &FunctorTerm,
    decls: &mut Decls,
    sorts: &mut Vec<Option<SortShape>>,
) -> Result<ChildRef, String> {
    match term {
        FunctorTerm::Argument => Ok(ChildRef::Argument),
        _ => Ok(ChildRef::Sort(alloc_sort(term, decls, sorts, false)?)),
    }
}

fn alloc_sort(
    term: &FunctorTerm,
    decls: &mut Decls,
    sorts: &mut Vec<Option<SortShape>>,
    root: bool,
) -> Result<u32, String> {
    let id = sorts.len() as u32;
    sorts.push(None);
    let shape = match term {
        FunctorTerm::Argument => {
            debug_assert!(root, "argument child handled by child_ref");
            // A bare argument embeds as the polynomial layer with one unary
            // symbol.
            SortShape::Poly(PolySort {
                flavor: PolyFlavor::Identity,
                symbols: vec![PolySymbol {
                    children: vec![ChildRef::Argument],
                }],
            })
        }
        FunctorTerm::Const(name) => {
            let set = decls.resolve_or_auto(name)?;
            let n = decls.sets[set].elements.len();
            SortShape::Poly(PolySort {
                flavor: PolyFlavor::ConstSort { set },
                symbols: (0..n)
                    .map(|_| PolySymbol {
                        children: Vec::new(),
                    })
                    .collect(),
            })
        }
        FunctorTerm::Powerset(c) => SortShape::Collection {
            kind: CollKind::Pow,
            child: child_ref(c, decls, sorts)?,
        },
        FunctorTerm::Bag(c) => SortShape::Collection {
            kind: CollKind::Bag,
            child: child_ref(c, decls, sorts)?,
        },
        FunctorTerm::Dist(c) => SortShape::Collection {
            kind: CollKind::Dist,
            child: child_ref(c, decls, sorts)?,
        },
        FunctorTerm::Group(k, c) => SortShape::Collection {
            kind: CollKind::Grp(match k {
                GroupKindTag::Int => GroupKind::Int,
                GroupKindTag::Rat => GroupKind::Rat,
            }),
            child: child_ref(c, decls, sorts)?,
        },
        FunctorTerm::Product(children) => {
            let mut fields = Vec::with_capacity(children.len());
            for c in children {
                fields.push(match c {
                    FunctorTerm::Const(name) => ProdField::Const(decls.resolve_or_auto(name)?),
                    _ => ProdField::Child(child_ref(c, decls, sorts)?),
                });
            }
            let child_refs: Vec<ChildRef> = fields
                .iter()
                .filter_map(|f| match f {
                    ProdField::Child(c) => Some(*c),
                    ProdField::Const(_) => None,
                })
                .collect();
            let mut count = 1usize;
            for f in &fields {
                if let ProdField::Const(set) = f {
                    count = count
                        .checked_mul(decls.sets[*set].elements.len())
                        .filter(|&c| c <= 1 << 20)
                        .ok_or("product of constants is too large")?;
                }
            }
            SortShape::Poly(PolySort {
                flavor: PolyFlavor::Product { fields },
                symbols: (0..count)
                    .map(|_| PolySymbol {
                        children: child_refs.clone(),
                    })
                    .collect(),
            })
        }
        FunctorTerm::Coproduct(children) => {
            let mut summands = Vec::with_capacity(children.len());
            let mut symbols = Vec::new();
            for c in children {
                match c {
                    FunctorTerm::Const(name) => {
                        let set = decls.resolve_or_auto(name)?;
                        for _ in 0..decls.sets[set].elements.len() {
                            symbols.push(PolySymbol {
                                children: Vec::new(),
                            });
                        }
                        summands.push(ProdField::Const(set));
                    }
                    _ => {
                        let cref = child_ref(c, decls, sorts)?;
                        symbols.push(PolySymbol {
                            children: vec![cref],
                        });
                        summands.push(ProdField::Child(cref));
                    }
                }
            }
            SortShape::Poly(PolySort {
                flavor: PolyFlavor::Coprod { summands },
                symbols,
            })
        }
        FunctorTerm::Exponent(c, name) => {
            let set = decls.resolve_or_auto(name)?;
            let arity = decls.sets[set].elements.len();
            if arity == 0 {
                return Err(format!("exponent by empty set `{name}`"));
            }
            if matches!(**c, FunctorTerm::Const(_)) {
                return Err("exponent of a constant set is itself a constant; not supported".into());
            }
            let cref = child_ref(c, decls, sorts)?;
            SortShape::Poly(PolySort {
                flavor: PolyFlavor::Exponent { set, child: cref },
                symbols: vec![PolySymbol {
                    children: vec![cref; arity],
                }],
            })
        }
    };
    sorts[id as usize] = Some(shape);
    Ok(id)
}

/// Symbol index of a product layer given the element indices of its constant
/// fields (in field order, row-major).
fn product_symbol(decls: &Decls, fields: &[ProdField], elems: &[u32]) -> u32 {
    let mut idx = 0usize;
    let mut e = elems.iter();
    for f in fields {
        if let ProdField::Const(set) = f {
            idx = idx * decls.sets[*set].elements.len() + *e.next().unwrap() as usize;
        }
    }
    idx as u32
}

/// First symbol index of each coproduct summand.
fn coprod_offsets(decls: &Decls, summands: &[ProdField]) -> Vec<u32> {
    let mut out = Vec::with_capacity(summands.len());
    let mut off = 0u32;
    for s in summands {
        out.push(off);
        off += match s {
            ProdField::Const(set) => decls.sets[*set].elements.len() as u32,
            ProdField::Child(_) => 1,
        };
    }
    out
}

// ---------------------------------------------------------------------------
// Factoring and de-sorting.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OneLayer {
    pub h1: H1Inner,
    pub edges: Vec<(LabelInner, (u32, u32))>,
}

/// The multi-sorted system: per sort, the one-layer behaviour of each of its
/// states. Sort 0 holds the original states in declaration order; other
/// sorts hold one intermediate state per distinct sub-value (unless
/// deduplication is disabled).
pub struct Factored {
    pub sort_states: Vec<Vec<OneLayer>>,
}

#[derive(Clone, Copy, Debug)]
pub struct EncodeOptions {
    /// Merge structurally equal intermediate values into one state.
    pub dedup_intermediates: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            dedup_intermediates: true,
        }
    }
}

struct FactorCtx<'a> {
    sorts: &'a SortTable,
    decls: &'a Decls,
    dedup: bool,
    rows: Vec<Vec<OneLayer>>,
    interned: Vec<HashMap<Vec<u8>, u32>>,
}

pub fn factor(
    spec: &CoalgebraSpec,
    sorts: &SortTable,
    options: EncodeOptions,
) -> Result<Factored, Overflow> {
    let mut ctx = FactorCtx {
        sorts,
        decls: &spec.decls,
        dedup: options.dedup_intermediates,
        rows: vec![Vec::new(); sorts.sorts.len()],
        interned: vec![HashMap::new(); sorts.sorts.len()],
    };
    for v in &spec.values {
        let row = decompose(&mut ctx, 0, v)?;
        ctx.rows[0].push(row);
    }
    Ok(Factored {
        sort_states: ctx.rows,
    })
}

fn target_of(ctx: &mut FactorCtx, child: ChildRef, v: &Value) -> Result<(u32, u32), Overflow> {
    match child {
        ChildRef::Argument => match v {
            Value::State(i) => Ok((0, *i)),
            _ => unreachable!("validated value shape mismatch"),
        },
        ChildRef::Sort(k) => {
            if ctx.dedup {
                let key = v.key();
                if let Some(&local) = ctx.interned[k as usize].get(&key) {
                    return Ok((k, local));
                }
                let local = ctx.rows[k as usize].len() as u32;
                // Reserve the slot before recursing so first-encounter order
                // assigns ids.
                ctx.rows[k as usize].push(OneLayer {
                    h1: H1Inner::Sym(0),
                    edges: Vec::new(),
                });
                ctx.interned[k as usize].insert(key, local);
                let row = decompose(ctx, k, v)?;
                ctx.rows[k as usize][local as usize] = row;
                Ok((k, local))
            } else {
                let local = ctx.rows[k as usize].len() as u32;
                ctx.rows[k as usize].push(OneLayer {
                    h1: H1Inner::Sym(0),
                    edges: Vec::new(),
                });
                let row = decompose(ctx, k, v)?;
                ctx.rows[k as usize][local as usize] = row;
                Ok((k, local))
            }
        }
    }
}

fn decompose(ctx: &mut FactorCtx, sort: u32, v: &Value) -> Result<OneLayer, Overflow> {
    let shape = ctx.sorts.sorts[sort as usize].clone();
    match shape {
        SortShape::Collection { kind, child } => match (kind, v) {
            (CollKind::Pow, Value::Set(members)) => {
                let mut edges = Vec::with_capacity(members.len());
                for m in members {
                    edges.push((LabelInner::Unit, target_of(ctx, child, m)?));
                }
                Ok(OneLayer {
                    h1: H1Inner::Pow {
                        nonempty: !edges.is_empty(),
                    },
                    edges,
                })
            }
            (CollKind::Bag, Value::MapW(entries)) => {
                let mut total = 0u64;
                let mut edges = Vec::with_capacity(entries.len());
                for (m, w) in entries {
                    let c = match w {
                        GroupElem::Int(c) => *c as u64,
                        _ => unreachable!("bag weight is a count"),
                    };
                    total += c;
                    edges.push((LabelInner::Weight(*w), target_of(ctx, child, m)?));
                }
                Ok(OneLayer {
                    h1: H1Inner::Bag(total),
                    edges,
                })
            }
            (CollKind::Dist, Value::MapW(entries)) => {
                let mut edges = Vec::with_capacity(entries.len());
                for (m, w) in entries {
                    edges.push((LabelInner::Weight(*w), target_of(ctx, child, m)?));
                }
                Ok(OneLayer {
                    h1: H1Inner::DistUnit,
                    edges,
                })
            }
            (CollKind::Grp(gk), Value::MapW(entries)) => {
                let mut total = GroupElem::zero(gk);
                let mut edges = Vec::with_capacity(entries.len());
                for (m, w) in entries {
                    total = total.checked_add(w)?;
                    edges.push((LabelInner::Weight(*w), target_of(ctx, child, m)?));
                }
                Ok(OneLayer {
                    h1: H1Inner::Grp(total),
                    edges,
                })
            }
            _ => unreachable!("validated value shape mismatch"),
        },
        SortShape::Poly(poly) => {
            let (symbol, children): (u32, Vec<(&ChildRef, &Value)>) = match (&poly.flavor, v) {
                (PolyFlavor::Product { fields }, Value::Tuple(vals)) => {
                    let mut elems = Vec::new();
                    let mut kids = Vec::new();
                    for (f, val) in fields.iter().zip(vals) {
                        match f {
                            ProdField::Const(set) => match val {
                                Value::ConstElem(s, e) => {
                                    debug_assert_eq!(s, set);
                                    elems.push(*e);
                                }
                                _ => unreachable!("validated value shape mismatch"),
                            },
                            ProdField::Child(c) => kids.push((c, val)),
                        }
                    }
                    (product_symbol(ctx.decls, fields, &elems), kids)
                }
                (PolyFlavor::Coprod { summands }, Value::Inj(k, inner)) => {
                    let offsets = coprod_offsets(ctx.decls, summands);
                    let idx = (*k - 1) as usize;
                    match &summands[idx] {
                        ProdField::Const(set) => match inner.as_ref() {
                            Value::ConstElem(s, e) => {
                                debug_assert_eq!(s, set);
                                (offsets[idx] + e, Vec::new())
                            }
                            _ => unreachable!("validated value shape mismatch"),
                        },
                        ProdField::Child(c) => (offsets[idx], vec![(c, inner.as_ref())]),
                    }
                }
                (PolyFlavor::Exponent { child, .. }, Value::Exp(vals)) => {
                    (0, vals.iter().map(|val| (child, val)).collect())
                }
                (PolyFlavor::ConstSort { .. }, Value::ConstElem(_, e)) => (*e, Vec::new()),
                (PolyFlavor::Identity, val) => {
                    let c = &poly.symbols[0].children[0];
                    (0, vec![(c, val)])
                }
                _ => unreachable!("validated value shape mismatch"),
            };
            let mut edges = Vec::with_capacity(children.len());
            for (i, (c, val)) in children.into_iter().enumerate() {
                edges.push((
                    LabelInner::Pos(i as u32 + 1),
                    target_of(ctx, *c, val)?,
                ));
            }
            Ok(OneLayer {
                h1: H1Inner::Sym(symbol),
                edges,
            })
        }
    }
}

/// One edge of the de-sorted system.
#[derive(Clone, Copy, Debug)]
pub struct Edge {
    pub src: u32,
    pub tgt: u32,
    pub label: Label,
}

/// The de-sorted system: a single state space (original states first, then
/// the intermediate sorts), one edge table, predecessor lists, and the
/// coproduct interface of the per-sort transition types.
pub struct EncodedCoalgebra {
    pub sort_of: Vec<u32>,
    pub h1: Vec<H1Value>,
    pub edges: Vec<Edge>,
    pred_off: Vec<u32>,
    pred_edges: Vec<u32>,
    pub iface: Interface,
    pub original_count: u32,
    pub names: Vec<String>,
}

impl EncodedCoalgebra {
    pub fn num_states(&self) -> usize {
        self.sort_of.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge ids ending in `y`.
    pub fn pred(&self, y: u32) -> &[u32] {
        &self.pred_edges[self.pred_off[y as usize] as usize..self.pred_off[y as usize + 1] as usize]
    }

    pub fn h1_keys(&self) -> Vec<Vec<u8>> {
        self.h1.iter().map(|t| t.to_bytes()).collect()
    }
}

pub fn desort(factored: &Factored, sorts: &SortTable) -> EncodedCoalgebra {
    let mut offsets = Vec::with_capacity(sorts.sorts.len() + 1);
    let mut total = 0u32;
    for rows in &factored.sort_states {
        offsets.push(total);
        total += rows.len() as u32;
    }
    offsets.push(total);

    let mut sort_of = vec![0u32; total as usize];
    let mut h1 = Vec::with_capacity(total as usize);
    let mut edges = Vec::new();
    for (s, rows) in factored.sort_states.iter().enumerate() {
        for (i, row) in rows.iter().enumerate() {
            let g = offsets[s] + i as u32;
            sort_of[g as usize] = s as u32;
            h1.push(H1Value {
                sort: s as u32,
                class: 0,
                inner: row.h1,
            });
            for &(label, (cs, ci)) in &row.edges {
                edges.push(Edge {
                    src: g,
                    tgt: offsets[cs as usize] + ci,
                    label: Label {
                        sort: s as u32,
                        inner: label,
                    },
                });
            }
        }
    }

    // Predecessor lists exactly invert the edge table.
    let mut pred_off = vec![0u32; total as usize + 1];
    for e in &edges {
        pred_off[e.tgt as usize + 1] += 1;
    }
    for i in 0..total as usize {
        pred_off[i + 1] += pred_off[i];
    }
    let mut cursor = pred_off.clone();
    let mut pred_edges = vec![0u32; edges.len()];
    for (eid, e) in edges.iter().enumerate() {
        pred_edges[cursor[e.tgt as usize] as usize] = eid as u32;
        cursor[e.tgt as usize] += 1;
    }

    EncodedCoalgebra {
        sort_of,
        h1,
        edges,
        pred_off,
        pred_edges,
        iface: sorts.interface(),
        original_count: factored.sort_states[0].len() as u32,
        names: Vec::new(),
    }
}

/// Failure while turning a parsed system into its edge encoding.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum EncodeError {
    /// The transition type itself is unusable (e.g. never mentions `X`).
    Type(String),
    /// Exact weight arithmetic overflowed while totalling a state's edges.
    Overflow,
}

impl std::fmt::Display for EncodeError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EncodeError::Type(m) => write!(f, "{m}"),
            EncodeError::Overflow => write!(f, "{}", Overflow),
        }
    }
}

impl std::error::Error for EncodeError {}

/// Full pipeline: flatten, factor, de-sort.
pub fn encode(spec: &CoalgebraSpec) -> Result<EncodedCoalgebra, EncodeError> {
    encode_with(spec, EncodeOptions::default())
}

pub fn encode_with(
    spec: &CoalgebraSpec,
    options: EncodeOptions,
) -> Result<EncodedCoalgebra, EncodeError> {
    let mut decls = spec.decls.clone();
    let sorts = flatten(&spec.functor, &mut decls).map_err(EncodeError::Type)?;
    let factored = factor(spec, &sorts, options).map_err(|_| EncodeError::Overflow)?;
    let mut enc = desort(&factored, &sorts);
    enc.names = spec.state_names.clone();
    Ok(enc)
}

/// Refines the initial grouping of the original states by named classes:
/// each original state's observation is extended with its class index, and
/// intermediate states keep the neutral class. Classes only sharpen the
/// initial grouping; the split computations never look at them.
pub fn apply_initial_partition(
    enc: &mut EncodedCoalgebra,
    classes: &[(String, Vec<String>)],
) -> Result<(), String> {
    let mut index: HashMap<&str, u32> = HashMap::new();
    for (i, name) in enc.names.iter().enumerate() {
        index.insert(name.as_str(), i as u32);
    }
    let mut assigned: HashMap<u32, u32> = HashMap::new();
    for (class_idx, (class_name, states)) in classes.iter().enumerate() {
        for s in states {
            let &x = index
                .get(s.as_str())
                .ok_or_else(|| format!("initial partition assigns unknown state `{s}`"))?;
            if assigned.insert(x, class_idx as u32 + 1).is_some() {
                return Err(format!(
                    "state `{s}` appears in two classes (second: `{class_name}`)"
                ));
            }
        }
    }
    for (&x, &c) in &assigned {
        enc.h1[x as usize].class = c;
    }
    Ok(())
}

/// Restricts a block assignment of the de-sorted space to the original
/// states: blocks ordered by smallest member, members in declaration order.
pub fn project_result(enc: &EncodedCoalgebra, block_of: &[u32]) -> Vec<Vec<u32>> {
    let mut block_index: HashMap<u32, usize> = HashMap::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    for x in 0..enc.original_count {
        let b = block_of[x as usize];
        let idx = *block_index.entry(b).or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[idx].push(x);
    }
    blocks
}

/// Renders a projected partition, one block per line.
pub fn render_partition(enc: &EncodedCoalgebra, blocks: &[Vec<u32>]) -> String {
    let mut out = String::new();
    for b in blocks {
        let names: Vec<&str> = b.iter().map(|&x| enc.names[x as usize].as_str()).collect();
        out.push_str(&names.join(" "));
        out.push('\n');
    }
    out
}

/// The quotient system: one representative per block (its smallest member),
/// values rewritten to representatives and re-normalized (sets deduplicate,
/// weights of merged targets add up and vanishing weights drop out).
pub fn quotient_spec(spec: &CoalgebraSpec, blocks: &[Vec<u32>]) -> Result<CoalgebraSpec, Overflow> {
    let n = spec.state_count() as usize;
    let mut rep = vec![0u32; n];
    for b in blocks {
        for &x in b {
            rep[x as usize] = b[0];
        }
    }
    // Representatives keep their original names; renumber them densely in
    // declaration order.
    let reps: Vec<u32> = blocks.iter().map(|b| b[0]).collect();
    let mut new_idx = vec![u32::MAX; n];
    let mut order: Vec<u32> = reps.clone();
    order.sort_unstable();
    for (i, &r) in order.iter().enumerate() {
        new_idx[r as usize] = i as u32;
    }

    let mut state_names = Vec::with_capacity(order.len());
    let mut values = Vec::with_capacity(order.len());
    for &r in &order {
        state_names.push(spec.state_names[r as usize].clone());
        let rewritten = rewrite(&spec.values[r as usize], &rep, &new_idx)?;
        values.push(rewritten.normalize());
    }
    Ok(CoalgebraSpec {
        functor: spec.functor.clone(),
        decls: spec.decls.clone(),
        state_names,
        values,
    })
}

fn rewrite(v: &Value, rep: &[u32], new_idx: &[u32]) -> Result<Value, Overflow> {
    Ok(match v {
        Value::State(i) => Value::State(new_idx[rep[*i as usize] as usize]),
        Value::ConstElem(s, e) => Value::ConstElem(*s, *e),
        Value::Set(vs) => Value::Set(
            vs.iter()
                .map(|v| rewrite(v, rep, new_idx))
                .collect::<Result<_, _>>()?,
        ),
        Value::MapW(m) => {
            // Merged targets accumulate their weights.
            let mut acc: Vec<(Value, GroupElem)> = Vec::new();
            for (k, w) in m {
                let k = rewrite(k, rep, new_idx)?;
                if let Some(entry) = acc.iter_mut().find(|(k2, _)| *k2 == k) {
                    entry.1 = entry.1.checked_add(w)?;
                } else {
                    acc.push((k, *w));
                }
            }
            Value::MapW(acc)
        }
        Value::Tuple(vs) => Value::Tuple(
            vs.iter()
                .map(|v| rewrite(v, rep, new_idx))
                .collect::<Result<_, _>>()?,
        ),
        Value::Inj(k, inner) => Value::Inj(*k, Box::new(rewrite(inner, rep, new_idx)?)),
        Value::Exp(vs) => Value::Exp(
            vs.iter()
                .map(|v| rewrite(v, rep, new_idx))
                .collect::<Result<_, _>>()?,
        ),
    })
}

/// Decoded one-layer behaviour of a de-sorted state, recovered from the edge
/// table. Used by the debug invariant checks and round-trip tests.
pub fn decoded_of(enc: &EncodedCoalgebra, x: u32) -> crate::interfaces::reference::DecodedValue {
    let base = &enc.iface.parts[enc.sort_of[x as usize] as usize];
    let edges: Vec<(LabelInner, u32)> = enc
        .edges
        .iter()
        .filter(|e| e.src == x)
        .map(|e| (e.label.inner, e.tgt))
        .collect();
    crate::interfaces::reference::decode(base, &enc.h1[x as usize].inner, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(src: &str) -> (SortTable, Decls) {
        let term = parse_functor_term(src).unwrap();
        let mut decls = Decls::default();
        decls
            .insert(SetDecl {
                name: "A".into(),
                kind: DeclKind::Alphabet,
                elements: vec!["a".into(), "b".into()],
            })
            .unwrap();
        let sorts = flatten(&term, &mut decls).unwrap();
        (sorts, decls)
    }

    #[test]
    fn flatten_single_sort() {
        let (sorts, _) = flat("P X");
        assert_eq!(sorts.sorts.len(), 1);
        assert_eq!(
            sorts.sorts[0],
            SortShape::Collection {
                kind: CollKind::Pow,
                child: ChildRef::Argument
            }
        );
    }

    #[test]
    fn flatten_five_sorts() {
        // P ((B X) x (D (A x X))) splits into: the outer powerset, the pair
        // layer, the bag, the distribution, and the labelled-successor layer.
        let (sorts, _) = flat("P ((B X) x (D (A x X)))");
        assert_eq!(sorts.sorts.len(), 5);
        assert_eq!(
            sorts.sorts[0],
            SortShape::Collection {
                kind: CollKind::Pow,
                child: ChildRef::Sort(1)
            }
        );
        match &sorts.sorts[1] {
            SortShape::Poly(p) => {
                assert_eq!(p.symbols.len(), 1);
                assert_eq!(
                    p.symbols[0].children,
                    vec![ChildRef::Sort(2), ChildRef::Sort(3)]
                );
            }
            _ => panic!("pair layer should be polynomial"),
        }
        assert_eq!(
            sorts.sorts[2],
            SortShape::Collection {
                kind: CollKind::Bag,
                child: ChildRef::Argument
            }
        );
        assert_eq!(
            sorts.sorts[3],
            SortShape::Collection {
                kind: CollKind::Dist,
                child: ChildRef::Sort(4)
            }
        );
        match &sorts.sorts[4] {
            SortShape::Poly(p) => {
                // one unary symbol per letter
                assert_eq!(p.symbols.len(), 2);
                assert!(p.symbols.iter().all(|s| s.children == vec![ChildRef::Argument]));
            }
            _ => panic!("labelled layer should be polynomial"),
        }
    }

    #[test]
    fn flatten_tracks_duplicates() {
        let (sorts, _) = flat("P X x P X");
        assert_eq!(sorts.sorts.len(), 3);
        assert_eq!(
            sorts.sorts[1],
            SortShape::Collection {
                kind: CollKind::Pow,
                child: ChildRef::Argument
            }
        );
        assert_eq!(sorts.sorts[1], sorts.sorts[2]);
    }

    #[test]
    fn flatten_alternating_shape() {
        // (D X + P (A x X)) de-sorts into: tagging layer, distribution,
        // powerset, labelled-successor layer.
        let (sorts, _) = flat("(D X + P (A x X))");
        assert_eq!(sorts.sorts.len(), 4);
        match &sorts.sorts[0] {
            SortShape::Poly(p) => {
                assert_eq!(p.symbols.len(), 2);
                assert_eq!(p.symbols[0].children, vec![ChildRef::Sort(1)]);
                assert_eq!(p.symbols[1].children, vec![ChildRef::Sort(2)]);
            }
            _ => panic!("coproduct layer should be polynomial"),
        }
        assert_eq!(
            sorts.sorts[1],
            SortShape::Collection {
                kind: CollKind::Dist,
                child: ChildRef::Argument
            }
        );
        assert_eq!(
            sorts.sorts[2],
            SortShape::Collection {
                kind: CollKind::Pow,
                child: ChildRef::Sort(3)
            }
        );
    }

    #[test]
    fn flatten_requires_argument() {
        let term = parse_functor_term("P A").unwrap();
        let mut decls = Decls::default();
        assert!(flatten(&term, &mut decls).is_err());
    }

    #[test]
    fn numeric_names_auto_declare() {
        let (sorts, decls) = flat("(2 x X^A)");
        assert_eq!(sorts.sorts.len(), 2);
        let two = decls.lookup("2").unwrap();
        assert_eq!(decls.sets[two].elements, vec!["0", "1"]);
        match &sorts.sorts[0] {
            SortShape::Poly(p) => assert_eq!(p.symbols.len(), 2),
            _ => panic!(),
        }
    }
}
