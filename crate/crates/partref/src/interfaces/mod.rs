//! Refinement interfaces: the per-transition-type plug-in of the engine.
//!
//! An interface fixes four value kinds (the one-state observation `H1`, edge
//! labels, weights `W`, and three-way split results `H3`) plus two
//! operations:
//!
//! - `init(t, labels)` computes the weight of all outgoing edges of a state
//!   from its observation `t` and the bag of all its edge labels;
//! - `update(labels_to_s, w_c)` receives the labels of a state's edges into
//!   a subblock `S` of a compound block `C` together with the stored weight
//!   for `C`, and returns the weight for `S`, the three-way split value and
//!   the weight for `C \ S`.
//!
//! Both must run in time linear in the number of labels; a thread-local step
//! counter makes that checkable in tests. `H3` values are produced directly
//! in a canonical byte serialization whose lexicographic order is the total
//! order used for grouping.
//!
//! De-sorted composite systems use the coproduct of base interfaces: every
//! value carries its sort index, operations dispatch on it, and serialized
//! forms are prefixed with it so distinct sorts never collide.

pub mod axioms;
pub mod reference;

use std::cell::Cell;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedSub, Signed, Zero};

/// Arithmetic failure: 64-bit rational/integer components overflowed.
/// Weight arithmetic must be exact, so this aborts the run instead of
/// wrapping around.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Overflow;

impl std::fmt::Display for Overflow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "arithmetic overflow in weight computation")
    }
}

impl std::error::Error for Overflow {}

thread_local! {
    static STEPS: Cell<u64> = const { Cell::new(0) };
}

/// Resets the thread-local operation counter for `init`/`update`.
pub fn reset_steps() {
    STEPS.with(|s| s.set(0));
}

/// Number of elementary steps `init`/`update` performed on this thread since
/// the last reset. Used to assert linearity in the number of labels.
pub fn steps() -> u64 {
    STEPS.with(|s| s.get())
}

fn count_steps(k: u64) {
    STEPS.with(|s| s.set(s.get() + k));
}

/// Exact group element: a 64-bit integer or a normalized 64-bit rational.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupElem {
    Int(i64),
    Rat(Rational64),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupKind {
    Int,
    Rat,
}

impl GroupElem {
    pub fn zero(kind: GroupKind) -> Self {
        match kind {
            GroupKind::Int => GroupElem::Int(0),
            GroupKind::Rat => GroupElem::Rat(Rational64::zero()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            GroupElem::Int(v) => *v == 0,
            GroupElem::Rat(r) => r.is_zero(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            GroupElem::Int(v) => *v < 0,
            GroupElem::Rat(r) => r.is_negative(),
        }
    }

    pub fn checked_add(&self, other: &GroupElem) -> Result<GroupElem, Overflow> {
        match (self, other) {
            (GroupElem::Int(a), GroupElem::Int(b)) => {
                a.checked_add(b).map(GroupElem::Int).ok_or(Overflow)
            }
            (GroupElem::Rat(a), GroupElem::Rat(b)) => {
                a.checked_add(b).map(GroupElem::Rat).ok_or(Overflow)
            }
            _ => unreachable!("mixed group element kinds"),
        }
    }

    pub fn checked_sub(&self, other: &GroupElem) -> Result<GroupElem, Overflow> {
        match (self, other) {
            (GroupElem::Int(a), GroupElem::Int(b)) => {
                a.checked_sub(b).map(GroupElem::Int).ok_or(Overflow)
            }
            (GroupElem::Rat(a), GroupElem::Rat(b)) => {
                a.checked_sub(b).map(GroupElem::Rat).ok_or(Overflow)
            }
            _ => unreachable!("mixed group element kinds"),
        }
    }

    pub fn one_rat() -> Self {
        GroupElem::Rat(Rational64::new(1, 1))
    }

    /// Order-preserving canonical bytes (flip the sign bit so the unsigned
    /// byte order matches the signed numeric order of each component).
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        match self {
            GroupElem::Int(v) => {
                out.push(0);
                out.extend_from_slice(&((*v as u64) ^ (1 << 63)).to_be_bytes());
            }
            GroupElem::Rat(r) => {
                out.push(1);
                out.extend_from_slice(&((*r.numer() as u64) ^ (1 << 63)).to_be_bytes());
                out.extend_from_slice(&(*r.denom() as u64).to_be_bytes());
            }
        }
    }
}

impl std::fmt::Display for GroupElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupElem::Int(v) => write!(f, "{v}"),
            GroupElem::Rat(r) => {
                if r.denom() == &1 {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
        }
    }
}

/// Edge label, tagged with the sort of its source state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Label {
    pub sort: u32,
    pub inner: LabelInner,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LabelInner {
    /// Powerset edges carry no information.
    Unit,
    /// Nonzero group element (group-valued, bag and distribution edges).
    Weight(GroupElem),
    /// 1-based argument position of a polynomial symbol.
    Pos(u32),
}

/// One-state observation (the "type" of a state), tagged with its sort and an
/// initial-partition class (0 when no initial partition is given).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct H1Value {
    pub sort: u32,
    pub class: u32,
    pub inner: H1Inner,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum H1Inner {
    /// Whether the successor set is nonempty.
    Pow { nonempty: bool },
    /// Total outgoing weight.
    Grp(GroupElem),
    /// Distributions always sum to one, so the observation is trivial.
    DistUnit,
    /// Total multiplicity of the bag.
    Bag(u64),
    /// Polynomial output symbol.
    Sym(u32),
}

impl H1Value {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16);
        out.extend_from_slice(&self.sort.to_be_bytes());
        out.extend_from_slice(&self.class.to_be_bytes());
        match &self.inner {
            H1Inner::Pow { nonempty } => {
                out.push(0);
                out.push(*nonempty as u8);
            }
            H1Inner::Grp(g) => {
                out.push(1);
                g.write_bytes(&mut out);
            }
            H1Inner::DistUnit => out.push(2),
            H1Inner::Bag(n) => {
                out.push(3);
                out.extend_from_slice(&n.to_be_bytes());
            }
            H1Inner::Sym(s) => {
                out.push(4);
                out.extend_from_slice(&s.to_be_bytes());
            }
        }
        out
    }
}

/// Stored weight, tagged with its sort.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Weight {
    pub sort: u32,
    pub inner: WeightInner,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum WeightInner {
    /// Powerset: whether edges leave the block, and the count of edges into
    /// it.
    Pow { rest: bool, inside: u64 },
    /// Group-valued (also bag and distribution): accumulated weight outside
    /// and inside the block.
    Grp { rest: GroupElem, inside: GroupElem },
    /// Polynomial: per argument position, whether the successor lies inside
    /// the block.
    Poly { symbol: u32, bits: Vec<u8> },
}

/// Signature of a polynomial transition type: the arity of each symbol.
/// Symbol identifiers are indices into this table; the fixed fallback term
/// used by `init` on an arity mismatch is symbol 0 applied to all-zeros.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PolySignature {
    pub arities: Vec<u32>,
}

/// A base refinement interface for one transition type.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BaseInterface {
    Powerset,
    GroupValued(GroupKind),
    Distribution,
    Bag,
    Polynomial(PolySignature),
}

/// A refinement interface for a coproduct of base interfaces. All values are
/// sort-tagged; `init` and `update` dispatch on the tag. A single-sorted
/// system simply uses a one-element coproduct.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interface {
    pub parts: Vec<BaseInterface>,
}

pub fn coproduct(parts: Vec<BaseInterface>) -> Interface {
    assert!(!parts.is_empty(), "coproduct of zero interfaces");
    Interface { parts }
}

impl Interface {
    fn part(&self, sort: u32) -> &BaseInterface {
        &self.parts[sort as usize]
    }

    /// Weight of all outgoing edges of a state: `labels` is the bag of ALL
    /// its edge labels. Labels of other sorts are filtered out; de-sorted
    /// systems never produce them.
    pub fn init(&self, t: &H1Value, labels: &[Label]) -> Result<Weight, Overflow> {
        count_steps(labels.len() as u64 + 1);
        let inner = if labels.iter().all(|l| l.sort == t.sort) {
            self.part(t.sort).init(&t.inner, labels)?
        } else {
            let filtered: Vec<Label> = labels.iter().copied().filter(|l| l.sort == t.sort).collect();
            self.part(t.sort).init(&t.inner, &filtered)?
        };
        Ok(Weight {
            sort: t.sort,
            inner,
        })
    }

    /// The three-way split: from the labels of a state's edges into `S` and
    /// the stored weight for `C ⊇ S`, computes the weight for `S`, the
    /// serialized split value and the weight for `C \ S`.
    pub fn update(&self, labels: &[Label], w_c: &Weight) -> Result<(Weight, Vec<u8>, Weight), Overflow> {
        let mut h3 = Vec::with_capacity(16);
        let (ws, wrest) = self.update_into(labels, w_c, &mut h3)?;
        Ok((ws, h3, wrest))
    }

    /// Allocation-light variant of [`Interface::update`]: the split value is
    /// appended to `h3_out`.
    pub fn update_into(
        &self,
        labels: &[Label],
        w_c: &Weight,
        h3_out: &mut Vec<u8>,
    ) -> Result<(Weight, Weight), Overflow> {
        count_steps(labels.len() as u64 + 1);
        h3_out.extend_from_slice(&w_c.sort.to_be_bytes());
        let filtered: Vec<Label>;
        let labels = if labels.iter().all(|l| l.sort == w_c.sort) {
            labels
        } else {
            filtered = labels.iter().copied().filter(|l| l.sort == w_c.sort).collect();
            &filtered
        };
        let (ws, wrest) = self.part(w_c.sort).update(labels, &w_c.inner, h3_out)?;
        Ok((
            Weight {
                sort: w_c.sort,
                inner: ws,
            },
            Weight {
                sort: w_c.sort,
                inner: wrest,
            },
        ))
    }

    /// Split value of a state all of whose block-`C` edges lie inside the
    /// subblock, derived from the stored weight alone. Used for run
    /// statistics, never for the refinement itself.
    pub fn h3_when_all_inside(&self, w_c: &Weight, out: &mut Vec<u8>) {
        out.extend_from_slice(&w_c.sort.to_be_bytes());
        match &w_c.inner {
            WeightInner::Pow { rest, inside } => {
                write_pow_h3(*rest, false, *inside > 0, out);
            }
            WeightInner::Grp { rest, inside } => {
                let kind = grp_kind(rest);
                write_grp_h3(rest, &GroupElem::zero(kind), inside, out);
            }
            WeightInner::Poly { symbol, bits } => {
                write_poly_h3(*symbol, bits.iter().map(|b| b * 2), bits.len(), out);
            }
        }
    }

    /// Canonical one-step behaviour of a state, given its observation and
    /// its edges with targets replaced by their current block. Two states
    /// get equal signatures iff the transition structure cannot distinguish
    /// them at the current partition.
    pub fn oracle_signature(
        &self,
        t: &H1Value,
        edges: &[(Label, u32)],
    ) -> Result<Vec<u8>, Overflow> {
        let mut out = t.to_bytes();
        match self.part(t.sort) {
            BaseInterface::Powerset => {
                let mut blocks: Vec<u32> = edges.iter().map(|(_, b)| *b).collect();
                blocks.sort_unstable();
                blocks.dedup();
                out.extend_from_slice(&(blocks.len() as u32).to_be_bytes());
                for b in blocks {
                    out.extend_from_slice(&b.to_be_bytes());
                }
            }
            BaseInterface::GroupValued(_) | BaseInterface::Distribution | BaseInterface::Bag => {
                let mut agg: std::collections::BTreeMap<u32, GroupElem> = Default::default();
                for (l, b) in edges {
                    let w = match l.inner {
                        LabelInner::Weight(w) => w,
                        _ => unreachable!("weighted sort with unweighted label"),
                    };
                    match agg.entry(*b) {
                        std::collections::btree_map::Entry::Vacant(e) => {
                            e.insert(w);
                        }
                        std::collections::btree_map::Entry::Occupied(mut e) => {
                            let sum = e.get().checked_add(&w)?;
                            *e.get_mut() = sum;
                        }
                    }
                }
                agg.retain(|_, w| !w.is_zero());
                out.extend_from_slice(&(agg.len() as u32).to_be_bytes());
                for (b, w) in agg {
                    out.extend_from_slice(&b.to_be_bytes());
                    w.write_bytes(&mut out);
                }
            }
            BaseInterface::Polynomial(_) => {
                let mut pos: Vec<(u32, u32)> = edges
                    .iter()
                    .map(|(l, b)| match l.inner {
                        LabelInner::Pos(p) => (p, *b),
                        _ => unreachable!("polynomial sort with unindexed label"),
                    })
                    .collect();
                pos.sort_unstable();
                out.extend_from_slice(&(pos.len() as u32).to_be_bytes());
                for (_, b) in pos {
                    out.extend_from_slice(&b.to_be_bytes());
                }
            }
        }
        Ok(out)
    }
}

fn grp_kind(g: &GroupElem) -> GroupKind {
    match g {
        GroupElem::Int(_) => GroupKind::Int,
        GroupElem::Rat(_) => GroupKind::Rat,
    }
}

/// The split value of the powerset interface is a subset of {0,1,2} written
/// as a bit vector: did any edge land outside C, in C\S, in S.
fn write_pow_h3(outside: bool, middle: bool, inside: bool, out: &mut Vec<u8>) {
    out.push(0);
    out.push(((outside as u8) << 2) | ((middle as u8) << 1) | (inside as u8));
}

fn write_grp_h3(a0: &GroupElem, a1: &GroupElem, a2: &GroupElem, out: &mut Vec<u8>) {
    out.push(1);
    a0.write_bytes(out);
    a1.write_bytes(out);
    a2.write_bytes(out);
}

fn write_poly_h3(symbol: u32, vals: impl Iterator<Item = u8>, len: usize, out: &mut Vec<u8>) {
    out.push(2);
    out.extend_from_slice(&symbol.to_be_bytes());
    out.extend_from_slice(&(len as u32).to_be_bytes());
    out.extend(vals);
}

impl BaseInterface {
    fn init(&self, t: &H1Inner, labels: &[Label]) -> Result<WeightInner, Overflow> {
        match self {
            BaseInterface::Powerset => Ok(WeightInner::Pow {
                rest: false,
                inside: labels.len() as u64,
            }),
            BaseInterface::GroupValued(kind) => Ok(WeightInner::Grp {
                rest: GroupElem::zero(*kind),
                inside: sum_labels(labels, *kind)?,
            }),
            BaseInterface::Distribution => Ok(WeightInner::Grp {
                rest: GroupElem::zero(GroupKind::Rat),
                inside: GroupElem::one_rat(),
            }),
            BaseInterface::Bag => Ok(WeightInner::Grp {
                rest: GroupElem::Int(0),
                inside: sum_labels(labels, GroupKind::Int)?,
            }),
            BaseInterface::Polynomial(sig) => {
                let symbol = match t {
                    H1Inner::Sym(s) => *s,
                    _ => unreachable!("polynomial sort with non-symbol observation"),
                };
                let arity = sig.arities[symbol as usize] as usize;
                count_steps(arity as u64);
                if arity == labels.len() {
                    Ok(WeightInner::Poly {
                        symbol,
                        bits: vec![1; arity],
                    })
                } else {
                    // Fixed fallback term; the arity mismatch cannot arise
                    // from well-formed encodings but init stays total.
                    Ok(WeightInner::Poly {
                        symbol: 0,
                        bits: vec![0; sig.arities[0] as usize],
                    })
                }
            }
        }
    }

    fn update(
        &self,
        labels: &[Label],
        w_c: &WeightInner,
        h3_out: &mut Vec<u8>,
    ) -> Result<(WeightInner, WeightInner), Overflow> {
        match (self, w_c) {
            (BaseInterface::Powerset, WeightInner::Pow { rest, inside }) => {
                let n_s = labels.len() as u64;
                let n_mid = inside.saturating_sub(n_s);
                write_pow_h3(*rest, n_mid > 0, n_s > 0, h3_out);
                let ws = WeightInner::Pow {
                    rest: *rest || n_mid > 0,
                    inside: n_s,
                };
                let wrest = WeightInner::Pow {
                    rest: *rest || n_s > 0,
                    inside: n_mid,
                };
                Ok((ws, wrest))
            }
            (BaseInterface::GroupValued(kind), WeightInner::Grp { rest, inside }) => {
                let e = sum_labels(labels, *kind)?;
                let mid = inside.checked_sub(&e)?;
                grp_result(rest, &mid, &e, h3_out)
            }
            (BaseInterface::Distribution, WeightInner::Grp { rest, inside }) => {
                let e = sum_labels(labels, GroupKind::Rat)?;
                let mid = inside.checked_sub(&e)?;
                let sum = rest.checked_add(inside)?;
                let in_d3 = !rest.is_negative()
                    && !mid.is_negative()
                    && !e.is_negative()
                    && sum == GroupElem::one_rat();
                if in_d3 {
                    grp_result(rest, &mid, &e, h3_out)
                } else {
                    let zero = GroupElem::zero(GroupKind::Rat);
                    grp_result(&zero, &zero, &GroupElem::one_rat(), h3_out)
                }
            }
            (BaseInterface::Bag, WeightInner::Grp { rest, inside }) => {
                let e = sum_labels(labels, GroupKind::Int)?;
                let mid = inside.checked_sub(&e)?;
                if mid.is_negative() {
                    let zero = GroupElem::Int(0);
                    grp_result(&zero, &zero, &zero, h3_out)
                } else {
                    grp_result(rest, &mid, &e, h3_out)
                }
            }
            (BaseInterface::Polynomial(_), WeightInner::Poly { symbol, bits }) => {
                let mut vals = bits.clone();
                count_steps(vals.len() as u64);
                for l in labels {
                    let p = match l.inner {
                        LabelInner::Pos(p) => p as usize,
                        _ => unreachable!("polynomial sort with unindexed label"),
                    };
                    if p >= 1 && p <= vals.len() {
                        vals[p - 1] += 1;
                        debug_assert!(vals[p - 1] <= 2, "duplicate position label");
                    }
                }
                write_poly_h3(*symbol, vals.iter().copied(), vals.len(), h3_out);
                let ws = WeightInner::Poly {
                    symbol: *symbol,
                    bits: vals.iter().map(|&v| (v == 2) as u8).collect(),
                };
                let wrest = WeightInner::Poly {
                    symbol: *symbol,
                    bits: vals.iter().map(|&v| (v == 1) as u8).collect(),
                };
                Ok((ws, wrest))
            }
            _ => unreachable!("weight kind does not match interface"),
        }
    }
}

/// Shared tail of the group-like updates: from the split triple
/// `(a0, a1, a2)` = (outside C, in C\S, in S), the weight for `S` merges the
/// first two components and the weight for `C \ S` the outer two.
fn grp_result(
    a0: &GroupElem,
    a1: &GroupElem,
    a2: &GroupElem,
    h3_out: &mut Vec<u8>,
) -> Result<(WeightInner, WeightInner), Overflow> {
    write_grp_h3(a0, a1, a2, h3_out);
    let ws = WeightInner::Grp {
        rest: a0.checked_add(a1)?,
        inside: *a2,
    };
    let wrest = WeightInner::Grp {
        rest: a0.checked_add(a2)?,
        inside: *a1,
    };
    Ok((ws, wrest))
}

fn sum_labels(labels: &[Label], kind: GroupKind) -> Result<GroupElem, Overflow> {
    let mut acc = GroupElem::zero(kind);
    for l in labels {
        match l.inner {
            LabelInner::Weight(w) => acc = acc.checked_add(&w)?,
            _ => unreachable!("weighted sort with unweighted label"),
        }
    }
    Ok(acc)
}
