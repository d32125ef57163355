//! Reference semantics for the interface axioms.
//!
//! A [`DecodedValue`] is a one-layer transition value with explicit successor
//! states. [`w_ref`] is the explicit weight map of each transition type and
//! [`h3_direct`] applies the transition type directly to a three-way state
//! classification. The axiom suites check `init` and `update` against these;
//! the engine itself never computes weights this way.

use super::{
    BaseInterface, GroupElem, GroupKind, H1Inner, Label, LabelInner, PolySignature, WeightInner,
};
use crate::interfaces::Overflow;

/// A one-layer transition value with explicit successor states.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DecodedValue {
    /// Set of successors (no duplicates).
    Set(Vec<u32>),
    /// Finitely supported weight function: distinct states with nonzero
    /// weights.
    Weighted(Vec<(u32, GroupElem)>),
    /// A symbol applied to successor states.
    Term { symbol: u32, children: Vec<u32> },
}

impl DecodedValue {
    /// All successor states, with multiplicity.
    pub fn successors(&self) -> Vec<u32> {
        match self {
            DecodedValue::Set(s) => s.clone(),
            DecodedValue::Weighted(m) => m.iter().map(|(y, _)| *y).collect(),
            DecodedValue::Term { children, .. } => children.clone(),
        }
    }
}

/// The graph encoding of a decoded value: its observation and its labelled
/// edges.
pub fn encode(base: &BaseInterface, v: &DecodedValue) -> (H1Inner, Vec<(LabelInner, u32)>) {
    match (base, v) {
        (BaseInterface::Powerset, DecodedValue::Set(s)) => (
            H1Inner::Pow {
                nonempty: !s.is_empty(),
            },
            s.iter().map(|&y| (LabelInner::Unit, y)).collect(),
        ),
        (BaseInterface::GroupValued(kind), DecodedValue::Weighted(m)) => {
            let mut total = GroupElem::zero(*kind);
            for (_, w) in m {
                total = total.checked_add(w).expect("encode overflow");
            }
            (
                H1Inner::Grp(total),
                m.iter().map(|&(y, w)| (LabelInner::Weight(w), y)).collect(),
            )
        }
        (BaseInterface::Distribution, DecodedValue::Weighted(m)) => (
            H1Inner::DistUnit,
            m.iter().map(|&(y, w)| (LabelInner::Weight(w), y)).collect(),
        ),
        (BaseInterface::Bag, DecodedValue::Weighted(m)) => {
            let mut total = 0u64;
            for (_, w) in m {
                match w {
                    GroupElem::Int(c) => total += *c as u64,
                    _ => unreachable!("bag with non-integer multiplicity"),
                }
            }
            (
                H1Inner::Bag(total),
                m.iter().map(|&(y, w)| (LabelInner::Weight(w), y)).collect(),
            )
        }
        (BaseInterface::Polynomial(_), DecodedValue::Term { symbol, children }) => (
            H1Inner::Sym(*symbol),
            children
                .iter()
                .enumerate()
                .map(|(i, &y)| (LabelInner::Pos(i as u32 + 1), y))
                .collect(),
        ),
        _ => unreachable!("value does not match interface"),
    }
}

/// Inverse of [`encode`], for round-trip checks.
pub fn decode(
    base: &BaseInterface,
    h1: &H1Inner,
    edges: &[(LabelInner, u32)],
) -> DecodedValue {
    match base {
        BaseInterface::Powerset => {
            let mut s: Vec<u32> = edges.iter().map(|&(_, y)| y).collect();
            s.sort_unstable();
            s.dedup();
            DecodedValue::Set(s)
        }
        BaseInterface::GroupValued(_) | BaseInterface::Distribution | BaseInterface::Bag => {
            let mut m: Vec<(u32, GroupElem)> = edges
                .iter()
                .map(|&(l, y)| match l {
                    LabelInner::Weight(w) => (y, w),
                    _ => unreachable!("weighted sort with unweighted label"),
                })
                .collect();
            m.sort_by_key(|&(y, _)| y);
            DecodedValue::Weighted(m)
        }
        BaseInterface::Polynomial(_) => {
            let symbol = match h1 {
                H1Inner::Sym(s) => *s,
                _ => unreachable!("polynomial observation is a symbol"),
            };
            let mut pos: Vec<(u32, u32)> = edges
                .iter()
                .map(|&(l, y)| match l {
                    LabelInner::Pos(p) => (p, y),
                    _ => unreachable!("polynomial sort with unindexed label"),
                })
                .collect();
            pos.sort_unstable();
            DecodedValue::Term {
                symbol,
                children: pos.into_iter().map(|(_, y)| y).collect(),
            }
        }
    }
}

/// The labels of the edges from `v` into the states selected by `into`.
pub fn labels_into(
    base: &BaseInterface,
    v: &DecodedValue,
    sort: u32,
    into: impl Fn(u32) -> bool,
) -> Vec<Label> {
    let (_, edges) = encode(base, v);
    edges
        .into_iter()
        .filter(|&(_, y)| into(y))
        .map(|(inner, _)| Label { sort, inner })
        .collect()
}

/// The explicit weight map of each transition type, evaluated on a decoded
/// value for the block selected by `in_c`.
pub fn w_ref(
    base: &BaseInterface,
    v: &DecodedValue,
    in_c: impl Fn(u32) -> bool,
) -> Result<WeightInner, Overflow> {
    match (base, v) {
        (BaseInterface::Powerset, DecodedValue::Set(s)) => {
            let inside = s.iter().filter(|&&y| in_c(y)).count() as u64;
            let rest = s.iter().any(|&y| !in_c(y));
            Ok(WeightInner::Pow { rest, inside })
        }
        (
            BaseInterface::GroupValued(_) | BaseInterface::Distribution | BaseInterface::Bag,
            DecodedValue::Weighted(m),
        ) => {
            let mut rest = GroupElem::zero(kind_of(base));
            let mut inside = GroupElem::zero(kind_of(base));
            for &(y, w) in m {
                if in_c(y) {
                    inside = inside.checked_add(&w)?;
                } else {
                    rest = rest.checked_add(&w)?;
                }
            }
            Ok(WeightInner::Grp { rest, inside })
        }
        (BaseInterface::Polynomial(_), DecodedValue::Term { symbol, children }) => {
            Ok(WeightInner::Poly {
                symbol: *symbol,
                bits: children.iter().map(|&y| in_c(y) as u8).collect(),
            })
        }
        _ => unreachable!("value does not match interface"),
    }
}

fn kind_of(base: &BaseInterface) -> GroupKind {
    match base {
        BaseInterface::GroupValued(k) => *k,
        BaseInterface::Distribution => GroupKind::Rat,
        BaseInterface::Bag => GroupKind::Int,
        _ => unreachable!(),
    }
}

/// Direct functorial action on a three-way classification of states
/// (0 outside C, 1 in C\S, 2 in S), serialized the same way `update`
/// serializes its middle component (without the sort prefix added by the
/// coproduct wrapper).
pub fn h3_direct(
    base: &BaseInterface,
    v: &DecodedValue,
    chi: impl Fn(u32) -> u8,
) -> Result<Vec<u8>, Overflow> {
    let mut out = Vec::new();
    match (base, v) {
        (BaseInterface::Powerset, DecodedValue::Set(s)) => {
            let mut bits = [false; 3];
            for &y in s {
                bits[chi(y) as usize] = true;
            }
            super::write_pow_h3(bits[0], bits[1], bits[2], &mut out);
        }
        (
            BaseInterface::GroupValued(_) | BaseInterface::Distribution | BaseInterface::Bag,
            DecodedValue::Weighted(m),
        ) => {
            let mut acc = [
                GroupElem::zero(kind_of(base)),
                GroupElem::zero(kind_of(base)),
                GroupElem::zero(kind_of(base)),
            ];
            for &(y, w) in m {
                let i = chi(y) as usize;
                acc[i] = acc[i].checked_add(&w)?;
            }
            super::write_grp_h3(&acc[0], &acc[1], &acc[2], &mut out);
        }
        (BaseInterface::Polynomial(_), DecodedValue::Term { symbol, children }) => {
            super::write_poly_h3(
                *symbol,
                children.iter().map(|&y| chi(y)),
                children.len(),
                &mut out,
            );
        }
        _ => unreachable!("value does not match interface"),
    }
    Ok(out)
}

/// Helper exposed for tests building polynomial interfaces.
pub fn poly(arities: &[u32]) -> BaseInterface {
    BaseInterface::Polynomial(PolySignature {
        arities: arities.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_ref_powerset_example() {
        // t = {x,y,z}, C = {x}: one member inside, some outside -> (1, 1)
        let t = DecodedValue::Set(vec![0, 1, 2]);
        let got = w_ref(&BaseInterface::Powerset, &t, |y| y == 0).unwrap();
        assert_eq!(
            got,
            WeightInner::Pow {
                rest: true,
                inside: 1
            }
        );
    }

    #[test]
    fn w_ref_group_example() {
        // x -> 2, y -> 3, C = {x,y}: everything inside -> (0, 5)
        let t = DecodedValue::Weighted(vec![(0, GroupElem::Int(2)), (1, GroupElem::Int(3))]);
        let got = w_ref(&BaseInterface::GroupValued(GroupKind::Int), &t, |_| true).unwrap();
        assert_eq!(
            got,
            WeightInner::Grp {
                rest: GroupElem::Int(0),
                inside: GroupElem::Int(5)
            }
        );
    }

    #[test]
    fn w_ref_whole_space_has_zero_rest() {
        let t = DecodedValue::Set(vec![3, 4]);
        let got = w_ref(&BaseInterface::Powerset, &t, |_| true).unwrap();
        assert_eq!(
            got,
            WeightInner::Pow {
                rest: false,
                inside: 2
            }
        );
        let wt = DecodedValue::Weighted(vec![(0, GroupElem::Int(7))]);
        let got = w_ref(&BaseInterface::GroupValued(GroupKind::Int), &wt, |_| true).unwrap();
        match got {
            WeightInner::Grp { rest, .. } => assert!(rest.is_zero()),
            _ => panic!(),
        }
    }

    #[test]
    fn encode_decode_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(0x0DD);
        for _ in 0..2000 {
            let base = match rng.gen_range(0..5) {
                0 => BaseInterface::Powerset,
                1 => BaseInterface::GroupValued(GroupKind::Int),
                2 => BaseInterface::Bag,
                3 => BaseInterface::Distribution,
                _ => poly(&[0, 1, 2, 3]),
            };
            let n = rng.gen_range(1..9u32);
            let v = match &base {
                BaseInterface::Powerset => {
                    let mut s: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                    s.sort_unstable();
                    DecodedValue::Set(s)
                }
                BaseInterface::Polynomial(sig) => {
                    let symbol = rng.gen_range(0..sig.arities.len() as u32);
                    DecodedValue::Term {
                        symbol,
                        children: (0..sig.arities[symbol as usize])
                            .map(|_| rng.gen_range(0..n))
                            .collect(),
                    }
                }
                BaseInterface::Distribution => {
                    let mut m = Vec::new();
                    for y in 0..n {
                        if rng.gen_bool(0.4) {
                            m.push((y, rng.gen_range(1..6i64)));
                        }
                    }
                    if m.is_empty() {
                        m.push((0, 1));
                    }
                    let total: i64 = m.iter().map(|(_, c)| c).sum();
                    DecodedValue::Weighted(
                        m.into_iter()
                            .map(|(y, c)| {
                                (y, GroupElem::Rat(num_rational::Rational64::new(c, total)))
                            })
                            .collect(),
                    )
                }
                _ => {
                    let mut m = Vec::new();
                    for y in 0..n {
                        if rng.gen_bool(0.4) {
                            let w = if matches!(base, BaseInterface::Bag) {
                                rng.gen_range(1..6i64)
                            } else {
                                let v = rng.gen_range(-5..5i64);
                                if v == 0 {
                                    2
                                } else {
                                    v
                                }
                            };
                            m.push((y, GroupElem::Int(w)));
                        }
                    }
                    DecodedValue::Weighted(m)
                }
            };
            let (h1, edges) = encode(&base, &v);
            assert_eq!(decode(&base, &h1, &edges), v, "roundtrip failed on {base:?}");
        }
    }

    #[test]
    fn encode_decode_roundtrip() {
        let cases: Vec<(BaseInterface, DecodedValue)> = vec![
            (BaseInterface::Powerset, DecodedValue::Set(vec![1, 4, 7])),
            (BaseInterface::Powerset, DecodedValue::Set(vec![])),
            (
                BaseInterface::GroupValued(GroupKind::Int),
                DecodedValue::Weighted(vec![(2, GroupElem::Int(-3)), (5, GroupElem::Int(1))]),
            ),
            (
                BaseInterface::Bag,
                DecodedValue::Weighted(vec![(0, GroupElem::Int(2))]),
            ),
            (
                poly(&[3]),
                DecodedValue::Term {
                    symbol: 0,
                    children: vec![4, 4, 1],
                },
            ),
        ];
        for (base, v) in cases {
            let (h1, edges) = encode(&base, &v);
            assert_eq!(decode(&base, &h1, &edges), v);
        }
    }
}
