//! Property suites checking the two interface axioms against the reference
//! semantics, on randomly generated values and block pairs `S ⊆ C`.
//!
//! For a value `t` over a state set `X` and `S ⊆ C ⊆ X`, the axioms are
//!
//! - `init(obs(t), all_labels(t)) = w_ref(X)(t)`, and
//! - `update(labels_into_S(t), w_ref(C)(t))
//!    = (w_ref(S)(t), split_value(t, S, C), w_ref(C\S)(t))`,
//!
//! where the split value is computed by applying the transition type directly
//! to the three-way classification of states. The suites also assert that
//! `init`/`update` take linearly many steps in the number of labels, and that
//! serialized split values collide exactly when the semantic values agree.
//!
//! The `broken` suite wires in a deliberately faulty powerset variant whose
//! `update` drops the weight of `C \ S`; it exists as a negative control and
//! must fail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::reference::{self, DecodedValue};
use super::{
    coproduct, BaseInterface, GroupElem, GroupKind, H1Value, Interface, Label, PolySignature,
    Weight,
};
use num_rational::Rational64;

pub const SUITE_NAMES: [&str; 7] = [
    "powerset",
    "group-int",
    "group-rat",
    "distribution",
    "bag",
    "polynomial",
    "coproduct",
];

/// Name of the negative-control suite (not part of [`SUITE_NAMES`]).
pub const BROKEN_SUITE: &str = "broken";

#[derive(Debug)]
pub struct SuiteReport {
    pub name: String,
    pub cases: u64,
}

/// Runs one named suite with `cases` random cases. Returns a description of
/// the first violation, if any.
pub fn run_suite(name: &str, cases: u64, seed: u64) -> Result<SuiteReport, String> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ hash_name(name));
    let poly_sig = PolySignature {
        arities: vec![0, 1, 2, 3],
    };
    let parts: Vec<BaseInterface> = match name {
        "powerset" => vec![BaseInterface::Powerset],
        "group-int" => vec![BaseInterface::GroupValued(GroupKind::Int)],
        "group-rat" => vec![BaseInterface::GroupValued(GroupKind::Rat)],
        "distribution" => vec![BaseInterface::Distribution],
        "bag" => vec![BaseInterface::Bag],
        "polynomial" => vec![BaseInterface::Polynomial(poly_sig)],
        "coproduct" => vec![
            BaseInterface::Powerset,
            BaseInterface::GroupValued(GroupKind::Rat),
            BaseInterface::Polynomial(poly_sig),
        ],
        BROKEN_SUITE => vec![BaseInterface::Powerset],
        _ => return Err(format!("unknown interface suite: {name}")),
    };
    let iface = coproduct(parts);
    let broken = name == BROKEN_SUITE;

    let mut prev_case: Option<(DecodedValue, Vec<u8>, SemanticH3)> = None;
    for case in 0..cases {
        let sort = if iface.parts.len() > 1 {
            rng.gen_range(0..iface.parts.len() as u32)
        } else {
            0
        };
        let base = iface.parts[sort as usize].clone();
        let n = rng.gen_range(1..=8u32);
        let t = gen_value(&base, n, &mut rng);
        let c_set: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
        let s_set: Vec<bool> = (0..n)
            .map(|y| c_set[y as usize] && rng.gen_bool(0.5))
            .collect();
        let in_c = |y: u32| c_set[y as usize];
        let in_s = |y: u32| s_set[y as usize];
        let chi = |y: u32| -> u8 {
            if in_s(y) {
                2
            } else if in_c(y) {
                1
            } else {
                0
            }
        };

        let fail = |what: &str| {
            Err(format!(
                "{name}: case {case}: {what} axiom violated (value {t:?}, C {c_set:?}, S {s_set:?})"
            ))
        };

        // init axiom
        let (h1_inner, _) = reference::encode(&base, &t);
        let h1 = H1Value {
            sort,
            class: 0,
            inner: h1_inner,
        };
        let all_labels = reference::labels_into(&base, &t, sort, |_| true);
        super::reset_steps();
        let got_init = iface.init(&h1, &all_labels).map_err(|e| e.to_string())?;
        let init_steps = super::steps();
        let expect_init = Weight {
            sort,
            inner: reference::w_ref(&base, &t, |_| true).map_err(|e| e.to_string())?,
        };
        if got_init != expect_init {
            return fail("init");
        }
        if init_steps > 3 * (all_labels.len() as u64 + arity_bound(&base)) + 8 {
            return Err(format!(
                "{name}: case {case}: init took {init_steps} steps for {} labels",
                all_labels.len()
            ));
        }

        // update axiom
        let w_c = Weight {
            sort,
            inner: reference::w_ref(&base, &t, in_c).map_err(|e| e.to_string())?,
        };
        let labels_s = reference::labels_into(&base, &t, sort, in_s);
        super::reset_steps();
        let (got_ws, got_v, got_wrest) = if broken {
            broken_powerset_update(&iface, &labels_s, &w_c).map_err(|e| e.to_string())?
        } else {
            iface.update(&labels_s, &w_c).map_err(|e| e.to_string())?
        };
        let update_steps = super::steps();
        let expect_ws = Weight {
            sort,
            inner: reference::w_ref(&base, &t, in_s).map_err(|e| e.to_string())?,
        };
        let expect_wrest = Weight {
            sort,
            inner: reference::w_ref(&base, &t, |y| in_c(y) && !in_s(y))
                .map_err(|e| e.to_string())?,
        };
        let mut expect_v = sort.to_be_bytes().to_vec();
        expect_v.extend(reference::h3_direct(&base, &t, chi).map_err(|e| e.to_string())?);
        if got_ws != expect_ws {
            return fail("update (weight of S)");
        }
        if got_v != expect_v {
            return fail("update (split value)");
        }
        if got_wrest != expect_wrest {
            return fail("update (weight of C\\S)");
        }
        if update_steps > 3 * (labels_s.len() as u64 + arity_bound(&base)) + 8 {
            return Err(format!(
                "{name}: case {case}: update took {update_steps} steps for {} labels",
                labels_s.len()
            ));
        }

        // Distributions restricted to C stay distributions: the split triple
        // has nonnegative components summing to one.
        if let BaseInterface::Distribution = base {
            if let SemanticH3::Grp(parts) = semantic_h3(&base, &t, chi) {
                let mut sum = GroupElem::zero(GroupKind::Rat);
                for p in &parts {
                    if p.is_negative() {
                        return fail("distribution split left the simplex");
                    }
                    sum = sum.checked_add(p).map_err(|e| e.to_string())?;
                }
                if sum != GroupElem::one_rat() {
                    return fail("distribution split does not sum to one");
                }
            }
        }

        // Serialization is injective: equal bytes iff equal semantic values.
        // Compare with the previous case of the same sort.
        let sem = semantic_h3(&base, &t, chi);
        if let Some((_, prev_bytes, prev_sem)) = &prev_case {
            if (prev_bytes == &got_v) != (prev_sem == &sem) {
                return fail("split-value serialization is not injective");
            }
        }
        if iface.parts.len() == 1 {
            prev_case = Some((t.clone(), got_v.clone(), sem));
        }
    }
    Ok(SuiteReport {
        name: name.to_string(),
        cases,
    })
}

fn arity_bound(base: &BaseInterface) -> u64 {
    match base {
        BaseInterface::Polynomial(sig) => {
            sig.arities.iter().copied().max().unwrap_or(0) as u64
        }
        _ => 0,
    }
}

fn hash_name(name: &str) -> u64 {
    name.bytes().fold(0u64, |h, b| {
        h.wrapping_mul(0x100000001b3).wrapping_add(b as u64)
    })
}

/// Semantic (structured) form of a split value, for serialization-injectivity
/// checks.
#[derive(Clone, PartialEq, Eq, Debug)]
enum SemanticH3 {
    Pow([bool; 3]),
    Grp([GroupElem; 3]),
    Poly(u32, Vec<u8>),
}

fn semantic_h3(base: &BaseInterface, t: &DecodedValue, chi: impl Fn(u32) -> u8) -> SemanticH3 {
    match (base, t) {
        (BaseInterface::Powerset, DecodedValue::Set(s)) => {
            let mut bits = [false; 3];
            for &y in s {
                bits[chi(y) as usize] = true;
            }
            SemanticH3::Pow(bits)
        }
        (
            BaseInterface::GroupValued(_) | BaseInterface::Distribution | BaseInterface::Bag,
            DecodedValue::Weighted(m),
        ) => {
            let kind = match base {
                BaseInterface::GroupValued(k) => *k,
                BaseInterface::Distribution => GroupKind::Rat,
                _ => GroupKind::Int,
            };
            let mut acc = [GroupElem::zero(kind); 3];
            for &(y, w) in m {
                let i = chi(y) as usize;
                acc[i] = acc[i].checked_add(&w).expect("axiom case overflow");
            }
            SemanticH3::Grp(acc)
        }
        (BaseInterface::Polynomial(_), DecodedValue::Term { symbol, children }) => {
            SemanticH3::Poly(*symbol, children.iter().map(|&y| chi(y)).collect())
        }
        _ => unreachable!(),
    }
}

fn gen_value(base: &BaseInterface, n: u32, rng: &mut ChaCha12Rng) -> DecodedValue {
    match base {
        BaseInterface::Powerset => {
            DecodedValue::Set((0..n).filter(|_| rng.gen_bool(0.5)).collect())
        }
        BaseInterface::GroupValued(GroupKind::Int) => {
            let mut m = Vec::new();
            for y in 0..n {
                if rng.gen_bool(0.5) {
                    m.push((y, GroupElem::Int(nonzero(rng))));
                }
            }
            DecodedValue::Weighted(m)
        }
        BaseInterface::GroupValued(GroupKind::Rat) => {
            let mut m = Vec::new();
            for y in 0..n {
                if rng.gen_bool(0.5) {
                    let num = nonzero(rng);
                    let den = rng.gen_range(1..9);
                    m.push((y, GroupElem::Rat(Rational64::new(num, den))));
                }
            }
            DecodedValue::Weighted(m)
        }
        BaseInterface::Distribution => {
            let mut support: Vec<u32> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if support.is_empty() {
                support.push(rng.gen_range(0..n));
            }
            let parts: Vec<i64> = support.iter().map(|_| rng.gen_range(1..9i64)).collect();
            let total: i64 = parts.iter().sum();
            DecodedValue::Weighted(
                support
                    .into_iter()
                    .zip(parts)
                    .map(|(y, p)| (y, GroupElem::Rat(Rational64::new(p, total))))
                    .collect(),
            )
        }
        BaseInterface::Bag => {
            let mut m = Vec::new();
            for y in 0..n {
                if rng.gen_bool(0.5) {
                    m.push((y, GroupElem::Int(rng.gen_range(1..5))));
                }
            }
            DecodedValue::Weighted(m)
        }
        BaseInterface::Polynomial(sig) => {
            let symbol = rng.gen_range(0..sig.arities.len() as u32);
            let children = (0..sig.arities[symbol as usize])
                .map(|_| rng.gen_range(0..n))
                .collect();
            DecodedValue::Term { symbol, children }
        }
    }
}

fn nonzero(rng: &mut ChaCha12Rng) -> i64 {
    let v = rng.gen_range(-8..8i64);
    if v == 0 {
        1
    } else {
        v
    }
}

/// Faulty powerset update used as the negative control: it forgets to split
/// the stored weight off and returns `w(C)` in place of `w(C \ S)`.
fn broken_powerset_update(
    iface: &Interface,
    labels: &[Label],
    w_c: &Weight,
) -> Result<(Weight, Vec<u8>, Weight), super::Overflow> {
    let (ws, v, _) = iface.update(labels, w_c)?;
    Ok((ws, v, w_c.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_interfaces_satisfy_axioms() {
        for name in SUITE_NAMES {
            let report = run_suite(name, 2000, 0xA51).unwrap();
            assert_eq!(report.cases, 2000);
        }
    }

    #[test]
    fn broken_update_fails_the_suite() {
        let err = run_suite(BROKEN_SUITE, 2000, 0xA51).unwrap_err();
        assert!(err.contains("update"), "unexpected failure: {err}");
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nonesuch", 1, 0).is_err());
    }
}
