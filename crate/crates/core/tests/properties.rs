//! Randomized invariants of the series ring: ring axioms, truncation-ideal
//! stability, exact-division round trips, and homogeneity preservation.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

use cobord_core::coeff::{make_theory, CoeffElement, TheoryKind, TheorySpec};
use cobord_core::series::{GradedSeries, VarAlphabet};

const CAP: u32 = 8;

fn alphabet() -> Arc<VarAlphabet> {
    VarAlphabet::new(&[("a", 1), ("b", 1), ("u", -1)])
}

fn theory_strategy() -> impl Strategy<Value = TheorySpec> {
    prop_oneof![
        Just(make_theory(TheoryKind::Additive, 3).unwrap()),
        Just(make_theory(TheoryKind::Multiplicative, 3).unwrap()),
        Just(make_theory(TheoryKind::UniversalRational, 3).unwrap()),
    ]
}

/// A term: exponents for (a, b, u) plus one coefficient monomial.
#[derive(Debug, Clone)]
struct RawTerm {
    exps: [i32; 3],
    gens: Vec<u16>,
    numer: i64,
    denom: u64,
}

fn term_strategy() -> impl Strategy<Value = RawTerm> {
    (
        [0..4i32, 0..4i32, -3..4i32],
        proptest::collection::vec(0..2u16, 0..3),
        -6..7i64,
        1..4u64,
    )
        .prop_map(|(exps, gens, numer, denom)| RawTerm { exps, gens, numer, denom })
}

/// Terms with nonnegative exponents only. On this cone the set of monomials
/// above the cap is an ideal, so truncated multiplication is a genuine
/// quotient-ring product and the ring axioms hold exactly.
fn cone_term_strategy() -> impl Strategy<Value = RawTerm> {
    term_strategy().prop_map(|mut rt| {
        rt.exps[2] = rt.exps[2].abs() % 3;
        rt
    })
}

fn build(t: &TheorySpec, terms: &[RawTerm]) -> GradedSeries {
    let al = alphabet();
    let mut out = GradedSeries::zero(t, &al, CAP);
    for rt in terms {
        let mut gexps = vec![0u16; t.num_generators()];
        for (i, &g) in rt.gens.iter().take(t.num_generators()).enumerate() {
            gexps[i] = g;
        }
        let q = BigRational::new(BigInt::from(rt.numer), BigInt::from(rt.denom));
        let c = CoeffElement::monomial(t, gexps, q);
        let mut base = GradedSeries::constant(t, &al, CAP, c);
        for (i, &e) in rt.exps.iter().enumerate() {
            if e != 0 {
                base = base.mul_var_pow(al.name(i), e).unwrap();
            }
        }
        out = out.add(&base).unwrap();
    }
    out
}

fn series_strategy() -> impl Strategy<Value = (TheorySpec, Vec<RawTerm>)> {
    (theory_strategy(), proptest::collection::vec(term_strategy(), 0..5))
}

fn cone_series_strategy() -> impl Strategy<Value = (TheorySpec, Vec<RawTerm>)> {
    (theory_strategy(), proptest::collection::vec(cone_term_strategy(), 0..5))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ring_axioms((t, xs) in cone_series_strategy(), ys in proptest::collection::vec(cone_term_strategy(), 0..5), zs in proptest::collection::vec(cone_term_strategy(), 0..5)) {
        let x = build(&t, &xs);
        let y = build(&t, &ys);
        let z = build(&t, &zs);
        let one = GradedSeries::one(&t, x.alphabet(), CAP);

        prop_assert_eq!(x.add(&y).unwrap(), y.add(&x).unwrap());
        prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
        prop_assert_eq!(
            x.add(&y).unwrap().add(&z).unwrap(),
            x.add(&y.add(&z).unwrap()).unwrap()
        );
        prop_assert_eq!(
            x.mul(&y).unwrap().mul(&z).unwrap(),
            x.mul(&y.mul(&z).unwrap()).unwrap()
        );
        prop_assert_eq!(x.mul(&one).unwrap(), x.clone());
        prop_assert_eq!(
            x.mul(&y.add(&z).unwrap()).unwrap(),
            x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap()
        );
        prop_assert!(x.sub(&x).unwrap().is_zero());
    }

    #[test]
    fn truncation_ideal_absorbs((t, xs) in series_strategy()) {
        // A coefficient monomial of degree below -T is zero in the ring, so
        // scaling by it annihilates every series.
        let x = build(&t, &xs);
        if t.num_generators() == 0 {
            return Ok(());
        }
        let deep = vec![(t.trunc() + 1) as u16; 1];
        let mut gexps = vec![0u16; t.num_generators()];
        gexps[0] = deep[0] * (-(t.generator_degree(0)) as u16).max(1);
        // Exponent chosen so the monomial degree is strictly below -T.
        let c = CoeffElement::monomial(&t, gexps, BigRational::from(BigInt::from(5)));
        prop_assert!(c.is_zero());
        prop_assert!(x.scale(&c).is_zero());
    }

    #[test]
    fn difference_division_round_trip((t, xs) in series_strategy()) {
        // p * (a - b) / (a - b) = p whenever the product stays under the cap.
        let x = build(&t, &xs);
        let small: Vec<_> = x
            .terms()
            .map(|(e, c)| (e.to_vec(), c.clone()))
            .filter(|(e, _)| {
                e[0] >= 0 && e[1] >= 0 && alphabet().positive_degree(e) + 1 <= CAP as i64
            })
            .collect();
        let al = alphabet();
        let mut p = GradedSeries::zero(&t, &al, CAP);
        for (e, c) in small {
            let mut base = GradedSeries::constant(&t, &al, CAP, c);
            for (i, &ex) in e.iter().enumerate() {
                if ex != 0 {
                    base = base.mul_var_pow(al.name(i), ex).unwrap();
                }
            }
            p = p.add(&base).unwrap();
        }
        let f = p.mul_var_pow("a", 1).unwrap().sub(&p.mul_var_pow("b", 1).unwrap()).unwrap();
        let q = f.divide_by_difference("a", "b").unwrap();
        prop_assert_eq!(q, p);
    }

    #[test]
    fn inversion_round_trip((t, xs) in series_strategy()) {
        // 1 + (terms with positive monomial degree) is a unit.
        let x = build(&t, &xs);
        let al = alphabet();
        let mut n = GradedSeries::zero(&t, &al, CAP);
        for (e, c) in x.terms() {
            if al.positive_degree(e) >= 1 && e.iter().all(|&v| v >= 0) {
                let mut base = GradedSeries::constant(&t, &al, CAP, c.clone());
                for (i, &ex) in e.iter().enumerate() {
                    if ex != 0 {
                        base = base.mul_var_pow(al.name(i), ex).unwrap();
                    }
                }
                n = n.add(&base).unwrap();
            }
        }
        let s = GradedSeries::one(&t, &al, CAP).add(&n).unwrap();
        let inv = s.invert().unwrap();
        prop_assert!(inv.mul(&s).unwrap().is_one());
    }

    #[test]
    fn multiplication_preserves_homogeneity((t, xs) in series_strategy(), ys in proptest::collection::vec(term_strategy(), 0..5), da in 0..3i64, db in 0..3i64) {
        // Project both factors onto a single total degree, then check the
        // product sits in the sum degree.
        let pick = |s: &GradedSeries, d: i64| {
            let al = s.alphabet().clone();
            let mut out = GradedSeries::zero(&t, &al, CAP);
            for (e, c) in s.terms() {
                let md = al.monomial_degree(e);
                for (ge, q) in c.terms() {
                    if md + t.monomial_degree(ge) == d {
                        let elem = CoeffElement::monomial(&t, ge.to_vec(), q.clone());
                        let mut base = GradedSeries::constant(&t, &al, CAP, elem);
                        for (i, &ex) in e.iter().enumerate() {
                            if ex != 0 {
                                base = base.mul_var_pow(al.name(i), ex).unwrap();
                            }
                        }
                        out = out.add(&base).unwrap();
                    }
                }
            }
            out
        };
        let x = pick(&build(&t, &xs), da);
        let y = pick(&build(&t, &ys), db);
        let xy = x.mul(&y).unwrap();
        if !xy.is_zero() {
            prop_assert_eq!(xy.homogeneous_degree(), Some(da + db));
        }
    }

    #[test]
    fn symmetric_reduce_round_trip((t, xs) in series_strategy()) {
        // Symmetrize in (a, b), reduce to elementary symmetric variables,
        // then substitute e1 = a + b, e2 = ab back.
        let x = build(&t, &xs);
        let nonneg: Vec<_> = x
            .terms()
            .map(|(e, c)| (e.to_vec(), c.clone()))
            .filter(|(e, _)| e[0] >= 0 && e[1] >= 0 && e[0] + e[1] <= (CAP / 2) as i32)
            .collect();
        let al = alphabet();
        let mut p = GradedSeries::zero(&t, &al, CAP);
        for (e, c) in nonneg {
            let mut base = GradedSeries::constant(&t, &al, CAP, c);
            for (i, &ex) in e.iter().enumerate() {
                if ex != 0 {
                    base = base.mul_var_pow(al.name(i), ex).unwrap();
                }
            }
            p = p.add(&base).unwrap();
        }
        let sym = p.add(&p.swap_vars("a", "b").unwrap()).unwrap();
        let reduced = sym.symmetric_reduce(&["a", "b"], &["e1", "e2"]).unwrap();

        let big = VarAlphabet::new(&[("a", 1), ("b", 1), ("u", -1), ("e1", 1), ("e2", 2)]);
        let embedded = reduced.embed(&big, CAP).unwrap();
        let a = GradedSeries::var(&t, &big, CAP, "a").unwrap();
        let b = GradedSeries::var(&t, &big, CAP, "b").unwrap();
        let e1 = a.add(&b).unwrap();
        let e2 = a.mul(&b).unwrap();
        let back = embedded
            .substitute_finite("e1", &e1)
            .unwrap()
            .substitute_finite("e2", &e2)
            .unwrap()
            .drop_var("e1")
            .unwrap()
            .drop_var("e2")
            .unwrap();
        prop_assert_eq!(back, sym.embed(&big, CAP).unwrap().drop_var("e1").unwrap().drop_var("e2").unwrap());
    }
}
