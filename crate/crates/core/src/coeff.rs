//! Graded coefficient rings of the supported oriented cohomology theories.
//!
//! Every theory has a coefficient ring concentrated in nonpositive degrees:
//! the integers for the Chow convention, integer polynomials in the class
//! `b` of degree -1 for connective K-theory, and rational polynomials in the
//! logarithm coefficients `m1, ..., mT` (with `deg mi = -i`) for the rational
//! universal theory. All arithmetic is exact.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// Which oriented cohomology theory the coefficient ring belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TheoryKind {
    /// Chow-ring convention: integers in degree 0, additive group law.
    Additive,
    /// Connective K-theory: `Z[b]` with `deg b = -1`, law `u + v - b*u*v`.
    Multiplicative,
    /// Rational universal theory: `Q[m1,...,mT]` with `deg mi = -i`,
    /// law `exp(log u + log v)`.
    UniversalRational,
}

/// A validated theory together with the governing truncation order `T`.
///
/// All downstream series retain monomial degrees up to `T` and coefficient
/// degrees down to `-T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheorySpec {
    kind: TheoryKind,
    trunc: u32,
}

/// Build a validated theory; rejects `T = 0`.
pub fn make_theory(kind: TheoryKind, trunc: u32) -> Result<TheorySpec> {
    if trunc == 0 {
        return Err(Error::ZeroTruncation);
    }
    Ok(TheorySpec { kind, trunc })
}

impl TheorySpec {
    pub fn new(kind: TheoryKind, trunc: u32) -> Result<Self> {
        make_theory(kind, trunc)
    }

    pub fn kind(&self) -> TheoryKind {
        self.kind
    }

    /// The truncation order `T`.
    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    /// Number of coefficient-ring generators tracked under the truncation.
    pub fn num_generators(&self) -> usize {
        match self.kind {
            TheoryKind::Additive => 0,
            TheoryKind::Multiplicative => 1,
            TheoryKind::UniversalRational => self.trunc as usize,
        }
    }

    /// Degree of the `i`-th generator (0-based), always negative.
    pub fn generator_degree(&self, i: usize) -> i64 {
        match self.kind {
            TheoryKind::Additive => unreachable!("additive theory has no generators"),
            TheoryKind::Multiplicative => -1,
            TheoryKind::UniversalRational => -(i as i64 + 1),
        }
    }

    pub fn generator_name(&self, i: usize) -> String {
        match self.kind {
            TheoryKind::Additive => unreachable!("additive theory has no generators"),
            TheoryKind::Multiplicative => "b".to_string(),
            TheoryKind::UniversalRational => format!("m{}", i + 1),
        }
    }

    /// Whether every final output must have integer coefficients.
    pub fn is_integral(&self) -> bool {
        matches!(self.kind, TheoryKind::Additive | TheoryKind::Multiplicative)
    }

    /// Degree of a generator-exponent vector.
    pub fn monomial_degree(&self, exps: &[u16]) -> i64 {
        exps.iter()
            .enumerate()
            .map(|(i, &e)| e as i64 * self.generator_degree(i))
            .sum()
    }
}

/// An exact element of the coefficient ring: a finite map from
/// generator-exponent vectors to rationals. Monomials of degree below `-T`
/// are pruned on every operation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffElement {
    terms: BTreeMap<Vec<u16>, BigRational>,
}

impl CoeffElement {
    pub fn zero() -> Self {
        CoeffElement {
            terms: BTreeMap::new(),
        }
    }

    pub fn one(theory: &TheorySpec) -> Self {
        Self::from_int(theory, 1)
    }

    pub fn from_int(theory: &TheorySpec, n: i64) -> Self {
        Self::from_rational(theory, BigRational::from(BigInt::from(n)))
    }

    pub fn from_rational(theory: &TheorySpec, r: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(vec![0; theory.num_generators()], r);
        }
        CoeffElement { terms }
    }

    /// The `i`-th generator as a ring element.
    pub fn generator(theory: &TheorySpec, i: usize) -> Self {
        assert!(i < theory.num_generators(), "generator index out of range");
        let mut exps = vec![0u16; theory.num_generators()];
        exps[i] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(exps, BigRational::one());
        CoeffElement { terms }
    }

    /// A single monomial `coef * prod gen_i^exps[i]`.
    pub fn monomial(theory: &TheorySpec, exps: Vec<u16>, coef: BigRational) -> Self {
        assert_eq!(exps.len(), theory.num_generators());
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(exps, coef);
        }
        let mut out = CoeffElement { terms };
        out.prune(theory);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .all(|(e, c)| e.iter().all(|&x| x == 0) && c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u16], &BigRational)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn constant_part(&self) -> BigRational {
        self.terms
            .iter()
            .find(|(e, _)| e.iter().all(|&x| x == 0))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(BigRational::zero)
    }

    fn insert(&mut self, exps: Vec<u16>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Drop monomials of degree below `-T`.
    pub fn prune(&mut self, theory: &TheorySpec) {
        let depth = -(theory.trunc() as i64);
        self.terms.retain(|e, _| theory.monomial_degree(e) >= depth);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        CoeffElement {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self, theory: &TheorySpec) -> Self {
        let depth = -(theory.trunc() as i64);
        let mut out = CoeffElement::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u16> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if theory.monomial_degree(&exps) < depth {
                    continue;
                }
                out.insert(exps, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        if r.is_zero() {
            return CoeffElement::zero();
        }
        CoeffElement {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * r)).collect(),
        }
    }

    /// The common degree of all monomials, if the element is homogeneous.
    pub fn homogeneous_degree(&self, theory: &TheorySpec) -> Option<i64> {
        let mut deg = None;
        for e in self.terms.keys() {
            let d = theory.monomial_degree(e);
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        deg
    }

    /// Highest monomial degree present (0 for the zero element). Generators
    /// all have negative degree, so this is never positive.
    pub fn max_degree(&self, theory: &TheorySpec) -> i64 {
        self.terms
            .keys()
            .map(|e| theory.monomial_degree(e))
            .max()
            .unwrap_or(0)
    }

    /// Lowest monomial degree present (0 for the zero element).
    pub fn min_degree(&self, theory: &TheorySpec) -> i64 {
        self.terms
            .keys()
            .map(|e| theory.monomial_degree(e))
            .min()
            .unwrap_or(0)
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.denom().is_one())
    }

    /// Fail loudly on fractional coefficients in the integral theories.
    pub fn assert_integral(&self, theory: &TheorySpec) -> Result<()> {
        if theory.is_integral() && !self.is_integral() {
            return Err(Error::NonIntegral(self.display(theory).to_string()));
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, theory: &'a TheorySpec) -> CoeffDisplay<'a> {
        CoeffDisplay { elem: self, theory }
    }
}

pub struct CoeffDisplay<'a> {
    elem: &'a CoeffElement,
    theory: &'a TheorySpec,
}

impl fmt::Display for CoeffDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.elem.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in &self.elem.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() || exps.iter().all(|&e| e == 0) {
                parts.push(mag.to_string());
            }
            for (i, &e) in exps.iter().enumerate() {
                if e == 1 {
                    parts.push(self.theory.generator_name(i));
                } else if e > 1 {
                    parts.push(format!("{}^{}", self.theory.generator_name(i), e));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

/// The class `[P^i]` of projective `i`-space in the theory's coefficient
/// ring, of degree `-i`.
///
/// For the rational universal theory the identification `[P^i] = (i+1)*mi`
/// is validated against the residue identity at build time (see the tests
/// and the `segre` module's residue oracle).
pub fn projective_class(theory: &TheorySpec, i: u32) -> Result<CoeffElement> {
    if i > theory.trunc() {
        return Err(Error::OutOfTruncation(i, theory.trunc()));
    }
    Ok(match theory.kind() {
        TheoryKind::Additive => {
            if i == 0 {
                CoeffElement::one(theory)
            } else {
                CoeffElement::zero()
            }
        }
        TheoryKind::Multiplicative => {
            if i == 0 {
                CoeffElement::one(theory)
            } else {
                CoeffElement::monomial(theory, vec![i as u16], BigRational::one())
            }
        }
        TheoryKind::UniversalRational => {
            if i == 0 {
                CoeffElement::one(theory)
            } else {
                let mut exps = vec![0u16; theory.num_generators()];
                exps[i as usize - 1] = 1;
                CoeffElement::monomial(
                    theory,
                    exps,
                    BigRational::from(BigInt::from(i as i64 + 1)),
                )
            }
        }
    })
}
