//! Exact truncated multivariate Laurent series over a theory's coefficient
//! ring.
//!
//! Variables carry an integer degree (+1 for Chern-root style variables,
//! -1 for the `u` of generating functions such as `c(E;u)`; the elementary
//! symmetric variables produced by [`GradedSeries::symmetric_reduce`] have
//! degree `i`). Exponents may be negative, which covers both the `u^{-1}`
//! powers of the Segre generating functions and the cone-supported Laurent
//! series of the degeneracy-locus machinery.
//!
//! Truncation is two-sided: coefficient monomials of degree below `-T` are
//! dropped (with `T` the theory's truncation order), and so is every term
//! whose positive weighted variable degree exceeds the series' cap.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;

use crate::coeff::{projective_class, CoeffElement, TheorySpec};
use crate::{Error, Result};

/// An ordered list of formal variables with fixed degrees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarAlphabet {
    names: Vec<String>,
    degrees: Vec<i64>,
}

impl VarAlphabet {
    pub fn new(vars: &[(&str, i64)]) -> Arc<Self> {
        let names: Vec<String> = vars.iter().map(|(n, _)| n.to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            assert!(
                !names[..i].contains(n),
                "duplicate variable name `{n}` in alphabet"
            );
        }
        Arc::new(VarAlphabet {
            names,
            degrees: vars.iter().map(|&(_, d)| d).collect(),
        })
    }

    /// All variables of degree +1 with the given names.
    pub fn roots(names: &[&str]) -> Arc<Self> {
        let vars: Vec<(&str, i64)> = names.iter().map(|&n| (n, 1)).collect();
        Self::new(&vars)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// A new alphabet with extra variables appended after the current ones.
    pub fn extended(&self, extra: &[(&str, i64)]) -> Arc<Self> {
        let mut vars: Vec<(&str, i64)> = self
            .names
            .iter()
            .zip(&self.degrees)
            .map(|(n, &d)| (n.as_str(), d))
            .collect();
        vars.extend_from_slice(extra);
        Self::new(&vars)
    }

    /// Weighted degree of an exponent vector.
    pub fn monomial_degree(&self, exps: &[i32]) -> i64 {
        exps.iter()
            .zip(&self.degrees)
            .map(|(&e, &d)| e as i64 * d)
            .sum()
    }

    /// Sum of the positive contributions `max(0, e*deg)`; this is what the
    /// truncation cap bounds.
    pub fn positive_degree(&self, exps: &[i32]) -> i64 {
        exps.iter()
            .zip(&self.degrees)
            .map(|(&e, &d)| (e as i64 * d).max(0))
            .sum()
    }
}

/// A truncated multivariate Laurent series with [`CoeffElement`]
/// coefficients. Immutable: all operations produce new values.
#[derive(Debug, Clone)]
pub struct GradedSeries {
    theory: TheorySpec,
    alphabet: Arc<VarAlphabet>,
    cap: u32,
    terms: BTreeMap<Vec<i32>, CoeffElement>,
}

impl PartialEq for GradedSeries {
    /// Equality of the mathematical content; the cap is working data and is
    /// not compared.
    fn eq(&self, other: &Self) -> bool {
        self.theory == other.theory
            && *self.alphabet == *other.alphabet
            && self.terms == other.terms
    }
}

impl Eq for GradedSeries {}

impl GradedSeries {
    pub fn zero(theory: &TheorySpec, alphabet: &Arc<VarAlphabet>, cap: u32) -> Self {
        GradedSeries {
            theory: theory.clone(),
            alphabet: Arc::clone(alphabet),
            cap,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(
        theory: &TheorySpec,
        alphabet: &Arc<VarAlphabet>,
        cap: u32,
        c: CoeffElement,
    ) -> Self {
        let mut s = Self::zero(theory, alphabet, cap);
        s.insert(vec![0; alphabet.len()], c);
        s
    }

    pub fn one(theory: &TheorySpec, alphabet: &Arc<VarAlphabet>, cap: u32) -> Self {
        Self::constant(theory, alphabet, cap, CoeffElement::one(theory))
    }

    pub fn var(
        theory: &TheorySpec,
        alphabet: &Arc<VarAlphabet>,
        cap: u32,
        name: &str,
    ) -> Result<Self> {
        let idx = alphabet.index(name)?;
        let mut exps = vec![0; alphabet.len()];
        exps[idx] = 1;
        let mut s = Self::zero(theory, alphabet, cap);
        s.insert(exps, CoeffElement::one(theory));
        Ok(s)
    }

    pub fn theory(&self) -> &TheorySpec {
        &self.theory
    }

    pub fn alphabet(&self) -> &Arc<VarAlphabet> {
        &self.alphabet
    }

    pub fn cap(&self) -> u32 {
        self.cap
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

    pub fn terms(&self) -> impl Iterator<Item = (&[i32], &CoeffElement)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn retained(&self, exps: &[i32]) -> bool {
        self.alphabet.positive_degree(exps) <= self.cap as i64
    }

    fn insert(&mut self, exps: Vec<i32>, mut c: CoeffElement) {
        c.prune(&self.theory);
        if c.is_zero() || !self.retained(&exps) {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().add(&c);
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.theory != other.theory || *self.alphabet != *other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        if self.cap != other.cap {
            return Err(Error::TruncationMismatch);
        }
        Ok(())
    }

    /// Re-truncate under a different cap (pruning when lowering it).
    pub fn with_cap(&self, cap: u32) -> Self {
        let mut out = Self::zero(&self.theory, &self.alphabet, cap);
        for (e, c) in &self.terms {
            out.insert(e.clone(), c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        GradedSeries {
            theory: self.theory.clone(),
            alphabet: Arc::clone(&self.alphabet),
            cap: self.cap,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let depth = -(self.theory.trunc() as i64);
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        // Coefficient monomial degrees are never positive, so a pair whose
        // shallowest product monomial already sits below the truncation
        // depth contributes nothing retained.
        let b_terms: Vec<(&Vec<i32>, &CoeffElement, i64)> = other
            .terms
            .iter()
            .map(|(e, c)| (e, c, c.max_degree(&self.theory)))
            .collect();
        for (ea, ca) in &self.terms {
            let da = ca.max_degree(&self.theory);
            for (eb, cb, db) in &b_terms {
                if da + db < depth {
                    continue;
                }
                let exps: Vec<i32> = ea.iter().zip(eb.iter()).map(|(a, b)| a + b).collect();
                if !out.retained(&exps) {
                    continue;
                }
                out.insert(exps, ca.mul(cb, &self.theory));
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Self::one(&self.theory, &self.alphabet, self.cap);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    pub fn scale(&self, c: &CoeffElement) -> Self {
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, t) in &self.terms {
            out.insert(e.clone(), t.mul(c, &self.theory));
        }
        out
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, t) in &self.terms {
            out.insert(e.clone(), t.scale(r));
        }
        out
    }

    /// Multiply by `var^k` (shifting exponents).
    pub fn mul_var_pow(&self, name: &str, k: i32) -> Result<Self> {
        let idx = self.alphabet.index(name)?;
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps[idx] += k;
            out.insert(exps, c.clone());
        }
        Ok(out)
    }

    /// The coefficient of a single exponent vector.
    pub fn coefficient_of(&self, exps: &[i32]) -> CoeffElement {
        self.terms.get(exps).cloned().unwrap_or_else(CoeffElement::zero)
    }

    /// The coefficient of `var^k` as a series in the remaining variables
    /// (same alphabet, `var` slot zeroed).
    pub fn extract_in(&self, name: &str, k: i32) -> Result<Self> {
        let idx = self.alphabet.index(name)?;
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, c) in &self.terms {
            if e[idx] == k {
                let mut exps = e.clone();
                exps[idx] = 0;
                out.insert(exps, c.clone());
            }
        }
        Ok(out)
    }

    /// Exponent range of `var` over the support.
    pub fn exponent_range(&self, name: &str) -> Result<Option<(i32, i32)>> {
        let idx = self.alphabet.index(name)?;
        let mut range = None;
        for e in self.terms.keys() {
            let x = e[idx];
            range = Some(match range {
                None => (x, x),
                Some((lo, hi)) => (x.min(lo), x.max(hi)),
            });
        }
        Ok(range)
    }

    pub fn constant_term(&self) -> CoeffElement {
        self.coefficient_of(&vec![0; self.alphabet.len()])
    }

    /// The common total degree (coefficient degree plus weighted monomial
    /// degree) when the series is homogeneous.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut deg = None;
        for (e, c) in &self.terms {
            let md = self.alphabet.monomial_degree(e);
            for (ce, _) in c.terms() {
                let d = md + self.theory.monomial_degree(ce);
                match deg {
                    None => deg = Some(d),
                    Some(prev) if prev != d => return None,
                    _ => {}
                }
            }
        }
        deg
    }

    /// Substitute `name -> repl`; every other variable is left in place.
    /// The replacement must have zero constant term (series-slot safety);
    /// use [`GradedSeries::substitute_finite`] for polynomial dependence.
    pub fn substitute(&self, name: &str, repl: &Self) -> Result<Self> {
        if !repl.constant_term().is_zero() {
            return Err(Error::NonzeroConstantTerm);
        }
        self.substitute_finite(name, repl)
    }

    /// Substitute into a variable the series depends on polynomially. The
    /// caller asserts the dependence is finite; no constant-term check.
    pub fn substitute_finite(&self, name: &str, repl: &Self) -> Result<Self> {
        self.check_compatible(repl)?;
        let idx = self.alphabet.index(name)?;
        let mut powers: BTreeMap<i32, GradedSeries> = BTreeMap::new();
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, c) in &self.terms {
            let s = e[idx];
            if s < 0 {
                return Err(Error::NonzeroConstantTerm);
            }
            let mut rest = e.clone();
            rest[idx] = 0;
            let mut base = Self::zero(&self.theory, &self.alphabet, self.cap);
            base.insert(rest, c.clone());
            if s == 0 {
                out = out.add(&base)?;
                continue;
            }
            if !powers.contains_key(&s) {
                let p = repl.pow(s as u32)?;
                powers.insert(s, p);
            }
            out = out.add(&base.mul(&powers[&s])?)?;
        }
        Ok(out)
    }

    /// Remove a variable the series no longer depends on (every exponent of
    /// it must be zero).
    pub fn drop_var(&self, name: &str) -> Result<Self> {
        let idx = self.alphabet.index(name)?;
        if self.terms.keys().any(|e| e[idx] != 0) {
            return Err(Error::NonzeroConstantTerm);
        }
        let mut vars: Vec<(String, i64)> = Vec::new();
        for i in 0..self.alphabet.len() {
            if i != idx {
                vars.push((self.alphabet.name(i).to_string(), self.alphabet.degree(i)));
            }
        }
        let refs: Vec<(&str, i64)> = vars.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let target = VarAlphabet::new(&refs);
        let mut out = Self::zero(&self.theory, &target, self.cap);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps.remove(idx);
            out.insert(exps, c.clone());
        }
        Ok(out)
    }

    /// Inject the series into a larger alphabet (matching variables by name
    /// and degree).
    pub fn embed(&self, target: &Arc<VarAlphabet>, cap: u32) -> Result<Self> {
        let mut map = Vec::with_capacity(self.alphabet.len());
        for i in 0..self.alphabet.len() {
            let j = target.index(self.alphabet.name(i))?;
            if target.degree(j) != self.alphabet.degree(i) {
                return Err(Error::AlphabetMismatch);
            }
            map.push(j);
        }
        let mut out = Self::zero(&self.theory, target, cap);
        for (e, c) in &self.terms {
            let mut exps = vec![0; target.len()];
            for (i, &x) in e.iter().enumerate() {
                exps[map[i]] = x;
            }
            out.insert(exps, c.clone());
        }
        Ok(out)
    }

    /// Evaluate the series by assigning a series to every variable. All
    /// exponents must be nonnegative; assignments with nonzero constant term
    /// are rejected unless `finite` is set.
    pub fn compose(&self, assignments: &[(&str, &GradedSeries)], finite: bool) -> Result<Self> {
        let (_, first) = assignments
            .first()
            .ok_or_else(|| Error::UnknownVariable("<empty assignment>".into()))?;
        let target_theory = first.theory.clone();
        let target_alph = Arc::clone(&first.alphabet);
        let cap = first.cap;
        let mut slots: Vec<Option<&GradedSeries>> = vec![None; self.alphabet.len()];
        for (name, repl) in assignments {
            if repl.theory != target_theory || *repl.alphabet != *target_alph || repl.cap != cap {
                return Err(Error::AlphabetMismatch);
            }
            if !finite && !repl.constant_term().is_zero() {
                return Err(Error::NonzeroConstantTerm);
            }
            slots[self.alphabet.index(name)?] = Some(repl);
        }
        let mut out = GradedSeries::zero(&target_theory, &target_alph, cap);
        let mut power_cache: BTreeMap<(usize, i32), GradedSeries> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut term = GradedSeries::constant(&target_theory, &target_alph, cap, c.clone());
            for (i, &s) in e.iter().enumerate() {
                if s == 0 {
                    continue;
                }
                if s < 0 {
                    return Err(Error::NonzeroConstantTerm);
                }
                let repl = slots[i].ok_or_else(|| {
                    Error::UnknownVariable(self.alphabet.name(i).to_string())
                })?;
                if !power_cache.contains_key(&(i, s)) {
                    let p = repl.pow(s as u32)?;
                    power_cache.insert((i, s), p);
                }
                term = term.mul(&power_cache[&(i, s)])?;
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Multiplicative inverse; the constant term must be a unit.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.constant_term();
        let c0_inv = coeff_inverse(&c0, &self.theory).ok_or(Error::NonUnitConstantTerm)?;
        // self = c0 (1 - n) with n free of constant term; invert by the
        // geometric series, which terminates under truncation.
        let scaled = self.scale(&c0_inv);
        let one = Self::one(&self.theory, &self.alphabet, self.cap);
        let n = one.sub(&scaled)?;
        let bound = (self.theory.trunc() + self.cap + 2) as usize;
        let mut acc = one.clone();
        let mut power = one.clone();
        for _ in 0..bound {
            power = power.mul(&n)?;
            if power.is_zero() {
                let inv = acc.scale(&c0_inv);
                debug_assert!(inv.mul(self).unwrap().is_one());
                return Ok(inv);
            }
            acc = acc.add(&power)?;
        }
        Err(Error::DivergentDivision)
    }

    /// Exact quotient modulo the truncation ideal.
    pub fn divide_exact(&self, denominator: &Self) -> Result<Self> {
        self.mul(&denominator.invert()?)
    }

    /// Divide by the monomial `var^k`; every term must be divisible.
    pub fn divide_var_pow(&self, name: &str, k: i32) -> Result<Self> {
        let idx = self.alphabet.index(name)?;
        for e in self.terms.keys() {
            if e[idx] < k {
                return Err(Error::NonzeroRemainder(
                    name.to_string(),
                    format!("0 (monomial division by {name}^{k})"),
                ));
            }
        }
        self.mul_var_pow(name, -k)
    }

    /// Exact division by `(a - b)` for two alphabet variables; the series
    /// must vanish under `a -> b`, otherwise the nonzero remainder is
    /// reported as an error.
    pub fn divide_by_difference(&self, a: &str, b: &str) -> Result<Self> {
        let ia = self.alphabet.index(a)?;
        let max_deg = self
            .terms
            .keys()
            .map(|e| e[ia])
            .max()
            .unwrap_or(0);
        if self.terms.keys().any(|e| e[ia] < 0) {
            return Err(Error::NonzeroRemainder(a.to_string(), b.to_string()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        // Synthetic division from the top coefficient down:
        //   q_{j-1} = f_j + b * q_j,   remainder r = f_0 + b * q_0.
        let mut q = Self::zero(&self.theory, &self.alphabet, self.cap);
        let mut carry = Self::zero(&self.theory, &self.alphabet, self.cap);
        for j in (1..=max_deg).rev() {
            let fj = self.extract_in(a, j)?;
            let qj = fj.add(&carry.mul_var_pow(b, 1)?)?;
            q = q.add(&qj.mul_var_pow(a, j - 1)?)?;
            carry = qj;
        }
        let remainder = self.extract_in(a, 0)?.add(&carry.mul_var_pow(b, 1)?)?;
        if !remainder.is_zero() {
            return Err(Error::NonzeroRemainder(a.to_string(), b.to_string()));
        }
        Ok(q)
    }

    /// Swap the exponents of two variables.
    pub fn swap_vars(&self, a: &str, b: &str) -> Result<Self> {
        let ia = self.alphabet.index(a)?;
        let ib = self.alphabet.index(b)?;
        let mut out = Self::zero(&self.theory, &self.alphabet, self.cap);
        for (e, c) in &self.terms {
            let mut exps = e.clone();
            exps.swap(ia, ib);
            out.insert(exps, c.clone());
        }
        Ok(out)
    }

    /// Symmetry under every adjacent transposition of the named variables.
    pub fn is_symmetric_in(&self, vars: &[&str]) -> Result<bool> {
        for w in vars.windows(2) {
            if self.swap_vars(w[0], w[1])? != *self {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Rewrite a series symmetric in `vars` in the elementary symmetric
    /// polynomials of those variables, which become fresh variables
    /// `e_names[0..k]` of degrees `1..=k` appended after the remaining ones.
    pub fn symmetric_reduce(&self, vars: &[&str], e_names: &[&str]) -> Result<Self> {
        let k = vars.len();
        assert_eq!(e_names.len(), k);
        if !self.is_symmetric_in(vars)? {
            return Err(Error::NotSymmetric);
        }
        let idxs: Vec<usize> = vars
            .iter()
            .map(|v| self.alphabet.index(v))
            .collect::<Result<_>>()?;
        for (i, v) in idxs.iter().zip(vars) {
            if self.alphabet.degree(*i) != 1 {
                return Err(Error::UnknownVariable(format!("{v} is not a degree-1 root")));
            }
        }
        if self.terms.keys().any(|e| idxs.iter().any(|&i| e[i] < 0)) {
            return Err(Error::NotSymmetric);
        }

        // Target alphabet: the untouched variables followed by e_1..e_k.
        let mut target_vars: Vec<(String, i64)> = Vec::new();
        let mut keep: Vec<usize> = Vec::new();
        for i in 0..self.alphabet.len() {
            if !idxs.contains(&i) {
                keep.push(i);
                target_vars.push((self.alphabet.name(i).to_string(), self.alphabet.degree(i)));
            }
        }
        for (j, name) in e_names.iter().enumerate() {
            target_vars.push((name.to_string(), j as i64 + 1));
        }
        let refs: Vec<(&str, i64)> = target_vars.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let target = VarAlphabet::new(&refs);

        // Elementary symmetric polynomials of the chosen roots, expanded
        // once in the source alphabet.
        let mut elementary: Vec<GradedSeries> = Vec::with_capacity(k);
        for j in 1..=k {
            let mut ej = Self::zero(&self.theory, &self.alphabet, self.cap);
            for combo in combinations(k, j) {
                let mut exps = vec![0; self.alphabet.len()];
                for &c in &combo {
                    exps[idxs[c]] = 1;
                }
                ej.insert(exps, CoeffElement::one(&self.theory));
            }
            elementary.push(ej);
        }

        let mut residual = self.clone();
        let mut out = Self::zero(&self.theory, &target, self.cap);
        // Repeatedly strip the lex-leading monomial in the chosen roots;
        // by symmetry it is dominant, so the Gauss descent terminates.
        while !residual.is_zero() {
            let (lead_exps, lead_coeff) = residual
                .terms
                .iter()
                .max_by_key(|(e, _)| idxs.iter().map(|&i| e[i]).collect::<Vec<i32>>())
                .map(|(e, c)| (e.clone(), c.clone()))
                .expect("nonzero series has a leading term");
            let mu: Vec<i32> = idxs.iter().map(|&i| lead_exps[i]).collect();
            for w in mu.windows(2) {
                if w[0] < w[1] {
                    return Err(Error::NotSymmetric);
                }
            }
            // e-exponents: mu_j - mu_{j+1}.
            let mut e_exps = vec![0i32; k];
            for j in 0..k {
                let next = if j + 1 < k { mu[j + 1] } else { 0 };
                e_exps[j] = mu[j] - next;
            }
            let mut expansion = Self::one(&self.theory, &self.alphabet, self.cap);
            for (j, &p) in e_exps.iter().enumerate() {
                for _ in 0..p {
                    expansion = expansion.mul(&elementary[j])?;
                }
            }
            let mut rest = lead_exps.clone();
            for &i in &idxs {
                rest[i] = 0;
            }
            let mut rest_series = Self::zero(&self.theory, &self.alphabet, self.cap);
            rest_series.insert(rest.clone(), lead_coeff.clone());
            residual = residual.sub(&rest_series.mul(&expansion)?)?;

            let mut out_exps = vec![0i32; target.len()];
            for (t, &i) in keep.iter().enumerate() {
                out_exps[t] = rest[i];
            }
            for j in 0..k {
                out_exps[keep.len() + j] = e_exps[j];
            }
            out.insert(out_exps, lead_coeff);
        }
        Ok(out)
    }

    /// Whether a degree-compatible shift places the support inside the cone
    /// `s_1 >= 0, s_1+s_2 >= 0, ..., s_1+...+s_r >= 0`. For a truncated
    /// (finite) support the partial sums below the last are always
    /// adjustable, so the obstruction is the minimal total exponent sum.
    pub fn cone_check(&self, vars: &[&str]) -> Result<bool> {
        let idxs: Vec<usize> = vars
            .iter()
            .map(|v| self.alphabet.index(v))
            .collect::<Result<_>>()?;
        for e in self.terms.keys() {
            let total: i64 = idxs.iter().map(|&i| e[i] as i64).sum();
            if total < 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn display(&self) -> SeriesDisplay<'_> {
        SeriesDisplay { series: self }
    }

    /// Assert integrality of every coefficient in integral theories.
    pub fn assert_integral(&self) -> Result<()> {
        for c in self.terms.values() {
            c.assert_integral(&self.theory)?;
        }
        Ok(())
    }
}

/// Inverse of a coefficient-ring element whose rational part is nonzero.
pub fn coeff_inverse(c: &CoeffElement, theory: &TheorySpec) -> Option<CoeffElement> {
    let c0 = c.constant_part();
    if c0 == num_traits::Zero::zero() {
        return None;
    }
    let c0_inv = BigRational::one() / c0;
    let scaled = c.scale(&c0_inv);
    // scaled = 1 - n with n of strictly negative degree, hence nilpotent
    // under truncation.
    let n = CoeffElement::one(theory).sub(&scaled);
    let mut acc = CoeffElement::one(theory);
    let mut power = CoeffElement::one(theory);
    for _ in 0..=theory.trunc() {
        power = power.mul(&n, theory);
        if power.is_zero() {
            break;
        }
        acc = acc.add(&power);
    }
    if !power.is_zero() {
        return None;
    }
    Some(acc.scale(&c0_inv))
}

/// The generating series of projective-space classes,
/// `P(u) = sum_i [P^i] u^{-i}`, over an alphabet containing `u`.
pub fn p_script_series(
    theory: &TheorySpec,
    alphabet: &Arc<VarAlphabet>,
    cap: u32,
    uvar: &str,
) -> Result<GradedSeries> {
    let idx = alphabet.index(uvar)?;
    let mut out = GradedSeries::zero(theory, alphabet, cap);
    for i in 0..=theory.trunc() {
        let mut exps = vec![0; alphabet.len()];
        exps[idx] = -(i as i32);
        out.insert(exps, projective_class(theory, i)?);
    }
    Ok(out)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

pub struct SeriesDisplay<'a> {
    series: &'a GradedSeries,
}

impl fmt::Display for SeriesDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.series.is_zero() {
            return write!(f, "0");
        }
        // Graded-lexicographic by the alphabet order.
        let mut keys: Vec<&Vec<i32>> = self.series.terms.keys().collect();
        keys.sort_by_key(|e| {
            (
                self.series.alphabet.monomial_degree(e),
                (*e).clone(),
            )
        });
        let mut first = true;
        for e in keys {
            let c = &self.series.terms[e];
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut parts: Vec<String> = Vec::new();
            let cd = c.display(&self.series.theory).to_string();
            if cd != "1" || e.iter().all(|&x| x == 0) {
                if c.terms().count() > 1 {
                    parts.push(format!("({cd})"));
                } else {
                    parts.push(cd);
                }
            }
            for (i, &x) in e.iter().enumerate() {
                if x == 1 {
                    parts.push(self.series.alphabet.name(i).to_string());
                } else if x != 0 {
                    parts.push(format!("{}^{}", self.series.alphabet.name(i), x));
                }
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}
