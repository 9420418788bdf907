//! Kempf-Laksov degeneracy-locus classes by three independent paths:
//! the closed product formula, the iterative stage-by-stage push-forward,
//! and a brute-force localization oracle over the resolution tower.
//!
//! A class is recorded as a [`ClassExpression`]: a finite sum of
//! coefficient-weighted monomials `A_{s_1}^{(l_1)} ... A_{s_r}^{(l_r)}` in
//! the relative Segre symbols `A_k^{(l)} = S_k(S-dual - (E/F^l)-dual)`,
//! with the row position `i` fixing the flag corank `l_i = lambda_i - i + d`.
//!
//! Cross-path comparisons expand the symbols over a generic full flag of
//! `E` (Chern roots `f_1..f_n`) and restrict to the coordinate fixed points
//! of the Grassmann bundle; agreement at every fixed point for generic
//! roots pins down the class.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;

use crate::coeff::{CoeffElement, TheoryKind, TheorySpec};
use crate::fgl::{build_fgl, FormalGroupLaw};
use crate::segre::{relative_segre, residue_sum_sub, w_coefficients, Bundle};
use crate::series::{GradedSeries, VarAlphabet};
use crate::{Error, Result};

/// A partition: weakly decreasing, strictly positive parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    /// Number of (nonzero) rows.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// The weight `|lambda|`.
    pub fn weight(&self) -> u32 {
        self.parts.iter().sum()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.parts.iter().map(|p| p.to_string()).join(","))
    }
}

/// Validate membership of `lambda` in the set of partitions fitting in the
/// `d x (n-d)` box; trailing zeros are trimmed.
pub fn validate_partition(lambda: &[u32], d: usize, n: usize) -> Result<Partition> {
    let mut parts: Vec<u32> = lambda.to_vec();
    while parts.last() == Some(&0) {
        parts.pop();
    }
    if parts.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidPartition(format!(
            "parts must be weakly decreasing, got {lambda:?}"
        )));
    }
    if parts.len() > d {
        return Err(Error::InvalidPartition(format!(
            "length {} exceeds d = {d}",
            parts.len()
        )));
    }
    if let Some(&first) = parts.first() {
        if first as usize > n - d {
            return Err(Error::InvalidPartition(format!(
                "lambda_1 = {first} exceeds n - d = {}",
                n - d
            )));
        }
    }
    Ok(Partition { parts })
}

/// Whether symbol indices above the dimension bound are kept or dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Keep every symbol; the expression is independent of `n`.
    Expression,
    /// Drop `A_k` with `k > d(n-d)` (zero above the variety's dimension
    /// for a point base with trivial flags).
    Evaluation,
}

/// Ambient data for a Grassmann bundle `Gr_d(E)`, `rank E = n`, with the
/// full reference flag `F^l` of corank `l`.
#[derive(Debug)]
pub struct GrassmannContext {
    theory: TheorySpec,
    law: FormalGroupLaw,
    d: usize,
    n: usize,
    mode: EvalMode,
    // Fixed-point relative Segre series, keyed by (sigma, corank); these
    // depend only on the ambient data, so they are shared across partitions.
    rel_cache: RefCell<BTreeMap<(Vec<usize>, i64), GradedSeries>>,
}

impl GrassmannContext {
    pub fn new(theory: &TheorySpec, d: usize, n: usize, mode: EvalMode) -> Result<Self> {
        if d < 1 || d >= n {
            return Err(Error::InvalidPartition(format!(
                "need 1 <= d < n, got d = {d}, n = {n}"
            )));
        }
        Ok(GrassmannContext {
            theory: theory.clone(),
            law: build_fgl(theory)?,
            d,
            n,
            mode,
            rel_cache: RefCell::new(BTreeMap::new()),
        })
    }

    pub fn theory(&self) -> &TheorySpec {
        &self.theory
    }

    pub fn law(&self) -> &FormalGroupLaw {
        &self.law
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> EvalMode {
        self.mode
    }

    /// Dimension bound `N = d(n-d)` of the Grassmannian over a point.
    pub fn dim_bound(&self) -> i64 {
        (self.d * (self.n - self.d)) as i64
    }

    /// Flag coranks `l_i = lambda_i - i + d` for the rows of `lambda`.
    pub fn ells(&self, lambda: &Partition) -> Vec<i64> {
        lambda
            .parts()
            .iter()
            .enumerate()
            .map(|(i0, &l)| l as i64 - (i0 as i64 + 1) + self.d as i64)
            .collect()
    }
}

/// A finite sum of coefficient-weighted monomials in the symbols
/// `A_{s_i}^{(l_i)}`; the key of a term lists the indices `s_1..s_r` and
/// the row position fixes the corank `l_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassExpression {
    ells: Vec<i64>,
    terms: BTreeMap<Vec<i32>, CoeffElement>,
}

impl ClassExpression {
    pub fn new(ells: Vec<i64>, terms: BTreeMap<Vec<i32>, CoeffElement>) -> Self {
        ClassExpression { ells, terms }
    }

    /// The unit class (empty partition).
    pub fn unit(theory: &TheorySpec) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), CoeffElement::one(theory));
        ClassExpression { ells: Vec::new(), terms }
    }

    pub fn ells(&self) -> &[i64] {
        &self.ells
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &CoeffElement)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Total degree of a term: symbol indices plus coefficient degree.
    /// Returns `None` if the terms are not all of one degree.
    pub fn homogeneous_degree(&self, theory: &TheorySpec) -> Option<i64> {
        let mut deg = None;
        for (s, c) in &self.terms {
            let d = s.iter().map(|&x| x as i64).sum::<i64>() + c.homogeneous_degree(theory)?;
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        deg
    }

    pub fn display<'a>(&'a self, theory: &'a TheorySpec) -> ClassExpressionDisplay<'a> {
        ClassExpressionDisplay { expr: self, theory }
    }
}

pub struct ClassExpressionDisplay<'a> {
    expr: &'a ClassExpression,
    theory: &'a TheorySpec,
}

impl fmt::Display for ClassExpressionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.expr.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (s, c) in &self.expr.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c.display(self.theory))?;
            for (i, &k) in s.iter().enumerate() {
                write!(f, "*A_{{{k}}}^({})", self.expr.ells[i])?;
            }
        }
        Ok(())
    }
}

/// Variable names `t1..tr` for the formal argument of Theorem B.
fn t_names(r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("t{i}")).collect()
}

fn t_alphabet(r: usize) -> Arc<VarAlphabet> {
    let names = t_names(r);
    let vars: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), 1)).collect();
    VarAlphabet::new(&vars)
}

/// The Laurent series `t^lambda prod_{i<j} (1 - t_i/t_j) prod_{i<j}
/// P(t_j, t_i)` in `t_1..t_r`, truncated at total `t`-degree
/// `|lambda| + T`; its support lies in the cone of nonnegative partial
/// exponent sums.
#[allow(non_snake_case)]
pub fn theoremB_argument(lambda: &Partition, ctx: &GrassmannContext) -> Result<GradedSeries> {
    let r = lambda.len();
    let t = &ctx.theory;
    let al = t_alphabet(r);
    let cap = lambda.weight() + t.trunc();
    let names = t_names(r);

    let mut g = GradedSeries::one(t, &al, cap);
    for (i0, &p) in lambda.parts().iter().enumerate() {
        g = g.mul_var_pow(&names[i0], p as i32)?;
    }
    let one = GradedSeries::one(t, &al, cap);
    for i in 0..r {
        for j in (i + 1)..r {
            let ti = GradedSeries::var(t, &al, cap, &names[i])?;
            let tj = GradedSeries::var(t, &al, cap, &names[j])?;
            let ratio = ti.mul_var_pow(&names[j], -1)?;
            g = g.mul(&one.sub(&ratio)?)?;
            g = g.mul(&ctx.law.p_at(&tj, &ti)?)?;
        }
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    if !g.cone_check(&refs)? {
        return Err(Error::Inconsistency(
            "Theorem B argument escapes the exponent cone".into(),
        ));
    }
    Ok(g)
}

/// The substitution `phi_1`: each monomial `t_1^{s_1}...t_r^{s_r}` becomes
/// the symbol monomial `A_{s_1}^{(l_1)}...A_{s_r}^{(l_r)}`. In evaluation
/// mode, symbols with index above the dimension bound are dropped.
pub fn phi_eval(
    series: &GradedSeries,
    lambda: &Partition,
    ctx: &GrassmannContext,
) -> Result<ClassExpression> {
    let r = lambda.len();
    if series.alphabet().len() != r {
        return Err(Error::Inconsistency(
            "phi argument must live over exactly t_1..t_r".into(),
        ));
    }
    let ells = ctx.ells(lambda);
    let bound = ctx.dim_bound();
    let mut terms: BTreeMap<Vec<i32>, CoeffElement> = BTreeMap::new();
    for (exps, c) in series.terms() {
        if ctx.mode == EvalMode::Evaluation && exps.iter().any(|&s| s as i64 > bound) {
            continue;
        }
        terms
            .entry(exps.to_vec())
            .and_modify(|acc| *acc = acc.add(c))
            .or_insert_with(|| c.clone());
    }
    terms.retain(|_, c| !c.is_zero());
    Ok(ClassExpression { ells, terms })
}

/// Theorem B: `kappa_lambda = phi_1(theoremB_argument(lambda))`.
pub fn kl_closed(lambda: &Partition, ctx: &GrassmannContext) -> Result<ClassExpression> {
    let expr = phi_eval(&theoremB_argument(lambda, ctx)?, lambda, ctx)?;
    let want = lambda.weight() as i64;
    if expr.homogeneous_degree(&ctx.theory) != Some(want) {
        return Err(Error::Inconsistency(format!(
            "kappa_{lambda} is not homogeneous of degree {want}"
        )));
    }
    Ok(expr)
}

/// The stage factor in phi form: `prod_{l<i} (1 - t_l/t_i) P(t_i, t_l)`.
fn stage_phi_factor(
    law: &FormalGroupLaw,
    al: &Arc<VarAlphabet>,
    cap: u32,
    names: &[String],
    i: usize,
) -> Result<GradedSeries> {
    let t = law.theory();
    let one = GradedSeries::one(t, al, cap);
    let mut factor = one.clone();
    let ti = GradedSeries::var(t, al, cap, &names[i - 1])?;
    for l in 1..i {
        let tl = GradedSeries::var(t, al, cap, &names[l - 1])?;
        let ratio = tl.mul_var_pow(&names[i - 1], -1)?;
        factor = factor.mul(&one.sub(&ratio)?)?;
        factor = factor.mul(&law.p_at(&ti, &tl)?)?;
    }
    Ok(factor)
}

/// The stage factor in eqstage sum form:
/// `(sum_q (-1)^q e_q(t_1..t_{i-1}) t_i^{-q}) (sum_j w_{-j}(t_1..t_{i-1}) t_i^j)`
/// with the elementary symmetric polynomials built combinatorially and the
/// `w` classes taken from the Segre machinery.
fn stage_sum_factor(
    law: &FormalGroupLaw,
    al: &Arc<VarAlphabet>,
    cap: u32,
    names: &[String],
    i: usize,
) -> Result<GradedSeries> {
    let t = law.theory();
    let k = i - 1;
    let ti_name = names[i - 1].as_str();

    // sum_q (-1)^q e_q(t_1..t_{i-1}) t_i^{-q}
    let mut e_part = GradedSeries::zero(t, al, cap);
    for q in 0..=k {
        let mut eq = GradedSeries::zero(t, al, cap);
        for combo in (0..k).combinations(q) {
            let mut mono = GradedSeries::one(t, al, cap);
            for c in combo {
                mono = mono.mul_var_pow(&names[c], 1)?;
            }
            eq = eq.add(&mono)?;
        }
        let mut term = eq.mul_var_pow(ti_name, -(q as i32))?;
        if q % 2 == 1 {
            term = term.neg();
        }
        e_part = e_part.add(&term)?;
    }

    // sum_j w_{-j}(t_1..t_{i-1}) t_i^j
    let prior: Vec<&str> = names[..k].iter().map(|s| s.as_str()).collect();
    let bundle = Bundle::from_root_vars(t, al, cap, &prior)?;
    let mut w_part = GradedSeries::zero(t, al, cap);
    for (j, wj) in w_coefficients(law, &bundle)?.iter().enumerate() {
        w_part = w_part.add(&wj.embed(al, cap)?.mul_var_pow(ti_name, j as i32)?)?;
    }

    e_part.mul(&w_part)
}

/// The stage-`i` push-forward of `tau_i^s alpha_i`, computed in both of its
/// equivalent forms (the eqstage sum and the phi product); their equality
/// is asserted. The result is a fragment over the symbols of rows `1..=i`:
/// positions below `i` are retained `tau`-powers, position `i` is the
/// `A`-index.
pub fn kl_stage_pushforward(
    i: usize,
    s: u32,
    lambda: &Partition,
    ctx: &GrassmannContext,
) -> Result<ClassExpression> {
    let r = lambda.len();
    if i < 1 || i > r {
        return Err(Error::InvalidPartition(format!(
            "stage {i} out of range for a length-{r} partition"
        )));
    }
    let t = &ctx.theory;
    let li = lambda.parts()[i - 1];
    let al = t_alphabet(i);
    let names = t_names(i);
    let cap = li + s + t.trunc() + (i as u32 - 1);

    let base = GradedSeries::one(t, &al, cap).mul_var_pow(&names[i - 1], (li + s) as i32)?;
    let phi_form = base.mul(&stage_phi_factor(&ctx.law, &al, cap, &names, i)?)?;
    let sum_form = base.mul(&stage_sum_factor(&ctx.law, &al, cap, &names, i)?)?;
    if phi_form != sum_form {
        return Err(Error::Inconsistency(format!(
            "stage {i} push-forward: sum form and phi form disagree"
        )));
    }

    let ells = ctx.ells(lambda);
    let mut terms: BTreeMap<Vec<i32>, CoeffElement> = BTreeMap::new();
    for (exps, c) in phi_form.terms() {
        terms.insert(exps.to_vec(), c.clone());
    }
    Ok(ClassExpression {
        ells: ells[..i].to_vec(),
        terms,
    })
}

/// The iterative path: apply the eqstage sum factors for `i = r` down to
/// `1` to `t^lambda`, checking after every stage that the data stays a
/// polynomial in the earlier variables and inside the exponent cone, then
/// substitute symbols.
pub fn kl_iterative(lambda: &Partition, ctx: &GrassmannContext) -> Result<ClassExpression> {
    let r = lambda.len();
    let t = &ctx.theory;
    let al = t_alphabet(r);
    let names = t_names(r);
    let cap = lambda.weight() + t.trunc();

    let mut g = GradedSeries::one(t, &al, cap);
    for (i0, &p) in lambda.parts().iter().enumerate() {
        g = g.mul_var_pow(&names[i0], p as i32)?;
    }
    for i in (1..=r).rev() {
        g = g.mul(&stage_sum_factor(&ctx.law, &al, cap, &names, i)?)?;
        // Membership in the stage ring: polynomial in t_1..t_{i-1} and
        // cone-supported in t_i..t_r.
        for l in 1..i {
            if let Some((lo, _)) = g.exponent_range(&names[l - 1])? {
                if lo < 0 {
                    return Err(Error::Inconsistency(format!(
                        "stage {i}: negative exponent of {}",
                        names[l - 1]
                    )));
                }
            }
        }
        let suffix: Vec<&str> = names[i - 1..].iter().map(|s| s.as_str()).collect();
        if !g.cone_check(&suffix)? {
            return Err(Error::Inconsistency(format!(
                "stage {i}: support escapes the exponent cone"
            )));
        }
    }
    phi_eval(&g, lambda, ctx)
}

/// Flag-root names `f1..fn` for the generic full flag of `E`.
fn f_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("f{i}")).collect()
}

/// Quotient-root names `q1..q_{n-d}` for `Q = E/S`.
fn q_names(n: usize, d: usize) -> Vec<String> {
    (1..=n - d).map(|i| format!("q{i}")).collect()
}

/// The tower-oracle output: the push-forward class over the generic flag
/// base, as a series in the flag roots `f_1..f_n` and the quotient roots
/// `q_1..q_{n-d}`.
#[derive(Debug, Clone)]
pub struct TowerClass {
    series: GradedSeries,
    n: usize,
    d: usize,
}

impl TowerClass {
    pub fn series(&self) -> &GradedSeries {
        &self.series
    }

    /// Restrict to the coordinate fixed point `S = span{f_b : b in sigma}`:
    /// the quotient roots become the complementary flag roots. The result
    /// is re-expressed over `target` (which must contain `f1..fn`).
    pub fn restrict(
        &self,
        sigma: &[usize],
        target: &Arc<VarAlphabet>,
        cap: u32,
    ) -> Result<GradedSeries> {
        let fs = f_names(self.n);
        let qs = q_names(self.n, self.d);
        let complement: Vec<usize> = (1..=self.n).filter(|b| !sigma.contains(b)).collect();
        let mut out = self.series.clone();
        for (j, &b) in complement.iter().enumerate() {
            let repl = GradedSeries::var(
                out.theory(),
                out.alphabet(),
                out.cap(),
                &fs[b - 1],
            )?;
            out = out.substitute_finite(&qs[j], &repl)?;
        }
        for q in &qs {
            out = out.drop_var(q)?;
        }
        out.embed(target, cap)
    }

    /// Specialize to trivial flags (every `f_b = 0`), leaving a symmetric
    /// polynomial in the quotient roots.
    pub fn evaluate_trivial_flags(&self) -> Result<GradedSeries> {
        let fs = f_names(self.n);
        let mut out = self.series.clone();
        for f in &fs {
            out = out.extract_in(f, 0)?;
        }
        for f in &fs {
            out = out.drop_var(f)?;
        }
        Ok(out)
    }
}

/// The brute-force localization oracle: push
/// `prod_i c_{n-d}((D_i/D_{i-1})-dual tensor E/S)` down the tower of
/// projective bundles `P(F^{l_i}/D_{i-1})`, choosing every tautological
/// line among the admissible flag roots and pushing forward with the
/// residue sum over the fiber roots.
pub fn kl_tower_oracle(lambda: &Partition, ctx: &GrassmannContext) -> Result<TowerClass> {
    let t = &ctx.theory;
    let n = ctx.n;
    let d = ctx.d;
    let r = lambda.len();
    let ells = ctx.ells(lambda);

    let fs = f_names(n);
    let qs = q_names(n, d);
    let mut vars: Vec<(&str, i64)> = fs.iter().map(|f| (f.as_str(), 1)).collect();
    vars.extend(qs.iter().map(|q| (q.as_str(), 1)));
    let al = VarAlphabet::new(&vars);
    // Track the maximal homogeneous degree of any intermediate: at stage i
    // (with avail_i admissible roots) the Vandermonde-cleared numerator has
    // degree (n-d) + deg(stage i+1 output) + C(avail_i - 1, 2), and the
    // residue sum lowers the degree by avail_i - 1. The +1 keeps every
    // cap-pruned term coefficient-pruned as well.
    let choose2 = |m: i64| if m >= 2 { m * (m - 1) / 2 } else { 0 };
    let mut stage_deg = 0i64;
    let mut max_deg = 0i64;
    for i in (1..=r).rev() {
        let avail = n as i64 - ells[i - 1] - (i as i64 - 1);
        let cleared = (n - d) as i64 + stage_deg + choose2(avail - 1);
        max_deg = max_deg.max(cleared);
        stage_deg = (n - d) as i64 + stage_deg - (avail - 1);
    }
    let cap = max_deg.max(0) as u32 + t.trunc() + 1;

    let q_vars: Vec<GradedSeries> = qs
        .iter()
        .map(|q| GradedSeries::var(t, &al, cap, q))
        .collect::<Result<_>>()?;

    fn rec(
        ctx: &GrassmannContext,
        ells: &[i64],
        fs: &[String],
        q_vars: &[GradedSeries],
        al: &Arc<VarAlphabet>,
        cap: u32,
        i: usize,
        chosen: &mut Vec<usize>,
    ) -> Result<GradedSeries> {
        let t = &ctx.theory;
        if i > ells.len() {
            return Ok(GradedSeries::one(t, al, cap));
        }
        let li = ells[i - 1] as usize;
        let avail: Vec<usize> = (li + 1..=ctx.n).filter(|b| !chosen.contains(b)).collect();
        if avail.is_empty() {
            return Err(Error::Inconsistency(format!(
                "no admissible flag roots at tower stage {i}"
            )));
        }
        let mut roots = Vec::new();
        let mut names: Vec<&str> = Vec::new();
        let mut numerators = Vec::new();
        for &b in &avail {
            chosen.push(b);
            let sub = rec(ctx, ells, fs, q_vars, al, cap, i + 1, chosen)?;
            chosen.pop();
            let fb = GradedSeries::var(t, al, cap, &fs[b - 1])?;
            let chi_fb = ctx.law.chi_at(&fb)?;
            // c_{n-d}((D_i/D_{i-1})-dual tensor E/S) at the line f_b.
            let mut alpha = GradedSeries::one(t, al, cap);
            for qv in q_vars {
                alpha = alpha.mul(&ctx.law.f_at(qv, &chi_fb)?)?;
            }
            roots.push(fb);
            names.push(&fs[b - 1]);
            numerators.push(alpha.mul(&sub)?);
        }
        residue_sum_sub(&ctx.law, &roots, &names, &numerators)
    }

    let mut chosen = Vec::new();
    let series = rec(ctx, &ells, &fs, &q_vars, &al, cap, 1, &mut chosen)?;
    Ok(TowerClass { series, n, d })
}

/// All coordinate fixed points of `Gr_d(n)`: the `d`-subsets of `{1..n}`.
pub fn fixed_point_subsets(d: usize, n: usize) -> Vec<Vec<usize>> {
    (1..=n).combinations(d).collect()
}

/// The alphabet `f1..fn, u` used when expanding symbol expressions at a
/// fixed point.
pub fn expansion_alphabet(n: usize) -> Arc<VarAlphabet> {
    let fs = f_names(n);
    let mut vars: Vec<(&str, i64)> = fs.iter().map(|f| (f.as_str(), 1)).collect();
    vars.push(("u", -1));
    VarAlphabet::new(&vars)
}

/// Cap guaranteeing exact `u^k`-coefficients of the relative Segre series
/// for every index reachable from a weight-`w` expression.
fn expansion_cap(theory: &TheorySpec, weight: u32) -> u32 {
    weight + 2 * theory.trunc()
}

/// Expand a symbol expression at the fixed point `S = span{f_b : b in
/// sigma}`: every `A_k^{(l)}` becomes the `u^k`-coefficient of
/// `S(S-dual - (E/F^l)-dual; u)` with `S`-dual roots `chi(f_{sigma_i})`
/// and `(E/F^l)`-dual roots `chi(f_1..f_l)`.
pub fn expand_at_fixed_point(
    expr: &ClassExpression,
    ctx: &GrassmannContext,
    sigma: &[usize],
) -> Result<GradedSeries> {
    let t = &ctx.theory;
    let tt = t.trunc() as i32;
    if sigma.len() != ctx.d {
        return Err(Error::Inconsistency("fixed point must be a d-subset".into()));
    }
    let cap = expansion_cap(t, ctx.dim_bound() as u32);
    let al = expansion_alphabet(ctx.n);
    let fs = f_names(ctx.n);

    // One relative Segre series per distinct corank; these depend only on
    // (sigma, l), so they are cached on the context across partitions.
    let mut rel: BTreeMap<i64, GradedSeries> = BTreeMap::new();
    for &l in &expr.ells {
        if rel.contains_key(&l) {
            continue;
        }
        let key = (sigma.to_vec(), l);
        if let Some(s) = ctx.rel_cache.borrow().get(&key) {
            rel.insert(l, s.clone());
            continue;
        }
        let s_roots: Vec<GradedSeries> = sigma
            .iter()
            .map(|&b| {
                let fb = GradedSeries::var(t, &al, cap, &fs[b - 1])?;
                ctx.law.chi_at(&fb)
            })
            .collect::<Result<_>>()?;
        let s_dual = Bundle::from_roots(t, &al, cap, s_roots)?;
        let b_roots: Vec<GradedSeries> = (1..=l as usize)
            .map(|b| {
                let fb = GradedSeries::var(t, &al, cap, &fs[b - 1])?;
                ctx.law.chi_at(&fb)
            })
            .collect::<Result<_>>()?;
        let b_dual = Bundle::from_roots(t, &al, cap, b_roots)?;
        let s = relative_segre(&ctx.law, &s_dual, &b_dual, "u")?;
        ctx.rel_cache
            .borrow_mut()
            .insert(key, s.series().clone());
        rel.insert(l, s.series().clone());
    }

    let mut acc = GradedSeries::zero(t, &al, cap);
    for (svec, c) in &expr.terms {
        // Symbols below index -T expand with coefficient depth below -T
        // in every term, so the whole product is pruned.
        if svec.iter().any(|&s| s < -tt) {
            continue;
        }
        let mut term = GradedSeries::constant(t, &al, cap, c.clone());
        for (i, &s) in svec.iter().enumerate() {
            term = term.mul(&rel[&expr.ells[i]].extract_in("u", s)?)?;
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Three-path consistency for one partition: the closed and iterative
/// expressions must agree structurally, and both must agree with the tower
/// oracle at every coordinate fixed point of the generic flag.
pub fn kl_paths_consistent(lambda: &Partition, ctx: &GrassmannContext) -> Result<()> {
    let closed = kl_closed(lambda, ctx)?;
    let iterative = kl_iterative(lambda, ctx)?;
    if closed != iterative {
        return Err(Error::Inconsistency(format!(
            "closed and iterative expressions differ for lambda = {lambda}"
        )));
    }
    let tower = kl_tower_oracle(lambda, ctx)?;
    let al = expansion_alphabet(ctx.n);
    let cap = expansion_cap(&ctx.theory, ctx.dim_bound() as u32);
    for sigma in fixed_point_subsets(ctx.d, ctx.n) {
        let lhs = expand_at_fixed_point(&closed, ctx, &sigma)?;
        let rhs = tower.restrict(&sigma, &al, cap)?;
        if lhs != rhs {
            return Err(Error::Inconsistency(format!(
                "tower oracle disagrees with Theorem B at fixed point {sigma:?} for lambda = {lambda}"
            )));
        }
    }
    Ok(())
}

/// Complete homogeneous symmetric polynomial `h_k(x_1..x_m)` built by
/// direct enumeration of monomials (independent of the Segre machinery).
fn complete_homogeneous(
    theory: &TheorySpec,
    al: &Arc<VarAlphabet>,
    cap: u32,
    vars: &[String],
    k: i32,
) -> Result<GradedSeries> {
    if k < 0 {
        return Ok(GradedSeries::zero(theory, al, cap));
    }
    let m = vars.len();
    let mut out = GradedSeries::zero(theory, al, cap);
    // Enumerate compositions of k into m parts.
    fn go(
        theory: &TheorySpec,
        al: &Arc<VarAlphabet>,
        cap: u32,
        vars: &[String],
        pos: usize,
        left: i32,
        current: &mut Vec<i32>,
        out: &mut GradedSeries,
    ) -> Result<()> {
        if pos + 1 == vars.len() {
            current.push(left);
            let mut mono = GradedSeries::one(theory, al, cap);
            for (i, &e) in current.iter().enumerate() {
                mono = mono.mul_var_pow(&vars[i], e)?;
            }
            *out = out.add(&mono)?;
            current.pop();
            return Ok(());
        }
        for e in 0..=left {
            current.push(e);
            go(theory, al, cap, vars, pos + 1, left - e, current, out)?;
            current.pop();
        }
        Ok(())
    }
    if m == 0 {
        if k == 0 {
            out = GradedSeries::one(theory, al, cap);
        }
        return Ok(out);
    }
    let mut current = Vec::new();
    go(theory, al, cap, vars, 0, k, &mut current, &mut out)?;
    Ok(out)
}

fn permutation_sign(perm: &[usize]) -> i64 {
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in (i + 1)..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Chow-ring specialization over a point with trivial flags: expand every
/// `A_k` as `h_k` of the `d` dual roots of `S`, assert equality with the
/// Jacobi-Trudi determinant `det(h_{lambda_i+j-i})` (independent Laplace
/// expansion) and with the bialternant Schur polynomial, and return the
/// Giambelli determinant in the Chern classes of the quotient bundle `Q`
/// (fresh variables `cQ1..`, with `c_k(Q) = 0` above the rank).
pub fn kl_schur_specialization(
    expr: &ClassExpression,
    ctx: &GrassmannContext,
) -> Result<GradedSeries> {
    let t = &ctx.theory;
    if t.kind() != TheoryKind::Additive {
        return Err(Error::Inconsistency(
            "Schur specialization is defined for the additive theory".into(),
        ));
    }
    let d = ctx.d;
    let r = expr.ells.len();
    let lambda: Vec<i32> = expr
        .ells
        .iter()
        .enumerate()
        .map(|(i0, &l)| (l - d as i64 + i0 as i64 + 1) as i32)
        .collect();
    let weight: i32 = lambda.iter().sum();

    let xs: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let vars: Vec<(&str, i64)> = xs.iter().map(|x| (x.as_str(), 1)).collect();
    let al = VarAlphabet::new(&vars);
    let cap = weight.max(0) as u32;

    // Path 1: the expression with A_k = h_k(x).
    let mut kappa = GradedSeries::zero(t, &al, cap);
    for (svec, c) in &expr.terms {
        let mut term = GradedSeries::constant(t, &al, cap, c.clone());
        for &s in svec {
            term = term.mul(&complete_homogeneous(t, &al, cap, &xs, s)?)?;
        }
        kappa = kappa.add(&term)?;
    }

    // Path 2: Jacobi-Trudi determinant det(h_{lambda_i + j - i}) by
    // permutation expansion.
    let mut jt = GradedSeries::zero(t, &al, cap);
    for perm in (0..r).permutations(r) {
        let mut term = GradedSeries::one(t, &al, cap);
        for (i, &j) in perm.iter().enumerate() {
            let k = lambda[i] + j as i32 - i as i32;
            term = term.mul(&complete_homogeneous(t, &al, cap, &xs, k)?)?;
        }
        let sign = permutation_sign(&perm);
        if sign < 0 {
            term = term.neg();
        }
        jt = jt.add(&term)?;
    }
    if r == 0 {
        jt = GradedSeries::one(t, &al, cap);
    }
    if kappa != jt {
        return Err(Error::Inconsistency(
            "additive Theorem B expression differs from the Jacobi-Trudi determinant".into(),
        ));
    }

    // Path 3: bialternant Schur polynomial s_lambda(x_1..x_d).
    let mut mu: Vec<i32> = lambda.clone();
    mu.resize(d, 0);
    let mut numer = GradedSeries::zero(t, &al, cap + (d * (d - 1) / 2) as u32);
    let big_cap = numer.cap();
    for perm in (0..d).permutations(d) {
        let mut term = GradedSeries::one(t, &al, big_cap);
        for (i, &j) in perm.iter().enumerate() {
            let e = mu[j] + (d - 1 - j) as i32;
            term = term.mul_var_pow(&xs[i], e)?;
        }
        let sign = permutation_sign(&perm);
        if sign < 0 {
            term = term.neg();
        }
        numer = numer.add(&term)?;
    }
    let mut schur = numer;
    for i in 0..d {
        for j in (i + 1)..d {
            schur = schur.divide_by_difference(&xs[i], &xs[j])?;
        }
    }
    let schur = schur.with_cap(cap);
    if kappa != schur {
        return Err(Error::Inconsistency(
            "additive Theorem B expression differs from the bialternant Schur polynomial".into(),
        ));
    }

    // Output: the Giambelli determinant det(c_{lambda_i+j-i}(Q)) with
    // c_k(Q) = h_k(x), as a polynomial in fresh variables cQ1.., applying
    // the rank vanishing c_k(Q) = 0 for k > n - d.
    let rank_q = (ctx.n - d) as i32;
    let max_idx = if r == 0 { 0 } else { (lambda[0] + r as i32 - 1).min(rank_q) };
    let cq: Vec<String> = (1..=max_idx.max(0)).map(|k| format!("cQ{k}")).collect();
    let cvars: Vec<(&str, i64)> = cq
        .iter()
        .enumerate()
        .map(|(k0, nm)| (nm.as_str(), k0 as i64 + 1))
        .collect();
    let cal = VarAlphabet::new(&cvars);
    let mut out = GradedSeries::zero(t, &cal, cap);
    for perm in (0..r).permutations(r) {
        let mut term = GradedSeries::one(t, &cal, cap);
        let mut dead = false;
        for (i, &j) in perm.iter().enumerate() {
            let k = lambda[i] + j as i32 - i as i32;
            if k < 0 || k > rank_q {
                dead = true;
                break;
            }
            if k > 0 {
                term = term.mul_var_pow(&cq[k as usize - 1], 1)?;
            }
        }
        if dead {
            continue;
        }
        if permutation_sign(&perm) < 0 {
            term = term.neg();
        }
        out = out.add(&term)?;
    }
    if r == 0 {
        out = GradedSeries::one(t, &cal, cap);
    }
    Ok(out)
}

/// Structural stability: the symbol expression of `kappa_lambda` must not
/// depend on `n`.
pub fn kl_stability_check(lambda: &[u32], d: usize, n: usize, n2: usize) -> Result<bool> {
    if n2 <= n {
        return Err(Error::InvalidPartition("need n' > n".into()));
    }
    let theory = TheorySpec::new(TheoryKind::Multiplicative, 6)?;
    for kind in [
        TheoryKind::Additive,
        TheoryKind::Multiplicative,
        TheoryKind::UniversalRational,
    ] {
        let t = TheorySpec::new(kind, theory.trunc())?;
        let p1 = validate_partition(lambda, d, n)?;
        let p2 = validate_partition(lambda, d, n2)?;
        let c1 = GrassmannContext::new(&t, d, n, EvalMode::Expression)?;
        let c2 = GrassmannContext::new(&t, d, n2, EvalMode::Expression)?;
        if kl_closed(&p1, &c1)? != kl_closed(&p2, &c2)? {
            return Ok(false);
        }
        if theoremB_argument(&p1, &c1)? != theoremB_argument(&p2, &c2)? {
            return Ok(false);
        }
    }
    Ok(true)
}
