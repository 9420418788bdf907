//! Chern polynomials, the `w`/`w-tilde` correction classes, Segre and
//! relative Segre generating series, and the residue push-forward oracle.
//!
//! Bundles are presented by formal Chern-root series over a shared alphabet
//! that also contains a degree-(-1) variable `u` for the generating
//! functions. Generating series such as `S(E;u)`, `w(E;u)` and `P(u)` are
//! homogeneous of total degree 0, so a cap of `2T` on the positive weighted
//! degree keeps every coefficient of `u^m` exact for `|m| <= T`.

use std::sync::Arc;

use crate::coeff::TheorySpec;
use crate::fgl::FormalGroupLaw;
use crate::series::{p_script_series, GradedSeries, VarAlphabet};
use crate::{Error, Result};

/// The cap used for generating series in `u` over a theory truncated at `T`.
pub fn useries_cap(theory: &TheorySpec) -> u32 {
    2 * theory.trunc()
}

fn choose2(n: usize) -> u32 {
    (n * n.saturating_sub(1) / 2) as u32
}

/// A vector bundle presented by formal Chern-root series over a common
/// alphabet. Rank zero (no roots) stands for the zero bundle.
#[derive(Debug, Clone)]
pub struct Bundle {
    theory: TheorySpec,
    alphabet: Arc<VarAlphabet>,
    cap: u32,
    roots: Vec<GradedSeries>,
}

impl Bundle {
    pub fn from_roots(
        theory: &TheorySpec,
        alphabet: &Arc<VarAlphabet>,
        cap: u32,
        roots: Vec<GradedSeries>,
    ) -> Result<Self> {
        for r in &roots {
            if r.theory() != theory || **r.alphabet() != **alphabet || r.cap() != cap {
                return Err(Error::AlphabetMismatch);
            }
        }
        Ok(Bundle {
            theory: theory.clone(),
            alphabet: Arc::clone(alphabet),
            cap,
            roots,
        })
    }

    /// A bundle whose roots are the named degree-1 variables.
    pub fn from_root_vars(
        theory: &TheorySpec,
        alphabet: &Arc<VarAlphabet>,
        cap: u32,
        names: &[&str],
    ) -> Result<Self> {
        let roots = names
            .iter()
            .map(|n| GradedSeries::var(theory, alphabet, cap, n))
            .collect::<Result<_>>()?;
        Self::from_roots(theory, alphabet, cap, roots)
    }

    pub fn rank(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[GradedSeries] {
        &self.roots
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

    /// The variable names of the roots; fails when a root is not a plain
    /// alphabet variable (the residue oracle needs generic variable roots).
    pub fn root_var_names(&self) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(self.roots.len());
        for r in &self.roots {
            let mut found = None;
            let mut terms = r.terms();
            if let (Some((exps, c)), None) = (terms.next(), terms.next()) {
                if c.is_one() && exps.iter().map(|&x| x.unsigned_abs()).sum::<u32>() == 1 {
                    if let Some(i) = exps.iter().position(|&x| x == 1) {
                        found = Some(self.alphabet.name(i).to_string());
                    }
                }
            }
            match found {
                Some(n) => out.push(n),
                None => {
                    return Err(Error::Inconsistency(
                        "bundle root is not a plain variable".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

/// Substitute `var -> -var` (flip the sign of every odd power).
pub fn negate_var(series: &GradedSeries, var: &str) -> Result<GradedSeries> {
    let idx = series.alphabet().index(var)?;
    let mut out = GradedSeries::zero(series.theory(), series.alphabet(), series.cap());
    for (e, c) in series.terms() {
        let t = if e[idx].rem_euclid(2) == 1 { c.neg() } else { c.clone() };
        out = out.add(&GradedSeries::constant(
            series.theory(),
            series.alphabet(),
            series.cap(),
            t,
        )
        .substitute_monomial(e)?)?;
    }
    Ok(out)
}

// Small internal helper used by negate_var to re-attach an exponent vector.
trait MonomialShift {
    fn substitute_monomial(&self, exps: &[i32]) -> Result<GradedSeries>;
}

impl MonomialShift for GradedSeries {
    fn substitute_monomial(&self, exps: &[i32]) -> Result<GradedSeries> {
        let mut out = self.clone();
        for (i, &x) in exps.iter().enumerate() {
            if x != 0 {
                out = out.mul_var_pow(self.alphabet().name(i).to_string().as_str(), x)?;
            }
        }
        Ok(out)
    }
}

/// The Chern polynomial `c(E;u) = prod_q (1 + x_q u)`.
pub fn chern_poly(bundle: &Bundle, uvar: &str) -> Result<GradedSeries> {
    let one = GradedSeries::one(&bundle.theory, &bundle.alphabet, bundle.cap);
    let mut out = one.clone();
    for root in &bundle.roots {
        out = out.mul(&one.add(&root.mul_var_pow(uvar, 1)?)?)?;
    }
    Ok(out)
}

/// Chern series of a virtual difference, `c(E-F;u) = c(E;u)/c(F;u)`.
pub fn chern_poly_virtual(e: &Bundle, f: &Bundle, uvar: &str) -> Result<GradedSeries> {
    chern_poly(e, uvar)?.divide_exact(&chern_poly(f, uvar)?)
}

/// The classes `w_{-j}` for `j = 0..=T`, extracted as the `z^j`-coefficients
/// of `prod_q P(z, x_q)`.
pub fn w_coefficients(law: &FormalGroupLaw, bundle: &Bundle) -> Result<Vec<GradedSeries>> {
    let t = &bundle.theory;
    let zname = "__segre_z";
    let ext = bundle.alphabet.extended(&[(zname, 1)]);
    let z = GradedSeries::var(t, &ext, bundle.cap, zname)?;
    let mut prod = GradedSeries::one(t, &ext, bundle.cap);
    for root in &bundle.roots {
        prod = prod.mul(&law.p_at(&z, &root.embed(&ext, bundle.cap)?)?)?;
    }
    let mut out = Vec::new();
    for j in 0..=t.trunc() {
        out.push(prod.extract_in(zname, j as i32)?.drop_var(zname)?);
    }
    Ok(out)
}

/// `w(E;u) = sum_j w_{-j}(E) u^{-j}`.
pub fn w_series(law: &FormalGroupLaw, bundle: &Bundle, uvar: &str) -> Result<GradedSeries> {
    let coeffs = w_coefficients(law, bundle)?;
    let mut out = GradedSeries::zero(&bundle.theory, &bundle.alphabet, bundle.cap);
    for (j, wj) in coeffs.iter().enumerate() {
        out = out.add(&wj.embed(&bundle.alphabet, bundle.cap)?.mul_var_pow(uvar, -(j as i32))?)?;
    }
    Ok(out)
}

/// `w-tilde(E;u) = 1 / w(E;u)`.
pub fn w_tilde_series(law: &FormalGroupLaw, bundle: &Bundle, uvar: &str) -> Result<GradedSeries> {
    w_series(law, bundle, uvar)?.invert()
}

/// `w(E-F;u) = w(E;u)/w(F;u)`.
pub fn w_virtual(
    law: &FormalGroupLaw,
    e: &Bundle,
    f: &Bundle,
    uvar: &str,
) -> Result<GradedSeries> {
    w_series(law, e, uvar)?.divide_exact(&w_series(law, f, uvar)?)
}

/// `w-tilde(E-F;u) = w-tilde(E;u)/w-tilde(F;u)`.
pub fn w_tilde_virtual(
    law: &FormalGroupLaw,
    e: &Bundle,
    f: &Bundle,
    uvar: &str,
) -> Result<GradedSeries> {
    w_tilde_series(law, e, uvar)?.divide_exact(&w_tilde_series(law, f, uvar)?)
}

/// A Segre-type generating series in `u`; coefficients of `u^m` are exact
/// for `|m| <= T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegreSeries {
    series: GradedSeries,
    uvar: String,
}

impl SegreSeries {
    pub fn from_parts(series: GradedSeries, uvar: &str) -> Self {
        SegreSeries {
            series,
            uvar: uvar.to_string(),
        }
    }

    pub fn series(&self) -> &GradedSeries {
        &self.series
    }

    pub fn uvar(&self) -> &str {
        &self.uvar
    }

    /// The class `S_m` (the `u^m`-coefficient, with the `u` slot zeroed).
    pub fn coefficient(&self, m: i32) -> Result<GradedSeries> {
        let t = self.series.theory().trunc();
        if m.unsigned_abs() > t {
            return Err(Error::OutOfTruncation(m.unsigned_abs(), t));
        }
        self.series.extract_in(&self.uvar, m)
    }
}

/// The closed formula `S(E;u) = P(u) * w-tilde(E;u) / c(E;-u)`.
pub fn segre_closed(law: &FormalGroupLaw, bundle: &Bundle, uvar: &str) -> Result<SegreSeries> {
    let t = &bundle.theory;
    let p = p_script_series(t, &bundle.alphabet, bundle.cap, uvar)?;
    let wt = w_tilde_series(law, bundle, uvar)?;
    let c_neg = negate_var(&chern_poly(bundle, uvar)?, uvar)?;
    let series = p.mul(&wt)?.divide_exact(&c_neg)?;
    Ok(SegreSeries::from_parts(series, uvar))
}

/// The symmetric residue sum `sum_k num_k / prod_{q != k} F(r_k, chi(r_q))`.
///
/// Each `roots[k]` must be a series in the single variable `root_vars[k]`
/// with zero constant term, so that `F(r_k, chi(r_q))` is divisible by
/// `(root_vars[k] - root_vars[q])` with a unit cofactor. Individual summands
/// are not power series; the sum is computed by clearing to the common
/// Vandermonde denominator and dividing out exactly.
pub fn residue_sum(
    law: &FormalGroupLaw,
    roots: &[GradedSeries],
    root_vars: &[&str],
    numerators: &[GradedSeries],
) -> Result<GradedSeries> {
    residue_sum_impl(law, roots, root_vars, numerators, false)
}

/// As [`residue_sum`], but with the Euler factors of the sub-line
/// convention: the denominator at root `k` is `prod_{q != k} F(r_q,
/// chi(r_k))` (tangent weights of the bundle of line subbundles rather
/// than of the dual projective bundle).
pub fn residue_sum_sub(
    law: &FormalGroupLaw,
    roots: &[GradedSeries],
    root_vars: &[&str],
    numerators: &[GradedSeries],
) -> Result<GradedSeries> {
    residue_sum_impl(law, roots, root_vars, numerators, true)
}

fn residue_sum_impl(
    law: &FormalGroupLaw,
    roots: &[GradedSeries],
    root_vars: &[&str],
    numerators: &[GradedSeries],
    sub_convention: bool,
) -> Result<GradedSeries> {
    let m = roots.len();
    if m == 0 || numerators.len() != m || root_vars.len() != m {
        return Err(Error::Inconsistency("malformed residue sum input".into()));
    }
    if m == 1 {
        return Ok(numerators[0].clone());
    }
    let theory = roots[0].theory().clone();
    let alphabet = Arc::clone(roots[0].alphabet());
    let cap = roots[0].cap();

    // Unit cofactors: F(r_k, chi(r_q)) = (v_k - v_q) * W_kq with W_kq a unit.
    let chis: Vec<GradedSeries> = roots.iter().map(|r| law.chi_at(r)).collect::<Result<_>>()?;
    let cleared_summand = |k: usize, inv_w: &GradedSeries| -> Result<GradedSeries> {
        let mut term = numerators[k].mul(inv_w)?;
        for a in 0..m {
            for b in (a + 1)..m {
                if a == k || b == k {
                    continue;
                }
                term = term
                    .mul_var_pow(root_vars[a], 1)?
                    .sub(&term.mul_var_pow(root_vars[b], 1)?)?;
            }
        }
        Ok(term)
    };
    let unit_inverse = |k: usize| -> Result<GradedSeries> {
        let mut prod = GradedSeries::one(&theory, &alphabet, cap);
        for q in 0..m {
            if q == k {
                continue;
            }
            let f = if sub_convention {
                law.f_at(&roots[q], &chis[k])?
            } else {
                law.f_at(&roots[k], &chis[q])?
            };
            prod = prod.mul(&f.divide_by_difference(root_vars[k], root_vars[q])?)?;
        }
        prod.invert()
    };

    // A fully symmetric input (the transposition v_0 <-> v_k carries the
    // root/numerator data at slot 0 to slot k and fixes the rest) makes
    // every cleared summand a signed variable-swap image of the first:
    // swapping v_0 and v_k flips exactly the k-1 Vandermonde factors that
    // pair v_0 with v_1..v_{k-1}, giving the sign (-1)^{k-1}.
    let mut symmetric = true;
    for k in 1..m {
        let swap = |s: &GradedSeries| s.swap_vars(root_vars[0], root_vars[k]);
        if swap(&roots[0])? != roots[k] || swap(&numerators[0])? != numerators[k] {
            symmetric = false;
            break;
        }
        if (1..m)
            .filter(|&q| q != k)
            .any(|q| roots[q].swap_vars(root_vars[0], root_vars[k]).ok().as_ref() != Some(&roots[q]))
        {
            symmetric = false;
            break;
        }
    }

    // Clear to the common denominator V = prod_{a<b} (v_a - v_b):
    //   sum_k num_k * invW_k * (-1)^k * V-hat_k, then divide by V.
    let mut total = GradedSeries::zero(&theory, &alphabet, cap);
    if symmetric {
        let first = cleared_summand(0, &unit_inverse(0)?)?;
        total = total.add(&first)?;
        for k in 1..m {
            let image = first.swap_vars(root_vars[0], root_vars[k])?;
            // (-1)^k from the alternating sum times (-1)^{k-1} from the
            // swapped Vandermonde factors: every image enters negated.
            total = total.sub(&image)?;
        }
    } else {
        for k in 0..m {
            let mut term = cleared_summand(k, &unit_inverse(k)?)?;
            if k % 2 == 1 {
                term = term.neg();
            }
            total = total.add(&term)?;
        }
    }
    for a in 0..m {
        for b in (a + 1)..m {
            total = total.divide_by_difference(root_vars[a], root_vars[b])?;
        }
    }
    Ok(total)
}

/// The defining push-forward `S_m(E) = pi_*(tau^{m+e+n-1})` over
/// `P^*(E + O^n)`, computed by the residue formula. Trivial padding
/// summands are handled by generic auxiliary roots specialized to zero,
/// exactly as in the independence-of-`n` argument.
pub fn segre_residue_oracle(
    law: &FormalGroupLaw,
    bundle: &Bundle,
    m: i32,
    padding: u32,
) -> Result<GradedSeries> {
    let names = bundle.root_var_names()?;
    let e = bundle.rank();
    let n_tot = e + padding as usize;
    let p = m + n_tot as i32 - 1;
    if p < 0 {
        return Err(Error::Inconsistency(format!(
            "padding {padding} too small for degree m = {m} at rank {e}"
        )));
    }
    let t = &bundle.theory;
    let pad_names: Vec<String> = (1..=padding).map(|i| format!("__pad{i}")).collect();
    let extra: Vec<(&str, i64)> = pad_names.iter().map(|n| (n.as_str(), 1)).collect();
    let ext = bundle.alphabet.extended(&extra);
    // Every intermediate is homogeneous of total degree at most
    // p + C(n-1,2), except the degree-1 factors F(x_k, chi(x_q)); the +1
    // keeps the cap above (homogeneous degree + T) for all of them, so any
    // cap-pruned term is also coefficient-pruned (genuinely zero).
    let work_cap = p as u32 + choose2(n_tot.saturating_sub(1)) + t.trunc() + 1;

    let mut all_names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    all_names.extend(pad_names.iter().map(|s| s.as_str()));
    let roots: Vec<GradedSeries> = all_names
        .iter()
        .map(|v| GradedSeries::var(t, &ext, work_cap, v))
        .collect::<Result<_>>()?;
    let numerators: Vec<GradedSeries> = roots
        .iter()
        .map(|r| r.pow(p as u32))
        .collect::<Result<_>>()?;

    let mut out = residue_sum(law, &roots, &all_names, &numerators)?;
    for pn in &pad_names {
        out = out.extract_in(pn, 0)?.drop_var(pn)?;
    }
    let out = out.embed(&bundle.alphabet, bundle.cap)?;
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    if !out.is_symmetric_in(&name_refs)? {
        return Err(Error::NotSymmetric);
    }
    Ok(out)
}

/// `R(E;u) = S(E;u) c(E;-u)`; asserts the vanishing `R_m = 0` for `m > 0`
/// and the identity `R_{-l} = sum_s w-tilde_{-s} [P^{l-s}]` before returning.
pub fn r_series(law: &FormalGroupLaw, bundle: &Bundle, uvar: &str) -> Result<GradedSeries> {
    let t = &bundle.theory;
    let s = segre_closed(law, bundle, uvar)?;
    let c_neg = negate_var(&chern_poly(bundle, uvar)?, uvar)?;
    let r = s.series().mul(&c_neg)?;
    let pw = p_script_series(t, &bundle.alphabet, bundle.cap, uvar)?
        .mul(&w_tilde_series(law, bundle, uvar)?)?;
    for mm in -(t.trunc() as i32)..=(t.trunc() as i32) {
        let rm = r.extract_in(uvar, mm)?;
        if mm > 0 && !rm.is_zero() {
            return Err(Error::Inconsistency(format!(
                "R_{mm} does not vanish for a rank-{} bundle",
                bundle.rank()
            )));
        }
        if rm != pw.extract_in(uvar, mm)? {
            return Err(Error::Inconsistency(format!(
                "R_{mm} differs from the P(u) w-tilde expansion"
            )));
        }
    }
    Ok(r)
}

/// The relative Segre series `S(E-F;u) = S(E;u) c(F;-u) w(F;u)`.
pub fn relative_segre(
    law: &FormalGroupLaw,
    e: &Bundle,
    f: &Bundle,
    uvar: &str,
) -> Result<SegreSeries> {
    let s = segre_closed(law, e, uvar)?;
    let cf = negate_var(&chern_poly(f, uvar)?, uvar)?;
    let wf = w_series(law, f, uvar)?;
    Ok(SegreSeries::from_parts(
        s.series().mul(&cf)?.mul(&wf)?,
        uvar,
    ))
}

/// The push-forward `pi_*(tau^s c_f(Q tensor F-dual))` over `P^*(E)`,
/// computed by expanding the twisted Chern class in `tau` and pushing each
/// power forward with the residue formula; asserts equality with
/// `S_{f-e+1+s}(E-F)` before returning the class.
pub fn pushforward_cf_twist(
    law: &FormalGroupLaw,
    e_bundle: &Bundle,
    f_bundle: &Bundle,
    s: u32,
    uvar: &str,
) -> Result<GradedSeries> {
    let e = e_bundle.rank();
    let f = f_bundle.rank();
    if e == 0 {
        return Err(Error::Inconsistency("projective bundle needs rank >= 1".into()));
    }
    let names = e_bundle.root_var_names()?;
    let t = &e_bundle.theory;
    let wall = f as u32 + s + 2 * t.trunc() + choose2(e) + 2;

    let tau = "__tau";
    let ext = e_bundle.alphabet.extended(&[(tau, 1)]);
    let tau_v = GradedSeries::var(t, &ext, wall, tau)?;
    let mut g = tau_v.pow(s)?;
    for y in f_bundle.roots() {
        g = g.mul(&law.f_at(&tau_v, &law.chi_at(&y.embed(&ext, wall)?)?)?)?;
    }

    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let hi = g.exponent_range(tau)?.map(|(_, h)| h).unwrap_or(0);
    let mut total: Option<GradedSeries> = None;
    for p in 0..=hi {
        let g_p = g.extract_in(tau, p)?.drop_var(tau)?;
        if g_p.is_zero() {
            continue;
        }
        let roots: Vec<GradedSeries> = name_refs
            .iter()
            .map(|v| GradedSeries::var(t, g_p.alphabet(), wall, v))
            .collect::<Result<_>>()?;
        let numerators: Vec<GradedSeries> = roots
            .iter()
            .map(|r| r.pow(p as u32))
            .collect::<Result<_>>()?;
        let pushed = residue_sum(law, &roots, &name_refs, &numerators)?;
        let term = g_p.mul(&pushed)?;
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(&term)?,
        });
    }
    let total = match total {
        Some(x) => x.embed(&e_bundle.alphabet, e_bundle.cap)?,
        None => GradedSeries::zero(t, &e_bundle.alphabet, e_bundle.cap),
    };

    let m = f as i32 - e as i32 + 1 + s as i32;
    if m.unsigned_abs() <= t.trunc() {
        let rel = relative_segre(law, e_bundle, f_bundle, uvar)?.coefficient(m)?;
        if rel != total {
            return Err(Error::Inconsistency(format!(
                "push-forward disagrees with S_{m}(E-F) for (e,f,s)=({e},{f},{s})"
            )));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{make_theory, projective_class, CoeffElement, TheoryKind};
    use crate::fgl::build_fgl;

    fn setup(kind: TheoryKind, t: u32, roots: &[&str]) -> (TheorySpec, FormalGroupLaw, Bundle) {
        let th = make_theory(kind, t).unwrap();
        let law = build_fgl(&th).unwrap();
        let mut vars: Vec<(&str, i64)> = roots.iter().map(|&r| (r, 1)).collect();
        vars.push(("u", -1));
        let al = VarAlphabet::new(&vars);
        let b = Bundle::from_root_vars(&th, &al, useries_cap(&th), roots).unwrap();
        (th, law, b)
    }

    #[test]
    fn chern_poly_rank_one() {
        let (th, _, b) = setup(TheoryKind::Additive, 4, &["x"]);
        let c = chern_poly(&b, "u").unwrap();
        let one = GradedSeries::one(&th, b.alphabet(), b.cap());
        let x = GradedSeries::var(&th, b.alphabet(), b.cap(), "x").unwrap();
        assert_eq!(c, one.add(&x.mul_var_pow("u", 1).unwrap()).unwrap());
    }

    #[test]
    fn whitney_product() {
        let (th, _, _) = setup(TheoryKind::Additive, 4, &["x1", "x2", "x3"]);
        let al = VarAlphabet::new(&[("x1", 1), ("x2", 1), ("x3", 1), ("u", -1)]);
        let cap = useries_cap(&th);
        let e = Bundle::from_root_vars(&th, &al, cap, &["x1", "x2"]).unwrap();
        let g = Bundle::from_root_vars(&th, &al, cap, &["x3"]).unwrap();
        let eg = Bundle::from_root_vars(&th, &al, cap, &["x1", "x2", "x3"]).unwrap();
        let lhs = chern_poly(&eg, "u").unwrap();
        let rhs = chern_poly(&e, "u").unwrap().mul(&chern_poly(&g, "u").unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn w_is_trivial_in_additive() {
        let (th, law, b) = setup(TheoryKind::Additive, 5, &["x1", "x2"]);
        let w = w_series(&law, &b, "u").unwrap();
        assert!(w.is_one());
        assert!(w_tilde_series(&law, &b, "u").unwrap().is_one());
        let _ = th;
    }

    #[test]
    fn multiplicative_w_rank_one() {
        // prod_q P(z, x_q) = 1/(1-bx): no z-dependence, so w_{-s} = 0 for
        // s >= 1 and w_0 = 1/(1-bx).
        let (th, law, b) = setup(TheoryKind::Multiplicative, 4, &["x"]);
        let coeffs = w_coefficients(&law, &b).unwrap();
        let al = b.alphabet();
        let one = GradedSeries::one(&th, al, b.cap());
        let x = GradedSeries::var(&th, al, b.cap(), "x").unwrap();
        let bgen = CoeffElement::generator(&th, 0);
        let expected_w0 = one.divide_exact(&one.sub(&x.scale(&bgen)).unwrap()).unwrap();
        assert_eq!(coeffs[0].embed(al, b.cap()).unwrap(), expected_w0);
        for c in &coeffs[1..] {
            assert!(c.is_zero());
        }
        // w-tilde(E;u) = 1 - bx = c(E;-b).
        let wt = w_tilde_series(&law, &b, "u").unwrap();
        assert_eq!(wt, one.sub(&x.scale(&bgen)).unwrap());
    }

    #[test]
    fn w_multiplicativity() {
        let th = make_theory(TheoryKind::UniversalRational, 4).unwrap();
        let law = build_fgl(&th).unwrap();
        let al = VarAlphabet::new(&[("x1", 1), ("x2", 1), ("x3", 1), ("u", -1)]);
        let cap = useries_cap(&th);
        let e = Bundle::from_root_vars(&th, &al, cap, &["x1", "x2"]).unwrap();
        let f = Bundle::from_root_vars(&th, &al, cap, &["x3"]).unwrap();
        let ef = Bundle::from_root_vars(&th, &al, cap, &["x1", "x2", "x3"]).unwrap();
        let lhs = w_series(&law, &ef, "u").unwrap();
        let rhs = w_series(&law, &e, "u").unwrap().mul(&w_series(&law, &f, "u").unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn additive_segre_is_complete_symmetric() {
        // S_m = h_m(x1, x2) for m >= 0, and S_m = 0 for m < 0.
        let (th, law, b) = setup(TheoryKind::Additive, 5, &["x1", "x2"]);
        let s = segre_closed(&law, &b, "u").unwrap();
        assert!(s.coefficient(0).unwrap().is_one());
        assert!(s.coefficient(-1).unwrap().is_zero());
        let al = b.alphabet();
        let x1 = GradedSeries::var(&th, al, b.cap(), "x1").unwrap();
        let x2 = GradedSeries::var(&th, al, b.cap(), "x2").unwrap();
        let h1 = x1.add(&x2).unwrap();
        assert_eq!(s.coefficient(1).unwrap(), h1);
        // h_2 = x1^2 + x1 x2 + x2^2
        let h2 = x1
            .pow(2)
            .unwrap()
            .add(&x1.mul(&x2).unwrap())
            .unwrap()
            .add(&x2.pow(2).unwrap())
            .unwrap();
        assert_eq!(s.coefficient(2).unwrap(), h2);
    }

    #[test]
    fn multiplicative_segre_closed_form() {
        // S(E;u) = (1 - b u^{-1})^{-1} c(E;-b) / c(E;-u).
        let (th, law, b) = setup(TheoryKind::Multiplicative, 4, &["x1", "x2"]);
        let al = b.alphabet();
        let cap = b.cap();
        let one = GradedSeries::one(&th, al, cap);
        let bgen = CoeffElement::generator(&th, 0);
        let bu = GradedSeries::constant(&th, al, cap, bgen.clone())
            .mul_var_pow("u", -1)
            .unwrap();
        let p = one.divide_exact(&one.sub(&bu).unwrap()).unwrap();
        let x1 = GradedSeries::var(&th, al, cap, "x1").unwrap();
        let x2 = GradedSeries::var(&th, al, cap, "x2").unwrap();
        let c_mb = one
            .sub(&x1.scale(&bgen)).unwrap()
            .mul(&one.sub(&x2.scale(&bgen)).unwrap())
            .unwrap();
        let c_mu = negate_var(&chern_poly(&b, "u").unwrap(), "u").unwrap();
        let expected = p.mul(&c_mb).unwrap().divide_exact(&c_mu).unwrap();
        let got = segre_closed(&law, &b, "u").unwrap();
        for m in -4..=4 {
            assert_eq!(
                got.coefficient(m).unwrap(),
                expected.extract_in("u", m).unwrap(),
                "S_{m}"
            );
        }
    }

    #[test]
    fn residue_oracle_matches_closed_small() {
        for kind in [
            TheoryKind::Additive,
            TheoryKind::Multiplicative,
            TheoryKind::UniversalRational,
        ] {
            let (_, law, b) = setup(kind, 3, &["x1", "x2"]);
            let closed = segre_closed(&law, &b, "u").unwrap();
            for m in -2..=2 {
                let pad = (-m - 1).max(0) as u32;
                let oracle = segre_residue_oracle(&law, &b, m, pad).unwrap();
                assert_eq!(oracle, closed.coefficient(m).unwrap(), "{kind:?} m={m}");
            }
        }
    }

    #[test]
    fn residue_oracle_padding_invariance() {
        let (_, law, b) = setup(TheoryKind::Multiplicative, 3, &["x1", "x2"]);
        let m = -1;
        let base = segre_residue_oracle(&law, &b, m, 0).unwrap();
        for extra in 1..=2 {
            assert_eq!(segre_residue_oracle(&law, &b, m, extra).unwrap(), base);
        }
    }

    #[test]
    fn projective_class_residue_identity() {
        // [P^i] = pi_*(tau^i) over P^i, via generic roots specialized to 0.
        let th = make_theory(TheoryKind::UniversalRational, 4).unwrap();
        let law = build_fgl(&th).unwrap();
        for i in 0..=3u32 {
            let names: Vec<String> = (1..=i + 1).map(|k| format!("y{k}")).collect();
            let mut vars: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), 1)).collect();
            vars.push(("u", -1));
            let al = VarAlphabet::new(&vars);
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            let b = Bundle::from_root_vars(&th, &al, useries_cap(&th), &refs).unwrap();
            let mut cls = segre_residue_oracle(&law, &b, -(i as i32), 0).unwrap();
            for n in &names {
                cls = cls.extract_in(n, 0).unwrap();
            }
            let expected = projective_class(&th, i).unwrap();
            assert_eq!(cls.constant_term(), expected, "[P^{i}]");
            assert!(cls.terms().all(|(e, _)| e.iter().all(|&x| x == 0)));
        }
    }

    #[test]
    fn r_series_assertions_hold() {
        for kind in [
            TheoryKind::Additive,
            TheoryKind::Multiplicative,
            TheoryKind::UniversalRational,
        ] {
            let (_, law, b) = setup(kind, 3, &["x1", "x2"]);
            let r = r_series(&law, &b, "u").unwrap();
            if kind == TheoryKind::Additive {
                assert!(r.is_one());
            }
        }
    }

    #[test]
    fn relative_segre_of_e_minus_e_is_p_script() {
        for kind in [
            TheoryKind::Additive,
            TheoryKind::Multiplicative,
            TheoryKind::UniversalRational,
        ] {
            let (th, law, b) = setup(kind, 3, &["x1", "x2"]);
            let rel = relative_segre(&law, &b, &b, "u").unwrap();
            let p = p_script_series(&th, b.alphabet(), b.cap(), "u").unwrap();
            for m in -3..=3 {
                assert_eq!(
                    rel.coefficient(m).unwrap(),
                    p.extract_in("u", m).unwrap(),
                    "{kind:?} m={m}"
                );
            }
        }
    }

    #[test]
    fn relative_segre_with_zero_f_is_plain_segre() {
        let (th, law, e) = setup(TheoryKind::Multiplicative, 3, &["x1", "x2"]);
        let zero_f = Bundle::from_root_vars(&th, e.alphabet(), e.cap(), &[]).unwrap();
        let rel = relative_segre(&law, &e, &zero_f, "u").unwrap();
        let plain = segre_closed(&law, &e, "u").unwrap();
        assert_eq!(rel.series(), plain.series());
    }

    #[test]
    fn pushforward_twist_agrees_with_relative_segre() {
        let th = make_theory(TheoryKind::Multiplicative, 3).unwrap();
        let law = build_fgl(&th).unwrap();
        let al = VarAlphabet::new(&[("x1", 1), ("x2", 1), ("y1", 1), ("u", -1)]);
        let cap = useries_cap(&th);
        let e = Bundle::from_root_vars(&th, &al, cap, &["x1", "x2"]).unwrap();
        let f = Bundle::from_root_vars(&th, &al, cap, &["y1"]).unwrap();
        // The equality assertion lives inside the call.
        for s in 0..=1 {
            pushforward_cf_twist(&law, &e, &f, s, "u").unwrap();
        }
    }

    #[test]
    fn pushforward_twist_zero_f_reduces_to_segre() {
        let (th, law, e) = setup(TheoryKind::Additive, 3, &["x1", "x2"]);
        let zero_f = Bundle::from_root_vars(&th, e.alphabet(), e.cap(), &[]).unwrap();
        let got = pushforward_cf_twist(&law, &e, &zero_f, 2, "u").unwrap();
        let s = segre_closed(&law, &e, "u").unwrap();
        assert_eq!(got, s.coefficient(2 - 2 + 1).unwrap());
    }
}
