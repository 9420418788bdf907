//! Formal group laws: the law `F(u,v)` of the chosen theory, its formal
//! inverse `chi(u)`, axiom verification, and the factor series `P(z,x)`
//! defined by `F(z, chi(x)) = (z - x) P(z, x)`.

use std::sync::Arc;

use crate::coeff::{CoeffElement, TheoryKind, TheorySpec};
use crate::series::{GradedSeries, VarAlphabet};
use crate::{Error, Result};

/// The formal group law of a theory together with the derived series.
///
/// `f` lives over `(u, v)`, `chi` over `(u)`, and `p` over `(z, x)`; all are
/// truncated so that coefficient degrees down to `-T` are exact, which for
/// the degree-1 law means monomials up to total degree `T + 1`.
#[derive(Debug, Clone)]
pub struct FormalGroupLaw {
    theory: TheorySpec,
    f: GradedSeries,
    chi: GradedSeries,
    p: GradedSeries,
}

/// Monomial cap used for the degree-1 series of the law.
fn law_cap(theory: &TheorySpec) -> u32 {
    theory.trunc() + 1
}

/// Construct the law of the theory and run the axiom checks.
pub fn build_fgl(theory: &TheorySpec) -> Result<FormalGroupLaw> {
    let cap = law_cap(theory);
    let uv = VarAlphabet::roots(&["u", "v"]);
    let u = GradedSeries::var(theory, &uv, cap, "u")?;
    let v = GradedSeries::var(theory, &uv, cap, "v")?;
    let f = match theory.kind() {
        TheoryKind::Additive => u.add(&v)?,
        TheoryKind::Multiplicative => {
            let b = CoeffElement::generator(theory, 0);
            u.add(&v)?.sub(&u.mul(&v)?.scale(&b))?
        }
        TheoryKind::UniversalRational => {
            let exp = exp_series(theory)?;
            let s = log_series_at(theory, &u)?.add(&log_series_at(theory, &v)?)?;
            exp.compose(&[("w", &s)], false)?
        }
    };

    let chi = solve_formal_inverse(theory, &f)?;
    let p = p_factor_of(theory, &f, &chi)?;
    let law = FormalGroupLaw {
        theory: theory.clone(),
        f,
        chi,
        p,
    };
    let report = law.verify_axioms()?;
    if let Some(bad) = report.checks.iter().find(|c| !c.pass) {
        return Err(Error::AxiomFailure(format!("{}: {}", bad.name, bad.detail)));
    }
    Ok(law)
}

/// `log t = t + m1 t^2 + ... + mT t^{T+1}` evaluated at a series argument.
fn log_series_at(theory: &TheorySpec, arg: &GradedSeries) -> Result<GradedSeries> {
    let mut out = arg.clone();
    let mut power = arg.clone();
    for i in 1..=theory.trunc() {
        power = power.mul(arg)?;
        out = out.add(&power.scale(&CoeffElement::generator(theory, i as usize - 1)))?;
    }
    Ok(out)
}

/// The compositional inverse of `log`, as a series in `w`.
fn exp_series(theory: &TheorySpec) -> Result<GradedSeries> {
    let cap = law_cap(theory);
    let w_al = VarAlphabet::roots(&["w"]);
    let w = GradedSeries::var(theory, &w_al, cap, "w")?;
    let mut g = w.clone();
    // Fixed-point iteration g <- g - (log(g) - w); each pass gains a degree.
    for _ in 0..=cap {
        let defect = log_series_at(theory, &g)?.sub(&w)?;
        if defect.is_zero() {
            return Ok(g);
        }
        g = g.sub(&defect)?;
    }
    let defect = log_series_at(theory, &g)?.sub(&w)?;
    if defect.is_zero() {
        Ok(g)
    } else {
        Err(Error::Inconsistency("exp series did not converge".into()))
    }
}

/// Degree-by-degree solve of `F(u, chi(u)) = 0` starting from `chi = -u`.
fn solve_formal_inverse(theory: &TheorySpec, f: &GradedSeries) -> Result<GradedSeries> {
    let cap = law_cap(theory);
    let u_al = VarAlphabet::roots(&["u"]);
    let u = GradedSeries::var(theory, &u_al, cap, "u")?;
    let mut chi = u.neg();
    for _ in 0..=cap {
        let defect = f.compose(&[("u", &u), ("v", &chi)], false)?;
        if defect.is_zero() {
            return Ok(chi);
        }
        // dF/dv has constant term 1, so subtracting the defect removes its
        // lowest-degree part.
        chi = chi.sub(&defect)?;
    }
    let defect = f.compose(&[("u", &u), ("v", &chi)], false)?;
    if defect.is_zero() {
        Ok(chi)
    } else {
        Err(Error::Inconsistency("formal inverse did not converge".into()))
    }
}

fn p_factor_of(
    theory: &TheorySpec,
    f: &GradedSeries,
    chi: &GradedSeries,
) -> Result<GradedSeries> {
    let cap = law_cap(theory);
    let zx = VarAlphabet::roots(&["z", "x"]);
    let z = GradedSeries::var(theory, &zx, cap, "z")?;
    let x = GradedSeries::var(theory, &zx, cap, "x")?;
    let chi_x = chi.compose(&[("u", &x)], false)?;
    let f_z_chix = f.compose(&[("u", &z), ("v", &chi_x)], false)?;
    f_z_chix.divide_by_difference("z", "x")
}

/// One entry of the axiom report.
#[derive(Debug, Clone)]
pub struct AxiomCheck {
    pub name: String,
    pub pass: bool,
    /// First offending coefficient on failure, empty on success.
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct AxiomReport {
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn defect_check(theory: &TheorySpec, name: &str, defect: &GradedSeries) -> AxiomCheck {
    if defect.is_zero() {
        AxiomCheck {
            name: name.to_string(),
            pass: true,
            detail: String::new(),
        }
    } else {
        let (exps, coeff) = defect
            .terms()
            .next()
            .expect("nonzero defect has a first term");
        AxiomCheck {
            name: name.to_string(),
            pass: false,
            detail: format!(
                "first offending coefficient {} at exponents {:?}",
                coeff.display(theory),
                exps
            ),
        }
    }
}

impl FormalGroupLaw {
    pub fn theory(&self) -> &TheorySpec {
        &self.theory
    }

    /// The law as a series over `(u, v)`.
    pub fn f(&self) -> &GradedSeries {
        &self.f
    }

    /// The formal inverse as a series over `(u)`.
    pub fn chi(&self) -> &GradedSeries {
        &self.chi
    }

    /// The factor series `P(z, x)`.
    pub fn p(&self) -> &GradedSeries {
        &self.p
    }

    /// `F(a, b)` for series arguments over a common alphabet.
    pub fn f_at(&self, a: &GradedSeries, b: &GradedSeries) -> Result<GradedSeries> {
        self.f.compose(&[("u", a), ("v", b)], false)
    }

    /// `chi(a)` for a series argument.
    pub fn chi_at(&self, a: &GradedSeries) -> Result<GradedSeries> {
        self.chi.compose(&[("u", a)], false)
    }

    /// `P(a, b)` for series arguments.
    pub fn p_at(&self, a: &GradedSeries, b: &GradedSeries) -> Result<GradedSeries> {
        self.p.compose(&[("z", a), ("x", b)], false)
    }

    /// Check the unit, commutativity, associativity and inverse axioms and
    /// the `(z-x)` factorization, each to the truncation.
    pub fn verify_axioms(&self) -> Result<AxiomReport> {
        let theory = &self.theory;
        let cap = law_cap(theory);
        let mut checks = Vec::new();

        let uv = VarAlphabet::roots(&["u", "v"]);
        let u = GradedSeries::var(theory, &uv, cap, "u")?;
        let zero = GradedSeries::zero(theory, &uv, cap);
        let f_u0 = self.f.compose(&[("u", &u), ("v", &zero)], false)?;
        checks.push(defect_check(theory, "unit F(u,0)=u", &f_u0.sub(&u)?));
        let f_0u = self.f.compose(&[("u", &zero), ("v", &u)], false)?;
        checks.push(defect_check(theory, "unit F(0,u)=u", &f_0u.sub(&u)?));

        let swapped = self.f.swap_vars("u", "v")?;
        checks.push(defect_check(
            theory,
            "commutativity F(u,v)=F(v,u)",
            &self.f.sub(&swapped)?,
        ));

        let uvw = VarAlphabet::roots(&["u", "v", "w"]);
        let au = GradedSeries::var(theory, &uvw, cap, "u")?;
        let av = GradedSeries::var(theory, &uvw, cap, "v")?;
        let aw = GradedSeries::var(theory, &uvw, cap, "w")?;
        let inner_r = self.f.compose(&[("u", &av), ("v", &aw)], false)?;
        let lhs = self.f.compose(&[("u", &au), ("v", &inner_r)], false)?;
        let inner_l = self.f.compose(&[("u", &au), ("v", &av)], false)?;
        let rhs = self.f.compose(&[("u", &inner_l), ("v", &aw)], false)?;
        checks.push(defect_check(theory, "associativity", &lhs.sub(&rhs)?));

        let u1_al = VarAlphabet::roots(&["u"]);
        let u1 = GradedSeries::var(theory, &u1_al, cap, "u")?;
        let f_u_chi = self.f.compose(&[("u", &u1), ("v", &self.chi)], false)?;
        checks.push(defect_check(theory, "inverse F(u,chi(u))=0", &f_u_chi));

        let zx = VarAlphabet::roots(&["z", "x"]);
        let z = GradedSeries::var(theory, &zx, cap, "z")?;
        let x = GradedSeries::var(theory, &zx, cap, "x")?;
        let chi_x = self.chi.compose(&[("u", &x)], false)?;
        let f_z_chix = self.f.compose(&[("u", &z), ("v", &chi_x)], false)?;
        let back = self.p.mul(&z.sub(&x)?)?;
        checks.push(defect_check(
            theory,
            "factorization F(z,chi(x))=(z-x)P(z,x)",
            &f_z_chix.sub(&back)?,
        ));

        checks.push(match self.p.constant_term().is_one() {
            true => AxiomCheck {
                name: "P constant term 1".into(),
                pass: true,
                detail: String::new(),
            },
            false => AxiomCheck {
                name: "P constant term 1".into(),
                pass: false,
                detail: format!("constant term {}", self.p.constant_term().display(theory)),
            },
        });

        checks.push(match self.p.homogeneous_degree() {
            Some(0) => AxiomCheck {
                name: "P homogeneous of total degree 0".into(),
                pass: true,
                detail: String::new(),
            },
            d => AxiomCheck {
                name: "P homogeneous of total degree 0".into(),
                pass: false,
                detail: format!("degree {d:?}"),
            },
        });

        Ok(AxiomReport { checks })
    }
}

/// Associativity defect of an arbitrary candidate law over `(u, v)`; used to
/// confirm that perturbed laws are rejected.
pub fn associativity_defect(theory: &TheorySpec, f: &GradedSeries) -> Result<GradedSeries> {
    let cap = f.cap();
    let uvw = VarAlphabet::roots(&["u", "v", "w"]);
    let au = GradedSeries::var(theory, &uvw, cap, "u")?;
    let av = GradedSeries::var(theory, &uvw, cap, "v")?;
    let aw = GradedSeries::var(theory, &uvw, cap, "w")?;
    let inner_r = f.compose(&[("u", &av), ("v", &aw)], false)?;
    let lhs = f.compose(&[("u", &au), ("v", &inner_r)], false)?;
    let inner_l = f.compose(&[("u", &au), ("v", &av)], false)?;
    let rhs = f.compose(&[("u", &inner_l), ("v", &aw)], false)?;
    lhs.sub(&rhs)
}

/// Convenience: the alphabet `(u, v)` used by the stored law.
pub fn law_alphabet() -> Arc<VarAlphabet> {
    VarAlphabet::roots(&["u", "v"])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{make_theory, TheoryKind};
    use num_rational::BigRational;

    fn chow(t: u32) -> TheorySpec {
        make_theory(TheoryKind::Additive, t).unwrap()
    }

    fn ck(t: u32) -> TheorySpec {
        make_theory(TheoryKind::Multiplicative, t).unwrap()
    }

    fn univ(t: u32) -> TheorySpec {
        make_theory(TheoryKind::UniversalRational, t).unwrap()
    }

    #[test]
    fn additive_law() {
        let th = chow(6);
        let law = build_fgl(&th).unwrap();
        let uv = law_alphabet();
        let u = GradedSeries::var(&th, &uv, 7, "u").unwrap();
        let v = GradedSeries::var(&th, &uv, 7, "v").unwrap();
        assert_eq!(*law.f(), u.add(&v).unwrap());
        let ual = VarAlphabet::roots(&["u"]);
        let u1 = GradedSeries::var(&th, &ual, 7, "u").unwrap();
        assert_eq!(*law.chi(), u1.neg());
        assert!(law.p().is_one());
    }

    #[test]
    fn multiplicative_law() {
        let th = ck(6);
        let law = build_fgl(&th).unwrap();
        let b = CoeffElement::generator(&th, 0);
        let uv = law_alphabet();
        let u = GradedSeries::var(&th, &uv, 7, "u").unwrap();
        let v = GradedSeries::var(&th, &uv, 7, "v").unwrap();
        let expected = u.add(&v).unwrap().sub(&u.mul(&v).unwrap().scale(&b)).unwrap();
        assert_eq!(*law.f(), expected);

        // chi(u) = -u/(1-bu) = -u - b u^2 - b^2 u^3 - ...
        let ual = VarAlphabet::roots(&["u"]);
        let u1 = GradedSeries::var(&th, &ual, 7, "u").unwrap();
        let one = GradedSeries::one(&th, &ual, 7);
        let expected_chi = u1.neg().divide_exact(&one.sub(&u1.scale(&b)).unwrap()).unwrap();
        assert_eq!(*law.chi(), expected_chi);

        // P(z,x) = 1/(1-bx), independent of z.
        let zx = VarAlphabet::roots(&["z", "x"]);
        let x = GradedSeries::var(&th, &zx, 7, "x").unwrap();
        let one = GradedSeries::one(&th, &zx, 7);
        let expected_p = one.divide_exact(&one.sub(&x.scale(&b)).unwrap()).unwrap();
        assert_eq!(*law.p(), expected_p);
    }

    #[test]
    fn universal_law_low_degrees() {
        let th = univ(3);
        let law = build_fgl(&th).unwrap();
        let m1 = CoeffElement::generator(&th, 0);
        // Degree-2 part of F is u + v - 2 m1 uv.
        assert_eq!(
            law.f().coefficient_of(&[1, 1]),
            m1.scale(&BigRational::from_integer((-2).into()))
        );
        assert!(law.f().coefficient_of(&[1, 0]).is_one());
        assert!(law.f().coefficient_of(&[2, 0]).is_zero());
        // chi(u) = -u - 2 m1 u^2 + ...
        assert_eq!(
            law.chi().coefficient_of(&[2]),
            m1.scale(&BigRational::from_integer((-2).into()))
        );
        // P = 1 + [P^1] x + ... with [P^1] = 2 m1.
        assert_eq!(
            law.p().coefficient_of(&[0, 1]),
            m1.scale(&BigRational::from_integer(2.into()))
        );
        assert!(law.p().coefficient_of(&[1, 0]).is_zero());
    }

    #[test]
    fn axioms_pass_for_all_theories() {
        for th in [chow(6), ck(6), univ(5)] {
            let law = build_fgl(&th).unwrap();
            let report = law.verify_axioms().unwrap();
            assert!(report.all_pass(), "{report:?}");
        }
    }

    #[test]
    fn chi_is_an_involution() {
        for th in [chow(5), ck(5), univ(4)] {
            let law = build_fgl(&th).unwrap();
            let ual = VarAlphabet::roots(&["u"]);
            let u = GradedSeries::var(&th, &ual, th.trunc() + 1, "u").unwrap();
            let chichi = law.chi_at(law.chi()).unwrap();
            assert_eq!(chichi, u);
        }
    }

    #[test]
    fn corrupted_law_fails_associativity() {
        let th = univ(4);
        let law = build_fgl(&th).unwrap();
        // Perturb a_{11}.
        let uv = law_alphabet();
        let cap = law.f().cap();
        let u = GradedSeries::var(&th, &uv, cap, "u").unwrap();
        let v = GradedSeries::var(&th, &uv, cap, "v").unwrap();
        let corrupted = law.f().add(&u.mul(&v).unwrap()).unwrap();
        let defect = associativity_defect(&th, &corrupted).unwrap();
        assert!(!defect.is_zero());
        // Degree-3 associativity holds for any value of a_{11}, so the
        // defect first appears at total degree 4 in (u, v, w).
        assert!(defect
            .terms()
            .any(|(e, _)| e.iter().map(|&x| x as i64).sum::<i64>() == 4));
        assert!(associativity_defect(&th, law.f()).unwrap().is_zero());
    }
}
