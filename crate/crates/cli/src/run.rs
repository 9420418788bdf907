//! Execution of a validated [`JobSpec`]: compute, render, and report the
//! exit code (0 = success, 2 = verification mismatch; usage errors bubble
//! up as `Err` and exit 1).

use anyhow::{anyhow, Context, Result};
use serde_json::{json, Value};

use cobord_core::coeff::{make_theory, TheorySpec};
use cobord_core::fgl::build_fgl;
use cobord_core::kl::{
    kl_closed, kl_iterative, kl_paths_consistent, kl_schur_specialization, kl_tower_oracle,
    validate_partition, ClassExpression, EvalMode, GrassmannContext,
};
use cobord_core::segre::{
    r_series, segre_closed, segre_residue_oracle, useries_cap, w_series, w_tilde_series, Bundle,
};
use cobord_core::series::{GradedSeries, VarAlphabet};

use crate::emit::{class_to_json, latex_class, latex_series, to_json_string};
use crate::job::{FormatArg, JobSpec, MethodArg, SuiteArg};

/// Rendered output plus the process exit code.
pub struct Rendered {
    pub output: String,
    pub code: i32,
}

pub fn run(spec: &JobSpec) -> Result<Rendered> {
    match spec.command {
        "segre" => run_segre(spec),
        "wclass" => run_wclass(spec),
        "kl" => run_kl(spec),
        "check" => run_check(spec),
        other => Err(anyhow!("unknown command `{other}`")),
    }
}

/// A generic bundle of the requested rank with roots `x1..xR` and the
/// Laurent variable `u`.
struct GenericBundle {
    theory: TheorySpec,
    names: Vec<String>,
    bundle: Bundle,
}

fn generic_bundle(spec: &JobSpec, rank: usize) -> Result<GenericBundle> {
    let theory = make_theory(spec.theory, spec.trunc)?;
    let names: Vec<String> = (1..=rank).map(|i| format!("x{i}")).collect();
    let mut vars: Vec<(&str, i64)> = names.iter().map(|n| (n.as_str(), 1)).collect();
    vars.push(("u", -1));
    let al = VarAlphabet::new(&vars);
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let bundle = Bundle::from_root_vars(&theory, &al, useries_cap(&theory), &refs)?;
    Ok(GenericBundle { theory, names, bundle })
}

/// Rewrite a symmetric `u`-coefficient in the Chern classes `c1..cR` of the
/// bundle, dropping the exhausted root variables and `u`.
fn reduce_to_chern(series: &GradedSeries, roots: &[String]) -> Result<GradedSeries> {
    let cnames: Vec<String> = (1..=roots.len()).map(|i| format!("c{i}")).collect();
    let root_refs: Vec<&str> = roots.iter().map(|s| s.as_str()).collect();
    let c_refs: Vec<&str> = cnames.iter().map(|s| s.as_str()).collect();
    let reduced = series.symmetric_reduce(&root_refs, &c_refs)?;
    Ok(reduced.drop_var("u")?)
}

/// JSON factor list for a monomial in Chern classes of the named bundle.
fn chern_factors(series_alphabet: &VarAlphabet, exps: &[i32], bundle: &str) -> Vec<Value> {
    let mut factors = Vec::new();
    for (i, &e) in exps.iter().enumerate() {
        // Chern variables are `c{i}`/`cQ{i}` of degree i, one factor per power.
        let degree = series_alphabet.degree(i);
        for _ in 0..e.max(0) {
            factors.push(json!({ "chern": { "bundle": bundle, "i": degree } }));
        }
    }
    factors
}

fn chern_series_terms(series: &GradedSeries, bundle: &str, extra: &[(&str, Value)]) -> Vec<Value> {
    let t = series.theory();
    let al = series.alphabet();
    let mut out = Vec::new();
    for (exps, c) in series.terms() {
        let factors = chern_factors(al, exps, bundle);
        for (ge, q) in c.terms() {
            let mut v = json!({
                "coeff": crate::emit::coeff_monomial_to_json(t, ge, q),
                "factors": factors.clone(),
            });
            for (k, extra_v) in extra {
                v[*k] = extra_v.clone();
            }
            out.push(v);
        }
    }
    out
}

fn render_value(spec: &JobSpec, v: Value, text: String, latex: String) -> String {
    match spec.format {
        FormatArg::Json => to_json_string(&v),
        FormatArg::Text => text,
        FormatArg::Latex => latex,
    }
}

fn run_segre(spec: &JobSpec) -> Result<Rendered> {
    let rank = spec.rank.context("--rank is required")?;
    let range = spec.range.context("--range is required")?;
    let gb = generic_bundle(spec, rank)?;
    let law = build_fgl(&gb.theory)?;
    let seg = segre_closed(&law, &gb.bundle, "u")?;

    let mut json_terms = Vec::new();
    let mut text = String::new();
    let mut latex = String::new();
    for m in range.lo..=range.hi {
        let cm = seg
            .coefficient(m)
            .with_context(|| format!("S_{m} is outside the truncation window"))?;
        let reduced = reduce_to_chern(&cm, &gb.names)?;
        json_terms.extend(chern_series_terms(&reduced, "E", &[("m", json!(m))]));
        text.push_str(&format!("S_{m}(E) = {}\n", reduced.display()));
        latex.push_str(&format!("\\mathcal{{S}}_{{{m}}}(E) = {}\n", latex_series(&reduced)));
    }
    let v = json!({ "meta": spec.meta(), "terms": json_terms });
    Ok(Rendered { output: render_value(spec, v, text, latex), code: 0 })
}

fn run_wclass(spec: &JobSpec) -> Result<Rendered> {
    let rank = spec.rank.context("--rank is required")?;
    let gb = generic_bundle(spec, rank)?;
    let law = build_fgl(&gb.theory)?;

    let mut json_terms = Vec::new();
    let mut text = String::new();
    let mut latex = String::new();
    for (label, latex_label, series) in [
        ("w", "w", w_series(&law, &gb.bundle, "u")?),
        ("wtilde", "\\widetilde{w}", w_tilde_series(&law, &gb.bundle, "u")?),
    ] {
        let (lo, hi) = series
            .exponent_range("u")?
            .unwrap_or((0, 0));
        for j in lo..=hi {
            let cj = series.extract_in("u", j)?;
            if cj.is_zero() {
                continue;
            }
            let reduced = reduce_to_chern(&cj, &gb.names)?;
            json_terms.extend(chern_series_terms(
                &reduced,
                "E",
                &[("m", json!(j)), ("series", json!(label))],
            ));
            text.push_str(&format!("{label}[u^{j}](E) = {}\n", reduced.display()));
            latex.push_str(&format!(
                "{latex_label}(E)[u^{{{j}}}] = {}\n",
                latex_series(&reduced)
            ));
        }
    }
    let v = json!({ "meta": spec.meta(), "terms": json_terms });
    Ok(Rendered { output: render_value(spec, v, text, latex), code: 0 })
}

/// Reduce the tower oracle's trivial-flag evaluation to Chern classes
/// `cQ1..` of the quotient bundle.
fn tower_reduced(tower_eval: &GradedSeries) -> Result<GradedSeries> {
    let qnames: Vec<String> = tower_eval.alphabet().names().to_vec();
    let cnames: Vec<String> = (1..=qnames.len()).map(|i| format!("cQ{i}")).collect();
    let q_refs: Vec<&str> = qnames.iter().map(|s| s.as_str()).collect();
    let c_refs: Vec<&str> = cnames.iter().map(|s| s.as_str()).collect();
    Ok(tower_eval.symmetric_reduce(&q_refs, &c_refs)?)
}

fn class_section(x: &ClassExpression, t: &TheorySpec, label: &str) -> (Value, String, String) {
    (
        class_to_json(x, t),
        format!("{label}: {}\n", x.display(t)),
        format!("{label}: {}\n", latex_class(x, t)),
    )
}

fn run_kl(spec: &JobSpec) -> Result<Rendered> {
    let t = make_theory(spec.theory, spec.trunc)?;
    let d = spec.d.context("--d is required")?;
    let n = spec.n.context("--n is required")?;
    let lambda = spec.lambda.clone().context("--lambda is required")?;
    let method = spec.method.unwrap_or(MethodArg::Closed);
    let mode = spec
        .mode
        .map(|m| m.eval_mode())
        .unwrap_or(EvalMode::Expression);
    let mode = if method == MethodArg::Tower { EvalMode::Evaluation } else { mode };
    let lam = validate_partition(&lambda, d, n)?;
    let ctx = GrassmannContext::new(&t, d, n, mode)?;

    let mut code = 0;
    let (v, text, latex) = match method {
        MethodArg::Closed => {
            let x = kl_closed(&lam, &ctx)?;
            let (cv, ct, cl) = class_section(&x, &t, "kappa (closed)");
            (json!({ "meta": spec.meta(), "terms": cv["terms"].clone(), "ells": cv["meta"]["ells"].clone() }), ct, cl)
        }
        MethodArg::Iterative => {
            let x = kl_iterative(&lam, &ctx)?;
            let (cv, ct, cl) = class_section(&x, &t, "kappa (iterative)");
            (json!({ "meta": spec.meta(), "terms": cv["terms"].clone(), "ells": cv["meta"]["ells"].clone() }), ct, cl)
        }
        MethodArg::Tower => {
            let tower = kl_tower_oracle(&lam, &ctx)?;
            let reduced = tower_reduced(&tower.evaluate_trivial_flags()?)?;
            let terms = chern_series_terms(&reduced, "Q", &[]);
            (
                json!({ "meta": spec.meta(), "terms": terms }),
                format!("kappa (tower, trivial flags) = {}\n", reduced.display()),
                format!("\\kappa_{{\\lambda}} = {}\n", latex_series(&reduced)),
            )
        }
        MethodArg::All => {
            let closed = kl_closed(&lam, &ctx)?;
            let iterative = kl_iterative(&lam, &ctx)?;
            let matches = closed == iterative;
            if !matches {
                code = 2;
            }
            let tower = kl_tower_oracle(&lam, &ctx)?;
            let reduced = tower_reduced(&tower.evaluate_trivial_flags()?)?;
            let schur = if t.kind() == cobord_core::coeff::TheoryKind::Additive {
                Some(kl_schur_specialization(&closed, &ctx)?)
            } else {
                None
            };

            let (cv, ct, cl) = class_section(&closed, &t, "kappa (closed)");
            let (_, it, il) = class_section(&iterative, &t, "kappa (iterative)");
            let mut checks = serde_json::Map::new();
            checks.insert("iterative_matches_closed".into(), json!(matches));
            checks.insert(
                "tower_trivial_flags".into(),
                json!({ "terms": chern_series_terms(&reduced, "Q", &[]) }),
            );
            if let Some(s) = &schur {
                checks.insert("schur".into(), json!({ "terms": chern_series_terms(s, "Q", &[]) }));
            }
            let mut text = String::new();
            text.push_str(&ct);
            text.push_str(&it);
            text.push_str(&format!("iterative matches closed: {matches}\n"));
            text.push_str(&format!(
                "kappa (tower, trivial flags) = {}\n",
                reduced.display()
            ));
            if let Some(s) = &schur {
                text.push_str(&format!("Schur specialization = {}\n", s.display()));
            }
            let mut latex = String::new();
            latex.push_str(&cl);
            latex.push_str(&il);
            latex.push_str(&format!(
                "\\kappa_{{\\lambda}}\\big|_{{\\text{{trivial flags}}}} = {}\n",
                latex_series(&reduced)
            ));
            if let Some(s) = &schur {
                latex.push_str(&format!("s_{{\\lambda}} = {}\n", latex_series(s)));
            }
            (
                json!({
                    "cross_checks": Value::Object(checks),
                    "ells": cv["meta"]["ells"].clone(),
                    "meta": spec.meta(),
                    "terms": cv["terms"].clone(),
                }),
                text,
                latex,
            )
        }
    };
    Ok(Rendered { output: render_value(spec, v, text, latex), code })
}

// ---------------------------------------------------------------------------
// check suites
// ---------------------------------------------------------------------------

struct CheckResult {
    name: String,
    pass: bool,
    detail: String,
}

fn series_mismatch_detail(a: &GradedSeries, b: &GradedSeries) -> String {
    match a.sub(b) {
        Ok(diff) => match diff.terms().next() {
            Some((exps, c)) => format!(
                "first differing coefficient {} at exponents {:?}",
                c.display(a.theory()),
                exps
            ),
            None => String::new(),
        },
        Err(e) => format!("incomparable series: {e}"),
    }
}

/// Partitions fitting in a `d x (n-d)` box, the empty one included.
fn box_partitions(d: usize, n: usize) -> Vec<Vec<u32>> {
    let width = (n - d) as u32;
    let mut out = vec![vec![]];
    let mut stack: Vec<Vec<u32>> = (1..=width).map(|p| vec![p]).collect();
    while let Some(p) = stack.pop() {
        out.push(p.clone());
        if p.len() < d {
            let last = *p.last().expect("nonempty partial partition");
            for next in 1..=last {
                let mut q = p.clone();
                q.push(next);
                stack.push(q);
            }
        }
    }
    out.sort();
    out
}

fn check_fgl(t: &TheorySpec) -> Result<Vec<CheckResult>> {
    let law = build_fgl(t)?;
    let report = law.verify_axioms()?;
    Ok(report
        .checks
        .into_iter()
        .map(|c| CheckResult { name: c.name, pass: c.pass, detail: c.detail })
        .collect())
}

fn check_segre(spec: &JobSpec) -> Result<Vec<CheckResult>> {
    let mut results = Vec::new();
    for rank in 1..=2usize {
        let gb = generic_bundle(spec, rank)?;
        let law = build_fgl(&gb.theory)?;
        match r_series(&law, &gb.bundle, "u") {
            Ok(_) => results.push(CheckResult {
                name: format!("rank {rank}: R_m vanishing and P(u) w-tilde expansion"),
                pass: true,
                detail: String::new(),
            }),
            Err(e) => results.push(CheckResult {
                name: format!("rank {rank}: R_m vanishing and P(u) w-tilde expansion"),
                pass: false,
                detail: e.to_string(),
            }),
        }
        let seg = segre_closed(&law, &gb.bundle, "u")?;
        for m in -2..=2i32 {
            let padding = (1 - m - rank as i32).max(0) as u32;
            let closed = seg.coefficient(m)?;
            let oracle = segre_residue_oracle(&law, &gb.bundle, m, padding)?;
            let pass = closed == oracle;
            results.push(CheckResult {
                name: format!("rank {rank}: S_{m} closed form = residue oracle"),
                detail: if pass {
                    String::new()
                } else {
                    series_mismatch_detail(&closed, &oracle)
                },
                pass,
            });
        }
    }
    Ok(results)
}

fn check_kl(spec: &JobSpec) -> Result<Vec<CheckResult>> {
    let t = make_theory(spec.theory, spec.trunc)?;
    let d = spec.d.unwrap_or(1);
    let n = spec.n.unwrap_or(3);
    let ctx = GrassmannContext::new(&t, d, n, EvalMode::Expression)?;
    let mut results = Vec::new();
    for lam in box_partitions(d, n) {
        let p = validate_partition(&lam, d, n)?;
        let (pass, detail) = match kl_paths_consistent(&p, &ctx) {
            Ok(()) => (true, String::new()),
            Err(e) => (false, e.to_string()),
        };
        results.push(CheckResult {
            name: format!("Gr({d},{n}) lambda={lam:?}: closed = iterative = tower"),
            pass,
            detail,
        });
    }
    Ok(results)
}

fn run_check(spec: &JobSpec) -> Result<Rendered> {
    let t = make_theory(spec.theory, spec.trunc)?;
    let suite = spec.suite.context("--suite is required")?;
    let results = match suite {
        SuiteArg::Fgl => check_fgl(&t)?,
        SuiteArg::Segre => check_segre(spec)?,
        SuiteArg::Kl => check_kl(spec)?,
    };
    let all_pass = results.iter().all(|r| r.pass);

    let output = match spec.format {
        FormatArg::Json => {
            let entries: Vec<Value> = results
                .iter()
                .map(|r| json!({ "detail": r.detail, "name": r.name, "pass": r.pass }))
                .collect();
            to_json_string(&json!({ "meta": spec.meta(), "results": entries }))
        }
        _ => {
            let mut s = String::new();
            for r in &results {
                if r.pass {
                    s.push_str(&format!("PASS {}\n", r.name));
                } else {
                    s.push_str(&format!("FAIL {}: {}\n", r.name, r.detail));
                }
            }
            s.push_str(if all_pass { "check: ok\n" } else { "check: MISMATCH\n" });
            s
        }
    };
    Ok(Rendered { output, code: if all_pass { 0 } else { 2 } })
}
