//! Flag-level types and the validated job specification.

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde_json::{Map, Value};

use cobord_core::coeff::TheoryKind;
use cobord_core::kl::EvalMode;

/// Environment variable supplying the default truncation order.
pub const TRUNC_ENV: &str = "COBORD_TRUNC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoryArg {
    /// Chow ring (additive formal group law).
    #[value(alias = "chow", alias = "additive")]
    Add,
    /// Connective K-theory (multiplicative formal group law).
    #[value(alias = "mult", alias = "k", alias = "multiplicative")]
    Ck,
    /// Rational universal theory (Lazard ring tensor Q).
    #[value(alias = "universal", alias = "universal-rational")]
    Univ,
}

impl TheoryArg {
    pub fn kind(self) -> TheoryKind {
        match self {
            TheoryArg::Add => TheoryKind::Additive,
            TheoryArg::Ck => TheoryKind::Multiplicative,
            TheoryArg::Univ => TheoryKind::UniversalRational,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Closed,
    Iterative,
    Tower,
    All,
}

impl MethodArg {
    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Closed => "closed",
            MethodArg::Iterative => "iterative",
            MethodArg::Tower => "tower",
            MethodArg::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Expression,
    Evaluation,
}

impl ModeArg {
    pub fn eval_mode(self) -> EvalMode {
        match self {
            ModeArg::Expression => EvalMode::Expression,
            ModeArg::Evaluation => EvalMode::Evaluation,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Expression => "expression",
            ModeArg::Evaluation => "evaluation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum FormatArg {
    #[default]
    Text,
    Json,
    Latex,
}

impl FormatArg {
    pub fn name(self) -> &'static str {
        match self {
            FormatArg::Text => "text",
            FormatArg::Json => "json",
            FormatArg::Latex => "latex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Fgl,
    Segre,
    Kl,
}

impl SuiteArg {
    pub fn name(self) -> &'static str {
        match self {
            SuiteArg::Fgl => "fgl",
            SuiteArg::Segre => "segre",
            SuiteArg::Kl => "kl",
        }
    }
}

/// An inclusive `lo..hi` index range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RangeArg {
    pub lo: i32,
    pub hi: i32,
}

pub fn parse_range(s: &str) -> std::result::Result<RangeArg, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got `{s}`"))?;
    let lo: i32 = lo.trim().parse().map_err(|_| format!("bad range start `{lo}`"))?;
    let hi: i32 = hi.trim().parse().map_err(|_| format!("bad range end `{hi}`"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok(RangeArg { lo, hi })
}

/// Resolve the truncation order: explicit flag, else the environment
/// variable, else 6.
pub fn resolve_trunc(flag: Option<u32>) -> Result<u32> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var(TRUNC_ENV) {
        Ok(s) => match s.trim().parse::<u32>() {
            Ok(t) if t > 0 => Ok(t),
            _ => bail!("invalid {TRUNC_ENV} value `{s}` (expected a positive integer)"),
        },
        Err(_) => Ok(6),
    }
}

/// A fully resolved job: every field validated at construction time, so the
/// runners never see raw flags. `method = tower` forces evaluation mode.
#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: &'static str,
    pub theory: TheoryKind,
    pub trunc: u32,
    pub rank: Option<usize>,
    pub range: Option<RangeArg>,
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub lambda: Option<Vec<u32>>,
    pub method: Option<MethodArg>,
    pub mode: Option<ModeArg>,
    pub suite: Option<SuiteArg>,
    pub format: FormatArg,
}

pub fn theory_name(kind: TheoryKind) -> &'static str {
    match kind {
        TheoryKind::Additive => "additive",
        TheoryKind::Multiplicative => "multiplicative",
        TheoryKind::UniversalRational => "universal-rational",
    }
}

impl JobSpec {
    /// The sorted-key metadata object common to all serialized outputs.
    pub fn meta(&self) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::from(self.command));
        m.insert("theory".into(), Value::from(theory_name(self.theory)));
        m.insert("trunc".into(), Value::from(self.trunc));
        m.insert("format".into(), Value::from(self.format.name()));
        if let Some(r) = self.rank {
            m.insert("rank".into(), Value::from(r));
        }
        if let Some(r) = self.range {
            m.insert("range".into(), Value::from(format!("{}..{}", r.lo, r.hi)));
        }
        if let Some(d) = self.d {
            m.insert("d".into(), Value::from(d));
        }
        if let Some(n) = self.n {
            m.insert("n".into(), Value::from(n));
        }
        if let Some(l) = &self.lambda {
            m.insert("lambda".into(), Value::from(l.clone()));
        }
        if let Some(me) = self.method {
            m.insert("method".into(), Value::from(me.name()));
        }
        if let Some(mo) = self.mode {
            m.insert("mode".into(), Value::from(mo.name()));
        }
        if let Some(s) = self.suite {
            m.insert("suite".into(), Value::from(s.name()));
        }
        Value::Object(m)
    }
}
