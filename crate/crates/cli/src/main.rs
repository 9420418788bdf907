use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cobord_cli::job::{
    parse_range, resolve_trunc, FormatArg, JobSpec, MethodArg, ModeArg, RangeArg, SuiteArg,
    TheoryArg,
};
use cobord_cli::run::run;

/// Exact Segre, relative Segre and Kempf-Laksov class computations in
/// oriented cohomology theories.
#[derive(Parser)]
#[command(name = "cobord", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Segre series coefficients of a generic bundle, in Chern classes.
    Segre {
        #[arg(long, value_enum)]
        theory: TheoryArg,
        /// Rank of the generic bundle.
        #[arg(long)]
        rank: usize,
        /// Truncation order (default: COBORD_TRUNC or 6).
        #[arg(long)]
        trunc: Option<u32>,
        /// Inclusive index window LO..HI of Segre coefficients.
        #[arg(long, value_parser = parse_range, default_value = "-3..3", allow_hyphen_values = true)]
        range: RangeArg,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        /// Write the output to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// w and w-tilde correction classes of a generic bundle.
    Wclass {
        #[arg(long, value_enum)]
        theory: TheoryArg,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        trunc: Option<u32>,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The Kempf-Laksov class kappa_lambda on Gr_d of a rank-n bundle.
    Kl {
        #[arg(long, value_enum)]
        theory: TheoryArg,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// Partition rows, comma separated (e.g. 2,1).
        #[arg(long, value_delimiter = ',')]
        lambda: Vec<u32>,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodArg,
        /// Symbol handling; `tower` always computes in evaluation mode.
        #[arg(long, value_enum, default_value = "expression")]
        mode: ModeArg,
        #[arg(long)]
        trunc: Option<u32>,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite; exits 2 on any identity mismatch.
    Check {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long, value_enum)]
        theory: TheoryArg,
        #[arg(long)]
        trunc: Option<u32>,
        /// Grassmannian parameters for the kl suite.
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t)]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn job_spec(cmd: &Cmd) -> anyhow::Result<(JobSpec, Option<PathBuf>)> {
    let (spec, out) = match cmd {
        Cmd::Segre { theory, rank, trunc, range, format, out } => (
            JobSpec {
                command: "segre",
                theory: theory.kind(),
                trunc: resolve_trunc(*trunc)?,
                rank: Some(*rank),
                range: Some(*range),
                d: None,
                n: None,
                lambda: None,
                method: None,
                mode: None,
                suite: None,
                format: *format,
            },
            out.clone(),
        ),
        Cmd::Wclass { theory, rank, trunc, format, out } => (
            JobSpec {
                command: "wclass",
                theory: theory.kind(),
                trunc: resolve_trunc(*trunc)?,
                rank: Some(*rank),
                range: None,
                d: None,
                n: None,
                lambda: None,
                method: None,
                mode: None,
                suite: None,
                format: *format,
            },
            out.clone(),
        ),
        Cmd::Kl { theory, d, n, lambda, method, mode, trunc, format, out } => {
            // The tower oracle only exists in evaluation mode.
            let mode = if *method == MethodArg::Tower { ModeArg::Evaluation } else { *mode };
            (
                JobSpec {
                    command: "kl",
                    theory: theory.kind(),
                    trunc: resolve_trunc(*trunc)?,
                    rank: None,
                    range: None,
                    d: Some(*d),
                    n: Some(*n),
                    lambda: Some(lambda.clone()),
                    method: Some(*method),
                    mode: Some(mode),
                    suite: None,
                    format: *format,
                },
                out.clone(),
            )
        }
        Cmd::Check { suite, theory, trunc, d, n, format, out } => (
            JobSpec {
                command: "check",
                theory: theory.kind(),
                trunc: resolve_trunc(*trunc)?,
                rank: None,
                range: None,
                d: *d,
                n: *n,
                lambda: None,
                method: None,
                mode: None,
                suite: Some(*suite),
                format: *format,
            },
            out.clone(),
        ),
    };
    Ok((spec, out))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = job_spec(&cli.command).and_then(|(spec, out)| {
        let rendered = run(&spec)?;
        match out {
            Some(path) => std::fs::write(&path, &rendered.output)
                .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?,
            None => print!("{}", rendered.output),
        }
        Ok(rendered.code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
