//! The `lensopt` command line. Reports go to stdout as JSON lines (CSV for
//! `bench`). Exit codes: 0 success, 1 law or validity failure, 2 usage or
//! input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::bridge::{check_adjunction, pi0_recovery, CoherenceReport};
use crate::cost::{run_tradeoff, write_csv, Interp};
use crate::error::{Error, Result};
use crate::eval::Value;
use crate::expr;
use crate::lens::{lens_exec, Env, Lens};
use crate::normal::normalize;
use crate::optic::{optic_exec, Optic};
use crate::sample::Sampler;
use crate::share::SharedDag;
use crate::signature::{Signature, SIGNATURE_FORMAT_VERSION};
use crate::two_optic::{mk_two_cell, pi0_classes, HomCatSample};

pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (signature format 1)");

pub const DEFAULT_SEARCH_DEPTH: usize = 3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "lensopt", version = VERSION, about = "Lenses, optics and 2-optics over free cartesian terms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct SigArg {
    /// Signature JSON file.
    #[arg(long)]
    pub signature: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the adjunction and oplax coherence law suites on random samples.
    CheckLaws {
        #[command(flatten)]
        sig: SigArg,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compare lens, optic and shared execution of chains of length 1..=max-n.
    Bench {
        #[arg(long, default_value_t = 8)]
        max_n: usize,
        #[arg(long, default_value = "finite")]
        interp: Interp,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Leave the wall-time columns empty so output is reproducible.
        #[arg(long)]
        omit_timing: bool,
    },
    /// Execute a lens or an optic once.
    Run {
        #[command(flatten)]
        sig: SigArg,
        #[arg(long, conflicts_with = "optic", required_unless_present = "optic")]
        lens: Option<PathBuf>,
        #[arg(long)]
        optic: Option<PathBuf>,
        /// JSON tuple, e.g. `[0, 1]` or `[[0.5, 1.0]]`.
        #[arg(long)]
        input: String,
        /// `id`, `vector:<x,y,...>` or `term:<expression>`.
        #[arg(long, default_value = "id")]
        env: String,
    },
    /// Print the canonical form of an expression.
    Normalize {
        #[command(flatten)]
        sig: SigArg,
        #[arg(long)]
        expr: String,
    },
    /// Share repeated generator applications of an expression.
    Optimize {
        #[command(flatten)]
        sig: SigArg,
        #[arg(long)]
        expr: String,
    },
    /// Validate a witness between two optic files.
    CheckCell {
        #[command(flatten)]
        sig: SigArg,
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        witness: String,
    },
    /// Connected components of a hom-category sample. Without `--homcat`,
    /// runs the built-in enumerated family and compares with erasure.
    Pi0 {
        #[arg(long, requires = "homcat")]
        signature: Option<PathBuf>,
        #[arg(long)]
        homcat: Option<PathBuf>,
        /// Witness search depth; defaults to the file's `search_depth`, then 3.
        #[arg(long)]
        search_depth: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))
}

fn load_signature(path: &Path) -> Result<Signature> {
    Signature::from_json(&read(path)?)
        .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> Result<()> {
    writeln!(out, "{value}")?;
    Ok(())
}

fn parse_env(text: &str, sig: &Signature) -> Result<Env> {
    if text == "id" {
        return Ok(Env::Identity);
    }
    if let Some(v) = text.strip_prefix("vector:") {
        let xs = v
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Invalid(format!("bad vector `{v}`: {e}")))?;
        return Ok(Env::Constant(vec![Value::Real(xs)]));
    }
    if let Some(t) = text.strip_prefix("term:") {
        return Ok(Env::Term(expr::parse(t, sig)?));
    }
    Err(Error::Invalid(format!(
        "unknown environment `{text}`; expected id, vector:<v> or term:<expr>"
    )))
}

fn check_laws(sig: &Signature, samples: usize, seed: u64, out: &mut dyn Write) -> Result<i32> {
    let mut s = Sampler::new(sig, seed);
    let tries = 20;
    let lenses: Vec<Lens> = (0..samples)
        .filter_map(|_| s.retry(tries, |m| m.lens()))
        .collect();
    let optics: Vec<Optic> = (0..samples)
        .filter_map(|_| s.retry(tries, |m| m.optic()))
        .collect();
    let cells: Vec<_> = (0..samples)
        .filter_map(|_| s.retry(tries, |m| m.cell()))
        .collect();
    let adjunction = check_adjunction(&lenses, &optics, &cells, sig);

    let mut coherence = CoherenceReport::default();
    for _ in 0..samples {
        if let Some(c) = s.retry(tries, |m| m.chain(2)) {
            coherence.check_pair(&c[0], &c[1], sig);
        }
    }
    for _ in 0..samples / 2 {
        if let Some(c) = s.retry(tries, |m| m.chain(3)) {
            coherence.check_triple(&c[0], &c[1], &c[2], sig);
        }
    }
    let passed = adjunction.passed() && coherence.passed();
    emit(
        out,
        json!({ "report": "adjunction", "passed": adjunction.passed(), "laws": adjunction }),
    )?;
    emit(
        out,
        json!({ "report": "coherence", "passed": coherence.passed(), "laws": coherence }),
    )?;
    emit(
        out,
        json!({
            "report": "summary",
            "seed": seed,
            "samples": { "lenses": lenses.len(), "optics": optics.len(), "cells": cells.len() },
            "passed": passed,
        }),
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_FAILURE })
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::CheckLaws { sig, samples, seed } => {
            let sig = load_signature(&sig.signature)?;
            check_laws(&sig, samples, seed, out)
        }
        Command::Bench {
            max_n,
            interp,
            out: path,
            omit_timing,
        } => {
            let (rows, notes) = run_tradeoff(1..=max_n, interp)?;
            let rows: Vec<_> = if omit_timing {
                rows.into_iter().map(|r| r.without_timing()).collect()
            } else {
                rows
            };
            match path {
                Some(p) => write_csv(&rows, fs::File::create(p)?)?,
                None => write_csv(&rows, &mut *out)?,
            }
            for n in notes {
                writeln!(err, "{}", serde_json::to_string(&n)?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Run {
            sig,
            lens,
            optic,
            input,
            env,
        } => {
            let sig = load_signature(&sig.signature)?;
            let a: Vec<Value> = serde_json::from_str(&input)?;
            let env = parse_env(&env, &sig)?;
            let run = match (lens, optic) {
                (Some(l), _) => lens_exec(&Lens::from_json(&read(&l)?, &sig)?, &sig, &a, &env)?,
                (None, Some(o)) => {
                    optic_exec(&Optic::from_json(&read(&o)?, &sig)?, &sig, &a, &env)?
                }
                (None, None) => return Err(Error::Invalid("need --lens or --optic".into())),
            };
            emit(
                out,
                json!({ "b": run.b, "a_prime": run.a_prime, "cost": run.report.to_json() }),
            )?;
            Ok(EXIT_OK)
        }
        Command::Normalize { sig, expr: e } => {
            let sig = load_signature(&sig.signature)?;
            let m = expr::parse(&e, &sig)?;
            emit(out, serde_json::to_value(normalize(&m))?)?;
            Ok(EXIT_OK)
        }
        Command::Optimize { sig, expr: e } => {
            let sig = load_signature(&sig.signature)?;
            let m = expr::parse(&e, &sig)?;
            let nf = normalize(&m);
            let dag = SharedDag::from_canonical(&nf);
            emit(
                out,
                json!({
                    "generator_occurrences": nf.count_generators(&|_| true),
                    "shared_nodes": dag.node_count(),
                    "dag": dag.to_json(),
                }),
            )?;
            Ok(EXIT_OK)
        }
        Command::CheckCell {
            sig,
            src,
            tgt,
            witness,
        } => {
            let sig = load_signature(&sig.signature)?;
            let src = Optic::from_json(&read(&src)?, &sig)?;
            let tgt = Optic::from_json(&read(&tgt)?, &sig)?;
            let w = expr::parse(&witness, &sig)?;
            match mk_two_cell(&src, &tgt, &w, &sig) {
                Ok(c) => {
                    emit(
                        out,
                        json!({
                            "valid": true,
                            "witness": c.witness().to_string(),
                            "extensionally_checked": c.extensionally_checked(),
                        }),
                    )?;
                    Ok(EXIT_OK)
                }
                Err(e) => {
                    let mut payload = e.to_json();
                    payload["valid"] = json!(false);
                    emit(out, payload)?;
                    Ok(EXIT_FAILURE)
                }
            }
        }
        Command::Pi0 {
            signature,
            homcat,
            search_depth,
        } => match (signature, homcat) {
            (Some(sig), Some(h)) => {
                let sig = load_signature(&sig)?;
                let (mut sample, file_depth) = HomCatSample::from_json(&read(&h)?, &sig)?;
                let depth = search_depth.or(file_depth).unwrap_or(DEFAULT_SEARCH_DEPTH);
                let search = sample.search_cells(depth, &sig)?;
                emit(
                    out,
                    json!({
                        "optics": sample.optics().len(),
                        "cells": sample.cells().len(),
                        "search_depth": depth,
                        "search": search,
                        "classes": pi0_classes(&sample),
                    }),
                )?;
                Ok(EXIT_OK)
            }
            (None, None) => {
                let report = pi0_recovery(search_depth.unwrap_or(DEFAULT_SEARCH_DEPTH))?;
                let ok = report.partitions_equal && report.composites_joined;
                emit(out, serde_json::to_value(&report)?)?;
                Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
            }
            _ => Err(Error::Invalid("--homcat needs --signature".into())),
        },
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::TypeMismatch { .. } | Error::BoundaryMismatch { .. } => "type",
        Error::Json(_) | Error::Signature(_) => "input",
        Error::Cell(_) => "cell",
        _ => "error",
    }
}

/// Runs the command line on `args` and returns the exit code.
pub fn run_with(
    args: impl IntoIterator<Item = String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    debug_assert_eq!(SIGNATURE_FORMAT_VERSION, 1);
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let mut payload = json!({ "error": error_kind(&e), "message": e.to_string() });
            if let Error::Cell(c) = &e {
                payload["counterexample"] = json!(c.counterexample());
            }
            let _ = writeln!(out, "{payload}");
            if matches!(e, Error::Cell(_)) {
                EXIT_FAILURE
            } else {
                EXIT_USAGE
            }
        }
    }
}
