use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use effekt_core::coexistence::{coexist_with, CoexistenceConfig, Decision};
use effekt_core::effect::{commutator_norm, is_mixture_with, TOL_COMMUTE, TOL_MIX};
use effekt_core::harness::{run_suite, SuiteConfig, DEFAULT_SEED};
use effekt_core::hermitian::{psd_leq, TOL_PSD};
use effekt_core::io::{read_map, read_matrix, read_vector, verdict_json};
use effekt_core::maps::classify;
use effekt_core::{Effect, UnitVector};

const HOLDS: u8 = 0;
const FAILS: u8 = 1;
const INCONCLUSIVE: u8 = 2;
const INPUT_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "effekt", version, about = "Checks relations between quantum effects and runs seeded verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a relation between effects given as matrix/vector JSON files.
    ///
    /// Exit status: 0 holds (or value computed), 1 does not hold,
    /// 2 inconclusive, 3 input error.
    Check {
        relation: RelationArg,
        files: Vec<PathBuf>,
        /// Tolerance of the semidefinite order.
        #[arg(long, default_value_t = TOL_PSD)]
        tol_psd: f64,
        /// Print compact single-line JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run a named property suite, or `all`. Exit status 0 iff the report is ok.
    Suite {
        name: String,
        #[arg(long, env = "EFFEKT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Comma-separated dimensions overriding each property's own.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Trial count overriding each property's own.
        #[arg(long)]
        trials: Option<usize>,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report which relations a map preserves on seeded samples.
    Classify {
        map: PathBuf,
        #[arg(long, env = "EFFEKT_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Dimension for maps that carry none (swap01).
        #[arg(long, default_value_t = 3)]
        dim: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationArg {
    Leq,
    Orth,
    Commute,
    Coexist,
    Mixture,
    Strength,
    Probability,
}

impl RelationArg {
    fn inputs(self) -> (usize, bool) {
        match self {
            Self::Leq | Self::Orth | Self::Commute | Self::Coexist => (2, false),
            Self::Mixture => (3, false),
            Self::Strength | Self::Probability => (1, true),
        }
    }
}

fn effects(files: &[PathBuf]) -> anyhow::Result<Vec<Effect>> {
    files
        .iter()
        .map(|p| {
            read_matrix(p)
                .and_then(|m| m.to_effect())
                .with_context(|| format!("reading effect from {}", p.display()))
        })
        .collect()
}

fn boolean(relation: &str, holds: bool, extra: Value) -> (u8, Value) {
    let mut v = json!({"relation": relation, "holds": holds});
    if let (Value::Object(out), Value::Object(more)) = (&mut v, extra) {
        out.extend(more);
    }
    (if holds { HOLDS } else { FAILS }, v)
}

fn check(relation: RelationArg, files: &[PathBuf], tol_psd: f64) -> anyhow::Result<(u8, Value)> {
    if !(tol_psd > 0.0 && tol_psd.is_finite()) {
        bail!("--tol-psd must be positive");
    }
    let (matrices, with_vector) = relation.inputs();
    let expected = matrices + usize::from(with_vector);
    if files.len() != expected {
        bail!("this relation takes {expected} input files, got {}", files.len());
    }
    let es = effects(&files[..matrices])?;
    let phi = || -> anyhow::Result<UnitVector> {
        let path = &files[matrices];
        read_vector(path)
            .and_then(|v| v.to_unit())
            .with_context(|| format!("reading vector from {}", path.display()))
    };
    Ok(match relation {
        RelationArg::Leq => boolean("leq", psd_leq(es[0].matrix(), es[1].matrix(), tol_psd)?, json!({})),
        RelationArg::Orth => {
            let holds = psd_leq(es[0].matrix(), es[1].complement().matrix(), tol_psd)?;
            boolean("orth", holds, json!({}))
        }
        RelationArg::Commute => {
            let norm = commutator_norm(es[0].matrix(), es[1].matrix())?;
            boolean("commute", norm <= TOL_COMMUTE, json!({"commutator_norm": norm}))
        }
        RelationArg::Coexist => {
            let verdict = coexist_with(&es[0], &es[1], &CoexistenceConfig::default())?;
            let code = match verdict.decision {
                Decision::Coexistent => HOLDS,
                Decision::NotCoexistent => FAILS,
                Decision::Inconclusive => INCONCLUSIVE,
            };
            (code, verdict_json(&verdict))
        }
        RelationArg::Mixture => {
            let t = is_mixture_with(&es[0], &es[1], &es[2], TOL_MIX)?;
            boolean("mixture", t.is_some(), json!({"t": t}))
        }
        RelationArg::Strength => {
            let value = es[0].strength_along(&phi()?)?;
            (HOLDS, json!({"relation": "strength", "value": value}))
        }
        RelationArg::Probability => {
            let value = es[0].probability(&phi()?)?;
            (HOLDS, json!({"relation": "probability", "value": value}))
        }
    })
}

fn print(value: &Value, compact: bool) -> anyhow::Result<()> {
    let text = if compact { serde_json::to_string(value)? } else { serde_json::to_string_pretty(value)? };
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Check { relation, files, tol_psd, json } => {
            let (code, value) = check(relation, &files, tol_psd)?;
            print(&value, json)?;
            Ok(code)
        }
        Command::Suite { name, seed, dims, trials, out } => {
            let config = SuiteConfig {
                seed,
                dims,
                trials,
                ..SuiteConfig::default()
            };
            let report = run_suite(&name, &config)?;
            let text = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                std::fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("{text}");
            Ok(if report.ok { HOLDS } else { FAILS })
        }
        Command::Classify { map, seed, trials, dim } => {
            let (map, file_dim) = read_map(&map).with_context(|| format!("reading map from {}", map.display()))?;
            let report = classify(&map, seed, trials, file_dim.unwrap_or(dim))?;
            print(&serde_json::to_value(&report)?, false)?;
            Ok(HOLDS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // usage errors share the input-error status; 2 means inconclusive
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { HOLDS });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({"error": format!("{e:#}")}));
            ExitCode::from(INPUT_ERROR)
        }
    }
}
