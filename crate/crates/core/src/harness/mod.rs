//! Seeded property suites and their JSON reports.
//!
//! Each suite is a list of named properties. A property runs a number of
//! seeded trials and counts passes, failures and inconclusive outcomes;
//! failing trials keep a replayable payload. Reports for the same
//! configuration are identical apart from `wall_time_s`.

pub mod oracles;
mod suites;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::coexistence::TOL_FEAS;
use crate::effect::TOL_MIX;
use crate::error::{Error, Result};
use crate::hermitian::TOL_PSD;
use crate::rng::SeededRng;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 42;
/// Failing trials kept per property.
const MAX_COUNTEREXAMPLES: usize = 3;

pub const SUITES: [&str; 12] = [
    "lemma-scalar",
    "lemma-rank1",
    "lemma-eigenvalue",
    "lemma-proj",
    "lemma-scalar2",
    "remark-order",
    "thm1-forward",
    "thm2-forward",
    "thm3-forward",
    "gallery",
    "monotone",
    "weyl",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides every property's own dimensions.
    pub dims: Option<Vec<usize>>,
    /// Overrides every property's own trial count.
    pub trials: Option<usize>,
    pub tol_psd: f64,
    pub tol_feas: f64,
    pub tol_mix: f64,
    /// Largest tolerated fraction of inconclusive trials per property.
    pub inconclusive_budget: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            dims: None,
            trials: None,
            tol_psd: TOL_PSD,
            tol_feas: TOL_FEAS,
            tol_mix: TOL_MIX,
            inconclusive_budget: 0.01,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("tol_psd", self.tol_psd), ("tol_feas", self.tol_feas), ("tol_mix", self.tol_mix)] {
            if !(tol > 0.0 && tol.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {tol}")));
            }
        }
        if !(0.0..=1.0).contains(&self.inconclusive_budget) {
            return Err(Error::InvalidParameter("inconclusive_budget must lie in [0, 1]".into()));
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() || dims.iter().any(|&d| d < 1) {
                return Err(Error::InvalidParameter("dims must be a non-empty list of positive integers".into()));
            }
        }
        if self.trials == Some(0) {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub dims: Vec<usize>,
    pub trials: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub counterexamples: Vec<Value>,
    /// A counterexample the property is expected to reproduce.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub schema: u32,
    pub suite: String,
    pub config: SuiteConfig,
    pub properties: Vec<PropertyResult>,
    /// Parts of the suite that did not run, with the reason.
    pub skipped: Vec<String>,
    pub ok: bool,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn property(&self, name: &str) -> Option<&PropertyResult> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn failures(&self) -> usize {
        self.properties.iter().map(|p| p.fail).sum()
    }
}

/// The result of one trial.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    /// Carries the replayable inputs.
    Fail(Value),
    Inconclusive,
}

impl Outcome {
    pub fn from_bool(ok: bool, payload: impl FnOnce() -> Value) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail(payload())
        }
    }
}

/// How a property's canonical trial count scales with its dimensions.
#[derive(Clone, Copy, Debug)]
enum Count {
    PerDim(usize),
    Total(usize),
}

struct Context<'a> {
    config: &'a SuiteConfig,
    suite: &'static str,
    properties: Vec<PropertyResult>,
    skipped: Vec<String>,
}

impl<'a> Context<'a> {
    fn new(config: &'a SuiteConfig, suite: &'static str) -> Self {
        Self {
            config,
            suite,
            properties: Vec::new(),
            skipped: Vec::new(),
        }
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    fn dims(&self, canonical: &[usize]) -> Vec<usize> {
        self.config.dims.clone().unwrap_or_else(|| canonical.to_vec())
    }

    /// Dimensions at least `min`; the rest are recorded as skipped.
    fn dims_at_least(&mut self, canonical: &[usize], min: usize, reason: &str) -> Vec<usize> {
        let (kept, dropped): (Vec<usize>, Vec<usize>) = self.dims(canonical).into_iter().partition(|&d| d >= min);
        for d in dropped {
            self.skipped.push(format!("{}: dim {d} skipped, {reason}", self.suite));
        }
        kept
    }

    fn count(&self, count: Count, dims: usize) -> usize {
        match count {
            Count::PerDim(n) => self.config.trials.unwrap_or(n) * dims.max(1),
            Count::Total(n) => self.config.trials.unwrap_or(n),
        }
    }

    fn full_name(&self, name: &str) -> String {
        format!("{}/{name}", self.suite)
    }

    fn rng(&self, name: &str, dim: usize, k: usize) -> SeededRng {
        SeededRng::for_trial(self.seed(), &format!("{}/{dim}", self.full_name(name)), k as u64)
    }

    /// Runs `trial` for `k = 0..n`, cycling through `dims`.
    fn sampled<F>(&mut self, name: &str, dims: &[usize], count: Count, trial: F)
    where
        F: Fn(&mut SeededRng, usize, usize) -> Result<Outcome> + Sync,
    {
        if dims.is_empty() {
            return;
        }
        let n = self.count(count, dims.len());
        let outcomes: Vec<Outcome> = (0..n)
            .into_par_iter()
            .map(|k| {
                let dim = dims[k % dims.len()];
                let mut rng = self.rng(name, dim, k);
                trial(&mut rng, dim, k).unwrap_or_else(|e| Outcome::Fail(error_payload(k, dim, &e)))
            })
            .collect();
        self.tally(name, dims, outcomes, None, None);
    }

    fn tally(
        &mut self,
        name: &str,
        dims: &[usize],
        outcomes: Vec<Outcome>,
        witness: Option<Value>,
        note: Option<String>,
    ) {
        let mut result = PropertyResult {
            name: self.full_name(name),
            dims: dims.to_vec(),
            trials: outcomes.len(),
            pass: 0,
            fail: 0,
            inconclusive: 0,
            counterexamples: Vec::new(),
            witness,
            note,
            ok: false,
        };
        for outcome in outcomes {
            match outcome {
                Outcome::Pass => result.pass += 1,
                Outcome::Inconclusive => result.inconclusive += 1,
                Outcome::Fail(payload) => {
                    result.fail += 1;
                    if result.counterexamples.len() < MAX_COUNTEREXAMPLES {
                        result.counterexamples.push(payload);
                    }
                }
            }
        }
        self.push(result);
    }

    /// A property decided by one deterministic check.
    fn single(&mut self, name: &str, dims: &[usize], check: Result<(Outcome, Option<Value>)>) {
        let (outcome, witness) = check.unwrap_or_else(|e| (Outcome::Fail(error_payload(0, 0, &e)), None));
        self.tally(name, dims, vec![outcome], witness, None);
    }

    /// Records precomputed counts, e.g. aggregated from a preservation check.
    fn counts(&mut self, mut result: PropertyResult) {
        result.name = self.full_name(&result.name);
        self.push(result);
    }

    fn push(&mut self, mut result: PropertyResult) {
        let total = result.pass + result.fail + result.inconclusive;
        let budget = self.config.inconclusive_budget * total as f64;
        result.ok = result.fail == 0 && result.inconclusive as f64 <= budget && total > 0;
        self.properties.push(result);
    }

    fn note(&mut self, name: &str, note: String) {
        let full = self.full_name(name);
        if let Some(p) = self.properties.iter_mut().rev().find(|p| p.name == full) {
            p.note = Some(note);
        }
    }
}

fn error_payload(k: usize, dim: usize, e: &Error) -> Value {
    serde_json::json!({"trial": k, "dim": dim, "error": e.to_string()})
}

/// Runs the named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let names: Vec<&'static str> = if name == "all" {
        SUITES.to_vec()
    } else {
        vec![SUITES
            .iter()
            .copied()
            .find(|s| *s == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {name:?}; known: {}, all", SUITES.join(", "))))?]
    };
    let start = Instant::now();
    let mut properties = Vec::new();
    let mut skipped = Vec::new();
    for suite in names {
        let mut ctx = Context::new(config, suite);
        suites::run(&mut ctx)?;
        properties.extend(ctx.properties);
        skipped.extend(ctx.skipped);
    }
    let ok = properties.iter().all(|p| p.ok);
    Ok(SuiteReport {
        schema: SCHEMA_VERSION,
        suite: name.to_string(),
        config: config.clone(),
        properties,
        skipped,
        ok,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
