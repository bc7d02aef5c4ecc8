//! Runs, sweeps and plot data, plus their JSON/CSV/TOML plumbing.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HeraldError, Result};
use crate::numfmt::sig12;
use crate::schemes::{
    build_and_run, combined_bell_subtracted, verify_heralded_state, OddTermination, SchemeKind, SchemeResult,
    SchemeSpec, VerificationReport,
};

pub const SCHEMA_VERSION: &str = "1.0";

/// Largest dimension run for the Bell families.
pub const BELL_MAX_D: u32 = 6;
/// Largest dimension run for the qudit GHZ families.
pub const GHZ_MAX_D: u32 = 4;
/// Longest qubit GHZ chain.
pub const CHAIN_MAX_N: u32 = 8;
/// Simulated totals must match the closed form this closely.
pub const AGREEMENT_TOL: f64 = 1e-9;

/// Rejects specs beyond the hard-coded tractability bounds.
pub fn check_tractable(spec: &SchemeSpec) -> Result<()> {
    let (value, bound, what) = match spec.kind {
        SchemeKind::QubitBell4Sms => return Ok(()),
        SchemeKind::QubitGhzChain => (spec.n_ghz, CHAIN_MAX_N, "GHZ chain length N"),
        SchemeKind::QuditGhz4Sms | SchemeKind::QuditGhz4SmsSubtracted => (spec.d, GHZ_MAX_D, "GHZ-family d"),
        _ => (spec.d, BELL_MAX_D, "Bell-family d"),
    };
    if value > bound {
        return Err(HeraldError::Capacity(format!(
            "{}: {what} = {value} is above the tractable limit {bound}",
            spec.kind
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// `simulate` configuration, read from TOML.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: String,
    pub d: Option<u32>,
    pub n_ghz: Option<u32>,
    #[serde(default)]
    pub one_shot: bool,
    /// Reserved; the engine is exact and never draws random numbers.
    pub seed: Option<u64>,
    pub odd_termination: Option<OddTermination>,
    #[serde(default)]
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HeraldError::Config(e.to_string()))
    }

    /// Reads a config; relative output paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HeraldError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.output.json, &mut cfg.output.csv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<SchemeSpec> {
        let kind: SchemeKind = self.kind.parse()?;
        let mut spec = match kind {
            SchemeKind::QubitGhzChain => {
                let n = self
                    .n_ghz
                    .ok_or_else(|| HeraldError::Config("n_ghz is required for qubit-ghz-chain".into()))?;
                SchemeSpec::chain(n)
            }
            SchemeKind::QubitBell4Sms => SchemeSpec::qudit(kind, self.d.unwrap_or(2)),
            _ => {
                let d = self
                    .d
                    .ok_or_else(|| HeraldError::Config(format!("d is required for {kind}")))?;
                SchemeSpec::qudit(kind, d)
            }
        };
        spec.one_shot = self.one_shot;
        if let Some(t) = self.odd_termination {
            spec.odd_termination = t;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub schema_version: &'static str,
    pub abs_diff: f64,
    pub agrees_with_closed_form: bool,
    pub verification: VerificationReport,
    pub result: SchemeResult,
}

impl SimulationReport {
    /// Closed-form agreement and heralded-state verification both hold.
    pub fn invariants_ok(&self) -> bool {
        self.agrees_with_closed_form && self.verification.passed()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn summary_csv(&self) -> Result<String> {
        let r = &self.result;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "kind",
            "d",
            "n_ghz",
            "one_shot",
            "simulated_p",
            "closed_form_p",
            "abs_diff",
            "max_branch_weight_deviation",
            "outcomes",
            "verified",
        ])?;
        w.write_record([
            r.spec.kind.to_string(),
            r.spec.d.to_string(),
            r.spec.n_ghz.to_string(),
            r.spec.one_shot.to_string(),
            sig12(r.total_probability),
            sig12(r.closed_form),
            sig12(self.abs_diff),
            sig12(self.verification.max_weight_deviation),
            r.outcomes.len().to_string(),
            self.verification.passed().to_string(),
        ])?;
        csv_string(w)
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| HeraldError::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| HeraldError::invalid(e.to_string()))
}

pub fn simulate(spec: &SchemeSpec) -> Result<SimulationReport> {
    spec.validate()?;
    check_tractable(spec)?;
    let result = build_and_run(spec)?;
    let verification = verify_heralded_state(&result);
    let abs_diff = (result.total_probability - result.closed_form).abs();
    Ok(SimulationReport {
        schema_version: SCHEMA_VERSION,
        abs_diff,
        agrees_with_closed_form: abs_diff < AGREEMENT_TOL,
        verification,
        result,
    })
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Bell,
    Ghz,
    Chain,
}

impl SweepKind {
    pub fn variants(self) -> &'static [Variant] {
        match self {
            SweepKind::Bell => &[
                Variant::Plain,
                Variant::Bell2,
                Variant::Sub,
                Variant::InvSub,
                Variant::SumSub,
            ],
            SweepKind::Ghz => &[Variant::Plain, Variant::Sub],
            SweepKind::Chain => &[Variant::Plain],
        }
    }

    pub fn bounds(self) -> (u32, u32) {
        match self {
            SweepKind::Bell => (2, BELL_MAX_D),
            SweepKind::Ghz => (2, GHZ_MAX_D),
            SweepKind::Chain => (2, CHAIN_MAX_N),
        }
    }
}

impl FromStr for SweepKind {
    type Err = HeraldError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bell" => Ok(SweepKind::Bell),
            "ghz" => Ok(SweepKind::Ghz),
            "chain" | "ghz-chain" => Ok(SweepKind::Chain),
            other => Err(HeraldError::Config(format!(
                "unknown sweep kind {other:?}; expected bell, ghz or chain"
            ))),
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Bell => "bell",
            SweepKind::Ghz => "ghz",
            SweepKind::Chain => "chain",
        })
    }
}

/// One probability curve of a sweep family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Plain,
    /// Beam-splitter blocks (Bell only).
    Bell2,
    /// Photon subtraction.
    Sub,
    /// Inverted Bell with subtraction.
    InvSub,
    /// Subtracted Bell plus subtracted inverted Bell.
    SumSub,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Bell2 => "bell2",
            Variant::Sub => "sub",
            Variant::InvSub => "inv-sub",
            Variant::SumSub => "sum-sub",
        }
    }

    pub fn is_subtracted(self) -> bool {
        matches!(self, Variant::Sub | Variant::InvSub | Variant::SumSub)
    }

    /// Curve label; one-shot subtraction curves are primed.
    pub fn curve(self, kind: SweepKind, one_shot: bool) -> String {
        let base = match (kind, self) {
            (SweepKind::Bell, Variant::Plain) => "p_dBell",
            (SweepKind::Bell, Variant::Bell2) => "p_dBell2",
            (SweepKind::Bell, Variant::Sub) => "p_dBell-",
            (SweepKind::Bell, Variant::InvSub) => "p_dBellbar-",
            (SweepKind::Bell, Variant::SumSub) => "p_dSumBell-",
            (SweepKind::Ghz, Variant::Sub) => "p_dGHZ-",
            (SweepKind::Ghz, _) => "p_dGHZ",
            (SweepKind::Chain, _) => "p_N",
        };
        if one_shot && self.is_subtracted() {
            base.replacen("p_", "p'_", 1)
        } else {
            base.to_string()
        }
    }
}

impl FromStr for Variant {
    type Err = HeraldError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "plain" => Ok(Variant::Plain),
            "bell2" => Ok(Variant::Bell2),
            "sub" => Ok(Variant::Sub),
            "inv-sub" => Ok(Variant::InvSub),
            "sum-sub" => Ok(Variant::SumSub),
            other => Err(HeraldError::Config(format!(
                "unknown variant {other:?}; expected plain, bell2, sub, inv-sub or sum-sub"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub variant: Variant,
    pub curve: String,
    pub d: u32,
    pub one_shot: bool,
    pub simulated: f64,
    pub closed_form: f64,
    pub abs_diff: f64,
    pub max_weight_deviation: f64,
    pub verified: bool,
}

fn spec_for(kind: SweepKind, variant: Variant, d: u32, one_shot: bool) -> Result<Vec<SchemeSpec>> {
    use SchemeKind::*;
    let one_shot = one_shot && variant.is_subtracted();
    let kinds: Vec<SchemeKind> = match (kind, variant) {
        (SweepKind::Bell, Variant::Plain) => vec![QuditBell3Sms],
        (SweepKind::Bell, Variant::Bell2) => vec![QuditBell2Sms],
        (SweepKind::Bell, Variant::Sub) => vec![QuditBell3SmsSubtracted],
        (SweepKind::Bell, Variant::InvSub) => vec![QuditBellInvertedSubtracted],
        (SweepKind::Bell, Variant::SumSub) => vec![QuditBell3SmsSubtracted, QuditBellInvertedSubtracted],
        (SweepKind::Ghz, Variant::Plain) => vec![QuditGhz4Sms],
        (SweepKind::Ghz, Variant::Sub) => vec![QuditGhz4SmsSubtracted],
        (SweepKind::Chain, Variant::Plain) => return Ok(vec![SchemeSpec::chain(d)]),
        _ => {
            return Err(HeraldError::Config(format!(
                "variant {} does not belong to the {kind} family",
                variant.name()
            )))
        }
    };
    Ok(kinds
        .into_iter()
        .map(|k| SchemeSpec::qudit(k, d).with_one_shot(one_shot))
        .collect())
}

fn sweep_row(kind: SweepKind, variant: Variant, d: u32, one_shot: bool) -> Result<SweepRow> {
    let specs = spec_for(kind, variant, d, one_shot)?;
    let mut simulated = 0.0;
    let mut closed_form = 0.0;
    let mut dev: f64 = 0.0;
    let mut verified = true;
    for spec in &specs {
        let r = simulate(spec)?;
        simulated += r.result.total_probability;
        closed_form += r.result.closed_form;
        dev = dev.max(r.verification.max_weight_deviation);
        verified &= r.verification.passed();
    }
    if variant == Variant::SumSub {
        closed_form = combined_bell_subtracted(d, one_shot)?;
    }
    Ok(SweepRow {
        kind,
        variant,
        curve: variant.curve(kind, one_shot),
        d,
        one_shot,
        simulated,
        closed_form,
        abs_diff: (simulated - closed_form).abs(),
        max_weight_deviation: dev,
        verified,
    })
}

/// One row per `(d, variant)`, ordered by `d`, then by `variants` order.
/// Rows are computed in parallel.
pub fn sweep(kind: SweepKind, d_min: u32, d_max: u32, variants: &[Variant], one_shot: bool) -> Result<Vec<SweepRow>> {
    let (lo, hi) = kind.bounds();
    if d_min < lo || d_min > d_max {
        return Err(HeraldError::InvalidScheme {
            kind: kind.to_string(),
            d: d_min,
            reason: format!("sweep range {d_min}..={d_max} must satisfy {lo} <= d_min <= d_max"),
        });
    }
    if d_max > hi {
        return Err(HeraldError::Capacity(format!(
            "{kind} sweep up to {d_max} exceeds the tractability bound {hi}"
        )));
    }
    for v in variants {
        if !kind.variants().contains(v) {
            return Err(HeraldError::Config(format!(
                "variant {} does not belong to the {kind} family",
                v.name()
            )));
        }
    }
    let jobs: Vec<(u32, Variant)> = (d_min..=d_max)
        .flat_map(|d| variants.iter().map(move |&v| (d, v)))
        .collect();
    jobs.par_iter()
        .map(|&(d, v)| sweep_row(kind, v, d, one_shot))
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "kind",
        "variant",
        "curve",
        "d",
        "one_shot",
        "simulated",
        "closed_form",
        "abs_diff",
        "max_branch_weight_deviation",
        "verified",
    ])?;
    for r in rows {
        w.write_record([
            r.kind.to_string(),
            r.variant.name().to_string(),
            r.curve.clone(),
            r.d.to_string(),
            r.one_shot.to_string(),
            sig12(r.simulated),
            sig12(r.closed_form),
            sig12(r.abs_diff),
            sig12(r.max_weight_deviation),
            r.verified.to_string(),
        ])?;
    }
    csv_string(w)
}

/// Figure number -> (family, one-shot accounting).
pub fn figure_family(figure: u32) -> Result<(SweepKind, bool)> {
    match figure {
        6 => Ok((SweepKind::Bell, false)),
        7 => Ok((SweepKind::Ghz, false)),
        8 => Ok((SweepKind::Bell, true)),
        9 => Ok((SweepKind::Ghz, true)),
        _ => Err(HeraldError::Config(format!("no plot data for figure {figure}; expected 6, 7, 8 or 9"))),
    }
}

/// Every curve of a probability figure over the tractable `d` range.
pub fn plot_data(figure: u32) -> Result<Vec<SweepRow>> {
    let (kind, one_shot) = figure_family(figure)?;
    let (lo, hi) = kind.bounds();
    sweep(kind, lo, hi, kind.variants(), one_shot)
}

/// Long-format plot table: `figure,curve,d,simulated,closed_form`.
pub fn plot_csv(figure: u32, rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["figure", "curve", "d", "simulated", "closed_form"])?;
    for r in rows {
        w.write_record([
            figure.to_string(),
            r.curve.clone(),
            r.d.to_string(),
            sig12(r.simulated),
            sig12(r.closed_form),
        ])?;
    }
    csv_string(w)
}
