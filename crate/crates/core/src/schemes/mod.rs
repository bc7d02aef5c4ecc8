//! Heralding schemes: splitter blocks, a connecting multiport, detection.
//!
//! Qudit families run through [`connected::ConnectedSetup`], which keeps
//! each block as a sum over heralding-mode occupations and only sends those
//! occupations through the connecting DFT. The qubit GHZ chain runs through
//! [`chain`], which contracts one block at a time and branches on every
//! measurement.

pub mod chain;
pub mod closed_form;
pub mod connected;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HeraldError, Result};
use crate::fock::FockState;
use crate::heralding::{extract_phases, HeraldOutcome};

pub use chain::OddTermination;
pub use closed_form::{closed_form_probability, combined_bell, combined_bell_subtracted, one_shot_factor};
pub use connected::{ConnectedSetup, Enumeration, Sector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeKind {
    QubitBell4Sms,
    QubitGhzChain,
    QuditBell3Sms,
    QuditBellInverted,
    QuditGhz4Sms,
    QuditBell2Sms,
    QuditBell3SmsSubtracted,
    QuditBellInvertedSubtracted,
    QuditGhz4SmsSubtracted,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 9] = [
        SchemeKind::QubitBell4Sms,
        SchemeKind::QubitGhzChain,
        SchemeKind::QuditBell3Sms,
        SchemeKind::QuditBellInverted,
        SchemeKind::QuditGhz4Sms,
        SchemeKind::QuditBell2Sms,
        SchemeKind::QuditBell3SmsSubtracted,
        SchemeKind::QuditBellInvertedSubtracted,
        SchemeKind::QuditGhz4SmsSubtracted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::QubitBell4Sms => "qubit-bell-4sms",
            SchemeKind::QubitGhzChain => "qubit-ghz-chain",
            SchemeKind::QuditBell3Sms => "qudit-bell-3sms",
            SchemeKind::QuditBellInverted => "qudit-bell-inverted",
            SchemeKind::QuditGhz4Sms => "qudit-ghz-4sms",
            SchemeKind::QuditBell2Sms => "qudit-bell-2sms",
            SchemeKind::QuditBell3SmsSubtracted => "qudit-bell-3sms-sub",
            SchemeKind::QuditBellInvertedSubtracted => "qudit-bell-inverted-sub",
            SchemeKind::QuditGhz4SmsSubtracted => "qudit-ghz-4sms-sub",
        }
    }

    /// Uses `d` (as opposed to the qubit schemes).
    pub fn is_qudit(self) -> bool {
        !matches!(self, SchemeKind::QubitBell4Sms | SchemeKind::QubitGhzChain)
    }

    pub fn is_subtracted(self) -> bool {
        matches!(
            self,
            SchemeKind::QuditBell3SmsSubtracted
                | SchemeKind::QuditBellInvertedSubtracted
                | SchemeKind::QuditGhz4SmsSubtracted
        )
    }

    pub fn is_ghz(self) -> bool {
        matches!(
            self,
            SchemeKind::QubitGhzChain | SchemeKind::QuditGhz4Sms | SchemeKind::QuditGhz4SmsSubtracted
        )
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = HeraldError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| {
                let known: Vec<&str> = SchemeKind::ALL.iter().map(|k| k.name()).collect();
                HeraldError::Config(format!("unknown scheme kind {s:?}; expected one of {}", known.join(", ")))
            })
    }
}

impl TryFrom<String> for SchemeKind {
    type Error = HeraldError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SchemeKind> for String {
    fn from(k: SchemeKind) -> String {
        k.name().to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub d: u32,
    pub n_ghz: u32,
    pub one_shot: bool,
    pub odd_termination: OddTermination,
}

impl SchemeSpec {
    pub fn qudit(kind: SchemeKind, d: u32) -> Self {
        SchemeSpec {
            kind,
            d,
            n_ghz: 2,
            one_shot: false,
            odd_termination: OddTermination::default(),
        }
    }

    pub fn chain(n_ghz: u32) -> Self {
        SchemeSpec {
            kind: SchemeKind::QubitGhzChain,
            d: 2,
            n_ghz,
            one_shot: false,
            odd_termination: OddTermination::default(),
        }
    }

    pub fn with_one_shot(mut self, one_shot: bool) -> Self {
        self.one_shot = one_shot;
        self
    }

    pub fn with_odd_termination(mut self, t: OddTermination) -> Self {
        self.odd_termination = t;
        self
    }

    fn invalid(&self, reason: impl Into<String>) -> HeraldError {
        HeraldError::InvalidScheme {
            kind: self.kind.to_string(),
            d: if self.kind == SchemeKind::QubitGhzChain { self.n_ghz } else { self.d },
            reason: reason.into(),
        }
    }

    /// Checks the constraints `build_and_run` relies on.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SchemeKind::QubitBell4Sms => {}
            SchemeKind::QubitGhzChain => {
                if self.n_ghz < 2 {
                    return Err(self.invalid("a GHZ chain needs n_ghz >= 2"));
                }
            }
            _ => {
                if self.d < 2 {
                    return Err(self.invalid("needs d >= 2"));
                }
                if self.kind == SchemeKind::QuditBellInverted && self.d != 3 {
                    return Err(self.invalid(
                        "the inverted Bell state is only heralded for d = 3 without subtraction",
                    ));
                }
            }
        }
        if self.one_shot && !self.kind.is_subtracted() {
            return Err(self.invalid("one_shot applies only to photon-subtraction variants"));
        }
        Ok(())
    }
}

/// Shape of the compiled setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockStructure {
    /// Ports of each splitter block (2, 3 or 4).
    pub block_ports: usize,
    pub blocks: usize,
    /// Ports of each connecting multiport.
    pub connecting_ports: usize,
    pub connectors: usize,
    /// Photons the heralding detection must count.
    pub detected_photons: u32,
    pub subtraction: bool,
    pub description: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeResult {
    pub spec: SchemeSpec,
    pub total_probability: f64,
    pub closed_form: f64,
    pub outcomes: Vec<HeraldOutcome>,
    pub block_structure: BlockStructure,
    pub enumeration: Enumeration,
    /// Labels of the undetected modes, in conditional-state order.
    pub residual_modes: Vec<String>,
    /// Branches a successful conditional state must consist of.
    pub target_branches: Vec<FockState>,
    /// Per-block chance that the subtraction fired.
    pub occupancy_probability: Option<f64>,
}

/// Compiles `spec`, runs it exactly and attaches the closed form.
pub fn build_and_run(spec: &SchemeSpec) -> Result<SchemeResult> {
    spec.validate()?;
    let closed_form = closed_form_probability(spec)?;
    match spec.kind {
        SchemeKind::QubitBell4Sms | SchemeKind::QubitGhzChain => {
            let n = if spec.kind == SchemeKind::QubitBell4Sms { 2 } else { spec.n_ghz };
            let run = chain::run_chain(n, spec.odd_termination)?;
            Ok(SchemeResult {
                spec: *spec,
                total_probability: run.outcomes.iter().map(|o| o.probability).sum(),
                closed_form,
                enumeration: Enumeration::Full {
                    outputs: run.outcomes.len() as u64,
                },
                outcomes: run.outcomes,
                block_structure: run.structure,
                residual_modes: run.residual_modes,
                target_branches: run.target_branches,
                occupancy_probability: None,
            })
        }
        kind => {
            let setup = ConnectedSetup::for_kind(kind, spec.d)?;
            let mut run = setup.run()?;
            let mut total = run.total_probability;
            if spec.one_shot {
                let p = run.occupancy_probability.unwrap_or(1.0);
                let factor = p.powi(setup.blocks as i32);
                total *= factor;
                for o in &mut run.outcomes {
                    o.probability *= factor;
                }
            }
            Ok(SchemeResult {
                spec: *spec,
                total_probability: total,
                closed_form,
                outcomes: run.outcomes,
                block_structure: setup.structure(),
                enumeration: run.enumeration,
                residual_modes: setup.residual_labels(),
                target_branches: setup.target_branches(),
                occupancy_probability: run.occupancy_probability,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportFailure {
    pub outcome_index: usize,
    pub pattern_instance: BTreeMap<usize, u8>,
    /// Offending Fock term, if the failure is about a specific term.
    pub term: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub outcomes_checked: usize,
    pub failures: Vec<SupportFailure>,
    /// Largest `| |amplitude| − 1/√branches |` over all passing outcomes.
    pub max_weight_deviation: f64,
    /// Relative phases of every outcome, first branch at 0.
    pub phases: Vec<Vec<f64>>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.outcomes_checked > 0
    }
}

/// Tolerance on branch magnitudes used by [`verify_heralded_state`].
pub const WEIGHT_TOL: f64 = 1e-9;

/// Checks every outcome's conditional state against the target branch set:
/// exact support, equal weights, and (for the chain) the μ/η-swap pairing.
pub fn verify_heralded_state(result: &SchemeResult) -> VerificationReport {
    let mut failures = Vec::new();
    let mut phases = Vec::new();
    let mut max_dev: f64 = 0.0;
    let chain_like = matches!(result.spec.kind, SchemeKind::QubitBell4Sms | SchemeKind::QubitGhzChain);

    for (i, o) in result.outcomes.iter().enumerate() {
        let fail = |term: Option<String>, reason: String| SupportFailure {
            outcome_index: i,
            pattern_instance: o.pattern_instance.clone(),
            term,
            reason,
        };
        let branches = if chain_like {
            match chain::ghz_support(&o.conditional_state) {
                Ok(()) => 2,
                Err((term, reason)) => {
                    failures.push(fail(term, reason));
                    continue;
                }
            }
        } else {
            match extract_phases(o, Some(&result.target_branches)) {
                Ok(_) => {}
                Err(HeraldError::SupportMismatch { term, .. }) => {
                    failures.push(fail(Some(term), "term outside the target branch set".into()));
                    continue;
                }
                Err(e) => {
                    failures.push(fail(None, e.to_string()));
                    continue;
                }
            }
            if o.conditional_state.len() != result.target_branches.len() {
                failures.push(fail(
                    None,
                    format!(
                        "{} of {} branches present",
                        o.conditional_state.len(),
                        result.target_branches.len()
                    ),
                ));
                continue;
            }
            result.target_branches.len()
        };
        let expected = 1.0 / (branches as f64).sqrt();
        let dev = o
            .conditional_state
            .iter()
            .map(|(_, a)| (a.norm() - expected).abs())
            .fold(0.0, f64::max);
        if dev > WEIGHT_TOL {
            failures.push(fail(None, format!("unequal branch weights (deviation {dev:.3e})")));
            continue;
        }
        max_dev = max_dev.max(dev);
        phases.push(o.phases.clone());
    }

    VerificationReport {
        outcomes_checked: result.outcomes.len(),
        failures,
        max_weight_deviation: max_dev,
        phases,
    }
}
