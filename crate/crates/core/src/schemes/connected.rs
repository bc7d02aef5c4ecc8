//! Splitter blocks joined by one connecting DFT on their heralding modes.
//!
//! Every block sends photons into mode 0 of its splitter; the remaining
//! modes carry the heralded state. A block's output is grouped by how many
//! photons its heralding mode holds, which leaves a small residual state per
//! occupation. Only occupation vectors whose sum equals the detected photon
//! number can contribute, so the connecting stage is a sum over those
//! sectors.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{BlockStructure, SchemeKind};
use crate::error::{HeraldError, Result};
use crate::evolution::{amplitude_repeated, apply, subtract_photon};
use crate::fock::{Amplitude, FockState, StateVector};
use crate::heralding::HeraldOutcome;
use crate::interferometer::{dft_unitary, embed, Provenance, Unitary};

/// Connector output spaces up to this size are enumerated in full.
pub const FULL_ENUMERATION_LIMIT: u64 = 250_000;
/// Detection patterns drawn when the output space is too large.
pub const SAMPLED_PATTERNS: usize = 8;
const SAMPLE_SEED: u64 = 0x05ee_d0fb_10c0;

/// How the connector's output space was covered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Enumeration {
    /// Every output pattern enumerated; `outputs` is the size of that space.
    Full { outputs: u64 },
    /// Total taken from the sector norms; `sampled` patterns evolved exactly.
    Sampled { outputs: u64, sampled: usize },
}

/// Which blocks carry the heralded photons in a target branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchTarget {
    /// One block holds the residual pattern, all others are empty.
    Single,
    /// One block is empty, all others hold the residual pattern.
    Inverted,
}

/// One heralding-occupation vector with the matching (unnormalized)
/// residual state of all blocks.
#[derive(Clone, Debug)]
pub struct Sector {
    pub heralding: Vec<u8>,
    pub residual: StateVector,
}

#[derive(Clone, Debug)]
pub struct ConnectedRun {
    pub outcomes: Vec<HeraldOutcome>,
    pub total_probability: f64,
    /// Σ‖residual‖² over all sectors with the detected photon number.
    pub sector_probability: f64,
    pub enumeration: Enumeration,
    pub occupancy_probability: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ConnectedSetup {
    pub kind: SchemeKind,
    pub d: u32,
    pub block_ports: usize,
    pub blocks: usize,
    pub subtract: bool,
    pub rectify: bool,
    pub detected: u32,
    pub target: BranchTarget,
    /// Residual occupation of a block that carries heralded photons.
    pub residual_pattern: Vec<u8>,
}

/// Maps `|2,1,0⟩ + |0,1,2⟩` on a quitter's residual modes to `|1,1,1⟩`.
pub fn ghz_rectifier() -> Result<Unitary> {
    let s = 0.5f64.sqrt();
    let m = nalgebra::DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, -s),
        ],
    );
    Unitary::new(
        m,
        Provenance::Custom {
            label: "ghz-rectifier".into(),
        },
    )
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1)) as u64
}

impl ConnectedSetup {
    pub fn for_kind(kind: SchemeKind, d: u32) -> Result<Self> {
        use SchemeKind::*;
        if d < 2 {
            return Err(HeraldError::InvalidScheme {
                kind: kind.to_string(),
                d,
                reason: "needs d >= 2".into(),
            });
        }
        let (ports, blocks, subtract, rectify, detected, target, pattern) = match kind {
            QuditBell3Sms => (3, d, false, false, 3 * d - 2, BranchTarget::Single, vec![1, 1]),
            QuditBellInverted => (3, d, false, false, d + 2, BranchTarget::Inverted, vec![1, 1]),
            QuditGhz4Sms => (4, d, false, true, 4 * d - 3, BranchTarget::Single, vec![1, 1, 1]),
            QuditBell2Sms => (2, 2 * d, false, false, 4 * d - 2, BranchTarget::Single, vec![2]),
            QuditBell3SmsSubtracted => (3, d, true, false, 2 * d - 2, BranchTarget::Single, vec![1, 1]),
            QuditBellInvertedSubtracted => (3, d, true, false, 2, BranchTarget::Inverted, vec![1, 1]),
            QuditGhz4SmsSubtracted => (4, d, true, true, 3 * d - 3, BranchTarget::Single, vec![1, 1, 1]),
            QubitBell4Sms | QubitGhzChain => {
                return Err(HeraldError::InvalidScheme {
                    kind: kind.to_string(),
                    d,
                    reason: "not a connected-block scheme".into(),
                })
            }
        };
        Ok(ConnectedSetup {
            kind,
            d,
            block_ports: ports,
            blocks: blocks as usize,
            subtract,
            rectify,
            detected,
            target,
            residual_pattern: pattern,
        })
    }

    /// Same setup, but heralding on a different photon count.
    pub fn with_detected(mut self, detected: u32) -> Self {
        self.detected = detected;
        self
    }

    pub fn residual_modes_per_block(&self) -> usize {
        self.block_ports - 1
    }

    pub fn structure(&self) -> BlockStructure {
        let splitter = match self.block_ports {
            2 => "beam splitter",
            3 => "tritter",
            _ => "quitter",
        };
        BlockStructure {
            block_ports: self.block_ports,
            blocks: self.blocks,
            connecting_ports: self.blocks,
            connectors: 1,
            detected_photons: self.detected,
            subtraction: self.subtract,
            description: format!(
                "{} x {splitter}{}{}, heralding mode 0 of each into a {}-port DFT, {} photons detected",
                self.blocks,
                if self.subtract { " + subtraction on mode 0" } else { "" },
                if self.rectify { " + rectifier on modes 1,3" } else { "" },
                self.blocks,
                self.detected
            ),
        }
    }

    pub fn residual_labels(&self) -> Vec<String> {
        (0..self.blocks)
            .flat_map(|b| (1..self.block_ports).map(move |m| format!("block{}.mode{}", b + 1, m + 1)))
            .collect()
    }

    /// The branches a successful conditional state consists of, in
    /// lexicographic order.
    pub fn target_branches(&self) -> Vec<FockState> {
        let r = self.residual_modes_per_block();
        let zeros = vec![0u8; r];
        let mut out: Vec<FockState> = (0..self.blocks)
            .map(|special| {
                let occ = (0..self.blocks)
                    .flat_map(|b| {
                        let carries = (b == special) == (self.target == BranchTarget::Single);
                        if carries { self.residual_pattern.clone() } else { zeros.clone() }
                    })
                    .collect();
                FockState::new(occ)
            })
            .collect();
        out.sort();
        out
    }

    /// One block's output: heralding occupation -> residual state, plus the
    /// subtraction success probability when subtraction is on.
    pub fn block_sectors(&self) -> Result<(BTreeMap<u8, StateVector>, Option<f64>)> {
        let n = self.block_ports;
        let input = StateVector::product_input(&vec![1u8; n])?;
        let mut state = apply(&dft_unitary(n)?, &input)?;
        let mut occupancy = None;
        if self.subtract {
            let (s, p) = subtract_photon(&state, 0)?;
            state = s;
            occupancy = Some(p);
        }
        if self.rectify {
            state = apply(&embed(&ghz_rectifier()?, &[1, 3], n)?, &state)?;
        }
        let mut groups: BTreeMap<u8, Vec<(FockState, Amplitude)>> = BTreeMap::new();
        let rest: Vec<usize> = (1..n).collect();
        for (f, a) in state.iter() {
            groups.entry(f.get(0)).or_default().push((f.select(&rest), *a));
        }
        let sectors = groups
            .into_iter()
            .map(|(h, t)| Ok((h, StateVector::from_terms(n - 1, t)?)))
            .collect::<Result<_>>()?;
        Ok((sectors, occupancy))
    }

    /// All heralding-occupation vectors summing to `total`, with the joint
    /// residual of every block, in lexicographic order of the vector.
    pub fn sectors(&self, total: u32) -> Result<Vec<Sector>> {
        let (block, _) = self.block_sectors()?;
        let options: Vec<(u8, &StateVector)> = block.iter().map(|(h, s)| (*h, s)).collect();
        let max_h = u32::from(options.iter().map(|(h, _)| *h).max().unwrap_or(0));
        let min_h = u32::from(options.iter().map(|(h, _)| *h).min().unwrap_or(0));

        let mut out = Vec::new();
        let mut chosen: Vec<usize> = Vec::with_capacity(self.blocks);
        fn rec(
            options: &[(u8, &StateVector)],
            blocks: usize,
            remaining: u32,
            bounds: (u32, u32),
            chosen: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let left = (blocks - chosen.len()) as u32;
            if left == 0 {
                if remaining == 0 {
                    out.push(chosen.clone());
                }
                return;
            }
            if remaining < bounds.0 * left || remaining > bounds.1 * left {
                return;
            }
            for (i, (h, _)) in options.iter().enumerate() {
                let h = u32::from(*h);
                if h <= remaining {
                    chosen.push(i);
                    rec(options, blocks, remaining - h, bounds, chosen, out);
                    chosen.pop();
                }
            }
        }
        let mut picks = Vec::new();
        rec(&options, self.blocks, total, (min_h, max_h), &mut chosen, &mut picks);

        for pick in picks {
            let heralding: Vec<u8> = pick.iter().map(|&i| options[i].0).collect();
            let residual = pick
                .iter()
                .skip(1)
                .fold(options[pick[0]].1.clone(), |acc, &i| acc.tensor(options[i].1));
            out.push(Sector { heralding, residual });
        }
        Ok(out)
    }

    /// Number of ways to place the detected photons on the connector outputs.
    pub fn output_space(&self) -> u64 {
        let m = u64::from(self.detected);
        let d = self.blocks as u64;
        binomial(m + d - 1, d - 1)
    }

    pub fn run(&self) -> Result<ConnectedRun> {
        let full = self.output_space() <= FULL_ENUMERATION_LIMIT;
        self.run_with(full)
    }

    /// Runs the connecting stage, enumerating every output pattern when
    /// `full` is set and otherwise a fixed pseudo-random sample.
    pub fn run_with(&self, full: bool) -> Result<ConnectedRun> {
        let (_, occupancy) = self.block_sectors()?;
        let sectors = self.sectors(self.detected)?;
        let sector_probability: f64 = sectors.iter().map(|s| s.residual.norm_sqr()).sum();
        let residual_modes = self.blocks * self.residual_modes_per_block();
        let dft = dft_unitary(self.blocks)?;
        let outputs = self.output_space();

        let patterns: Vec<(FockState, Vec<(usize, Amplitude)>)> = if full {
            let evolved: Vec<StateVector> = sectors
                .par_iter()
                .map(|s| apply(&dft, &StateVector::product_input(&s.heralding)?))
                .collect::<Result<_>>()?;
            let mut merged: BTreeMap<FockState, Vec<(usize, Amplitude)>> = BTreeMap::new();
            for (i, out) in evolved.iter().enumerate() {
                for (f, a) in out.iter() {
                    merged.entry(f.clone()).or_default().push((i, *a));
                }
            }
            merged.into_iter().collect()
        } else {
            self.sample_patterns(&sectors, &dft)?
        };

        let mut outcomes: Vec<HeraldOutcome> = patterns
            .par_iter()
            .map(|(sigma, contributions)| {
                let mut acc: FxHashMap<FockState, Amplitude> = FxHashMap::default();
                for &(i, a) in contributions {
                    for (f, r) in sectors[i].residual.iter() {
                        *acc.entry(f.clone()).or_default() += a * r;
                    }
                }
                let state = StateVector::from_terms(residual_modes, acc)?;
                let instance = sigma.occupations().iter().copied().enumerate().collect();
                Ok(HeraldOutcome::from_unnormalized(instance, &state, 1.0))
            })
            .collect::<Result<_>>()?;
        outcomes.retain(|o| o.probability > 0.0);

        let (total_probability, enumeration) = if full {
            (
                outcomes.iter().map(|o| o.probability).sum(),
                Enumeration::Full { outputs },
            )
        } else {
            (
                sector_probability,
                Enumeration::Sampled {
                    outputs,
                    sampled: outcomes.len(),
                },
            )
        };
        Ok(ConnectedRun {
            outcomes,
            total_probability,
            sector_probability,
            enumeration,
            occupancy_probability: occupancy,
        })
    }

    fn sample_patterns(
        &self,
        sectors: &[Sector],
        dft: &Unitary,
    ) -> Result<Vec<(FockState, Vec<(usize, Amplitude)>)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        let mut seen = std::collections::BTreeSet::new();
        let mut out = Vec::new();
        let inputs: Vec<FockState> = sectors.iter().map(|s| FockState::new(s.heralding.clone())).collect();
        let mut attempts = 0;
        while out.len() < SAMPLED_PATTERNS && attempts < 50 * SAMPLED_PATTERNS {
            attempts += 1;
            let mut occ = vec![0u8; self.blocks];
            for _ in 0..self.detected {
                occ[rng.random_range(0..self.blocks)] += 1;
            }
            let sigma = FockState::new(occ);
            if !seen.insert(sigma.clone()) {
                continue;
            }
            let contributions: Vec<(usize, Amplitude)> = inputs
                .par_iter()
                .enumerate()
                .map(|(i, g)| Ok((i, amplitude_repeated(dft, g, &sigma)?)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|(_, a)| a.norm() > 1e-14)
                .collect();
            if !contributions.is_empty() {
                out.push((sigma, contributions));
            }
        }
        Ok(out)
    }
}
