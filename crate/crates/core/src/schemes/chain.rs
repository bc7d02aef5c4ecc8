//! Qubit GHZ chains of quitters joined pairwise by beam splitters.
//!
//! Each quitter receives `μ, η, μ, η` in its four inputs. Every spatial mode
//! carries two internal labels (μ = 0, η = 1). The chain is contracted block
//! by block: a set of branches, one per measurement record so far, each with
//! the unnormalized state of the modes still in play.
//!
//! Mode roles (0-based spatial index within a block):
//! - first block: 0, 1 kept; 2 measured in ±; 3 to the connector
//! - middle block: 0 from the left connector; 1, 2 kept; 3 to the right one
//! - last block: 0 from the connector; 1 measured in ±; 2, 3 kept
//!
//! Odd chains measure one more end mode: spatial 3 of the last block
//! (together with 1) or spatial 0 of the first block (together with 2),
//! accepting any two photons in the pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::BlockStructure;
use crate::error::Result;
use crate::evolution::apply;
use crate::fock::{FockState, ModeLayout, StateVector};
use crate::heralding::{project_unnormalized, DetectionPattern, HeraldOutcome};
use crate::interferometer::{dft_unitary, embed_spatial, internal_rotation};

const MU: usize = 0;
const ETA: usize = 1;

/// Which end loses a mode when the chain has an odd photon number.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OddTermination {
    /// Last quitter: its modes 2 and 4 are measured.
    #[default]
    LastModes2And4,
    /// First quitter: its modes 1 and 3 are measured.
    FirstModes1And3,
}

/// Global flat index of `(block, spatial, internal)`.
pub fn global_mode(block: usize, spatial: usize, internal: usize) -> usize {
    (block * 4 + spatial) * 2 + internal
}

/// Normalized quitter output for inputs `μ, η, μ, η`.
pub fn block_state() -> Result<StateVector> {
    let layout = ModeLayout::new(4, 2)?;
    let mut occ = vec![0u8; 8];
    for (spatial, internal) in [(0, MU), (1, ETA), (2, MU), (3, ETA)] {
        occ[spatial * 2 + internal] = 1;
    }
    let u = embed_spatial(&dft_unitary(4)?, &[0, 1, 2, 3], layout)?;
    apply(&u, &StateVector::product_input(&occ)?)
}

struct Branches {
    /// (block, spatial) of every mode still in play, ascending.
    spatial: Vec<(usize, usize)>,
    items: Vec<(BTreeMap<usize, u8>, StateVector)>,
}

impl Branches {
    fn layout(&self) -> Result<ModeLayout> {
        ModeLayout::new(self.spatial.len(), 2)
    }

    fn pos(&self, block: usize, spatial: usize) -> usize {
        self.spatial
            .iter()
            .position(|&m| m == (block, spatial))
            .expect("mode still in play")
    }

    fn add_block(&mut self, block: usize, state: &StateVector) {
        self.spatial.extend((0..4).map(|s| (block, s)));
        for (_, s) in &mut self.items {
            *s = s.tensor(state);
        }
    }

    fn rotate_pm(&mut self, block: usize, spatial: usize) -> Result<()> {
        let u = internal_rotation(self.pos(block, spatial), &dft_unitary(2)?, self.layout()?)?;
        for (_, s) in &mut self.items {
            *s = apply(&u, s)?;
        }
        Ok(())
    }

    fn connect(&mut self, left: (usize, usize), right: (usize, usize)) -> Result<()> {
        let u = embed_spatial(
            &dft_unitary(2)?,
            &[self.pos(left.0, left.1), self.pos(right.0, right.1)],
            self.layout()?,
        )?;
        for (_, s) in &mut self.items {
            *s = apply(&u, s)?;
        }
        Ok(())
    }

    /// Detects whole spatial modes. Each group is `(modes, labels, total)`:
    /// the photons carrying any of `labels` in `modes` must add to `total`.
    fn measure(&mut self, groups: &[(&[(usize, usize)], &[usize], u32)]) -> Result<()> {
        let mut pattern = DetectionPattern::new();
        let mut measured = Vec::new();
        for (modes, labels, total) in groups {
            let flat: Vec<usize> = modes
                .iter()
                .flat_map(|&(b, s)| {
                    let p = self.pos(b, s);
                    labels.iter().map(move |&l| p * 2 + l)
                })
                .collect();
            pattern = pattern.aggregate(flat, *total)?;
            measured.extend(modes.iter().copied());
        }
        let local_to_global: Vec<usize> = self
            .spatial
            .iter()
            .flat_map(|&(b, s)| [global_mode(b, s, MU), global_mode(b, s, ETA)])
            .collect();

        let mut next = Vec::new();
        for (record, state) in &self.items {
            for (inst, rest) in project_unnormalized(state, &pattern)? {
                let mut rec = record.clone();
                rec.extend(inst.into_iter().map(|(m, c)| (local_to_global[m], c)));
                next.push((rec, rest));
            }
        }
        self.items = next;
        self.spatial.retain(|m| !measured.contains(m));
        Ok(())
    }
}

pub(crate) struct ChainRun {
    pub outcomes: Vec<HeraldOutcome>,
    pub structure: BlockStructure,
    pub residual_modes: Vec<String>,
    pub target_branches: Vec<FockState>,
}

/// Runs an `n`-photon chain (`n = 2` is the single-quitter Bell scheme).
pub(crate) fn run_chain(n: u32, odd: OddTermination) -> Result<ChainRun> {
    let blocks = n.div_ceil(2) as usize;
    let odd_n = n % 2 == 1;
    let block = block_state()?;
    let both = [MU, ETA];

    let mut br = Branches {
        spatial: (0..4).map(|s| (0, s)).collect(),
        items: vec![(BTreeMap::new(), block.clone())],
    };

    // first block's end
    br.rotate_pm(0, 2)?;
    if odd_n && odd == OddTermination::FirstModes1And3 {
        br.rotate_pm(0, 0)?;
        br.measure(&[(&[(0, 0), (0, 2)], &both, 2)])?;
    } else if blocks == 1 {
        br.rotate_pm(0, 3)?;
        br.measure(&[(&[(0, 2)], &both, 1), (&[(0, 3)], &both, 1)])?;
    } else {
        br.measure(&[(&[(0, 2)], &both, 1)])?;
    }

    for b in 1..blocks {
        br.add_block(b, &block);
        br.connect((b - 1, 3), (b, 0))?;
        let pair = [(b - 1, 3), (b, 0)];
        br.measure(&[(&pair, &[MU], 1), (&pair, &[ETA], 1)])?;
        if b == blocks - 1 {
            br.rotate_pm(b, 1)?;
            if odd_n && odd == OddTermination::LastModes2And4 {
                br.rotate_pm(b, 3)?;
                br.measure(&[(&[(b, 1), (b, 3)], &both, 2)])?;
            } else {
                br.measure(&[(&[(b, 1)], &both, 1)])?;
            }
        }
    }

    let residual_modes = br
        .spatial
        .iter()
        .flat_map(|&(b, s)| {
            ["mu", "eta"]
                .into_iter()
                .map(move |l| format!("block{}.mode{}.{l}", b + 1, s + 1))
        })
        .collect();
    let target_branches = ghz_branches(br.spatial.len());
    let outcomes = br
        .items
        .iter()
        .filter(|(_, s)| !s.is_empty())
        .map(|(rec, s)| HeraldOutcome::from_unnormalized(rec.clone(), s, 1.0))
        .collect();

    Ok(ChainRun {
        outcomes,
        structure: BlockStructure {
            block_ports: 4,
            blocks,
            connecting_ports: 2,
            connectors: blocks - 1,
            detected_photons: 4 * blocks as u32 - n,
            subtraction: false,
            description: format!(
                "{blocks} x quitter (inputs mu, eta, mu, eta) joined by {} beam splitter(s); \
                 one mu and one eta photon per beam splitter, end modes measured in the +/- basis",
                blocks - 1
            ),
        },
        residual_modes,
        target_branches,
    })
}

/// The two GHZ branches on `modes` spatial modes: alternating `η μ η μ …`
/// and its μ/η swap, in lexicographic order.
fn ghz_branches(modes: usize) -> Vec<FockState> {
    let a: Vec<u8> = (0..modes).flat_map(|_| [0, 1]).collect();
    let b: Vec<u8> = (0..modes).flat_map(|_| [1, 0]).collect();
    let mut v = vec![FockState::new(a), FockState::new(b)];
    v.sort();
    v
}

/// Checks a two-branch GHZ support: exactly two terms, one photon per
/// spatial mode, the second term the μ/η swap of the first.
pub(crate) fn ghz_support(state: &StateVector) -> std::result::Result<(), (Option<String>, String)> {
    let terms: Vec<&FockState> = state.iter().map(|(f, _)| f).collect();
    for f in &terms {
        let occ = f.occupations();
        if occ.chunks(2).any(|c| c.iter().map(|&x| u32::from(x)).sum::<u32>() != 1) {
            return Err((Some(f.to_string()), "not one photon per remaining mode".into()));
        }
    }
    if terms.len() != 2 {
        return Err((None, format!("{} branches instead of 2", terms.len())));
    }
    let swapped: Vec<u8> = terms[0].occupations().chunks(2).flat_map(|c| [c[1], c[0]]).collect();
    if swapped != terms[1].occupations() {
        return Err((Some(terms[1].to_string()), "branches are not related by a mu/eta swap".into()));
    }
    Ok(())
}
