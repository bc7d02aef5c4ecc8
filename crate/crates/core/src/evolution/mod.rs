//! Evolution of Fock-space states through linear optics.
//!
//! [`apply`] expands every input term through `a†_k -> Σ_l U[k][l] b†_l`
//! one photon at a time, merging equal monomials as it goes. The permanent
//! formulas in [`permanent`] compute single transition amplitudes by an
//! unrelated route and serve as the cross-check.

pub mod permanent;

use std::collections::BTreeMap;
use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::error::{HeraldError, Result};
use crate::fock::{Amplitude, FockState, StateVector};
use crate::interferometer::Unitary;

pub use permanent::{amplitude_permanent, amplitude_repeated, permanent};

fn sqrt_factorial(n: u8) -> f64 {
    (1..=u32::from(n)).map(f64::from).product::<f64>().sqrt()
}

/// Occupation vector used as a hash key during expansion.
trait OccKey: Clone + Eq + Hash {
    fn zero(modes: usize) -> Self;
    fn bumped(&self, mode: usize) -> Self;
    fn occupations(&self, modes: usize) -> Vec<u8>;
}

const PACKED_MODES: usize = 32;

impl OccKey for [u8; PACKED_MODES] {
    fn zero(_: usize) -> Self {
        [0; PACKED_MODES]
    }

    fn bumped(&self, mode: usize) -> Self {
        let mut k = *self;
        k[mode] += 1;
        k
    }

    fn occupations(&self, modes: usize) -> Vec<u8> {
        self[..modes].to_vec()
    }
}

impl OccKey for Vec<u8> {
    fn zero(modes: usize) -> Self {
        vec![0; modes]
    }

    fn bumped(&self, mode: usize) -> Self {
        let mut k = self.clone();
        k[mode] += 1;
        k
    }

    fn occupations(&self, _: usize) -> Vec<u8> {
        self.clone()
    }
}

fn expand<K: OccKey>(rows: &[Vec<(usize, Amplitude)>], state: &StateVector) -> BTreeMap<FockState, Amplitude> {
    let modes = state.mode_count();
    let mut out: FxHashMap<K, Amplitude> = FxHashMap::default();

    for (fock, amp) in state.iter() {
        let occ = fock.occupations();
        // monomial coefficient of Π (a†_k)^{n_k} for the normalized ket
        let coeff = occ.iter().fold(*amp, |c, &n| c / sqrt_factorial(n));
        let mut partial: FxHashMap<K, Amplitude> = FxHashMap::default();
        partial.insert(K::zero(modes), coeff);

        for (k, &n) in occ.iter().enumerate() {
            for _ in 0..n {
                let mut next: FxHashMap<K, Amplitude> = FxHashMap::default();
                next.reserve(partial.len() * rows[k].len());
                for (o, v) in &partial {
                    for &(l, z) in &rows[k] {
                        *next.entry(o.bumped(l)).or_default() += v * z;
                    }
                }
                partial = next;
            }
        }

        for (o, v) in partial {
            *out.entry(o).or_default() += v;
        }
    }

    out.into_iter()
        .map(|(o, v)| {
            let occ = o.occupations(modes);
            let f: f64 = occ.iter().map(|&m| sqrt_factorial(m)).product();
            (FockState::new(occ), v * f)
        })
        .collect()
}

/// Evolves `state` through `u`. Linear, so unnormalized inputs are fine;
/// the output norm equals the input norm.
pub fn apply(u: &Unitary, state: &StateVector) -> Result<StateVector> {
    let modes = state.mode_count();
    if u.dim() != modes {
        return Err(HeraldError::invalid(format!(
            "{}-mode unitary applied to a {modes}-mode state",
            u.dim()
        )));
    }
    let rows = u.sparse_rows();
    let map = if modes <= PACKED_MODES {
        expand::<[u8; PACKED_MODES]>(&rows, state)
    } else {
        expand::<Vec<u8>>(&rows, state)
    };
    Ok(StateVector::from_map_pruned(modes, map))
}

/// `a_mode |state⟩` without renormalization; its squared norm is `⟨n_mode⟩`.
pub fn annihilate(state: &StateVector, mode: usize) -> Result<StateVector> {
    if mode >= state.mode_count() {
        return Err(HeraldError::invalid(format!(
            "mode {mode} out of range for {} modes",
            state.mode_count()
        )));
    }
    let terms = state.iter().filter(|(f, _)| f.get(mode) > 0).map(|(f, a)| {
        let n = f.get(mode);
        let mut occ = f.occupations().to_vec();
        occ[mode] -= 1;
        (FockState::new(occ), a * f64::from(n).sqrt())
    });
    StateVector::from_terms(state.mode_count(), terms)
}

/// Probability that `mode` holds at least one photon.
pub fn occupancy_probability(state: &StateVector, mode: usize) -> Result<f64> {
    if mode >= state.mode_count() {
        return Err(HeraldError::invalid(format!(
            "mode {mode} out of range for {} modes",
            state.mode_count()
        )));
    }
    let occupied: f64 = state
        .iter()
        .filter(|(f, _)| f.get(mode) > 0)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let total = state.norm_sqr();
    Ok(if total == 0.0 { 0.0 } else { occupied / total })
}

/// Heralded photon subtraction on one mode.
///
/// Returns the normalized state `a|ψ⟩ / ‖a|ψ⟩‖` together with the chance
/// that the subtraction fires, i.e. that the mode is occupied at all. An
/// empty mode yields the zero state and probability 0.
pub fn subtract_photon(state: &StateVector, mode: usize) -> Result<(StateVector, f64)> {
    let lowered = annihilate(state, mode)?;
    let p = occupancy_probability(state, mode)?;
    Ok((lowered.normalized(), p))
}
