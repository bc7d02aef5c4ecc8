//! Photon-number-resolving detection on a subset of modes.
//!
//! A [`DetectionPattern`] fixes exact counts on some modes and, optionally,
//! photon totals over disjoint groups of modes ("any split of `m` photons
//! across these ports"). Projecting a state onto a pattern yields one
//! [`HeraldOutcome`] per concrete count assignment that has support, with the
//! detected modes traced out of the conditional state.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{HeraldError, Result};
use crate::evolution::apply;
use crate::fock::{Amplitude, FockState, StateVector};
use crate::interferometer::dft_unitary;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Aggregate {
    pub modes: BTreeSet<usize>,
    pub total: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DetectionPattern {
    exact: BTreeMap<usize, u8>,
    aggregates: Vec<Aggregate>,
}

impl DetectionPattern {
    pub fn new() -> Self {
        Self::default()
    }

    fn claimed(&self, mode: usize) -> bool {
        self.exact.contains_key(&mode) || self.aggregates.iter().any(|a| a.modes.contains(&mode))
    }

    pub fn exact(mut self, mode: usize, count: u8) -> Result<Self> {
        if self.claimed(mode) {
            return Err(HeraldError::invalid(format!("mode {mode} constrained twice")));
        }
        self.exact.insert(mode, count);
        Ok(self)
    }

    /// Requires exactly `total` photons across `modes`, in any distribution.
    pub fn aggregate(mut self, modes: impl IntoIterator<Item = usize>, total: u32) -> Result<Self> {
        let modes: BTreeSet<usize> = modes.into_iter().collect();
        if modes.is_empty() {
            return Err(HeraldError::invalid("aggregate over no modes"));
        }
        if let Some(m) = modes.iter().find(|&&m| self.claimed(m)) {
            return Err(HeraldError::invalid(format!("mode {m} constrained twice")));
        }
        self.aggregates.push(Aggregate { modes, total });
        Ok(self)
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty() && self.aggregates.is_empty()
    }

    /// All constrained modes, ascending.
    pub fn detected_modes(&self) -> Vec<usize> {
        let mut all: BTreeSet<usize> = self.exact.keys().copied().collect();
        for a in &self.aggregates {
            all.extend(a.modes.iter().copied());
        }
        all.into_iter().collect()
    }

    fn accepts(&self, state: &FockState) -> bool {
        self.exact.iter().all(|(&m, &n)| state.get(m) == n)
            && self.aggregates.iter().all(|a| {
                a.modes.iter().map(|&m| u32::from(state.get(m))).sum::<u32>() == a.total
            })
    }
}

/// One detection event and what it leaves behind.
#[derive(Clone, Debug, Serialize)]
pub struct HeraldOutcome {
    /// Detected mode -> photons counted there.
    pub pattern_instance: BTreeMap<usize, u8>,
    pub probability: f64,
    /// Normalized state on the undetected modes (ascending original index).
    pub conditional_state: StateVector,
    /// Argument of every conditional term, lexicographic order, first term at 0.
    pub phases: Vec<f64>,
}

impl HeraldOutcome {
    pub(crate) fn from_unnormalized(
        pattern_instance: BTreeMap<usize, u8>,
        state: &StateVector,
        reference_norm_sqr: f64,
    ) -> Self {
        let conditional_state = state.normalized();
        let phases = gauge_phases(&conditional_state);
        HeraldOutcome {
            pattern_instance,
            probability: state.norm_sqr() / reference_norm_sqr,
            conditional_state,
            phases,
        }
    }

    /// Per-mode counts in ascending mode order.
    pub fn counts(&self) -> Vec<u8> {
        self.pattern_instance.values().copied().collect()
    }
}

fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn gauge_phases(state: &StateVector) -> Vec<f64> {
    let mut args = state.iter().map(|(_, a)| a.arg());
    let Some(first) = args.next() else {
        return Vec::new();
    };
    std::iter::once(0.0).chain(args.map(|a| wrap_phase(a - first))).collect()
}

/// Projects without renormalizing: returns each supported instance with
/// the (unnormalized) state left on the undetected modes. Instances come
/// out in lexicographic order of their counts.
pub fn project_unnormalized(
    state: &StateVector,
    pattern: &DetectionPattern,
) -> Result<Vec<(BTreeMap<usize, u8>, StateVector)>> {
    let detected = pattern.detected_modes();
    if let Some(&m) = detected.iter().find(|&&m| m >= state.mode_count()) {
        return Err(HeraldError::invalid(format!(
            "pattern mode {m} outside a {}-mode state",
            state.mode_count()
        )));
    }
    let kept: Vec<usize> = (0..state.mode_count())
        .filter(|m| detected.binary_search(m).is_err())
        .collect();

    let mut groups: BTreeMap<Vec<u8>, Vec<(FockState, Amplitude)>> = BTreeMap::new();
    for (f, a) in state.iter() {
        if pattern.accepts(f) {
            let counts: Vec<u8> = detected.iter().map(|&m| f.get(m)).collect();
            groups.entry(counts).or_default().push((f.select(&kept), *a));
        }
    }

    let residual_modes = kept.len();
    groups
        .into_iter()
        .map(|(counts, terms)| {
            let instance = detected.iter().copied().zip(counts).collect();
            Ok((instance, StateVector::from_terms(residual_modes, terms)?))
        })
        .filter(|r| r.as_ref().map_or(true, |(_, s)| !s.is_empty()))
        .collect()
}

/// All outcomes of `pattern` on `state`, each with its probability and the
/// normalized conditional state.
pub fn project(state: &StateVector, pattern: &DetectionPattern) -> Result<Vec<HeraldOutcome>> {
    let reference = state.norm_sqr();
    Ok(project_unnormalized(state, pattern)?
        .into_iter()
        .map(|(inst, s)| HeraldOutcome::from_unnormalized(inst, &s, reference))
        .collect())
}

pub fn herald_probability(state: &StateVector, pattern: &DetectionPattern) -> Result<f64> {
    Ok(project(state, pattern)?.iter().map(|o| o.probability).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub terms: Vec<FockState>,
    pub magnitudes: Vec<f64>,
    /// Phase of every term after the first, relative to the first.
    pub relative_phases: Vec<f64>,
}

/// Magnitudes and relative phases of the conditional state, in canonical
/// (lexicographic) term order. With `expected` given, any term outside that
/// set is reported as a support mismatch.
pub fn extract_phases(outcome: &HeraldOutcome, expected: Option<&[FockState]>) -> Result<PhaseReport> {
    let state = &outcome.conditional_state;
    if let Some(expected) = expected {
        if let Some((f, _)) = state.iter().find(|(f, _)| !expected.contains(f)) {
            return Err(HeraldError::SupportMismatch {
                outcome: format!("{:?}", outcome.pattern_instance),
                term: f.to_string(),
            });
        }
    }
    let phases = gauge_phases(state);
    Ok(PhaseReport {
        terms: state.iter().map(|(f, _)| f.clone()).collect(),
        magnitudes: state.iter().map(|(_, a)| a.norm()).collect(),
        relative_phases: phases.into_iter().skip(1).collect(),
    })
}

/// True iff every conditional term has the same magnitude (within `tol`).
pub fn equal_weights_check(outcome: &HeraldOutcome, tol: f64) -> bool {
    let mags: Vec<f64> = outcome.conditional_state.iter().map(|(_, a)| a.norm()).collect();
    match (
        mags.iter().copied().reduce(f64::min),
        mags.iter().copied().reduce(f64::max),
    ) {
        (Some(lo), Some(hi)) => hi - lo <= tol,
        _ => true,
    }
}

/// Weak compositions of `total` into `parts` non-negative parts, in
/// lexicographic order.
pub fn weak_compositions(total: u32, parts: usize) -> Vec<Vec<u8>> {
    fn rec(remaining: u32, parts: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if parts == 1 {
            prefix.push(remaining as u8);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first as u8);
            rec(remaining - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts == 0 {
        if total == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Largest difference, over all output patterns, between the transition
/// probabilities of `input` and of each of its cyclic shifts through a
/// `ports`-port symmetric multiport.
pub fn cyclic_shift_deviation(input: &[u8]) -> Result<f64> {
    let ports = input.len();
    let u = dft_unitary(ports)?;
    let base = apply(&u, &StateVector::product_input(input)?)?;
    let mut worst: f64 = 0.0;
    for shift in 1..ports {
        let mut shifted = input.to_vec();
        shifted.rotate_right(shift);
        let out = apply(&u, &StateVector::product_input(&shifted)?)?;
        for (f, a) in base.iter() {
            worst = worst.max((a.norm_sqr() - out.amplitude(f).norm_sqr()).abs());
        }
        for (f, b) in out.iter() {
            worst = worst.max((b.norm_sqr() - base.amplitude(f).norm_sqr()).abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{dft_unitary, random_unitary};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tritter_output() -> StateVector {
        apply(&dft_unitary(3).unwrap(), &StateVector::product_input(&[1, 1, 1]).unwrap()).unwrap()
    }

    fn quitter_output() -> StateVector {
        apply(&dft_unitary(4).unwrap(), &StateVector::product_input(&[1, 1, 1, 1]).unwrap()).unwrap()
    }

    #[test]
    fn single_photon_in_tritter_mode_heralds_pair() {
        let pat = DetectionPattern::new().exact(0, 1).unwrap();
        let out = project(&tritter_output(), &pat).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(out[0].conditional_state.len(), 1);
        assert!((out[0].conditional_state.amplitude_of(&[1, 1]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_photons_in_tritter_mode_herald_vacuum() {
        let pat = DetectionPattern::new().exact(0, 3).unwrap();
        let out = project(&tritter_output(), &pat).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 2.0 / 9.0).abs() < 1e-12);
        assert!((out[0].conditional_state.amplitude_of(&[0, 0]).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_photon_in_quitter_mode() {
        let pat = DetectionPattern::new().exact(0, 1).unwrap();
        let out = project(&quitter_output(), &pat).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 0.25).abs() < 1e-12);
        let s = &out[0].conditional_state;
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(s.len(), 2);
        assert!((s.amplitude_of(&[2, 1, 0]).norm() - h).abs() < 1e-12);
        assert!((s.amplitude_of(&[0, 1, 2]).norm() - h).abs() < 1e-12);
        assert!(equal_weights_check(&out[0], 1e-9));
    }

    #[test]
    fn four_photons_in_quitter_mode() {
        let pat = DetectionPattern::new().exact(0, 4).unwrap();
        assert!((herald_probability(&quitter_output(), &pat).unwrap() - 3.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn empty_pattern_keeps_state() {
        let s = tritter_output();
        let out = project(&s, &DetectionPattern::new()).unwrap();
        assert_eq!(out.len(), 1);
        assert!((out[0].probability - 1.0).abs() < 1e-12);
        assert!(out[0].conditional_state.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn vacuum_never_clicks() {
        let pat = DetectionPattern::new().exact(0, 1).unwrap();
        let p = herald_probability(&StateVector::vacuum(2).unwrap(), &pat).unwrap();
        assert_eq!(p, 0.0);
    }

    #[test]
    fn overlapping_constraints_rejected() {
        let p = DetectionPattern::new().exact(1, 1).unwrap();
        assert!(p.clone().exact(1, 2).is_err());
        assert!(p.aggregate([0, 1], 2).is_err());
    }

    #[test]
    fn out_of_range_pattern_rejected() {
        let pat = DetectionPattern::new().exact(5, 1).unwrap();
        assert!(project(&tritter_output(), &pat).is_err());
    }

    #[test]
    fn aggregate_enumerates_instances_in_order() {
        let pat = DetectionPattern::new().aggregate([0, 1], 3).unwrap();
        let out = project(&tritter_output(), &pat).unwrap();
        let counts: Vec<Vec<u8>> = out.iter().map(HeraldOutcome::counts).collect();
        assert_eq!(counts, vec![vec![0, 3], vec![3, 0]]);
        let total: f64 = out.iter().map(|o| o.probability).sum();
        assert!((total - 4.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn phase_report_and_mismatch() {
        let s = StateVector::from_terms(
            2,
            [
                (FockState::new(vec![1, 0]), Amplitude::new(0.0, 1.0 / 2f64.sqrt())),
                (FockState::new(vec![0, 1]), Amplitude::new(0.0, -1.0 / 2f64.sqrt())),
            ],
        )
        .unwrap();
        let out = &project(&s, &DetectionPattern::new()).unwrap()[0];
        let rep = extract_phases(out, None).unwrap();
        assert_eq!(rep.terms[0], FockState::new(vec![0, 1]));
        assert!((rep.relative_phases[0].abs() - PI).abs() < 1e-12);
        let err = extract_phases(out, Some(&[FockState::new(vec![1, 0])])).unwrap_err();
        assert!(matches!(err, HeraldError::SupportMismatch { ref term, .. } if term == "|0,1⟩"));

        let single = &project(&StateVector::vacuum(2).unwrap(), &DetectionPattern::new()).unwrap()[0];
        assert!(extract_phases(single, None).unwrap().relative_phases.is_empty());
    }

    #[test]
    fn unequal_weights_detected() {
        let s = StateVector::from_terms(
            2,
            [
                (FockState::new(vec![1, 0]), Amplitude::new(0.9, 0.0)),
                (FockState::new(vec![0, 1]), Amplitude::new(0.1, 0.0)),
            ],
        )
        .unwrap();
        let out = &project(&s, &DetectionPattern::new()).unwrap()[0];
        assert!(!equal_weights_check(out, 1e-9));
    }

    #[test]
    fn weak_composition_counts() {
        assert_eq!(weak_compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(weak_compositions(4, 3).len(), 15);
        assert_eq!(weak_compositions(0, 0), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn detection_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(4, &mut rng).unwrap();
        let s = apply(&u, &StateVector::product_input(&[1, 0, 2, 0]).unwrap()).unwrap();
        let mut total = 0.0;
        for counts in weak_compositions(3, 4) {
            let mut pat = DetectionPattern::new();
            for (m, &n) in counts.iter().enumerate() {
                pat = pat.exact(m, n).unwrap();
            }
            total += herald_probability(&s, &pat).unwrap();
        }
        assert!((total - 1.0).abs() < 1e-9);
    }

    // Connecting-splitter rows: (photons detected, ports, lone count, others).
    fn connector_rows(d: usize) -> [(usize, u8, u8); 3] {
        [(d, 1, 3), (d, 1, 4), (2 * d, 0, 2)]
    }

    #[test]
    fn cyclic_shift_invariance_for_connector_inputs() {
        for d in 2..=4 {
            for (ports, lone, rest) in connector_rows(d) {
                // every other lone-port position is one of the shifts checked
                let mut input = vec![rest; ports];
                input[0] = lone;
                let dev = cyclic_shift_deviation(&input).unwrap();
                assert!(dev < 1e-9, "ports {ports}, input {input:?}: {dev:e}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn cyclic_shift_invariance_arbitrary_inputs(input in prop::collection::vec(0u8..3, 2..=6)) {
            prop_assert!(cyclic_shift_deviation(&input).unwrap() < 1e-9);
        }

        #[test]
        fn conditional_states_are_normalized(seed in any::<u64>(), count in 0u8..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_unitary(3, &mut rng).unwrap();
            let s = apply(&u, &StateVector::product_input(&[1, 1, 1]).unwrap()).unwrap();
            let pat = DetectionPattern::new().exact(0, count).unwrap();
            for o in project(&s, &pat).unwrap() {
                prop_assert!((o.conditional_state.norm() - 1.0).abs() < 1e-9);
                prop_assert!(o.probability >= 0.0 && o.probability <= 1.0 + 1e-12);
            }
        }
    }
}
