//! Fock basis states, composite mode indexing and sparse state vectors.
//!
//! A mode is a pair (spatial mode, internal label). Modes are flattened as
//! `spatial * internal_count + internal` so the evolution engine only ever
//! sees a flat list of bosonic modes; an internal degree of freedom is just
//! a wider mode space.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HeraldError, Result};
use crate::numfmt::sig12;

pub type Amplitude = Complex64;

/// Terms below this magnitude are dropped after every evolution step.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub spatial: usize,
    pub internal: usize,
}

/// Shape of a mode space: `spatial` spatial modes, each carrying `internal`
/// orthogonal internal labels (1 for plain path encoding, 2 for a qubit).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeLayout {
    spatial: usize,
    internal: usize,
}

impl ModeLayout {
    pub fn new(spatial: usize, internal: usize) -> Result<Self> {
        if spatial == 0 || internal == 0 {
            return Err(HeraldError::invalid(format!(
                "mode layout needs at least one spatial mode and one internal label, got {spatial}x{internal}"
            )));
        }
        Ok(ModeLayout { spatial, internal })
    }

    pub fn path_only(spatial: usize) -> Result<Self> {
        Self::new(spatial, 1)
    }

    pub fn spatial_modes(&self) -> usize {
        self.spatial
    }

    pub fn internal_labels(&self) -> usize {
        self.internal
    }

    pub fn mode_count(&self) -> usize {
        self.spatial * self.internal
    }

    pub fn flatten(&self, index: ModeIndex) -> Result<usize> {
        if index.spatial >= self.spatial || index.internal >= self.internal {
            return Err(HeraldError::invalid(format!(
                "mode ({}, {}) outside layout {}x{}",
                index.spatial, index.internal, self.spatial, self.internal
            )));
        }
        Ok(index.spatial * self.internal + index.internal)
    }

    pub fn unflatten(&self, flat: usize) -> Result<ModeIndex> {
        if flat >= self.mode_count() {
            return Err(HeraldError::invalid(format!(
                "flat mode {flat} outside layout with {} modes",
                self.mode_count()
            )));
        }
        Ok(ModeIndex {
            spatial: flat / self.internal,
            internal: flat % self.internal,
        })
    }
}

/// Occupation-number basis state. Ordering is lexicographic on occupations.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    occupations: Vec<u8>,
    total: u32,
}

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Self {
        let total = occupations.iter().map(|&n| u32::from(n)).sum();
        FockState { occupations, total }
    }

    pub fn vacuum(mode_count: usize) -> Self {
        FockState {
            occupations: vec![0; mode_count],
            total: 0,
        }
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occupations
    }

    pub fn mode_count(&self) -> usize {
        self.occupations.len()
    }

    pub fn total_photons(&self) -> u32 {
        self.total
    }

    pub fn get(&self, mode: usize) -> u8 {
        self.occupations[mode]
    }

    /// Concatenation, i.e. the basis element of the tensor product.
    pub fn concat(&self, other: &FockState) -> FockState {
        let mut occ = Vec::with_capacity(self.mode_count() + other.mode_count());
        occ.extend_from_slice(&self.occupations);
        occ.extend_from_slice(&other.occupations);
        FockState {
            occupations: occ,
            total: self.total + other.total,
        }
    }

    /// The same state with the listed modes (ascending) kept.
    pub fn select(&self, modes: &[usize]) -> FockState {
        FockState::new(modes.iter().map(|&m| self.occupations[m]).collect())
    }
}

impl From<Vec<u8>> for FockState {
    fn from(occ: Vec<u8>) -> Self {
        FockState::new(occ)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("|")?;
        for (i, n) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("⟩")
    }
}

impl fmt::Debug for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for FockState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.occupations.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FockState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Vec::<u8>::deserialize(d).map(FockState::new)
    }
}

/// Sparse superposition of Fock states over a fixed number of modes.
///
/// Values are immutable once built; every operation returns a new vector.
/// States are not required to be normalized (projections and products of
/// block states are carried unnormalized so their squared norm is a
/// probability), but anything documented as normalized has unit norm.
#[derive(Clone)]
pub struct StateVector {
    mode_count: usize,
    terms: BTreeMap<FockState, Amplitude>,
    norm_cache: OnceLock<f64>,
}

impl StateVector {
    /// Builds a state from raw terms. Duplicate Fock states are summed and
    /// terms below [`PRUNE_THRESHOLD`] dropped.
    pub fn from_terms(
        mode_count: usize,
        terms: impl IntoIterator<Item = (FockState, Amplitude)>,
    ) -> Result<Self> {
        let mut map: BTreeMap<FockState, Amplitude> = BTreeMap::new();
        for (state, amp) in terms {
            if state.mode_count() != mode_count {
                return Err(HeraldError::invalid(format!(
                    "term {state} has {} modes, expected {mode_count}",
                    state.mode_count()
                )));
            }
            if !(amp.re.is_finite() && amp.im.is_finite()) {
                return Err(HeraldError::invalid(format!("non-finite amplitude on {state}")));
            }
            *map.entry(state).or_default() += amp;
        }
        Ok(Self::from_map_pruned(mode_count, map))
    }

    pub(crate) fn from_map_pruned(mode_count: usize, mut map: BTreeMap<FockState, Amplitude>) -> Self {
        map.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        StateVector {
            mode_count,
            terms: map,
            norm_cache: OnceLock::new(),
        }
    }

    /// The zero vector (no terms). Result of annihilating an empty mode.
    pub fn zero(mode_count: usize) -> Self {
        StateVector {
            mode_count,
            terms: BTreeMap::new(),
            norm_cache: OnceLock::new(),
        }
    }

    pub fn vacuum(mode_count: usize) -> Result<Self> {
        if mode_count == 0 {
            return Err(HeraldError::invalid("vacuum needs at least one mode"));
        }
        Ok(Self::basis(FockState::vacuum(mode_count)))
    }

    /// Normalized number state `Π (a†_k)^{n_k} / √(n_k!) |0⟩`.
    pub fn product_input(occupations: &[u8]) -> Result<Self> {
        if occupations.is_empty() {
            return Err(HeraldError::invalid("product input needs at least one mode"));
        }
        Ok(Self::basis(FockState::new(occupations.to_vec())))
    }

    pub fn basis(state: FockState) -> Self {
        let mode_count = state.mode_count();
        let mut terms = BTreeMap::new();
        terms.insert(state, Amplitude::new(1.0, 0.0));
        StateVector {
            mode_count,
            terms,
            norm_cache: OnceLock::new(),
        }
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in lexicographic Fock order.
    pub fn iter(&self) -> impl Iterator<Item = (&FockState, &Amplitude)> {
        self.terms.iter()
    }

    pub fn amplitude(&self, state: &FockState) -> Amplitude {
        self.terms.get(state).copied().unwrap_or_default()
    }

    pub fn amplitude_of(&self, occupations: &[u8]) -> Amplitude {
        self.amplitude(&FockState::new(occupations.to_vec()))
    }

    pub fn norm(&self) -> f64 {
        *self
            .norm_cache
            .get_or_init(|| self.terms.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn norm_sqr(&self) -> f64 {
        let n = self.norm();
        n * n
    }

    /// `⟨self|other⟩`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Amplitude> {
        if self.mode_count != other.mode_count {
            return Err(HeraldError::invalid(format!(
                "inner product of states with {} and {} modes",
                self.mode_count, other.mode_count
            )));
        }
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Amplitude::default();
        for (state, a) in &small.terms {
            if let Some(b) = large.terms.get(state) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Unit-norm copy. The zero vector stays zero.
    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        self.scaled(Amplitude::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, factor: Amplitude) -> StateVector {
        let map = self.terms.iter().map(|(s, a)| (s.clone(), a * factor)).collect();
        Self::from_map_pruned(self.mode_count, map)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &StateVector, factor: Amplitude) -> Result<StateVector> {
        if self.mode_count != other.mode_count {
            return Err(HeraldError::invalid("adding states over different mode counts"));
        }
        let mut map = self.terms.clone();
        for (s, a) in &other.terms {
            *map.entry(s.clone()).or_default() += a * factor;
        }
        Ok(Self::from_map_pruned(self.mode_count, map))
    }

    /// Tensor product; `other`'s modes are appended after `self`'s.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut map = BTreeMap::new();
        for (sa, a) in &self.terms {
            for (sb, b) in &other.terms {
                map.insert(sa.concat(sb), a * b);
            }
        }
        Self::from_map_pruned(self.mode_count + other.mode_count, map)
    }

    /// Photon numbers present in the state (sorted, deduplicated).
    pub fn photon_numbers(&self) -> Vec<u32> {
        let mut totals: Vec<u32> = self.terms.keys().map(FockState::total_photons).collect();
        totals.sort_unstable();
        totals.dedup();
        totals
    }

    /// Mean occupation of a mode, `⟨n_mode⟩`.
    pub fn mean_occupation(&self, mode: usize) -> f64 {
        self.terms
            .iter()
            .map(|(s, a)| f64::from(s.get(mode)) * a.norm_sqr())
            .sum::<f64>()
            / self.norm_sqr()
    }

    /// `max |a_f - b_f|` over the union of supports.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        let mut worst: f64 = 0.0;
        for (s, a) in &self.terms {
            worst = worst.max((a - other.amplitude(s)).norm());
        }
        for (s, b) in &other.terms {
            if !self.terms.contains_key(s) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }

    /// Canonical text form: one `|n1,...,nM⟩ : re,im` line per term,
    /// lexicographic order, 12 significant digits.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::new();
        for (s, a) in &self.terms {
            out.push_str(&format!("{s} : {},{}\n", sig12(a.re), sig12(a.im)));
        }
        out
    }

    pub fn from_canonical_text(text: &str) -> Result<StateVector> {
        let mut terms = Vec::new();
        let mut modes = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || HeraldError::invalid(format!("line {}: malformed term `{line}`", lineno + 1));
            let (ket, amp) = line.split_once(" : ").ok_or_else(bad)?;
            let inner = ket
                .strip_prefix('|')
                .and_then(|k| k.strip_suffix('⟩'))
                .ok_or_else(bad)?;
            let occ = inner
                .split(',')
                .map(|n| n.trim().parse::<u8>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            let (re, im) = amp.split_once(',').ok_or_else(bad)?;
            let re: f64 = re.trim().parse().map_err(|_| bad())?;
            let im: f64 = im.trim().parse().map_err(|_| bad())?;
            modes.get_or_insert(occ.len());
            terms.push((FockState::new(occ), Amplitude::new(re, im)));
        }
        let modes = modes.ok_or_else(|| HeraldError::invalid("empty state text"))?;
        StateVector::from_terms(modes, terms)
    }
}

impl PartialEq for StateVector {
    fn eq(&self, other: &Self) -> bool {
        self.mode_count == other.mode_count && self.terms == other.terms
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (s, a) in &self.terms {
            m.entry(&format_args!("{s}"), a);
        }
        m.finish()
    }
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    occupations: Vec<u8>,
    amplitude: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct StateRecord {
    mode_count: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateRecord {
            mode_count: self.mode_count,
            terms: self
                .terms
                .iter()
                .map(|(f, a)| TermRecord {
                    occupations: f.occupations.clone(),
                    amplitude: [a.re, a.im],
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = StateRecord::deserialize(d)?;
        StateVector::from_terms(
            rec.mode_count,
            rec.terms.into_iter().map(|t| {
                (
                    FockState::new(t.occupations),
                    Amplitude::new(t.amplitude[0], t.amplitude[1]),
                )
            }),
        )
        .map_err(serde::de::Error::custom)
    }
}
