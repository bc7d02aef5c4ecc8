//! Passive linear-optical transformations.
//!
//! Convention: entry `(k, l)` is the amplitude for a photon entering mode
//! `k` to leave in mode `l`, so the creation operators transform as
//! `a†_k -> Σ_l U[k][l] b†_l`. Under this row convention the transfer
//! matrix of "`first`, then `second`" is the product `first · second`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{HeraldError, Result};
use crate::fock::{ModeIndex, ModeLayout};

/// Maximum elementwise deviation of `U U†` from the identity we accept.
pub const UNITARITY_TOL: f64 = 1e-10;

/// How a unitary was built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Provenance {
    Dft { ports: usize },
    Embed { inner: Box<Provenance>, targets: Vec<usize> },
    Compose { first: Box<Provenance>, second: Box<Provenance> },
    InternalRotation { spatial_mode: usize },
    Custom { label: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Unitary {
    matrix: DMatrix<Complex64>,
    provenance: Provenance,
}

impl Unitary {
    /// Wraps a matrix after checking that it is square and unitary.
    pub fn new(matrix: DMatrix<Complex64>, provenance: Provenance) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(HeraldError::invalid(format!(
                "unitary must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let u = Unitary { matrix, provenance };
        let err = u.unitarity_error();
        if err >= UNITARITY_TOL {
            return Err(HeraldError::invalid(format!(
                "matrix is not unitary (max |UU† - I| = {err:e})"
            )));
        }
        Ok(u)
    }

    /// Skips the unitarity check. Only used to inject faults in self-checks.
    pub(crate) fn new_unchecked(matrix: DMatrix<Complex64>, provenance: Provenance) -> Self {
        Unitary { matrix, provenance }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(HeraldError::invalid("identity needs dim >= 1"));
        }
        Ok(Unitary {
            matrix: DMatrix::identity(dim, dim),
            provenance: Provenance::Custom {
                label: "identity".into(),
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn entry(&self, input: usize, output: usize) -> Complex64 {
        self.matrix[(input, output)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary {
            matrix: self.matrix.adjoint(),
            provenance: Provenance::Custom {
                label: "adjoint".into(),
            },
        }
    }

    pub fn unitarity_error(&self) -> f64 {
        let n = self.dim();
        let prod = &self.matrix * self.matrix.adjoint();
        let eye = DMatrix::<Complex64>::identity(n, n);
        (prod - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Nonzero entries of each input row, as `(output mode, amplitude)`.
    pub(crate) fn sparse_rows(&self) -> Vec<Vec<(usize, Complex64)>> {
        (0..self.dim())
            .map(|k| {
                (0..self.dim())
                    .filter_map(|l| {
                        let z = self.matrix[(k, l)];
                        (z.norm() > 1e-15).then_some((l, z))
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_record(&self) -> UnitaryRecord {
        let n = self.dim();
        let mut entries = Vec::with_capacity(n * n);
        for k in 0..n {
            for l in 0..n {
                let z = self.matrix[(k, l)];
                entries.push([z.re, z.im]);
            }
        }
        UnitaryRecord {
            dim: n,
            entries,
            provenance: self.provenance.clone(),
        }
    }

    pub fn from_record(rec: &UnitaryRecord) -> Result<Self> {
        if rec.entries.len() != rec.dim * rec.dim {
            return Err(HeraldError::invalid("entry count does not match dim"));
        }
        let m = DMatrix::from_row_iterator(
            rec.dim,
            rec.dim,
            rec.entries.iter().map(|e| Complex64::new(e[0], e[1])),
        );
        Unitary::new(m, rec.provenance.clone())
    }
}

/// JSON form: dim, row-major `[re, im]` entries and the provenance tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryRecord {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
    pub provenance: Provenance,
}

/// N-port symmetric multiport splitter: `U[k][l] = ω^(k l) / √N`, `ω = e^{2πi/N}`.
pub fn dft_unitary(ports: usize) -> Result<Unitary> {
    if ports == 0 {
        return Err(HeraldError::invalid("DFT needs at least one port"));
    }
    let scale = 1.0 / (ports as f64).sqrt();
    let m = DMatrix::from_fn(ports, ports, |k, l| {
        // reduce the exponent first so large k*l keeps full precision
        let e = (k * l) % ports;
        Complex64::from_polar(scale, 2.0 * PI * e as f64 / ports as f64)
    });
    Unitary::new(m, Provenance::Dft { ports })
}

/// Places `u` on `targets` (in order) inside a `total_modes` identity.
pub fn embed(u: &Unitary, targets: &[usize], total_modes: usize) -> Result<Unitary> {
    if targets.len() != u.dim() {
        return Err(HeraldError::invalid(format!(
            "{} target modes for a {}-mode unitary",
            targets.len(),
            u.dim()
        )));
    }
    let mut seen = vec![false; total_modes];
    for &t in targets {
        if t >= total_modes {
            return Err(HeraldError::invalid(format!(
                "target mode {t} out of range for {total_modes} modes"
            )));
        }
        if std::mem::replace(&mut seen[t], true) {
            return Err(HeraldError::invalid(format!("duplicate target mode {t}")));
        }
    }
    let mut m = DMatrix::<Complex64>::identity(total_modes, total_modes);
    for &t in targets {
        m[(t, t)] = Complex64::new(0.0, 0.0);
    }
    for (i, &ti) in targets.iter().enumerate() {
        for (j, &tj) in targets.iter().enumerate() {
            m[(ti, tj)] = u.matrix[(i, j)];
        }
    }
    Unitary::new(
        m,
        Provenance::Embed {
            inner: Box::new(u.provenance.clone()),
            targets: targets.to_vec(),
        },
    )
}

/// Acts as `u` across the given spatial modes, identically on every
/// internal label.
pub fn embed_spatial(u: &Unitary, spatial_modes: &[usize], layout: ModeLayout) -> Result<Unitary> {
    if spatial_modes.len() != u.dim() {
        return Err(HeraldError::invalid(format!(
            "{} spatial modes for a {}-mode unitary",
            spatial_modes.len(),
            u.dim()
        )));
    }
    let total = layout.mode_count();
    let mut flat_targets = Vec::with_capacity(spatial_modes.len() * layout.internal_labels());
    for internal in 0..layout.internal_labels() {
        for &spatial in spatial_modes {
            flat_targets.push(layout.flatten(ModeIndex { spatial, internal })?);
        }
    }
    let block = block_diagonal(u, layout.internal_labels());
    let mut out = embed(&block, &flat_targets, total)?;
    out.provenance = Provenance::Embed {
        inner: Box::new(u.provenance.clone()),
        targets: flat_targets,
    };
    Ok(out)
}

fn block_diagonal(u: &Unitary, copies: usize) -> Unitary {
    let n = u.dim();
    let mut m = DMatrix::<Complex64>::zeros(n * copies, n * copies);
    for c in 0..copies {
        m.view_mut((c * n, c * n), (n, n)).copy_from(&u.matrix);
    }
    Unitary::new_unchecked(m, u.provenance.clone())
}

/// "Apply `first`, then `second`." Dimensions must agree.
pub fn compose(first: &Unitary, second: &Unitary) -> Result<Unitary> {
    if first.dim() != second.dim() {
        return Err(HeraldError::invalid(format!(
            "cannot compose {}-mode and {}-mode unitaries",
            first.dim(),
            second.dim()
        )));
    }
    Unitary::new(
        &first.matrix * &second.matrix,
        Provenance::Compose {
            first: Box::new(first.provenance.clone()),
            second: Box::new(second.provenance.clone()),
        },
    )
}

/// Rotates the two internal labels of one spatial mode by the 2x2 unitary
/// `r` (`a†_i -> Σ_j r[i][j] a†_j`); identity on every other mode.
///
/// With `r = dft_unitary(2)` this is the change into the `±` basis,
/// `|±⟩ = (|μ⟩ ± |η⟩)/√2`, ahead of number detection.
pub fn internal_rotation(spatial_mode: usize, r: &Unitary, layout: ModeLayout) -> Result<Unitary> {
    if layout.internal_labels() != 2 {
        return Err(HeraldError::UnsupportedLayout(format!(
            "internal rotation needs 2 internal labels, layout has {}",
            layout.internal_labels()
        )));
    }
    if r.dim() != 2 {
        return Err(HeraldError::invalid("internal rotation must be 2x2"));
    }
    let targets = [
        layout.flatten(ModeIndex { spatial: spatial_mode, internal: 0 })?,
        layout.flatten(ModeIndex { spatial: spatial_mode, internal: 1 })?,
    ];
    let mut out = embed(r, &targets, layout.mode_count())?;
    out.provenance = Provenance::InternalRotation { spatial_mode };
    Ok(out)
}

/// Haar-random unitary from the QR decomposition of a complex Ginibre
/// matrix, with the phases of `R`'s diagonal folded back into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Unitary> {
    if dim == 0 {
        return Err(HeraldError::invalid("random unitary needs dim >= 1"));
    }
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Unitary::new(q, Provenance::Custom { label: "haar".into() })
}
