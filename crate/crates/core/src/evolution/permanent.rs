//! Matrix permanents and boson transition amplitudes.
//!
//! `⟨out| U |in⟩ = perm(U[in|out]) / √(Π n_k! Π m_l!)`, where `U[in|out]`
//! repeats row `k` `n_k` times and column `l` `m_l` times.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{HeraldError, Result};
use crate::fock::{Amplitude, FockState};
use crate::interferometer::Unitary;

/// Ryser's formula with Gray-code subset order:
/// `perm(A) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j∈S} a_ij`.
/// Each step flips one column in or out of `S`, so the row sums update in O(n).
pub fn permanent(a: &DMatrix<Complex64>) -> Complex64 {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "permanent of a non-square matrix");
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    assert!(n < 63, "permanent of a {n}x{n} matrix is out of reach");

    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        let bit = 1u64 << j;
        gray ^= bit;
        if gray & bit != 0 {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s += a[(i, j)];
            }
        } else {
            for (i, s) in row_sums.iter_mut().enumerate() {
                *s -= a[(i, j)];
            }
        }
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            acc += prod;
        } else {
            acc -= prod;
        }
    }
    if n % 2 == 1 {
        -acc
    } else {
        acc
    }
}

fn check_dims(u: &Unitary, input: &FockState, output: &FockState) -> Result<()> {
    if input.mode_count() != u.dim() || output.mode_count() != u.dim() {
        return Err(HeraldError::invalid(format!(
            "transition {input} -> {output} on a {}-mode unitary",
            u.dim()
        )));
    }
    Ok(())
}

fn sqrt_factorial_product(state: &FockState) -> f64 {
    state
        .occupations()
        .iter()
        .map(|&n| (1..=u32::from(n)).map(f64::from).product::<f64>().sqrt())
        .product()
}

/// `⟨output| U |input⟩` from the permanent of the explicitly expanded
/// row/column-repeated submatrix. Different photon totals give exactly 0.
pub fn amplitude_permanent(u: &Unitary, input: &FockState, output: &FockState) -> Result<Amplitude> {
    check_dims(u, input, output)?;
    if input.total_photons() != output.total_photons() {
        return Ok(Amplitude::new(0.0, 0.0));
    }
    let rows = expand(input);
    let cols = expand(output);
    let n = rows.len();
    let sub = DMatrix::from_fn(n, n, |i, j| u.entry(rows[i], cols[j]));
    Ok(permanent(&sub) / (sqrt_factorial_product(input) * sqrt_factorial_product(output)))
}

/// Same amplitude, evaluated with the multiplicity-aware form of Ryser's
/// formula: `Σ_x (-1)^{N-Σx} Π_k C(n_k, x_k) Π_l (Σ_k x_k U_kl)^{m_l}`
/// with `0 <= x_k <= n_k`. Costs `Π (n_k + 1)` terms instead of `2^N`, which
/// makes spot checks on many-photon outputs affordable.
pub fn amplitude_repeated(u: &Unitary, input: &FockState, output: &FockState) -> Result<Amplitude> {
    check_dims(u, input, output)?;
    if input.total_photons() != output.total_photons() {
        return Ok(Amplitude::new(0.0, 0.0));
    }
    let in_modes: Vec<(usize, u32)> = occupied(input);
    let out_modes: Vec<(usize, u32)> = occupied(output);
    let total = input.total_photons();

    let mut digits = vec![0u32; in_modes.len()];
    let mut col_sums = vec![Complex64::new(0.0, 0.0); out_modes.len()];
    let mut acc = Complex64::new(0.0, 0.0);
    let mut x_sum = 0u32;
    loop {
        let weight: f64 = in_modes
            .iter()
            .zip(&digits)
            .map(|(&(_, n), &x)| binomial(n, x))
            .product();
        let prod: Complex64 = col_sums
            .iter()
            .zip(&out_modes)
            .map(|(s, &(_, m))| s.powu(m))
            .product();
        let term = prod * weight;
        if (total - x_sum).is_multiple_of(2) {
            acc += term;
        } else {
            acc -= term;
        }

        // mixed-radix increment, keeping the column sums in step
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                let norm = sqrt_factorial_product(input) * sqrt_factorial_product(output);
                return Ok(acc / norm);
            }
            let (k, n) = in_modes[pos];
            if digits[pos] < n {
                digits[pos] += 1;
                x_sum += 1;
                for (s, &(l, _)) in col_sums.iter_mut().zip(&out_modes) {
                    *s += u.entry(k, l);
                }
                break;
            }
            let back = f64::from(digits[pos]);
            x_sum -= digits[pos];
            digits[pos] = 0;
            for (s, &(l, _)) in col_sums.iter_mut().zip(&out_modes) {
                *s -= u.entry(k, l) * back;
            }
            pos += 1;
        }
    }
}

fn expand(state: &FockState) -> Vec<usize> {
    state
        .occupations()
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| std::iter::repeat_n(k, usize::from(n)))
        .collect()
}

fn occupied(state: &FockState) -> Vec<(usize, u32)> {
    state
        .occupations()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(k, &n)| (k, u32::from(n)))
        .collect()
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
