//! Closed-form success probabilities.

use super::{SchemeKind, SchemeSpec};
use crate::error::{HeraldError, Result};

/// Chance that a tritter's heralding mode is occupied (subtraction fires).
pub const TRITTER_OCCUPANCY: f64 = 5.0 / 9.0;
/// Same for a quitter.
pub const QUITTER_OCCUPANCY: f64 = 17.0 / 32.0;

fn pow(base: f64, exp: u32) -> f64 {
    base.powi(exp as i32)
}

/// Success probability of `spec` from its formula. `d = 1` is accepted for
/// the qudit families (degenerate single block); `d = 0` is not.
pub fn closed_form_probability(spec: &SchemeSpec) -> Result<f64> {
    use SchemeKind::*;
    let d = spec.d;
    let df = f64::from(d);
    if spec.kind.is_qudit() && d == 0 {
        return Err(HeraldError::InvalidScheme {
            kind: spec.kind.to_string(),
            d,
            reason: "dimension must be at least 1".into(),
        });
    }
    let repeat_until_success = match spec.kind {
        QubitBell4Sms => 1.0 / 8.0,
        QubitGhzChain => {
            let n = spec.n_ghz;
            if n < 2 {
                return Err(HeraldError::InvalidScheme {
                    kind: spec.kind.to_string(),
                    d: n,
                    reason: "GHZ chain needs at least two photons".into(),
                });
            }
            if n.is_multiple_of(2) {
                pow(0.5, 2 * n - 1)
            } else {
                pow(0.5, 2 * n)
            }
        }
        QuditBell3Sms => df * pow(2.0, d - 1) / pow(3.0, 2 * d - 1),
        QuditBellInverted => {
            if d != 3 {
                return Err(HeraldError::NotApplicable {
                    kind: spec.kind.to_string(),
                    d,
                });
            }
            df * (2.0 / 9.0) * pow(1.0 / 3.0, d - 1)
        }
        QuditGhz4Sms => df * pow(3.0, d - 1) / pow(2.0, 5 * d - 3),
        QuditBell2Sms => df / pow(2.0, 2 * d - 1),
        QuditBell3SmsSubtracted => df * pow(2.0, d - 1) / pow(3.0, d),
        QuditBellInvertedSubtracted => df * 2.0 / pow(3.0, d),
        QuditGhz4SmsSubtracted => df * pow(3.0, d - 1) / pow(2.0, 3 * d - 1),
    };
    if spec.one_shot {
        let occupancy = one_shot_factor(spec.kind, d).ok_or_else(|| HeraldError::InvalidScheme {
            kind: spec.kind.to_string(),
            d,
            reason: "one-shot accounting only applies to photon-subtraction variants".into(),
        })?;
        Ok(repeat_until_success * occupancy)
    } else {
        Ok(repeat_until_success)
    }
}

/// Probability that all `d` subtractions fire in the same attempt.
pub fn one_shot_factor(kind: SchemeKind, d: u32) -> Option<f64> {
    match kind {
        SchemeKind::QuditBell3SmsSubtracted | SchemeKind::QuditBellInvertedSubtracted => {
            Some(pow(TRITTER_OCCUPANCY, d))
        }
        SchemeKind::QuditGhz4SmsSubtracted => Some(pow(QUITTER_OCCUPANCY, d)),
        _ => None,
    }
}

/// Bell plus inverted Bell, both heralded without subtraction. Only the
/// three-dimensional case has an inverted scheme.
pub fn combined_bell(d: u32) -> Result<f64> {
    if d != 3 {
        return Err(HeraldError::NotApplicable {
            kind: "combined-bell".into(),
            d,
        });
    }
    let bell = closed_form_probability(&SchemeSpec::qudit(SchemeKind::QuditBell3Sms, d))?;
    let inverted = closed_form_probability(&SchemeSpec::qudit(SchemeKind::QuditBellInverted, d))?;
    Ok(bell + inverted)
}

/// `d (2 + 2^{d-1}) / 3^d`: subtracted Bell plus subtracted inverted Bell.
pub fn combined_bell_subtracted(d: u32, one_shot: bool) -> Result<f64> {
    if d == 0 {
        return Err(HeraldError::InvalidScheme {
            kind: "combined-bell-sub".into(),
            d,
            reason: "dimension must be at least 1".into(),
        });
    }
    let df = f64::from(d);
    let p = df * (2.0 + pow(2.0, d - 1)) / pow(3.0, d);
    Ok(if one_shot { p * pow(TRITTER_OCCUPANCY, d) } else { p })
}
