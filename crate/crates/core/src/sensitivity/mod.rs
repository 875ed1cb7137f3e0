//! Sensitivity of location entropy to adding or removing one user.
//!
//! All bounds are parameterized by `C`, the maximum number of visits a single
//! user may contribute to a location, and (for the local bounds) by `n`, the
//! number of users visiting the location.
//!
//! * [`global_sensitivity`]: worst case over every location.
//! * [`local_sensitivity`]: worst case over locations with exactly `n` users.
//! * [`crowd_blend_sensitivity`]: worst case over locations with at least `k` users.
//! * [`precompute_smooth_sensitivity`]: `β`-smooth upper envelope of the local bound.
//! * [`brute_force_local_sensitivity`]: exhaustive oracle for small `(n, C)`.

mod curve;
mod oracle;
mod smooth;

pub use curve::{bound_curve, read_curve, write_curve, CurvePoint};
pub use oracle::{brute_force_local_sensitivity, integer_min_entropy};
pub use smooth::{precompute_smooth_sensitivity, SensitivityParams, SensitivityTable};

use crate::{Error, Nats, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Global sensitivity `max{ln 2, ln C - ln ln C - 1}`.
///
/// The second branch only exists for `C > e`; below that the peak of the
/// single-location bound is the two-user case.
pub fn global_sensitivity(c: u64) -> Nats {
    let c = c.max(1) as f64;
    let ln_c = c.ln();
    if ln_c > 1.0 {
        LN_2.max(ln_c - ln_c.ln() - 1.0)
    } else {
        LN_2
    }
}

/// `C / (ln C - 1) + 1`: beyond this many users the local sensitivity strictly
/// decreases in `n`. `None` when `C <= e`, where no such point exists.
pub fn decreasing_threshold(c: u64) -> Option<f64> {
    let c = c as f64;
    let denom = c.ln() - 1.0;
    (denom > 0.0).then(|| c / denom + 1.0)
}

/// Smallest integer `k` satisfying [`decreasing_threshold`], if any.
pub fn min_crowd_size(c: u64) -> Option<u64> {
    decreasing_threshold(c).map(|t| t.ceil() as u64)
}

/// Lower bound on the entropy of `n` visit counts in `[1, C]`, from the
/// continuous relaxation of the mix of 1-valued and `C`-valued counts.
///
/// Clamped at zero: for very small `n` the relaxation goes negative.
pub fn min_entropy_bound(n: u64, c: u64) -> Result<Nats> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if c < 2 {
        return Err(Error::InvalidParameter(
            "the minimum-entropy bound needs C >= 2".into(),
        ));
    }
    Ok(min_entropy_relaxed(n as f64, c as f64).max(0.0))
}

fn min_entropy_relaxed(n: f64, c: f64) -> f64 {
    let r = c.ln() / (c - 1.0);
    n.ln() - r + r.ln() + 1.0
}

/// Largest entropy change from removing the `C`-visit user of `{1, ..., 1, C}`.
fn removal_term(n: f64, c: f64) -> f64 {
    ((n - 1.0) / (n - 1.0 + c)).ln() + c / (n - 1.0 + c) * c.ln()
}

/// Largest entropy change from adding a `C`-visit user to `n` single visits.
fn addition_term(n: f64, c: f64) -> f64 {
    (n / (n + c)).ln() + c / (n + c) * c.ln()
}

/// Largest entropy drop at the interior critical count, given a lower bound on
/// the entropy of the remaining users.
fn dilution_term(rest_entropy: f64) -> f64 {
    (-rest_entropy).exp().ln_1p()
}

/// Local sensitivity of a location visited by `n` users with counts capped at `C`.
///
/// For `C = 1` this takes the larger of the add-side `ln((n+1)/n)` and the
/// remove-side `ln(n/(n-1))`, since neighbours differ in either direction.
///
/// # Panics
///
/// If `n` or `c` is zero.
pub fn local_sensitivity(n: u64, c: u64) -> Nats {
    assert!(n >= 1 && c >= 1, "local sensitivity needs n >= 1 and C >= 1");
    if n == 1 {
        return LN_2;
    }
    let nf = n as f64;
    if c == 1 {
        return ((nf + 1.0) / nf).ln().max((nf / (nf - 1.0)).ln());
    }
    let cf = c as f64;
    let rest = min_entropy_relaxed(nf - 1.0, cf).max(0.0);
    removal_term(nf, cf)
        .max(addition_term(nf, cf))
        .max(dilution_term(rest))
}

/// Sensitivity over locations with at least `k` users, valid when
/// `k >= C / (ln C - 1) + 1`: the local bound at `n = k`.
pub fn crowd_blend_sensitivity(k: u64, c: u64) -> Result<Nats> {
    match min_crowd_size(c) {
        Some(min_k) if k >= min_k => Ok(local_sensitivity(k, c)),
        min_k => Err(Error::CrowdBlendCondition { k, c, min_k }),
    }
}
