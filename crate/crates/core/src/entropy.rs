//! Exact (non-private) Shannon entropy of visit distributions, in nats.

use crate::{Error, Nats, Result};

/// Shannon entropy of the distribution `p_u = c_u / Σc`.
///
/// Terms are summed in iteration order; callers pass counts sorted by user id so
/// results are reproducible bit for bit. Zero counts contribute nothing.
pub fn location_entropy<I>(counts: I) -> Result<Nats>
where
    I: IntoIterator<Item = u64>,
    I::IntoIter: Clone,
{
    let counts = counts.into_iter();
    let total: u64 = counts.clone().sum();
    if total == 0 {
        return Err(Error::EmptyCounts);
    }
    let total = total as f64;
    let h = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// Entropy of a two-outcome distribution `(p, q)` with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64, q: f64) -> Nats {
    let term = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    term(p) + term(q)
}

/// Entropy after a user with `c_lu` visits joins a location whose `c_l` visits
/// have entropy `h`.
pub fn entropy_add_user(h: Nats, c_l: u64, c_lu: u64) -> Nats {
    let total = (c_l + c_lu) as f64;
    let old_share = c_l as f64 / total;
    let new_share = c_lu as f64 / total;
    old_share * h + binary_entropy(new_share, old_share)
}

/// Entropy after a user holding `c_lu` of the location's `c_l` visits leaves.
/// Inverse of [`entropy_add_user`].
pub fn entropy_remove_user(h: Nats, c_l: u64, c_lu: u64) -> Result<Nats> {
    if c_lu == 0 || c_lu > c_l {
        return Err(Error::InvalidParameter(format!(
            "cannot remove {c_lu} of {c_l} visits"
        )));
    }
    if c_lu == c_l {
        return Err(Error::EmptiedLocation { total: c_l });
    }
    let rest = (c_l - c_lu) as f64;
    let total = c_l as f64;
    let h_split = binary_entropy(c_lu as f64 / total, rest / total);
    Ok(((total / rest) * (h - h_split)).max(0.0))
}

/// `ln n`, the entropy of `n` equally likely visitors.
pub fn max_entropy(n: u64) -> Nats {
    (n as f64).ln()
}
