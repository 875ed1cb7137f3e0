//! Exhaustive reference computations for small instances.

use crate::entropy::location_entropy;
use crate::{Error, Nats, Result};

/// Largest `C^n` the enumerators accept.
const MAX_TABLES: u64 = 10_000_000;

fn check_size(n: u64, c: u64) -> Result<()> {
    let tables = u32::try_from(n)
        .ok()
        .and_then(|n| c.checked_pow(n))
        .filter(|&t| t <= MAX_TABLES);
    if n == 0 || c == 0 {
        return Err(Error::InvalidParameter("n and C must be at least 1".into()));
    }
    if tables.is_none() {
        return Err(Error::InstanceTooLarge(format!(
            "C^n = {c}^{n} exceeds {MAX_TABLES}"
        )));
    }
    Ok(())
}

/// Calls `f` on every non-decreasing sequence of `n` values in `[1, c]`.
fn for_each_multiset(n: usize, c: u64, mut f: impl FnMut(&[u64])) {
    let mut counts = vec![1u64; n];
    loop {
        f(&counts);
        // Advance to the next non-decreasing sequence.
        let Some(i) = counts.iter().rposition(|&x| x < c) else {
            return;
        };
        let next = counts[i] + 1;
        for x in &mut counts[i..] {
            *x = next;
        }
    }
}

/// Exact maximum of `|H(after) - H(before)|` over every table of `n` users with
/// counts in `[1, C]`, where `after` adds one user (count in `[1, C]`) or removes
/// one. Removal is skipped at `n = 1`, which would leave no visitors.
pub fn brute_force_local_sensitivity(n: u64, c: u64) -> Result<Nats> {
    check_size(n, c)?;
    let mut best: f64 = 0.0;
    let mut scratch = Vec::with_capacity(n as usize + 1);
    for_each_multiset(n as usize, c, |counts| {
        let before = location_entropy(counts.iter().copied()).expect("non-empty");
        scratch.clear();
        scratch.extend_from_slice(counts);
        scratch.push(0);
        for added in 1..=c {
            *scratch.last_mut().unwrap() = added;
            let after = location_entropy(scratch.iter().copied()).expect("non-empty");
            best = best.max((after - before).abs());
        }
        if counts.len() > 1 {
            for i in 0..counts.len() {
                // Equal counts give equal removals.
                if i > 0 && counts[i] == counts[i - 1] {
                    continue;
                }
                let rest = counts[..i].iter().chain(&counts[i + 1..]).copied();
                let after = location_entropy(rest).expect("non-empty");
                best = best.max((after - before).abs());
            }
        }
    });
    Ok(best)
}

/// Minimum entropy over count vectors made of `n - j` ones and `j` copies of
/// `C`, with `j` the floor or ceiling of the relaxed optimum.
pub fn integer_min_entropy(n: u64, c: u64) -> Result<Nats> {
    if n == 0 || c < 2 {
        return Err(Error::InvalidParameter("need n >= 1 and C >= 2".into()));
    }
    let (nf, cf) = (n as f64, c as f64);
    let j_star = nf * (cf * cf.ln() - cf + 1.0) / ((cf - 1.0) * (cf - 1.0));
    let floor = (j_star.floor() as u64).min(n);
    let entropy_with = |j: u64| {
        // H = ln S - (jC / S) ln C, S = n - j + jC
        let s = (n - j) as f64 + (j * c) as f64;
        s.ln() - (j * c) as f64 / s * cf.ln()
    };
    let mut best = entropy_with(floor);
    if floor < n {
        best = best.min(entropy_with(floor + 1));
    }
    Ok(best.max(0.0))
}
