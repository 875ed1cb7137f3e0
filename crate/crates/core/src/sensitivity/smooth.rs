//! Precomputed `β`-smooth sensitivity `SS(C, n)` for `n = 1..=N`.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::{decreasing_threshold, global_sensitivity, local_sensitivity};
use crate::{Error, Nats, Result};

/// Inputs of the smooth-sensitivity precomputation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityParams {
    /// Visit cap per user per location.
    pub c: u64,
    /// Largest location size the table covers.
    pub n_max: u64,
    pub epsilon: f64,
    pub delta: f64,
    /// Floor below which the smooth sensitivity is no longer tracked.
    pub xi: f64,
}

impl SensitivityParams {
    pub fn new(c: u64, n_max: u64, epsilon: f64, delta: f64, xi: f64) -> Result<Self> {
        let params = SensitivityParams {
            c,
            n_max,
            epsilon,
            delta,
            xi,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.into()));
        if self.c < 1 {
            return bad("C must be at least 1");
        }
        if self.n_max < 1 {
            return bad("N must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad("xi must be positive");
        }
        Ok(())
    }

    /// `β = ε / (2 ln(2/δ))`.
    pub fn beta(&self) -> f64 {
        smooth_beta(self.epsilon, self.delta)
    }
}

pub(crate) fn smooth_beta(epsilon: f64, delta: f64) -> f64 {
    epsilon / (2.0 * (2.0 / delta).ln())
}

/// Smooth sensitivity by location size.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityTable {
    c: u64,
    beta: f64,
    xi: f64,
    // values[n - 1] = SS(C, n)
    values: Vec<f64>,
    floor_from: Option<u64>,
}

impl SensitivityTable {
    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn n_max(&self) -> u64 {
        self.values.len() as u64
    }

    /// First `n` whose entry was set to `ξ` instead of computed. Every larger
    /// `n` is also `ξ`.
    pub fn floor_from(&self) -> Option<u64> {
        self.floor_from
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `SS(C, n)`; errors when `n` lies beyond the table.
    pub fn get(&self, n: u64) -> Result<Nats> {
        if n == 0 {
            return Err(Error::InvalidParameter("location size must be positive".into()));
        }
        self.values
            .get(n as usize - 1)
            .copied()
            .ok_or(Error::TableTooSmall {
                n,
                max: self.n_max(),
            })
    }

    /// Checks that the table was computed for this `C` and for the `β` implied
    /// by `(ε, δ)`.
    pub fn check_compatible(&self, c: u64, epsilon: f64, delta: f64) -> Result<()> {
        if self.c != c {
            return Err(Error::TableMismatch(format!(
                "table has C = {}, mechanism uses C = {c}",
                self.c
            )));
        }
        let beta = smooth_beta(epsilon, delta);
        if (self.beta - beta).abs() > 1e-12 * beta.abs() {
            return Err(Error::TableMismatch(format!(
                "table has beta = {}, (epsilon, delta) give beta = {beta}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Writes the `C,beta,xi,N` header, its values, then one `n,ss_value` row
    /// per entry. Floats use 17 significant digits.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "C,beta,xi,N")?;
        writeln!(w, "{},{:.16e},{:.16e},{}", self.c, self.beta, self.xi, self.n_max())?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{:.16e}", i + 1, v)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next_line = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(Error::Parse {
                    line: 0,
                    reason: format!("missing {what}"),
                }),
            }
        };
        let (line, header) = next_line("header")?;
        if header.trim() != "C,beta,xi,N" {
            return Err(Error::Parse {
                line,
                reason: format!("expected header `C,beta,xi,N`, found `{header}`"),
            });
        }
        let (line, meta) = next_line("table parameters")?;
        let fields: Vec<&str> = meta.trim().split(',').collect();
        let parse_err = |line: usize, reason: String| Error::Parse { line, reason };
        if fields.len() != 4 {
            return Err(parse_err(line, "expected 4 fields".into()));
        }
        let c: u64 = fields[0].parse().map_err(|e| parse_err(line, format!("C: {e}")))?;
        let beta: f64 = fields[1].parse().map_err(|e| parse_err(line, format!("beta: {e}")))?;
        let xi: f64 = fields[2].parse().map_err(|e| parse_err(line, format!("xi: {e}")))?;
        let n_max: u64 = fields[3].parse().map_err(|e| parse_err(line, format!("N: {e}")))?;

        let mut values = Vec::with_capacity(n_max as usize);
        for (i, row) in lines {
            let row = row?;
            let line = i + 1;
            if row.trim().is_empty() {
                continue;
            }
            let (n, v) = row
                .trim()
                .split_once(',')
                .ok_or_else(|| parse_err(line, "expected `n,ss_value`".into()))?;
            let n: u64 = n.parse().map_err(|e| parse_err(line, format!("n: {e}")))?;
            let v: f64 = v.parse().map_err(|e| parse_err(line, format!("ss_value: {e}")))?;
            if n != values.len() as u64 + 1 {
                return Err(parse_err(line, format!("expected n = {}, found {n}", values.len() + 1)));
            }
            values.push(v);
        }
        if values.len() as u64 != n_max {
            return Err(parse_err(0, format!("header says N = {n_max}, found {} rows", values.len())));
        }
        let floor_from = floor_start(&values, xi, c);
        Ok(SensitivityTable {
            c,
            beta,
            xi,
            values,
            floor_from,
        })
    }
}

/// Recovers the floor region of a stored table: the first `n` past which the
/// outer stopping rule holds and every entry equals `ξ`.
fn floor_start(values: &[f64], xi: f64, c: u64) -> Option<u64> {
    let tail = values.iter().rev().take_while(|&&v| v == xi).count();
    if tail == 0 {
        return None;
    }
    let first = values.len() - tail + 1;
    (first as u64..=values.len() as u64).find(|&n| outer_stop(n, c, xi))
}

fn outer_stop(n: u64, c: u64, xi: f64) -> bool {
    past(n, decreasing_threshold(c)) && local_sensitivity(n, c) < xi
}

/// `n` lies in the region where the local bound is decreasing. With `C <= e`
/// there is no such threshold and the check passes vacuously.
fn past(n: u64, threshold: Option<f64>) -> bool {
    threshold.map_or(true, |t| n as f64 > t)
}

/// Computes `SS(C, n) = max_k e^{-kβ} max(LS(C, n-k), LS(C, n+k))` for
/// `n = 1..=N`.
///
/// The scan over `k` stops once `e^{-kβ} GS(C)` drops below the running maximum
/// (with `n + k` past the decreasing threshold); no later term can exceed it.
/// The scan over `n` stops at the first `n` past the threshold whose local
/// sensitivity is below `ξ`; that entry and all later ones are set to `ξ`.
pub fn precompute_smooth_sensitivity(params: &SensitivityParams) -> Result<SensitivityTable> {
    params.validate()?;
    if params.c < 2 {
        return Err(Error::InvalidParameter(
            "smooth-sensitivity precomputation needs C >= 2".into(),
        ));
    }
    let c = params.c;
    let gs = global_sensitivity(c);
    if params.xi >= gs {
        return Err(Error::InvalidParameter(format!(
            "xi = {} must be below the global sensitivity {gs}",
            params.xi
        )));
    }
    let beta = params.beta();
    let n_max = params.n_max;
    let threshold = decreasing_threshold(c);

    let floor_from = (1..=n_max).find(|&n| outer_stop(n, c, params.xi));
    let computed = floor_from.map_or(n_max, |n| n - 1);

    // LS(C, m) for every m the inner loop can touch: m <= n + k <= 2N.
    let ls: Vec<f64> = (0..=2 * n_max)
        .into_par_iter()
        .map(|m| if m == 0 { 0.0 } else { local_sensitivity(m, c) })
        .collect();

    let mut values: Vec<f64> = (1..=computed)
        .into_par_iter()
        .map(|n| {
            let mut ss = ls[n as usize];
            for k in 1..=n_max {
                let decay = (-(k as f64) * beta).exp();
                let up = ls[(n + k) as usize];
                let neighbour = if k < n { ls[(n - k) as usize].max(up) } else { up };
                ss = ss.max(decay * neighbour);
                if decay * gs < ss && past(n + k, threshold) {
                    break;
                }
            }
            ss
        })
        .collect();
    values.resize(n_max as usize, params.xi);

    Ok(SensitivityTable {
        c,
        beta,
        xi: params.xi,
        values,
        floor_from,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Every `k` from 0 to N, no early exit.
    fn naive(c: u64, n_max: u64, beta: f64) -> Vec<f64> {
        (1..=n_max)
            .map(|n| {
                let mut ss = local_sensitivity(n, c);
                for k in 1..=n_max {
                    let decay = (-(k as f64) * beta).exp();
                    let up = local_sensitivity(n + k, c);
                    let neighbour = if k < n { local_sensitivity(n - k, c).max(up) } else { up };
                    ss = ss.max(decay * neighbour);
                }
                ss
            })
            .collect()
    }

    #[test]
    fn matches_naive_scan() {
        for (c, eps) in [(2u64, 1.0), (5, 5.0), (20, 0.5)] {
            let params = SensitivityParams::new(c, 400, eps, 1e-8, 1e-3).unwrap();
            let table = precompute_smooth_sensitivity(&params).unwrap();
            let reference = naive(c, 400, params.beta());
            let end = table.floor_from().map_or(400, |n| n - 1) as usize;
            assert_eq!(&table.values()[..end], &reference[..end], "C = {c}");
        }
    }

    #[test]
    fn bounded_by_local_and_global() {
        let params = SensitivityParams::new(5, 6000, 5.0, 1e-8, 1e-3).unwrap();
        let table = precompute_smooth_sensitivity(&params).unwrap();
        let gs = global_sensitivity(5);
        for n in 1..=6000 {
            let ss = table.get(n).unwrap();
            assert!(ss > 0.0 && ss <= gs);
            assert!(ss >= local_sensitivity(n, 5), "n = {n}");
        }
        let floor = table.floor_from().expect("C = 5 reaches the floor before n = 6000");
        assert!(table.values()[floor as usize - 1..].iter().all(|&v| v == 1e-3));
        assert!(table.values()[floor as usize - 2] != 1e-3);
    }

    #[test]
    fn lookup_beyond_table_errors() {
        let params = SensitivityParams::new(20, 50, 5.0, 1e-8, 1e-3).unwrap();
        let table = precompute_smooth_sensitivity(&params).unwrap();
        assert!(matches!(table.get(51), Err(Error::TableTooSmall { n: 51, max: 50 })));
        assert!(table.get(50).is_ok());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SensitivityParams::new(5, 10, 0.0, 1e-8, 1e-3).is_err());
        assert!(SensitivityParams::new(5, 10, 1.0, 1.0, 1e-3).is_err());
        assert!(SensitivityParams::new(5, 0, 1.0, 0.5, 1e-3).is_err());
        let c1 = SensitivityParams::new(1, 10, 1.0, 1e-8, 1e-3).unwrap();
        assert!(precompute_smooth_sensitivity(&c1).is_err());
    }

    #[test]
    fn file_round_trip() {
        let params = SensitivityParams::new(5, 5000, 5.0, 1e-8, 1e-3).unwrap();
        let table = precompute_smooth_sensitivity(&params).unwrap();
        let mut buf = Vec::new();
        table.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("C,beta,xi,N\n5,"));
        let back = SensitivityTable::read_from(&buf[..]).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn compatibility_check() {
        let params = SensitivityParams::new(20, 10, 5.0, 1e-8, 1e-3).unwrap();
        let table = precompute_smooth_sensitivity(&params).unwrap();
        assert!(table.check_compatible(20, 5.0, 1e-8).is_ok());
        assert!(table.check_compatible(5, 5.0, 1e-8).is_err());
        assert!(table.check_compatible(20, 1.0, 1e-8).is_err());
    }
}
