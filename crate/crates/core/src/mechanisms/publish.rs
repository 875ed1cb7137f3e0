use rayon::prelude::*;

use super::noise::{laplace_sample, NoiseSource};
use super::params::{Mechanism, NoiseMode, PrivacyParams};
use super::truncate::{clamp_visits, truncate_locations};
use crate::model::{count_visits, CheckInLog, VisitTable};
use crate::sensitivity::{crowd_blend_sensitivity, global_sensitivity, SensitivityTable};
use crate::{Error, Nats, Result};

/// The published (or suppressed) entropy of one location.
#[derive(Clone, Debug, PartialEq)]
pub struct PublicationRecord {
    pub location_id: String,
    /// Users at the location in the table the mechanism ran on.
    pub n_users: u64,
    /// Exact entropy of that table. Not private.
    pub true_entropy: Nats,
    /// `None` when the mechanism suppressed the location.
    pub noisy_entropy: Option<Nats>,
    /// Laplace scale the location was calibrated to; 0 when suppressed.
    pub noise_scale: f64,
}

impl PublicationRecord {
    pub fn published(&self) -> bool {
        self.noisy_entropy.is_some()
    }
}

/// A check-in log after the `M`-location and `C`-visit limits, with the
/// entropy of every remaining location.
///
/// Building this is the expensive part of the limit mechanisms, and it only
/// depends on `(M, C)`, so experiments reuse it across `ε` and `k`.
#[derive(Clone, Debug)]
pub struct LimitedTable {
    m: u64,
    c: u64,
    table: VisitTable,
    entropies: Vec<Nats>,
}

impl LimitedTable {
    pub fn new(log: &CheckInLog, m: u64, c: u64) -> Self {
        let table = clamp_visits(&count_visits(&truncate_locations(log, m)), c);
        let entropies = table.iter().collect::<Vec<_>>().par_iter().map(|e| e.entropy()).collect();
        LimitedTable { m, c, table, entropies }
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn table(&self) -> &VisitTable {
        &self.table
    }

    /// Entropy of each location, in table order.
    pub fn entropies(&self) -> &[Nats] {
        &self.entropies
    }

    /// Largest `n_l` after truncation.
    pub fn max_users(&self) -> u64 {
        self.table.iter().map(|e| e.n_users()).max().unwrap_or(0)
    }

    /// Runs a limit mechanism on this table. `params.m` and `params.c` must
    /// match the limits the table was built with.
    pub fn publish(
        &self,
        params: &PrivacyParams,
        ss: Option<&SensitivityTable>,
        source: &NoiseSource,
    ) -> Result<Vec<PublicationRecord>> {
        params.validate()?;
        if params.m != self.m || params.c != self.c {
            return Err(Error::InvalidParameter(format!(
                "table was limited with M = {}, C = {}; parameters ask for M = {}, C = {}",
                self.m, self.c, params.m, params.c
            )));
        }
        let m = self.m as f64;
        let eps = params.epsilon;
        let scales: Vec<Option<f64>> = match params.mechanism {
            Mechanism::Baseline => {
                return Err(Error::InvalidParameter(
                    "the baseline mechanism runs on the raw table".into(),
                ))
            }
            Mechanism::Limit => {
                let scale = m * global_sensitivity(self.c) / eps;
                vec![Some(scale); self.table.len()]
            }
            Mechanism::LimitSs => {
                let ss = ss.ok_or_else(|| {
                    Error::InvalidParameter("limit-ss needs a smooth-sensitivity table".into())
                })?;
                ss.check_compatible(self.c, eps, params.delta)?;
                self.table
                    .iter()
                    .map(|e| Ok(Some(m * 2.0 * ss.get(e.n_users())? / eps)))
                    .collect::<Result<_>>()?
            }
            Mechanism::LimitCb => {
                let scale = m * crowd_blend_sensitivity(params.k, self.c)? / eps;
                self.table
                    .iter()
                    .map(|e| (e.n_users() >= params.k).then_some(scale))
                    .collect()
            }
        };
        Ok(noisy_records(&self.table, &self.entropies, &scales, params.noise, source))
    }
}

/// Baseline on an already counted raw table.
pub(crate) fn publish_raw(
    raw: &VisitTable,
    params: &PrivacyParams,
    source: &NoiseSource,
) -> Result<Vec<PublicationRecord>> {
    params.validate()?;
    let m_max = raw.max_locations_per_user() as f64;
    let scale = m_max * global_sensitivity(raw.max_count()) / params.epsilon;
    let entropies: Vec<Nats> = raw.iter().collect::<Vec<_>>().par_iter().map(|e| e.entropy()).collect();
    let scales = vec![Some(scale); raw.len()];
    Ok(noisy_records(raw, &entropies, &scales, params.noise, source))
}

fn noisy_records(
    table: &VisitTable,
    entropies: &[Nats],
    scales: &[Option<f64>],
    noise: NoiseMode,
    source: &NoiseSource,
) -> Vec<PublicationRecord> {
    let entries: Vec<_> = table.iter().collect();
    entries
        .par_iter()
        .zip(entropies.par_iter().zip(scales.par_iter()))
        .map(|(entry, (&h, &scale))| {
            let location_id = table.location_id(entry).to_owned();
            let noisy = scale.map(|b| match noise {
                NoiseMode::Laplace => h + laplace_sample(b, &mut source.stream(&location_id)),
                NoiseMode::Off => h,
            });
            PublicationRecord {
                location_id,
                n_users: entry.n_users(),
                true_entropy: h,
                noisy_entropy: noisy,
                noise_scale: scale.unwrap_or(0.0),
            }
        })
        .collect()
}

/// Laplace noise scaled to `M_max GS(C_max) / ε`, where `M_max` and `C_max`
/// are read off the raw data. Touches every location; the noise is usually
/// far larger than the entropies themselves.
pub fn publish_baseline(log: &CheckInLog, params: &PrivacyParams) -> Result<Vec<PublicationRecord>> {
    publish_raw(&count_visits(log), params, &NoiseSource::new(params.seed))
}

/// Truncates to `M` locations and `C` visits per user, then adds Laplace noise
/// scaled to `M GS(C) / ε`.
pub fn publish_limit(log: &CheckInLog, params: &PrivacyParams) -> Result<Vec<PublicationRecord>> {
    run_limited(log, params, Mechanism::Limit, None)
}

/// Truncates like [`publish_limit`], with noise `M · 2 SS(C, n_l) / ε` drawn
/// from a precomputed smooth-sensitivity table. `(ε, δ)`-DP.
pub fn publish_limit_ss(
    log: &CheckInLog,
    params: &PrivacyParams,
    table: &SensitivityTable,
) -> Result<Vec<PublicationRecord>> {
    run_limited(log, params, Mechanism::LimitSs, Some(table))
}

/// Truncates like [`publish_limit`] and publishes only locations with at least
/// `k` users, with noise `M LS(k, C) / ε`. Fails unless
/// `k >= C / (ln C - 1) + 1`.
pub fn publish_limit_cb(log: &CheckInLog, params: &PrivacyParams) -> Result<Vec<PublicationRecord>> {
    run_limited(log, params, Mechanism::LimitCb, None)
}

/// Runs `params.mechanism`. `ss` is required for [`Mechanism::LimitSs`] and
/// ignored otherwise.
pub fn publish(
    log: &CheckInLog,
    params: &PrivacyParams,
    ss: Option<&SensitivityTable>,
) -> Result<Vec<PublicationRecord>> {
    match params.mechanism {
        Mechanism::Baseline => publish_baseline(log, params),
        m => run_limited(log, params, m, ss),
    }
}

fn run_limited(
    log: &CheckInLog,
    params: &PrivacyParams,
    mechanism: Mechanism,
    ss: Option<&SensitivityTable>,
) -> Result<Vec<PublicationRecord>> {
    params.validate()?;
    if mechanism == Mechanism::LimitCb {
        crowd_blend_sensitivity(params.k, params.c)?;
    }
    if mechanism == Mechanism::LimitSs {
        let ss = ss.ok_or_else(|| {
            Error::InvalidParameter("limit-ss needs a smooth-sensitivity table".into())
        })?;
        ss.check_compatible(params.c, params.epsilon, params.delta)?;
    }
    let params = PrivacyParams {
        mechanism,
        ..params.clone()
    };
    LimitedTable::new(log, params.m, params.c).publish(&params, ss, &NoiseSource::new(params.seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CheckIn, Timestamp};
    use crate::sensitivity::{local_sensitivity, precompute_smooth_sensitivity, SensitivityParams};
    use approx::assert_abs_diff_eq;

    /// `n` users at `hub`, each visiting it `reps` times; user 0 also visits
    /// `side` locations once each.
    fn log(n: usize, reps: usize, side: usize) -> CheckInLog {
        let mut rows = Vec::new();
        let mut t = 0;
        for u in 0..n {
            for _ in 0..reps {
                t += 1;
                rows.push(CheckIn::new(format!("u{u}"), "hub", Timestamp::from_unix_seconds(t)));
            }
        }
        for s in 0..side {
            t += 1;
            rows.push(CheckIn::new("u0", format!("side{s}"), Timestamp::from_unix_seconds(t)));
        }
        CheckInLog::from_checkins(rows).unwrap()
    }

    fn params(mechanism: Mechanism) -> PrivacyParams {
        PrivacyParams {
            mechanism,
            c: 5,
            m: 5,
            k: 10,
            ..PrivacyParams::default()
        }
    }

    #[test]
    fn noise_off_publishes_exact_entropy() {
        let log = log(4, 2, 0);
        let p = PrivacyParams {
            noise: NoiseMode::Off,
            ..params(Mechanism::Limit)
        };
        let recs = publish_limit(&log, &p).unwrap();
        assert_eq!(recs.len(), 1);
        assert_abs_diff_eq!(recs[0].noisy_entropy.unwrap(), 4f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(recs[0].noise_scale, 5.0 * global_sensitivity(5) / 5.0, epsilon = 1e-15);
    }

    #[test]
    fn baseline_scale_uses_raw_extremes() {
        // u0 visits 1 + 7 locations; the hub has 30 visits per user.
        let log = log(3, 30, 7);
        let recs = publish_baseline(&log, &params(Mechanism::Baseline)).unwrap();
        assert_eq!(recs.len(), 8);
        let expected = 8.0 * global_sensitivity(30) / 5.0;
        assert!(recs.iter().all(|r| (r.noise_scale - expected).abs() < 1e-12));
    }

    #[test]
    fn truncation_limits_locations() {
        let log = log(3, 1, 7);
        let recs = publish_limit(&log, &params(Mechanism::Limit)).unwrap();
        // hub plus u0's first four side locations
        assert_eq!(recs.len(), 5);
    }

    #[test]
    fn crowd_blend_suppresses_small_locations() {
        let big = log(12, 1, 3);
        let recs = publish_limit_cb(&big, &params(Mechanism::LimitCb)).unwrap();
        let published: Vec<_> = recs.iter().filter(|r| r.published()).collect();
        assert_eq!(published.len(), 1);
        assert_eq!(published[0].location_id, "hub");
        assert_abs_diff_eq!(published[0].noise_scale, local_sensitivity(10, 5), epsilon = 1e-15);
        assert!(recs.iter().filter(|r| !r.published()).all(|r| r.noise_scale == 0.0));
    }

    #[test]
    fn crowd_blend_rejects_small_k() {
        let p = PrivacyParams { k: 3, c: 20, ..params(Mechanism::LimitCb) };
        assert!(matches!(publish_limit_cb(&log(5, 1, 0), &p), Err(Error::CrowdBlendCondition { .. })));
    }

    #[test]
    fn smooth_sensitivity_scale_and_table_checks() {
        let log = log(30, 1, 0);
        let p = params(Mechanism::LimitSs);
        let sp = SensitivityParams::new(5, 100, p.epsilon, p.delta, p.xi).unwrap();
        let ss = precompute_smooth_sensitivity(&sp).unwrap();
        let recs = publish_limit_ss(&log, &p, &ss).unwrap();
        assert_abs_diff_eq!(recs[0].noise_scale, 5.0 * 2.0 * ss.get(30).unwrap() / 5.0, epsilon = 1e-15);

        let small = precompute_smooth_sensitivity(&SensitivityParams { n_max: 10, ..sp }).unwrap();
        assert!(matches!(publish_limit_ss(&log, &p, &small), Err(Error::TableTooSmall { n: 30, max: 10 })));
        let other_c = precompute_smooth_sensitivity(&SensitivityParams { c: 6, ..sp }).unwrap();
        assert!(matches!(publish_limit_ss(&log, &p, &other_c), Err(Error::TableMismatch(_))));
        assert!(publish(&log, &p, None).is_err());
    }

    #[test]
    fn same_seed_same_output() {
        let log = log(20, 2, 3);
        let p = params(Mechanism::Limit);
        assert_eq!(publish(&log, &p, None).unwrap(), publish(&log, &p, None).unwrap());
        let q = PrivacyParams { seed: 1, ..p.clone() };
        assert_ne!(publish(&log, &p, None).unwrap(), publish(&log, &q, None).unwrap());
    }

    #[test]
    fn limited_table_rejects_other_limits() {
        let lt = LimitedTable::new(&log(3, 1, 0), 5, 5);
        let p = PrivacyParams { c: 4, ..params(Mechanism::Limit) };
        assert!(lt.publish(&p, None, &NoiseSource::new(0)).is_err());
    }
}
