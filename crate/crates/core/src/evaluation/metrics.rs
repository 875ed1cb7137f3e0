use std::collections::HashMap;

use rayon::prelude::*;

use crate::mechanisms::PublicationRecord;
use crate::model::VisitTable;
use crate::{Error, Nats, Result};

/// How suppressed locations enter the metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MetricMode {
    /// Every location counts; unpublished ones are scored as published 0.
    #[default]
    Default,
    /// Only published locations count.
    Throwaway,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricReport {
    pub kl_divergence: Nats,
    pub mse: f64,
    pub published_ratio: f64,
    /// Locations the KL and MSE were computed over.
    pub num_locations: usize,
    pub throwaway_mode: bool,
}

/// `D_KL(P || Q)` with `P` the published and `Q` the actual entropies, after
/// flooring both at 0 and normalizing each to sum 1.
///
/// Infinite divergence is reported with the offending index.
pub fn kl_divergence(actual: &[f64], published: &[f64]) -> Result<Nats> {
    if actual.len() != published.len() {
        return Err(Error::InvalidParameter(format!(
            "{} actual values against {} published values",
            actual.len(),
            published.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::EmptyLocationSet);
    }
    let q = normalized(actual)?;
    let p = normalized(published)?;
    let mut d = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(&q).enumerate() {
        if pi > 0.0 {
            if qi == 0.0 {
                return Err(Error::InfiniteDivergence {
                    location: i.to_string(),
                });
            }
            d += pi * (pi / qi).ln();
        }
    }
    Ok(d.max(0.0))
}

fn normalized(values: &[f64]) -> Result<Vec<f64>> {
    let floored: Vec<f64> = values.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let total: f64 = floored.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NoMass);
    }
    Ok(floored.into_iter().map(|v| v / total).collect())
}

/// Mean of `(actual - published)^2`. Raw values, no flooring.
pub fn mse(actual: &[f64], published: &[f64]) -> Result<f64> {
    if actual.len() != published.len() {
        return Err(Error::InvalidParameter(format!(
            "{} actual values against {} published values",
            actual.len(),
            published.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::EmptyLocationSet);
    }
    let sum: f64 = actual.iter().zip(published).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(sum / actual.len() as f64)
}

/// Exact entropy and user count of every location in the raw (untruncated)
/// data: the reference the published values are scored against.
#[derive(Clone, Debug)]
pub struct ActualEntropy {
    ids: Vec<String>,
    entropies: Vec<Nats>,
    n_users: Vec<u64>,
    index: HashMap<String, usize>,
}

impl ActualEntropy {
    pub fn from_table(raw: &VisitTable) -> Self {
        let entries: Vec<_> = raw.iter().collect();
        let entropies = entries.par_iter().map(|e| e.entropy()).collect();
        let ids: Vec<String> = entries.iter().map(|e| raw.location_id(e).to_owned()).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        ActualEntropy {
            n_users: entries.iter().map(|e| e.n_users()).collect(),
            ids,
            entropies,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn entropy(&self, location_id: &str) -> Option<Nats> {
        self.index.get(location_id).map(|&i| self.entropies[i])
    }

    /// Published value per actual location (`None` if unpublished). Fails if a
    /// record names a location absent from the actual data.
    fn align(&self, records: &[PublicationRecord]) -> Result<Vec<Option<f64>>> {
        let mut aligned = vec![None; self.ids.len()];
        let mut missing = Vec::new();
        for r in records {
            match self.index.get(&r.location_id) {
                Some(&i) => aligned[i] = r.noisy_entropy,
                None => missing.push(r.location_id.clone()),
            }
        }
        if !missing.is_empty() {
            missing.sort();
            return Err(Error::Misaligned(missing));
        }
        Ok(aligned)
    }
}

/// Published locations with at least `k` pre-truncation users, divided by all
/// locations with at least `k` pre-truncation users.
pub fn published_ratio(records: &[PublicationRecord], raw: &VisitTable, k: u64) -> Result<f64> {
    ratio(&ActualEntropy::from_table(raw), records, k)
}

fn ratio(actual: &ActualEntropy, records: &[PublicationRecord], k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be at least 1".into()));
    }
    let aligned = actual.align(records)?;
    let eligible: Vec<usize> = (0..actual.len()).filter(|&i| actual.n_users[i] >= k).collect();
    if eligible.is_empty() {
        return Err(Error::NoEligibleLocations { k });
    }
    let published = eligible.iter().filter(|&&i| aligned[i].is_some()).count();
    Ok(published as f64 / eligible.len() as f64)
}

/// KL divergence, MSE and published ratio of `records` against the raw data.
pub fn evaluate(
    raw: &VisitTable,
    records: &[PublicationRecord],
    mode: MetricMode,
    eligibility_k: u64,
) -> Result<MetricReport> {
    evaluate_against(&ActualEntropy::from_table(raw), records, mode, eligibility_k)
}

/// [`evaluate`] with the reference entropies computed once up front.
pub fn evaluate_against(
    actual: &ActualEntropy,
    records: &[PublicationRecord],
    mode: MetricMode,
    eligibility_k: u64,
) -> Result<MetricReport> {
    let aligned = actual.align(records)?;
    let (truth, published): (Vec<f64>, Vec<f64>) = match mode {
        MetricMode::Default => actual
            .entropies
            .iter()
            .zip(&aligned)
            .map(|(&a, p)| (a, p.unwrap_or(0.0)))
            .unzip(),
        MetricMode::Throwaway => actual
            .entropies
            .iter()
            .zip(&aligned)
            .filter_map(|(&a, p)| p.map(|p| (a, p)))
            .unzip(),
    };
    let kl = kl_divergence(&truth, &published).map_err(|e| match e {
        Error::InfiniteDivergence { location } => {
            let i: usize = location.parse().expect("index");
            let id = match mode {
                MetricMode::Default => actual.ids[i].clone(),
                MetricMode::Throwaway => {
                    let orig = (0..actual.len()).filter(|&j| aligned[j].is_some()).nth(i).expect("index");
                    actual.ids[orig].clone()
                }
            };
            Error::InfiniteDivergence { location: id }
        }
        other => other,
    })?;
    Ok(MetricReport {
        kl_divergence: kl,
        mse: mse(&truth, &published)?,
        published_ratio: ratio(actual, records, eligibility_k)?,
        num_locations: truth.len(),
        throwaway_mode: mode == MetricMode::Throwaway,
    })
}
