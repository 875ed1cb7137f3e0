use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::{evaluate_against, ActualEntropy, MetricMode, MetricReport};
use crate::mechanisms::{publish_raw, LimitedTable, Mechanism, NoiseSource, PrivacyParams};
use crate::model::{count_visits, CheckInLog};
use crate::sensitivity::{precompute_smooth_sensitivity, SensitivityParams, SensitivityTable};
use crate::{Error, Result};

/// The parameter a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Epsilon,
    C,
    M,
    K,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::C => "C",
            SweepParam::M => "M",
            SweepParam::K => "k",
        }
    }

    fn apply(self, base: &PrivacyParams, value: f64) -> Result<PrivacyParams> {
        let integer = || {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as u64)
            } else {
                Err(Error::InvalidParameter(format!(
                    "{} must be a positive integer, got {value}",
                    self.as_str()
                )))
            }
        };
        let mut p = base.clone();
        match self {
            SweepParam::Epsilon => p.epsilon = value,
            SweepParam::C => p.c = integer()?,
            SweepParam::M => p.m = integer()?,
            SweepParam::K => p.k = integer()?,
        }
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "epsilon" | "eps" => Ok(SweepParam::Epsilon),
            "C" | "c" => Ok(SweepParam::C),
            "M" | "m" => Ok(SweepParam::M),
            "k" | "K" => Ok(SweepParam::K),
            _ => Err(Error::InvalidParameter(format!(
                "unknown sweep parameter `{s}` (expected epsilon, C, M or k)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub reps: u32,
    pub mode: MetricMode,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub value: f64,
    pub rep: u32,
    pub report: MetricReport,
}

/// Mean and sample standard deviation of a metric over repetitions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub stddev: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stddev = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Summary { mean, stddev }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepAggregate {
    pub value: f64,
    pub kl: Summary,
    pub mse: Summary,
    pub published_ratio: Summary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    /// Ordered by value, then repetition.
    pub cells: Vec<SweepCell>,
    /// One per value, in grid order.
    pub aggregates: Vec<SweepAggregate>,
}

impl SweepTable {
    pub fn aggregate(&self, value: f64) -> Option<&SweepAggregate> {
        self.aggregates.iter().find(|a| a.value == value)
    }

    /// Writes `param,value,rep,kl,mse,published_ratio`: each value's
    /// repetitions followed by its `mean` and `stddev` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "param,value,rep,kl,mse,published_ratio")?;
        let param = self.param;
        for agg in &self.aggregates {
            for cell in self.cells.iter().filter(|c| c.value == agg.value) {
                let r = &cell.report;
                writeln!(
                    w,
                    "{param},{},{},{:.16e},{:.16e},{:.16e}",
                    cell.value, cell.rep, r.kl_divergence, r.mse, r.published_ratio
                )?;
            }
            writeln!(
                w,
                "{param},{},mean,{:.16e},{:.16e},{:.16e}",
                agg.value, agg.kl.mean, agg.mse.mean, agg.published_ratio.mean
            )?;
            writeln!(
                w,
                "{param},{},stddev,{:.16e},{:.16e},{:.16e}",
                agg.value, agg.kl.stddev, agg.mse.stddev, agg.published_ratio.stddev
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `base.mechanism` for every value in the grid and every repetition,
/// scoring each run against the raw data.
///
/// Each cell draws noise from its own stream keyed by the base seed, the value
/// and the repetition, so results do not depend on scheduling. For limit-ss a
/// smooth-sensitivity table is computed per `(C, ε)`, sized to the largest
/// truncated location.
pub fn run_sweep(log: &CheckInLog, base: &PrivacyParams, spec: &SweepSpec) -> Result<SweepTable> {
    if spec.reps == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    if spec.values.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    let params: Vec<PrivacyParams> = spec
        .values
        .iter()
        .map(|&v| spec.param.apply(base, v))
        .collect::<Result<_>>()?;

    let raw = count_visits(log);
    let actual = ActualEntropy::from_table(&raw);

    let mut limited: HashMap<(u64, u64), LimitedTable> = HashMap::new();
    let mut smooth: HashMap<(u64, u64), SensitivityTable> = HashMap::new();
    if base.mechanism != Mechanism::Baseline {
        for p in &params {
            let lt = limited
                .entry((p.m, p.c))
                .or_insert_with(|| LimitedTable::new(log, p.m, p.c));
            if p.mechanism == Mechanism::LimitSs {
                let n_max = lt.max_users().max(1);
                let key = (p.c, p.epsilon.to_bits());
                match smooth.get(&key) {
                    Some(t) if t.n_max() >= n_max => {}
                    _ => {
                        let sp = SensitivityParams::new(p.c, n_max, p.epsilon, p.delta, p.xi)?;
                        smooth.insert(key, precompute_smooth_sensitivity(&sp)?);
                    }
                }
            }
        }
    }

    let root = NoiseSource::new(base.seed);
    let jobs: Vec<(usize, u32)> = (0..params.len())
        .flat_map(|i| (0..spec.reps).map(move |r| (i, r)))
        .collect();
    let cells: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(i, rep)| {
            let p = &params[i];
            let value = spec.values[i];
            let source = root.child(&format!("{}={value}/rep={rep}", spec.param));
            let records = match p.mechanism {
                Mechanism::Baseline => publish_raw(&raw, p, &source)?,
                _ => {
                    let ss = smooth.get(&(p.c, p.epsilon.to_bits()));
                    limited[&(p.m, p.c)].publish(p, ss, &source)?
                }
            };
            let report = evaluate_against(&actual, &records, spec.mode, p.eligibility_k)?;
            Ok(SweepCell { value, rep, report })
        })
        .collect::<Result<_>>()?;

    let aggregates = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mine = &cells[i * spec.reps as usize..(i + 1) * spec.reps as usize];
            let column = |f: fn(&MetricReport) -> f64| Summary::of(&mine.iter().map(|c| f(&c.report)).collect::<Vec<_>>());
            SweepAggregate {
                value,
                kl: column(|r| r.kl_divergence),
                mse: column(|r| r.mse),
                published_ratio: column(|r| r.published_ratio),
            }
        })
        .collect();

    Ok(SweepTable {
        param: spec.param,
        cells,
        aggregates,
    })
}
