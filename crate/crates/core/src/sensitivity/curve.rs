//! Local, smooth and global sensitivity side by side, for plotting.

use std::io::{BufRead, Write};

use super::{global_sensitivity, local_sensitivity, SensitivityTable};
use crate::{Error, Nats, Result};

const HEADER: &str = "n,local_sensitivity,smooth_sensitivity,global_sensitivity";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub local: Nats,
    pub smooth: Nats,
    pub global: Nats,
}

/// One point per `n` covered by `table`.
pub fn bound_curve(table: &SensitivityTable) -> Vec<CurvePoint> {
    let c = table.c();
    let global = global_sensitivity(c);
    table
        .values()
        .iter()
        .enumerate()
        .map(|(i, &smooth)| {
            let n = i as u64 + 1;
            CurvePoint {
                n,
                local: local_sensitivity(n, c),
                smooth,
                global,
            }
        })
        .collect()
}

pub fn write_curve<W: Write>(points: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    for p in points {
        writeln!(w, "{},{:.16e},{:.16e},{:.16e}", p.n, p.local, p.smooth, p.global)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve<R: BufRead>(r: R) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            if line.trim() != HEADER {
                return Err(Error::Parse {
                    line: lineno,
                    reason: format!("expected header `{HEADER}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: lineno, reason };
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| err(e.to_string()));
        points.push(CurvePoint {
            n: fields[0].parse().map_err(|e| err(format!("n: {e}")))?,
            local: float(fields[1])?,
            smooth: float(fields[2])?,
            global: float(fields[3])?,
        });
    }
    Ok(points)
}
