use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::model::{CheckIn, CheckInLog, Timestamp};
use crate::{Error, Result};

/// Parses tab-separated check-ins, `user<TAB>time<TAB>lat<TAB>lon<TAB>location`.
///
/// Times are RFC 3339 instants or bare Unix seconds. Empty coordinate fields
/// are read as missing. Blank lines are skipped; errors carry the 1-based line
/// number.
pub fn parse_checkins<R: BufRead>(reader: R) -> Result<Vec<CheckIn>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_line(line).map_err(|reason| Error::Parse { line: i + 1, reason })?);
    }
    Ok(rows)
}

fn parse_line(line: &str) -> std::result::Result<CheckIn, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [user, time, lat, lon, location] = fields[..] else {
        return Err(format!("expected 5 tab-separated fields, found {}", fields.len()));
    };
    let timestamp = Timestamp::parse(time)
        .or_else(|| time.parse().ok().map(Timestamp::from_unix_seconds))
        .ok_or_else(|| format!("invalid timestamp `{time}`"))?;
    let coord = |s: &str, what: &str| -> std::result::Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("invalid {what} `{s}`"))
        }
    };
    let checkin = CheckIn {
        user_id: user.to_owned(),
        location_id: location.to_owned(),
        timestamp,
        lat: coord(lat, "latitude")?,
        lon: coord(lon, "longitude")?,
    };
    checkin.validate()?;
    Ok(checkin)
}

/// Reads and interns a check-in file.
pub fn read_checkins(path: impl AsRef<Path>) -> Result<CheckInLog> {
    let rows = parse_checkins(BufReader::new(File::open(path)?))?;
    CheckInLog::from_checkins(rows)
}

/// Writes `log` in the format [`parse_checkins`] reads.
pub fn write_checkins<W: Write>(log: &CheckInLog, mut w: W) -> Result<()> {
    let coord = |c: Option<f64>| c.map(|v| v.to_string()).unwrap_or_default();
    for r in log.iter() {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            r.user_id,
            r.timestamp,
            coord(r.lat),
            coord(r.lon),
            r.location_id
        )?;
    }
    w.flush()?;
    Ok(())
}
