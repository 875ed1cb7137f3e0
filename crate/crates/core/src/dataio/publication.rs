use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::mechanisms::PublicationRecord;
use crate::{Error, Result};

const HEADER: &str = "location_id,n_users,true_entropy,noisy_entropy,published,noise_scale";

/// Writes records sorted by location id. Floats carry 17 significant digits, so
/// reading the file back gives identical values.
pub fn write_publication_to<W: Write>(records: &[PublicationRecord], mut w: W) -> Result<()> {
    let mut sorted: Vec<&PublicationRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.location_id.cmp(&b.location_id));
    writeln!(w, "{HEADER}")?;
    for r in sorted {
        let noisy = r.noisy_entropy.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(
            w,
            "{},{},{:.16e},{},{},{:.16e}",
            r.location_id,
            r.n_users,
            r.true_entropy,
            noisy,
            r.published(),
            r.noise_scale
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_publication(records: &[PublicationRecord], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, |w| write_publication_to(records, w))
}

pub fn read_publication_from<R: BufRead>(reader: R) -> Result<Vec<PublicationRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if i == 0 {
            if line.trim_end() != HEADER {
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
        // Location ids may contain commas; the other five fields cannot.
        let mut fields: Vec<&str> = line.trim_end().rsplitn(6, ',').collect();
        if fields.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", fields.len())));
        }
        fields.reverse();
        let float = |s: &str, what: &str| s.parse::<f64>().map_err(|e| err(format!("{what}: {e}")));
        let published: bool = fields[4].parse().map_err(|e| err(format!("published: {e}")))?;
        let noisy = if fields[3].is_empty() {
            None
        } else {
            Some(float(fields[3], "noisy_entropy")?)
        };
        if published != noisy.is_some() {
            return Err(err("published flag disagrees with the noisy_entropy field".into()));
        }
        records.push(PublicationRecord {
            location_id: fields[0].to_owned(),
            n_users: fields[1].parse().map_err(|e| err(format!("n_users: {e}")))?,
            true_entropy: float(fields[2], "true_entropy")?,
            noisy_entropy: noisy,
            noise_scale: float(fields[5], "noise_scale")?,
        });
    }
    Ok(records)
}

pub fn read_publication(path: impl AsRef<Path>) -> Result<Vec<PublicationRecord>> {
    read_publication_from(BufReader::new(File::open(path)?))
}

/// Writes through a temporary file in the same directory, then renames it over
/// `path`, so readers never observe a partial file.
pub fn write_atomic(
    path: impl AsRef<Path>,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let path = path.as_ref();
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}
