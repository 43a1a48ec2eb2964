use std::fs::File;
use std::path::Path;

use crate::edf_io::{ChannelInfo, Recording};
use crate::error::{Error, Result};

/// Reads a recording stored one channel per column, header row first.
pub fn read_csv_recording(path: impl AsRef<Path>, sample_rate_hz: f64) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers().map_err(|e| csv_error(&e, 1))?.clone();
    if headers.is_empty() {
        return Err(Error::CsvParse {
            line: 1,
            reason: "missing header row".into(),
        });
    }
    let channels = headers
        .iter()
        .map(ChannelInfo::from_label)
        .collect::<Result<Vec<_>>>()?;

    let mut data = vec![Vec::new(); channels.len()];
    for (i, record) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let record = record.map_err(|e| csv_error(&e, line))?;
        if record.len() != channels.len() {
            return Err(Error::CsvParse {
                line,
                reason: format!("{} fields, header has {}", record.len(), channels.len()),
            });
        }
        for (row, field) in data.iter_mut().zip(record.iter()) {
            let v: f64 = field.trim().parse().map_err(|_| Error::CsvParse {
                line,
                reason: format!("{field:?} is not a number"),
            })?;
            row.push(v);
        }
    }
    let subject = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Recording::new(channels, data, sample_rate_hz, subject)
}

/// Writes the channel matrix as columns; the sample rate is not stored.
pub fn write_csv_recording(path: impl AsRef<Path>, rec: &Recording) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    writer
        .write_record(rec.channels.iter().map(|c| c.name.as_str()))
        .map_err(|e| csv_io(path, e))?;
    for t in 0..rec.n_samples() {
        writer
            .write_record(rec.data.iter().map(|row| row[t].to_string()))
            .map_err(|e| csv_io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(e: &csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    let reason = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("{len} fields, expected {expected_len}")
        }
        _ => e.to_string(),
    };
    Error::CsvParse { line, reason }
}

pub(crate) fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::CsvParse {
            line: 0,
            reason: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_columns_as_channels() {
        let f = write_tmp("Fp1,Cz,O2\n1,2,3\n4.5,5,-6\n");
        let rec = read_csv_recording(f.path(), 100.0).unwrap();
        assert_eq!(rec.n_channels(), 3);
        assert_eq!(rec.data[2], vec![3.0, -6.0]);
        assert_eq!(rec.channels[1].region, crate::edf_io::Region::Central);
    }

    #[test]
    fn ragged_rows_are_parse_errors() {
        let f = write_tmp("Fp1,O2\n1,2\n3\n");
        match read_csv_recording(f.path(), 100.0) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unmapped_channel_is_named() {
        let f = write_tmp("Fp1,EKG\n1,2\n");
        match read_csv_recording(f.path(), 100.0) {
            Err(Error::UnmappedChannel(name)) => assert_eq!(name, "EKG"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_numeric_field() {
        let f = write_tmp("Fp1,O2\n1,abc\n");
        assert!(matches!(read_csv_recording(f.path(), 100.0), Err(Error::CsvParse { line: 2, .. })));
    }
}
