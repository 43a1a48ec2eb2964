//! Minimal EDF reader and writer.
//!
//! Layout: a 256-byte fixed header, then 256 bytes of per-signal header
//! (stored field-major: all labels, then all transducers, ...), then data
//! records. Each record holds `samples_per_record` little-endian `i16`
//! samples for every signal in turn.

use std::fs;
use std::path::Path;

use crate::edf_io::{ChannelInfo, Recording};
use crate::error::{Error, Result};

const FIXED_HEADER: usize = 256;
const SIGNAL_HEADER: usize = 256;
const ANNOTATION_LABEL: &str = "EDF Annotations";

/// Per-signal header fields.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfSignal {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl EdfSignal {
    pub fn is_annotation(&self) -> bool {
        self.label.trim() == ANNOTATION_LABEL
    }

    /// Digital-to-physical conversion.
    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min
            + (f64::from(digital) - f64::from(self.digital_min)) * (self.physical_max - self.physical_min)
                / f64::from(self.digital_max - self.digital_min)
    }

    fn to_digital(&self, physical: f64) -> i16 {
        let d = (physical - self.physical_min) / (self.physical_max - self.physical_min)
            * f64::from(self.digital_max - self.digital_min)
            + f64::from(self.digital_min);
        d.round()
            .clamp(f64::from(self.digital_min), f64::from(self.digital_max)) as i16
    }
}

/// An EDF file held in memory with its stored digital samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfFile {
    pub patient_id: String,
    pub recording_id: String,
    pub start_date: String,
    pub start_time: String,
    pub reserved: String,
    pub record_duration_s: f64,
    pub signals: Vec<EdfSignal>,
    /// One row per signal, `n_records * samples_per_record` long.
    pub samples: Vec<Vec<i16>>,
}

impl EdfFile {
    pub fn n_records(&self) -> usize {
        match (self.signals.first(), self.samples.first()) {
            (Some(sig), Some(row)) if sig.samples_per_record > 0 => row.len() / sig.samples_per_record,
            _ => 0,
        }
    }

    /// Quantizes a recording into 16-bit samples with per-channel calibration
    /// spanning the channel's range. Trailing samples that do not fill a whole
    /// record are dropped.
    pub fn from_recording(rec: &Recording, record_duration_s: f64) -> Result<EdfFile> {
        let spr_f = rec.sample_rate_hz * record_duration_s;
        let spr = spr_f.round();
        if spr < 1.0 || (spr - spr_f).abs() > 1e-9 * spr_f.max(1.0) {
            return Err(Error::InvalidSpec(format!(
                "{} Hz x {record_duration_s} s is not a whole number of samples per record",
                rec.sample_rate_hz
            )));
        }
        let spr = spr as usize;
        let n_records = rec.n_samples() / spr;
        if n_records == 0 {
            return Err(Error::EmptyResult(
                "recording is shorter than one data record".into(),
            ));
        }
        let kept = n_records * spr;
        let mut signals = Vec::with_capacity(rec.n_channels());
        let mut samples = Vec::with_capacity(rec.n_channels());
        for (info, row) in rec.channels.iter().zip(&rec.data) {
            let row = &row[..kept];
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidSpec(format!("channel {} has non-finite samples", info.name)));
            }
            let hi = if hi > lo { hi } else { lo + 1.0 };
            let (_, pmin) = fit_bound(lo, true)?;
            let (_, pmax) = fit_bound(hi, false)?;
            let signal = EdfSignal {
                label: info.name.clone(),
                transducer: String::new(),
                physical_dimension: "uV".into(),
                physical_min: pmin,
                physical_max: pmax,
                digital_min: -32768,
                digital_max: 32767,
                prefiltering: String::new(),
                samples_per_record: spr,
            };
            samples.push(row.iter().map(|&v| signal.to_digital(v)).collect());
            signals.push(signal);
        }
        Ok(EdfFile {
            patient_id: rec.subject_id.clone(),
            recording_id: String::new(),
            start_date: "01.01.00".into(),
            start_time: "00.00.00".into(),
            reserved: String::new(),
            record_duration_s,
            signals,
            samples,
        })
    }

    /// Converts to physical units, dropping annotation signals.
    pub fn to_recording(&self, subject_id: &str) -> Result<Recording> {
        let eeg: Vec<(&EdfSignal, &Vec<i16>)> = self
            .signals
            .iter()
            .zip(&self.samples)
            .filter(|(s, _)| !s.is_annotation())
            .collect();
        if eeg.is_empty() {
            return Err(Error::UnsupportedFormat("file holds no ordinary signals".into()));
        }
        let spr = eeg[0].0.samples_per_record;
        if eeg.iter().any(|(s, _)| s.samples_per_record != spr) {
            return Err(Error::UnsupportedFormat(
                "signals with differing sample rates".into(),
            ));
        }
        let mut channels = Vec::with_capacity(eeg.len());
        let mut data = Vec::with_capacity(eeg.len());
        for (signal, digital) in eeg {
            channels.push(ChannelInfo::from_label(&normalize_label(&signal.label))?);
            data.push(digital.iter().map(|&d| signal.to_physical(d)).collect());
        }
        let rate = spr as f64 / self.record_duration_s;
        Recording::new(channels, data, rate, subject_id)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ns = self.signals.len();
        if ns == 0 || ns > 9999 {
            return Err(Error::InvalidSpec(format!("cannot write {ns} signals")));
        }
        if self.samples.len() != ns {
            return Err(Error::InvalidSpec("signal and sample counts differ".into()));
        }
        let n_records = self.n_records();
        for (s, row) in self.signals.iter().zip(&self.samples) {
            if s.samples_per_record == 0 || row.len() != n_records * s.samples_per_record {
                return Err(Error::InvalidSpec(format!(
                    "signal {:?} does not hold {n_records} whole records",
                    s.label
                )));
            }
        }
        let header_bytes = FIXED_HEADER + ns * SIGNAL_HEADER;
        let mut out = Vec::with_capacity(header_bytes + 2 * self.samples.iter().map(Vec::len).sum::<usize>());
        push_field(&mut out, "0", 8)?;
        push_field(&mut out, &self.patient_id, 80)?;
        push_field(&mut out, &self.recording_id, 80)?;
        push_field(&mut out, &self.start_date, 8)?;
        push_field(&mut out, &self.start_time, 8)?;
        push_field(&mut out, &header_bytes.to_string(), 8)?;
        push_field(&mut out, &self.reserved, 44)?;
        push_field(&mut out, &n_records.to_string(), 8)?;
        push_field(&mut out, &format_number(self.record_duration_s)?, 8)?;
        push_field(&mut out, &ns.to_string(), 4)?;
        for s in &self.signals {
            push_field(&mut out, &s.label, 16)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.transducer, 80)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.physical_dimension, 8)?;
        }
        for s in &self.signals {
            push_field(&mut out, &format_number(s.physical_min)?, 8)?;
        }
        for s in &self.signals {
            push_field(&mut out, &format_number(s.physical_max)?, 8)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.digital_min.to_string(), 8)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.digital_max.to_string(), 8)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.prefiltering, 80)?;
        }
        for s in &self.signals {
            push_field(&mut out, &s.samples_per_record.to_string(), 8)?;
        }
        for _ in &self.signals {
            push_field(&mut out, "", 32)?;
        }
        debug_assert_eq!(out.len(), header_bytes);
        for r in 0..n_records {
            for (s, row) in self.signals.iter().zip(&self.samples) {
                let spr = s.samples_per_record;
                for &v in &row[r * spr..(r + 1) * spr] {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn parse(bytes: &[u8]) -> Result<EdfFile> {
        let mut cur = Cursor { bytes, pos: 0 };
        if bytes.len() < FIXED_HEADER {
            return Err(Error::Parse {
                offset: bytes.len() as u64,
                reason: format!("file is {} bytes, shorter than the 256-byte header", bytes.len()),
            });
        }
        if bytes[0] == 0xFF {
            return Err(Error::UnsupportedFormat("BDF (24-bit) files are not supported".into()));
        }
        let version = cur.text(8)?;
        if version != "0" {
            return Err(Error::Parse {
                offset: 0,
                reason: format!("version field is {version:?}, expected \"0\""),
            });
        }
        let patient_id = cur.text(80)?;
        let recording_id = cur.text(80)?;
        let start_date = cur.text(8)?;
        let start_time = cur.text(8)?;
        let header_off = cur.pos;
        let declared_header: usize = cur.number(8)?;
        let reserved = cur.text(44)?;
        if reserved.starts_with("EDF+D") {
            return Err(Error::UnsupportedFormat(
                "discontinuous EDF+ recordings are not supported".into(),
            ));
        }
        let records_off = cur.pos;
        let declared_records: i64 = cur.number(8)?;
        let duration_off = cur.pos;
        let record_duration_s: f64 = cur.number(8)?;
        if !(record_duration_s.is_finite() && record_duration_s > 0.0) {
            return Err(Error::Parse {
                offset: duration_off as u64,
                reason: format!("record duration {record_duration_s} is not positive"),
            });
        }
        let ns_off = cur.pos;
        let ns: usize = cur.number(4)?;
        if ns == 0 {
            return Err(Error::Parse {
                offset: ns_off as u64,
                reason: "file declares zero signals".into(),
            });
        }
        let expected_header = FIXED_HEADER + ns * SIGNAL_HEADER;
        if declared_header != expected_header {
            return Err(Error::Parse {
                offset: header_off as u64,
                reason: format!(
                    "header length field says {declared_header} bytes but {ns} signals need {expected_header}"
                ),
            });
        }
        if bytes.len() < expected_header {
            return Err(Error::Parse {
                offset: bytes.len() as u64,
                reason: format!("file ends inside the {expected_header}-byte header"),
            });
        }
        let labels = cur.texts(ns, 16)?;
        let transducers = cur.texts(ns, 80)?;
        let dims = cur.texts(ns, 8)?;
        let pmins: Vec<f64> = cur.numbers(ns, 8)?;
        let pmaxs: Vec<f64> = cur.numbers(ns, 8)?;
        let dmin_off = cur.pos;
        let dmins: Vec<i32> = cur.numbers(ns, 8)?;
        let dmaxs: Vec<i32> = cur.numbers(ns, 8)?;
        let prefilters = cur.texts(ns, 80)?;
        let spr_off = cur.pos;
        let sprs: Vec<usize> = cur.numbers(ns, 8)?;
        let reserved_fields = cur.texts(ns, 32)?;
        debug_assert_eq!(reserved_fields.len(), ns);

        let mut signals = Vec::with_capacity(ns);
        for i in 0..ns {
            if dmins[i] == dmaxs[i] {
                return Err(Error::Parse {
                    offset: (dmin_off + 8 * i) as u64,
                    reason: format!("degenerate calibration for signal {:?}: digital_min == digital_max", labels[i]),
                });
            }
            if sprs[i] == 0 {
                return Err(Error::Parse {
                    offset: (spr_off + 8 * i) as u64,
                    reason: format!("signal {:?} has zero samples per record", labels[i]),
                });
            }
            signals.push(EdfSignal {
                label: labels[i].clone(),
                transducer: transducers[i].clone(),
                physical_dimension: dims[i].clone(),
                physical_min: pmins[i],
                physical_max: pmaxs[i],
                digital_min: dmins[i],
                digital_max: dmaxs[i],
                prefiltering: prefilters[i].clone(),
                samples_per_record: sprs[i],
            });
        }

        let record_bytes = 2 * sprs.iter().sum::<usize>();
        let data_bytes = bytes.len() - expected_header;
        let n_records = if declared_records == -1 {
            if !data_bytes.is_multiple_of(record_bytes) {
                return Err(Error::Parse {
                    offset: bytes.len() as u64,
                    reason: format!("{data_bytes} data bytes is not a whole number of {record_bytes}-byte records"),
                });
            }
            data_bytes / record_bytes
        } else if declared_records < 0 {
            return Err(Error::Parse {
                offset: records_off as u64,
                reason: format!("invalid record count {declared_records}"),
            });
        } else {
            declared_records as usize
        };
        let expected_len = expected_header + n_records * record_bytes;
        if bytes.len() != expected_len {
            return Err(Error::Parse {
                offset: bytes.len().min(expected_len) as u64,
                reason: format!(
                    "file is {} bytes but the header implies {expected_len} ({n_records} records of {record_bytes} bytes)",
                    bytes.len()
                ),
            });
        }

        let mut samples: Vec<Vec<i16>> = sprs.iter().map(|&s| Vec::with_capacity(s * n_records)).collect();
        let mut pos = expected_header;
        for _ in 0..n_records {
            for (row, &spr) in samples.iter_mut().zip(&sprs) {
                row.extend(
                    bytes[pos..pos + 2 * spr]
                        .chunks_exact(2)
                        .map(|b| i16::from_le_bytes([b[0], b[1]])),
                );
                pos += 2 * spr;
            }
        }

        Ok(EdfFile {
            patient_id,
            recording_id,
            start_date,
            start_time,
            reserved,
            record_duration_s,
            signals,
            samples,
        })
    }
}

/// Reads an EDF file keeping its stored digital samples.
pub fn read_edf_file(path: impl AsRef<Path>) -> Result<EdfFile> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EdfFile::parse(&bytes)
}

/// Reads an EDF file as a [`Recording`] in physical units.
pub fn read_edf(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let file = read_edf_file(path)?;
    let subject = match file.patient_id.split_whitespace().next() {
        Some(id) if id != "X" => id.to_string(),
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    file.to_recording(&subject)
}

pub fn write_edf(path: impl AsRef<Path>, file: &EdfFile) -> Result<()> {
    let path = path.as_ref();
    let bytes = file.to_bytes()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// `"EEG Fp1-REF"` becomes `"Fp1"`.
fn normalize_label(label: &str) -> String {
    let mut s = label.trim();
    if s.len() > 4 && s[..4].eq_ignore_ascii_case("eeg ") {
        s = s[4..].trim_start();
    }
    match s.find('-') {
        Some(i) if i > 0 => s[..i].to_string(),
        _ => s.to_string(),
    }
}

fn push_field(out: &mut Vec<u8>, value: &str, width: usize) -> Result<()> {
    if !value.is_ascii() || value.len() > width {
        return Err(Error::InvalidSpec(format!(
            "header value {value:?} does not fit a {width}-byte ASCII field"
        )));
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

/// Shortest decimal text of at most 8 characters that parses back to `v`.
fn format_number(v: f64) -> Result<String> {
    let s = format!("{v}");
    if s.len() <= 8 {
        return Ok(s);
    }
    for decimals in (0..=7).rev() {
        let s = format!("{v:.decimals$}");
        if s.len() <= 8 && s.parse::<f64>().ok() == Some(v) {
            return Ok(s);
        }
    }
    Err(Error::InvalidSpec(format!("{v} cannot be written exactly in 8 characters")))
}

/// Rounds `v` outward (down for a minimum, up for a maximum) to the most
/// precise value that fits an 8-character field.
fn fit_bound(v: f64, round_down: bool) -> Result<(String, f64)> {
    for decimals in (0..=6).rev() {
        let scale = 10f64.powi(decimals);
        let scaled = if round_down { (v * scale).floor() } else { (v * scale).ceil() };
        let s = format!("{:.*}", decimals as usize, scaled / scale);
        if s.len() <= 8 {
            let parsed: f64 = s.parse().expect("formatted float parses");
            let ok = if round_down { parsed <= v } else { parsed >= v };
            if ok {
                return Ok((s, parsed));
            }
        }
    }
    Err(Error::InvalidSpec(format!("physical bound {v} does not fit an EDF header field")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn text(&mut self, width: usize) -> Result<String> {
        let start = self.pos;
        let raw = self.bytes.get(start..start + width).ok_or_else(|| Error::Parse {
            offset: self.bytes.len() as u64,
            reason: format!("file ends inside a {width}-byte header field at byte {start}"),
        })?;
        if !raw.is_ascii() {
            return Err(Error::Parse {
                offset: start as u64,
                reason: "header field holds non-ASCII bytes".into(),
            });
        }
        self.pos += width;
        Ok(String::from_utf8_lossy(raw).trim().to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, width: usize) -> Result<T> {
        let start = self.pos;
        let s = self.text(width)?;
        s.parse().map_err(|_| Error::Parse {
            offset: start as u64,
            reason: format!("expected a number, found {s:?}"),
        })
    }

    fn texts(&mut self, n: usize, width: usize) -> Result<Vec<String>> {
        (0..n).map(|_| self.text(width)).collect()
    }

    fn numbers<T: std::str::FromStr>(&mut self, n: usize, width: usize) -> Result<Vec<T>> {
        (0..n).map(|_| self.number(width)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_file(value: i16) -> EdfFile {
        let signal = |label: &str| EdfSignal {
            label: label.into(),
            transducer: "AgAgCl".into(),
            physical_dimension: "uV".into(),
            physical_min: 0.0,
            physical_max: 10.0,
            digital_min: 0,
            digital_max: 1000,
            prefiltering: String::new(),
            samples_per_record: 256,
        };
        EdfFile {
            patient_id: "subj01".into(),
            recording_id: String::new(),
            start_date: "01.01.00".into(),
            start_time: "00.00.00".into(),
            reserved: String::new(),
            record_duration_s: 1.0,
            signals: vec![signal("Fp1"), signal("O2")],
            samples: vec![vec![value; 2560]; 2],
        }
    }

    #[test]
    fn constant_signal_scales_to_physical() {
        let bytes = constant_file(500).to_bytes().unwrap();
        let rec = EdfFile::parse(&bytes).unwrap().to_recording("s").unwrap();
        assert_eq!(rec.n_channels(), 2);
        assert_eq!(rec.n_samples(), 2560);
        assert_eq!(rec.sample_rate_hz, 256.0);
        for row in &rec.data {
            assert!(row.iter().all(|&v| (v - 5.0).abs() < 1e-9));
        }
    }

    #[test]
    fn header_length_mismatch_is_positioned() {
        let mut bytes = constant_file(1).to_bytes().unwrap();
        bytes[184..192].copy_from_slice(b"999     ");
        match EdfFile::parse(&bytes) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 184),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_data_is_rejected() {
        let mut bytes = constant_file(1).to_bytes().unwrap();
        bytes.truncate(bytes.len() - 3);
        assert!(matches!(EdfFile::parse(&bytes), Err(Error::Parse { .. })));
    }

    #[test]
    fn degenerate_calibration() {
        let mut file = constant_file(1);
        file.signals[1].digital_max = 0;
        let bytes = file.to_bytes().unwrap();
        match EdfFile::parse(&bytes) {
            Err(Error::Parse { offset, reason }) => {
                assert!(reason.contains("degenerate calibration"));
                // dmin field of the second signal
                assert_eq!(offset as usize, 256 + 2 * (16 + 80 + 8 + 8 + 8) + 8);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn discontinuous_edf_plus_is_unsupported() {
        let mut file = constant_file(1);
        file.reserved = "EDF+D".into();
        let bytes = file.to_bytes().unwrap();
        assert!(matches!(EdfFile::parse(&bytes), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn bad_version() {
        let mut bytes = constant_file(1).to_bytes().unwrap();
        bytes[0] = b'1';
        assert!(matches!(EdfFile::parse(&bytes), Err(Error::Parse { offset: 0, .. })));
    }

    #[test]
    fn unknown_record_count_is_inferred() {
        let mut bytes = constant_file(3).to_bytes().unwrap();
        bytes[236..244].copy_from_slice(b"-1      ");
        let file = EdfFile::parse(&bytes).unwrap();
        assert_eq!(file.n_records(), 10);
    }

    #[test]
    fn annotation_channel_dropped() {
        let mut file = constant_file(7);
        let mut ann = file.signals[0].clone();
        ann.label = ANNOTATION_LABEL.into();
        ann.samples_per_record = 30;
        ann.digital_min = -32768;
        ann.digital_max = 32767;
        file.signals.push(ann);
        file.samples.push(vec![0; 300]);
        let bytes = file.to_bytes().unwrap();
        let rec = EdfFile::parse(&bytes).unwrap().to_recording("s").unwrap();
        assert_eq!(rec.n_channels(), 2);
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_label("EEG Fp1-REF"), "Fp1");
        assert_eq!(normalize_label(" O2 "), "O2");
    }

    #[test]
    fn bounds_fit_and_enclose() {
        for &v in &[0.0, -123.456789, 98765.4321, 1e-7, -0.5] {
            let (s, lo) = fit_bound(v, true).unwrap();
            assert!(s.len() <= 8 && lo <= v);
            let (s, hi) = fit_bound(v, false).unwrap();
            assert!(s.len() <= 8 && hi >= v);
        }
    }
}
