use std::fs;

use eegsynth::edf_io::{read_edf, read_edf_file, write_edf, EdfFile, Recording};
use eegsynth::Error;

fn recording() -> Recording {
    let data = (0..4)
        .map(|c| (0..1000).map(|i| ((i * (c + 3)) % 211) as f64 * 0.37 - 40.0 + c as f64).collect())
        .collect();
    Recording::from_labels(&["Fp1", "C4", "P3", "O2"], data, 250.0, "subject-9").unwrap()
}

#[test]
fn physical_values_survive_within_one_step() {
    let rec = recording();
    let edf = EdfFile::from_recording(&rec, 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.edf");
    write_edf(&path, &edf).unwrap();
    let back = read_edf(&path).unwrap();
    assert_eq!(back.n_channels(), 4);
    assert_eq!(back.n_samples(), 1000);
    assert_eq!(back.sample_rate_hz, 250.0);
    for (c, sig) in edf.signals.iter().enumerate() {
        let step = (sig.physical_max - sig.physical_min) / (sig.digital_max - sig.digital_min) as f64;
        for (a, b) in rec.data[c].iter().zip(&back.data[c]) {
            assert!((a - b).abs() <= step, "{a} vs {b}");
        }
    }
    assert_eq!(read_edf_file(&path).unwrap().samples, edf.samples);
}

#[test]
fn partial_record_is_dropped() {
    let mut rec = recording();
    for row in &mut rec.data {
        row.truncate(900);
    }
    let edf = EdfFile::from_recording(&rec, 1.0).unwrap();
    assert_eq!(edf.n_records(), 3);
    assert_eq!(edf.samples[0].len(), 750);
}

#[test]
fn header_faults_carry_offsets() {
    let bytes = EdfFile::from_recording(&recording(), 1.0).unwrap().to_bytes().unwrap();
    let parse_offset = |b: &[u8]| match EdfFile::parse(b) {
        Err(Error::Parse { offset, .. }) => offset,
        other => panic!("expected a parse error, got {other:?}"),
    };

    let mut bad = bytes.clone();
    bad[236..244].copy_from_slice(b"ten     ");
    assert_eq!(parse_offset(&bad), 236);

    let mut bad = bytes.clone();
    bad[244..252].copy_from_slice(b"-1      ");
    assert_eq!(parse_offset(&bad), 244);

    // samples per record of the second signal
    let spr = 256 + 4 * (16 + 80 + 8 + 8 + 8 + 8 + 8 + 80) + 8;
    let mut bad = bytes.clone();
    bad[spr..spr + 8].copy_from_slice(b"x       ");
    assert_eq!(parse_offset(&bad), spr as u64);

    assert_eq!(parse_offset(&bytes[..200]), 200);
    let cut = bytes.len() - 10;
    assert!(parse_offset(&bytes[..cut]) <= cut as u64);
}

#[test]
fn bdf_and_unmapped_labels_are_refused() {
    let mut bytes = EdfFile::from_recording(&recording(), 1.0).unwrap().to_bytes().unwrap();
    let dir = tempfile::tempdir().unwrap();

    let mut bdf = bytes.clone();
    bdf[0] = 0xFF;
    let path = dir.path().join("b.bdf");
    fs::write(&path, &bdf).unwrap();
    assert!(matches!(read_edf(&path), Err(Error::UnsupportedFormat(_))));

    bytes[256..272].copy_from_slice(b"ECG             ");
    let path = dir.path().join("ecg.edf");
    fs::write(&path, &bytes).unwrap();
    assert!(matches!(read_edf(&path), Err(Error::UnmappedChannel(l)) if l == "ECG"));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_edf("/definitely/not/here.edf").unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 2);
}
