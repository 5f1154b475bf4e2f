//! File formats and persistence.
//!
//! Datasets and prototype stores are JSON Lines; reports are CSV plus an
//! aligned text table. Every artifact starts with a provenance record
//! (config digest, seed, tool version) so a file can always be traced to
//! the run that wrote it. Floats go through serde_json, which prints the
//! shortest decimal that round-trips, so rewriting a file reproduces it
//! byte for byte. All writes land in a temp file first and are renamed into
//! place.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{DetailRecord, SweepRow};
use crate::prompt::hex_string;
use crate::prototype::Prototype;
use crate::scatter::SCSignature;
use crate::signal::{ProfileSource, RangeProfile};

/// Tool version stamped into provenance records.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run provenance carried by every artifact file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    /// Digests any serializable configuration.
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        Ok(Provenance {
            config_sha256: hex_string(&hasher.finalize()),
            seed,
            version: TOOL_VERSION.to_string(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ProvenanceLine {
    provenance: Provenance,
}

/// One dataset record.
#[derive(Debug, Serialize, Deserialize)]
struct ProfileRecord {
    label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    aspect_deg: Option<f64>,
    cells: usize,
    magnitude: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    complex: Option<Vec<(f64, f64)>>,
    source: ProfileSource,
}

/// Writes scratch bytes then renames into place.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes a labeled dataset as JSON Lines, provenance first.
pub fn write_dataset(
    path: &Path,
    profiles: &[RangeProfile],
    provenance: &Provenance,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ProvenanceLine {
        provenance: provenance.clone(),
    })?);
    out.push('\n');
    for (i, profile) in profiles.iter().enumerate() {
        let Some(label) = profile.label.clone() else {
            return Err(Error::invalid(format!("profile {i} has no label")));
        };
        let record = ProfileRecord {
            label,
            aspect_deg: profile.aspect_deg,
            cells: profile.len(),
            magnitude: profile.magnitude().to_vec(),
            complex: profile
                .values()
                .map(|vs| vs.iter().map(|v| (v.re, v.im)).collect()),
            source: profile.source,
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Loads a JSON Lines dataset, validating the schema line by line:
/// uniform profile length, finite nonnegative magnitudes, matching complex
/// length. The leading provenance record, if present, is skipped.
pub fn load_dataset(path: &Path) -> Result<Vec<RangeProfile>> {
    let reader = BufReader::new(File::open(path)?);
    let mut profiles = Vec::new();
    let mut expected_len: Option<usize> = None;
    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if serde_json::from_str::<ProvenanceLine>(&line).is_ok() {
            continue;
        }
        let record: ProfileRecord = serde_json::from_str(&line).map_err(|e| Error::FileParse {
            line: line_no,
            message: e.to_string(),
        })?;
        let parse_err = |message: String| Error::FileParse {
            line: line_no,
            message,
        };
        if record.magnitude.is_empty() {
            return Err(parse_err("magnitude is empty".into()));
        }
        if record.magnitude.len() != record.cells {
            return Err(parse_err(format!(
                "cells = {} but magnitude has {} entries",
                record.cells,
                record.magnitude.len()
            )));
        }
        if let Some(bad) = record
            .magnitude
            .iter()
            .find(|m| !m.is_finite() || **m < 0.0)
        {
            return Err(parse_err(format!("magnitude entry {bad} is invalid")));
        }
        if let Some(expected) = expected_len {
            if record.cells != expected {
                return Err(parse_err(format!(
                    "profile length {} differs from earlier {}",
                    record.cells, expected
                )));
            }
        } else {
            expected_len = Some(record.cells);
        }
        let values = match record.complex {
            Some(pairs) => {
                if pairs.len() != record.cells {
                    return Err(parse_err(format!(
                        "complex has {} entries for {} cells",
                        pairs.len(),
                        record.cells
                    )));
                }
                Some(
                    pairs
                        .into_iter()
                        .map(|(re, im)| Complex64::new(re, im))
                        .collect(),
                )
            }
            None => None,
        };
        let mut profile = RangeProfile::from_parts(record.magnitude, values)
            .map_err(|e| parse_err(e.to_string()))?
            .with_label(record.label);
        if let Some(a) = record.aspect_deg {
            profile = profile.with_aspect(a);
        }
        profile.source = record.source;
        profiles.push(profile);
    }
    Ok(profiles)
}

#[derive(Serialize, Deserialize)]
struct PrototypeRecord {
    class: String,
    cluster_id: usize,
    member_count: usize,
    signature: SCSignature,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_profile: Option<Vec<f64>>,
}

/// Writes a prototype store as JSON Lines, provenance first.
pub fn write_prototypes(
    path: &Path,
    prototypes: &[Prototype],
    provenance: &Provenance,
    include_mean_profile: bool,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ProvenanceLine {
        provenance: provenance.clone(),
    })?);
    out.push('\n');
    for p in prototypes {
        let record = PrototypeRecord {
            class: p.class_label.clone(),
            cluster_id: p.cluster_id,
            member_count: p.member_count,
            signature: p.signature.clone(),
            mean_profile: include_mean_profile.then(|| p.mean_profile.clone()),
        };
        out.push_str(&serde_json::to_string(&record)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Loads a prototype store.
pub fn load_prototypes(path: &Path) -> Result<Vec<Prototype>> {
    let reader = BufReader::new(File::open(path)?);
    let mut prototypes = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if serde_json::from_str::<ProvenanceLine>(&line).is_ok() {
            continue;
        }
        let record: PrototypeRecord =
            serde_json::from_str(&line).map_err(|e| Error::FileParse {
                line: line_no + 1,
                message: e.to_string(),
            })?;
        prototypes.push(Prototype {
            class_label: record.class,
            cluster_id: record.cluster_id,
            member_count: record.member_count,
            mean_profile: record.mean_profile.unwrap_or_default(),
            signature: record.signature,
        });
    }
    Ok(prototypes)
}

/// Writes extracted signatures as JSON Lines, provenance first.
pub fn write_signatures(
    path: &Path,
    signatures: &[SCSignature],
    provenance: &Provenance,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ProvenanceLine {
        provenance: provenance.clone(),
    })?);
    out.push('\n');
    for sig in signatures {
        out.push_str(&serde_json::to_string(sig)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Writes sweep/evaluation rows as CSV with a leading provenance comment.
pub fn write_report_csv(path: &Path, rows: &[SweepRow], provenance: &Provenance) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(
        buf,
        "# provenance config_sha256={} seed={} version={}",
        provenance.config_sha256, provenance.seed, provenance.version
    )?;
    let mut writer = csv::Writer::from_writer(buf);
    for row in rows {
        writer.serialize(row).map_err(csv_error)?;
    }
    let buf = writer
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    atomic_write(path, &buf)
}

/// Reads report rows back, skipping provenance comments.
pub fn read_report_csv(path: &Path) -> Result<Vec<SweepRow>> {
    let text = std::fs::read_to_string(path)?;
    let data: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    let mut reader = csv::Reader::from_reader(data.as_bytes());
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(csv_error)?);
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    Error::FileParse {
        line: 0,
        message: e.to_string(),
    }
}

/// Writes per-episode detail records as JSON Lines, provenance first.
pub fn write_details(
    path: &Path,
    details: &[DetailRecord],
    provenance: &Provenance,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&serde_json::to_string(&ProvenanceLine {
        provenance: provenance.clone(),
    })?);
    out.push('\n');
    for d in details {
        out.push_str(&serde_json::to_string(d)?);
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

/// Renders rows as an aligned text table.
pub fn render_table(rows: &[SweepRow]) -> String {
    let headers = [
        "method",
        "backend",
        "K",
        "episodes",
        "mean_acc",
        "macro_f1",
        "abstentions",
    ];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.method.clone(),
                r.backend.clone(),
                r.k.to_string(),
                r.episodes.to_string(),
                format!("{:.2}", r.mean_acc),
                format!("{:.2}", r.macro_f1),
                r.abstentions.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &cells {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |fields: &[String], widths: &[usize]| -> String {
        fields
            .iter()
            .zip(widths)
            .map(|(f, w)| format!("{f:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(
        &headers.map(str::to_string),
        &widths,
    ));
    out.push('\n');
    for row in cells {
        out.push_str(&line(&row, &widths));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{synthesize_profile, RadarParams, ScattererSet};

    fn sample_profiles() -> Vec<RangeProfile> {
        let params = RadarParams::aligned(64, 400.0e6);
        (0..4)
            .map(|i| {
                synthesize_profile(
                    &ScattererSet::from_real(&[(10 + i, 1.0), (40, 0.5)]),
                    &params,
                    0.01,
                    i as u64,
                )
                .unwrap()
                .with_label(if i % 2 == 0 { "even" } else { "odd" })
                .with_aspect(i as f64 * 10.0)
            })
            .collect()
    }

    fn provenance() -> Provenance {
        Provenance::new(&serde_json::json!({"test": true}), 7).unwrap()
    }

    #[test]
    fn dataset_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.jsonl");
        let profiles = sample_profiles();
        write_dataset(&path, &profiles, &provenance()).unwrap();
        let loaded = load_dataset(&path).unwrap();
        assert_eq!(loaded.len(), profiles.len());
        for (a, b) in profiles.iter().zip(&loaded) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.aspect_deg, b.aspect_deg);
            assert_eq!(a.magnitude(), b.magnitude());
            assert_eq!(a.values(), b.values());
        }
        // Rewriting the loaded dataset reproduces the bytes.
        let path2 = dir.path().join("data2.jsonl");
        write_dataset(&path2, &loaded, &provenance()).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn loader_names_the_offending_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(
            &path,
            "{\"label\":\"a\",\"cells\":2,\"magnitude\":[0.1,0.2],\"source\":\"loaded\"}\n\
             {\"label\":\"b\",\"cells\":0,\"magnitude\":[],\"source\":\"loaded\"}\n",
        )
        .unwrap();
        match load_dataset(&path) {
            Err(Error::FileParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn loader_rejects_mixed_lengths_and_bad_magnitudes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.jsonl");
        std::fs::write(
            &path,
            "{\"label\":\"a\",\"cells\":2,\"magnitude\":[0.1,0.2],\"source\":\"loaded\"}\n\
             {\"label\":\"b\",\"cells\":3,\"magnitude\":[0.1,0.2,0.3],\"source\":\"loaded\"}\n",
        )
        .unwrap();
        assert!(matches!(
            load_dataset(&path),
            Err(Error::FileParse { line: 2, .. })
        ));

        let path = dir.path().join("neg.jsonl");
        std::fs::write(
            &path,
            "{\"label\":\"a\",\"cells\":2,\"magnitude\":[0.1,-0.2],\"source\":\"loaded\"}\n",
        )
        .unwrap();
        assert!(load_dataset(&path).is_err());
    }

    #[test]
    fn prototype_store_round_trips() {
        use crate::scatter::ScatteringCenter;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("protos.jsonl");
        let protos = vec![Prototype {
            class_label: "a".into(),
            cluster_id: 0,
            member_count: 3,
            mean_profile: vec![0.1, 0.9, 0.2],
            signature: SCSignature::new(
                vec![ScatteringCenter {
                    range_index: 1,
                    amplitude: 1.0,
                }],
                3,
            )
            .unwrap(),
        }];
        write_prototypes(&path, &protos, &provenance(), true).unwrap();
        let loaded = load_prototypes(&path).unwrap();
        assert_eq!(loaded, protos);
        // First line is the provenance record.
        let first = std::fs::read_to_string(&path)
            .unwrap()
            .lines()
            .next()
            .unwrap()
            .to_string();
        assert!(first.contains("provenance"));
    }

    #[test]
    fn report_csv_round_trips_and_renders() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let rows = vec![
            SweepRow {
                method: "adp".into(),
                backend: "surrogate".into(),
                k: 10,
                episodes: 50,
                mean_acc: 91.5,
                macro_f1: 90.25,
                abstentions: 0,
            },
            SweepRow {
                method: "monolithic".into(),
                backend: "surrogate".into(),
                k: 10,
                episodes: 50,
                mean_acc: 60.0,
                macro_f1: 58.125,
                abstentions: 2,
            },
        ];
        write_report_csv(&path, &rows, &provenance()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# provenance"));
        assert!(text.contains("method,backend,k,episodes,mean_acc,macro_f1,abstentions"));
        let back = read_report_csv(&path).unwrap();
        assert_eq!(back, rows);

        let table = render_table(&rows);
        assert!(table.contains("mean_acc"));
        assert!(table.lines().count() == 3);
    }

    #[test]
    fn identical_writes_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        let rows = vec![SweepRow {
            method: "adp".into(),
            backend: "surrogate".into(),
            k: 1,
            episodes: 5,
            mean_acc: 33.333333333333336,
            macro_f1: 16.666666666666668,
            abstentions: 0,
        }];
        write_report_csv(&a, &rows, &provenance()).unwrap();
        write_report_csv(&b, &rows, &provenance()).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        // Shortest round-trip float text survives the read.
        assert_eq!(read_report_csv(&a).unwrap(), rows);
    }
}
