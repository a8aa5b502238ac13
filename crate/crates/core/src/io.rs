//! File formats, bundle directories, export lists and session history.
//!
//! A bundle directory holds:
//!
//! | file | format |
//! |---|---|
//! | `pedigree.csv` | `child,parent,role,cross_type`, role one of `M F U S` |
//! | `lines.csv` (optional) | `id,name,aliases,attributes`, aliases `|`-separated, attributes a JSON object |
//! | `genotypes.tsv` + `markers.csv` (optional) | `line<TAB>m1…` calls; `marker,chromosome,position` |
//! | `traits.csv` + `phenotypes.csv` (optional) | `trait,kind,classes`; `line,trait,value,year,site` |
//! | `manifest.json` | member files with SHA-256 digests |
//!
//! Input may use Unix or Windows line endings; output is Unix.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::genotype::{AlleleCall, GenotypeError, GenotypeMatrix, MarkerInfo, MarkerMap};
use crate::overlay::{OverlayError, PhenotypeRecord, PhenotypeTable, TraitDescriptor, TraitKind};
use crate::pedigree::{build_net, Diagnostic, LineId, LineRecord, ParentRelation, PedigreeError, PedigreeNet, Role};
use crate::synth::SynthData;

pub const PEDIGREE_FILE: &str = "pedigree.csv";
pub const LINES_FILE: &str = "lines.csv";
pub const GENOTYPES_FILE: &str = "genotypes.tsv";
pub const MARKERS_FILE: &str = "markers.csv";
pub const TRAITS_FILE: &str = "traits.csv";
pub const PHENOTYPES_FILE: &str = "phenotypes.csv";
pub const TRUTH_FILE: &str = "truth.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const PEDIGREE_HEADER: [&str; 4] = ["child", "parent", "role", "cross_type"];
const LINES_HEADER: [&str; 4] = ["id", "name", "aliases", "attributes"];
const MARKERS_HEADER: [&str; 3] = ["marker", "chromosome", "position"];
const TRAITS_HEADER: [&str; 3] = ["trait", "kind", "classes"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable { path: String, source: io::Error },
    #[error("cannot write {path}: {source}")]
    FileUnwritable { path: String, source: io::Error },
    #[error("{file}: missing header `{expected}`")]
    MissingHeader { file: String, expected: String },
    #[error("{file}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        file: String,
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{file}: illegal call `{token}` at row {row}, column {col}")]
    IllegalCall {
        file: String,
        row: usize,
        col: usize,
        token: String,
    },
    #[error("{file}: unknown trait kind `{kind}` at row {row}")]
    UnknownKind { file: String, row: usize, kind: String },
    #[error("{file}: {message}")]
    Malformed { file: String, message: String },
    #[error("{file}: digest does not match manifest")]
    DigestMismatch { file: String },
    #[error(transparent)]
    Pedigree(#[from] PedigreeError),
    #[error(transparent)]
    Genotype(#[from] GenotypeError),
    #[error(transparent)]
    Overlay(#[from] OverlayError),
}

/// A skipped or superseded input row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    pub file: String,
    /// 1-based physical line number.
    pub row: usize,
    pub reason: String,
}

impl std::fmt::Display for RowDiagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.row, self.reason)
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|source| IoError::FileUnreadable {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|source| IoError::FileUnwritable {
        path: path.display().to_string(),
        source,
    })
}

fn label(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// A CSV record with its physical line number.
type Record = (usize, Vec<String>);

/// CSV records with their physical line numbers; the first is the header.
fn csv_records(bytes: &[u8], file: &str) -> Result<Vec<Record>, IoError> {
    let bytes = bytes.strip_prefix("\u{feff}".as_bytes()).unwrap_or(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IoError::Malformed {
            file: file.to_string(),
            message: e.to_string(),
        })?;
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((row, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn expect_header<'a>(
    records: &'a [Record],
    file: &str,
    required: &[&str],
) -> Result<(BTreeMap<String, usize>, &'a [Record]), IoError> {
    let missing = || IoError::MissingHeader {
        file: file.to_string(),
        expected: required.join(","),
    };
    let (_, header) = records.first().ok_or_else(missing)?;
    let columns: BTreeMap<String, usize> = header
        .iter()
        .enumerate()
        .map(|(i, h)| (h.to_ascii_lowercase(), i))
        .collect();
    if required.iter().any(|r| !columns.contains_key(*r)) {
        return Err(missing());
    }
    Ok((columns, &records[1..]))
}

fn field<'a>(rec: &'a [String], columns: &BTreeMap<String, usize>, name: &str) -> &'a str {
    columns
        .get(name)
        .and_then(|&i| rec.get(i))
        .map_or("", String::as_str)
}

fn csv_bytes(rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// Relations and lines read from a pedigree file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PedigreeFile {
    /// One record per id seen as child or parent, in id order.
    pub lines: Vec<LineRecord>,
    pub relations: Vec<ParentRelation>,
    pub diagnostics: Vec<RowDiagnostic>,
    /// Data rows, header excluded.
    pub rows: usize,
}

pub fn parse_pedigree(bytes: &[u8], file: &str) -> Result<PedigreeFile, IoError> {
    let records = csv_records(bytes, file)?;
    let (cols, body) = expect_header(&records, file, &PEDIGREE_HEADER)?;
    let mut out = PedigreeFile {
        rows: body.len(),
        ..PedigreeFile::default()
    };
    let mut seen = BTreeSet::new();
    let mut ids = BTreeSet::new();
    for (row, rec) in body {
        let skip = |reason: String| RowDiagnostic {
            file: file.to_string(),
            row: *row,
            reason,
        };
        let child = field(rec, &cols, "child");
        let parent = field(rec, &cols, "parent");
        let role = field(rec, &cols, "role");
        if child.is_empty() || parent.is_empty() {
            out.diagnostics.push(skip("empty child or parent".into()));
            continue;
        }
        let Some(role) = Role::from_code(&role.to_ascii_uppercase()) else {
            out.diagnostics.push(skip(format!("unknown role `{role}`")));
            continue;
        };
        let cross_type = match field(rec, &cols, "cross_type") {
            "" if role == Role::Selfed => "self",
            "" => "cross",
            t => t,
        };
        let rel = ParentRelation::new(child, parent, role, cross_type);
        if !seen.insert(rel.clone()) {
            out.diagnostics.push(skip("duplicate row".into()));
            continue;
        }
        ids.insert(rel.child.clone());
        ids.insert(rel.parent.clone());
        out.relations.push(rel);
    }
    out.lines = ids
        .into_iter()
        .map(|id| LineRecord::new(id.clone(), id.as_str()))
        .collect();
    Ok(out)
}

pub fn load_pedigree(path: &Path) -> Result<PedigreeFile, IoError> {
    parse_pedigree(&read_file(path)?, &label(path))
}

pub fn pedigree_bytes(relations: &[ParentRelation]) -> Vec<u8> {
    csv_bytes(std::iter::once(strings(&PEDIGREE_HEADER)).chain(relations.iter().map(|r| {
        vec![
            r.child.to_string(),
            r.parent.to_string(),
            r.role.code().to_string(),
            r.cross_type.clone(),
        ]
    })))
}

pub fn parse_lines(bytes: &[u8], file: &str) -> Result<(Vec<LineRecord>, Vec<RowDiagnostic>), IoError> {
    let records = csv_records(bytes, file)?;
    let (cols, body) = expect_header(&records, file, &["id"])?;
    let mut lines = Vec::new();
    let mut diags = Vec::new();
    for (row, rec) in body {
        let id = field(rec, &cols, "id");
        if id.is_empty() {
            diags.push(RowDiagnostic {
                file: file.to_string(),
                row: *row,
                reason: "empty id".into(),
            });
            continue;
        }
        let name = match field(rec, &cols, "name") {
            "" => id,
            n => n,
        };
        let attributes = match field(rec, &cols, "attributes") {
            "" => BTreeMap::new(),
            raw => match serde_json::from_str(raw) {
                Ok(a) => a,
                Err(e) => {
                    diags.push(RowDiagnostic {
                        file: file.to_string(),
                        row: *row,
                        reason: format!("attributes are not a JSON object of strings: {e}"),
                    });
                    continue;
                }
            },
        };
        let aliases = field(rec, &cols, "aliases")
            .split('|')
            .filter(|a| !a.is_empty())
            .map(str::to_string)
            .collect();
        lines.push(LineRecord {
            id: LineId::from(id),
            name: name.to_string(),
            aliases,
            attributes,
        });
    }
    Ok((lines, diags))
}

pub fn lines_bytes(lines: &[LineRecord]) -> Vec<u8> {
    csv_bytes(std::iter::once(strings(&LINES_HEADER)).chain(lines.iter().map(|l| {
        vec![
            l.id.to_string(),
            l.name.clone(),
            l.aliases.join("|"),
            if l.attributes.is_empty() {
                String::new()
            } else {
                serde_json::to_string(&l.attributes).expect("string map")
            },
        ]
    })))
}

/// Splits one TSV line, accepting a trailing `\r`.
fn tsv_fields(line: &str) -> Vec<&str> {
    line.strip_suffix('\r').unwrap_or(line).split('\t').collect()
}

/// Reads a genotype matrix and an optional marker map. Markers missing from
/// the map are kept with unknown position and reported.
pub fn parse_genotypes(
    matrix: &[u8],
    map: Option<&[u8]>,
    matrix_file: &str,
    map_file: &str,
) -> Result<(GenotypeMatrix, MarkerMap, Vec<RowDiagnostic>), IoError> {
    let text = std::str::from_utf8(matrix).map_err(|e| IoError::Malformed {
        file: matrix_file.to_string(),
        message: e.to_string(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut rows_iter = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let header_missing = || IoError::MissingHeader {
        file: matrix_file.to_string(),
        expected: "line<TAB>marker…".into(),
    };
    let (_, header) = rows_iter.next().ok_or_else(header_missing)?;
    let header = tsv_fields(header);
    if header[0].trim() != "line" {
        return Err(header_missing());
    }
    let markers: Vec<String> = header[1..].iter().map(|m| m.trim().to_string()).collect();
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for (i, raw) in rows_iter {
        let f = tsv_fields(raw);
        if f.len() != markers.len() + 1 {
            return Err(IoError::RaggedRow {
                file: matrix_file.to_string(),
                row: i + 1,
                expected: markers.len() + 1,
                found: f.len(),
            });
        }
        lines.push(LineId::from(f[0].trim()));
        let calls = f[1..]
            .iter()
            .enumerate()
            .map(|(j, tok)| {
                tok.trim().parse::<AlleleCall>().map_err(|_| IoError::IllegalCall {
                    file: matrix_file.to_string(),
                    row: i + 1,
                    col: j + 2,
                    token: tok.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(calls);
    }
    let matrix = GenotypeMatrix::new(lines, markers, rows)?;

    let mut diags = Vec::new();
    let mut known: BTreeMap<String, (Option<String>, Option<f64>)> = BTreeMap::new();
    if let Some(map) = map {
        let records = csv_records(map, map_file)?;
        let (cols, body) = expect_header(&records, map_file, &["marker"])?;
        for (row, rec) in body {
            let name = field(rec, &cols, "marker");
            let chromosome = Some(field(rec, &cols, "chromosome"))
                .filter(|c| !c.is_empty())
                .map(str::to_string);
            let position = match field(rec, &cols, "position") {
                "" => None,
                p => match p.parse::<f64>() {
                    Ok(v) if v.is_finite() => Some(v),
                    _ => {
                        diags.push(RowDiagnostic {
                            file: map_file.to_string(),
                            row: *row,
                            reason: format!("bad position `{p}`"),
                        });
                        continue;
                    }
                },
            };
            known.insert(name.to_string(), (chromosome, position));
        }
    }
    let marker_map = MarkerMap {
        markers: matrix
            .markers()
            .iter()
            .map(|m| {
                let (chromosome, position) = known.get(m).cloned().unwrap_or_else(|| {
                    diags.push(RowDiagnostic {
                        file: map_file.to_string(),
                        row: 0,
                        reason: format!("marker `{m}` is not in the map; position unknown"),
                    });
                    (None, None)
                });
                MarkerInfo {
                    name: m.clone(),
                    chromosome,
                    position,
                }
            })
            .collect(),
    };
    Ok((matrix, marker_map, diags))
}

pub fn load_genotypes(
    matrix: &Path,
    map: Option<&Path>,
) -> Result<(GenotypeMatrix, MarkerMap, Vec<RowDiagnostic>), IoError> {
    let m = read_file(matrix)?;
    let map_bytes = map.map(read_file).transpose()?;
    parse_genotypes(
        &m,
        map_bytes.as_deref(),
        &label(matrix),
        &map.map(label).unwrap_or_else(|| MARKERS_FILE.into()),
    )
}

pub fn genotypes_bytes(matrix: &GenotypeMatrix) -> Vec<u8> {
    let mut out = String::with_capacity(matrix.line_count() * (matrix.marker_count() * 3 + 8));
    out.push_str("line");
    for m in matrix.markers() {
        out.push('\t');
        out.push_str(m);
    }
    out.push('\n');
    for i in 0..matrix.line_count() {
        out.push_str(matrix.lines()[i].as_str());
        for j in 0..matrix.marker_count() {
            out.push('\t');
            out.push_str(&matrix.call(i, j).to_string());
        }
        out.push('\n');
    }
    out.into_bytes()
}

pub fn marker_map_bytes(map: &MarkerMap) -> Vec<u8> {
    csv_bytes(std::iter::once(strings(&MARKERS_HEADER)).chain(map.markers.iter().map(|m| {
        vec![
            m.name.clone(),
            m.chromosome.clone().unwrap_or_default(),
            m.position.map(|p| p.to_string()).unwrap_or_default(),
        ]
    })))
}

pub fn parse_traits(bytes: &[u8], file: &str) -> Result<Vec<TraitDescriptor>, IoError> {
    let records = csv_records(bytes, file)?;
    let (cols, body) = expect_header(&records, file, &TRAITS_HEADER)?;
    let mut out = Vec::new();
    for (row, rec) in body {
        let kind_text = field(rec, &cols, "kind");
        let kind: TraitKind = kind_text.parse().map_err(|_| IoError::UnknownKind {
            file: file.to_string(),
            row: *row,
            kind: kind_text.to_string(),
        })?;
        let descriptor = TraitDescriptor {
            name: field(rec, &cols, "trait").to_string(),
            kind,
            classes: field(rec, &cols, "classes")
                .split('|')
                .map(|c| c.trim().to_string())
                .collect(),
        };
        descriptor.validate()?;
        out.push(descriptor);
    }
    Ok(out)
}

pub fn traits_bytes(traits: &[TraitDescriptor]) -> Vec<u8> {
    csv_bytes(
        std::iter::once(strings(&TRAITS_HEADER)).chain(
            traits
                .iter()
                .map(|t| vec![t.name.clone(), t.kind.to_string(), t.classes.join("|")]),
        ),
    )
}

/// Phenotype values plus one diagnostic per skipped or superseded row, so
/// `diagnostics + table.len() == rows`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhenotypeFile {
    pub table: PhenotypeTable,
    pub diagnostics: Vec<RowDiagnostic>,
    pub rows: usize,
}

pub fn parse_phenotypes(bytes: &[u8], traits: &[TraitDescriptor], file: &str) -> Result<PhenotypeFile, IoError> {
    let records = csv_records(bytes, file)?;
    let (cols, body) = expect_header(&records, file, &["line", "trait", "value"])?;
    let mut out = PhenotypeFile {
        rows: body.len(),
        ..PhenotypeFile::default()
    };
    let mut first_row: BTreeMap<(String, String, Option<i32>, Option<String>), usize> = BTreeMap::new();
    for (row, rec) in body {
        let diag = |reason: String| RowDiagnostic {
            file: file.to_string(),
            row: *row,
            reason,
        };
        let line = field(rec, &cols, "line");
        let trait_name = field(rec, &cols, "trait");
        let value = field(rec, &cols, "value");
        let Some(descriptor) = traits.iter().find(|t| t.name == trait_name) else {
            out.diagnostics.push(diag(format!("unknown trait `{trait_name}`")));
            continue;
        };
        if line.is_empty() {
            out.diagnostics.push(diag("empty line id".into()));
            continue;
        }
        if descriptor.class_index(value).is_none() {
            out.diagnostics
                .push(diag(format!("value `{value}` is not a class of {trait_name}")));
            continue;
        }
        let year = match field(rec, &cols, "year") {
            "" => None,
            y => match y.parse::<i32>() {
                Ok(y) => Some(y),
                Err(_) => {
                    out.diagnostics.push(diag(format!("bad year `{y}`")));
                    continue;
                }
            },
        };
        let site = Some(field(rec, &cols, "site"))
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        let key = (line.to_string(), trait_name.to_string(), year, site.clone());
        if let Some(prev) = first_row.insert(key, *row) {
            out.diagnostics
                .push(diag(format!("duplicate of row {prev}; the later value wins")));
        }
        out.table.insert(PhenotypeRecord {
            line: LineId::from(line),
            trait_name: trait_name.to_string(),
            value: value.to_string(),
            year,
            site,
        });
    }
    Ok(out)
}

pub fn load_phenotypes(
    traits: &Path,
    values: &Path,
) -> Result<(Vec<TraitDescriptor>, PhenotypeFile), IoError> {
    let t = parse_traits(&read_file(traits)?, &label(traits))?;
    let v = parse_phenotypes(&read_file(values)?, &t, &label(values))?;
    Ok((t, v))
}

pub fn phenotypes_bytes(table: &PhenotypeTable) -> Vec<u8> {
    csv_bytes(std::iter::once(strings(&["line", "trait", "value", "year", "site"])).chain(
        table.records().map(|r| {
            vec![
                r.line.to_string(),
                r.trait_name,
                r.value,
                r.year.map(|y| y.to_string()).unwrap_or_default(),
                r.site.unwrap_or_default(),
            ]
        }),
    ))
}

/// Export list text: one name per row, each newline-terminated.
pub fn export_list_text<S: AsRef<str>>(names: &[S]) -> String {
    names.iter().map(|n| format!("{}\n", n.as_ref())).collect()
}

/// Writes display names of `ids` in input order.
pub fn save_export_list(net: &PedigreeNet, ids: &[LineId], path: &Path) -> Result<(), IoError> {
    let names = ids
        .iter()
        .map(|id| {
            net.line(id)
                .map(|l| l.name.clone())
                .ok_or_else(|| IoError::Pedigree(PedigreeError::UnknownLine(id.clone())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_file(path, export_list_text(&names).as_bytes())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LineSelected,
    PhenotypeSelected,
    SimilarityQuery,
    Search,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEvent {
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    pub kind: EventKind,
    pub payload: serde_json::Value,
}

/// Append-only event log with non-decreasing timestamps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SessionHistory {
    events: Vec<HistoryEvent>,
}

impl SessionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record_event(&mut self, kind: EventKind, payload: serde_json::Value) -> &HistoryEvent {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64);
        self.record_at(now, kind, payload)
    }

    /// Appends at `timestamp_ms`, raised to the last timestamp if earlier.
    pub fn record_at(&mut self, timestamp_ms: u64, kind: EventKind, payload: serde_json::Value) -> &HistoryEvent {
        let floor = self.events.last().map_or(0, |e| e.timestamp_ms);
        self.events.push(HistoryEvent {
            timestamp_ms: timestamp_ms.max(floor),
            kind,
            payload,
        });
        self.events.last().expect("just pushed")
    }

    pub fn replay(&self) -> &[HistoryEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// JSON Lines, one event per line.
    pub fn to_jsonl(&self) -> String {
        self.events
            .iter()
            .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
            .collect()
    }

    pub fn from_jsonl(text: &str) -> Result<Self, IoError> {
        let mut h = SessionHistory::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let e: HistoryEvent = serde_json::from_str(line).map_err(|e| IoError::Malformed {
                file: "history".into(),
                message: format!("line {}: {e}", i + 1),
            })?;
            h.record_at(e.timestamp_ms, e.kind, e.payload);
        }
        Ok(h)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        write_file(path, self.to_jsonl().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let bytes = read_file(path)?;
        Self::from_jsonl(&String::from_utf8_lossy(&bytes))
    }
}

/// Member files and their SHA-256 digests.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    /// Digest over all member names and digests.
    pub fn bundle_digest(&self) -> String {
        let mut h = Sha256::new();
        for (name, digest) in &self.files {
            h.update(name.as_bytes());
            h.update(b" ");
            h.update(digest.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Bundle contents before the net is built, so structural errors can be
/// reported rather than aborting the load.
#[derive(Clone, Debug, Default)]
pub struct RawBundle {
    pub lines: Vec<LineRecord>,
    pub relations: Vec<ParentRelation>,
    pub matrix: Option<GenotypeMatrix>,
    pub marker_map: Option<MarkerMap>,
    pub traits: Vec<TraitDescriptor>,
    pub phenotypes: Option<PhenotypeTable>,
    pub manifest: Manifest,
    pub row_diagnostics: Vec<RowDiagnostic>,
}

#[derive(Clone, Debug)]
pub struct DataBundle {
    pub net: PedigreeNet,
    pub matrix: Option<GenotypeMatrix>,
    pub marker_map: Option<MarkerMap>,
    pub traits: Vec<TraitDescriptor>,
    pub phenotypes: Option<PhenotypeTable>,
    pub manifest: Manifest,
    pub row_diagnostics: Vec<RowDiagnostic>,
    /// Warnings from building the net.
    pub net_diagnostics: Vec<Diagnostic>,
    /// Genotyped or phenotyped ids absent from the net.
    pub orphans: Vec<LineId>,
}

impl PartialEq for DataBundle {
    /// Structural equality of the data; provenance and diagnostics ignored.
    fn eq(&self, other: &Self) -> bool {
        self.net == other.net
            && self.matrix == other.matrix
            && self.marker_map == other.marker_map
            && self.traits == other.traits
            && self.phenotypes == other.phenotypes
    }
}

impl DataBundle {
    pub fn digest(&self) -> String {
        self.manifest.bundle_digest()
    }
}

impl RawBundle {
    /// Builds the net and resolves cross references.
    pub fn assemble(self) -> Result<DataBundle, IoError> {
        let (net, net_diagnostics) = build_net(self.lines, self.relations)?;
        let mut orphans = BTreeSet::new();
        if let Some(m) = &self.matrix {
            orphans.extend(m.lines().iter().filter(|l| !net.contains(l)).cloned());
        }
        if let Some(p) = &self.phenotypes {
            orphans.extend(p.lines().into_iter().filter(|l| !net.contains(l)).cloned());
        }
        Ok(DataBundle {
            net,
            matrix: self.matrix,
            marker_map: self.marker_map,
            traits: self.traits,
            phenotypes: self.phenotypes,
            manifest: self.manifest,
            row_diagnostics: self.row_diagnostics,
            net_diagnostics,
            orphans: orphans.into_iter().collect(),
        })
    }
}

/// Storage boundary for bundles.
pub trait BundleStore {
    fn load_raw(&self) -> Result<RawBundle, IoError>;

    fn load(&self) -> Result<DataBundle, IoError> {
        self.load_raw()?.assemble()
    }

    fn save(&self, bundle: &DataBundle) -> Result<Manifest, IoError>;
}

/// A bundle kept as a directory of files.
#[derive(Clone, Debug)]
pub struct DirectoryStore {
    pub root: PathBuf,
}

impl DirectoryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        DirectoryStore { root: root.into() }
    }

    fn optional(&self, name: &str, manifest: &mut Manifest) -> Result<Option<Vec<u8>>, IoError> {
        let path = self.root.join(name);
        if !path.exists() {
            return Ok(None);
        }
        let bytes = read_file(&path)?;
        manifest.files.insert(name.to_string(), sha256_hex(&bytes));
        Ok(Some(bytes))
    }

    /// Writes member files and a manifest covering them plus `extra` files
    /// already written to the directory.
    fn write_members(&self, members: Vec<(&str, Vec<u8>)>, extra: &[&str]) -> Result<Manifest, IoError> {
        fs::create_dir_all(&self.root).map_err(|source| IoError::FileUnwritable {
            path: self.root.display().to_string(),
            source,
        })?;
        let mut manifest = Manifest::default();
        for (name, bytes) in members {
            write_file(&self.root.join(name), &bytes)?;
            manifest.files.insert(name.to_string(), sha256_hex(&bytes));
        }
        for name in extra {
            let bytes = read_file(&self.root.join(name))?;
            manifest.files.insert(name.to_string(), sha256_hex(&bytes));
        }
        let json = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
        write_file(&self.root.join(MANIFEST_FILE), json.as_bytes())?;
        Ok(manifest)
    }
}

fn bundle_members(bundle: &DataBundle) -> Vec<(&'static str, Vec<u8>)> {
    let mut members = vec![
        (PEDIGREE_FILE, pedigree_bytes(bundle.net.relations())),
        (LINES_FILE, lines_bytes(bundle.net.lines())),
    ];
    if let Some(m) = &bundle.matrix {
        members.push((GENOTYPES_FILE, genotypes_bytes(m)));
        if let Some(map) = &bundle.marker_map {
            members.push((MARKERS_FILE, marker_map_bytes(map)));
        }
    }
    if !bundle.traits.is_empty() {
        members.push((TRAITS_FILE, traits_bytes(&bundle.traits)));
        members.push((
            PHENOTYPES_FILE,
            phenotypes_bytes(bundle.phenotypes.as_ref().unwrap_or(&PhenotypeTable::new())),
        ));
    }
    members
}

impl BundleStore for DirectoryStore {
    fn load_raw(&self) -> Result<RawBundle, IoError> {
        let mut manifest = Manifest::default();
        let mut raw = RawBundle::default();

        let ped_path = self.root.join(PEDIGREE_FILE);
        let ped_bytes = read_file(&ped_path)?;
        manifest.files.insert(PEDIGREE_FILE.into(), sha256_hex(&ped_bytes));
        let ped = parse_pedigree(&ped_bytes, PEDIGREE_FILE)?;
        raw.row_diagnostics.extend(ped.diagnostics);
        raw.relations = ped.relations;

        if let Some(bytes) = self.optional(LINES_FILE, &mut manifest)? {
            let (records, diags) = parse_lines(&bytes, LINES_FILE)?;
            raw.row_diagnostics.extend(diags);
            let mut all = records;
            // Duplicate ids go to the net builder, which reports them.
            for l in ped.lines {
                if !all.iter().any(|r| r.id == l.id) {
                    all.push(l);
                }
            }
            raw.lines = all;
        } else {
            raw.lines = ped.lines;
        }

        if let Some(bytes) = self.optional(GENOTYPES_FILE, &mut manifest)? {
            let map = self.optional(MARKERS_FILE, &mut manifest)?;
            let (matrix, map, diags) = parse_genotypes(&bytes, map.as_deref(), GENOTYPES_FILE, MARKERS_FILE)?;
            raw.row_diagnostics.extend(diags);
            raw.matrix = Some(matrix);
            raw.marker_map = Some(map);
        }

        if let Some(bytes) = self.optional(TRAITS_FILE, &mut manifest)? {
            raw.traits = parse_traits(&bytes, TRAITS_FILE)?;
            if let Some(values) = self.optional(PHENOTYPES_FILE, &mut manifest)? {
                let p = parse_phenotypes(&values, &raw.traits, PHENOTYPES_FILE)?;
                raw.row_diagnostics.extend(p.diagnostics);
                raw.phenotypes = Some(p.table);
            } else {
                raw.phenotypes = Some(PhenotypeTable::new());
            }
        }

        self.optional(TRUTH_FILE, &mut manifest)?;
        let manifest_path = self.root.join(MANIFEST_FILE);
        if manifest_path.exists() {
            let recorded: Manifest = serde_json::from_slice(&read_file(&manifest_path)?).map_err(|e| {
                IoError::Malformed {
                    file: MANIFEST_FILE.into(),
                    message: e.to_string(),
                }
            })?;
            for (name, digest) in &manifest.files {
                if recorded.files.get(name).is_some_and(|d| d != digest) {
                    return Err(IoError::DigestMismatch { file: name.clone() });
                }
            }
        }
        raw.manifest = manifest;
        Ok(raw)
    }

    fn save(&self, bundle: &DataBundle) -> Result<Manifest, IoError> {
        self.write_members(bundle_members(bundle), &[])
    }
}

pub fn load_bundle(dir: &Path) -> Result<DataBundle, IoError> {
    DirectoryStore::new(dir).load()
}

pub fn save_bundle(bundle: &DataBundle, dir: &Path) -> Result<Manifest, IoError> {
    DirectoryStore::new(dir).save(bundle)
}

/// Writes a synthetic dataset as a bundle plus a `truth.csv` of planted
/// errors.
pub fn write_synth_bundle(data: &SynthData, dir: &Path) -> Result<Manifest, IoError> {
    let (net, net_diagnostics) = build_net(data.lines.clone(), data.relations.clone())?;
    let bundle = DataBundle {
        net,
        matrix: Some(data.matrix.clone()),
        marker_map: Some(data.marker_map.clone()),
        traits: data.traits.clone(),
        phenotypes: Some(data.phenotypes.clone()),
        manifest: Manifest::default(),
        row_diagnostics: Vec::new(),
        net_diagnostics,
        orphans: Vec::new(),
    };
    let store = DirectoryStore::new(dir);
    let mut members = bundle_members(&bundle);
    members.push((
        TRUTH_FILE,
        csv_bytes(
            std::iter::once(strings(&["line", "locus", "marker", "true_call", "observed"])).chain(
                data.planted.iter().map(|p| {
                    vec![
                        p.line.to_string(),
                        p.locus.to_string(),
                        p.marker.clone(),
                        p.true_call.to_string(),
                        p.observed.to_string(),
                    ]
                }),
            ),
        ),
    ));
    store.write_members(members, &[])
}

/// Reads `truth.csv` as `(line, locus)` pairs.
pub fn load_truth(dir: &Path) -> Result<Vec<(LineId, usize)>, IoError> {
    let bytes = read_file(&dir.join(TRUTH_FILE))?;
    let records = csv_records(&bytes, TRUTH_FILE)?;
    let (cols, body) = expect_header(&records, TRUTH_FILE, &["line", "locus"])?;
    body.iter()
        .map(|(row, rec)| {
            let locus = field(rec, &cols, "locus").parse().map_err(|_| IoError::Malformed {
                file: TRUTH_FILE.into(),
                message: format!("row {row}: bad locus"),
            })?;
            Ok((LineId::from(field(rec, &cols, "line")), locus))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn pedigree_rows() {
        let text = "child,parent,role,cross_type\nB,A,S,self\nC,A,F,cross\r\nC,B,M,cross\nD,A,X,cross\nC,A,F,cross\n";
        let p = parse_pedigree(text.as_bytes(), "p.csv").unwrap();
        assert_eq!(p.relations.len(), 3);
        assert_eq!(p.relations[0], ParentRelation::selfed("B", "A"));
        assert_eq!(p.diagnostics.len(), 2);
        assert_eq!(p.diagnostics[0].row, 5);
        assert!(p.diagnostics[0].reason.contains("unknown role"));
        assert_eq!(p.diagnostics.len() + p.relations.len(), p.rows);
        // D came only from a bad row.
        assert_eq!(p.lines.len(), 3);
        assert!(matches!(
            parse_pedigree(b"a,b\n", "p.csv"),
            Err(IoError::MissingHeader { .. })
        ));
    }

    #[test]
    fn genotype_parsing() {
        let tsv = "line\tm1\tm2\tm3\nL1\tGA\t-\tNN\r\nL2\tAA\tCC\tTT\n";
        let map = "marker,chromosome,position\nm1,1H,0.5\nm2,1H,\n";
        let (m, map, diags) = parse_genotypes(tsv.as_bytes(), Some(map.as_bytes()), "g", "m").unwrap();
        assert_eq!((m.line_count(), m.marker_count()), (2, 3));
        assert_eq!(m.call(0, 0).to_string(), "AG");
        assert!(m.call(0, 1).is_missing() && m.call(0, 2).is_missing());
        assert_eq!(map.markers[0].position, Some(0.5));
        assert_eq!(map.markers[2].chromosome, None);
        assert_eq!(diags.len(), 1);

        let ragged = "line\tm1\tm2\nL1\tAA\n";
        assert!(matches!(
            parse_genotypes(ragged.as_bytes(), None, "g", "m"),
            Err(IoError::RaggedRow { row: 2, .. })
        ));
        let illegal = "line\tm1\tm2\nL1\tAA\tAX\n";
        assert!(matches!(
            parse_genotypes(illegal.as_bytes(), None, "g", "m"),
            Err(IoError::IllegalCall { row: 2, col: 3, .. })
        ));
    }

    #[test]
    fn phenotype_parsing() {
        let traits = parse_traits(b"trait,kind,classes\nAnthocyaninColour,ordinal,absent|weak|medium|strong\n", "t").unwrap();
        assert_eq!(traits[0].classes.len(), 4);
        assert!(matches!(
            parse_traits(b"trait,kind,classes\nX,fuzzy,a|b\n", "t"),
            Err(IoError::UnknownKind { .. })
        ));
        let values = "line,trait,value,year,site\nL1,AnthocyaninColour,purple,,\nL1,AnthocyaninColour,weak,2010,\nL1,AnthocyaninColour,strong,2010,\n";
        let p = parse_phenotypes(values.as_bytes(), &traits, "v").unwrap();
        assert_eq!(p.diagnostics.len(), 2);
        assert_eq!(p.table.len(), 1);
        assert_eq!(p.table.records().next().unwrap().value, "strong");
        assert_eq!(p.diagnostics.len() + p.table.len(), p.rows);
    }

    #[test]
    fn export_text() {
        assert_eq!(export_list_text(&["X", "Y"]), "X\nY\n");
        assert_eq!(export_list_text::<&str>(&[]), "");
        assert_eq!(export_list_text(&["Maris Otter"]), "Maris Otter\n");
    }

    #[test]
    fn history_round_trip() {
        let mut h = SessionHistory::new();
        h.record_at(10, EventKind::Search, serde_json::json!({"q": "Mar*"}));
        h.record_at(5, EventKind::LineSelected, serde_json::json!({"id": "A"}));
        h.record_event(EventKind::SimilarityQuery, serde_json::json!({"base": "A"}));
        assert_eq!(h.replay()[1].timestamp_ms, 10);
        assert_eq!(h.replay()[2].kind, EventKind::SimilarityQuery);
        let back = SessionHistory::from_jsonl(&h.to_jsonl()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn synth_bundle_round_trip_and_digest() {
        let data = generate(&SynthConfig {
            lines: 40,
            markers: 50,
            seed: 4,
            error_rate: 0.02,
            ..SynthConfig::default()
        });
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = write_synth_bundle(&data, a.path()).unwrap();
        let mb = write_synth_bundle(&data, b.path()).unwrap();
        assert_eq!(ma.bundle_digest(), mb.bundle_digest());
        let bundle = load_bundle(a.path()).unwrap();
        assert_eq!(bundle.digest(), ma.bundle_digest());
        assert_eq!(bundle.net.len(), 40);
        assert!(bundle.row_diagnostics.is_empty());
        assert_eq!(load_truth(a.path()).unwrap().len(), data.planted.len());

        let c = tempfile::tempdir().unwrap();
        save_bundle(&bundle, c.path()).unwrap();
        assert_eq!(load_bundle(c.path()).unwrap(), bundle);

        fs::write(a.path().join(PEDIGREE_FILE), "child,parent,role,cross_type\n").unwrap();
        assert!(matches!(load_bundle(a.path()), Err(IoError::DigestMismatch { .. })));
    }
}
