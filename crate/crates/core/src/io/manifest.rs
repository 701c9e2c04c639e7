//! CSV dataset manifests: `id,path,label,speaker,split`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["id", "path", "label", "speaker", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "train" => Some(Split::Train),
            "valid" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    /// As written in the file; see [`DatasetManifest::resolve`].
    pub path: PathBuf,
    pub label: u8,
    pub speaker: String,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    pub records: Vec<Record>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(records: Vec<Record>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &records {
            if r.label > 1 {
                return Err(Error::invalid(format!("record {} has label {}", r.id, r.label)));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate id '{}'", r.id)));
            }
        }
        Ok(Self {
            records,
            base_dir: base_dir.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn resolve(&self, record: &Record) -> PathBuf {
        if record.path.is_absolute() {
            record.path.clone()
        } else {
            self.base_dir.join(&record.path)
        }
    }

    pub fn speakers(&self) -> BTreeSet<&str> {
        self.records.iter().map(|r| r.speaker.as_str()).collect()
    }

    /// Speakers that occur in more than one split, with their splits.
    pub fn speaker_overlaps(&self) -> Vec<(String, Vec<Split>)> {
        let mut by_speaker: BTreeMap<&str, BTreeSet<Split>> = BTreeMap::new();
        for r in &self.records {
            by_speaker.entry(&r.speaker).or_default().insert(r.split);
        }
        by_speaker
            .into_iter()
            .filter(|(_, s)| s.len() > 1)
            .map(|(k, s)| (k.to_string(), s.into_iter().collect()))
            .collect()
    }

    /// With `strict`, a speaker shared between splits is an error; otherwise
    /// the overlaps are returned as warnings.
    pub fn check_speaker_independence(&self, strict: bool) -> Result<Vec<String>> {
        let warnings: Vec<String> = self
            .speaker_overlaps()
            .into_iter()
            .map(|(spk, splits)| {
                let names: Vec<&str> = splits.iter().map(|s| s.as_str()).collect();
                format!("speaker '{spk}' appears in splits {}", names.join(", "))
            })
            .collect();
        match (strict, warnings.first()) {
            (true, Some(w)) => Err(Error::format(w.clone())),
            _ => Ok(warnings),
        }
    }

    pub fn require_splits(&self, splits: &[Split]) -> Result<()> {
        for &s in splits {
            if self.split(s).next().is_none() {
                return Err(Error::invalid(format!("manifest has no '{s}' records")));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER).expect("in-memory write");
        for r in &self.records {
            let path = r.path.to_string_lossy();
            let label = r.label.to_string();
            w.write_record([r.id.as_str(), &path, &label, &r.speaker, r.split.as_str()])
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Parse manifest text. Errors carry 1-based line numbers.
pub fn parse_manifest_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::format(format!("line 1: {e}")))?
        .clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::format(format!(
            "line 1: header must be '{}', found '{}'",
            MANIFEST_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut records = Vec::new();
    let mut seen: BTreeMap<String, u64> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::format(format!("line {line}: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let field = |i: usize| row.get(i).unwrap_or("");
        let id = field(0).to_string();
        if id.is_empty() {
            return Err(Error::format(format!("line {line}: empty id")));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(Error::format(format!(
                "line {line}: duplicate id '{id}' (first on line {first})"
            )));
        }
        let label = match field(2) {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::format(format!("line {line}: label '{other}' is not 0 or 1"))),
        };
        let split = Split::parse(field(4)).ok_or_else(|| {
            Error::format(format!(
                "line {line}: unknown split '{}' (expected train, valid or test)",
                field(4)
            ))
        })?;
        if field(1).is_empty() || field(3).is_empty() {
            return Err(Error::format(format!("line {line}: empty path or speaker")));
        }
        records.push(Record {
            id,
            path: PathBuf::from(field(1)),
            label,
            speaker: field(3).to_string(),
            split,
        });
    }
    DatasetManifest::new(records, base_dir)
}

/// Read and validate a manifest file. Relative paths resolve against the
/// manifest's own directory. With `strict_speakers` a speaker present in two
/// splits is an error.
pub fn parse_manifest(path: impl AsRef<Path>, strict_speakers: bool) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let m = parse_manifest_str(&text, base).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    m.check_speaker_independence(strict_speakers)?;
    Ok(m)
}
