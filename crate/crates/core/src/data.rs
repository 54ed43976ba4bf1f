//! Group records, quality scores and dataset ingestion.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FIXTURE_CSV: &str = include_str!("../data/stats_or_rae2008.csv");

/// One submission: a research group with its staff headcount `N` (FTE) and
/// quality score `s` on the 0..=100 funding-formula scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub index: usize,
    pub name: String,
    pub headcount: f64,
    pub quality: f64,
}

impl GroupRecord {
    pub fn new(index: usize, name: impl Into<String>, headcount: f64, quality: f64) -> Result<Self> {
        let name = name.into();
        if index == 0 {
            return Err(Error::Validation(format!("record '{name}': index must be positive")));
        }
        if !(headcount.is_finite() && headcount > 0.0) {
            return Err(Error::Validation(format!(
                "record '{name}': headcount must be positive, got {headcount}"
            )));
        }
        if !(quality.is_finite() && (0.0..=100.0).contains(&quality)) {
            return Err(Error::Validation(format!(
                "record '{name}': quality must lie in [0, 100], got {quality}"
            )));
        }
        Ok(Self { index, name, headcount, quality })
    }
}

/// Shares (percent) of output rated 4*, 3*, 2*, 1* and unclassified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub p4: f64,
    pub p3: f64,
    pub p2: f64,
    pub p1: f64,
    pub pu: f64,
}

impl QualityProfile {
    pub fn new(p4: f64, p3: f64, p2: f64, p1: f64, pu: f64) -> Result<Self> {
        let shares = [p4, p3, p2, p1, pu];
        if shares.iter().any(|p| !(p.is_finite() && (0.0..=100.0).contains(p))) {
            return Err(Error::Validation(format!(
                "profile shares must each lie in [0, 100], got {shares:?}"
            )));
        }
        let total: f64 = shares.iter().sum();
        if (total - 100.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "profile shares must sum to 100, got {total}"
            )));
        }
        Ok(Self { p4, p3, p2, p1, pu })
    }
}

/// Funding weights per star band. Only the ratios matter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightScheme {
    pub w4: f64,
    pub w3: f64,
    pub w2: f64,
    pub w1: f64,
    pub wu: f64,
}

impl WeightScheme {
    /// 4*:3*:2* = 7:3:1, nothing for 1* and unclassified.
    pub const HEFCE_2009: WeightScheme = WeightScheme { w4: 7.0, w3: 3.0, w2: 1.0, w1: 0.0, wu: 0.0 };
    /// 4*:3*:2* = 9:3:1.
    pub const HEFCE_2010: WeightScheme = WeightScheme { w4: 9.0, w3: 3.0, w2: 1.0, w1: 0.0, wu: 0.0 };

    pub fn new(w4: f64, w3: f64, w2: f64, w1: f64, wu: f64) -> Result<Self> {
        let scheme = Self { w4, w3, w2, w1, wu };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        let w = [self.w4, self.w3, self.w2, self.w1, self.wu];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Validation(format!("weights must be nonnegative, got {w:?}")));
        }
        if !(self.w4 > 0.0) || w.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::Validation(format!(
                "weights must be non-increasing from 4* down with w4 > 0, got {w:?}"
            )));
        }
        Ok(())
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "2009" => Ok(Self::HEFCE_2009),
            "2010" => Ok(Self::HEFCE_2010),
            other => Err(Error::Usage(format!("unknown weight scheme '{other}', expected 2009 or 2010"))),
        }
    }
}

/// Funding-formula quality score normalised so an all-4* profile scores 100.
pub fn quality_from_profile(profile: &QualityProfile, scheme: &WeightScheme) -> f64 {
    let weighted = scheme.w4 * profile.p4
        + scheme.w3 * profile.p3
        + scheme.w2 * profile.p2
        + scheme.w1 * profile.p1
        + scheme.wu * profile.pu;
    weighted / scheme.w4
}

/// Picks a record by 1-based index (`#9`) or by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector {
    Index(usize),
    Name(String),
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('#') {
            let index = rest
                .parse::<usize>()
                .map_err(|_| Error::Usage(format!("bad record index '{s}'")))?;
            return Ok(Selector::Index(index));
        }
        if s.is_empty() {
            return Err(Error::Usage("empty record selector".into()));
        }
        Ok(Selector::Name(s.to_string()))
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Index(i) => write!(f, "#{i}"),
            Selector::Name(n) => f.write_str(n),
        }
    }
}

/// Ordered group records plus a set of excluded indices.
///
/// Exclusion only flags a record: it stays in `records` so plots can still
/// show it, but every fit and test works on the active records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<GroupRecord>,
    excluded: BTreeSet<usize>,
}

impl Dataset {
    pub fn new(records: Vec<GroupRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Validation("no records".into()));
        }
        let mut seen = BTreeSet::new();
        for r in &records {
            if !seen.insert(r.index) {
                return Err(Error::Validation(format!("duplicate record index {}", r.index)));
            }
        }
        Ok(Self { records, excluded: BTreeSet::new() })
    }

    /// Builds a dataset from `(headcount, quality)` pairs with generated names.
    pub fn from_pairs(headcounts: &[f64], qualities: &[f64]) -> Result<Self> {
        if headcounts.len() != qualities.len() {
            return Err(Error::Validation(format!(
                "length mismatch: {} headcounts, {} qualities",
                headcounts.len(),
                qualities.len()
            )));
        }
        let records = headcounts
            .iter()
            .zip(qualities)
            .enumerate()
            .map(|(i, (&n, &s))| GroupRecord::new(i + 1, format!("group-{:03}", i + 1), n, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(records)
    }

    /// The 30 Statistics & Operational Research submissions to RAE 2008.
    pub fn fixture() -> Self {
        Self::parse_str(FIXTURE_CSV, &WeightScheme::HEFCE_2009).expect("embedded fixture parses")
    }

    pub fn fixture_csv() -> &'static str {
        FIXTURE_CSV
    }

    pub fn load(path: impl AsRef<Path>, scheme: &WeightScheme) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, scheme)
    }

    pub fn from_reader<R: Read>(mut reader: R, scheme: &WeightScheme) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::parse_str(&text, scheme)
    }

    /// Parses comma- or tab-delimited rows of `name,N,s` or
    /// `name,N,p4,p3,p2,p1,pu`. A header row is detected when the headcount
    /// column of the first row is not numeric.
    pub fn parse_str(text: &str, scheme: &WeightScheme) -> Result<Self> {
        scheme.validate()?;
        let first_line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
        let delimiter = if first_line.contains('\t') { b'\t' } else { b',' };
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut records = Vec::new();
        for (row, result) in reader.records().enumerate() {
            let rec = result.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(row as u64 + 1);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            if row == 0 && rec.get(1).map_or(false, |f| f.parse::<f64>().is_err()) {
                continue;
            }
            let number = |col: usize| -> Result<f64> {
                let field = rec.get(col).unwrap_or("");
                field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {} is not a number: '{field}'", col + 1),
                })
            };
            let name = rec.get(0).unwrap_or("").to_string();
            let headcount = number(1)?;
            let quality = match rec.len() {
                3 => number(2)?,
                7 => {
                    let profile = QualityProfile::new(number(2)?, number(3)?, number(4)?, number(5)?, number(6)?)
                        .map_err(|e| Error::Parse { line, message: e.to_string() })?;
                    quality_from_profile(&profile, scheme)
                }
                n => {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected 3 or 7 columns, found {n}"),
                    })
                }
            };
            if !(headcount > 0.0) {
                return Err(Error::Validation(format!(
                    "line {line}: headcount must be positive, got {headcount}"
                )));
            }
            let record = GroupRecord::new(records.len() + 1, name, headcount, quality)
                .map_err(|e| match e {
                    Error::Validation(m) => Error::Validation(format!("line {line}: {m}")),
                    other => other,
                })?;
            records.push(record);
        }
        Self::new(records)
    }

    /// Serializes the records as `name,N,s` with a header row.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["name", "N", "s"]).expect("in-memory write");
        for r in &self.records {
            writer
                .write_record([r.name.clone(), r.headcount.to_string(), r.quality.to_string()])
                .expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn records(&self) -> &[GroupRecord] {
        &self.records
    }

    pub fn excluded(&self) -> &BTreeSet<usize> {
        &self.excluded
    }

    pub fn is_excluded(&self, index: usize) -> bool {
        self.excluded.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = &GroupRecord> + '_ {
        self.records.iter().filter(|r| !self.excluded.contains(&r.index))
    }

    pub fn active_len(&self) -> usize {
        self.records.len() - self.excluded.len()
    }

    pub fn active_indices(&self) -> Vec<usize> {
        self.active().map(|r| r.index).collect()
    }

    pub fn active_headcounts(&self) -> Vec<f64> {
        self.active().map(|r| r.headcount).collect()
    }

    pub fn active_qualities(&self) -> Vec<f64> {
        self.active().map(|r| r.quality).collect()
    }

    pub fn get(&self, index: usize) -> Option<&GroupRecord> {
        self.records.iter().find(|r| r.index == index)
    }

    /// Resolves a selector to exactly one record index. Names match exactly
    /// (case-insensitive) first, then as a unique case-insensitive substring.
    pub fn resolve(&self, selector: &Selector) -> Result<usize> {
        match selector {
            Selector::Index(i) => self
                .get(*i)
                .map(|r| r.index)
                .ok_or_else(|| Error::Lookup(format!("no record with index {i}"))),
            Selector::Name(name) => {
                let needle = name.to_lowercase();
                let exact: Vec<_> = self
                    .records
                    .iter()
                    .filter(|r| r.name.to_lowercase() == needle)
                    .collect();
                let hits = if exact.is_empty() {
                    self.records
                        .iter()
                        .filter(|r| r.name.to_lowercase().contains(&needle))
                        .collect()
                } else {
                    exact
                };
                match hits.as_slice() {
                    [one] => Ok(one.index),
                    [] => Err(Error::Lookup(format!("no record matches '{name}'"))),
                    many => Err(Error::Lookup(format!(
                        "'{name}' is ambiguous: matches {}",
                        many.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join(", ")
                    ))),
                }
            }
        }
    }

    /// Returns a copy with the selected record flagged as excluded.
    pub fn exclude(&self, selector: &Selector) -> Result<Dataset> {
        let index = self.resolve(selector)?;
        let mut out = self.clone();
        out.excluded.insert(index);
        Ok(out)
    }

    pub fn mean_headcount(&self) -> f64 {
        self.records.iter().map(|r| r.headcount).sum::<f64>() / self.records.len() as f64
    }

    pub fn mean_quality(&self) -> f64 {
        self.records.iter().map(|r| r.quality).sum::<f64>() / self.records.len() as f64
    }
}
