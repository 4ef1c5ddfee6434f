//! Benchmark items, the line-delimited benchmark file format, and corpus
//! statistics.
//!
//! Each line of a benchmark file is one JSON object with a `kind` field:
//! `"paired"`, `"continuation"`, or `"metadata"`. Unknown fields on item
//! records are kept in `extra` and written back unchanged.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: duplicate metadata key {key:?}")]
    DuplicateMetadata { line: usize, key: String },
    #[error("item {id:?}: {message}")]
    Invalid { id: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Literary,
    Factual,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Domain::Literary => "literary",
            Domain::Factual => "factual",
        })
    }
}

/// Subtag of a factual continuation passage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactualSubdomain {
    News,
    Popsci,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Intent,
    Audience,
    Reality,
}

/// Two candidate options for the same decision point under one context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedItem {
    pub id: String,
    pub domain: Domain,
    pub context: String,
    pub option_good: String,
    pub option_bad: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension_tags: Option<BTreeSet<Dimension>>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// A preceding context and the passage that actually followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationItem {
    pub id: String,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdomain: Option<FactualSubdomain>,
    pub context: String,
    pub ground_truth: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publication_date: Option<NaiveDate>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

/// Reporting bucket for continuation items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationDomain {
    Literary,
    News,
    Popsci,
    /// Factual passage without a subtag.
    Factual,
    /// All factual passages together.
    FactualCombined,
}

impl ContinuationDomain {
    pub fn label(self) -> &'static str {
        match self {
            ContinuationDomain::Literary => "Literary continuation",
            ContinuationDomain::News => "News (factual control)",
            ContinuationDomain::Popsci => "Popular science (factual control)",
            ContinuationDomain::Factual => "Factual (untagged)",
            ContinuationDomain::FactualCombined => "Factual combined",
        }
    }

    pub fn is_factual(self) -> bool {
        !matches!(self, ContinuationDomain::Literary)
    }
}

impl ContinuationItem {
    pub fn bucket(&self) -> ContinuationDomain {
        match (self.domain, self.subdomain) {
            (Domain::Literary, _) => ContinuationDomain::Literary,
            (Domain::Factual, Some(FactualSubdomain::News)) => ContinuationDomain::News,
            (Domain::Factual, Some(FactualSubdomain::Popsci)) => ContinuationDomain::Popsci,
            (Domain::Factual, None) => ContinuationDomain::Factual,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSet {
    pub paired: Vec<PairedItem>,
    pub continuations: Vec<ContinuationItem>,
    pub metadata: BTreeMap<String, Value>,
}

impl BenchmarkSet {
    pub fn is_empty(&self) -> bool {
        self.paired.is_empty() && self.continuations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.paired.len() + self.continuations.len()
    }

    /// Checks per-item invariants and id uniqueness across both lists.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for item in &self.paired {
            item.validate()?;
            if !seen.insert(item.id.as_str()) {
                return Err(DatasetError::DuplicateId {
                    line: 0,
                    id: item.id.clone(),
                });
            }
        }
        for item in &self.continuations {
            item.validate()?;
            if !seen.insert(item.id.as_str()) {
                return Err(DatasetError::DuplicateId {
                    line: 0,
                    id: item.id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Same items sorted by id; used to compare sets independent of line order.
    pub fn canonical(&self) -> Self {
        let mut out = self.clone();
        out.paired.sort_by(|a, b| a.id.cmp(&b.id));
        out.continuations.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }
}

impl PairedItem {
    fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |message: &str| DatasetError::Invalid {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.is_empty() {
            return Err(invalid("id must be nonempty"));
        }
        if self.option_good.is_empty() || self.option_bad.is_empty() {
            return Err(invalid("options must be nonempty"));
        }
        if self.option_good == self.option_bad {
            return Err(invalid("option_good and option_bad are identical"));
        }
        Ok(())
    }
}

impl ContinuationItem {
    fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |message: &str| DatasetError::Invalid {
            id: self.id.clone(),
            message: message.to_string(),
        };
        if self.id.is_empty() {
            return Err(invalid("id must be nonempty"));
        }
        if self.ground_truth.is_empty() {
            return Err(invalid("ground_truth must be nonempty"));
        }
        if self.domain == Domain::Literary && self.subdomain.is_some() {
            return Err(invalid("subdomain is only valid for factual items"));
        }
        Ok(())
    }
}

/// Loads and validates a benchmark file, logging any warnings.
pub fn load_benchmark(path: &Path) -> Result<BenchmarkSet, DatasetError> {
    let (set, warnings) = load_benchmark_with_warnings(path)?;
    for w in warnings {
        tracing::warn!("{}: {w}", path.display());
    }
    Ok(set)
}

pub fn load_benchmark_with_warnings(
    path: &Path,
) -> Result<(BenchmarkSet, Vec<String>), DatasetError> {
    let file = std::fs::File::open(path)?;
    read_benchmark(std::io::BufReader::new(file))
}

/// Parses benchmark records from any reader. Blank lines are ignored.
pub fn read_benchmark<R: BufRead>(reader: R) -> Result<(BenchmarkSet, Vec<String>), DatasetError> {
    let mut set = BenchmarkSet::default();
    let mut warnings = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| DatasetError::Malformed {
            line: line_no,
            message,
        };
        let mut record: Map<String, Value> = serde_json::from_str(&line)
            .map_err(|e| malformed(format!("invalid record: {e}")))?;
        let kind = match record.remove("kind") {
            Some(Value::String(k)) => k,
            Some(other) => return Err(malformed(format!("field `kind`: expected string, got {other}"))),
            None => return Err(malformed("missing field `kind`".into())),
        };

        let id = match kind.as_str() {
            "paired" => {
                let item: PairedItem = serde_json::from_value(Value::Object(record))
                    .map_err(|e| malformed(format!("paired record: {e}")))?;
                item.validate().map_err(|e| malformed(e.to_string()))?;
                let id = item.id.clone();
                set.paired.push(item);
                id
            }
            "continuation" => {
                let item: ContinuationItem = serde_json::from_value(Value::Object(record))
                    .map_err(|e| malformed(format!("continuation record: {e}")))?;
                item.validate().map_err(|e| malformed(e.to_string()))?;
                let id = item.id.clone();
                set.continuations.push(item);
                id
            }
            "metadata" => {
                for (key, value) in record {
                    if set.metadata.contains_key(&key) {
                        return Err(DatasetError::DuplicateMetadata { line: line_no, key });
                    }
                    set.metadata.insert(key, value);
                }
                continue;
            }
            other => return Err(malformed(format!("field `kind`: unknown value {other:?}"))),
        };
        if !seen.insert(id.clone()) {
            return Err(DatasetError::DuplicateId { line: line_no, id });
        }
    }

    if set.is_empty() {
        warnings.push("benchmark contains no items".to_string());
    }
    Ok((set, warnings))
}

/// Writes the set in the same line-delimited format `read_benchmark` parses.
pub fn write_benchmark<W: Write>(set: &BenchmarkSet, mut out: W) -> Result<(), DatasetError> {
    let tagged = |kind: &str, value: Value| -> Value {
        let mut map = Map::new();
        map.insert("kind".into(), Value::String(kind.into()));
        if let Value::Object(fields) = value {
            map.extend(fields);
        }
        Value::Object(map)
    };
    if !set.metadata.is_empty() {
        let meta = Value::Object(set.metadata.clone().into_iter().collect());
        writeln!(out, "{}", tagged("metadata", meta))?;
    }
    for item in &set.paired {
        let v = serde_json::to_value(item).expect("item serializes");
        writeln!(out, "{}", tagged("paired", v))?;
    }
    for item in &set.continuations {
        let v = serde_json::to_value(item).expect("item serializes");
        writeln!(out, "{}", tagged("continuation", v))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowStatus {
    Pass,
    PreCutoff,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub id: String,
    pub publication_date: Option<NaiveDate>,
    pub status: WindowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeWindowReport {
    pub cutoff: NaiveDate,
    pub entries: Vec<WindowEntry>,
}

impl TimeWindowReport {
    pub fn flagged(&self) -> impl Iterator<Item = &WindowEntry> {
        self.entries.iter().filter(|e| e.status != WindowStatus::Pass)
    }
}

/// Flags items published on or before `cutoff`, and items without a date.
pub fn time_window_check(set: &BenchmarkSet, cutoff: NaiveDate) -> TimeWindowReport {
    let status = |date: Option<NaiveDate>| match date {
        None => WindowStatus::Unknown,
        Some(d) if d <= cutoff => WindowStatus::PreCutoff,
        Some(_) => WindowStatus::Pass,
    };
    let paired = set.paired.iter().map(|i| (&i.id, i.publication_date));
    let cont = set.continuations.iter().map(|i| (&i.id, i.publication_date));
    let entries = paired
        .chain(cont)
        .map(|(id, date)| WindowEntry {
            id: id.clone(),
            publication_date: date,
            status: status(date),
        })
        .collect();
    TimeWindowReport { cutoff, entries }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCoverage {
    pub three: usize,
    pub two: usize,
    pub one: usize,
    pub untagged: usize,
}

impl DimensionCoverage {
    pub fn total(&self) -> usize {
        self.three + self.two + self.one + self.untagged
    }
}

/// How many paired items carry all three, two, one, or no dimension tags.
pub fn dimension_coverage_summary(set: &BenchmarkSet) -> DimensionCoverage {
    let mut cov = DimensionCoverage::default();
    for item in &set.paired {
        match item.dimension_tags.as_ref().map_or(0, BTreeSet::len) {
            0 => cov.untagged += 1,
            1 => cov.one += 1,
            2 => cov.two += 1,
            _ => cov.three += 1,
        }
    }
    cov
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<(BenchmarkSet, Vec<String>), DatasetError> {
        read_benchmark(text.as_bytes())
    }

    const GOOD: &str = r#"{"kind":"paired","id":"L-01","domain":"literary","context":"c","option_good":"a","option_bad":"b"}
{"kind":"paired","id":"F-01","domain":"factual","context":"c","option_good":"x","option_bad":"y","dimension_tags":["intent"]}
{"kind":"continuation","id":"C-01","domain":"factual","subdomain":"news","context":"c","ground_truth":"g","publication_date":"2024-09-01"}
"#;

    #[test]
    fn loads_sizes() {
        let (set, warnings) = parse(GOOD).unwrap();
        assert_eq!((set.paired.len(), set.continuations.len()), (2, 1));
        assert!(warnings.is_empty());
        assert_eq!(set.continuations[0].bucket(), ContinuationDomain::News);
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = r#"{"kind":"paired","id":"L-07","domain":"literary","context":"c","option_good":"a","option_bad":"b"}
{"kind":"continuation","id":"L-07","domain":"literary","context":"c","ground_truth":"g"}"#;
        let err = parse(text).unwrap_err();
        assert!(matches!(err, DatasetError::DuplicateId { line: 2, .. }));
        assert!(err.to_string().contains("L-07"));
    }

    #[test]
    fn empty_file_warns() {
        let (set, warnings) = parse("").unwrap();
        assert!(set.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn errors_carry_line_and_field() {
        let text = "\n{\"kind\":\"paired\",\"id\":\"x\",\"domain\":\"poetry\",\"context\":\"c\",\"option_good\":\"a\",\"option_bad\":\"b\"}";
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.starts_with("line 2:"), "{msg}");
        assert!(msg.contains("poetry"), "{msg}");

        let text = r#"{"kind":"paired","id":"x","domain":"literary","context":"c","option_bad":"b"}"#;
        let msg = parse(text).unwrap_err().to_string();
        assert!(msg.contains("option_good"), "{msg}");

        assert!(parse("{not json").unwrap_err().to_string().contains("line 1"));
        assert!(parse(r#"{"kind":"triple"}"#).unwrap_err().to_string().contains("triple"));
    }

    #[test]
    fn identical_options_rejected() {
        let text = r#"{"kind":"paired","id":"x","domain":"literary","context":"c","option_good":"a","option_bad":"a"}"#;
        assert!(parse(text).unwrap_err().to_string().contains("identical"));
    }

    #[test]
    fn empty_ground_truth_rejected() {
        let text = r#"{"kind":"continuation","id":"x","domain":"literary","context":"c","ground_truth":""}"#;
        assert!(parse(text).is_err());
    }

    #[test]
    fn extra_fields_and_metadata_survive_round_trip() {
        let text = r#"{"kind":"metadata","source":"unit","model_cutoff_date":"2024-06-30"}
{"kind":"paired","id":"L-01","domain":"literary","context":"c","option_good":"a","option_bad":"b","annotator":{"name":"k"}}"#;
        let (set, _) = parse(text).unwrap();
        assert_eq!(set.paired[0].extra["annotator"]["name"], "k");
        let mut buf = Vec::new();
        write_benchmark(&set, &mut buf).unwrap();
        let (again, _) = read_benchmark(buf.as_slice()).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn time_window_statuses() {
        let cutoff = NaiveDate::from_ymd_opt(2024, 6, 30).unwrap();
        let text = r#"{"kind":"continuation","id":"a","domain":"literary","context":"c","ground_truth":"g","publication_date":"2024-07-01"}
{"kind":"continuation","id":"b","domain":"literary","context":"c","ground_truth":"g","publication_date":"2024-05-01"}
{"kind":"continuation","id":"c","domain":"literary","context":"c","ground_truth":"g"}
{"kind":"continuation","id":"d","domain":"literary","context":"c","ground_truth":"g","publication_date":"2024-06-30"}"#;
        let (set, _) = parse(text).unwrap();
        let before = set.clone();
        let report = time_window_check(&set, cutoff);
        let statuses: Vec<_> = report.entries.iter().map(|e| e.status).collect();
        assert_eq!(
            statuses,
            vec![
                WindowStatus::Pass,
                WindowStatus::PreCutoff,
                WindowStatus::Unknown,
                WindowStatus::PreCutoff
            ]
        );
        assert_eq!(report.flagged().count(), 3);
        assert_eq!(set, before);
    }

    fn tagged(id: &str, tags: &[Dimension]) -> PairedItem {
        PairedItem {
            id: id.into(),
            domain: Domain::Literary,
            context: "c".into(),
            option_good: "a".into(),
            option_bad: "b".into(),
            publication_date: None,
            dimension_tags: if tags.is_empty() {
                None
            } else {
                Some(tags.iter().copied().collect())
            },
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn dimension_coverage_counts() {
        use Dimension::*;
        let set = BenchmarkSet {
            paired: vec![
                tagged("1", &[Intent, Audience, Reality]),
                tagged("2", &[Intent, Audience]),
                tagged("3", &[Intent]),
            ],
            ..Default::default()
        };
        assert_eq!(
            dimension_coverage_summary(&set),
            DimensionCoverage {
                three: 1,
                two: 1,
                one: 1,
                untagged: 0
            }
        );
        let untagged = BenchmarkSet {
            paired: vec![tagged("1", &[]), tagged("2", &[])],
            ..Default::default()
        };
        assert_eq!(dimension_coverage_summary(&untagged).untagged, 2);
        assert_eq!(
            dimension_coverage_summary(&BenchmarkSet::default()),
            DimensionCoverage::default()
        );
    }
}
