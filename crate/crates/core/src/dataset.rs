//! Static-metric tables and their join with embeddings.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::embedding::EmbeddingMatrix;

/// Column order of the static metrics in every feature table.
pub const METRIC_NAMES: [&str; 20] = [
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "lcom3", "npm", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "ca",
    "ce", "avg_cc", "max_cc", "loc",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column: {0}")]
    MissingColumn(String),
    #[error("row {row}: column `{column}`: cannot parse `{value}` as a number")]
    BadNumber { row: usize, column: String, value: String },
    #[error("row {row}: {message}")]
    BadRow { row: usize, message: String },
    #[error("no joinable modules")]
    NoJoinableModules,
    #[error("csv error in {0}: {1}")]
    Csv(String, #[source] csv::Error),
    #[error("io error on {0}: {1}")]
    Io(String, #[source] std::io::Error),
}

/// One module row of a metrics file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuleRecord {
    pub name: String,
    pub metrics: [f64; 20],
    pub bug_count: u64,
}

impl ModuleRecord {
    pub fn label(&self) -> u8 {
        binarize_label(self.bug_count)
    }
}

pub fn binarize_label(bug_count: u64) -> u8 {
    u8::from(bug_count >= 1)
}

/// Nested types use `$` in some metric tools and `.` in the extractor.
pub fn normalize_name(name: &str) -> String {
    name.trim().replace('$', ".")
}

pub fn match_modules<'a, A, B>(names0: A, names1: B) -> BTreeSet<String>
where
    A: IntoIterator<Item = &'a str>,
    B: IntoIterator<Item = &'a str>,
{
    let left: BTreeSet<String> = names0.into_iter().map(normalize_name).collect();
    names1
        .into_iter()
        .map(normalize_name)
        .filter(|n| left.contains(n))
        .collect()
}

struct Columns {
    name: usize,
    bug: usize,
    metrics: [usize; 20],
}

fn locate_columns(headers: &csv::StringRecord) -> Result<Columns, DatasetError> {
    let heads: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    let find = |want: &str| heads.iter().position(|h| h == want);
    // Raw PROMISE files carry two `name` columns (project, then class); the
    // class name is the last one.
    let name = heads
        .iter()
        .rposition(|h| h == "name")
        .ok_or_else(|| DatasetError::MissingColumn("name".into()))?;
    let bug = find("bug").ok_or_else(|| DatasetError::MissingColumn("bug".into()))?;
    let mut metrics = [0; 20];
    for (slot, metric) in metrics.iter_mut().zip(METRIC_NAMES) {
        *slot = find(metric).ok_or_else(|| DatasetError::MissingColumn(metric.into()))?;
    }
    Ok(Columns { name, bug, metrics })
}

fn parse_bug(row: usize, raw: &str) -> Result<u64, DatasetError> {
    let raw = raw.trim();
    if let Ok(n) = raw.parse::<u64>() {
        return Ok(n);
    }
    match raw.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v.is_finite() => Ok(v as u64),
        _ => Err(DatasetError::BadNumber {
            row,
            column: "bug".into(),
            value: raw.to_string(),
        }),
    }
}

/// Reads PROMISE-layout CSV. Row numbers in errors count the header as row 1.
pub fn parse_metrics_csv<R: Read>(reader: R, source: &str) -> Result<Vec<ModuleRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| DatasetError::Csv(source.into(), e))?.clone();
    let cols = locate_columns(&headers)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| DatasetError::Csv(source.into(), e))?;
        let cell = |idx: usize| rec.get(idx).unwrap_or("");
        let name = normalize_name(cell(cols.name));
        if name.is_empty() {
            return Err(DatasetError::BadRow {
                row,
                message: "empty module name".into(),
            });
        }
        let mut metrics = [0.0; 20];
        for (k, &idx) in cols.metrics.iter().enumerate() {
            let raw = cell(idx).trim();
            metrics[k] = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| DatasetError::BadNumber {
                    row,
                    column: METRIC_NAMES[k].into(),
                    value: raw.to_string(),
                })?;
        }
        if metrics[19] < 0.0 {
            return Err(DatasetError::BadRow {
                row,
                message: "negative loc".into(),
            });
        }
        out.push(ModuleRecord {
            name,
            metrics,
            bug_count: parse_bug(row, cell(cols.bug))?,
        });
    }
    Ok(out)
}

pub fn load_metrics_csv(path: &Path) -> Result<Vec<ModuleRecord>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|e| DatasetError::Io(path.display().to_string(), e))?;
    parse_metrics_csv(std::io::BufReader::new(file), &path.display().to_string())
}

/// Writes records in the PROMISE column layout (one `name` column).
pub fn write_metrics_csv<W: Write>(records: &[ModuleRecord], writer: W) -> Result<(), DatasetError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e| DatasetError::Csv("<output>".into(), e);
    let mut header = vec!["name"];
    header.extend(METRIC_NAMES);
    header.push("bug");
    w.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.name.clone()];
        row.extend(r.metrics.iter().map(f64::to_string));
        row.push(r.bug_count.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DatasetError::Io("<output>".into(), e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub name: String,
    pub features: Vec<f64>,
    pub label: u8,
}

/// Rows sorted by module name; columns are the static metrics followed by
/// any embedding components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

/// Bookkeeping for an inner join.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct JoinStats {
    pub joined: usize,
    pub records_dropped: usize,
    pub vectors_dropped: usize,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn features(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| r.features.clone()).collect()
    }

    pub fn defect_rate(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.label as f64).sum::<f64>() / self.rows.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e| DatasetError::Csv("<output>".into(), e);
        let mut header = vec!["name".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut row = vec![r.name.clone(), r.label.to_string()];
            row.extend(r.features.iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| DatasetError::Io("<output>".into(), e))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let csv_err = |e| DatasetError::Csv("<input>".into(), e);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        if headers.get(0) != Some("name") {
            return Err(DatasetError::MissingColumn("name".into()));
        }
        if headers.get(1) != Some("label") {
            return Err(DatasetError::MissingColumn("label".into()));
        }
        let feature_names: Vec<String> = headers.iter().skip(2).map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(csv_err)?;
            let label = match &rec[1] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(DatasetError::BadRow {
                        row,
                        message: format!("label must be 0 or 1, found `{other}`"),
                    })
                }
            };
            let features = rec
                .iter()
                .skip(2)
                .zip(&feature_names)
                .map(|(v, col)| {
                    v.parse::<f64>().map_err(|_| DatasetError::BadNumber {
                        row,
                        column: col.clone(),
                        value: v.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(FeatureRow {
                name: rec[0].to_string(),
                features,
                label,
            });
        }
        Ok(Self { feature_names, rows })
    }
}

fn metric_feature_names() -> Vec<String> {
    METRIC_NAMES.iter().map(|s| s.to_string()).collect()
}

fn unique_records(records: &[ModuleRecord]) -> BTreeMap<String, &ModuleRecord> {
    let mut by_name = BTreeMap::new();
    for r in records {
        by_name.entry(normalize_name(&r.name)).or_insert(r);
    }
    by_name
}

/// Table of the static metrics alone.
pub fn static_table(records: &[ModuleRecord]) -> FeatureTable {
    let rows = unique_records(records)
        .into_iter()
        .map(|(name, r)| FeatureRow {
            name,
            features: r.metrics.to_vec(),
            label: r.label(),
        })
        .collect();
    FeatureTable {
        feature_names: metric_feature_names(),
        rows,
    }
}

/// Inner join on normalized module name. Records without a vector and
/// vectors without a record are dropped and counted.
pub fn join_features(records: &[ModuleRecord], emb: &EmbeddingMatrix) -> Result<(FeatureTable, JoinStats), DatasetError> {
    let by_name = unique_records(records);
    let vectors: BTreeMap<String, &[f64]> = emb.rows().map(|(n, v)| (normalize_name(n), v)).collect();
    let mut feature_names = metric_feature_names();
    feature_names.extend((0..emb.dim()).map(|i| format!("emb_{i}")));
    let mut rows = Vec::new();
    for (name, rec) in &by_name {
        if let Some(v) = vectors.get(name) {
            let mut features = rec.metrics.to_vec();
            features.extend_from_slice(v);
            rows.push(FeatureRow {
                name: name.clone(),
                features,
                label: rec.label(),
            });
        }
    }
    if rows.is_empty() {
        return Err(DatasetError::NoJoinableModules);
    }
    let stats = JoinStats {
        joined: rows.len(),
        records_dropped: by_name.len() - rows.len(),
        vectors_dropped: vectors.len() - rows.len(),
    };
    if stats.records_dropped > 0 || stats.vectors_dropped > 0 {
        log::info!(
            "joined {} modules; dropped {} metric records and {} embedding vectors",
            stats.joined,
            stats.records_dropped,
            stats.vectors_dropped
        );
    }
    Ok((FeatureTable { feature_names, rows }, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        let mut h = vec!["name", "version", "name"];
        h.extend(METRIC_NAMES);
        h.push("bug");
        h.join(",")
    }

    fn row(name: &str, base: f64, bug: &str) -> String {
        let mut r = vec!["proj".to_string(), "1.0".to_string(), name.to_string()];
        r.extend((0..20).map(|i| (base + i as f64).to_string()));
        r.push(bug.to_string());
        r.join(",")
    }

    #[test]
    fn reads_promise_layout() {
        let csv = format!("{}\n{}\n{}\n", header(), row("a.B", 1.0, "3"), row("a.C$D", 0.0, "0"));
        let recs = parse_metrics_csv(csv.as_bytes(), "t").unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].name, "a.B");
        assert_eq!(recs[0].bug_count, 3);
        assert_eq!(recs[0].label(), 1);
        assert_eq!(recs[0].metrics[19], 20.0);
        assert_eq!(recs[1].name, "a.C.D");
        assert_eq!(recs[1].label(), 0);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse_metrics_csv(format!("{}\n", header()).as_bytes(), "t").unwrap().is_empty());
    }

    #[test]
    fn missing_bug_column() {
        let csv = header().replace(",bug", "");
        let err = parse_metrics_csv(csv.as_bytes(), "t").unwrap_err();
        assert_eq!(err.to_string(), "missing column: bug");
    }

    #[test]
    fn bad_metric_reports_row() {
        let csv = format!("{}\n{}\n{}\n", header(), row("a.B", 1.0, "0"), row("a.C", 1.0, "0").replace(",5,", ",x,"));
        match parse_metrics_csv(csv.as_bytes(), "t").unwrap_err() {
            DatasetError::BadNumber { row, .. } => assert_eq!(row, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn binarize() {
        assert_eq!(binarize_label(0), 0);
        assert_eq!(binarize_label(1), 1);
        assert_eq!(binarize_label(7), 1);
    }

    #[test]
    fn module_matching() {
        assert_eq!(match_modules(["a", "b"], ["b", "c"]), BTreeSet::from(["b".to_string()]));
        assert!(match_modules(["a"], ["c"]).is_empty());
        assert_eq!(match_modules(["x$Y"], ["x.Y"]).len(), 1);
    }

    fn record(name: &str, bug: u64) -> ModuleRecord {
        ModuleRecord {
            name: name.into(),
            metrics: [1.0; 20],
            bug_count: bug,
        }
    }

    #[test]
    fn join_keeps_intersection() {
        let emb = EmbeddingMatrix::new(vec!["B".into(), "C".into()], 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (table, stats) = join_features(&[record("A", 0), record("B", 2)], &emb).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.rows[0].name, "B");
        assert_eq!(table.rows[0].features.len(), 22);
        assert_eq!(&table.rows[0].features[20..], &[1.0, 2.0]);
        assert_eq!(table.feature_names[20], "emb_0");
        assert_eq!(stats, JoinStats { joined: 1, records_dropped: 1, vectors_dropped: 1 });
        let emb = EmbeddingMatrix::new(vec!["Z".into()], 1, vec![0.0]).unwrap();
        assert!(matches!(join_features(&[record("A", 0)], &emb), Err(DatasetError::NoJoinableModules)));
    }

    #[test]
    fn table_csv_round_trip() {
        let table = static_table(&[record("p.A", 0), record("p.B", 1)]);
        assert_eq!(table.defect_rate(), 0.5);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("name,label,wmc,"));
        assert_eq!(FeatureTable::read_csv(&buf[..]).unwrap(), table);
    }

    #[test]
    fn metrics_csv_round_trip() {
        let recs = vec![record("p.A", 0), record("p.B", 4)];
        let mut buf = Vec::new();
        write_metrics_csv(&recs, &mut buf).unwrap();
        assert_eq!(parse_metrics_csv(&buf[..], "t").unwrap(), recs);
    }
}
