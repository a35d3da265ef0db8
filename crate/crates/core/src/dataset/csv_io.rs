use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dataset, DatasetError, FlowRecord, Label, Technique, Tool};

/// Maps raw label cells to binary classes. Matching is case-insensitive on
/// the trimmed cell.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    entries: BTreeMap<String, Label>,
}

impl LabelMap {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Label)>,
        S: AsRef<str>,
    {
        LabelMap {
            entries: entries
                .into_iter()
                .map(|(k, v)| (k.as_ref().trim().to_ascii_lowercase(), v))
                .collect(),
        }
    }

    pub fn get(&self, raw: &str) -> Option<Label> {
        self.entries.get(&raw.trim().to_ascii_lowercase()).copied()
    }
}

impl Default for LabelMap {
    fn default() -> Self {
        LabelMap::new([
            ("0", Label::Benign),
            ("benign", Label::Benign),
            ("normal", Label::Benign),
            ("1", Label::Scan),
            ("scan", Label::Scan),
            ("portscan", Label::Scan),
            ("port_scan", Label::Scan),
        ])
    }
}

/// Which header columns are not features.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvSchema {
    pub label_column: String,
    pub tool_column: Option<String>,
    pub technique_column: Option<String>,
    pub label_map: LabelMap,
}

impl CsvSchema {
    /// Label column only; every other column is a feature.
    pub fn label_only(label_column: impl Into<String>) -> Self {
        CsvSchema {
            label_column: label_column.into(),
            tool_column: None,
            technique_column: None,
            label_map: LabelMap::default(),
        }
    }

    /// The layout produced by [`write_csv`]: `label`, `tool`, `technique`.
    pub fn flows() -> Self {
        CsvSchema {
            tool_column: Some("tool".into()),
            technique_column: Some("technique".into()),
            ..CsvSchema::label_only("label")
        }
    }

    /// Like [`CsvSchema::flows`], but metadata columns are only claimed when
    /// the header actually has them.
    pub fn flows_for_header(headers: &[String]) -> Self {
        let has = |name: &str| headers.iter().any(|h| h == name);
        CsvSchema {
            tool_column: has("tool").then(|| "tool".into()),
            technique_column: has("technique").then(|| "technique".into()),
            ..CsvSchema::label_only("label")
        }
    }
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema::flows()
    }
}

/// Trimmed header cells of a CSV.
pub fn read_headers<R: Read>(reader: R) -> Result<Vec<String>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    Ok(rdr.headers()?.iter().map(|h| h.trim().to_string()).collect())
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset, DatasetError> {
    read_csv(File::open(path)?, schema)
}

/// Parse a header-first CSV. Feature columns are all columns the schema does
/// not claim, in header order. Empty feature cells read as NaN so that
/// preprocessing can decide what to do with them. Row numbers in errors are
/// 1-based data rows (the header is not counted).
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Dataset, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let label_idx = find(&schema.label_column)?;
    let tool_idx = schema.tool_column.as_deref().map(find).transpose()?;
    let technique_idx = schema.technique_column.as_deref().map(find).transpose()?;

    let claimed = |i: usize| i == label_idx || Some(i) == tool_idx || Some(i) == technique_idx;
    let feature_cols: Vec<usize> = (0..headers.len()).filter(|&i| !claimed(i)).collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].clone()).collect();

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let cell = record.get(c).unwrap_or("").trim();
            let value = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| DatasetError::ParseFailure {
                    row,
                    column: headers[c].clone(),
                    value: cell.to_string(),
                })?
            };
            features.push(value);
        }
        let raw_label = record.get(label_idx).unwrap_or("");
        let label = schema
            .label_map
            .get(raw_label)
            .ok_or_else(|| DatasetError::UnknownLabel {
                row,
                value: raw_label.to_string(),
            })?;
        let tool = parse_meta::<Tool>(&record, tool_idx, row)?;
        let technique = parse_meta::<Technique>(&record, technique_idx, row)?;
        rows.push(FlowRecord {
            features,
            label,
            tool,
            technique,
        });
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyDataset);
    }
    Dataset::new(feature_names, rows)
}

fn parse_meta<T: std::str::FromStr<Err = String>>(
    record: &csv::StringRecord,
    idx: Option<usize>,
    row: usize,
) -> Result<Option<T>, DatasetError> {
    let Some(cell) = idx.and_then(|i| record.get(i)).map(str::trim) else {
        return Ok(None);
    };
    if cell.is_empty() {
        return Ok(None);
    }
    cell.parse()
        .map(Some)
        .map_err(|message| DatasetError::InvalidMetadata { row, message })
}

/// Write `data` as feature columns, then `label` (0/1), then `tool` and
/// `technique` (empty when absent). Floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv<W: Write>(data: &Dataset, writer: W) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.extend(["label", "tool", "technique"]);
    wtr.write_record(&header)?;

    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for row in data.rows() {
        record.clear();
        record.extend(row.features.iter().map(|v| v.to_string()));
        record.push(row.label.index().to_string());
        record.push(row.tool.map(|t| t.as_str().to_string()).unwrap_or_default());
        record.push(row.technique.map(|t| t.as_str().to_string()).unwrap_or_default());
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv_path(data: &Dataset, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let file = std::io::BufWriter::new(File::create(path)?);
    write_csv(data, file)
}
