//! Comma-separated datasets: one signal per row, optional header, optional
//! id and label columns. No quoting; '.' is the decimal separator.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sigcat_core::signal::{uci_seizure_map, Dataset, Signal, Split};

use crate::{Error, Result};

/// How rows of a CSV file map onto signals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// "last", "none", or a header name.
    pub label_column: String,
    /// "none", "first", or a header name.
    pub id_column: String,
    /// "uci" or explicit pairs such as "1:1,2:0,3:0".
    pub label_map: Option<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            label_column: "last".into(),
            id_column: "none".into(),
            label_map: None,
        }
    }
}

/// A raw-label to class-index map plus the class names it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub map: BTreeMap<i64, usize>,
    pub class_names: Vec<String>,
}

impl LabelMap {
    pub fn parse(spec: &str) -> Result<Self> {
        if spec.trim() == "uci" {
            return Ok(Self {
                map: uci_seizure_map(),
                class_names: vec!["non-seizure".into(), "seizure".into()],
            });
        }
        let mut map = BTreeMap::new();
        for pair in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let parsed = pair
                .split_once(':')
                .and_then(|(a, b)| Some((a.trim().parse::<i64>().ok()?, b.trim().parse::<usize>().ok()?)));
            let (raw, class) =
                parsed.ok_or_else(|| Error::Usage(format!("label map entry {pair:?} is not of the form raw:class")))?;
            if map.insert(raw, class).is_some() {
                return Err(Error::Usage(format!("label map repeats raw label {raw}")));
            }
        }
        let mut targets: Vec<usize> = map.values().copied().collect();
        targets.sort_unstable();
        targets.dedup();
        if targets.is_empty() || targets.iter().enumerate().any(|(i, &t)| i != t) {
            return Err(Error::Usage(format!(
                "label map targets must be exactly 0..k, got {targets:?}"
            )));
        }
        let class_names = targets.iter().map(|t| t.to_string()).collect();
        Ok(Self { map, class_names })
    }
}

enum Column {
    Last,
    First,
    Absent,
    Named(String),
}

fn column(spec: &str) -> Column {
    match spec {
        "last" => Column::Last,
        "first" => Column::First,
        "none" | "" => Column::Absent,
        name => Column::Named(name.to_string()),
    }
}

fn resolve(
    spec: &str,
    header: Option<&[&str]>,
    width: usize,
    path: &Path,
    what: &str,
) -> Result<Option<usize>> {
    match column(spec) {
        Column::Last => Ok(Some(width - 1)),
        Column::First => Ok(Some(0)),
        Column::Absent => Ok(None),
        Column::Named(name) => {
            let header = header.ok_or_else(|| Error::Format {
                path: path.into(),
                line: 1,
                msg: format!("{what} column {name:?} requested but the file has no header"),
            })?;
            header.iter().position(|h| *h == name).map(Some).ok_or_else(|| Error::Format {
                path: path.into(),
                line: 1,
                msg: format!("no {what} column named {name:?} in the header"),
            })
        }
    }
}

fn header_cell(s: &str) -> &str {
    s.trim().trim_matches('"')
}

pub fn load_csv_dataset(path: &Path, cfg: &DataConfig) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_csv_dataset(&text, path, cfg)
}

/// Parses CSV text; `path` is only used in diagnostics.
pub fn parse_csv_dataset(text: &str, path: &Path, cfg: &DataConfig) -> Result<Dataset> {
    let label_map = cfg.label_map.as_deref().map(LabelMap::parse).transpose()?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let Some(&(first_line, first)) = lines.peek() else {
        return Err(Error::Format {
            path: path.into(),
            line: 1,
            msg: "file holds no rows".into(),
        });
    };
    let first_cells: Vec<&str> = first.split(',').collect();
    let width = first_cells.len();
    let probe = usize::from(matches!(column(&cfg.id_column), Column::First)).min(width - 1);
    let header: Option<Vec<&str>> = if first_cells[probe].trim().parse::<f64>().is_err() {
        lines.next();
        Some(first_cells.iter().map(|c| header_cell(c)).collect())
    } else {
        None
    };
    let label_col = resolve(&cfg.label_column, header.as_deref(), width, path, "label")?;
    let id_col = resolve(&cfg.id_column, header.as_deref(), width, path, "id")?;
    if label_col.is_some() && label_col == id_col {
        return Err(Error::Usage("label and id columns must differ".into()));
    }
    let features: Vec<usize> = (0..width).filter(|c| Some(*c) != label_col && Some(*c) != id_col).collect();
    if features.is_empty() {
        return Err(Error::Format {
            path: path.into(),
            line: first_line,
            msg: "no feature columns".into(),
        });
    }

    let mut signals = Vec::new();
    for (row, (line, text)) in lines.enumerate() {
        let cells: Vec<&str> = text.split(',').map(str::trim).collect();
        if cells.len() != width {
            return Err(Error::Format {
                path: path.into(),
                line,
                msg: format!("expected {width} columns, found {}", cells.len()),
            });
        }
        let parse_err = |column: usize, expected| Error::Parse {
            path: path.into(),
            row: line,
            column: column + 1,
            cell: cells[column].to_string(),
            expected,
        };
        let samples = features
            .iter()
            .map(|&c| {
                cells[c]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(c, "a finite real"))
            })
            .collect::<Result<Vec<f64>>>()?;
        let label = match label_col {
            None => None,
            Some(c) => {
                let raw: i64 = cells[c].parse().map_err(|_| parse_err(c, "an integer label"))?;
                Some(match &label_map {
                    Some(m) => *m.map.get(&raw).ok_or_else(|| Error::Mapping {
                        path: path.into(),
                        line,
                        label: raw,
                    })?,
                    None => usize::try_from(raw).map_err(|_| parse_err(c, "a non-negative integer label"))?,
                })
            }
        };
        let id = match id_col {
            Some(c) => cells[c].to_string(),
            None => format!("row-{row}"),
        };
        signals.push(Signal::new(samples, label)?.with_source_id(id));
    }
    if signals.is_empty() {
        return Err(Error::Format {
            path: path.into(),
            line: first_line,
            msg: "file holds a header but no data rows".into(),
        });
    }
    Ok(match label_map {
        Some(m) => Dataset::new(signals, m.class_names.len(), m.class_names)?,
        None => Dataset::from_labeled(signals)?,
    })
}

/// Header `x1,...,xN[,label]` then one row per signal. Values use the
/// shortest representation that parses back to the same bits.
pub fn format_csv(signals: &[Signal]) -> String {
    let labeled = signals.iter().any(|s| s.label.is_some());
    let width = signals.first().map_or(0, Signal::len);
    let mut out = String::new();
    let names: Vec<String> = (1..=width).map(|i| format!("x{i}")).collect();
    out.push_str(&names.join(","));
    if labeled {
        out.push_str(",label");
    }
    out.push('\n');
    for s in signals {
        for (i, v) in s.samples().iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        if labeled {
            match s.label {
                Some(l) => {
                    let _ = write!(out, ",{l}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(path: &Path, signals: &[Signal]) -> Result<()> {
    std::fs::write(path, format_csv(signals)).map_err(Error::io(path))
}

/// Key-value summary: rows, length, class histogram and split sizes.
pub fn summary(dataset: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "rows: {}", dataset.len());
    let _ = writeln!(out, "length: {}", dataset.signal_len().unwrap_or(0));
    let _ = writeln!(out, "classes: {}", dataset.num_classes());
    let unlabeled = dataset.signals().iter().filter(|s| s.label.is_none()).count();
    for (c, (n, name)) in dataset.class_histogram().iter().zip(dataset.class_names()).enumerate() {
        let _ = writeln!(out, "class {c} ({name}): {n}");
    }
    if unlabeled > 0 {
        let _ = writeln!(out, "unlabeled: {unlabeled}");
    }
    if dataset.splits().is_some() {
        for s in Split::ALL {
            let _ = writeln!(out, "split {}: {}", s.name(), dataset.split_indices(s).len());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, cfg: &DataConfig) -> Result<Dataset> {
        parse_csv_dataset(text, Path::new("t.csv"), cfg)
    }

    #[test]
    fn uci_row_is_mapped_to_non_seizure() {
        let mut row: Vec<String> = (0..178).map(|i| format!("{}.5", i as i64 - 80)).collect();
        row.push("3".into());
        let cfg = DataConfig {
            label_map: Some("uci".into()),
            ..DataConfig::default()
        };
        let d = parse(&row.join(","), &cfg).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.signals()[0].len(), 178);
        assert_eq!(d.signals()[0].label, Some(0));
        assert_eq!(d.class_names(), ["non-seizure", "seizure"]);
    }

    #[test]
    fn zero_row_gives_one_class() {
        let row = format!("{},0", vec!["0.0"; 178].join(","));
        let d = parse(&row, &DataConfig::default()).unwrap();
        assert_eq!(d.num_classes(), 1);
        assert!(d.signals()[0].samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn three_rows_keep_order() {
        let d = parse("1,2,0\n3,4,1\n5,6,0\n", &DataConfig::default()).unwrap();
        assert_eq!(d.num_classes(), 2);
        let firsts: Vec<f64> = d.signals().iter().map(|s| s.samples()[0]).collect();
        assert_eq!(firsts, [1.0, 3.0, 5.0]);
        let labels: Vec<_> = d.signals().iter().map(|s| s.label).collect();
        assert_eq!(labels, [Some(0), Some(1), Some(0)]);
    }

    #[test]
    fn header_and_named_columns() {
        let text = "\"\",a,b,y\nid-1,1.5,2,1\nid-2,3,4,0\n";
        let cfg = DataConfig {
            label_column: "y".into(),
            id_column: "first".into(),
            label_map: None,
        };
        let d = parse(text, &cfg).unwrap();
        assert_eq!(d.signals()[0].samples(), [1.5, 2.0]);
        assert_eq!(d.signals()[1].source_id.as_deref(), Some("id-2"));
        let unlabeled = DataConfig {
            label_column: "none".into(),
            ..DataConfig::default()
        };
        let d = parse("a,b\n1,2\n", &unlabeled).unwrap();
        assert_eq!(d.signals()[0].label, None);
        assert_eq!(d.signals()[0].source_id.as_deref(), Some("row-0"));
    }

    #[test]
    fn diagnostics_carry_location() {
        let cfg = DataConfig::default();
        match parse("1,2,0\n1,0\n", &cfg) {
            Err(Error::Format { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("1,2,0\n1,x,0\n", &cfg) {
            Err(Error::Parse { row: 2, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("1,2,0\n1,nan,0\n", &cfg) {
            Err(Error::Parse { row: 2, column: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse("1,2,0.5\n", &cfg) {
            Err(Error::Parse { row: 1, column: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let mapped = DataConfig {
            label_map: Some("1:1,2:0".into()),
            ..DataConfig::default()
        };
        match parse("1,2,1\n1,2,7\n", &mapped) {
            Err(Error::Mapping { line: 2, label: 7, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse("", &cfg).is_err());
        assert!(parse("a,b,label\n", &cfg).is_err());
    }

    #[test]
    fn label_map_syntax() {
        let m = LabelMap::parse("1:1, 2:0,3:0").unwrap();
        assert_eq!(m.class_names.len(), 2);
        assert!(LabelMap::parse("1:1,2:3").is_err());
        assert!(LabelMap::parse("1-1").is_err());
        assert!(LabelMap::parse("1:0,1:1").is_err());
    }

    #[test]
    fn summary_lists_histogram_and_splits() {
        let d = parse("1,2,0\n3,4,1\n5,6,0\n", &DataConfig::default()).unwrap();
        let s = summary(&d);
        assert!(s.contains("rows: 3\n"));
        assert!(s.contains("length: 2\n"));
        assert!(s.contains("class 0 (0): 2\n"));
        assert!(!s.contains("split"));
    }
}
