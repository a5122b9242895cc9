use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Numeric,
    Categorical,
    Label,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub role: ColumnRole,
    /// Fixed level order for a categorical column. When absent, the sorted
    /// distinct values seen in the file are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

/// Column roles for a CSV file, stored as a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
    /// Class names in index order. When absent, the sorted distinct label
    /// values are used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<String>>,
}

/// Levels of one categorical column, in one-hot column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotMap {
    pub column: String,
    pub levels: Vec<String>,
}

pub const LABEL_COLUMN: &str = "label";

impl Schema {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let schema: Schema = serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn write_json_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let labels = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .count();
        if labels != 1 {
            return Err(Error::Schema(format!(
                "schema needs exactly one label column, found {labels}"
            )));
        }
        let mut seen = BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("column {:?} listed twice", c.name)));
            }
        }
        Ok(())
    }

    /// Schema matching the layout written by [`write_csv`].
    pub fn for_dataset(data: &Dataset) -> Schema {
        let mut columns: Vec<ColumnSpec> = data
            .feature_names
            .iter()
            .map(|n| ColumnSpec {
                name: n.clone(),
                role: ColumnRole::Numeric,
                levels: None,
            })
            .collect();
        columns.push(ColumnSpec {
            name: LABEL_COLUMN.into(),
            role: ColumnRole::Label,
            levels: None,
        });
        Schema {
            columns,
            classes: Some(data.class_names.clone()),
        }
    }
}

/// Reads a headered CSV file according to `schema`. Categorical columns are
/// one-hot encoded into `name=level` columns. Rows with an empty cell in a
/// used column are rejected.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<(Dataset, Vec<OneHotMap>)> {
    schema.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::Data(format!("cannot open {}: {e}", path.display())),
            _ => Error::Csv(e),
        })?;
    let header = reader.headers()?.clone();
    let mut positions = Vec::with_capacity(schema.columns.len());
    for col in &schema.columns {
        let pos = header.iter().position(|h| h.trim() == col.name).ok_or_else(|| {
            Error::Data(format!("{}: missing column {:?}", path.display(), col.name))
        })?;
        positions.push(pos);
    }

    let mut rows: Vec<(u64, Vec<String>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let mut cells = Vec::with_capacity(positions.len());
        for (col, &pos) in schema.columns.iter().zip(&positions) {
            let cell = record.get(pos).unwrap_or("").trim();
            if col.role != ColumnRole::Ignore && cell.is_empty() {
                return Err(Error::Row {
                    path: path.to_path_buf(),
                    line,
                    message: format!("missing value in column {:?}", col.name),
                });
            }
            cells.push(cell.to_string());
        }
        rows.push((line, cells));
    }

    let label_idx = schema
        .columns
        .iter()
        .position(|c| c.role == ColumnRole::Label)
        .expect("validated");
    let class_names: Vec<String> = match &schema.classes {
        Some(c) => c.clone(),
        None => rows
            .iter()
            .map(|(_, r)| r[label_idx].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect(),
    };

    let mut one_hot = Vec::new();
    let mut feature_names = Vec::new();
    for (ci, col) in schema.columns.iter().enumerate() {
        match col.role {
            ColumnRole::Numeric => feature_names.push(col.name.clone()),
            ColumnRole::Categorical => {
                let levels = match &col.levels {
                    Some(l) => l.clone(),
                    None => rows
                        .iter()
                        .map(|(_, r)| r[ci].clone())
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect(),
                };
                feature_names.extend(levels.iter().map(|l| format!("{}={l}", col.name)));
                one_hot.push(OneHotMap {
                    column: col.name.clone(),
                    levels,
                });
            }
            _ => {}
        }
    }

    let width = feature_names.len();
    let mut data = Vec::with_capacity(rows.len() * width);
    let mut labels = Vec::with_capacity(rows.len());
    for (line, cells) in &rows {
        let row_err = |message: String| Error::Row {
            path: path.to_path_buf(),
            line: *line,
            message,
        };
        let mut hot = one_hot.iter();
        for (col, cell) in schema.columns.iter().zip(cells) {
            match col.role {
                ColumnRole::Numeric => {
                    let v: f64 = cell.parse().map_err(|_| {
                        row_err(format!("cannot parse {cell:?} in column {:?} as a number", col.name))
                    })?;
                    if !v.is_finite() {
                        return Err(row_err(format!("non-finite value in column {:?}", col.name)));
                    }
                    data.push(v);
                }
                ColumnRole::Categorical => {
                    let map = hot.next().expect("one map per categorical column");
                    let pos = map.levels.iter().position(|l| l == cell).ok_or_else(|| {
                        row_err(format!("unknown level {cell:?} in column {:?}", col.name))
                    })?;
                    data.extend((0..map.levels.len()).map(|k| if k == pos { 1.0 } else { 0.0 }));
                }
                ColumnRole::Label => {
                    let idx = class_names.iter().position(|c| c == cell).ok_or_else(|| {
                        row_err(format!("unknown label value {cell:?}"))
                    })?;
                    labels.push(idx);
                }
                ColumnRole::Ignore => {}
            }
        }
    }
    let features = Matrix::new(rows.len(), width, data)?;
    Ok((Dataset::new(features, labels, feature_names, class_names)?, one_hot))
}

/// Writes features as numeric columns followed by a `label` column holding
/// class names. Values use the shortest round-trip decimal form.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Data(format!("cannot write {}: {e}", path.display())),
        _ => Error::Csv(e),
    })?;
    let mut header: Vec<&str> = data.feature_names.iter().map(String::as_str).collect();
    header.push(LABEL_COLUMN);
    w.write_record(&header)?;
    for (row, &label) in data.features.row_iter().zip(&data.labels) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        rec.push(data.class_names[label].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use crate::numerics::SeededRng;

    fn schema(json: &str) -> Schema {
        serde_json::from_str(json).unwrap()
    }

    fn credit_schema() -> Schema {
        schema(
            r#"{"columns": [
                {"name": "income", "role": "numeric"},
                {"name": "home", "role": "categorical"},
                {"name": "age", "role": "numeric"},
                {"name": "risk", "role": "label"}],
              "classes": ["Low", "Average", "High"]}"#,
        )
    }

    #[test]
    fn one_hot_width_is_numeric_plus_levels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "income,home,age,risk\n10,own,30,Low\n20,rent,40,High\n15,own,35,Average\n").unwrap();
        let (d, maps) = load_csv(&p, &credit_schema()).unwrap();
        assert_eq!(d.n_features(), 2 + 2);
        assert_eq!(d.feature_names, ["income", "home=own", "home=rent", "age"]);
        assert_eq!(d.row(1), &[20.0, 0.0, 1.0, 40.0]);
        assert_eq!(d.labels, vec![0, 2, 1]);
        assert_eq!(maps[0].levels, ["own", "rent"]);
    }

    #[test]
    fn unknown_label_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "income,home,age,risk\n10,own,30,Low\n20,rent,40,Extreme\n").unwrap();
        let err = load_csv(&p, &credit_schema()).unwrap_err().to_string();
        assert!(err.contains("Extreme"), "{err}");
        assert!(err.contains(":3:"), "{err}");
    }

    #[test]
    fn bad_cells_report_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "income,home,age,risk\n10,own,30,Low\n20,own,,Low\n").unwrap();
        let err = load_csv(&p, &credit_schema()).unwrap_err();
        assert!(matches!(err, Error::Row { line: 3, .. }), "{err}");
        fs::write(&p, "income,home,age,risk\nabc,own,30,Low\n").unwrap();
        let err = load_csv(&p, &credit_schema()).unwrap_err();
        assert!(matches!(err, Error::Row { line: 2, .. }), "{err}");
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        fs::write(&p, "income,age,risk\n10,30,Low\n").unwrap();
        let err = load_csv(&p, &credit_schema()).unwrap_err().to_string();
        assert!(err.contains("home"), "{err}");
    }

    #[test]
    fn schema_needs_one_label() {
        let s = schema(r#"{"columns": [{"name": "a", "role": "numeric"}]}"#);
        assert!(matches!(s.validate(), Err(Error::Schema(_))));
    }

    #[test]
    fn generated_dataset_roundtrips() {
        let d = synth_blobs(20, 3, 4, 2.5, &mut SeededRng::new(5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("blobs.csv");
        write_csv(&d, &p).unwrap();
        let (back, _) = load_csv(&p, &Schema::for_dataset(&d)).unwrap();
        assert_eq!(back, d);
    }
}
