//! CSV emission and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

/// 17 significant digits with a lowercase exponent; round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV table with a fixed column count.
pub struct Csv {
    columns: usize,
    body: String,
    rows: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            columns: header.len(),
            body: format!("{}\n", header.join(",")),
            rows: 0,
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row has the wrong field count");
        self.body.push_str(&fields.join(","));
        self.body.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Text cell without the CSV delimiters.
pub fn text_cell(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            ',' => ';',
            '"' | '\n' | '\r' => ' ',
            c => c,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub rows: usize,
}

/// Output directory plus everything the manifest will report.
pub struct RunDir {
    pub path: PathBuf,
    pub files: Vec<FileEntry>,
    pub results: Map<String, Value>,
}

impl RunDir {
    pub fn new(path: PathBuf) -> Self {
        RunDir {
            path,
            files: Vec::new(),
            results: Map::new(),
        }
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> std::io::Result<()> {
        fs::create_dir_all(&self.path)?;
        fs::write(self.path.join(name), &csv.body)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            rows: csv.rows(),
        });
        Ok(())
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("result values serialize");
        self.results.insert(key.to_string(), value);
    }
}

/// Writes `value` to `dir/manifest.json` through a temporary file and a rename.
pub fn write_manifest_atomic(dir: &Path, value: &Value) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(".manifest.json.tmp");
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    let _ = writeln!(text);
    fs::write(&tmp, text)?;
    fs::rename(&tmp, dir.join("manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [1.5, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(!s.contains('E'));
        }
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }

    #[test]
    #[should_panic(expected = "wrong field count")]
    fn csv_rejects_ragged_rows() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&["1".into()]);
    }

    #[test]
    fn text_cells_stay_in_one_field() {
        assert_eq!(text_cell("a, \"b\"\nc"), "a;  b  c");
    }

    #[test]
    fn manifest_is_replaced_atomically() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest_atomic(dir.path(), &serde_json::json!({"a": 1})).unwrap();
        write_manifest_atomic(dir.path(), &serde_json::json!({"a": 2})).unwrap();
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains('2'));
        assert!(!dir.path().join(".manifest.json.tmp").exists());
    }
}
