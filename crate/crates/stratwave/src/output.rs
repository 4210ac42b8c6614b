//! Output directory handling and CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Files written by one command. Unless [`Outputs::commit`] is called,
/// everything written is removed again, together with the directory if
/// this run created it.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), created_dir, written: Vec::new(), committed: false })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        self.written.push(path.clone());
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        file.write_all(contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<PathBuf, CliError> {
        let bytes = table.to_bytes().map_err(|e| CliError::format(&self.path(name), e))?;
        self.write(name, &bytes)
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON values serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn commit(mut self) -> Vec<PathBuf> {
        self.committed = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

/// Shortest text that parses back to exactly `v`, switching to exponent
/// form outside a readable range.
pub fn fmt_number(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// A CSV table with `# key = value` metadata lines above the header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { metadata: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| fmt_number(v)).collect());
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, String> {
        let mut out = Vec::new();
        for (key, value) in &self.metadata {
            writeln!(out, "# {key} = {value}").map_err(|e| e.to_string())?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.columns).map_err(|e| e.to_string())?;
        for row in &self.rows {
            writer.write_record(row).map_err(|e| e.to_string())?;
        }
        writer.into_inner().map_err(|e| e.to_string())
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, String> {
        let text = std::str::from_utf8(bytes).map_err(|e| e.to_string())?;
        let mut metadata = Vec::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            let (key, value) = line[1..].split_once('=').ok_or_else(|| format!("malformed metadata line {line:?}"))?;
            metadata.push((key.trim().to_string(), value.trim().to_string()));
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let columns = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            rows.push(record.map_err(|e| e.to_string())?.iter().map(String::from).collect());
        }
        Ok(Self { metadata, columns, rows })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&bytes).map_err(|e| CliError::format(path, e))
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let mut table = Table::new(&["q [d]", "P [rho0 c^2]"]).meta("lambda", 0.25).meta("density_id", "00ff");
        table.push_numbers(&[0.1, -3.5e-17]);
        table.push_numbers(&[1.0 / 3.0, 2.0]);
        table.push_numbers(&[1e-300, -7.25e20]);
        let parsed = Table::parse(&table.to_bytes().unwrap()).unwrap();
        assert_eq!(parsed, table);
        assert_eq!(parsed.rows[1][0].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(parsed.rows[2][0], "1e-300");
        assert_eq!(parsed.rows[2][1].parse::<f64>().unwrap(), -7.25e20);
    }

    #[test]
    fn uncommitted_outputs_are_removed() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        {
            let mut out = Outputs::new(&dir).unwrap();
            out.write("a.csv", b"x\n").unwrap();
        }
        assert!(!dir.exists());
        let mut out = Outputs::new(&dir).unwrap();
        out.write("a.csv", b"x\n").unwrap();
        out.commit();
        assert!(dir.join("a.csv").exists());
    }
}
