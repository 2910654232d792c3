//! CSV and JSON writers.
//!
//! CSV files carry a one-line header; floats are written with 17 significant
//! digits so that identical runs give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub enum Field<'a> {
    F(f64),
    U(u64),
    S(&'a str),
    B(bool),
}

impl From<f64> for Field<'_> {
    fn from(v: f64) -> Self {
        Field::F(v)
    }
}

impl From<usize> for Field<'_> {
    fn from(v: usize) -> Self {
        Field::U(v as u64)
    }
}

impl From<u32> for Field<'_> {
    fn from(v: u32) -> Self {
        Field::U(v as u64)
    }
}

impl From<bool> for Field<'_> {
    fn from(v: bool) -> Self {
        Field::B(v)
    }
}

impl<'a> From<&'a str> for Field<'a> {
    fn from(v: &'a str) -> Self {
        Field::S(v)
    }
}

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub struct Csv {
    columns: usize,
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            columns: header.len(),
            text: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, fields: &[Field]) {
        assert_eq!(fields.len(), self.columns, "csv row width");
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match f {
                Field::F(v) => self.text.push_str(&float(*v)),
                Field::U(v) => write!(self.text, "{v}").unwrap(),
                Field::B(v) => write!(self.text, "{v}").unwrap(),
                Field::S(s) => self.text.push_str(&escape(s)),
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn rows() {
        let mut c = Csv::new(&["a", "b", "c"]);
        c.row(&[1.5.into(), 3u32.into(), "x,y".into()]);
        assert_eq!(c.into_string(), "a,b,c\n1.5000000000000000e0,3,\"x,y\"\n");
    }
}
