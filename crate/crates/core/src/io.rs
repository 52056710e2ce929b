//! Text file formats: VPF field files, `key=value` reports and trajectory
//! index files.
//!
//! VPF version 1:
//!
//! ```text
//! VPF 1
//! nx ny L Z
//! <nx values of the bottom row>
//! ...
//! <nx values of the top row>
//! ```
//!
//! Values are written as `{:.16e}` (17 significant digits), so reading a
//! written field reproduces it bit for bit and rewriting a canonical file
//! reproduces its bytes.

use std::fmt::{self, Display};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field};

const MAGIC: &str = "VPF 1";

pub fn write_vpf<W: Write>(mut w: W, f: &Field) -> Result<()> {
    let d = f.domain();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{} {} {} {}", d.nx(), d.ny(), d.half_width(), d.strip_height())?;
    for j in 0..d.ny() {
        let row: Vec<String> = f.row(j).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn to_vpf_string(f: &Field) -> String {
    let mut buf = Vec::new();
    write_vpf(&mut buf, f).expect("writing to memory");
    String::from_utf8(buf).expect("ASCII output")
}

pub fn parse_vpf(text: &str) -> Result<Field> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l.trim_end() == MAGIC => {}
        Some(l) => return Err(Error::Format(format!("bad magic line {l:?}, expected {MAGIC:?}"))),
        None => return Err(Error::Format("empty input".into())),
    }
    let header = lines.next().ok_or_else(|| Error::Format("missing header line".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 4 {
        return Err(Error::Format(format!("header needs `nx ny L Z`, got {header:?}")));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad grid size {s:?}")));
    let real = |s: &str| s.parse::<f64>().map_err(|_| Error::Format(format!("bad extent {s:?}")));
    let domain = Domain::new(real(h[2])?, real(h[3])?, int(h[0])?, int(h[1])?)?;
    let values = lines
        .flat_map(str::split_whitespace)
        .map(|s| s.parse::<f64>().map_err(|_| Error::Format(format!("bad value {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.len() != domain.len() {
        return Err(Error::Format(format!("expected {} values, found {}", domain.len(), values.len())));
    }
    Field::from_values(domain, values)
}

pub fn read_vpf<R: BufRead>(mut r: R) -> Result<Field> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse_vpf(&text)
}

pub fn read_vpf_file(path: impl AsRef<Path>) -> Result<Field> {
    read_vpf(BufReader::new(fs::File::open(path)?))
}

pub fn write_vpf_file(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_vpf(&mut w, f)?;
    w.flush()?;
    Ok(())
}

/// Ordered `key=value` lines. Keys are lowercase snake case.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

fn valid_key(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends or replaces `key`. Panics on a key that is not lowercase snake case.
    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        assert!(valid_key(key), "report key {key:?} is not lowercase snake case");
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    /// Full-precision float.
    pub fn set_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, format!("{value:.16e}"))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Report::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Report(format!("line {}: no '=' in {line:?}", n + 1)))?;
            if !valid_key(k) {
                return Err(Error::Report(format!("line {}: bad key {k:?}", n + 1)));
            }
            r.set(k, v);
        }
        Ok(r)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

impl Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// One line of a trajectory index: `t filename E I mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub t: f64,
    pub file: String,
    pub energy: f64,
    pub impulse: f64,
    pub mass: f64,
}

impl Display for IndexEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.16e} {} {:.16e} {:.16e} {:.16e}", self.t, self.file, self.energy, self.impulse, self.mass)
    }
}

pub fn write_index<W: Write>(mut w: W, entries: &[IndexEntry]) -> Result<()> {
    for e in entries {
        if e.file.is_empty() || e.file.contains(char::is_whitespace) {
            return Err(Error::InvalidParameter(format!("snapshot name {:?} must be nonempty without spaces", e.file)));
        }
        writeln!(w, "{e}")?;
    }
    Ok(())
}

pub fn parse_index(text: &str) -> Result<Vec<IndexEntry>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Report(format!("bad index line {l:?}"));
            if f.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(IndexEntry { t: num(f[0])?, file: f[1].to_string(), energy: num(f[2])?, impulse: num(f[3])?, mass: num(f[4])? })
        })
        .collect()
}
