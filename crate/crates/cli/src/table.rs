//! CSV tables with `#` provenance lines: LF line endings, '.' decimals and
//! numbers printed with 12 significant digits.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Shortest rendering of `x` rounded to 12 significant digits: fixed
/// notation for exponents in [−5, 12), scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_fraction(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim_fraction(mantissa.to_string()))
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Header lines written before the column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    /// Generator and command only.
    pub fn bare(command: &str) -> Self {
        let mut p = Provenance {
            entries: Vec::new(),
        };
        p.push("generator", format!("polariton {}", env!("CARGO_PKG_VERSION")));
        p.push("command", command);
        p
    }

    /// Generator, command, hash of the effective configuration, seed, sweep
    /// axis and units.
    pub fn new(command: &str, config: &RunConfig) -> CliResult<Self> {
        let text = config.to_toml()?;
        let mut p = Self::bare(command);
        p.push("config_sha256", sha256_hex(text.as_bytes()));
        p.push("seed", config.ensemble.base_seed.to_string());
        p.push("sweep_axis", config.sweep_axis().name());
        p.push("units", "energy eV, k nm^-1, velocity nm/fs, time fs, position nm, temperature K");
        Ok(p)
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// A parsed table: `#` metadata, column names and raw string rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("table has no column '{name}'")))
    }

    pub fn number(&self, row: usize, col: usize) -> CliResult<f64> {
        let cell = &self.rows[row][col];
        cell.parse()
            .map_err(|_| CliError::Usage(format!("row {}: '{cell}' is not a number", row + 1)))
    }
}

/// Render a table to bytes.
pub fn render<I>(prov: &Provenance, header: &[&str], rows: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut out = Vec::new();
    for (k, v) in &prov.entries {
        out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv: {e}")))
}

pub fn write_table<I>(path: &Path, prov: &Provenance, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let bytes = render(prov, header, rows)?;
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn read_table(path: &Path) -> CliResult<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_table(&text).map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_table(text: &str) -> CliResult<Table> {
    let mut meta = BTreeMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').split_once(':') {
            meta.insert(k.trim().to_string(), v.trim().to_string());
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| CliError::Usage(format!("csv: {e}")))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(CliError::Usage("missing header row".into()));
    }
    let rows = r
        .records()
        .map(|rec| {
            rec.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Usage(format!("csv: {e}")))
        })
        .collect::<CliResult<Vec<Vec<String>>>>()?;
    Ok(Table { meta, header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1.86), "1.86");
        assert_eq!(fmt_num(41.616346325868), "41.6163463259");
        assert_eq!(fmt_num(-0.0031158491668), "-0.0031158491668");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.5e-9), "2.5e-9");
        assert_eq!(fmt_num(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt_num(123456789012.0), "123456789012");
        assert_eq!(fmt_num(f64::NAN), "NaN");
    }

    #[test]
    fn formatted_values_parse_back_to_twelve_digits() {
        for &x in &[std::f64::consts::PI, -1e-7 / 3.0, 12345.678901234567, 9.9999999999999] {
            let y: f64 = fmt_num(x).parse().unwrap();
            assert!(((x - y) / x).abs() < 5e-12, "{x} -> {y}");
        }
    }

    #[test]
    fn render_and_parse_round_trip() {
        let mut prov = Provenance::new("bands", &RunConfig::default()).unwrap();
        prov.push("sweep_value", "0.006");
        let bytes = render(&prov, &["a", "b"], vec![vec!["1".into(), "2".into()]]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("# generator: polariton "));
        let t = parse_table(&text).unwrap();
        assert_eq!(t.header, vec!["a", "b"]);
        assert_eq!(t.rows, vec![vec!["1".to_string(), "2".to_string()]]);
        assert_eq!(t.meta["sweep_axis"], "lambda");
        assert_eq!(t.meta["sweep_value"], "0.006");
        assert_eq!(t.meta["config_sha256"].len(), 64);
    }
}
