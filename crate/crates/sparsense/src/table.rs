//! CSV output: UTF-8, header first, LF line endings, floats with 9
//! significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
#[error("cannot write {path}: {source}")]
pub struct WriteError {
    pub path: String,
    #[source]
    pub source: csv::Error,
}

/// Decimal rendering with 9 significant digits.
///
/// Values with a decimal exponent in `[-5, 15)` print positionally with
/// trailing zeros trimmed; others use `d.dddddddde±x`. Zero prints as `0`,
/// non-finite values as `NaN`, `inf`, `-inf`.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}"))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// One CSV file: a header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }

    fn write_to<W: Write>(&self, sink: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<(), WriteError> {
        let err = |source| WriteError { path: path.display().to_string(), source };
        let file = File::create(path).map_err(|e| err(e.into()))?;
        self.write_to(BufWriter::new(file)).map_err(err)
    }
}

/// `<dir>/<stem>.aggregate.csv` next to `out`.
pub fn aggregate_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.aggregate.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_float(-2.0 / 3.0), "-0.666666667");
        assert_eq!(fmt_float(123456.7891234), "123456.789");
        assert_eq!(fmt_float(1e-7), "1e-7");
        assert_eq!(fmt_float(1.23456789012e-9), "1.23456789e-9");
        assert_eq!(fmt_float(3.0), "3");
        assert_eq!(fmt_float(12.5), "12.5");
        assert_eq!(fmt_float(0.000123456789123), "0.000123456789");
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }

    #[test]
    fn header_only_and_single_row() {
        let mut t = Table::new(&["a", "b"]);
        assert_eq!(t.to_bytes(), b"a,b\n");
        t.push(vec!["x".into(), fmt_float(0.25)]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "a,b\nx,0.25\n");
    }

    #[test]
    fn aggregate_sibling() {
        assert_eq!(aggregate_path(Path::new("/tmp/run/sweep.csv")), PathBuf::from("/tmp/run/sweep.aggregate.csv"));
    }
}
