//! Plain CSV emission shared by every exporter.

use std::fmt::Write as _;

/// Full-precision float: 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x.is_nan() {
        return "nan".into();
    }
    format!("{x:.16e}")
}

/// Human-readable float: 6 significant digits.
pub fn fmt_short(x: f64) -> String {
    if !x.is_finite() {
        return fmt_full(x);
    }
    format!("{x:.5e}")
}

/// Builds a comma-separated document with `\n` line endings.
pub struct CsvBuilder {
    out: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        CsvBuilder { out, columns: header.len() }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.out.push(',');
            }
            self.out.push_str(c.as_ref());
        }
        self.out.push('\n');
    }

    pub fn numeric_row(&mut self, values: &[f64]) {
        let mut line = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            let _ = write!(line, "{}", fmt_full(*v));
        }
        debug_assert_eq!(values.len(), self.columns);
        self.out.push_str(&line);
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}
