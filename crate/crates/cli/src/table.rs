use std::fmt::Write as _;

use downtime_core::io::format_significant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Text,
}

/// A named-column result table; every command prints one or more of these.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Single-row table from `(column, value)` pairs.
    pub fn record(pairs: Vec<(&str, String)>) -> Self {
        let mut t = Self::new(&pairs.iter().map(|(k, _)| *k).collect::<Vec<_>>());
        t.push(pairs.into_iter().map(|(_, v)| v).collect());
        t
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Text if self.rows.len() == 1 => self.render_vertical(),
            Format::Text => self.render_columns(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        let line = |cells: &[String]| cells.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",");
        out.push_str(&line(&self.columns));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }

    fn render_vertical(&self) -> String {
        let width = self.columns.iter().map(String::len).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in self.columns.iter().zip(&self.rows[0]) {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }

    fn render_columns(&self) -> String {
        let mut widths: Vec<usize> = self.columns.iter().map(String::len).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[String]| {
            let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        line(&self.columns);
        for r in &self.rows {
            line(r);
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn num(x: f64) -> String {
    format_significant(x, 12)
}

pub fn print_tables(tables: &[Table], format: Format) {
    let rendered: Vec<String> = tables.iter().map(|t| t.render(format)).collect();
    print!("{}", rendered.join("\n"));
}
