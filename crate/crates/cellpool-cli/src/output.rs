//! Stdout rendering: one tabular payload, three encodings.
//!
//! Every command produces a `Report` (provenance + columns + string cells)
//! and picks nothing else about presentation. `table` is for humans, `csv`
//! and `json` for machines; the cells are byte-identical across encodings,
//! so parsing the CSV and the JSON yields the same payload. Numbers are
//! written in shortest round-trip form, never truncated for display.

use std::io::{self, Write};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Enough to reproduce the output exactly: tool version, subcommand, a
/// digest of the effective inputs, and the seed when randomness is in play.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: &str, input_sha256: String, seed: Option<u64>) -> Provenance {
        Provenance {
            tool: format!("cellpool {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            input_sha256,
            seed,
        }
    }

    /// `# key: value` comment lines for table and CSV headers.
    pub fn comment_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# tool: {}", self.tool),
            format!("# command: {}", self.command),
            format!("# input_sha256: {}", self.input_sha256),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("# seed: {seed}"));
        }
        lines
    }
}

/// Hex SHA-256 of the canonical JSON form of the effective inputs.
pub fn input_digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("inputs serialize");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn print(&self, format: Format) -> io::Result<()> {
        let stdout = io::stdout();
        let mut out = stdout.lock();
        match format {
            Format::Table => self.print_table(&mut out),
            Format::Csv => self.print_csv(&mut out),
            Format::Json => {
                let text = serde_json::to_string_pretty(self).expect("report serializes");
                writeln!(out, "{text}")
            }
        }
    }

    fn print_table(&self, out: &mut impl Write) -> io::Result<()> {
        for line in self.provenance.comment_lines() {
            writeln!(out, "{line}")?;
        }
        let mut widths: Vec<usize> = self.columns.iter().map(|c| c.len()).collect();
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                widths[i] = widths[i].max(cell.len());
            }
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", header.join("  ").trim_end())?;
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(out, "{}", rule.join("  "))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(out, "{}", cells.join("  ").trim_end())?;
        }
        Ok(())
    }

    fn print_csv(&self, out: &mut impl Write) -> io::Result<()> {
        for line in self.provenance.comment_lines() {
            writeln!(out, "{line}")?;
        }
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        writer.flush()
    }
}

/// Shortest f64 text that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}
