//! CSV output with embedded run metadata.
//!
//! Every file starts with `#`-prefixed comment lines echoing the full
//! parameter set and seed, then a header row. Floats use Rust's shortest
//! round-trip formatting, so identical runs produce identical bytes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct CsvFile {
    out: BufWriter<File>,
}

impl CsvFile {
    /// Create `name` under `dir` with metadata lines (sorted by key) and a
    /// header row.
    pub fn create(
        dir: &Path,
        name: &str,
        params: &[(&str, String)],
        header: &str,
    ) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join(name))?);
        let mut sorted: Vec<_> = params.to_vec();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        for (k, v) in sorted {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "{header}")?;
        Ok(Self { out })
    }

    pub fn row(&mut self, fields: &[String]) -> std::io::Result<()> {
        let quoted: Vec<String> = fields
            .iter()
            .map(|f| {
                if f.contains(',') || f.contains('"') {
                    format!("\"{}\"", f.replace('"', "\"\""))
                } else {
                    f.clone()
                }
            })
            .collect();
        writeln!(self.out, "{}", quoted.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Shortest round-trip decimal form of a float.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x}")
    }
}

pub fn hex_encode(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
