//! Run directories: `<out>/<command>/<name>/` holding the resolved config, the data files
//! and a `MANIFEST` of SHA-256 hashes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use netwhittle::graphs::Edge;
use netwhittle::SymmetricMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONFIG_ECHO: &str = "config.resolved.toml";
pub const MANIFEST: &str = "MANIFEST";

pub struct RunDir {
    dir: PathBuf,
    files: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl RunDir {
    pub fn create(root: &Path, command: &str, name: &str) -> CliResult<Self> {
        if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
            return Err(CliError::Config(format!("name `{name}` is not a valid directory name")));
        }
        let dir = root.join(command).join(name);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write_bytes(&mut self, file: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(file);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.files.push(file.to_string());
        Ok(())
    }

    /// Buffers the output of `f` and writes it as `file`.
    pub fn write_with(&mut self, file: &str, f: impl FnOnce(&mut Vec<u8>) -> CliResult<()>) -> CliResult<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(file, &buf)
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{file}: {e}")))?;
        text.push('\n');
        self.write_bytes(file, text.as_bytes())
    }

    pub fn write_matrix(&mut self, file: &str, m: &SymmetricMatrix) -> CliResult<()> {
        self.write_with(file, |buf| write_matrix_csv(buf, m).map_err(|e| CliError::Io(format!("{file}: {e}"))))
    }

    pub fn write_edges(&mut self, file: &str, edges: &[Edge]) -> CliResult<()> {
        let mut text = String::from("i,j\n");
        for (i, j) in edges {
            text.push_str(&format!("{i},{j}\n"));
        }
        self.write_bytes(file, text.as_bytes())
    }

    /// Writes the hash list of everything written so far, sorted by file name.
    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.files.sort();
        self.files.dedup();
        let mut text = String::new();
        for f in &self.files {
            let path = self.dir.join(f);
            let bytes = fs::read(&path).map_err(|e| io_err(&path, e))?;
            text.push_str(&format!("{}  {f}\n", hex::encode(Sha256::digest(&bytes))));
        }
        let path = self.dir.join(MANIFEST);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(self.dir)
    }
}

/// Dense CSV, one row per line, shortest round-trip float formatting.
pub fn write_matrix_csv<W: Write>(mut w: W, m: &SymmetricMatrix) -> std::io::Result<()> {
    let p = m.dim();
    for i in 0..p {
        let row: Vec<String> = (0..p).map(|j| format!("{}", m.get(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a dense symmetric matrix written by [`write_matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> CliResult<SymmetricMatrix> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let row = t.split(',').map(|f| f.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>().map_err(|_| {
            netwhittle::Error::Parse { line: k + 1, msg: format!("{}: non-numeric field", path.display()) }
        })?;
        rows.push(row);
    }
    let p = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(netwhittle::Error::NonSquare { rows: p, cols: r.len() }.into());
    }
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate().take(i) {
            if v != rows[j][i] {
                let gap = (v - rows[j][i]).abs();
                return Err(netwhittle::Error::AsymmetricBeyondTolerance { row: i, col: j, gap }.into());
            }
        }
    }
    Ok(SymmetricMatrix::from_fn(p, |i, j| rows[i][j]))
}
