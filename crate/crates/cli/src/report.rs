//! Report plumbing shared by the subcommands: input digests, the JSON
//! document writer and the plain-text table.

use std::io::Write;
use std::path::{Path, PathBuf};

use jd_diag::{Vector, C64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::mm::{self, Header, MatrixFile};

/// Identity of one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub rows: usize,
    pub cols: usize,
    pub header: Header,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and parses a Matrix Market file, returning it with its digest.
pub fn load(path: &Path, role: &str) -> Result<(MatrixFile, InputDigest), CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        source: mm::MmError::Banner(format!("not UTF-8: {e}")),
    })?;
    let file = mm::parse(text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let digest = InputDigest {
        role: role.to_string(),
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
        rows: file.matrix.rows(),
        cols: file.matrix.cols(),
        header: file.header,
    };
    Ok((file, digest))
}

/// Where the machine-readable document goes.
#[derive(Debug, Clone, Default)]
pub struct Sink {
    pub out: Option<PathBuf>,
}

impl Sink {
    pub fn emit<T: Serialize>(&self, doc: &T, stdout: &mut dyn Write) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(doc).map_err(std::io::Error::other)?;
        text.push('\n');
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            }),
            None => Ok(stdout.write_all(text.as_bytes())?),
        }
    }
}

/// Two-column plain-text table.
#[derive(Debug, Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn row(&mut self, key: impl Into<String>, value: impl std::fmt::Display) -> &mut Self {
        self.rows.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let width = self.rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.rows {
            let pad = width - k.chars().count();
            s.push_str(&format!("{k}{}  {v}\n", " ".repeat(pad)));
        }
        s
    }
}

pub fn fmt_c64(z: C64) -> String {
    if z.im == 0.0 {
        format!("{:.15e}", z.re)
    } else {
        format!(
            "{:.15e} {} {:.15e}i",
            z.re,
            if z.im < 0.0 { '-' } else { '+' },
            z.im.abs()
        )
    }
}

pub fn fmt_vec(v: &Vector) -> String {
    let parts: Vec<String> = v.iter().map(|z| fmt_c64(*z)).collect();
    format!("[{}]", parts.join(", "))
}
