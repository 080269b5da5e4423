use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

pub const CONFIG_COPY: &str = "config.toml";
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

/// Entries a run may produce; cleared up front so stale files from an earlier
/// run with a different model list never mix with fresh ones.
const MANAGED: [&str; 11] = [
    "reports",
    "curves",
    "scores",
    "summary.csv",
    "confusion.csv",
    "tuning.csv",
    "run.json",
    "rejected_rows.csv",
    "movements.csv",
    "truth.json",
    CONFIG_COPY,
];

/// An output directory that carries an `INCOMPLETE` marker until
/// [`OutputDir::finish`] is called.
pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn prepare(root: &Path, config_text: &str) -> Result<Self> {
        fs::create_dir_all(root).map_err(CliError::io(root))?;
        for name in MANAGED {
            let p = root.join(name);
            let removed = if p.is_dir() {
                fs::remove_dir_all(&p)
            } else if p.exists() {
                fs::remove_file(&p)
            } else {
                Ok(())
            };
            removed.map_err(CliError::io(&p))?;
        }
        let out = OutputDir { root: root.to_path_buf() };
        out.write_string(INCOMPLETE_MARKER, "run in progress\n")?;
        out.write_string(CONFIG_COPY, config_text)?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self, rel: &str) -> Result<BufWriter<File>> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(CliError::io(parent))?;
        }
        let f = File::create(&path).map_err(CliError::io(&path))?;
        Ok(BufWriter::new(f))
    }

    pub fn write_string(&self, rel: &str, text: &str) -> Result<()> {
        let mut w = self.create(rel)?;
        w.write_all(text.as_bytes())
            .and_then(|_| w.flush())
            .map_err(CliError::io(self.root.join(rel)))
    }

    pub fn write_json<T: serde::Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(spatial_katz::Error::from)?;
        text.push('\n');
        self.write_string(rel, &text)
    }

    pub fn finish(self) -> Result<()> {
        let marker = self.root.join(INCOMPLETE_MARKER);
        fs::remove_file(&marker).map_err(CliError::io(marker))
    }

    /// Leaves the marker in place with the failure that stopped the run.
    pub fn fail(self, err: &CliError) {
        let _ = self.write_string(INCOMPLETE_MARKER, &format!("run failed: {err}\n"));
    }
}
