use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bilinear_pdo::io::write_field;
use bilinear_pdo::SampledField;
use serde::Serialize;

/// Files written by one command, removed again unless the command completes.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
    kept: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            kept: false,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn field(&mut self, name: &str, f: &SampledField, window_id: Option<&str>) -> anyhow::Result<PathBuf> {
        let base = self.path(name);
        // Track both files before writing so a half-written pair is cleaned up too.
        self.written.push(bilinear_pdo::io::header_path(&base));
        self.written.push(bilinear_pdo::io::data_path(&base));
        write_field(&base, f, window_id)?;
        Ok(base)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<PathBuf> {
        let text = serde_json::to_string_pretty(value).context("serializing report")?;
        self.text(name, &(text + "\n"))
    }

    pub fn text(&mut self, name: &str, text: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        self.written.push(path.clone());
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn keep(mut self) -> Vec<PathBuf> {
        self.kept = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.kept {
            return;
        }
        for p in &self.written {
            if p.exists() {
                log::info!("removing partial output {}", p.display());
                let _ = fs::remove_file(p);
            }
        }
    }
}
