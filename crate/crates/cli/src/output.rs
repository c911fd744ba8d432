use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use tempfile::NamedTempFile;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_echo: serde_json::Value,
    pub master_seed: u64,
    pub artifact_version: String,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config_echo: impl Serialize, master_seed: u64) -> anyhow::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            config_echo: serde_json::to_value(config_echo)?,
            master_seed,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
        })
    }
}

/// Files written into a directory all at once: each is staged in a temporary
/// file beside its target, and nothing is renamed into place until every
/// file has been written.
pub struct Staging {
    dir: PathBuf,
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staging {
    pub fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn add(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>) -> anyhow::Result<()> {
        let target = self.dir.join(name);
        let mut tmp = NamedTempFile::new_in(&self.dir)
            .with_context(|| format!("output directory {} is not writable", self.dir.display()))?;
        {
            let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
            write(&mut buf)?;
            buf.flush().with_context(|| format!("cannot write {}", target.display()))?;
        }
        self.files.push((tmp, target));
        Ok(())
    }

    pub fn add_json(&mut self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        self.add(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Stages the manifest, listing every file added so far, and moves all
    /// files into place.
    pub fn commit(mut self, mut manifest: RunManifest) -> anyhow::Result<Vec<PathBuf>> {
        manifest.outputs = self.files.iter().map(|(_, p)| p.clone()).collect();
        manifest.outputs.push(self.dir.join(MANIFEST));
        let outputs = manifest.outputs.clone();
        self.add_json(MANIFEST, &manifest)?;
        for (tmp, target) in self.files {
            tmp.persist(&target)
                .with_context(|| format!("cannot write {}", target.display()))?;
        }
        Ok(outputs)
    }
}
