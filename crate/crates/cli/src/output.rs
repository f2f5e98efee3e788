//! Output directory that cleans up after a failed run.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use sha2::{Digest, Sha256};

use crate::manifest::{FileEntry, RunManifest, MANIFEST_NAME};

/// Tracks files written by one run. Dropping it without [`OutputDir::commit`]
/// removes them again, along with the directory if this run created it.
pub struct OutputDir {
    root: PathBuf,
    created: bool,
    entries: Vec<FileEntry>,
    committed: bool,
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        let created = !root.exists();
        fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        // Probe writability before any work starts.
        let probe = root.join(".keplerstat-probe");
        fs::write(&probe, b"")
            .with_context(|| format!("output directory {} is not writable", root.display()))?;
        fs::remove_file(&probe).ok();
        Ok(Self {
            root: root.to_path_buf(),
            created,
            entries: Vec::new(),
            committed: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    /// Writes `name` through `fill` and records its hash.
    pub fn write<F>(&mut self, name: &str, fill: F) -> anyhow::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut buf = Vec::new();
        fill(&mut buf).with_context(|| format!("rendering {name}"))?;
        let path = self.root.join(name);
        // Record first so a failed write is still cleaned up.
        self.entries.retain(|e| e.name != name);
        self.entries.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
            bytes: buf.len() as u64,
        });
        let mut out = BufWriter::new(
            fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        out.write_all(&buf)
            .and_then(|_| out.flush())
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn entries(&self) -> &[FileEntry] {
        &self.entries
    }

    /// Writes the manifest and keeps every output.
    pub fn commit(mut self, mut manifest: RunManifest) -> anyhow::Result<PathBuf> {
        manifest.files = self.entries.clone();
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = self.root.join(MANIFEST_NAME);
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        self.committed = true;
        Ok(path)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for e in &self.entries {
            fs::remove_file(self.root.join(&e.name)).ok();
        }
        if self.created {
            fs::remove_dir(&self.root).ok();
        }
    }
}
