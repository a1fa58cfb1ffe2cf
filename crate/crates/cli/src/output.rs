//! Output directory bookkeeping: every command writes through [`Outputs`],
//! which records each file for the run manifest and deletes everything it
//! wrote if the command fails before [`Outputs::finish`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const TOOL: &str = "tergmix";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<(String, u64)>,
    committed: bool,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            written: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let bytes = contents.as_ref();
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push((name.to_string(), bytes.len() as u64));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Writes the provenance record and the manifest, then keeps the outputs.
    pub fn finish(mut self, command: &str, config: Value) -> Result<()> {
        let provenance = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": command,
            "config": config,
        });
        self.write_json("provenance.json", &provenance)?;
        let files: Vec<Value> = self
            .written
            .iter()
            .map(|(path, bytes)| json!({ "path": path, "bytes": bytes }))
            .collect();
        let manifest = json!({
            "tool": TOOL,
            "version": VERSION,
            "command": command,
            "files": files,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for (name, _) in &self.written {
            let _ = fs::remove_file(self.dir.join(name));
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}
