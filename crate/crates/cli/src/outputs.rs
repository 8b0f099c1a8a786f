//! Output bookkeeping: registered files are deleted unless the command
//! finishes and calls [`Outputs::commit`].

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

pub struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    /// Path for `name` inside the output directory, registered for cleanup.
    pub fn file(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        if !self.files.contains(&path) {
            self.files.push(path.clone());
        }
        path
    }

    pub fn names(&self) -> Vec<String> {
        self.files
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.file(name);
        let text = serde_json::to_string_pretty(value)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Write `<command>.provenance.json` and keep every output.
    pub fn commit<C: Serialize>(mut self, command: &str, config: &C, extra: Value) -> Result<()> {
        let name = format!("{command}.provenance.json");
        self.file(&name);
        let record = serde_json::json!({
            "command": command,
            "toolkit_version": afgl_core::VERSION,
            "args": std::env::args().collect::<Vec<_>>(),
            "config": config,
            "outputs": self.names(),
            "details": extra,
        });
        self.write_json(&name, &record)?;
        self.committed = true;
        Ok(())
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = std::fs::remove_file(f);
        }
        if self.created_dir {
            let _ = std::fs::remove_dir(&self.dir);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_are_removed() {
        let root = tempfile::tempdir().unwrap();
        let dir = root.path().join("run");
        {
            let mut out = Outputs::new(&dir).unwrap();
            std::fs::write(out.file("a.txt"), "x").unwrap();
        }
        assert!(!dir.exists());
        let mut out = Outputs::new(&dir).unwrap();
        std::fs::write(out.file("a.txt"), "x").unwrap();
        out.commit("test", &serde_json::json!({}), serde_json::Value::Null).unwrap();
        assert!(dir.join("a.txt").is_file());
        assert!(dir.join("test.provenance.json").is_file());
    }
}
