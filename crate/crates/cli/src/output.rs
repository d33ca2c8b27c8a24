use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::AppError;

/// Output files buffered in memory and committed together, so a failing
/// command leaves nothing behind.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn csv<F>(&mut self, name: &str, write: F) -> Result<(), AppError>
    where
        F: FnOnce(&mut Vec<u8>) -> metareduce::Result<()>,
    {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), AppError> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(AppError::internal)?;
        buf.push(b'\n');
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn commit(self) -> io::Result<()> {
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            let tmp = path.with_file_name(format!(
                ".{}.tmp",
                path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
            ));
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(())
    }
}
