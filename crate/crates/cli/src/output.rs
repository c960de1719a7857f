//! Atomic file output confined to one directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::CliError;

pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)?;
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    /// Writes `name` through a temporary file in the same directory, then
    /// renames it into place so readers never see a partial file.
    pub fn write<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
    {
        let target = self.root.join(name);
        let tmp = NamedTempFile::new_in(&self.root)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w)?;
            w.flush()?;
        }
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Io(e.error))?;
        log::info!("wrote {}", target.display());
        self.written.push(target);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(annodiff::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
