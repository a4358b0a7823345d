//! Output directory handling, atomic writes and run manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::fail::{CliError, CliResult};

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(path: &str) -> CliResult<Self> {
        let root = PathBuf::from(path);
        fs::create_dir_all(&root).map_err(|e| CliError::io(format!("creating {}: {e}", root.display())))?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    /// Renders into memory, then writes `name` via a temporary sibling and a
    /// rename so readers never see a partial file.
    pub fn write_with<F>(&mut self, name: &str, render: F) -> CliResult<()>
    where
        F: FnOnce(&mut Vec<u8>) -> CliResult<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        let target = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp{}", std::process::id()));
        fs::write(&tmp, &buf)
            .and_then(|_| fs::rename(&tmp, &target))
            .map_err(|e| {
                let _ = fs::remove_file(&tmp);
                CliError::io(format!("writing {}: {e}", target.display()))
            })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_str(&mut self, name: &str, text: &str) -> CliResult<()> {
        self.write_with(name, |b| {
            b.extend_from_slice(text.as_bytes());
            Ok(())
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write_with(name, |b| {
            serde_json::to_writer_pretty(&mut *b, value)?;
            b.push(b'\n');
            Ok(())
        })
    }

    /// `<command>.manifest.json`: the effective configuration, the files
    /// written so far and any command-specific extras.
    pub fn manifest(&mut self, command: &str, config: &BTreeMap<String, Value>, extra: Value) -> CliResult<()> {
        let m = json!({
            "command": command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "outputs": self.written.clone(),
            "results": extra,
        });
        self.write_json(&format!("{command}.manifest.json"), &m)
    }
}

pub fn open_input(path: &str) -> CliResult<BufReader<File>> {
    File::open(Path::new(path))
        .map(BufReader::new)
        .map_err(|e| CliError::io(format!("opening {path}: {e}")))
}
