use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// What every output file records about the run that produced it.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, seed: u64) -> Self {
        Provenance {
            command: command.to_string(),
            seed,
            config: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.to_string(), value.to_string()));
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("tool".to_string(), format!("fhp {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), self.command.clone()),
            ("run_seed".to_string(), self.seed.to_string()),
        ];
        v.extend(
            self.config
                .iter()
                .map(|(k, val)| (format!("config.{k}"), val.replace(['\n', '\r'], " "))),
        );
        v
    }

    /// `# key=value` comment block.
    pub fn header(&self) -> String {
        self.pairs()
            .iter()
            .map(|(k, v)| format!("# {k}={v}\n"))
            .collect()
    }

    pub fn get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
        pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Header pairs from the leading `# key=value` lines of a text file.
pub fn read_header(text: &str) -> Vec<(String, String)> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Files of one command, written only once everything has been produced.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, String)>,
}

impl Outputs {
    pub fn add(&mut self, path: PathBuf, contents: String) {
        self.files.push((path, contents));
    }

    /// Write each file to a temporary sibling, then rename into place.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut staged = Vec::new();
        for (path, contents) in &self.files {
            staged.push((stage(path, contents)?, path.clone()));
        }
        let mut written = Vec::new();
        for (tmp, path) in staged {
            tmp.persist(&path)
                .with_context(|| format!("cannot write {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn stage(path: &Path, contents: &str) -> Result<tempfile::NamedTempFile> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".fhp-")
        .tempfile_in(dir)
        .with_context(|| format!("cannot stage a file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    Ok(tmp)
}

/// Single-file atomic write.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    stage(path, contents)?
        .persist(path)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
