//! Run directories.
//!
//! Every command writes its artifacts into a fresh temporary directory inside
//! the store root, adds `manifest.json`, and renames the directory into place
//! in one step, so readers never observe a half-written run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const STORE_ENV: &str = "STOCHPLAN_STORE";
pub const DEFAULT_STORE: &str = "runs";
pub const MANIFEST: &str = "manifest.json";

const MODULES: [&str; 7] = ["weather", "performance", "router", "stochastic", "predict", "harness", "schedule"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub created_at: String,
    pub config_hash: String,
    /// Every artifact except the manifest itself, sorted by path.
    pub files: Vec<FileEntry>,
    pub module_versions: BTreeMap<String, String>,
}

/// Short listing used by the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub command: String,
    pub created_at: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn module_versions() -> BTreeMap<String, String> {
    let core = stochplan_core::VERSION.to_string();
    let mut m: BTreeMap<String, String> = MODULES.iter().map(|n| (n.to_string(), core.clone())).collect();
    m.insert("cli_api".into(), env!("CARGO_PKG_VERSION").into());
    m
}

/// Run ids double as directory names, so they are restricted to a safe
/// alphabet and may not start with a dot.
pub fn valid_run_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    /// `--store`, else the environment variable, else `./runs`.
    pub fn resolve(flag: Option<PathBuf>) -> Self {
        Self::new(flag.or_else(|| std::env::var_os(STORE_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(DEFAULT_STORE)))
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_dir(&self, run_id: &str) -> Option<PathBuf> {
        valid_run_id(run_id).then(|| self.root.join(run_id))
    }

    /// Lets `fill` write artifacts into a temporary directory, then adds the
    /// manifest and moves the directory to `<root>/<run_id>`, replacing any
    /// earlier run with the same id.
    pub fn commit<F>(&self, run_id: &str, command: &str, config_hash: &str, fill: F) -> Result<(PathBuf, RunManifest), CliError>
    where
        F: FnOnce(&Path) -> Result<(), CliError>,
    {
        if !valid_run_id(run_id) {
            return Err(CliError::Config(format!("invalid run id {run_id:?}")));
        }
        fs::create_dir_all(&self.root)?;
        let tmp = tempfile::Builder::new().prefix(".tmp-").tempdir_in(&self.root)?;
        fill(tmp.path())?;
        let manifest = RunManifest {
            run_id: run_id.to_string(),
            command: command.to_string(),
            created_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            config_hash: config_hash.to_string(),
            files: hash_files(tmp.path())?,
            module_versions: module_versions(),
        };
        fs::write(tmp.path().join(MANIFEST), serde_json::to_vec_pretty(&manifest)?)?;

        let target = self.root.join(run_id);
        let staged = tmp.keep();
        if target.exists() {
            let old = tempfile::Builder::new().prefix(".old-").tempdir_in(&self.root)?.keep();
            fs::remove_dir(&old)?;
            fs::rename(&target, &old)?;
            fs::rename(&staged, &target)?;
            fs::remove_dir_all(&old)?;
        } else {
            fs::rename(&staged, &target)?;
        }
        Ok((target, manifest))
    }

    pub fn manifest(&self, run_id: &str) -> Result<Option<RunManifest>, CliError> {
        let Some(dir) = self.run_dir(run_id) else { return Ok(None) };
        match fs::read(dir.join(MANIFEST)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Committed runs sorted by id. Directories without a manifest are
    /// skipped.
    pub fn list(&self) -> Result<Vec<RunSummary>, CliError> {
        let entries = match fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for entry in entries {
            let name = entry?.file_name().to_string_lossy().into_owned();
            if let Some(m) = self.manifest(&name)? {
                out.push(RunSummary { run_id: m.run_id, command: m.command, created_at: m.created_at });
            }
        }
        out.sort_by(|a, b| a.run_id.cmp(&b.run_id));
        Ok(out)
    }

    /// Reads one artifact of a run, `None` when either does not exist.
    pub fn read(&self, run_id: &str, file: &str) -> Result<Option<Vec<u8>>, CliError> {
        let Some(dir) = self.run_dir(run_id) else { return Ok(None) };
        if !dir.join(MANIFEST).is_file() {
            return Ok(None);
        }
        match fs::read(dir.join(file)) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Checks every listed file against its recorded hash.
    pub fn verify(&self, run_id: &str) -> Result<bool, CliError> {
        let Some(m) = self.manifest(run_id)? else { return Ok(false) };
        let dir = self.root.join(run_id);
        for f in &m.files {
            match fs::read(dir.join(&f.path)) {
                Ok(bytes) if sha256_hex(&bytes) == f.sha256 && bytes.len() as u64 == f.bytes => {}
                _ => return Ok(false),
            }
        }
        Ok(true)
    }
}

fn hash_files(dir: &Path) -> Result<Vec<FileEntry>, CliError> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<FileEntry>) -> Result<(), CliError> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(base, &path, out)?;
            } else {
                let bytes = fs::read(&path)?;
                let rel = path.strip_prefix(base).map_err(|e| CliError::Other(e.to_string()))?;
                let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                out.push(FileEntry { path: rel, bytes: bytes.len() as u64, sha256: sha256_hex(&bytes) });
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_writes_manifest_and_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let (path, m) = store
            .commit("r1", "plan", "abc", |d| {
                fs::write(d.join("a.json"), b"{}")?;
                fs::create_dir(d.join("sub"))?;
                fs::write(d.join("sub/b.txt"), b"x")?;
                Ok(())
            })
            .unwrap();
        assert!(path.join(MANIFEST).is_file());
        let paths: Vec<&str> = m.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.json", "sub/b.txt"]);
        assert_eq!(m.files[0].sha256, sha256_hex(b"{}"));
        assert!(store.verify("r1").unwrap());
        assert!(chrono::DateTime::parse_from_rfc3339(&m.created_at).is_ok());

        store.commit("r1", "plan", "def", |d| Ok(fs::write(d.join("c.json"), b"[]")?)).unwrap();
        assert!(!path.join("a.json").exists());
        assert_eq!(store.manifest("r1").unwrap().unwrap().config_hash, "def");
        // no temporary leftovers
        let names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into()).collect();
        assert_eq!(names, ["r1"]);
    }

    #[test]
    fn failed_fill_leaves_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let r = store.commit("r2", "plan", "h", |_| Err(CliError::Infeasible("nope".into())));
        assert!(r.is_err());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
        assert!(store.list().unwrap().is_empty());
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let (path, _) = store.commit("r3", "plan", "h", |d| Ok(fs::write(d.join("a"), b"1")?)).unwrap();
        fs::write(path.join("a"), b"2").unwrap();
        assert!(!store.verify("r3").unwrap());
    }

    #[test]
    fn run_ids_are_restricted() {
        assert!(valid_run_id("splan-0123abcd"));
        assert!(!valid_run_id("../etc"));
        assert!(!valid_run_id(".tmp-x"));
        assert!(!valid_run_id(""));
        assert!(Store::new("/x").run_dir("a/b").is_none());
    }
}
