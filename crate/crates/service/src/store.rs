//! In-memory session store with optional on-disk persistence of each session's history.

use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use tilexplore_core::ingestion::{load_csv, load_csv_reader, make_toy, LoadOptions, LoadReport, Manifest, ToyParams};
use tilexplore_core::session::{replay, SessionDocument};
use tilexplore_core::synthetic::{make_districts, DistrictParams};
use tilexplore_core::{rng, DataMatrix, Error, Session};

use crate::error::{ApiError, ApiResult};

/// A manifest given inline or as a path relative to the data directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestSource {
    Ref(String),
    Inline(Manifest),
}

/// Body of `POST /sessions`. Exactly one of `csv_ref`, `csv` and `synthetic` is set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// CSV path relative to the data directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv_ref: Option<String>,
    /// Inline CSV text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    /// `districts` or `toy`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<ManifestSource>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsample_n: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct StoreConfig {
    pub data_dir: Option<PathBuf>,
    /// Write `sessions/{id}.json` under the data directory after every mutation.
    pub persist: bool,
}

pub struct Entry {
    pub session: RwLock<Session>,
    pub source: CreateSession,
}

pub struct Store {
    config: StoreConfig,
    sessions: RwLock<BTreeMap<String, Arc<Entry>>>,
    created: AtomicU64,
}

fn relative_path(base: Option<&Path>, rel: &str) -> ApiResult<PathBuf> {
    let base = base.ok_or_else(|| ApiError::bad_request("file references need the service to run with --data-dir"))?;
    let p = Path::new(rel);
    if p.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(ApiError::bad_request(format!("`{rel}` must be a relative path inside the data directory")));
    }
    Ok(base.join(p))
}

impl Store {
    pub fn new(config: StoreConfig) -> Self {
        Store { config, sessions: RwLock::new(BTreeMap::new()), created: AtomicU64::new(0) }
    }

    pub fn config(&self) -> &StoreConfig {
        &self.config
    }

    /// Loads the data a create request points at.
    pub fn load(&self, req: &CreateSession) -> ApiResult<(DataMatrix, Option<LoadReport>)> {
        let base = self.config.data_dir.as_deref();
        let sources = [req.csv_ref.is_some(), req.csv.is_some(), req.synthetic.is_some()];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(ApiError::bad_request("give exactly one of `csv_ref`, `csv` and `synthetic`"));
        }
        if let Some(kind) = &req.synthetic {
            let data = match kind.as_str() {
                "districts" => make_districts(&DistrictParams::default()),
                "toy" => make_toy(&ToyParams::default()),
                other => return Err(ApiError::bad_request(format!("unknown synthetic dataset `{other}`"))),
            }
            .map_err(ApiError::ingestion)?;
            return Ok((data, None));
        }
        let mut options = LoadOptions { subsample_n: req.subsample_n, seed: req.seed, ..LoadOptions::default() };
        match &req.manifest {
            Some(ManifestSource::Inline(m)) => options = options.with_manifest(m),
            Some(ManifestSource::Ref(r)) => {
                let m = Manifest::from_path(relative_path(base, r)?).map_err(ApiError::ingestion)?;
                options = options.with_manifest(&m);
            }
            None => {}
        }
        let loaded = match (&req.csv_ref, &req.csv) {
            (Some(r), _) => load_csv(relative_path(base, r)?, &options),
            (_, Some(text)) => load_csv_reader(text.as_bytes(), &options),
            _ => unreachable!(),
        }
        .map_err(ApiError::ingestion)?;
        Ok((loaded.data, Some(loaded.report)))
    }

    /// Creates a session. Ids derive from the seed, the data shape and a creation counter.
    pub fn create(&self, req: CreateSession) -> ApiResult<(String, Option<LoadReport>)> {
        let (data, report) = self.load(&req)?;
        if let Some(f) = req.floor {
            if !(f > 0.0 && f < 1.0) {
                return Err(ApiError::unprocessable(format!("floor must lie in (0, 1), got {f}")));
            }
        }
        let (n, m) = data.shape();
        let counter = self.created.fetch_add(1, Ordering::SeqCst);
        let id = format!("{:016x}", rng::derive(req.seed, &[n as u64, m as u64, counter]));
        let mut session = Session::from_shared(Arc::new(data), req.seed).with_id(id.clone());
        if let Some(f) = req.floor {
            session = session.with_floor(f);
        }
        let entry = Arc::new(Entry { session: RwLock::new(session), source: req });
        self.persist(&entry)?;
        self.sessions.write().unwrap().insert(id.clone(), entry);
        Ok((id, report))
    }

    pub fn get(&self, id: &str) -> ApiResult<Arc<Entry>> {
        self.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn remove(&self, id: &str) -> ApiResult<()> {
        self.sessions.write().unwrap().remove(id).map(|_| ()).ok_or_else(|| ApiError::not_found(id))?;
        if let Some(dir) = self.sessions_dir() {
            for ext in ["json", "source.json"] {
                let _ = std::fs::remove_file(dir.join(format!("{id}.{ext}")));
            }
        }
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        self.sessions.read().unwrap().keys().cloned().collect()
    }

    fn sessions_dir(&self) -> Option<PathBuf> {
        self.config.persist.then(|| self.config.data_dir.as_ref().map(|d| d.join("sessions"))).flatten()
    }

    /// Writes the session document and its data source when persistence is on.
    pub fn persist(&self, entry: &Entry) -> ApiResult<()> {
        let Some(dir) = self.sessions_dir() else { return Ok(()) };
        let session = entry.session.read().unwrap();
        let io = |e: std::io::Error| ApiError::from(Error::Io(e));
        std::fs::create_dir_all(&dir).map_err(io)?;
        let doc = session.to_document(Some(format!("{}.source.json", session.id())));
        let write = |name: String, value: String| std::fs::write(dir.join(name), value).map_err(io);
        write(format!("{}.source.json", session.id()), serde_json::to_string_pretty(&entry.source).unwrap())?;
        write(format!("{}.json", session.id()), serde_json::to_string_pretty(&doc).unwrap())
    }

    /// Rebuilds persisted sessions. Returns the ids restored and the files that failed.
    pub fn restore(&self) -> (Vec<String>, Vec<(PathBuf, String)>) {
        let (mut ok, mut failed) = (Vec::new(), Vec::new());
        let Some(dir) = self.sessions_dir() else { return (ok, failed) };
        let Ok(entries) = std::fs::read_dir(&dir) else { return (ok, failed) };
        let mut docs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json") && !p.to_string_lossy().ends_with(".source.json"))
            .collect();
        docs.sort();
        for path in docs {
            match self.restore_one(&dir, &path) {
                Ok(id) => ok.push(id),
                Err(e) => failed.push((path, e)),
            }
        }
        (ok, failed)
    }

    fn restore_one(&self, dir: &Path, path: &Path) -> Result<String, String> {
        let doc: SessionDocument = serde_json::from_str(&std::fs::read_to_string(path).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let source_name = doc.data_ref.clone().ok_or("document has no data reference")?;
        let source: CreateSession =
            serde_json::from_str(&std::fs::read_to_string(dir.join(source_name)).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
        let (data, _) = self.load(&source).map_err(|e| e.body.message)?;
        let session = replay(Arc::new(data), &doc).map_err(|e| e.to_string())?;
        let id = session.id().to_string();
        self.created.fetch_add(1, Ordering::SeqCst);
        self.sessions.write().unwrap().insert(id.clone(), Arc::new(Entry { session: RwLock::new(session), source }));
        Ok(id)
    }
}
