//! File-backed route store.
//!
//! The whole tree lives in one JSON document. Reads work against an
//! immutable snapshot; every mutation is serialized behind a single writer,
//! written to a temporary file and renamed over the original.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::document::{self, check_route_key, decode_route, encode_route, RouteDraft, SchemaError};
use crate::model::{
    parse_route_number, route_id_for, validate_path, Limits, Path, ValidationReport,
};

/// Shown when a route has no description.
pub const DESCRIPTION_PLACEHOLDER: &str = ".";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("route {0} not found")]
    NotFound(String),
    #[error("schema error at {0}")]
    Schema(SchemaError),
    #[error("route is invalid: {0}")]
    Validation(ValidationReport),
    #[error("malformed document at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<SchemaError> for StoreError {
    fn from(e: SchemaError) -> Self {
        StoreError::Schema(e)
    }
}

impl From<serde_json::Error> for StoreError {
    fn from(e: serde_json::Error) -> Self {
        StoreError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteSummary {
    pub route_id: String,
    pub description: String,
    pub waypoint_count: usize,
}

/// Top-level tree: route key to raw route record.
pub type RouteTree = BTreeMap<String, Arc<Value>>;

/// Immutable view of the tree at one point in time.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    tree: Arc<RouteTree>,
}

impl Snapshot {
    pub fn tree(&self) -> &RouteTree {
        &self.tree
    }

    pub fn draft(&self, route_id: &str) -> Result<RouteDraft, StoreError> {
        let value = self
            .tree
            .get(route_id)
            .ok_or_else(|| StoreError::NotFound(route_id.to_string()))?;
        Ok(decode_route(route_id, value)?)
    }

    pub fn load_route(&self, route_id: &str) -> Result<Path, StoreError> {
        Ok(self.draft(route_id)?.to_path()?)
    }

    pub fn list_routes(&self) -> Vec<RouteSummary> {
        let mut out: Vec<(u64, RouteSummary)> = self
            .tree
            .iter()
            .map(|(key, value)| {
                let description = value
                    .get(document::KEY_DESCRIPTION)
                    .and_then(Value::as_str)
                    .filter(|d| !d.is_empty())
                    .unwrap_or(DESCRIPTION_PLACEHOLDER)
                    .to_string();
                let waypoint_count = value
                    .get(document::KEY_PATH)
                    .and_then(Value::as_object)
                    .map_or(0, Map::len);
                (
                    parse_route_number(key).unwrap_or(u64::MAX),
                    RouteSummary {
                        route_id: key.clone(),
                        description,
                        waypoint_count,
                    },
                )
            })
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.route_id.cmp(&b.1.route_id)));
        out.into_iter().map(|(_, s)| s).collect()
    }

    pub fn next_route_id(&self) -> String {
        next_route_id_in(&self.tree)
    }

    pub fn export_tree(&self) -> String {
        let map: BTreeMap<&str, &Value> = self
            .tree
            .iter()
            .map(|(k, v)| (k.as_str(), v.as_ref()))
            .collect();
        serde_json::to_string_pretty(&map).expect("tree serializes")
    }
}

/// Whole-route replication seam to a remote document database.
pub trait RemoteSync: Send + Sync {
    fn push(&self, route_id: &str, record: &Value) -> Result<(), String>;
    fn remove(&self, route_id: &str) -> Result<(), String>;
    fn pull(&self, route_id: &str) -> Result<Option<Value>, String>;
}

#[derive(Debug, Default)]
pub struct NoopSync;

impl RemoteSync for NoopSync {
    fn push(&self, _: &str, _: &Value) -> Result<(), String> {
        Ok(())
    }
    fn remove(&self, _: &str) -> Result<(), String> {
        Ok(())
    }
    fn pull(&self, _: &str) -> Result<Option<Value>, String> {
        Ok(None)
    }
}

/// Keeps pushed routes in memory; pulls return what was pushed.
#[derive(Debug, Default)]
pub struct LoopbackSync {
    routes: Mutex<BTreeMap<String, Value>>,
}

impl LoopbackSync {
    pub fn route_ids(&self) -> Vec<String> {
        self.routes.lock().unwrap().keys().cloned().collect()
    }
}

impl RemoteSync for LoopbackSync {
    fn push(&self, route_id: &str, record: &Value) -> Result<(), String> {
        self.routes
            .lock()
            .unwrap()
            .insert(route_id.to_string(), record.clone());
        Ok(())
    }
    fn remove(&self, route_id: &str) -> Result<(), String> {
        self.routes.lock().unwrap().remove(route_id);
        Ok(())
    }
    fn pull(&self, route_id: &str) -> Result<Option<Value>, String> {
        Ok(self.routes.lock().unwrap().get(route_id).cloned())
    }
}

pub struct RouteStore {
    file: Option<PathBuf>,
    limits: Limits,
    current: RwLock<Snapshot>,
    writer: Mutex<()>,
    sync: Box<dyn RemoteSync>,
}

impl std::fmt::Debug for RouteStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RouteStore")
            .field("file", &self.file)
            .field("limits", &self.limits)
            .finish_non_exhaustive()
    }
}

impl RouteStore {
    /// A store that never touches the filesystem.
    pub fn in_memory() -> Self {
        RouteStore {
            file: None,
            limits: Limits::default(),
            current: RwLock::new(Snapshot::default()),
            writer: Mutex::new(()),
            sync: Box::new(NoopSync),
        }
    }

    /// Opens the document at `file`; a missing file is an empty store.
    pub fn open(file: impl AsRef<FsPath>) -> Result<Self, StoreError> {
        let file = file.as_ref().to_path_buf();
        let tree = match fs::read_to_string(&file) {
            Ok(text) if text.trim().is_empty() => RouteTree::new(),
            Ok(text) => parse_tree(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => RouteTree::new(),
            Err(source) => return Err(StoreError::Io { path: file, source }),
        };
        Ok(RouteStore {
            file: Some(file),
            limits: Limits::default(),
            current: RwLock::new(Snapshot {
                tree: Arc::new(tree),
            }),
            writer: Mutex::new(()),
            sync: Box::new(NoopSync),
        })
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_sync(mut self, sync: Box<dyn RemoteSync>) -> Self {
        self.sync = sync;
        self
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn file(&self) -> Option<&FsPath> {
        self.file.as_deref()
    }

    pub fn snapshot(&self) -> Snapshot {
        self.current.read().unwrap().clone()
    }

    pub fn load_route(&self, route_id: &str) -> Result<Path, StoreError> {
        self.snapshot().load_route(route_id)
    }

    pub fn list_routes(&self) -> Vec<RouteSummary> {
        self.snapshot().list_routes()
    }

    pub fn next_route_id(&self) -> String {
        self.snapshot().next_route_id()
    }

    pub fn export_tree(&self) -> String {
        self.snapshot().export_tree()
    }

    pub fn save_route(&self, path: &Path) -> Result<String, StoreError> {
        let report = validate_path(path, &self.limits);
        if !report.is_valid() {
            return Err(StoreError::Validation(report));
        }
        let record = encode_route(path);
        self.mutate(|tree| {
            tree.insert(path.route_id.clone(), Arc::new(record.clone()));
            Ok(())
        })?;
        // Remote replication is best effort; the local document is authoritative.
        let _ = self.sync.push(&path.route_id, &record);
        Ok(path.route_id.clone())
    }

    /// Validates a decoded draft and saves it under its route id.
    pub fn save_draft(&self, draft: RouteDraft) -> Result<String, StoreError> {
        let path = draft
            .into_valid_path(&self.limits)
            .map_err(StoreError::Validation)?;
        self.save_route(&path)
    }

    /// Decodes `record` and saves it under the next free route id, chosen
    /// while holding the writer lock so concurrent creates never collide.
    pub fn create_route(&self, record: &Value) -> Result<Path, StoreError> {
        let mut created = None;
        self.mutate(|tree| {
            let route_id = next_route_id_in(tree);
            let path = decode_route(&route_id, record)?
                .into_valid_path(&self.limits)
                .map_err(StoreError::Validation)?;
            tree.insert(route_id, Arc::new(encode_route(&path)));
            created = Some(path);
            Ok(())
        })?;
        let path = created.expect("mutation succeeded");
        let _ = self.sync.push(&path.route_id, &encode_route(&path));
        Ok(path)
    }

    pub fn delete_route(&self, route_id: &str) -> Result<(), StoreError> {
        self.mutate(|tree| {
            tree.remove(route_id)
                .map(|_| ())
                .ok_or_else(|| StoreError::NotFound(route_id.to_string()))
        })?;
        let _ = self.sync.remove(route_id);
        Ok(())
    }

    /// Merges a tree document into the store, overwriting routes by key.
    /// Returns the number of routes imported.
    pub fn import_tree(&self, text: &str) -> Result<usize, StoreError> {
        let incoming = parse_tree(text)?;
        let count = incoming.len();
        self.mutate(|tree| {
            tree.extend(incoming.clone());
            Ok(())
        })?;
        Ok(count)
    }

    /// Fetches a route from the remote side and stores it locally.
    pub fn pull_route(&self, route_id: &str) -> Result<Path, StoreError> {
        let value = self
            .sync
            .pull(route_id)
            .ok()
            .flatten()
            .ok_or_else(|| StoreError::NotFound(route_id.to_string()))?;
        let path = decode_route(route_id, &value)?.to_path()?;
        self.save_route(&path)?;
        Ok(path)
    }

    fn mutate<F>(&self, change: F) -> Result<(), StoreError>
    where
        F: FnOnce(&mut RouteTree) -> Result<(), StoreError>,
    {
        let _writer = self.writer.lock().unwrap();
        let mut tree = (*self.snapshot().tree).clone();
        change(&mut tree)?;
        let next = Snapshot {
            tree: Arc::new(tree),
        };
        if let Some(file) = &self.file {
            write_atomically(file, &next.export_tree())?;
        }
        *self.current.write().unwrap() = next;
        Ok(())
    }
}

fn next_route_id_in(tree: &RouteTree) -> String {
    let max = tree
        .keys()
        .filter_map(|k| parse_route_number(k))
        .max()
        .unwrap_or(0);
    route_id_for(max + 1)
}

fn parse_tree(text: &str) -> Result<RouteTree, StoreError> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(map) = value else {
        return Err(StoreError::Schema(SchemaError {
            key: "$".into(),
            message: "expected an object of routes".into(),
        }));
    };
    let mut tree = RouteTree::new();
    for (key, route) in map {
        check_route_key(&key)?;
        decode_route(&key, &route)?;
        tree.insert(key, Arc::new(route));
    }
    Ok(tree)
}

fn write_atomically(file: &FsPath, text: &str) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io {
        path: file.to_path_buf(),
        source,
    };
    let dir = match file.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io_err)?;
    tmp.write_all(text.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(file).map_err(|e| io_err(e.error))?;
    Ok(())
}
