//! Plain-text artifact formats: instances and schedules as TOML documents.
//!
//! Every artifact is written atomically and deterministically: identical
//! inputs produce byte-identical files, so digests can stand in for content
//! comparisons.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{Flow, Instance, Link, Network, NodeKind, PortRef, ValidationReport};
use crate::window::{Method, Schedule, WindowConfig};

pub const INSTANCE_SCHEMA: &str = "taswin-instance-v1";
pub const SCHEDULE_SCHEMA: &str = "taswin-schedule-v1";

#[derive(Debug)]
pub enum FileError {
    Io { path: PathBuf, source: std::io::Error },
    Parse { path: PathBuf, message: String },
    BadSchema { path: PathBuf, found: String, expected: &'static str },
    ValidationFailed { path: PathBuf, report: ValidationReport },
}

impl fmt::Display for FileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FileError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            FileError::Parse { path, message } => {
                write!(f, "{}: parse error: {message}", path.display())
            }
            FileError::BadSchema { path, found, expected } => {
                write!(f, "{}: schema {found:?}, expected {expected:?}", path.display())
            }
            FileError::ValidationFailed { path, report } => {
                write!(f, "{}: instance failed validation:\n{report}", path.display())
            }
        }
    }
}

impl std::error::Error for FileError {}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FileError + '_ {
    move |source| FileError::Io { path: path.to_path_buf(), source }
}

/// Writes `contents` to `path` via a temporary sibling and an atomic rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), FileError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(contents.as_bytes()).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Hex SHA-256 of a byte string, prefixed with the algorithm name.
pub fn digest_bytes(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn digest_file(path: &Path) -> Result<String, FileError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(digest_bytes(&bytes))
}

// --- instance format ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct InstanceFile {
    schema: String,
    #[serde(default)]
    overhead_bytes: u32,
    nodes: Vec<NodeRow>,
    links: Vec<LinkRow>,
    flows: Vec<FlowRow>,
}

#[derive(Serialize, Deserialize)]
struct NodeRow {
    id: String,
    kind: NodeKind,
}

#[derive(Serialize, Deserialize)]
struct LinkRow {
    src: String,
    dst: String,
    speed_mbps: u64,
    macrotick_us: u64,
}

#[derive(Serialize, Deserialize)]
struct FlowRow {
    id: String,
    payload_bytes: u32,
    period_us: u64,
    priority: u8,
    deadline_us: u64,
    route: Vec<String>,
}

pub fn instance_to_string(instance: &Instance) -> String {
    let file = InstanceFile {
        schema: INSTANCE_SCHEMA.to_string(),
        overhead_bytes: instance.overhead_bytes,
        nodes: instance
            .network
            .nodes
            .iter()
            .map(|(id, kind)| NodeRow { id: id.clone(), kind: *kind })
            .collect(),
        links: instance
            .network
            .links
            .values()
            .map(|l| LinkRow {
                src: l.src.clone(),
                dst: l.dst.clone(),
                speed_mbps: l.speed_mbps,
                macrotick_us: l.macrotick_us,
            })
            .collect(),
        flows: instance
            .flows
            .iter()
            .map(|f| FlowRow {
                id: f.id.clone(),
                payload_bytes: f.payload_bytes,
                period_us: f.period_us,
                priority: f.priority,
                deadline_us: f.deadline_us,
                route: f.route.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("instance serializes")
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<(), FileError> {
    write_atomic(path, &instance_to_string(instance))
}

pub fn load_instance(path: &Path) -> Result<Instance, FileError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: InstanceFile = toml::from_str(&text).map_err(|e| FileError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.schema != INSTANCE_SCHEMA {
        return Err(FileError::BadSchema {
            path: path.to_path_buf(),
            found: file.schema,
            expected: INSTANCE_SCHEMA,
        });
    }
    let mut network = Network::default();
    for n in file.nodes {
        network.nodes.insert(n.id, n.kind);
    }
    for l in file.links {
        network.links.insert(
            (l.src.clone(), l.dst.clone()),
            Link { src: l.src, dst: l.dst, speed_mbps: l.speed_mbps, macrotick_us: l.macrotick_us },
        );
    }
    let flows = file
        .flows
        .into_iter()
        .map(|f| Flow {
            id: f.id,
            payload_bytes: f.payload_bytes,
            period_us: f.period_us,
            priority: f.priority,
            deadline_us: f.deadline_us,
            route: f.route,
        })
        .collect();
    let instance = Instance { network, flows, overhead_bytes: file.overhead_bytes };
    let report = crate::model::validate_instance(&instance);
    if !report.is_ok() {
        return Err(FileError::ValidationFailed { path: path.to_path_buf(), report });
    }
    Ok(instance)
}

// --- schedule format ------------------------------------------------------

/// Provenance block embedded in every schedule file. Deliberately contains
/// no wall-clock data so that identical runs produce identical artifacts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backlog: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
    /// Free-form extra parameters, sorted for determinism.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            tool: format!("taswin {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            ..Default::default()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    schema: String,
    manifest: Manifest,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega: Option<f64>,
    windows: Vec<WindowRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    es_offsets: Vec<EsOffsetRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    gcl: Vec<GclRow>,
}

#[derive(Serialize, Deserialize)]
struct WindowRow {
    node: String,
    next: String,
    queue: u8,
    offset_mt: u64,
    length_mt: u64,
    period_mt: u64,
}

#[derive(Serialize, Deserialize)]
struct EsOffsetRow {
    flow: String,
    offset_us: u64,
}

#[derive(Serialize, Deserialize)]
struct GclRow {
    node: String,
    next: String,
    time_mt: u64,
    gates: String,
}

pub fn schedule_to_string(schedule: &Schedule, manifest: &Manifest) -> String {
    let mut windows = Vec::new();
    for (port, queues) in &schedule.windows {
        for (&queue, ws) in queues {
            for w in ws {
                windows.push(WindowRow {
                    node: port.node.clone(),
                    next: port.next.clone(),
                    queue,
                    offset_mt: w.offset_mt,
                    length_mt: w.length_mt,
                    period_mt: w.period_mt,
                });
            }
        }
    }
    let mut gcl = Vec::new();
    for port in schedule.windows.keys() {
        if let Some(period) = schedule.port_gcl_period(port) {
            for (time_mt, gates) in schedule.gcl_entries(port, period) {
                gcl.push(GclRow {
                    node: port.node.clone(),
                    next: port.next.clone(),
                    time_mt,
                    gates,
                });
            }
        }
    }
    let mut manifest = manifest.clone();
    if let Some(m) = schedule.method {
        manifest.method.get_or_insert_with(|| m.name().to_string());
    }
    let file = ScheduleFile {
        schema: SCHEDULE_SCHEMA.to_string(),
        manifest,
        omega: schedule.omega(),
        windows,
        es_offsets: schedule
            .es_offsets_us
            .iter()
            .map(|(flow, &offset_us)| EsOffsetRow { flow: flow.clone(), offset_us })
            .collect(),
        gcl,
    };
    toml::to_string(&file).expect("schedule serializes")
}

pub fn save_schedule(
    path: &Path,
    schedule: &Schedule,
    manifest: &Manifest,
) -> Result<(), FileError> {
    write_atomic(path, &schedule_to_string(schedule, manifest))
}

pub fn load_schedule(path: &Path) -> Result<(Schedule, Manifest), FileError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file: ScheduleFile = toml::from_str(&text).map_err(|e| FileError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if file.schema != SCHEDULE_SCHEMA {
        return Err(FileError::BadSchema {
            path: path.to_path_buf(),
            found: file.schema,
            expected: SCHEDULE_SCHEMA,
        });
    }
    let mut schedule = Schedule::default();
    schedule.method = file.manifest.method.as_deref().and_then(|m| m.parse::<Method>().ok());
    for w in file.windows {
        schedule.push(
            PortRef::new(w.node, w.next),
            w.queue,
            WindowConfig { offset_mt: w.offset_mt, length_mt: w.length_mt, period_mt: w.period_mt },
        );
    }
    for row in file.es_offsets {
        schedule.es_offsets_us.insert(row.flow, row.offset_us);
    }
    Ok((schedule, file.manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trips_losslessly() {
        let inst = crate::testfix::two_switch_instance();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.toml");
        save_instance(&path, &inst).unwrap();
        let loaded = load_instance(&path).unwrap();
        assert_eq!(inst, loaded);
        // byte-identical on re-save
        let again = dir.path().join("again.toml");
        save_instance(&again, &loaded).unwrap();
        assert_eq!(digest_file(&path).unwrap(), digest_file(&again).unwrap());
    }

    #[test]
    fn malformed_route_is_a_validation_failure() {
        let mut inst = crate::testfix::two_switch_instance();
        inst.flows[0].route = vec!["es1".into(), "sw2".into(), "es3".into()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        save_instance(&path, &inst).unwrap();
        assert!(matches!(load_instance(&path), Err(FileError::ValidationFailed { .. })));
    }

    #[test]
    fn garbage_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage.toml");
        std::fs::write(&path, "nodes = 3\n[[what").unwrap();
        assert!(matches!(load_instance(&path), Err(FileError::Parse { .. })));
    }

    #[test]
    fn schedule_round_trips() {
        let mut s = Schedule::default();
        s.method = Some(Method::Cpwo);
        s.set(
            PortRef::new("sw1", "sw2"),
            0,
            WindowConfig { offset_mt: 3, length_mt: 4, period_mt: 10 },
        );
        s.es_offsets_us.insert("f1".into(), 7);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schedule.toml");
        let manifest = Manifest::new("synth");
        save_schedule(&path, &s, &manifest).unwrap();
        let (loaded, m) = load_schedule(&path).unwrap();
        assert_eq!(loaded.windows, s.windows);
        assert_eq!(loaded.es_offsets_us, s.es_offsets_us);
        assert_eq!(loaded.method, Some(Method::Cpwo));
        assert_eq!(m.command, "synth");
    }
}
