//! Instance files, built-in data, the synthetic generator, and CSV output.

pub mod csv_out;
pub mod defaults;
pub mod generator;
pub mod units;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_instance, Instance, ValidationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    schema_version: u32,
    instance: Instance,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for (k, seg) in path.iter().enumerate() {
        match seg {
            // The wrapper key is not part of the instance pointer.
            Segment::Map { key } if k == 0 && key == "instance" => continue,
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Seq { index } => {
                out.push('/');
                out.push_str(&index.to_string());
            }
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Instance, IoError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: InstanceFile = serde_path_to_error::deserialize(de).map_err(|e| IoError::Schema {
        pointer: json_pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(IoError::Version {
            found: file.schema_version,
        });
    }
    let report = validate_instance(&file.instance);
    if !report.is_ok() {
        return Err(IoError::Invalid(report));
    }
    Ok(file.instance)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_instance(&text)
}

pub fn instance_to_json(instance: &Instance) -> String {
    let file = InstanceFile {
        schema_version: SCHEMA_VERSION,
        instance: instance.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("instances serialize");
    s.push('\n');
    s
}

pub fn save_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, instance_to_json(instance)).map_err(|e| IoError::io(path, e))
}

/// Serializes any result type as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, to_json(value)).map_err(|e| IoError::io(path, e))
}
