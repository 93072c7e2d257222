//! Image minimization analysis: given an image's file list, its
//! link-dependency edges (an ldd-style scan, ingested as data) and an
//! optional runtime access trace, compute the minimal keep set as graph
//! reachability from the entrypoints and traced files, then quantify the
//! size reduction.
//!
//! Cycles in the dependency graph are fine (shared libraries reference each
//! other); the closure is plain reachability, not a topological pass. Traced
//! paths that are not in the image (procfs, device nodes...) are reported,
//! never fatal. MB in human-readable output means 10^6 bytes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One file of the image with its size in bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub path: String,
    pub size: u64,
}

/// The analyzed image: files, directed dependency edges (from -> to), and
/// the entrypoint executables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageModel {
    pub files: Vec<FileEntry>,
    #[serde(default)]
    pub deps: Vec<(String, String)>,
    #[serde(default)]
    pub entrypoints: Vec<String>,
}

/// Paths observed being accessed while the application ran.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuntimeTrace {
    #[serde(default)]
    pub accessed: BTreeSet<String>,
}

/// The minimization result. kept and removed partition the image's files;
/// reduction_percent is 100 * (1 - slimmed/original), half-up to one
/// decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlimReport {
    pub kept: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub original_size: u64,
    pub slimmed_size: u64,
    pub reduction_percent: f64,
    pub unknown_trace_paths: Vec<String>,
}

#[derive(Debug, Error)]
pub enum SlimError {
    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invariant error at {path}: {message}")]
    Invariant { path: String, message: String },
    #[error("image has zero total size; reduction undefined")]
    EmptyImage,
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T, SlimError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| SlimError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Parses and checks an image document:
/// `{"files": [{"path", "size"}], "deps": [["a", "b"]], "entrypoints": [...]}`.
pub fn load_image_model(text: &str) -> Result<ImageModel, SlimError> {
    let image: ImageModel = parse_json(text)?;
    image.check()?;
    Ok(image)
}

/// Parses a trace document: `{"accessed": [...]}`.
pub fn load_trace(text: &str) -> Result<RuntimeTrace, SlimError> {
    parse_json(text)
}

impl ImageModel {
    pub fn check(&self) -> Result<(), SlimError> {
        let mut paths = BTreeSet::new();
        for (i, file) in self.files.iter().enumerate() {
            if file.path.is_empty() {
                return Err(SlimError::Invariant {
                    path: format!("files[{i}].path"),
                    message: "path must not be empty".to_string(),
                });
            }
            if !paths.insert(file.path.as_str()) {
                return Err(SlimError::Invariant {
                    path: format!("files[{i}].path"),
                    message: format!("duplicate path \"{}\"", file.path),
                });
            }
        }
        for (i, (from, to)) in self.deps.iter().enumerate() {
            for (end, label) in [(from, "deps"), (to, "deps")] {
                if !paths.contains(end.as_str()) {
                    return Err(SlimError::Invariant {
                        path: format!("{label}[{i}]"),
                        message: format!("edge endpoint \"{end}\" is not an image file"),
                    });
                }
            }
        }
        for (i, entry) in self.entrypoints.iter().enumerate() {
            if !paths.contains(entry.as_str()) {
                return Err(SlimError::Invariant {
                    path: format!("entrypoints[{i}]"),
                    message: format!("entrypoint \"{entry}\" is not an image file"),
                });
            }
        }
        Ok(())
    }

    pub fn total_size(&self) -> u64 {
        self.files.iter().map(|f| f.size).sum()
    }
}

/// Forward reachability over the dependency edges, seeded with the
/// entrypoints and every traced path that exists in the image.
pub fn compute_keep_set(image: &ImageModel, trace: &RuntimeTrace) -> BTreeSet<String> {
    let files: BTreeSet<&str> = image.files.iter().map(|f| f.path.as_str()).collect();
    let mut forward: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (from, to) in &image.deps {
        forward.entry(from.as_str()).or_default().push(to.as_str());
    }

    let mut kept: BTreeSet<&str> = BTreeSet::new();
    let mut queue: VecDeque<&str> = VecDeque::new();
    let seeds = image.entrypoints.iter().map(String::as_str).chain(
        trace
            .accessed
            .iter()
            .map(String::as_str)
            .filter(|p| files.contains(p)),
    );
    for seed in seeds {
        if kept.insert(seed) {
            queue.push_back(seed);
        }
    }
    while let Some(current) = queue.pop_front() {
        for &next in forward.get(current).into_iter().flatten() {
            if kept.insert(next) {
                queue.push_back(next);
            }
        }
    }
    kept.into_iter().map(str::to_string).collect()
}

/// Traced paths missing from the image, sorted.
pub fn unknown_trace_paths(image: &ImageModel, trace: &RuntimeTrace) -> Vec<String> {
    let files: BTreeSet<&str> = image.files.iter().map(|f| f.path.as_str()).collect();
    trace
        .accessed
        .iter()
        .filter(|p| !files.contains(p.as_str()))
        .cloned()
        .collect()
}

fn round_half_up_one_decimal(value: f64) -> f64 {
    (value * 10.0 + 0.5).floor() / 10.0
}

/// Quantifies a keep set against the image. `keep` must be a subset of the
/// image's files (typically from [`compute_keep_set`]); the trace is only
/// consulted for the unknown-path listing.
pub fn slim_report(
    image: &ImageModel,
    keep: &BTreeSet<String>,
    trace: &RuntimeTrace,
) -> Result<SlimReport, SlimError> {
    let files: BTreeSet<&str> = image.files.iter().map(|f| f.path.as_str()).collect();
    for path in keep {
        if !files.contains(path.as_str()) {
            return Err(SlimError::Invariant {
                path: "keep".to_string(),
                message: format!("kept path \"{path}\" is not an image file"),
            });
        }
    }
    let original_size = image.total_size();
    if original_size == 0 {
        return Err(SlimError::EmptyImage);
    }
    let slimmed_size: u64 = image
        .files
        .iter()
        .filter(|f| keep.contains(&f.path))
        .map(|f| f.size)
        .sum();
    let removed: BTreeSet<String> = image
        .files
        .iter()
        .filter(|f| !keep.contains(&f.path))
        .map(|f| f.path.clone())
        .collect();
    let reduction_percent =
        round_half_up_one_decimal(100.0 * (1.0 - slimmed_size as f64 / original_size as f64));
    Ok(SlimReport {
        kept: keep.clone(),
        removed,
        original_size,
        slimmed_size,
        reduction_percent,
        unknown_trace_paths: unknown_trace_paths(image, trace),
    })
}

/// Formats bytes as decimal megabytes with one decimal, e.g. "486.0 MB".
pub fn format_mb(bytes: u64) -> String {
    format!("{:.1} MB", bytes as f64 / 1e6)
}
