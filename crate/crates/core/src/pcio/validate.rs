use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::Serialize;

use super::frames::{load_frame, ManifestFile};
use super::{layout, load_embedding_table, load_point_cloud, read_feature_matrix, read_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub severity: Severity,
    pub file: String,
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn push(&mut self, severity: Severity, file: &str, code: &str, message: impl Into<String>) {
        self.issues.push(Issue {
            severity,
            file: file.to_string(),
            code: code.to_string(),
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    /// 0 iff the report holds no errors.
    pub fn exit_code(&self) -> i32 {
        if self.has_errors() {
            2
        } else {
            0
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            let sev = match i.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            };
            writeln!(f, "{sev:7} {:<18} {:<22} {}", i.file, i.code, i.message)?;
        }
        let n_err = self.errors().count();
        let n_warn = self.warnings().count();
        write!(f, "{n_err} error(s), {n_warn} warning(s)")
    }
}

/// Checks every file of a dataset directory and collects problems instead
/// of stopping at the first one.
pub fn validate_dataset(root: &Path) -> ValidationReport {
    use Severity::*;
    let mut report = ValidationReport::default();

    let cloud_path = root.join(layout::CLOUD);
    let n_points = if !cloud_path.exists() {
        report.push(Error, layout::CLOUD, "MissingFile", "point cloud not found");
        None
    } else {
        match load_point_cloud(&cloud_path) {
            Ok(c) => Some(c.len()),
            Err(e) => {
                report.push(Error, layout::CLOUD, e.code(), e.to_string());
                None
            }
        }
    };

    let table_path = root.join(layout::EMBEDDINGS);
    let table = if !table_path.exists() {
        report.push(
            Error,
            layout::EMBEDDINGS,
            "MissingEmbeddingTable",
            "embedding table not found",
        );
        None
    } else {
        match load_embedding_table(&table_path) {
            Ok(t) => Some(t),
            Err(e) => {
                report.push(Error, layout::EMBEDDINGS, e.code(), e.to_string());
                None
            }
        }
    };

    let manifest_path = root.join(layout::MANIFEST);
    let mut labels = BTreeSet::new();
    if !manifest_path.exists() {
        report.push(Error, layout::MANIFEST, "MissingFile", "frame manifest not found");
    } else {
        match read_json::<ManifestFile>(&manifest_path) {
            Err(e) => report.push(Error, layout::MANIFEST, e.code(), e.to_string()),
            Ok(manifest) => {
                if manifest.frames.is_empty() {
                    report.push(Warning, layout::MANIFEST, "NoFrames", "manifest lists no frames");
                }
                for mf in &manifest.frames {
                    match load_frame(root, mf) {
                        Ok(frame) => {
                            labels.extend(frame.masks.iter().map(|m| m.label.clone()));
                        }
                        Err(e) => report.push(Error, &mf.masks_file, e.code(), e.to_string()),
                    }
                }
            }
        }
    }

    if let Some(table) = &table {
        for label in &labels {
            if !table.contains(label) {
                report.push(
                    Warning,
                    layout::EMBEDDINGS,
                    "UnembeddedLabel",
                    format!("mask label {label:?} has no embedding"),
                );
            }
        }
    }

    let feat_path = root.join(layout::FEATURES);
    if feat_path.exists() {
        match read_feature_matrix(&feat_path) {
            Err(e) => report.push(Error, layout::FEATURES, e.code(), e.to_string()),
            Ok(f) => {
                if let Some(n) = n_points {
                    if f.rows != n {
                        report.push(
                            Error,
                            layout::FEATURES,
                            "RowMismatch",
                            format!("{} feature rows for {n} points", f.rows),
                        );
                    }
                }
                if let Some(t) = &table {
                    if f.dim != t.dim() {
                        report.push(
                            Error,
                            layout::FEATURES,
                            "DimMismatch",
                            format!("feature dim {} vs embedding dim {}", f.dim, t.dim()),
                        );
                    }
                }
            }
        }
    }
    report
}
