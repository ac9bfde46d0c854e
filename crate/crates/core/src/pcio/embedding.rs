use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_json, write_json, PcioError, Result};

/// Label text embeddings, unit-normalized at construction so every dot
/// product between entries is a cosine.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    entries: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableFile {
    dim: usize,
    entries: Vec<EntryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryFile {
    label: String,
    vector: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new<I, S>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (label, v) in entries {
            let label = label.into();
            if v.len() != dim {
                return Err(PcioError::DimMismatch {
                    label,
                    expected: dim,
                    actual: v.len(),
                });
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(PcioError::ZeroVector(label));
            }
            let unit = v.iter().map(|x| x / norm).collect();
            if map.insert(label.clone(), unit).is_some() {
                return Err(PcioError::DuplicateLabel(label));
            }
        }
        Ok(Self { dim, entries: map })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&[f64]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.contains_key(label)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Cosine between two labels' embeddings, `None` if either is absent.
    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(dot(self.get(a)?, self.get(b)?))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn load_embedding_table(path: &Path) -> Result<EmbeddingTable> {
    let file: TableFile = read_json(path)?;
    EmbeddingTable::new(
        file.dim,
        file.entries.into_iter().map(|e| (e.label, e.vector)),
    )
}

pub fn write_embedding_table(path: &Path, table: &EmbeddingTable) -> Result<()> {
    write_json(
        path,
        &TableFile {
            dim: table.dim,
            entries: table
                .entries
                .iter()
                .map(|(label, vector)| EntryFile {
                    label: label.clone(),
                    vector: vector.clone(),
                })
                .collect(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<EmbeddingTable> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        std::fs::write(&p, text).unwrap();
        load_embedding_table(&p)
    }

    #[test]
    fn normalizes_to_unit() {
        let t = parse(r#"{"dim":2,"entries":[{"label":"chair","vector":[3,4]}]}"#).unwrap();
        let v = t.get("chair").unwrap();
        assert!((v[0] - 0.6).abs() < 1e-12);
        assert!((v[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn duplicate_rejected() {
        let r = parse(
            r#"{"dim":2,"entries":[{"label":"chair","vector":[3,4]},{"label":"chair","vector":[1,0]}]}"#,
        );
        assert!(matches!(r, Err(PcioError::DuplicateLabel(l)) if l == "chair"));
    }

    #[test]
    fn zero_vector_rejected() {
        let r = parse(r#"{"dim":2,"entries":[{"label":"chair","vector":[0,0]}]}"#);
        assert!(matches!(r, Err(PcioError::ZeroVector(_))));
    }

    #[test]
    fn dim_mismatch_rejected() {
        let r = parse(r#"{"dim":3,"entries":[{"label":"chair","vector":[0,1]}]}"#);
        assert!(matches!(r, Err(PcioError::DimMismatch { .. })));
    }

    #[test]
    fn write_then_load_is_identity() {
        let t = EmbeddingTable::new(2, [("a", vec![1.0, 1.0]), ("b", vec![0.0, 2.0])]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.json");
        write_embedding_table(&p, &t).unwrap();
        let back = load_embedding_table(&p).unwrap();
        assert_eq!(back.labels().collect::<Vec<_>>(), vec!["a", "b"]);
        for l in ["a", "b"] {
            for (x, y) in back.get(l).unwrap().iter().zip(t.get(l).unwrap()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }
}
