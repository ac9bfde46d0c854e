//! Instance-level evaluation: AP over IoU thresholds with embedding-based
//! label matching.
//!
//! For every threshold and every ground-truth label, predictions whose label
//! is similar enough to that label are ranked by confidence and greedily
//! matched to unmatched ground-truth instances of the label. AP is the
//! all-point interpolated area under the resulting precision/recall curve,
//! averaged over labels and then over thresholds.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pcio::EmbeddingTable;
use crate::semantics::{Instance3D, UNKNOWN_LABEL};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("IoU of two empty point sets is undefined")]
    BothEmpty,

    #[error("label {0:?} is not in the embedding table")]
    UnknownLabel(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;

pub const DEFAULT_TAU_BERT: f64 = 0.8;

/// 0.50, 0.55, …, 0.95.
pub fn ap_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthInstance {
    pub id: usize,
    pub label: String,
    /// Sorted, non-empty.
    pub points: Vec<u32>,
}

/// `|a ∩ b| / |a ∪ b|` for sorted index sets.
pub fn mask_iou_3d(a: &[u32], b: &[u32]) -> Result<f64> {
    if a.is_empty() && b.is_empty() {
        return Err(EvalError::BothEmpty);
    }
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    Ok(inter as f64 / (a.len() + b.len() - inter) as f64)
}

/// Cosine between the two label embeddings is at least `tau_bert`.
pub fn label_correct(pred: &str, gt: &str, table: &EmbeddingTable, tau_bert: f64) -> Result<bool> {
    for l in [pred, gt] {
        if !table.contains(l) {
            return Err(EvalError::UnknownLabel(l.to_string()));
        }
    }
    Ok(table.cosine(pred, gt).unwrap() >= tau_bert)
}

/// Prediction as seen by the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: usize,
    pub label: String,
    pub confidence: f64,
    pub points: Vec<u32>,
}

impl From<&Instance3D> for Prediction {
    fn from(i: &Instance3D) -> Self {
        Self {
            id: i.id,
            label: i.label.clone(),
            confidence: i.confidence,
            points: i.point_indices.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdAp {
    pub threshold: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub ap: f64,
    pub ap50: f64,
    pub ap25: f64,
    pub per_threshold: Vec<ThresholdAp>,
    /// Per ground-truth label, averaged over the AP thresholds.
    pub per_class: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_group: Option<BTreeMap<String, f64>>,
}

/// All-point interpolated AP of a ranked TP/FP sequence.
pub fn interpolated_ap(hits: &[bool], num_gt: usize) -> f64 {
    if num_gt == 0 {
        return 0.0;
    }
    let mut precision = Vec::with_capacity(hits.len());
    let mut tp = 0usize;
    for (k, &h) in hits.iter().enumerate() {
        tp += h as usize;
        precision.push(tp as f64 / (k + 1) as f64);
    }
    for k in (0..precision.len().saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }
    hits.iter()
        .zip(&precision)
        .filter(|(&h, _)| h)
        .map(|(_, &p)| p / num_gt as f64)
        .sum()
}

struct Prepared<'a> {
    preds: Vec<&'a Prediction>,
    /// `iou[p][g]`.
    iou: Vec<Vec<f64>>,
    classes: BTreeMap<&'a str, Vec<usize>>,
    /// `member[class][p]`: prediction `p` counts for this class.
    member: BTreeMap<&'a str, Vec<bool>>,
}

fn prepare<'a>(
    preds: &'a [Prediction],
    gts: &'a [GroundTruthInstance],
    table: &EmbeddingTable,
    tau_bert: f64,
) -> Result<Prepared<'a>> {
    let mut ranked: Vec<&Prediction> = preds.iter().filter(|p| p.label != UNKNOWN_LABEL).collect();
    ranked.sort_by(|a, b| b.confidence.total_cmp(&a.confidence).then(a.id.cmp(&b.id)));
    let mut classes: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (g, gt) in gts.iter().enumerate() {
        classes.entry(gt.label.as_str()).or_default().push(g);
    }
    let mut member = BTreeMap::new();
    for &c in classes.keys() {
        let m = ranked
            .iter()
            .map(|p| label_correct(&p.label, c, table, tau_bert))
            .collect::<Result<Vec<_>>>()?;
        member.insert(c, m);
    }
    let iou = ranked
        .iter()
        .map(|p| gts.iter().map(|g| mask_iou_3d(&p.points, &g.points)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(Prepared {
        preds: ranked,
        iou,
        classes,
        member,
    })
}

fn class_ap(prep: &Prepared, class: &str, threshold: f64) -> f64 {
    let gts = &prep.classes[class];
    let member = &prep.member[class];
    let mut used = vec![false; gts.len()];
    let mut hits = Vec::new();
    for p in 0..prep.preds.len() {
        if !member[p] {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, &g) in gts.iter().enumerate() {
            let v = prep.iou[p][g];
            if !used[k] && v >= threshold && best.is_none_or(|b| v > b.1) {
                best = Some((k, v));
            }
        }
        match best {
            Some((k, _)) => {
                used[k] = true;
                hits.push(true);
            }
            None => hits.push(false),
        }
    }
    interpolated_ap(&hits, gts.len())
}

fn mean(v: impl IntoIterator<Item = f64>) -> f64 {
    let (s, n) = v.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Full report; `groups` maps labels to category groups for the optional
/// breakdown.
pub fn average_precision(
    preds: &[Prediction],
    gts: &[GroundTruthInstance],
    table: &EmbeddingTable,
    tau_bert: f64,
    groups: Option<&BTreeMap<String, String>>,
) -> Result<EvalReport> {
    let prep = prepare(preds, gts, table, tau_bert)?;
    let at = |t: f64| mean(prep.classes.keys().map(|c| class_ap(&prep, c, t)));
    let per_threshold: Vec<ThresholdAp> = ap_thresholds()
        .into_iter()
        .map(|t| ThresholdAp { threshold: t, ap: at(t) })
        .collect();
    let per_class: BTreeMap<String, f64> = prep
        .classes
        .keys()
        .map(|&c| {
            (
                c.to_string(),
                mean(ap_thresholds().into_iter().map(|t| class_ap(&prep, c, t))),
            )
        })
        .collect();
    let per_group = groups.map(|g| {
        let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (c, &v) in &per_class {
            if let Some(name) = g.get(c) {
                acc.entry(name.clone()).or_default().push(v);
            }
        }
        acc.into_iter().map(|(k, v)| (k, mean(v))).collect()
    });
    Ok(EvalReport {
        ap: mean(per_threshold.iter().map(|t| t.ap)),
        ap50: at(0.5),
        ap25: at(0.25),
        per_threshold,
        per_class,
        per_group,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<24} {:>8} {:>8} {:>8}", "", "AP", "AP50", "AP25")?;
        writeln!(f, "{:<24} {:>8.4} {:>8.4} {:>8.4}", "all", self.ap, self.ap50, self.ap25)?;
        if let Some(groups) = &self.per_group {
            for (g, v) in groups {
                writeln!(f, "{:<24} {:>8.4}", format!("group:{g}"), v)?;
            }
        }
        for (c, v) in &self.per_class {
            writeln!(f, "{c:<24} {v:>8.4}")?;
        }
        Ok(())
    }
}

impl EvalReport {
    /// `label,ap` rows for every ground-truth class.
    pub fn per_class_csv(&self) -> String {
        let mut s = String::from("label,ap\n");
        for (c, v) in &self.per_class {
            s.push_str(&format!("{c},{v}\n"));
        }
        s
    }
}
