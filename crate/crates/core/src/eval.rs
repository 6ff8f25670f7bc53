//! Sensitivity and specificity of predicted masks against ground truth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_mask, KNOWN_EXTENSIONS};
use crate::micrograph::SegmentationMask;

/// Pixel counts and the two rates for one prediction.
///
/// A rate whose denominator is empty is reported as 1.0 and flagged as
/// undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub sensitivity_defined: bool,
    pub specificity_defined: bool,
    pub true_positive: usize,
    pub false_positive: usize,
    pub true_negative: usize,
    pub false_negative: usize,
}

pub fn compute_metrics(pred: &SegmentationMask, gt: &SegmentationMask) -> Result<Metrics> {
    if pred.dim() != gt.dim() {
        return Err(Error::ShapeMismatch {
            expected: gt.dim(),
            found: pred.dim(),
        });
    }
    let mut counts = [[0usize; 2]; 2];
    for (&p, &g) in pred.pixels().iter().zip(gt.pixels().iter()) {
        counts[g as usize][p as usize] += 1;
    }
    let [[tn, fp], [fn_, tp]] = counts;
    let rate = |hit: usize, total: usize| {
        if total == 0 {
            (1.0, false)
        } else {
            (hit as f64 / total as f64, true)
        }
    };
    let (sensitivity, sensitivity_defined) = rate(tp, tp + fn_);
    let (specificity, specificity_defined) = rate(tn, tn + fp);
    Ok(Metrics {
        sensitivity,
        specificity,
        sensitivity_defined,
        specificity_defined,
        true_positive: tp,
        false_positive: fp,
        true_negative: tn,
        false_negative: fn_,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsEntry {
    pub name: String,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFailure {
    pub name: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_micrograph: Vec<MetricsEntry>,
    /// Unweighted mean over the entries counted (see `include_undefined`).
    pub mean_sensitivity: Option<f64>,
    pub mean_specificity: Option<f64>,
    pub include_undefined: bool,
    /// Files present in only one of the two directories.
    pub unpaired: Vec<String>,
    pub failures: Vec<PairFailure>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsReport {
    pub fn from_entries(per_micrograph: Vec<MetricsEntry>, include_undefined: bool) -> Self {
        let mean_sensitivity = mean(
            per_micrograph
                .iter()
                .filter(|e| include_undefined || e.metrics.sensitivity_defined)
                .map(|e| e.metrics.sensitivity),
        );
        let mean_specificity = mean(
            per_micrograph
                .iter()
                .filter(|e| include_undefined || e.metrics.specificity_defined)
                .map(|e| e.metrics.specificity),
        );
        Self {
            per_micrograph,
            mean_sensitivity,
            mean_specificity,
            include_undefined,
            unpaired: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// True when at least one pair was evaluated and nothing was skipped.
    pub fn is_complete(&self) -> bool {
        !self.per_micrograph.is_empty() && self.unpaired.is_empty() && self.failures.is_empty()
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Report(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// One row per micrograph followed by a `mean` row; undefined rates are
    /// left blank.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let report = |e: csv::Error| Error::Report(e.to_string());
        let mut w = csv::Writer::from_path(path).map_err(report)?;
        w.write_record(["name", "sensitivity", "specificity"]).map_err(report)?;
        let fmt = |v: f64, defined: bool| if defined { v.to_string() } else { String::new() };
        for e in &self.per_micrograph {
            let m = &e.metrics;
            w.write_record([
                e.name.clone(),
                fmt(m.sensitivity, m.sensitivity_defined),
                fmt(m.specificity, m.specificity_defined),
            ])
            .map_err(report)?;
        }
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record(["mean".to_string(), opt(self.mean_sensitivity), opt(self.mean_specificity)])
            .map_err(report)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Writes CSV for a `.csv` path and JSON otherwise.
    pub fn write(&self, path: &Path) -> Result<()> {
        let is_csv = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            self.write_csv(path)
        } else {
            self.write_json(path)
        }
    }
}

/// Mask files in `dir` keyed by file stem.
fn masks_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| KNOWN_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if !path.is_file() || !known {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path);
        }
    }
    Ok(out)
}

/// Pairs predictions with ground truth by file stem and scores each pair.
///
/// Files without a partner go to `unpaired`; unreadable or mismatched
/// pairs go to `failures`. Neither stops the batch.
pub fn batch_evaluate(pred_dir: &Path, gt_dir: &Path, include_undefined: bool) -> Result<MetricsReport> {
    let preds = masks_by_stem(pred_dir)?;
    let gts = masks_by_stem(gt_dir)?;
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    let mut unpaired: Vec<String> = gts
        .iter()
        .filter(|(stem, _)| !preds.contains_key(*stem))
        .map(|(_, p)| p.display().to_string())
        .collect();
    for (stem, pred_path) in &preds {
        let Some(gt_path) = gts.get(stem) else {
            unpaired.push(pred_path.display().to_string());
            continue;
        };
        let scored = read_mask(pred_path)
            .and_then(|p| read_mask(gt_path).map(|g| (p, g)))
            .and_then(|(p, g)| compute_metrics(&p, &g));
        match scored {
            Ok(metrics) => entries.push(MetricsEntry {
                name: stem.clone(),
                metrics,
            }),
            Err(e) => failures.push(PairFailure {
                name: stem.clone(),
                reason: e.to_string(),
            }),
        }
    }
    unpaired.sort();
    let mut report = MetricsReport::from_entries(entries, include_undefined);
    report.unpaired = unpaired;
    report.failures = failures;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{write_mask, MaskFormat};
    use ndarray::Array2;

    fn mask(h: usize, w: usize, f: impl Fn(usize, usize) -> bool) -> SegmentationMask {
        SegmentationMask::new(Array2::from_shape_fn((h, w), |(r, c)| u8::from(f(r, c)))).unwrap()
    }

    #[test]
    fn perfect_agreement() {
        let gt = mask(10, 10, |r, _| r < 4);
        let m = compute_metrics(&gt, &gt).unwrap();
        assert_eq!((m.sensitivity, m.specificity), (1.0, 1.0));
        assert!(m.sensitivity_defined && m.specificity_defined);
    }

    #[test]
    fn half_detected() {
        let gt = mask(20, 20, |r, _| r < 5);
        let pred = mask(20, 20, |r, c| r < 5 && c < 10);
        let m = compute_metrics(&pred, &gt).unwrap();
        assert_eq!(m.true_positive, 50);
        assert_eq!((m.sensitivity, m.specificity), (0.5, 1.0));
    }

    #[test]
    fn all_ones_prediction() {
        let gt = mask(4, 4, |_, c| c < 2);
        let m = compute_metrics(&mask(4, 4, |_, _| true), &gt).unwrap();
        assert_eq!((m.sensitivity, m.specificity), (1.0, 0.0));
    }

    #[test]
    fn empty_truth_flags_sensitivity() {
        let gt = SegmentationMask::zeros(3, 3);
        let m = compute_metrics(&gt, &gt).unwrap();
        assert_eq!(m.sensitivity, 1.0);
        assert!(!m.sensitivity_defined);
        assert!(m.specificity_defined);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(compute_metrics(&SegmentationMask::zeros(2, 3), &SegmentationMask::zeros(3, 2)).is_err());
    }

    #[test]
    fn aggregate_is_unweighted_mean_over_defined() {
        let e = |name: &str, s: f64, sd: bool| MetricsEntry {
            name: name.into(),
            metrics: Metrics {
                sensitivity: s,
                specificity: 1.0,
                sensitivity_defined: sd,
                specificity_defined: true,
                true_positive: 0,
                false_positive: 0,
                true_negative: 0,
                false_negative: 0,
            },
        };
        let r = MetricsReport::from_entries(vec![e("a", 1.0, true), e("b", 0.5, true)], false);
        assert_eq!((r.mean_sensitivity, r.mean_specificity), (Some(0.75), Some(1.0)));
        let r = MetricsReport::from_entries(vec![e("a", 0.5, true), e("b", 1.0, false)], false);
        assert_eq!(r.mean_sensitivity, Some(0.5));
        let r = MetricsReport::from_entries(vec![e("a", 0.5, true), e("b", 1.0, false)], true);
        assert_eq!(r.mean_sensitivity, Some(0.75));
    }

    #[test]
    fn batch_pairs_by_stem() {
        let pred = tempfile::tempdir().unwrap();
        let gt = tempfile::tempdir().unwrap();
        let truth = mask(8, 8, |r, _| r < 4);
        write_mask(&truth, &gt.path().join("a.png"), MaskFormat::Png, None).unwrap();
        write_mask(&truth, &pred.path().join("a.mrc"), MaskFormat::Mrc, None).unwrap();
        write_mask(&truth, &gt.path().join("b.png"), MaskFormat::Png, None).unwrap();
        write_mask(&mask(8, 8, |r, c| r < 4 && c < 4), &pred.path().join("b.png"), MaskFormat::Png, None).unwrap();
        write_mask(&truth, &pred.path().join("c.png"), MaskFormat::Png, None).unwrap();
        write_mask(&SegmentationMask::zeros(4, 4), &pred.path().join("d.png"), MaskFormat::Png, None).unwrap();
        write_mask(&truth, &gt.path().join("d.png"), MaskFormat::Png, None).unwrap();

        let r = batch_evaluate(pred.path(), gt.path(), false).unwrap();
        assert_eq!(r.per_micrograph.len(), 2);
        assert_eq!(r.mean_sensitivity, Some(0.75));
        assert_eq!(r.unpaired.len(), 1);
        assert!(r.unpaired[0].ends_with("c.png"));
        assert_eq!(r.failures.len(), 1);
        assert_eq!(r.failures[0].name, "d");
        assert!(!r.is_complete());

        let out = tempfile::tempdir().unwrap();
        r.write(&out.path().join("r.csv")).unwrap();
        let csv_text = std::fs::read_to_string(out.path().join("r.csv")).unwrap();
        assert!(csv_text.starts_with("name,sensitivity,specificity\na,1,1\nb,0.5,1\nmean,0.75,1"));
        r.write(&out.path().join("r.json")).unwrap();
        let back: MetricsReport =
            serde_json::from_str(&std::fs::read_to_string(out.path().join("r.json")).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn empty_directories_give_incomplete_report() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let r = batch_evaluate(a.path(), b.path(), false).unwrap();
        assert!(r.per_micrograph.is_empty());
        assert!(!r.is_complete());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn masks() -> impl Strategy<Value = (SegmentationMask, SegmentationMask)> {
            (1usize..12, 1usize..12).prop_flat_map(|(h, w)| {
                (
                    proptest::collection::vec(0u8..2, h * w),
                    proptest::collection::vec(0u8..2, h * w),
                )
                    .prop_map(move |(a, b)| {
                        (
                            SegmentationMask::new(Array2::from_shape_vec((h, w), a).unwrap()).unwrap(),
                            SegmentationMask::new(Array2::from_shape_vec((h, w), b).unwrap()).unwrap(),
                        )
                    })
            })
        }

        proptest! {
            #[test]
            fn complement_duality((pred, gt) in masks()) {
                let a = compute_metrics(&pred, &gt).unwrap();
                let b = compute_metrics(&pred.complement(), &gt.complement()).unwrap();
                prop_assert_eq!(a.sensitivity, b.specificity);
                prop_assert_eq!(a.specificity, b.sensitivity);
            }

            #[test]
            fn transposition_invariance((pred, gt) in masks()) {
                let a = compute_metrics(&pred, &gt).unwrap();
                let b = compute_metrics(&pred.transposed(), &gt.transposed()).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn rates_lie_in_unit_interval((pred, gt) in masks()) {
                let m = compute_metrics(&pred, &gt).unwrap();
                prop_assert!((0.0..=1.0).contains(&m.sensitivity));
                prop_assert!((0.0..=1.0).contains(&m.specificity));
            }
        }
    }
}
