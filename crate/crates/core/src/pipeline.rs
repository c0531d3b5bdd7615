//! End-to-end wiring shared by the command-line tools and the self test:
//! score post-processing across a threshold sweep, and the combined
//! PSDS / collar-F1 evaluation report.

use crate::error::{Error, Result};
use crate::eval::{
    build_roc, collar_f1, match_detections, psds_score, CollarF1Result, DatasetInfo,
    OperatingPoint, PsdsParams, RocCurve, DEFAULT_OFFSET_COLLAR_FRAC, DEFAULT_ONSET_COLLAR,
};
use crate::model::FramePredictions;
use crate::postproc::{
    decode_events, median_filter_per_class, weak_prediction_masking, weak_sed, ClassTable, Event,
};
use crate::scalar::Scalar;

/// How clip-level probabilities modify frame-level ones before decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostprocMode {
    /// Zero out classes whose clip probability falls below the mask
    /// threshold; keeps localization.
    Mask,
    /// Replace every frame with the clip probabilities; trades localization
    /// for clip-level robustness.
    WeakSed,
}

impl std::str::FromStr for PostprocMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mask" => Ok(PostprocMode::Mask),
            "weaksed" => Ok(PostprocMode::WeakSed),
            other => Err(format!("unknown postproc mode `{other}` (mask|weaksed)")),
        }
    }
}

impl std::fmt::Display for PostprocMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PostprocMode::Mask => "mask",
            PostprocMode::WeakSed => "weaksed",
        })
    }
}

/// Default number of decision thresholds in the sweep.
pub const DEFAULT_THRESHOLD_COUNT: usize = 50;

/// Evenly spaced decision thresholds over [0.01, 0.99].
pub fn default_thresholds(count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5];
    }
    (0..count)
        .map(|i| 0.01 + 0.98 * i as f64 / (count - 1) as f64)
        .collect()
}

/// Post-processing settings for score decoding.
#[derive(Debug, Clone)]
pub struct PostprocConfig {
    pub mode: PostprocMode,
    /// Clip-probability cutoff used by [`PostprocMode::Mask`].
    pub mask_threshold: f64,
    pub table: ClassTable,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            mode: PostprocMode::Mask,
            mask_threshold: crate::postproc::DEFAULT_THRESHOLD,
            table: ClassTable::dcase_default(),
        }
    }
}

/// Apply the clip-level mode and the class-wise median filter, then decode
/// events at every threshold. Returns `(threshold, events)` pairs.
pub fn decode_at_thresholds<T: Scalar>(
    pred: &FramePredictions<T>,
    cfg: &PostprocConfig,
    thresholds: &[f64],
    clip: &str,
) -> Result<Vec<(f64, Vec<Event>)>> {
    let shaped = match cfg.mode {
        PostprocMode::Mask => {
            weak_prediction_masking(&pred.strong, &pred.weak, T::lit(cfg.mask_threshold))?
        }
        PostprocMode::WeakSed => weak_sed(&pred.strong, &pred.weak)?,
    };
    let smoothed = median_filter_per_class(&shaped, &cfg.table)?;
    thresholds
        .iter()
        .map(|&th| {
            let events = decode_events(&smoothed, T::lit(th), pred.frame_duration_s, &cfg.table, clip)?;
            Ok((th, events))
        })
        .collect()
}

/// Combined metric report.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub psds1: f64,
    pub psds2: f64,
    pub cbf1: f64,
    pub roc1: RocCurve,
    pub roc2: RocCurve,
    /// Collar matching at the operating point closest to threshold 0.5.
    pub collar: CollarF1Result,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// The single-line report format.
    pub fn summary_line(&self) -> String {
        format!(
            "PSDS1={:.4} PSDS2={:.4} CBF1={:.3}",
            self.psds1, self.psds2, self.cbf1
        )
    }
}

/// Score a threshold sweep of detection lists against ground truth.
///
/// The class universe is the union of ground-truth and detected classes;
/// classes never seen in the ground truth contribute false positives but
/// are excluded from the TPR statistics. The collar F1 is computed at the
/// operating point whose threshold is closest to 0.5.
pub fn evaluate(
    per_threshold: &[(f64, Vec<Event>)],
    gts: &[Event],
    durations: &[(String, f64)],
    psds1_params: &PsdsParams,
    psds2_params: &PsdsParams,
) -> Result<EvalReport> {
    if per_threshold.is_empty() {
        return Err(Error::invalid("evaluate", "no operating points"));
    }
    let mut classes: Vec<String> = gts
        .iter()
        .map(|e| e.class.clone())
        .chain(per_threshold.iter().flat_map(|(_, d)| d.iter().map(|e| e.class.clone())))
        .collect();
    classes.sort();
    classes.dedup();
    if classes.is_empty() {
        return Err(Error::invalid("evaluate", "no events in ground truth or detections"));
    }
    let n_gt: Vec<usize> = classes
        .iter()
        .map(|c| gts.iter().filter(|g| &g.class == c).count())
        .collect();
    let total_duration_h = durations.iter().map(|(_, d)| d).sum::<f64>() / 3600.0;
    let info = DatasetInfo::new(classes.clone(), n_gt, total_duration_h);

    let sweep = |params: &PsdsParams| -> Result<(RocCurve, Vec<String>, f64)> {
        let points = per_threshold
            .iter()
            .map(|(th, dets)| {
                Ok(OperatingPoint {
                    threshold: *th,
                    counts: match_detections(dets, gts, params.dtc, params.gtc, params.cttc, &classes)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (curve, warnings) = build_roc(&points, params, &info)?;
        let score = psds_score(&curve, params);
        Ok((curve, warnings, score))
    };

    let (roc1, mut warnings, psds1) = sweep(psds1_params)?;
    let (roc2, warn2, psds2) = sweep(psds2_params)?;
    for w in warn2 {
        if !warnings.contains(&w) {
            warnings.push(w);
        }
    }

    let mid = per_threshold
        .iter()
        .min_by(|a, b| {
            (a.0 - 0.5).abs().partial_cmp(&(b.0 - 0.5).abs()).expect("finite thresholds")
        })
        .expect("non-empty sweep");
    let collar = collar_f1(&mid.1, gts, DEFAULT_ONSET_COLLAR, DEFAULT_OFFSET_COLLAR_FRAC)?;

    Ok(EvalReport {
        psds1,
        psds2,
        cbf1: collar.macro_f1,
        roc1,
        roc2,
        collar,
        warnings,
    })
}
