//! Intersection-criteria event scoring, ROC construction and the normalized
//! area score, collar-based macro F1, and ensemble averaging.
//!
//! Matching uses three intersection-ratio criteria:
//! - a detection passes the detection tolerance criterion (DTC) when its
//!   summed intersection with same-class ground truths covers at least
//!   `dtc` of its own duration;
//! - a ground truth is a true positive when DTC-passing same-class
//!   detections cover at least `gtc` of it;
//! - a DTC-failing detection is a false positive, and additionally counts
//!   as a cross-trigger against another class when it covers at least
//!   `cttc` of its duration with that class's ground truths.
//!
//! Per operating point the effective rates are
//! `eTPR = mean_c TPR_c - alpha_st * popstd_c TPR_c` over classes that have
//! ground truths, and
//! `eFPR = FP_total / duration_h + alpha_ct * mean_c' CT_rate(c')` with
//! `CT_rate(c') = sum_c CT[c][c'] / class_duration_h(c')`. The ROC is the
//! right-continuous upper-envelope staircase of the operating points,
//! prefixed at eFPR 0 with the strictest point's eTPR, and the score is the
//! clipped area over `[0, e_max]` divided by `e_max`.

use crate::error::{Error, Result};
use crate::model::FramePredictions;
use crate::postproc::Event;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::collections::BTreeMap;

/// Parameters of one PSDS variant.
#[derive(Debug, Clone)]
pub struct PsdsParams {
    pub dtc: f64,
    pub gtc: f64,
    pub cttc: f64,
    pub alpha_ct: f64,
    pub alpha_st: f64,
    /// Right edge of the ROC integration, in false positives per hour.
    pub e_max: f64,
}

impl PsdsParams {
    /// Timestamp-sensitive variant: strict intersection ratios, no
    /// cross-trigger term.
    pub fn psds1() -> Self {
        PsdsParams {
            dtc: 0.7,
            gtc: 0.7,
            cttc: 0.3,
            alpha_ct: 0.0,
            alpha_st: 1.0,
            e_max: 100.0,
        }
    }

    /// Cross-trigger-sensitive variant: loose intersection ratios, penalized
    /// cross-triggers.
    pub fn psds2() -> Self {
        PsdsParams {
            dtc: 0.1,
            gtc: 0.1,
            cttc: 0.3,
            alpha_ct: 0.5,
            alpha_st: 1.0,
            e_max: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dtc", self.dtc), ("gtc", self.gtc)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid("psds", format!("{name} {v} outside (0, 1]")));
            }
        }
        if self.cttc < 0.0 || self.alpha_ct < 0.0 || self.alpha_st < 0.0 || self.e_max <= 0.0 {
            return Err(Error::invalid("psds", "negative parameter"));
        }
        Ok(())
    }
}

/// Per-class counts produced by [`match_detections`] at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionCounts {
    pub classes: Vec<String>,
    pub tp: Vec<usize>,
    pub fp: Vec<usize>,
    /// `ct[c][c2]`: DTC-failing detections of class `c` that cross-trigger
    /// class `c2`. The diagonal is unused.
    pub ct: Vec<Vec<usize>>,
}

fn overlap(a: &Event, b: &Event) -> f64 {
    (a.offset_s.min(b.offset_s) - a.onset_s.max(b.onset_s)).max(0.0)
}

/// Intersection-criteria matching over a whole clip universe.
pub fn match_detections(
    dets: &[Event],
    gts: &[Event],
    dtc: f64,
    gtc: f64,
    cttc: f64,
    classes: &[String],
) -> Result<DetectionCounts> {
    for ev in dets.iter().chain(gts) {
        ev.validate()?;
    }
    let class_idx: BTreeMap<&str, usize> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let idx_of = |name: &str| -> Result<usize> {
        class_idx
            .get(name)
            .copied()
            .ok_or_else(|| Error::invalid("match_detections", format!("class `{name}` not in universe")))
    };

    // Ground truths grouped by (clip, class index).
    let mut gt_by_key: BTreeMap<(&str, usize), Vec<&Event>> = BTreeMap::new();
    for gt in gts {
        gt_by_key.entry((gt.clip.as_str(), idx_of(&gt.class)?)).or_default().push(gt);
    }

    let n = classes.len();
    let mut tp = vec![0usize; n];
    let mut fp = vec![0usize; n];
    let mut ct = vec![vec![0usize; n]; n];
    // Coverage accumulated on each ground truth by DTC-passing detections.
    let mut gt_cover: BTreeMap<(usize, usize), f64> = BTreeMap::new(); // (class, gt index in gts) -> seconds
    let gt_order: BTreeMap<*const Event, usize> =
        gts.iter().enumerate().map(|(i, g)| (g as *const Event, i)).collect();

    for det in dets {
        let c = idx_of(&det.class)?;
        let same_class = gt_by_key.get(&(det.clip.as_str(), c));
        let total: f64 = same_class
            .map(|list| list.iter().map(|gt| overlap(det, gt)).sum())
            .unwrap_or(0.0);
        let dtc_pass = total / det.duration() >= dtc;
        if dtc_pass {
            if let Some(list) = same_class {
                for gt in list {
                    let key = (c, gt_order[&(*gt as *const Event)]);
                    *gt_cover.entry(key).or_insert(0.0) += overlap(det, gt);
                }
            }
        } else {
            fp[c] += 1;
            // Cross-triggers are evaluated only for DTC-failing detections.
            for c2 in 0..n {
                if c2 == c {
                    continue;
                }
                if let Some(list) = gt_by_key.get(&(det.clip.as_str(), c2)) {
                    let cross: f64 = list.iter().map(|gt| overlap(det, gt)).sum();
                    if cross / det.duration() >= cttc {
                        ct[c][c2] += 1;
                    }
                }
            }
        }
    }

    for (i, gt) in gts.iter().enumerate() {
        let c = idx_of(&gt.class)?;
        let covered = gt_cover.get(&(c, i)).copied().unwrap_or(0.0);
        if covered / gt.duration() >= gtc {
            tp[c] += 1;
        }
    }

    Ok(DetectionCounts {
        classes: classes.to_vec(),
        tp,
        fp,
        ct,
    })
}

/// One decision threshold's matching outcome plus the dataset durations it
/// was computed against.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub counts: DetectionCounts,
}

/// Dataset-level context shared by every operating point.
#[derive(Debug, Clone)]
pub struct DatasetInfo {
    pub classes: Vec<String>,
    /// Ground-truth event count per class.
    pub n_gt: Vec<usize>,
    pub total_duration_h: f64,
    /// Per-class dataset duration for cross-trigger rates; equals the
    /// total duration unless a caller has better information.
    pub class_duration_h: Vec<f64>,
}

impl DatasetInfo {
    pub fn new(classes: Vec<String>, n_gt: Vec<usize>, total_duration_h: f64) -> Self {
        let k = classes.len();
        DatasetInfo {
            classes,
            n_gt,
            total_duration_h,
            class_duration_h: vec![total_duration_h; k],
        }
    }

    pub fn from_ground_truth(gts: &[Event], durations: &[(String, f64)]) -> Self {
        let mut classes: Vec<String> = gts.iter().map(|g| g.class.clone()).collect();
        classes.sort();
        classes.dedup();
        let n_gt = classes
            .iter()
            .map(|c| gts.iter().filter(|g| &g.class == c).count())
            .collect();
        let total_duration_h = durations.iter().map(|(_, d)| d).sum::<f64>() / 3600.0;
        Self::new(classes, n_gt, total_duration_h)
    }
}

/// Effective-TPR versus effective-FPR staircase.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(eFPR per hour, eTPR)`, eFPR strictly increasing, eTPR
    /// non-decreasing, first point at eFPR 0.
    pub points: Vec<(f64, f64)>,
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Build the ROC staircase from per-threshold counts.
///
/// Classes with zero ground truths are excluded from the TPR statistics
/// (reported in the returned warnings); their false positives still count.
pub fn build_roc(
    points: &[OperatingPoint],
    params: &PsdsParams,
    info: &DatasetInfo,
) -> Result<(RocCurve, Vec<String>)> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::invalid("build_roc", "no operating points"));
    }
    if info.total_duration_h <= 0.0 {
        return Err(Error::invalid("build_roc", "non-positive dataset duration"));
    }
    let n = info.classes.len();
    let included: Vec<usize> = (0..n).filter(|&c| info.n_gt[c] > 0).collect();
    let mut warnings = Vec::new();
    for c in 0..n {
        if info.n_gt[c] == 0 {
            warnings.push(format!("class `{}` has no ground truths; excluded from eTPR", info.classes[c]));
        }
    }
    if included.is_empty() {
        return Err(Error::invalid("build_roc", "no class has ground truths"));
    }

    let mut raw: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for op in points {
        if op.counts.classes != info.classes {
            return Err(Error::invalid("build_roc", "operating point classes differ from dataset classes"));
        }
        let tprs: Vec<f64> = included
            .iter()
            .map(|&c| op.counts.tp[c] as f64 / info.n_gt[c] as f64)
            .collect();
        let mean = tprs.iter().sum::<f64>() / tprs.len() as f64;
        let etpr = mean - params.alpha_st * population_std(&tprs, mean);

        let fp_total: usize = op.counts.fp.iter().sum();
        let mut efpr = fp_total as f64 / info.total_duration_h;
        if params.alpha_ct > 0.0 {
            let ct_rates: Vec<f64> = included
                .iter()
                .map(|&c2| {
                    let hits: usize = (0..n).map(|c| op.counts.ct[c][c2]).sum();
                    hits as f64 / info.class_duration_h[c2]
                })
                .collect();
            let mean_ct = ct_rates.iter().sum::<f64>() / ct_rates.len() as f64;
            efpr += params.alpha_ct * mean_ct;
        }
        raw.push((efpr, etpr));
    }

    raw.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    // Upper envelope: max eTPR at equal eFPR, running max to the right so
    // the staircase never dips.
    let mut envelope: Vec<(f64, f64)> = Vec::with_capacity(raw.len() + 1);
    let mut best = f64::NEG_INFINITY;
    for (x, y) in raw {
        best = best.max(y);
        match envelope.last_mut() {
            Some(last) if last.0 == x => last.1 = best,
            _ => envelope.push((x, best)),
        }
    }
    // Anchor the strictest point's level at eFPR zero.
    if envelope[0].0 > 0.0 {
        let first_y = envelope[0].1;
        envelope.insert(0, (0.0, first_y));
    }
    Ok((RocCurve { points: envelope }, warnings))
}

/// Normalized area under `max(eTPR, 0)` over `eFPR in [0, e_max]` with
/// right-continuous step interpolation.
pub fn psds_score(curve: &RocCurve, params: &PsdsParams) -> f64 {
    let mut area = 0.0;
    for (i, &(x, y)) in curve.points.iter().enumerate() {
        if x >= params.e_max {
            break;
        }
        let next_x = curve
            .points
            .get(i + 1)
            .map(|&(nx, _)| nx)
            .unwrap_or(params.e_max)
            .min(params.e_max);
        area += y.max(0.0) * (next_x - x);
    }
    area / params.e_max
}

/// Per-class collar-matching outcome.
#[derive(Debug, Clone)]
pub struct CollarClassResult {
    pub class: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub f1: f64,
}

#[derive(Debug, Clone)]
pub struct CollarF1Result {
    /// Mean F1 over classes present in the ground truth.
    pub macro_f1: f64,
    pub per_class: Vec<CollarClassResult>,
}

/// Event-level F1 with onset/offset collars.
///
/// Per class and clip, detections are matched one-to-one to ground truths
/// greedily in onset order. A detection matches when its onset is within
/// `onset_collar` of the ground truth's and its offset is within
/// `max(onset_collar, offset_collar_frac * gt_duration)`.
pub fn collar_f1(
    dets: &[Event],
    gts: &[Event],
    onset_collar: f64,
    offset_collar_frac: f64,
) -> Result<CollarF1Result> {
    for ev in dets.iter().chain(gts) {
        ev.validate()?;
    }
    let mut classes: Vec<String> = gts.iter().map(|g| g.class.clone()).collect();
    classes.sort();
    classes.dedup();

    let mut per_class = Vec::with_capacity(classes.len());
    for class in &classes {
        let mut clips: Vec<&str> = gts
            .iter()
            .chain(dets)
            .filter(|e| &e.class == class)
            .map(|e| e.clip.as_str())
            .collect();
        clips.sort();
        clips.dedup();

        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for clip in clips {
            let mut clip_gts: Vec<&Event> = gts
                .iter()
                .filter(|g| &g.class == class && g.clip == clip)
                .collect();
            clip_gts.sort_by(|a, b| a.onset_s.partial_cmp(&b.onset_s).unwrap());
            let mut clip_dets: Vec<&Event> = dets
                .iter()
                .filter(|d| &d.class == class && d.clip == clip)
                .collect();
            clip_dets.sort_by(|a, b| a.onset_s.partial_cmp(&b.onset_s).unwrap());

            let mut taken = vec![false; clip_gts.len()];
            for det in clip_dets {
                let mut matched = false;
                for (i, gt) in clip_gts.iter().enumerate() {
                    if taken[i] {
                        continue;
                    }
                    let offset_collar = onset_collar.max(offset_collar_frac * gt.duration());
                    if (det.onset_s - gt.onset_s).abs() <= onset_collar
                        && (det.offset_s - gt.offset_s).abs() <= offset_collar
                    {
                        taken[i] = true;
                        matched = true;
                        break;
                    }
                }
                if matched {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
            fn_ += taken.iter().filter(|&&t| !t).count();
        }
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        per_class.push(CollarClassResult {
            class: class.clone(),
            tp,
            fp,
            fn_,
            f1,
        });
    }
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
    };
    Ok(CollarF1Result {
        macro_f1,
        per_class,
    })
}

/// Default onset collar in seconds.
pub const DEFAULT_ONSET_COLLAR: f64 = 0.2;
/// Default duration-relative offset collar.
pub const DEFAULT_OFFSET_COLLAR_FRAC: f64 = 0.2;

/// Elementwise arithmetic mean of several models' predictions.
pub fn ensemble_average<T: Scalar>(preds: &[FramePredictions<T>]) -> Result<FramePredictions<T>> {
    let first = preds
        .first()
        .ok_or_else(|| Error::invalid("ensemble_average", "empty prediction list"))?;
    for (i, p) in preds.iter().enumerate() {
        if p.strong.shape() != first.strong.shape() || p.weak.shape() != first.weak.shape() {
            return Err(Error::invalid(
                "ensemble_average",
                format!(
                    "prediction {i} shape {:?}/{:?} differs from {:?}/{:?}",
                    p.strong.shape(),
                    p.weak.shape(),
                    first.strong.shape(),
                    first.weak.shape()
                ),
            ));
        }
    }
    let norm = T::one() / T::from_count(preds.len());
    let mut strong = Tensor::zeros(first.strong.shape());
    let mut weak = Tensor::zeros(first.weak.shape());
    for p in preds {
        for (dst, &src) in strong.data_mut().iter_mut().zip(p.strong.data()) {
            *dst += src;
        }
        for (dst, &src) in weak.data_mut().iter_mut().zip(p.weak.data()) {
            *dst += src;
        }
    }
    for v in strong.data_mut() {
        *v *= norm;
    }
    for v in weak.data_mut() {
        *v *= norm;
    }
    Ok(FramePredictions {
        strong,
        weak,
        frame_duration_s: first.frame_duration_s,
    })
}

/// Durations TSV: header `filename\tduration`, seconds per clip.
pub fn parse_durations_tsv(text: &str, origin: &str) -> Result<Vec<(String, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == "filename\tduration" => {}
        Some((_, h)) => {
            return Err(Error::Tsv {
                path: origin.into(),
                line: 1,
                msg: format!("expected header `filename\\tduration`, got `{h}`"),
            })
        }
        None => {
            return Err(Error::Tsv {
                path: origin.into(),
                line: 1,
                msg: "empty file".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::Tsv {
                path: origin.into(),
                line: i + 1,
                msg: format!("{} fields, expected 2", fields.len()),
            });
        }
        let d = fields[1]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| Error::Tsv {
                path: origin.into(),
                line: i + 1,
                msg: format!("bad duration `{}`", fields[1]),
            })?;
        out.push((fields[0].to_string(), d));
    }
    Ok(out)
}

/// ROC dump TSV: header `efpr\tetpr`, one staircase point per row.
pub fn roc_to_tsv(curve: &RocCurve) -> String {
    let mut out = String::from("efpr\tetpr\n");
    for &(x, y) in &curve.points {
        out.push_str(&format!("{x:.6}\t{y:.6}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ev(clip: &str, class: &str, onset: f64, offset: f64) -> Event {
        Event {
            clip: clip.into(),
            class: class.into(),
            onset_s: onset,
            offset_s: offset,
        }
    }

    fn two_classes() -> Vec<String> {
        vec!["a".to_string(), "b".to_string()]
    }

    #[test]
    fn exact_detection_is_tp() {
        let gts = vec![ev("c", "a", 1.0, 3.0)];
        let dets = vec![ev("c", "a", 1.0, 3.0)];
        let counts = match_detections(&dets, &gts, 1.0, 1.0, 0.3, &two_classes()).unwrap();
        assert_eq!(counts.tp, vec![1, 0]);
        assert_eq!(counts.fp, vec![0, 0]);
    }

    #[test]
    fn disjoint_detection_is_fp() {
        let gts = vec![ev("c", "a", 1.0, 3.0)];
        let dets = vec![ev("c", "a", 5.0, 6.0)];
        let counts = match_detections(&dets, &gts, 0.7, 0.7, 0.3, &two_classes()).unwrap();
        assert_eq!(counts.tp, vec![0, 0]);
        assert_eq!(counts.fp, vec![1, 0]);
    }

    #[test]
    fn dtc_pass_but_gtc_fail_is_neither_tp_nor_fp() {
        // Detection (0, 6) inside ground truth (0, 10): DTC ratio 6/6 = 1,
        // but coverage 6/10 = 0.6 < 0.7.
        let gts = vec![ev("c", "a", 0.0, 10.0)];
        let dets = vec![ev("c", "a", 0.0, 6.0)];
        let counts = match_detections(&dets, &gts, 0.7, 0.7, 0.3, &two_classes()).unwrap();
        assert_eq!(counts.tp, vec![0, 0]);
        assert_eq!(counts.fp, vec![0, 0]);
    }

    #[test]
    fn hand_computed_count_fixture() {
        let gts = vec![ev("c1", "a", 0.0, 10.0), ev("c1", "b", 20.0, 30.0)];
        let dets = vec![
            ev("c1", "a", 0.0, 6.0),   // DTC pass, GT coverage 0.6
            ev("c1", "b", 20.0, 30.0), // exact
            ev("c1", "a", 40.0, 44.0), // disjoint FP, no cross-trigger
            ev("c1", "b", 21.0, 25.0), // DTC pass, adds coverage to b
            ev("c1", "a", 24.0, 28.0), // FP, fully inside b: cross-trigger
        ];
        let strict = match_detections(&dets, &gts, 0.7, 0.7, 0.3, &two_classes()).unwrap();
        assert_eq!(strict.tp, vec![0, 1]);
        assert_eq!(strict.fp, vec![2, 0]);
        assert_eq!(strict.ct[0][1], 1);
        assert_eq!(strict.ct[1][0], 0);

        let loose = match_detections(&dets, &gts, 0.1, 0.1, 0.3, &two_classes()).unwrap();
        assert_eq!(loose.tp, vec![1, 1]);
        assert_eq!(loose.fp, vec![2, 0]);
        assert_eq!(loose.ct[0][1], 1);
    }

    #[test]
    fn malformed_event_rejected() {
        let bad = vec![ev("c", "a", 3.0, 3.0)];
        assert!(match_detections(&bad, &[], 0.7, 0.7, 0.3, &two_classes()).is_err());
    }

    #[test]
    fn matching_invariant_to_event_order_and_clip_names() {
        let gts = vec![ev("c1", "a", 0.0, 10.0), ev("c1", "b", 20.0, 30.0)];
        let dets = vec![
            ev("c1", "a", 0.0, 6.0),
            ev("c1", "b", 21.0, 25.0),
            ev("c1", "a", 24.0, 28.0),
        ];
        let base = match_detections(&dets, &gts, 0.7, 0.7, 0.3, &two_classes()).unwrap();

        let mut shuffled = dets.clone();
        shuffled.reverse();
        let mut gts_rev = gts.clone();
        gts_rev.reverse();
        let re = match_detections(&shuffled, &gts_rev, 0.7, 0.7, 0.3, &two_classes()).unwrap();
        assert_eq!(base, re);

        let rename = |list: &[Event]| -> Vec<Event> {
            list.iter()
                .map(|e| Event {
                    clip: format!("renamed-{}", e.clip),
                    ..e.clone()
                })
                .collect()
        };
        let renamed = match_detections(&rename(&dets), &rename(&gts), 0.7, 0.7, 0.3, &two_classes()).unwrap();
        assert_eq!(base, renamed);
    }

    fn op(threshold: f64, tp: Vec<usize>, fp: Vec<usize>, classes: &[String]) -> OperatingPoint {
        let n = classes.len();
        OperatingPoint {
            threshold,
            counts: DetectionCounts {
                classes: classes.to_vec(),
                tp,
                fp,
                ct: vec![vec![0; n]; n],
            },
        }
    }

    #[test]
    fn perfect_single_point_curve() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![2, 3], 1.0);
        let points = vec![op(0.5, vec![2, 3], vec![0, 0], &classes)];
        let (curve, warnings) = build_roc(&points, &PsdsParams::psds1(), &info).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(curve.points, vec![(0.0, 1.0)]);
        assert_relative_eq!(psds_score(&curve, &PsdsParams::psds1()), 1.0);
    }

    #[test]
    fn equal_tprs_have_no_std_penalty() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![2, 2], 1.0);
        let points = vec![op(0.5, vec![1, 1], vec![0, 0], &classes)];
        let (curve, _) = build_roc(&points, &PsdsParams::psds1(), &info).unwrap();
        assert_relative_eq!(curve.points[0].1, 0.5);
    }

    #[test]
    fn opposite_tprs_cancel_under_unit_std_penalty() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![1, 1], 1.0);
        let points = vec![op(0.5, vec![1, 0], vec![0, 0], &classes)];
        let (curve, _) = build_roc(&points, &PsdsParams::psds1(), &info).unwrap();
        // mean 0.5 - 1.0 * popstd 0.5 = 0.
        assert_relative_eq!(curve.points[0].1, 0.0);
    }

    #[test]
    fn zero_gt_class_excluded_with_warning() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![2, 0], 1.0);
        let points = vec![op(0.5, vec![2, 0], vec![0, 1], &classes)];
        let (curve, warnings) = build_roc(&points, &PsdsParams::psds1(), &info).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("`b`"));
        // TPR statistics over class a only; class b's FP still counts.
        assert_relative_eq!(curve.points.last().unwrap().1, 1.0);
        assert_relative_eq!(curve.points.last().unwrap().0, 1.0);
    }

    #[test]
    fn cross_trigger_term_enters_efpr() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![1, 1], 1.0 / 60.0); // one minute
        let mut point = op(0.5, vec![1, 1], vec![2, 0], &classes);
        point.counts.ct[0][1] = 1;
        let (curve, _) = build_roc(&[point], &PsdsParams::psds2(), &info).unwrap();
        // FP term 2 * 60 = 120; CT rates: a gets 0, b gets 60; mean 30;
        // alpha_ct 0.5 adds 15.
        let last = curve.points.last().unwrap();
        assert_relative_eq!(last.0, 135.0, epsilon = 1e-9);
    }

    #[test]
    fn step_area_hand_case() {
        let curve = RocCurve {
            points: vec![(0.0, 0.0), (50.0, 0.5), (100.0, 0.5)],
        };
        assert_relative_eq!(psds_score(&curve, &PsdsParams::psds1()), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn empty_detections_score_zero() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![1, 1], 1.0);
        let points = vec![op(0.5, vec![0, 0], vec![0, 0], &classes)];
        let (curve, _) = build_roc(&points, &PsdsParams::psds1(), &info).unwrap();
        assert_relative_eq!(psds_score(&curve, &PsdsParams::psds1()), 0.0);
    }

    #[test]
    fn duplicate_operating_points_do_not_change_score() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![2, 2], 0.5);
        let p1 = op(0.5, vec![1, 2], vec![3, 1], &classes);
        let p2 = op(0.3, vec![2, 2], vec![10, 5], &classes);
        let single = vec![p1.clone(), p2.clone()];
        let doubled = vec![p1.clone(), p2.clone(), p1, p2];
        let params = PsdsParams::psds1();
        let (c1, _) = build_roc(&single, &params, &info).unwrap();
        let (c2, _) = build_roc(&doubled, &params, &info).unwrap();
        assert_eq!(c1, c2);
    }

    #[test]
    fn adding_an_operating_point_never_lowers_the_score() {
        let classes = two_classes();
        let info = DatasetInfo::new(classes.clone(), vec![4, 4], 0.25);
        let params = PsdsParams::psds1();
        let mut points = vec![op(0.9, vec![1, 1], vec![0, 0], &classes)];
        let (c, _) = build_roc(&points, &params, &info).unwrap();
        let mut last = psds_score(&c, &params);
        // Sweep lower thresholds: more detections, higher TPR and FP.
        let added = [
            op(0.7, vec![2, 2], vec![1, 1], &classes),
            op(0.5, vec![3, 3], vec![3, 2], &classes),
            op(0.3, vec![4, 3], vec![6, 4], &classes),
            op(0.1, vec![4, 4], vec![12, 9], &classes),
        ];
        for p in added {
            points.push(p);
            let (c, _) = build_roc(&points, &params, &info).unwrap();
            let score = psds_score(&c, &params);
            assert!(score >= last - 1e-12, "{score} < {last}");
            last = score;
        }
    }

    #[test]
    fn single_class_no_penalty_reduces_to_plain_tpr() {
        let classes = vec!["only".to_string()];
        let info = DatasetInfo::new(classes.clone(), vec![4], 1.0);
        let params = PsdsParams {
            alpha_st: 0.0,
            ..PsdsParams::psds1()
        };
        let points = vec![op(0.5, vec![3], vec![0], &classes)];
        let (curve, _) = build_roc(&points, &params, &info).unwrap();
        assert_relative_eq!(curve.points[0].1, 0.75);
    }

    #[test]
    fn collar_f1_identical_lists() {
        let gts = vec![ev("c", "a", 1.0, 3.0), ev("c", "b", 2.0, 6.0)];
        let res = collar_f1(&gts, &gts, 0.2, 0.2).unwrap();
        assert_relative_eq!(res.macro_f1, 1.0);
    }

    #[test]
    fn collar_f1_no_detections() {
        let gts = vec![ev("c", "a", 1.0, 3.0)];
        let res = collar_f1(&[], &gts, 0.2, 0.2).unwrap();
        assert_relative_eq!(res.macro_f1, 0.0);
        assert_eq!(res.per_class[0].fn_, 1);
    }

    #[test]
    fn collar_f1_offset_collar_arithmetic() {
        // Onset within 0.15 <= 0.2, offset off by 0.9 > max(0.2, 0.8).
        let gts = vec![ev("c", "a", 1.0, 5.0)];
        let dets = vec![ev("c", "a", 1.15, 5.9)];
        let res = collar_f1(&dets, &gts, 0.2, 0.2).unwrap();
        assert_eq!(res.per_class[0].tp, 0);
        assert_eq!(res.per_class[0].fp, 1);
        assert_eq!(res.per_class[0].fn_, 1);
        assert_relative_eq!(res.macro_f1, 0.0);

        // Pull the offset inside the duration-relative collar.
        let dets = vec![ev("c", "a", 1.15, 5.7)];
        let res = collar_f1(&dets, &gts, 0.2, 0.2).unwrap();
        assert_relative_eq!(res.macro_f1, 1.0);
    }

    #[test]
    fn collar_f1_is_one_to_one() {
        // Two detections on one ground truth: one TP, one FP.
        let gts = vec![ev("c", "a", 1.0, 3.0)];
        let dets = vec![ev("c", "a", 1.0, 3.0), ev("c", "a", 1.1, 3.1)];
        let res = collar_f1(&dets, &gts, 0.2, 0.2).unwrap();
        assert_eq!(res.per_class[0].tp, 1);
        assert_eq!(res.per_class[0].fp, 1);
    }

    #[test]
    fn ensemble_average_identity_and_mean() {
        let p = |v: f32| FramePredictions {
            strong: Tensor::new(&[2, 2], vec![v; 4]).unwrap(),
            weak: Tensor::new(&[2], vec![v; 2]).unwrap(),
            frame_duration_s: 0.064,
        };
        let avg = ensemble_average(&[p(0.4), p(0.4), p(0.4)]).unwrap();
        assert!(avg.strong.data().iter().all(|&v| (v - 0.4).abs() < 1e-7));

        let avg = ensemble_average(&[p(0.2), p(0.8)]).unwrap();
        assert!(avg.strong.data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
        assert!(avg.weak.data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
    }

    #[test]
    fn ensemble_average_stays_in_envelope() {
        let mut rng = crate::augment::rng_from_seed(3);
        let preds: Vec<FramePredictions<f64>> = (0..4)
            .map(|_| FramePredictions {
                strong: Tensor::random_uniform(&[3, 2], 0.0, 1.0, &mut rng),
                weak: Tensor::random_uniform(&[2], 0.0, 1.0, &mut rng),
                frame_duration_s: 0.064,
            })
            .collect();
        let avg = ensemble_average(&preds).unwrap();
        for i in 0..avg.strong.len() {
            let vals: Vec<f64> = preds.iter().map(|p| p.strong.data()[i]).collect();
            let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
            let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
            assert!(avg.strong.data()[i] >= lo - 1e-12 && avg.strong.data()[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn ensemble_average_errors() {
        let a = FramePredictions::<f32> {
            strong: Tensor::zeros(&[2, 2]),
            weak: Tensor::zeros(&[2]),
            frame_duration_s: 0.064,
        };
        let b = FramePredictions::<f32> {
            strong: Tensor::zeros(&[3, 2]),
            weak: Tensor::zeros(&[2]),
            frame_duration_s: 0.064,
        };
        assert!(ensemble_average::<f32>(&[]).is_err());
        assert!(ensemble_average(&[a, b]).is_err());
    }

    #[test]
    fn durations_tsv_parses() {
        let text = "filename\tduration\na.wav\t10.0\nb.wav\t7.5\n";
        let d = parse_durations_tsv(text, "mem").unwrap();
        assert_eq!(d, vec![("a.wav".to_string(), 10.0), ("b.wav".to_string(), 7.5)]);
        assert!(parse_durations_tsv("bad\theader\n", "mem").is_err());
    }
}
