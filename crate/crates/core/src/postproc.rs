//! From frame probabilities to event lists: clip-level masking or
//! replacement, class-wise median smoothing, thresholding and run decoding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::path::Path;

/// Default binarization threshold for single-operating-point decoding.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Ordered class names with their per-class median filter lengths, in
/// output frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassTable {
    entries: Vec<(String, usize)>,
}

impl ClassTable {
    /// The ten-class domestic sound table with its per-class median filter
    /// lengths (short transients get 5 frames, long stationary sources get
    /// much longer filters).
    pub fn dcase_default() -> Self {
        let entries = [
            ("alarm/bell ringing", 5),
            ("blender", 11),
            ("cat", 5),
            ("dish", 5),
            ("dog", 5),
            ("electric shaver/toothbrush", 67),
            ("frying", 61),
            ("running water", 49),
            ("speech", 5),
            ("vacuum cleaner", 17),
        ];
        ClassTable {
            entries: entries.iter().map(|&(n, l)| (n.to_string(), l)).collect(),
        }
    }

    pub fn new(entries: Vec<(String, usize)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("class_table", "no classes"));
        }
        for (name, len) in &entries {
            if *len == 0 || *len % 2 == 0 {
                return Err(Error::invalid(
                    "class_table",
                    format!("median length {len} for `{name}` must be odd and >= 1"),
                ));
            }
        }
        Ok(ClassTable { entries })
    }

    /// Replace the median lengths, keeping the class order.
    pub fn with_lengths(&self, lengths: &[usize]) -> Result<Self> {
        if lengths.len() != self.entries.len() {
            return Err(Error::invalid(
                "class_table",
                format!("{} lengths for {} classes", lengths.len(), self.entries.len()),
            ));
        }
        Self::new(
            self.entries
                .iter()
                .zip(lengths)
                .map(|((n, _), &l)| (n.clone(), l))
                .collect(),
        )
    }

    pub fn n_classes(&self) -> usize {
        self.entries.len()
    }

    pub fn class_name(&self, idx: usize) -> &str {
        &self.entries[idx].0
    }

    pub fn median_length(&self, idx: usize) -> usize {
        self.entries[idx].1
    }

    pub fn class_names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }
}

/// One decoded sound event.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub clip: String,
    pub class: String,
    pub onset_s: f64,
    pub offset_s: f64,
}

impl Event {
    pub fn validate(&self) -> Result<()> {
        if !(self.onset_s >= 0.0 && self.onset_s < self.offset_s) {
            return Err(Error::invalid(
                "event",
                format!(
                    "`{}`/{}: onset {} and offset {} must satisfy 0 <= onset < offset",
                    self.clip, self.class, self.onset_s, self.offset_s
                ),
            ));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

fn check_strong_shape<T: Scalar>(op: &'static str, strong: &Tensor<T>, n_classes: usize) -> Result<()> {
    if strong.rank() != 2 {
        return Err(Error::invalid(op, "expected [t_frames, classes] input"));
    }
    crate::tensor::expect_axis(op, "class", n_classes, strong.dim(1))
}

/// Zero every class column whose clip-level probability is below the
/// threshold; columns at or above it pass through unchanged.
pub fn weak_prediction_masking<T: Scalar>(
    strong: &Tensor<T>,
    weak: &Tensor<T>,
    threshold: T,
) -> Result<Tensor<T>> {
    check_strong_shape("weak_prediction_masking", strong, weak.len())?;
    let (n_t, n_c) = (strong.dim(0), strong.dim(1));
    let mut out = strong.clone();
    for c in 0..n_c {
        if weak.data()[c] < threshold {
            for t in 0..n_t {
                let off = out.off2(t, c);
                out.data_mut()[off] = T::zero();
            }
        }
    }
    Ok(out)
}

/// Replace every frame with the clip-level probabilities, discarding
/// temporal localization entirely.
pub fn weak_sed<T: Scalar>(strong: &Tensor<T>, weak: &Tensor<T>) -> Result<Tensor<T>> {
    check_strong_shape("weak_sed", strong, weak.len())?;
    let (n_t, n_c) = (strong.dim(0), strong.dim(1));
    let mut out = Tensor::zeros(strong.shape());
    for t in 0..n_t {
        for c in 0..n_c {
            let off = out.off2(t, c);
            out.data_mut()[off] = weak.data()[c];
        }
    }
    Ok(out)
}

/// Class-wise centered sliding median with edge replication; the filter
/// length per class comes from the table.
pub fn median_filter_per_class<T: Scalar>(strong: &Tensor<T>, table: &ClassTable) -> Result<Tensor<T>> {
    check_strong_shape("median_filter", strong, table.n_classes())?;
    let (n_t, n_c) = (strong.dim(0), strong.dim(1));
    let mut out = strong.clone();
    let mut window: Vec<T> = Vec::new();
    for c in 0..n_c {
        let len = table.median_length(c);
        if len == 1 {
            continue;
        }
        let half = len / 2;
        for t in 0..n_t {
            window.clear();
            for k in 0..len {
                // Clamping the index replicates the edge values.
                let idx = (t + k).saturating_sub(half).min(n_t - 1);
                window.push(strong.at2(idx, c));
            }
            window.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite probabilities"));
            let off = out.off2(t, c);
            out.data_mut()[off] = window[half];
        }
    }
    Ok(out)
}

/// Binarize at `threshold` and turn every maximal run of active frames into
/// an event spanning `[i * dt, (j + 1) * dt]`, clipped to the clip duration.
/// Events come out grouped by class and sorted by onset within each class.
pub fn decode_events<T: Scalar>(
    smoothed: &Tensor<T>,
    threshold: T,
    frame_duration_s: f64,
    table: &ClassTable,
    clip: &str,
) -> Result<Vec<Event>> {
    check_strong_shape("decode_events", smoothed, table.n_classes())?;
    if threshold <= T::zero() || threshold >= T::one() {
        return Err(Error::invalid("decode_events", format!("threshold {threshold} outside (0, 1)")));
    }
    let (n_t, n_c) = (smoothed.dim(0), smoothed.dim(1));
    let clip_duration = n_t as f64 * frame_duration_s;
    let mut events = Vec::new();
    for c in 0..n_c {
        let mut run_start: Option<usize> = None;
        for t in 0..=n_t {
            let active = t < n_t && smoothed.at2(t, c) >= threshold;
            match (run_start, active) {
                (None, true) => run_start = Some(t),
                (Some(start), false) => {
                    events.push(Event {
                        clip: clip.to_string(),
                        class: table.class_name(c).to_string(),
                        onset_s: start as f64 * frame_duration_s,
                        offset_s: (t as f64 * frame_duration_s).min(clip_duration),
                    });
                    run_start = None;
                }
                _ => {}
            }
        }
    }
    Ok(events)
}

/// Inverse of [`decode_events`]: paint events back onto a frame grid as a
/// 0/1 mask. Frame indices are recovered by rounding `time / dt`.
pub fn rasterize_events<T: Scalar>(
    events: &[Event],
    n_frames: usize,
    frame_duration_s: f64,
    table: &ClassTable,
) -> Result<Tensor<T>> {
    let mut out = Tensor::zeros(&[n_frames, table.n_classes()]);
    for ev in events {
        ev.validate()?;
        let c = table
            .index_of(&ev.class)
            .ok_or_else(|| Error::invalid("rasterize", format!("unknown class `{}`", ev.class)))?;
        let start = (ev.onset_s / frame_duration_s).round() as usize;
        let end = (ev.offset_s / frame_duration_s).round() as usize;
        for t in start..end.min(n_frames) {
            let off = out.off2(t, c);
            out.data_mut()[off] = T::one();
        }
    }
    Ok(out)
}

/// Column header used by every event TSV.
pub const EVENT_TSV_HEADER: &str = "filename\tonset\toffset\tevent_label";

/// Serialize events in the tab-separated convention: a header row, then
/// `filename`, onset and offset in seconds with three decimals, and the
/// class label. Rows are sorted by (filename, onset, offset, label) so the
/// output is byte-deterministic.
pub fn events_to_tsv(events: &[Event]) -> String {
    let mut rows: Vec<&Event> = events.iter().collect();
    rows.sort_by(|a, b| {
        (&a.clip, a.onset_s, a.offset_s, &a.class)
            .partial_cmp(&(&b.clip, b.onset_s, b.offset_s, &b.class))
            .expect("finite times")
    });
    let mut out = String::from(EVENT_TSV_HEADER);
    out.push('\n');
    for ev in rows {
        out.push_str(&format!(
            "{}\t{:.3}\t{:.3}\t{}\n",
            ev.clip, ev.onset_s, ev.offset_s, ev.class
        ));
    }
    out
}

pub fn write_events_tsv(path: &Path, events: &[Event]) -> Result<()> {
    crate::io::write_atomic(path, events_to_tsv(events).as_bytes())
}

/// Parse an event TSV (header required).
pub fn parse_events_tsv(text: &str, origin: &str) -> Result<Vec<Event>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == EVENT_TSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Tsv {
                path: origin.to_string(),
                line: 1,
                msg: format!("expected header `{EVENT_TSV_HEADER}`, got `{header}`"),
            })
        }
        None => {
            return Err(Error::Tsv {
                path: origin.to_string(),
                line: 1,
                msg: "empty file".to_string(),
            })
        }
    }
    let mut events = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Tsv {
                path: origin.to_string(),
                line: i + 1,
                msg: format!("{} fields, expected 4", fields.len()),
            });
        }
        let parse_time = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Tsv {
                    path: origin.to_string(),
                    line: i + 1,
                    msg: format!("bad time `{s}`"),
                })
        };
        events.push(Event {
            clip: fields[0].to_string(),
            onset_s: parse_time(fields[1])?,
            offset_s: parse_time(fields[2])?,
            class: fields[3].trim_end().to_string(),
        });
    }
    Ok(events)
}

pub fn read_events_tsv(path: &Path) -> Result<Vec<Event>> {
    let text = std::fs::read_to_string(path)?;
    parse_events_tsv(&text, &path.display().to_string())
}
