//! Pipeline configuration: an INI-style file (`key = value` under
//! `[section]` headers) merged with command-line overrides. Unknown
//! sections or keys are errors, as are malformed values; every error
//! carries the offending line number.

use anyhow::{anyhow, bail, Result};
use sedkit_core::augment::{FilterAugParams, FilterKind};
use sedkit_core::eval::PsdsParams;
use sedkit_core::frontend::FrontendConfig;
use sedkit_core::model::{AttentionDim, ModelConfig};
use sedkit_core::pipeline::{PostprocMode, DEFAULT_THRESHOLD_COUNT};
use sedkit_core::postproc::ClassTable;
use std::path::{Path, PathBuf};

/// Fully resolved configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub frontend: FrontendConfig,
    pub model: ModelConfig,
    /// Weight container path; absent means seeded random initialization.
    pub weights: Option<PathBuf>,
    pub postproc_mode: PostprocMode,
    pub postproc_threshold: f64,
    pub median_lengths: Option<Vec<usize>>,
    pub psds1: PsdsParams,
    pub psds2: PsdsParams,
    pub threshold_count: usize,
    pub augment: FilterAugParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            frontend: FrontendConfig::default(),
            model: ModelConfig::default(),
            weights: None,
            postproc_mode: PostprocMode::Mask,
            postproc_threshold: 0.5,
            median_lengths: None,
            psds1: PsdsParams::psds1(),
            psds2: PsdsParams::psds2(),
            threshold_count: DEFAULT_THRESHOLD_COUNT,
            augment: FilterAugParams::step_defaults(),
        }
    }
}

impl PipelineConfig {
    /// The class table after any median-length overrides.
    pub fn class_table(&self) -> Result<ClassTable> {
        let table = ClassTable::dcase_default();
        match &self.median_lengths {
            Some(lengths) => Ok(table.with_lengths(lengths)?),
            None => Ok(table),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        parse_config(&text, &path.display().to_string())
    }
}

/// Parse configuration text. `origin` names the source in errors.
pub fn parse_config(text: &str, origin: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut section: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("{origin}:{line_no}: unterminated section header"))?
                .trim();
            match name {
                "frontend" | "model" | "postproc" | "eval" | "augment" => {
                    section = Some(name.to_string())
                }
                other => bail!("{origin}:{line_no}: unknown section `[{other}]`"),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("{origin}:{line_no}: expected `key = value`"))?;
        let key = key.trim();
        let value = value.trim();
        apply_key(&mut cfg, section.as_deref(), key, value)
            .map_err(|e| anyhow!("{origin}:{line_no}: {e}"))?;
    }

    cfg.model.n_mels = cfg.frontend.n_mels;
    cfg.frontend.validate()?;
    cfg.model.validate()?;
    cfg.psds1.validate()?;
    cfg.psds2.validate()?;
    Ok(cfg)
}

fn apply_key(cfg: &mut PipelineConfig, section: Option<&str>, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| anyhow!("bad value `{value}` for `{key}`"))
    }

    match section {
        None => match key {
            "seed" => cfg.seed = num(key, value)?,
            other => bail!("unknown top-level key `{other}` (only `seed` is allowed before a section)"),
        },
        Some("frontend") => match key {
            "n_fft" => cfg.frontend.n_fft = num(key, value)?,
            "hop" => cfg.frontend.hop = num(key, value)?,
            "n_mels" => cfg.frontend.n_mels = num(key, value)?,
            "sample_rate" => cfg.frontend.sample_rate = num(key, value)?,
            "log_floor" => cfg.frontend.log_floor = num(key, value)?,
            other => bail!("unknown key `{other}` in [frontend]"),
        },
        Some("model") => match key {
            "weights" => cfg.weights = Some(PathBuf::from(value)),
            "attention_dim" => {
                cfg.model.attention_dim = value.parse::<AttentionDim>().map_err(|e| anyhow!(e))?
            }
            "n_classes" => cfg.model.n_classes = num(key, value)?,
            "gru_hidden" => cfg.model.gru_hidden = num(key, value)?,
            "dropout" => cfg.model.dropout = num(key, value)?,
            "basis_count" => cfg.model.basis_count = num(key, value)?,
            "temperature" => cfg.model.temperature = num(key, value)?,
            "squeeze_ratio" => cfg.model.squeeze_ratio = num(key, value)?,
            "channels" => {
                cfg.model.channels = value
                    .split(',')
                    .map(|v| num("channels", v.trim()))
                    .collect::<Result<_>>()?
            }
            "pooling" => {
                cfg.model.pooling = value
                    .split(',')
                    .map(|pair| {
                        let (t, f) = pair
                            .trim()
                            .split_once('x')
                            .ok_or_else(|| anyhow!("pooling entries are `timexfreq`, got `{pair}`"))?;
                        Ok((num("pooling", t)?, num("pooling", f)?))
                    })
                    .collect::<Result<_>>()?
            }
            other => bail!("unknown key `{other}` in [model]"),
        },
        Some("postproc") => match key {
            "mode" => cfg.postproc_mode = value.parse::<PostprocMode>().map_err(|e| anyhow!(e))?,
            "threshold" => cfg.postproc_threshold = num(key, value)?,
            "median_lengths" => {
                cfg.median_lengths = Some(
                    value
                        .split(',')
                        .map(|v| num("median_lengths", v.trim()))
                        .collect::<Result<_>>()?,
                )
            }
            other => bail!("unknown key `{other}` in [postproc]"),
        },
        Some("eval") => match key {
            "psds1_dtc" => cfg.psds1.dtc = num(key, value)?,
            "psds1_gtc" => cfg.psds1.gtc = num(key, value)?,
            "psds1_cttc" => cfg.psds1.cttc = num(key, value)?,
            "psds1_alpha_ct" => cfg.psds1.alpha_ct = num(key, value)?,
            "psds1_alpha_st" => cfg.psds1.alpha_st = num(key, value)?,
            "psds2_dtc" => cfg.psds2.dtc = num(key, value)?,
            "psds2_gtc" => cfg.psds2.gtc = num(key, value)?,
            "psds2_cttc" => cfg.psds2.cttc = num(key, value)?,
            "psds2_alpha_ct" => cfg.psds2.alpha_ct = num(key, value)?,
            "psds2_alpha_st" => cfg.psds2.alpha_st = num(key, value)?,
            "e_max" => {
                cfg.psds1.e_max = num(key, value)?;
                cfg.psds2.e_max = cfg.psds1.e_max;
            }
            "thresholds" => cfg.threshold_count = num(key, value)?,
            other => bail!("unknown key `{other}` in [eval]"),
        },
        Some("augment") => match key {
            "kind" => {
                let kind = value.parse::<FilterKind>().map_err(|e| anyhow!(e))?;
                cfg.augment = match kind {
                    FilterKind::Step => FilterAugParams::step_defaults(),
                    FilterKind::Linear => FilterAugParams::linear_defaults(),
                };
            }
            "db_range" => cfg.augment.db_range = parse_f64_range(value)?,
            "band_range" => cfg.augment.band_range = parse_usize_range(value)?,
            "min_bandwidth" => cfg.augment.min_bandwidth = num(key, value)?,
            other => bail!("unknown key `{other}` in [augment]"),
        },
        Some(other) => bail!("unknown section `{other}`"),
    }
    Ok(())
}

/// `lo:hi` ranges used by `--db-range` and `--bands`.
pub fn parse_f64_range(value: &str) -> Result<(f64, f64)> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| anyhow!("expected `lo:hi`, got `{value}`"))?;
    Ok((
        lo.trim().parse().map_err(|_| anyhow!("bad number `{lo}`"))?,
        hi.trim().parse().map_err(|_| anyhow!("bad number `{hi}`"))?,
    ))
}

pub fn parse_usize_range(value: &str) -> Result<(usize, usize)> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| anyhow!("expected `lo:hi`, got `{value}`"))?;
    Ok((
        lo.trim().parse().map_err(|_| anyhow!("bad number `{lo}`"))?,
        hi.trim().parse().map_err(|_| anyhow!("bad number `{hi}`"))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_all_defaults() {
        let cfg = parse_config("", "mem").unwrap();
        assert_eq!(cfg.frontend.n_fft, 2048);
        assert_eq!(cfg.frontend.hop, 256);
        assert_eq!(cfg.frontend.n_mels, 128);
        assert_eq!(cfg.model.temperature, 45.0);
        assert_eq!(cfg.model.basis_count, 4);
        assert_eq!(cfg.model.channels, vec![16, 32, 64, 128, 128, 128, 128]);
        assert_eq!(cfg.threshold_count, 50);
        assert_eq!(cfg.psds1.dtc, 0.7);
        assert_eq!(cfg.psds2.alpha_ct, 0.5);
    }

    #[test]
    fn section_values_apply() {
        let text = "[postproc]\nmode = weaksed\nthreshold = 0.4\n";
        let cfg = parse_config(text, "mem").unwrap();
        assert_eq!(cfg.postproc_mode, PostprocMode::WeakSed);
        assert_eq!(cfg.postproc_threshold, 0.4);
    }

    #[test]
    fn malformed_value_reports_line() {
        let text = "[frontend]\nn_fft = abc\n";
        let err = parse_config(text, "cfg.ini").unwrap_err();
        assert!(err.to_string().contains("cfg.ini:2"), "{err}");
        assert!(err.to_string().contains("n_fft"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_config("[frontend]\nn_fftt = 2048\n", "mem").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
        let err = parse_config("[nonsense]\n", "mem").unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");
        let err = parse_config("stray = 1\n", "mem").unwrap_err();
        assert!(err.to_string().contains("top-level"), "{err}");
    }

    #[test]
    fn seed_and_comments_parse() {
        let text = "# comment\nseed = 7\n[eval]\nthresholds = 10\ne_max = 50\n";
        let cfg = parse_config(text, "mem").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.threshold_count, 10);
        assert_eq!(cfg.psds1.e_max, 50.0);
        assert_eq!(cfg.psds2.e_max, 50.0);
    }

    #[test]
    fn augment_section_parses_ranges() {
        let text = "[augment]\nkind = linear\ndb_range = -3:3\nband_range = 2:4\nmin_bandwidth = 5\n";
        let cfg = parse_config(text, "mem").unwrap();
        assert_eq!(cfg.augment.kind, FilterKind::Linear);
        assert_eq!(cfg.augment.db_range, (-3.0, 3.0));
        assert_eq!(cfg.augment.band_range, (2, 4));
        assert_eq!(cfg.augment.min_bandwidth, 5);
    }

    #[test]
    fn invalid_resolved_config_rejected() {
        // hop > n_fft violates the frontend invariant.
        let err = parse_config("[frontend]\nn_fft = 128\nhop = 256\n", "mem").unwrap_err();
        assert!(err.to_string().contains("hop"), "{err}");
    }

    #[test]
    fn model_lists_parse() {
        let text = "[frontend]\nn_mels = 4\n[model]\nchannels = 2,3\npooling = 2x2,1x2\ngru_hidden = 2\nn_classes = 2\n";
        let cfg = parse_config(text, "mem").unwrap();
        assert_eq!(cfg.model.channels, vec![2, 3]);
        assert_eq!(cfg.model.pooling, vec![(2, 2), (1, 2)]);
        assert_eq!(cfg.model.n_mels, 4);
    }
}
