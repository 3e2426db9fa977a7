//! TOML run configurations and corpus specs.
//!
//! A run config names a preset and optionally overrides any model field. The
//! smallest valid file is `preset = "standard"`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use segtopic_core::classifiers::training::SelectionMetric;
use segtopic_core::context::ContextWindow;
use segtopic_core::corpus::{CorpusSpec, CountRange};
use segtopic_core::numcore::AdamConfig;
use segtopic_core::pipeline::{ModelConfig, Preset, Variant};

use crate::error::{CliError, Result};
use crate::models::sha256_hex;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoneWord {
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnboundedWord {
    Unbounded,
}

/// An LSA dimension, or `"none"` for raw tf-idf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LsaSetting {
    Dim(usize),
    Off(NoneWord),
}

/// One side of the attention window: a segment count or `"unbounded"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSide {
    Segments(usize),
    Unbounded(UnboundedWord),
}

impl WindowSide {
    fn get(self) -> Option<usize> {
        match self {
            WindowSide::Segments(n) => Some(n),
            WindowSide::Unbounded(_) => None,
        }
    }

    fn of(v: Option<usize>) -> Self {
        v.map_or(WindowSide::Unbounded(UnboundedWord::Unbounded), WindowSide::Segments)
    }
}

impl std::str::FromStr for WindowSide {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "unbounded" {
            return Ok(WindowSide::Unbounded(UnboundedWord::Unbounded));
        }
        s.parse().map(WindowSide::Segments).map_err(|_| format!("expected a count or \"unbounded\", got {s:?}"))
    }
}

/// A gradient-norm cap, or `"none"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClipSetting {
    Norm(f64),
    Off(NoneWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionName {
    MicroF1,
    TypeAp,
}

/// Per-field overrides of the preset. Absent fields keep the preset value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lsa_dim: Option<LsaSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub music: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_token_length: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svm_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mlp_hidden_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rnn_head_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention_head_layers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gru_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_left: Option<WindowSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_right: Option<WindowSide>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segment_batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub document_batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adam_epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection: Option<SelectionName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rnn_clip_norm: Option<ClipSetting>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation_fraction: Option<f64>,
}

impl ModelOverrides {
    pub fn is_empty(&self) -> bool {
        *self == ModelOverrides::default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Training log (JSON).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

impl Paths {
    fn is_empty(&self) -> bool {
        *self == Paths::default()
    }

    /// Resolves relative paths against `base`.
    pub fn relative_to(&mut self, base: &Path) {
        for p in [
            &mut self.corpus,
            &mut self.validation,
            &mut self.features,
            &mut self.model,
            &mut self.output,
            &mut self.log,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "config_version")]
    pub format_version: u32,
    pub preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "ModelOverrides::is_empty")]
    pub model: ModelOverrides,
    #[serde(default, skip_serializing_if = "Paths::is_empty")]
    pub paths: Paths,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

impl RunConfig {
    pub fn new(preset: Preset) -> Self {
        RunConfig {
            format_version: CONFIG_VERSION,
            preset: preset.name().into(),
            variant: None,
            seed: None,
            epochs: None,
            model: ModelOverrides::default(),
            paths: Paths::default(),
        }
    }

    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        if cfg.format_version != CONFIG_VERSION {
            return Err(CliError::Usage(format!(
                "{}: unsupported config format_version {} (expected {CONFIG_VERSION})",
                origin.display(),
                cfg.format_version
            )));
        }
        cfg.to_model_config()?;
        Ok(cfg)
    }

    /// Reads a config; relative paths inside it are taken relative to the
    /// file's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text, path)?;
        if let Some(dir) = path.parent() {
            cfg.paths.relative_to(dir);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn sha256(&self) -> String {
        sha256_hex(self.to_toml().as_bytes())
    }

    pub fn preset(&self) -> Result<Preset> {
        Preset::from_name(&self.preset)
            .ok_or_else(|| CliError::Usage(format!("unknown preset {:?} (standard | noisy)", self.preset)))
    }

    pub fn variant(&self) -> Result<Variant> {
        match &self.variant {
            None => Ok(Variant::default()),
            Some(v) => Variant::from_name(v)
                .ok_or_else(|| CliError::Usage(format!("unknown variant {v:?} (svm | mlp | bigru | attn)"))),
        }
    }

    /// Preset defaults with every present override applied.
    pub fn to_model_config(&self) -> Result<ModelConfig> {
        let mut c = ModelConfig::preset(self.preset()?, self.variant()?);
        let o = &self.model;
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.epochs {
            c.epochs = v;
        }
        if let Some(v) = o.lsa_dim {
            c.lsa_dim = match v {
                LsaSetting::Dim(d) => Some(d),
                LsaSetting::Off(_) => None,
            };
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { c.$f = v; } )* };
        }
        set!(
            music,
            min_token_length,
            svm_lambda,
            svm_epochs,
            hidden_width,
            mlp_hidden_layers,
            rnn_head_layers,
            attention_head_layers,
            dropout,
            gru_width,
            attention_width,
            gate,
            segment_batch,
            document_batch,
            validation_fraction
        );
        if let Some(v) = o.window_left {
            c.window.left = v.get();
        }
        if let Some(v) = o.window_right {
            c.window.right = v.get();
        }
        if let Some(v) = o.adam_alpha {
            c.adam.alpha = v;
        }
        if let Some(v) = o.adam_beta1 {
            c.adam.beta1 = v;
        }
        if let Some(v) = o.adam_beta2 {
            c.adam.beta2 = v;
        }
        if let Some(v) = o.adam_epsilon {
            c.adam.epsilon = v;
        }
        if let Some(v) = o.selection {
            c.selection = match v {
                SelectionName::MicroF1 => SelectionMetric::MicroF1,
                SelectionName::TypeAp => SelectionMetric::TypeAp,
            };
        }
        if let Some(v) = o.rnn_clip_norm {
            c.rnn_clip_norm = match v {
                ClipSetting::Norm(n) => Some(n),
                ClipSetting::Off(_) => None,
            };
        }
        if !(0.0..1.0).contains(&c.dropout) {
            return Err(CliError::Usage(format!("dropout {} outside [0, 1)", c.dropout)));
        }
        Ok(c)
    }

    /// A config spelling out every field of `c` explicitly.
    pub fn explicit(c: &ModelConfig) -> Self {
        let ContextWindow { left, right } = c.window;
        let AdamConfig {
            alpha,
            beta1,
            beta2,
            epsilon,
        } = c.adam;
        RunConfig {
            format_version: CONFIG_VERSION,
            preset: c.preset.name().into(),
            variant: Some(c.variant.name().into()),
            seed: Some(c.seed),
            epochs: Some(c.epochs),
            model: ModelOverrides {
                lsa_dim: Some(c.lsa_dim.map_or(LsaSetting::Off(NoneWord::None), LsaSetting::Dim)),
                music: Some(c.music),
                min_token_length: Some(c.min_token_length),
                svm_lambda: Some(c.svm_lambda),
                svm_epochs: Some(c.svm_epochs),
                hidden_width: Some(c.hidden_width),
                mlp_hidden_layers: Some(c.mlp_hidden_layers),
                rnn_head_layers: Some(c.rnn_head_layers),
                attention_head_layers: Some(c.attention_head_layers),
                dropout: Some(c.dropout),
                gru_width: Some(c.gru_width),
                attention_width: Some(c.attention_width),
                window_left: Some(WindowSide::of(left)),
                window_right: Some(WindowSide::of(right)),
                gate: Some(c.gate),
                segment_batch: Some(c.segment_batch),
                document_batch: Some(c.document_batch),
                adam_alpha: Some(alpha),
                adam_beta1: Some(beta1),
                adam_beta2: Some(beta2),
                adam_epsilon: Some(epsilon),
                selection: Some(match c.selection {
                    SelectionMetric::MicroF1 => SelectionName::MicroF1,
                    SelectionMetric::TypeAp => SelectionName::TypeAp,
                }),
                rnn_clip_norm: Some(c.rnn_clip_norm.map_or(ClipSetting::Off(NoneWord::None), ClipSetting::Norm)),
                validation_fraction: Some(c.validation_fraction),
            },
            paths: Paths::default(),
        }
    }
}

/// Corpus-spec file; absent fields take the generator defaults. Ranges are
/// inclusive `[min, max]` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpecFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_documents: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments_per_doc: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic_stay_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tokens_per_segment: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic_word_concentration: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ood_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub music_posterior_ood_shift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CorpusSpecFile {
    pub fn to_spec(&self) -> CorpusSpec {
        let d = CorpusSpec::default();
        let range = |r: Option<[usize; 2]>, def: CountRange| r.map_or(def, |[a, b]| CountRange::new(a, b));
        CorpusSpec {
            num_documents: self.num_documents.unwrap_or(d.num_documents),
            segments_per_doc: range(self.segments_per_doc, d.segments_per_doc),
            topic_stay_probability: self.topic_stay_probability.unwrap_or(d.topic_stay_probability),
            vocab_size: self.vocab_size.unwrap_or(d.vocab_size),
            tokens_per_segment: range(self.tokens_per_segment, d.tokens_per_segment),
            topic_word_concentration: self.topic_word_concentration.unwrap_or(d.topic_word_concentration),
            label_noise: self.label_noise.unwrap_or(d.label_noise),
            ood_fraction: self.ood_fraction.unwrap_or(d.ood_fraction),
            music_posterior_ood_shift: self.music_posterior_ood_shift.unwrap_or(d.music_posterior_ood_shift),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    pub fn from_spec(s: &CorpusSpec) -> Self {
        CorpusSpecFile {
            num_documents: Some(s.num_documents),
            segments_per_doc: Some([s.segments_per_doc.min, s.segments_per_doc.max]),
            topic_stay_probability: Some(s.topic_stay_probability),
            vocab_size: Some(s.vocab_size),
            tokens_per_segment: Some([s.tokens_per_segment.min, s.tokens_per_segment.max]),
            topic_word_concentration: Some(s.topic_word_concentration),
            label_noise: Some(s.label_noise),
            ood_fraction: Some(s.ood_fraction),
            music_posterior_ood_shift: Some(s.music_posterior_ood_shift),
            seed: Some(s.seed),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<CorpusSpec> {
        let f: CorpusSpecFile =
            toml::from_str(text).map_err(|e| CliError::Usage(format!("{}: {e}", origin.display())))?;
        let spec = f.to_spec();
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<CorpusSpec> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        CorpusSpecFile::parse(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("corpus spec serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_only_expands_to_preset_defaults() {
        for (name, p) in [("standard", Preset::Standard), ("noisy", Preset::Noisy)] {
            let cfg = RunConfig::from_toml(&format!("preset = \"{name}\"\n"), Path::new("c")).unwrap();
            assert_eq!(cfg.to_model_config().unwrap(), ModelConfig::preset(p, Variant::Mlp));
        }
    }

    #[test]
    fn explicit_config_round_trips() {
        let mut c = ModelConfig::preset(Preset::Noisy, Variant::Attention);
        c.lsa_dim = None;
        c.window = ContextWindow {
            left: Some(2),
            right: None,
        };
        c.adam.alpha = 1.0 / 3.0;
        c.rnn_clip_norm = None;
        c.selection = SelectionMetric::TypeAp;
        c.seed = u64::MAX;
        let text = RunConfig::explicit(&c).to_toml();
        let back = RunConfig::from_toml(&text, Path::new("c")).unwrap();
        assert_eq!(back, RunConfig::explicit(&c));
        assert_eq!(back.to_model_config().unwrap(), c);
    }

    #[test]
    fn overrides_apply_and_hash_tracks_content() {
        let text = "preset = \"standard\"\nvariant = \"attn\"\nseed = 5\n\n[model]\nwindow_left = 1\nwindow_right = \"unbounded\"\ngate = true\nlsa_dim = \"none\"\n";
        let cfg = RunConfig::from_toml(text, Path::new("c")).unwrap();
        let m = cfg.to_model_config().unwrap();
        assert_eq!((m.variant, m.seed, m.gate, m.lsa_dim), (Variant::Attention, 5, true, None));
        assert_eq!(m.window, ContextWindow { left: Some(1), right: None });
        let mut other = cfg.clone();
        other.seed = Some(6);
        assert_ne!(cfg.sha256(), other.sha256());
        assert_eq!(cfg.sha256(), RunConfig::from_toml(&cfg.to_toml(), Path::new("c")).unwrap().sha256());
    }

    #[test]
    fn bad_configs_are_usage_errors() {
        for text in [
            "preset = \"huge\"\n",
            "preset = \"standard\"\nvariant = \"cnn\"\n",
            "preset = \"standard\"\n[model]\nwidth = 3\n",
            "preset = \"standard\"\nformat_version = 2\n",
            "variant = \"mlp\"\n",
        ] {
            let e = RunConfig::from_toml(text, Path::new("c")).unwrap_err();
            assert_eq!(e.exit_code(), 1, "{text}: {e}");
        }
    }

    #[test]
    fn corpus_spec_file_round_trips() {
        let spec = CorpusSpec {
            num_documents: 7,
            topic_stay_probability: 0.9,
            label_noise: 0.3,
            seed: 11,
            ..CorpusSpec::default()
        };
        let text = CorpusSpecFile::from_spec(&spec).to_toml();
        assert_eq!(CorpusSpecFile::parse(&text, Path::new("s")).unwrap(), spec);
        assert_eq!(CorpusSpecFile::parse("", Path::new("s")).unwrap(), CorpusSpec::default());
        let e = CorpusSpecFile::parse("label_noise = 1.5\n", Path::new("s")).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }
}
