//! Feature-model and model files.

use std::fs;
use std::path::Path;

use segtopic_core::classifiers::{FeedForwardHead, HeadSpec, MlpModel, SvmSet};
use segtopic_core::context::{AttentionModel, BiGruModel, ContextWindow, ContextualModel};
use segtopic_core::corpus::NUM_LABELS;
use segtopic_core::features::{FeaturePipeline, LsaModel, TfIdfModel, Vocabulary};
use segtopic_core::numcore::{LinearWeights, Matrix, Parametrized, Rng};
use segtopic_core::pipeline::{Preset, TopicModel, TrainedSystem, Variant};
use sha2::{Digest, Sha256};

use crate::container::{Container, Record};
use crate::error::{CliError, Result};
use crate::float;

pub const FEATURES_KIND: &str = "segtopic-features";
pub const FEATURES_VERSION: u32 = 1;
pub const MODEL_KIND: &str = "segtopic-model";
pub const MODEL_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn features_to_text(f: &FeaturePipeline) -> String {
    let mut c = Container::new(FEATURES_KIND, FEATURES_VERSION);
    let vocab = &f.tfidf.vocabulary;
    c.meta("music", f.music);
    c.meta("lsa", f.lsa.as_ref().map_or("none".to_string(), |l| l.dim().to_string()));
    c.meta("num_training_segments", vocab.num_training_segments);
    c.strings("vocabulary", vocab.terms());
    c.ints("document_frequency", &vocab.document_frequency);
    c.floats("idf", &[f.tfidf.idf.len()], &f.tfidf.idf);
    if let Some(l) = &f.lsa {
        let p = &l.projection;
        c.floats("lsa.projection", &[p.rows(), p.cols()], p.as_slice());
        c.floats("lsa.singular_values", &[l.singular_values.len()], &l.singular_values);
    }
    c.to_text()
}

pub fn features_from_text(text: &str, origin: &Path) -> Result<FeaturePipeline> {
    let c = Container::parse(text, FEATURES_KIND, FEATURES_VERSION, origin)?;
    let terms = c.get_strings("vocabulary")?.to_vec();
    let df = c.get_ints("document_frequency")?.to_vec();
    let vocabulary = Vocabulary::from_parts(terms, df, c.meta_parse("num_training_segments")?)?;
    let (_, idf) = c.get_floats("idf")?;
    if idf.len() != vocabulary.len() {
        return Err(CliError::Mismatch(format!(
            "idf has {} entries for a vocabulary of {}",
            idf.len(),
            vocabulary.len()
        )));
    }
    let lsa = match c.require_meta("lsa")? {
        "none" => None,
        _ => {
            let (shape, values) = c.get_floats("lsa.projection")?;
            let (_, s) = c.get_floats("lsa.singular_values")?;
            if shape.len() != 2 || shape[0] != vocabulary.len() {
                return Err(CliError::Mismatch(format!("LSA projection shape {shape:?}")));
            }
            Some(LsaModel {
                projection: Matrix::from_vec(shape[0], shape[1], values.to_vec()),
                singular_values: s.to_vec(),
            })
        }
    };
    Ok(FeaturePipeline {
        tfidf: TfIdfModel {
            vocabulary,
            idf: idf.to_vec(),
        },
        lsa,
        music: c.meta_parse("music")?,
    })
}

fn push_params(c: &mut Container, m: &impl Parametrized) {
    for (name, p) in m.named_params() {
        c.floats(&name, &p.shape, &p.values);
    }
}

/// Copies every named tensor of the file into `m`, checking names and shapes.
fn fill_params<M: Parametrized>(c: &Container, mut m: M) -> Result<M> {
    let expected: Vec<(String, Vec<usize>)> = m
        .named_params()
        .into_iter()
        .map(|(n, p)| (n, p.shape.clone()))
        .collect();
    let found: Vec<(&str, &[usize], &[f64])> = c
        .records
        .iter()
        .filter_map(|r| match r {
            Record::Floats { name, shape, values } => Some((name.as_str(), shape.as_slice(), values.as_slice())),
            _ => None,
        })
        .collect();
    if found.len() != expected.len() {
        return Err(CliError::Mismatch(format!(
            "model file has {} tensors, architecture needs {}",
            found.len(),
            expected.len()
        )));
    }
    for (p, ((name, shape), (fname, fshape, values))) in m
        .params_mut()
        .into_iter()
        .zip(expected.iter().zip(found))
    {
        if name != fname || shape.as_slice() != fshape {
            return Err(CliError::Mismatch(format!(
                "tensor {fname} {fshape:?} where {name} {shape:?} was expected"
            )));
        }
        p.values.copy_from_slice(values);
    }
    Ok(m)
}

fn window_side(s: Option<usize>) -> String {
    s.map_or("unbounded".into(), |v| v.to_string())
}

fn parse_window_side(c: &Container, key: &str) -> Result<Option<usize>> {
    match c.require_meta(key)? {
        "unbounded" => Ok(None),
        _ => c.meta_parse(key).map(Some),
    }
}

fn head_meta(c: &mut Container, h: &FeedForwardHead) {
    c.meta("hidden_width", h.spec.hidden_width);
    c.meta("hidden_layers", h.spec.hidden_layers);
    c.meta("dropout", float::fmt(h.spec.dropout));
}

fn head_spec(c: &Container, input_dim: usize) -> Result<HeadSpec> {
    Ok(HeadSpec {
        input_dim,
        hidden_width: c.meta_parse("hidden_width")?,
        hidden_layers: c.meta_parse("hidden_layers")?,
        dropout: c.meta_parse("dropout")?,
    })
}

pub fn model_to_text(model: &TopicModel, preset: Preset, feature_sha256: &str) -> String {
    let mut c = Container::new(MODEL_KIND, MODEL_VERSION);
    c.meta("feature_sha256", feature_sha256);
    c.meta("preset", preset.name());
    match model {
        TopicModel::Svm(m) => {
            c.meta("variant", Variant::Svm.name());
            c.meta("input_dim", m.dim());
            c.meta("lambda", float::fmt(m.lambda));
            for (k, w) in m.classifiers.iter().enumerate() {
                c.floats(&format!("svm.{k}.weight"), &[w.w.len()], &w.w);
            }
            let b: Vec<f64> = m.classifiers.iter().map(|w| w.b).collect();
            c.floats("svm.bias", &[NUM_LABELS], &b);
        }
        TopicModel::Mlp(m) => {
            c.meta("variant", Variant::Mlp.name());
            c.meta("input_dim", m.input_dim());
            head_meta(&mut c, &m.head);
            push_params(&mut c, m);
        }
        TopicModel::Contextual(ContextualModel::BiGru(m)) => {
            c.meta("variant", Variant::BiGru.name());
            c.meta("input_dim", m.input_dim());
            c.meta("gru_width", m.encoder.hidden());
            head_meta(&mut c, &m.head);
            push_params(&mut c, m);
        }
        TopicModel::Contextual(ContextualModel::Attention(m)) => {
            c.meta("variant", Variant::Attention.name());
            c.meta("input_dim", m.input_dim());
            c.meta("attention_width", m.width());
            c.meta("window_left", window_side(m.window.left));
            c.meta("window_right", window_side(m.window.right));
            c.meta("gate", if m.gate.is_some() { "on" } else { "off" });
            head_meta(&mut c, &m.head);
            push_params(&mut c, m);
        }
    }
    c.to_text()
}

/// Parsed model file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TopicModel,
    pub preset: Preset,
    pub feature_sha256: String,
}

pub fn model_from_text(text: &str, origin: &Path) -> Result<ModelFile> {
    let c = Container::parse(text, MODEL_KIND, MODEL_VERSION, origin)?;
    let preset_name = c.require_meta("preset")?;
    let preset = Preset::from_name(preset_name)
        .ok_or_else(|| CliError::Mismatch(format!("unknown preset {preset_name:?}")))?;
    let variant_name = c.require_meta("variant")?;
    let variant = Variant::from_name(variant_name)
        .ok_or_else(|| CliError::Mismatch(format!("unknown variant {variant_name:?}")))?;
    let input_dim: usize = c.meta_parse("input_dim")?;
    // parameter values are overwritten; the generator only shapes the skeleton
    let mut rng = Rng::new(0);
    let model = match variant {
        Variant::Svm => {
            let mut m = SvmSet::zeros(input_dim, c.meta_parse("lambda")?);
            let (_, b) = c.get_floats("svm.bias")?;
            for (k, w) in m.classifiers.iter_mut().enumerate() {
                let (shape, values) = c.get_floats(&format!("svm.{k}.weight"))?;
                if shape != [input_dim] {
                    return Err(CliError::Mismatch(format!("svm.{k}.weight has shape {shape:?}")));
                }
                *w = LinearWeights {
                    w: values.to_vec(),
                    b: b[k],
                };
            }
            TopicModel::Svm(m)
        }
        Variant::Mlp => {
            let m = MlpModel::new(head_spec(&c, input_dim)?, &mut rng);
            TopicModel::Mlp(fill_params(&c, m)?)
        }
        Variant::BiGru => {
            let width = c.meta_parse("gru_width")?;
            let m = BiGruModel::new(input_dim, width, head_spec(&c, 2 * width)?, &mut rng);
            TopicModel::Contextual(ContextualModel::BiGru(fill_params(&c, m)?))
        }
        Variant::Attention => {
            let window = ContextWindow {
                left: parse_window_side(&c, "window_left")?,
                right: parse_window_side(&c, "window_right")?,
            };
            let gated = match c.require_meta("gate")? {
                "on" => true,
                "off" => false,
                other => return Err(CliError::Mismatch(format!("gate must be on|off, found {other:?}"))),
            };
            let m = AttentionModel::new(
                input_dim,
                c.meta_parse("attention_width")?,
                head_spec(&c, input_dim)?,
                window,
                gated,
                &mut rng,
            );
            TopicModel::Contextual(ContextualModel::Attention(fill_params(&c, m)?))
        }
    };
    Ok(ModelFile {
        model,
        preset,
        feature_sha256: c.require_meta("feature_sha256")?.to_string(),
    })
}

/// Writes the feature model and the model file; returns the feature hash
/// embedded in the latter.
pub fn save_system(
    system: &TrainedSystem,
    preset: Preset,
    features_path: &Path,
    model_path: &Path,
) -> Result<String> {
    let ftext = features_to_text(&system.features);
    let hash = sha256_hex(ftext.as_bytes());
    write(features_path, &ftext)?;
    write(model_path, &model_to_text(&system.model, preset, &hash))?;
    Ok(hash)
}

/// Loads both files and checks that the model was trained on exactly this
/// feature model.
pub fn load_system(model_path: &Path, features_path: &Path) -> Result<(TrainedSystem, Preset)> {
    let ftext = read(features_path)?;
    let mf = model_from_text(&read(model_path)?, model_path)?;
    let hash = sha256_hex(ftext.as_bytes());
    if hash != mf.feature_sha256 {
        return Err(CliError::Mismatch(format!(
            "feature model {} has sha256 {hash}, but {} was trained on {}",
            features_path.display(),
            model_path.display(),
            mf.feature_sha256
        )));
    }
    let features = features_from_text(&ftext, features_path)?;
    let model_dim = match &mf.model {
        TopicModel::Svm(m) => m.dim(),
        TopicModel::Mlp(m) => m.input_dim(),
        TopicModel::Contextual(m) => m.input_dim(),
    };
    if model_dim != features.dim() {
        return Err(segtopic_core::Error::DimensionMismatch {
            expected: model_dim,
            found: features.dim(),
        }
        .into());
    }
    Ok((
        TrainedSystem {
            features,
            model: mf.model,
        },
        mf.preset,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use segtopic_core::corpus::{generate_corpus, CorpusSpec};
    use segtopic_core::pipeline::{train_system, ModelConfig};

    fn trained(variant: Variant, lsa: Option<usize>) -> TrainedSystem {
        let docs = generate_corpus(&CorpusSpec {
            num_documents: 8,
            vocab_size: 150,
            seed: 3,
            ..CorpusSpec::default()
        })
        .unwrap();
        let cfg = ModelConfig {
            lsa_dim: lsa,
            hidden_width: 6,
            gru_width: 5,
            attention_width: 4,
            epochs: 2,
            svm_epochs: 2,
            gate: true,
            ..ModelConfig::preset(Preset::Noisy, variant)
        };
        train_system(&docs, None, &cfg).unwrap().0
    }

    #[test]
    fn every_variant_round_trips_losslessly() {
        for (variant, lsa) in [
            (Variant::Svm, None),
            (Variant::Mlp, Some(10)),
            (Variant::BiGru, Some(10)),
            (Variant::Attention, Some(10)),
        ] {
            let sys = trained(variant, lsa);
            let ftext = features_to_text(&sys.features);
            let features = features_from_text(&ftext, Path::new("f")).unwrap();
            assert_eq!(features, sys.features);
            assert_eq!(features_to_text(&features), ftext);

            let hash = sha256_hex(ftext.as_bytes());
            let mtext = model_to_text(&sys.model, Preset::Noisy, &hash);
            let mf = model_from_text(&mtext, Path::new("m")).unwrap();
            assert_eq!(mf.model, sys.model, "{variant:?}");
            assert_eq!((mf.preset, mf.feature_sha256.as_str()), (Preset::Noisy, hash.as_str()));
            assert_eq!(model_to_text(&mf.model, mf.preset, &hash), mtext);
        }
    }

    #[test]
    fn tampered_files_are_rejected() {
        let sys = trained(Variant::Attention, Some(10));
        let mtext = model_to_text(&sys.model, Preset::Standard, "00");
        let renamed = mtext.replace("floats attn.w1 ", "floats attn.wx ");
        assert!(matches!(
            model_from_text(&renamed, Path::new("m")),
            Err(CliError::Mismatch(_))
        ));
        let ungated = mtext.replace("meta gate on", "meta gate off");
        assert!(model_from_text(&ungated, Path::new("m")).is_err());
        let wrong_kind = features_to_text(&sys.features);
        assert_eq!(model_from_text(&wrong_kind, Path::new("m")).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn load_checks_the_feature_hash() {
        let dir = tempfile::tempdir().unwrap();
        let (f, m) = (dir.path().join("f"), dir.path().join("m"));
        let sys = trained(Variant::Mlp, Some(10));
        save_system(&sys, Preset::Standard, &f, &m).unwrap();
        let (back, preset) = load_system(&m, &f).unwrap();
        assert_eq!((back, preset), (sys, Preset::Standard));
        let mut text = fs::read_to_string(&f).unwrap();
        text = text.replacen("meta music true", "meta music false", 1);
        fs::write(&f, text).unwrap();
        let e = load_system(&m, &f).unwrap_err();
        assert!(matches!(e, CliError::Mismatch(_)), "{e}");
    }
}
