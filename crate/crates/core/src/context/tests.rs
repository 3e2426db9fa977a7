use super::*;
use crate::classifiers::training::mean_loss;
use crate::classifiers::MlpModel;
use crate::numcore::{grad_check, GradCheckOptions, Parametrized};
use alloc::vec;
use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};

fn head(input_dim: usize, width: usize, layers: usize) -> HeadSpec {
    HeadSpec {
        input_dim,
        hidden_width: width,
        hidden_layers: layers,
        dropout: 0.0,
    }
}

fn random_doc(n: usize, dim: usize, rng: &mut Rng) -> DocumentExample {
    let xs = (0..n)
        .map(|_| (0..dim).map(|_| rng.normal()).collect())
        .collect();
    let ys = (0..n)
        .map(|_| {
            let mut y = LabelVector::default();
            y.0[rng.below(NUM_LABELS)] = true;
            if rng.bernoulli(0.3) {
                y.0[rng.below(NUM_LABELS - 1)] = true;
                y.0[NUM_LABELS - 1] = false;
            }
            y
        })
        .collect();
    DocumentExample { xs, ys }
}

/// Moves every parameter off its initial value so that zero biases or the
/// default gate do not hide gradient errors.
fn jitter<M: Parametrized>(m: &mut M, rng: &mut Rng) {
    for p in m.params_mut() {
        p.values.iter_mut().for_each(|v| *v += 0.3 * rng.normal());
    }
}

fn exhaustive() -> GradCheckOptions {
    GradCheckOptions {
        max_coords_per_tensor: Some(60),
        ..Default::default()
    }
}

fn attention_model(window: ContextWindow, gated: bool, rng: &mut Rng) -> AttentionModel {
    AttentionModel::new(6, 5, head(6, 7, 1), window, gated, rng)
}

// --- GRU ---

#[test]
fn zero_gru_stays_at_zero() {
    let enc = BiGruEncoder {
        forward: GruCell::zeros(3, 4),
        backward: GruCell::zeros(3, 4),
    };
    let hs = enc.encode(&vec![vec![0.0; 3]; 5]).unwrap();
    assert!(hs.iter().all(|h| h.len() == 8 && h.iter().all(|&v| v == 0.0)));
}

#[test]
fn single_segment_has_no_recursion() {
    let mut rng = Rng::new(4);
    let enc = BiGruEncoder::new(3, 4, &mut rng);
    let x = vec![0.5, -1.0, 2.0];
    let h = enc.encode(&[x.clone()]).unwrap();
    let mut expect = enc.forward.step(&x, &[0.0; 4]).h;
    expect.extend(enc.backward.step(&x, &[0.0; 4]).h);
    assert_eq!(h[0], expect);
}

#[test]
fn reversal_swaps_streams_with_tied_cells() {
    let mut rng = Rng::new(9);
    let cell = GruCell::new(3, 4, &mut rng);
    let enc = BiGruEncoder {
        forward: cell.clone(),
        backward: cell,
    };
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
    let mut rev = xs.clone();
    rev.reverse();
    let h = enc.encode(&xs).unwrap();
    let hr = enc.encode(&rev).unwrap();
    for i in 0..4 {
        let j = 3 - i;
        assert_eq!(&h[i][..4], &hr[j][4..]);
        assert_eq!(&h[i][4..], &hr[j][..4]);
    }
}

#[test]
fn gru_gate_update_convention() {
    // with U = 0 and W_z = 0, b_z = 0 the update gate is ½
    let mut cell = GruCell::zeros(1, 1);
    cell.wh.values[0] = 1.0;
    let s = cell.step(&[0.5], &[0.2]);
    let cand = libm::tanh(0.5);
    assert!((s.h[0] - (0.5 * 0.2 + 0.5 * cand)).abs() < 1e-15);
}

#[test]
fn bigru_gradients() {
    for seed in 0..3u64 {
        for layers in [0, 1] {
            let mut rng = Rng::new(seed);
            let mut m = BiGruModel::new(6, 5, head(0, 7, layers), &mut rng);
            jitter(&mut m, &mut rng);
            let doc = random_doc(4, 6, &mut rng);
            let err = grad_check(
                &mut m,
                |m| {
                    m.zero_grad();
                    m.document_backward(&doc.xs, &doc.ys, None).unwrap()
                },
                |m| m.document_loss(&doc.xs, &doc.ys).unwrap(),
                exhaustive(),
            )
            .unwrap();
            assert!(err < 1e-4, "seed {seed} layers {layers}: {err}");
        }
    }
}

// --- attention ---

#[test]
fn window_ranges() {
    assert_eq!(ContextWindow::symmetric(1).range(0, 5), (0, 1));
    assert_eq!(ContextWindow::symmetric(2).range(3, 5), (1, 4));
    assert_eq!(ContextWindow::symmetric(0).range(2, 5), (2, 2));
    assert_eq!(ContextWindow::unbounded().range(2, 5), (0, 4));
    let w = ContextWindow {
        left: Some(1),
        right: None,
    };
    assert_eq!(w.range(2, 5), (1, 4));
}

#[test]
fn zero_parameters_give_zero_scores() {
    let mut rng = Rng::new(0);
    let mut m = attention_model(ContextWindow::unbounded(), false, &mut rng);
    for p in [&mut m.w1, &mut m.w2, &mut m.w, &mut m.b1, &mut m.b2] {
        p.values.iter_mut().for_each(|v| *v = 0.0);
    }
    let doc = random_doc(4, 6, &mut rng);
    for i in 0..4 {
        assert_eq!(attention_scores(&m, &doc.xs, i), vec![0.0; 4]);
    }
}

fn scalar_model(window: ContextWindow) -> AttentionModel {
    let mut rng = Rng::new(0);
    let mut m = AttentionModel::new(1, 1, head(1, 1, 0), window, false, &mut rng);
    m.w1.values[0] = 1.0;
    m.w2.values[0] = 1.0;
    m.w.values[0] = 1.0;
    m
}

#[test]
fn hand_alignment_scores() {
    let m = scalar_model(ContextWindow::unbounded());
    let xs = vec![vec![1.0], vec![2.0]];
    assert_eq!(attention_scores(&m, &xs, 0), vec![2.0, 3.0]);
    let m0 = scalar_model(ContextWindow::symmetric(0));
    assert_eq!(attention_scores(&m0, &xs, 0), vec![2.0]);
}

#[test]
fn hand_weights_and_context() {
    let a = attention_weights(&[0.7; 3], None, 1, 0);
    for v in &a {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
    let a = attention_weights(&[0.0, core::f64::consts::LN_2], None, 0, 0);
    assert!((a[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((a[1] - 2.0 / 3.0).abs() < 1e-15);
    let xs = [[1.0, 0.0], [0.0, 1.0]];
    let c: Vec<f64> = (0..2).map(|k| a[0] * xs[0][k] + a[1] * xs[1][k]).collect();
    assert!((c[0] - 1.0 / 3.0).abs() < 1e-15 && (c[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn contextual_vector_of_scalar_model() {
    // e_0· = [2, 3] → α = [1/(1+e), e/(1+e)], c = α_0·1 + α_1·2
    let m = scalar_model(ContextWindow::unbounded());
    let xs = vec![vec![1.0], vec![2.0]];
    let e = libm::exp(1.0);
    let c = contextual_vector(&m, &xs, 0);
    assert!((c[0] - (1.0 + 2.0 * e) / (1.0 + e)).abs() < 1e-12);
}

#[test]
fn zero_window_and_identical_inputs() {
    let mut rng = Rng::new(3);
    let m = attention_model(ContextWindow::symmetric(0), true, &mut rng);
    let doc = random_doc(5, 6, &mut rng);
    for i in 0..5 {
        assert_eq!(contextual_vector(&m, &doc.xs, i), doc.xs[i]);
    }
    let m = attention_model(ContextWindow::unbounded(), true, &mut rng);
    let xs = vec![vec![0.25, -0.5, 1.0, 2.0, 0.0, -1.0]; 4];
    for i in 0..4 {
        let c = contextual_vector(&m, &xs, i);
        for (a, b) in c.iter().zip(&xs[0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}

#[test]
fn gate_values() {
    let g = PositionGate::default();
    assert_eq!(gate_value(&g, 4, 4), 1.0);
    assert_eq!(gate_value(&g, 3, 5), gate_value(&g, 5, 3));
    assert_eq!(gate_value(&g, 3, 5), gate_value(&g, 10, 12));
    let v = gate_value(&g, 0, 1);
    assert!(v > 0.0 && v < 1.0);
    assert!((v - 1.0 / (1.0 + libm::exp(-libm::tanh(1.0)))).abs() < 1e-15);
    let z = PositionGate::new(0.0, 0.0, 0.0, 0.0);
    assert_eq!(gate_value(&z, 0, 7), 0.5);
}

#[test]
fn translation_invariance_of_weights() {
    let g = PositionGate::new(0.4, -1.3, 0.2, 0.5);
    let e = [0.3, -1.2, 2.5, 0.0];
    let shifted: Vec<f64> = e.iter().map(|v| v + 17.25).collect();
    for gate in [None, Some(&g)] {
        let a = attention_weights(&e, gate, 2, 0);
        let b = attention_weights(&shifted, gate, 2, 0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn dynamic_selectivity() {
    // equal neighbours, different targets → different neighbour weighting
    let m = scalar_model(ContextWindow::symmetric(1));
    let a = vec![vec![-1.0], vec![0.0], vec![1.0]];
    let b = vec![vec![-1.0], vec![2.0], vec![1.0]];
    let wa = attention_weights(&attention_scores(&m, &a, 1), None, 1, 0);
    let wb = attention_weights(&attention_scores(&m, &b, 1), None, 1, 0);
    let ratio = |w: &[f64]| w[0] / w[2];
    assert!((ratio(&wa) - ratio(&wb)).abs() > 0.1, "{wa:?} {wb:?}");
}

#[test]
fn window_zero_matches_mlp_at_equal_seed() {
    let spec = head(6, 7, 2);
    let mut rng = Rng::new(0);
    for seed in 0..20 {
        let mlp = MlpModel::new(spec, &mut Rng::new(seed));
        let attn = AttentionModel::new(6, 5, spec, ContextWindow::symmetric(0), true, &mut Rng::new(seed));
        let doc = random_doc(1 + rng.below(6), 6, &mut rng);
        let pa = attn.predict_document(&doc.xs).unwrap();
        for (x, p) in doc.xs.iter().zip(&pa) {
            assert_eq!(&mlp.head.posteriors(x), p);
        }
    }
}

#[test]
fn single_segment_document_degenerates() {
    let mut rng = Rng::new(2);
    let m = attention_model(ContextWindow::unbounded(), true, &mut rng);
    let doc = random_doc(1, 6, &mut rng);
    assert_eq!(m.predict_document(&doc.xs).unwrap()[0], m.head.posteriors(&doc.xs[0]));
}

#[test]
fn attention_gradients() {
    let windows = [
        ContextWindow::symmetric(1),
        ContextWindow::symmetric(2),
        ContextWindow::unbounded(),
    ];
    for seed in 0..3u64 {
        for window in windows {
            for gated in [false, true] {
                let mut rng = Rng::new(seed);
                let mut m = attention_model(window, gated, &mut rng);
                jitter(&mut m, &mut rng);
                let doc = random_doc(5, 6, &mut rng);
                let err = grad_check(
                    &mut m,
                    |m| {
                        m.zero_grad();
                        m.document_backward(&doc.xs, &doc.ys, None).unwrap()
                    },
                    |m| m.document_loss(&doc.xs, &doc.ys).unwrap(),
                    exhaustive(),
                )
                .unwrap();
                assert!(err < 1e-4, "seed {seed} {window:?} gated {gated}: {err}");
            }
        }
    }
}

#[test]
fn dimension_mismatch_and_empty_document() {
    let mut rng = Rng::new(1);
    let m = ContextualModel::new(
        ContextVariant::Attention {
            width: 4,
            window: ContextWindow::symmetric(1),
            gated: false,
        },
        6,
        head(6, 4, 1),
        &mut rng,
    );
    assert!(matches!(
        predict_contextual(&m, &[vec![0.0; 5]]),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(predict_contextual(&m, &[]).is_err());
}

fn learnable_docs(n: usize, rng: &mut Rng) -> Vec<DocumentExample> {
    (0..n)
        .map(|_| {
            let len = 2 + rng.below(5);
            let topic = rng.below(4);
            let xs = (0..len)
                .map(|_| {
                    let mut x: Vec<f64> = (0..6).map(|_| 0.5 * rng.normal()).collect();
                    x[topic] += 1.0;
                    x
                })
                .collect();
            let mut y = LabelVector::default();
            y.0[topic] = true;
            DocumentExample { xs, ys: vec![y; len] }
        })
        .collect()
}

#[test]
fn contextual_training_learns_and_is_deterministic() {
    let mut rng = Rng::new(14);
    let train = learnable_docs(30, &mut rng);
    let val = learnable_docs(8, &mut rng);
    let mut opts = TrainOptions::new(6, 6);
    opts.adam.alpha = 1e-2;
    opts.clip_norm = Some(5.0);
    let variants = [
        ContextVariant::BiGru { width: 6 },
        ContextVariant::Attention {
            width: 6,
            window: ContextWindow::symmetric(1),
            gated: true,
        },
    ];
    for v in variants {
        let spec = HeadSpec {
            dropout: 0.25,
            ..head(6, 8, 1)
        };
        let (m1, log) = train_contextual(&train, &val, v, spec, &opts, &mut Rng::new(3)).unwrap();
        let (m2, _) = train_contextual(&train, &val, v, spec, &opts, &mut Rng::new(3)).unwrap();
        assert_eq!(m1, m2);
        let final_loss = match &m1 {
            ContextualModel::BiGru(m) => mean_loss(m, &train),
            ContextualModel::Attention(m) => mean_loss(m, &train),
        };
        assert!(final_loss < log.initial_loss, "{v:?}: {final_loss} vs {}", log.initial_loss);
    }
}

#[test]
fn unlabeled_training_segment_rejected() {
    let mut rng = Rng::new(0);
    let mut docs = learnable_docs(2, &mut rng);
    docs[0].ys[0] = LabelVector::default();
    let r = train_contextual(
        &docs,
        &docs,
        ContextVariant::BiGru { width: 3 },
        head(6, 4, 0),
        &TrainOptions::new(1, 6),
        &mut rng,
    );
    assert!(matches!(r, Err(Error::UnlabeledSegment(_))));
}

#[test]
fn documents_are_isolated() {
    let mut rng = Rng::new(6);
    let m = attention_model(ContextWindow::unbounded(), true, &mut rng);
    let a = random_doc(4, 6, &mut rng);
    let b = random_doc(3, 6, &mut rng);
    let alone = m.predict_document(&a.xs).unwrap();
    let mut joined = a.xs.clone();
    joined.extend(b.xs.clone());
    // a document's prediction depends on its own segments only
    assert_eq!(m.predict_document(&a.xs).unwrap(), alone);
    assert_ne!(m.predict_document(&joined).unwrap()[..4], alone[..]);
}

proptest! {
    #[test]
    fn weights_normalise(
        seed in 0u64..1000,
        n in 1usize..9,
        window in 0usize..4,
        gated in any::<bool>(),
    ) {
        let window = if window == 3 { ContextWindow::unbounded() } else { ContextWindow::symmetric(window) };
        let mut rng = Rng::new(seed);
        let mut m = attention_model(window, gated, &mut rng);
        jitter(&mut m, &mut rng);
        let doc = random_doc(n, 6, &mut rng);
        for i in 0..n {
            let (lo, hi) = window.range(i, n);
            let a = attention_weights(&attention_scores(&m, &doc.xs, i), m.gate.as_ref(), i, lo);
            prop_assert_eq!(a.len(), hi - lo + 1);
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.iter().all(|&v| v >= 0.0));
            let c = contextual_vector(&m, &doc.xs, i);
            for k in 0..6 {
                let lo_k = doc.xs[lo..=hi].iter().map(|x| x[k]).fold(f64::INFINITY, f64::min);
                let hi_k = doc.xs[lo..=hi].iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(c[k] >= lo_k - 1e-12 && c[k] <= hi_k + 1e-12);
            }
        }
    }
}
