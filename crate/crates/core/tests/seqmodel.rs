mod common;

use common::{max_fd_error, random_example, tiny_config, KINDS};
use ndsq::controller::Model;
use ndsq::seqmodel::{decode_joint, encode_example, Vocabulary, EOS, SEP, SOS};
use ndsq::Error;

#[test]
fn copy_pair_round_trips_through_joint_form() {
    let v = Vocabulary::synthetic(128);
    let src: Vec<usize> = vec![3, 50, 7, 130, 9, 3, 77, 12];
    let ex = encode_example(&src, &src, &v).unwrap();
    assert_eq!(ex.joint.len(), 2 * src.len() + 3);
    assert_eq!(ex.joint[0], SOS);
    assert_eq!(ex.joint[src.len() + 1], SEP);
    assert_eq!(*ex.joint.last().unwrap(), EOS);
    let (s, t) = decode_joint(&ex.joint).unwrap();
    assert_eq!(s, src);
    assert_eq!(t, src);
}

#[test]
fn zero_output_layer_gives_uniform_perplexity() {
    for kind in KINDS {
        let mut m: Model<f64> = Model::new(tiny_config(kind), 1).unwrap();
        let l = m.layout().clone();
        m.params_mut().get_mut(l.softmax_w).iter_mut().for_each(|x| *x = 0.0);
        m.params_mut().get_mut(l.softmax_b).iter_mut().for_each(|x| *x = 0.0);
        let out = m.forward(&random_example(5, 4, 3, 2)).unwrap();
        assert_eq!(out.loss.positions, 4);
        assert!((out.loss.perplexity() - 6.0).abs() < 1e-12, "{kind}");
    }
}

#[test]
fn nll_matches_recomputation_from_logits() {
    for kind in KINDS {
        let m: Model<f64> = Model::new(tiny_config(kind), 7).unwrap();
        let ex = random_example(5, 5, 4, 11);
        let out = m.forward(&ex).unwrap();
        let gold: Vec<usize> = ex.target.iter().map(|&s| s - 2).chain([0]).collect();
        let mut nll = 0.0;
        for (z, &c) in out.logits.iter().zip(&gold) {
            let norm: f64 = z.iter().map(|v| v.exp()).sum();
            nll -= (z[c].exp() / norm).ln();
        }
        assert!((nll - out.loss.nll).abs() < 1e-12, "{kind}: {nll} vs {}", out.loss.nll);
        assert!(out.loss.perplexity() >= 1.0);
    }
}

#[test]
fn softmax_rows_are_distributions() {
    let m: Model<f64> = Model::new(tiny_config("deque"), 3).unwrap();
    let out = m.forward(&random_example(5, 6, 6, 4)).unwrap();
    for p in out.trace.probabilities() {
        assert!(p.iter().all(|&x| x >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn forward_is_deterministic() {
    let m: Model<f64> = Model::new(tiny_config("queue"), 3).unwrap();
    let ex = random_example(5, 6, 6, 4);
    let a = m.forward(&ex).unwrap();
    let b = m.forward(&ex).unwrap();
    assert_eq!(a.logits, b.logits);
    assert_eq!(a.loss, b.loss);
}

#[test]
fn full_model_gradients_match_finite_differences() {
    for kind in KINDS {
        let m: Model<f64> = Model::new(tiny_config(kind), 21).unwrap();
        let ex = random_example(5, 4, 4, 5);
        let out = m.forward(&ex).unwrap();
        let grads = m.backward(&out.trace).unwrap();
        let analytic: Vec<f64> = grads.iter().copied().collect();
        let err = max_fd_error(&m, &ex, &analytic, 1e-6);
        assert!(err < 1e-4, "{kind}: max relative error {err}");
    }
}

#[test]
fn h0_receives_gradient() {
    for kind in KINDS {
        let m: Model<f64> = Model::new(tiny_config(kind), 5).unwrap();
        let ex = random_example(5, 4, 4, 9);
        let out = m.forward(&ex).unwrap();
        let grads = m.backward(&out.trace).unwrap();
        for ids in &m.layout().layers {
            let g = grads.get(ids.h0);
            let (i, &gi) = g
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .unwrap();
            assert!(gi != 0.0, "{kind}");

            // Finite-difference confirmation on the largest coordinate.
            let mut probe = m.clone();
            probe.params_mut().get_mut(ids.h0)[i] += 1e-5;
            let up = probe.forward(&ex).unwrap().loss.nll;
            probe.params_mut().get_mut(ids.h0)[i] -= 2e-5;
            let down = probe.forward(&ex).unwrap().loss.nll;
            let numeric = (up - down) / 2e-5;
            assert!((numeric - gi).abs() <= 1e-4 * gi.abs() + 1e-9, "{kind}: {numeric} vs {gi}");
        }
    }
}

#[test]
fn zero_mask_gives_zero_gradients() {
    let m: Model<f64> = Model::new(tiny_config("stack"), 5).unwrap();
    let out = m.forward(&random_example(5, 4, 4, 9)).unwrap();
    let mut grads = ndsq::controller::ParamSet::zeros_like(m.params());
    let mask = vec![0.0; out.loss.positions];
    m.backward_into(&out.trace, Some(&mask), &mut grads).unwrap();
    assert_eq!(grads.max_abs(), 0.0);
    assert!(m.backward_into(&out.trace, Some(&[1.0]), &mut grads).is_err());
}

#[test]
fn forced_eos_decodes_empty() {
    let mut m: Model<f64> = Model::new(tiny_config("stack"), 5).unwrap();
    let l = m.layout().clone();
    m.params_mut().get_mut(l.softmax_w).iter_mut().for_each(|x| *x = 0.0);
    let b = m.params_mut().get_mut(l.softmax_b);
    b.iter_mut().for_each(|x| *x = 0.0);
    b[0] = 10.0;
    let d = m.greedy_decode(&[3, 4, 5], 10).unwrap();
    assert!(d.tokens.is_empty());
    assert!(!d.truncated);
}

#[test]
fn decode_cap_truncates() {
    let mut m: Model<f64> = Model::new(tiny_config("queue"), 5).unwrap();
    let l = m.layout().clone();
    m.params_mut().get_mut(l.softmax_w).iter_mut().for_each(|x| *x = 0.0);
    let b = m.params_mut().get_mut(l.softmax_b);
    b.iter_mut().for_each(|x| *x = 0.0);
    b[2] = 10.0;
    let d = m.greedy_decode(&[3], 6).unwrap();
    assert_eq!(d.tokens, vec![4; 6]);
    assert!(d.truncated);
}

#[test]
fn unknown_symbol_is_a_vocabulary_error() {
    let v = Vocabulary::synthetic(5);
    assert!(matches!(
        v.encode_symbols(&["a1", "b9"], &["a1"]),
        Err(Error::Vocabulary(_))
    ));
}
