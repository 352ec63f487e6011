use autoembedder::data::{gen_blobs, pad_and_replicate, BlobConfig};
use autoembedder::embedder::{load_model, save_model, EmbedderConfig, EmbedderNet};
use autoembedder::numeric::{matmul, AdamConfig, Matrix};
use autoembedder::siamese::{pair_distance, LossKind, SiameseNet};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-50.0f64..50.0, rows * cols)
        .prop_map(move |v| Matrix::from_vec(rows, cols, v).unwrap())
}

fn net_with(seed: u64, input: usize, hidden: Vec<usize>, k: usize) -> EmbedderNet {
    EmbedderNet::init(
        input,
        &EmbedderConfig {
            hidden,
            embedding_dim: k,
            seed,
        },
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snn_output_stays_in_codomain(
        seed in any::<u64>(),
        alpha in 0.01f64..500.0,
        (x1, x2) in (1usize..12).prop_flat_map(|n| (matrix(n, 4), matrix(n, 4))),
        shift in -3.0f64..3.0,
    ) {
        let mut net = SiameseNet::new(net_with(seed, 4, vec![5], 3), alpha, AdamConfig::default()).unwrap();
        for p in net.tower_g_mut().params_mut() {
            for v in p.iter_mut() {
                *v += shift;
            }
        }
        for d in net.snn_forward(&x1, &x2).unwrap() {
            prop_assert!((0.0..=alpha).contains(&d));
        }
    }

    #[test]
    fn distance_is_symmetric(p in prop::collection::vec(-1e3f64..1e3, 1..10), seed in any::<u64>()) {
        let q: Vec<f64> = p.iter().enumerate().map(|(i, v)| v * 0.5 + (seed % 97) as f64 - i as f64).collect();
        prop_assert_eq!(pair_distance(&p, &q).unwrap(), pair_distance(&q, &p).unwrap());
        prop_assert_eq!(pair_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn identity_products_are_exact(a in (1usize..8, 1usize..8).prop_flat_map(|(r, c)| matrix(r, c))) {
        prop_assert_eq!(&matmul(&Matrix::identity(a.rows()), &a).unwrap(), &a);
        prop_assert_eq!(&matmul(&a, &Matrix::identity(a.cols())).unwrap(), &a);
    }

    #[test]
    fn embed_is_row_permutation_equivariant(
        seed in any::<u64>(),
        x in matrix(9, 3),
        perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle(),
    ) {
        let net = net_with(seed, 3, vec![7, 4], 2);
        let full = net.embed(&x).unwrap();
        let permuted = net.embed(&x.select_rows(&perm)).unwrap();
        prop_assert_eq!(permuted, full.select_rows(&perm));
    }

    #[test]
    fn model_round_trip_any_architecture(
        seed in any::<u64>(),
        input in 1usize..6,
        hidden in prop::collection::vec(1usize..6, 0..3),
        k in 1usize..4,
    ) {
        let net = net_with(seed, input, hidden, k);
        prop_assert_eq!(load_model(&save_model(&net)).unwrap(), net);
    }

    #[test]
    fn padding_preserves_channel_luminance(
        (h, w, img) in (1usize..6, 1usize..6).prop_flat_map(|(h, w)| (Just(h), Just(w), prop::collection::vec(0.0f64..1.0, h * w))),
        extra_h in 0usize..4,
        extra_w in 0usize..4,
    ) {
        let out = pad_and_replicate(&img, h, w, h + extra_h, w + extra_w).unwrap();
        let source: f64 = img.iter().sum();
        for ch in 0..3 {
            let total: f64 = out.iter().skip(ch).step_by(3).sum();
            prop_assert!((total - source).abs() < 1e-12);
        }
    }

    #[test]
    fn blobs_reproduce_bitwise(seed in any::<u64>()) {
        let c = BlobConfig { seed, per_class: 10, ..BlobConfig::default() };
        prop_assert_eq!(gen_blobs(&c).unwrap(), gen_blobs(&c).unwrap());
    }

    #[test]
    fn siamese_gradient_matches_finite_differences(seed in 0u64..10_000) {
        let mut net = SiameseNet::new(net_with(seed, 3, vec![4], 2), 10.0, AdamConfig::default()).unwrap();
        for (i, p) in net.tower_g_mut().params_mut().into_iter().enumerate() {
            for (j, v) in p.iter_mut().enumerate() {
                *v += 0.1 * (((seed as usize + i * 31 + j * 7) % 11) as f64 - 5.0);
            }
        }
        let x1 = Matrix::from_rows(&[[0.3, -1.2, 0.8], [1.5, 0.2, -0.4]]).unwrap();
        let x2 = Matrix::from_rows(&[[-0.7, 0.9, 0.1], [0.4, -1.1, 1.3]]).unwrap();
        let targets = [0.0, 10.0];
        let preds = net.snn_forward(&x1, &x2).unwrap();
        prop_assume!(preds.iter().all(|&d| d > 1e-3 && (d - 10.0).abs() > 1e-3));
        for tower in [net.tower_f(), net.tower_g()] {
            let inputs = if std::ptr::eq(tower, net.tower_f()) { &x1 } else { &x2 };
            let (_, caches) = tower.forward(inputs).unwrap();
            prop_assume!(caches[0].pre_activation().as_slice().iter().all(|z| z.abs() > 1e-4));
        }
        let grads = net.loss_and_gradients(&x1, &x2, &targets, LossKind::Mse).unwrap();
        let analytic = autoembedder::embedder::flatten_grads(&grads.tower_f).concat();
        let h = 1e-5;
        let mut flat = 0;
        for (block, size) in net.tower_f().param_sizes().into_iter().enumerate() {
            for k in 0..size {
                let eval = |delta: f64| {
                    let mut probe = net.clone();
                    probe.tower_f_mut().params_mut()[block][k] += delta;
                    probe.loss(&x1, &x2, &targets, LossKind::Mse).unwrap()
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let scale = analytic[flat].abs().max(numeric.abs()).max(1e-3);
                prop_assert!((analytic[flat] - numeric).abs() / scale <= 1e-4,
                    "param {flat}: analytic {} numeric {numeric}", analytic[flat]);
                flat += 1;
            }
        }
    }
}
