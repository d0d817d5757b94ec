use ctgan_core::data::{dataset_from_idx, encode_idx_images, encode_idx_labels, IdxImages};
use ctgan_core::diagnostics::{grad_norm_probe, mode_coverage, pairwise_lipschitz_probe, weight_histogram};
use ctgan_core::gan::{consistency_term, interpolate, Bound};
use ctgan_core::graph::Graph;
use ctgan_core::nn::{build_network, ForwardOptions, LayerSpec, NetworkSpec, NoiseSources, Param, ParamKind, ParamStore};
use ctgan_core::rng::{streams, RngStream};
use ctgan_core::Tensor;
use proptest::prelude::*;

fn critic(seed: u64) -> ParamStore {
    build_network(&NetworkSpec::toy_critic(3, 12, 2, 0.5), &mut RngStream::new(seed, streams::INIT)).unwrap()
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-3.0f64..3.0, rows * cols).prop_map(move |v| Tensor::matrix(rows, cols, v).unwrap())
}

fn ct_value(c: &ParamStore, x: &Tensor, m_prime: f64, seed: u64) -> f64 {
    let mut g = Graph::new();
    let b = Bound::new(&mut g, c, true);
    let xv = g.constant(x.clone());
    let mut first = NoiseSources::new(seed);
    let mut second = first.substream(1);
    let ct = consistency_term(&mut g, &b, xv, ForwardOptions::TRAIN, &mut first, &mut second, m_prime, 0.1, false)
        .unwrap();
    g.scalar(ct).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ct_is_non_negative_and_monotone_in_margin(
        x in matrix(5, 3),
        seed in 0u64..1000,
        a in 0.0f64..2.0,
        gap in 0.0f64..2.0,
    ) {
        let c = critic(seed % 7);
        let low = ct_value(&c, &x, a, seed);
        let high = ct_value(&c, &x, a + gap, seed);
        prop_assert!(low >= 0.0 && high >= 0.0);
        prop_assert!(low >= high);
    }

    #[test]
    fn ct_vanishes_when_passes_coincide(x in matrix(4, 3), seed in 0u64..1000) {
        let c = critic(seed % 5);
        let mut g = Graph::new();
        let b = Bound::new(&mut g, &c, true);
        let xv = g.constant(x);
        let mut first = NoiseSources::new(seed);
        let mut second = first.clone();
        let ct = consistency_term(&mut g, &b, xv, ForwardOptions::TRAIN, &mut first, &mut second, 0.0, 0.1, false).unwrap();
        prop_assert_eq!(g.scalar(ct).unwrap(), 0.0);
    }

    #[test]
    fn interpolates_stay_on_segments(x in matrix(6, 2), f in matrix(6, 2), seed in 0u64..1000) {
        let mut r = RngStream::new(seed, streams::EPSILON);
        let h = interpolate(&x, &f, &mut r).unwrap();
        for k in 0..h.len() {
            let (lo, hi) = (x.data()[k].min(f.data()[k]), x.data()[k].max(f.data()[k]));
            prop_assert!(h.data()[k] >= lo - 1e-12 && h.data()[k] <= hi + 1e-12);
        }
    }

    #[test]
    fn grad_norm_probe_ignores_row_order(x in matrix(6, 3), seed in 0u64..50) {
        let c = critic(seed);
        let mut idx: Vec<usize> = (0..6).collect();
        RngStream::new(seed, streams::DATA).shuffle(&mut idx);
        let shuffled = x.select_rows(&idx).unwrap();
        prop_assert_eq!(grad_norm_probe(&c, &x).unwrap(), grad_norm_probe(&c, &shuffled).unwrap());
    }

    #[test]
    fn probes_are_read_only(x in matrix(8, 3), seed in 0u64..50) {
        let c = critic(seed);
        let before = c.fingerprint();
        grad_norm_probe(&c, &x).unwrap();
        let _ = pairwise_lipschitz_probe(&c, &x);
        weight_histogram(&c, 9).unwrap();
        prop_assert_eq!(c.fingerprint(), before);
    }

    #[test]
    fn one_dimensional_linear_probes_agree(w in -5.0f64..5.0, xs in prop::collection::vec(-4.0f64..4.0, 4)) {
        prop_assume!(xs[0] != xs[2] || xs[0] != xs[3] || xs[1] != xs[2] || xs[1] != xs[3]);
        let c = ParamStore::from_parts(
            NetworkSpec::new(1, vec![LayerSpec::Dense { units: 1 }]),
            vec![
                Param { layer: 0, kind: ParamKind::Weight, value: Tensor::matrix(1, 1, vec![w]).unwrap() },
                Param { layer: 0, kind: ParamKind::Bias, value: Tensor::from_vec(vec![0.0]) },
            ],
            vec![],
            None,
        ).unwrap();
        let x = Tensor::matrix(4, 1, xs).unwrap();
        let pair = pairwise_lipschitz_probe(&c, &x).unwrap().max_ratio;
        let grad = grad_norm_probe(&c, &x).unwrap();
        prop_assert!((pair - grad).abs() <= 1e-12 * (1.0 + grad));
    }

    #[test]
    fn coverage_fraction_is_a_fraction(x in matrix(20, 2), r in 0.01f64..3.0) {
        let cov = mode_coverage(&x, &[[0.0, 0.0], [1.0, 1.0]], r).unwrap();
        prop_assert!((0.0..=1.0).contains(&cov.high_quality_fraction));
        prop_assert!(cov.modes_hit <= 2);
    }

    #[test]
    fn idx_round_trip(count in 1usize..6, rows in 1usize..5, cols in 1usize..5, seed in 0u64..1000) {
        let mut r = RngStream::new(seed, streams::DATA);
        let pixels: Vec<u8> = (0..count * rows * cols).map(|_| r.below(256) as u8).collect();
        let labels: Vec<u8> = (0..count).map(|_| r.below(10) as u8).collect();
        let img = encode_idx_images(&IdxImages { count, rows, cols, pixels });
        let lab = encode_idx_labels(&labels);
        let ds = dataset_from_idx(&img, Some(&lab)).unwrap();
        let (i2, l2) = ctgan_core::data::dataset_to_idx(&ds, rows, cols).unwrap();
        prop_assert_eq!(i2, img);
        prop_assert_eq!(l2.unwrap(), lab);
    }
}
