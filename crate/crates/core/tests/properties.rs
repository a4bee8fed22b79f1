//! Property tests over the public API of `openspace-core`.

use std::f64::consts::TAU;

use openspace_core::eval::{confusion, ConfusionMatrix};
use openspace_core::nn::{softmax_channels, Conv2d, ConvTranspose2d, Layer, Mode, ParamStore, TrainableCrossEntropy};
use openspace_core::numerics::{fft_1d, fft_axis, Complex, Tensor};
use openspace_core::pipeline::{normalize, ra_to_doa, RaMap, RunningStats};
use openspace_core::simulate::{
    default_config, make_parking_scene, synthesize_frame, CartesianGrid, PolarGrid, Scene,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn naive_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, v)| v * Complex::from_polar(1.0, -TAU * (j * k % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

fn lane(seed: u64, n: usize) -> Vec<Complex<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect()
}

fn energy(x: &[Complex<f64>]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_matches_dft_and_conserves_energy(log2 in 2u32..=7, seed in any::<u64>()) {
        let x = lane(seed, 1 << log2);
        let fast = fft_1d(&x, false).unwrap();
        let slow = naive_dft(&x);
        let scale = slow.iter().map(|v| v.norm()).fold(1.0, f64::max);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() / scale < 1e-9);
        }
        let n = x.len() as f64;
        prop_assert!((energy(&fast) / n - energy(&x)).abs() / energy(&x) < 1e-9);
    }

    #[test]
    fn inverse_fft_undoes_forward(log2 in 1u32..=7, seed in any::<u64>()) {
        let x = lane(seed, 1 << log2);
        let back = fft_1d(&fft_1d(&x, false).unwrap(), true).unwrap();
        for (a, b) in back.iter().zip(&x) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn fft_axis_transforms_each_lane(rows in 1usize..5, seed in any::<u64>()) {
        let n = 8;
        let data = lane(seed, rows * n);
        let t = Tensor::new(&[rows, n], data.clone()).unwrap();
        let f = fft_axis(&t, 1, false).unwrap();
        for r in 0..rows {
            let want = naive_dft(&data[r * n..(r + 1) * n]);
            for (a, b) in f.data()[r * n..(r + 1) * n].iter().zip(&want) {
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn noiseless_frames_superpose(a in 0u64..1000, b in 0u64..1000) {
        let cfg = default_config();
        let sa = make_parking_scene(a, 1, &cfg);
        let sb = make_parking_scene(b + 1000, 1, &cfg);
        let both: Scene = sa.union(&sb);
        let fa = synthesize_frame(&sa, &cfg, 0.0, 0).unwrap();
        let fb = synthesize_frame(&sb, &cfg, 0.0, 0).unwrap();
        let fab = synthesize_frame(&both, &cfg, 0.0, 0).unwrap();
        let peak = fab.data.data().iter().map(|v| v.norm()).fold(1.0f32, f32::max);
        for ((x, y), z) in fa.data.data().iter().zip(fb.data.data()).zip(fab.data.data()) {
            prop_assert!((x + y - z).norm() / peak < 1e-4);
        }
    }

    #[test]
    fn softmax_is_a_distribution(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::from_fn(&[2, 3, 4, 2], |_| r.random_range(-30.0..30.0f64));
        let s = softmax_channels(&x).unwrap();
        for px in s.data().chunks(2) {
            prop_assert!(px.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!((px.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn weighted_loss_is_non_negative(seed in any::<u64>(), t0 in -3.0..3.0f64, t1 in -3.0..3.0f64) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamStore::<f64>::new();
        let mut loss = TrainableCrossEntropy::new(&mut ps, "loss", 2);
        ps.value_mut(loss.theta).copy_from_slice(&[t0, t1]);
        let logits = Tensor::from_fn(&[1, 4, 4, 2], |_| r.random_range(-5.0..5.0));
        let labels: Vec<u8> = (0..16).map(|i| [0u8, 1, 255][i % 3]).collect();
        prop_assert!(loss.forward(&ps, &logits, &labels).unwrap() >= 0.0);
        let w = loss.weights(&ps);
        prop_assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn transposed_conv_is_the_adjoint(seed in any::<u64>(), h in 2usize..9, w in 2usize..9, k in 1usize..5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let mut ps = ParamStore::<f64>::new();
        let mut conv = Conv2d::new(&mut ps, "c", 2, 3, k, 2, 1, false, &mut r);
        let mut t = ConvTranspose2d::new(&mut ps, "t", 3, 2, k, 2, &mut r);
        let kernel = ps.value(conv.weight).to_vec();
        ps.value_mut(t.weight).copy_from_slice(&kernel);
        let x = Tensor::from_fn(&[1, 2 * h, 2 * w, 2], |_| r.random_range(-1.0..1.0));
        let y = Tensor::from_fn(&[1, h, w, 3], |_| r.random_range(-1.0..1.0));
        let cx = conv.forward(&ps, &x, Mode::Infer).unwrap();
        let ty = t.forward(&ps, &y, Mode::Infer).unwrap();
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.data().iter().zip(ty.data()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-6 * (1.0 + lhs.abs()));
    }

    #[test]
    fn doa_resampling_is_monotone(seed in any::<u64>(), bump in 0.0f32..5.0) {
        let cfg = default_config();
        let polar = PolarGrid::from_config(&cfg);
        let cart = CartesianGrid { rows: 32, cols: 32, ..CartesianGrid::DEFAULT };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let shape = [polar.n_range, polar.width];
        let lo = Tensor::from_fn(&shape, |_| r.random_range(-2.0..2.0f32));
        let hi = lo.map(|&v| v + bump * r.random_range(0.0..1.0f32));
        let a = ra_to_doa(&RaMap { data: lo, grid: polar }, &cart, &cfg, -10.0);
        let b = ra_to_doa(&RaMap { data: hi, grid: polar }, &cart, &cfg, -10.0);
        for (x, y) in a.data.data().iter().zip(b.data.data()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn normalized_data_is_standard(seed in any::<u64>(), mean in -50.0..50.0f32, spread in 0.1..20.0f32) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let t = Tensor::from_fn(&[500], |_| mean + spread * r.random_range(-1.0..1.0f32));
        let mut acc = RunningStats::default();
        acc.push_slice(t.data());
        let z = normalize(&t, acc.finish().unwrap()).unwrap();
        let n = z.len() as f64;
        let m = z.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let v = z.data().iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / n;
        prop_assert!(m.abs() < 1e-4 && (v - 1.0).abs() < 1e-3);
    }

    #[test]
    fn confusion_ignores_pixel_order(seed in any::<u64>(), n in 1usize..400) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let gt: Vec<u8> = (0..n).map(|_| [0u8, 1, 255][r.random_range(0..3)]).collect();
        let pred: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut r);
        let gp: Vec<u8> = perm.iter().map(|&i| gt[i]).collect();
        let pp: Vec<u8> = perm.iter().map(|&i| pred[i]).collect();
        prop_assert_eq!(confusion(&pred, &gt).unwrap(), confusion(&pp, &gp).unwrap());
    }

    #[test]
    fn fixing_a_pixel_never_lowers_miou(seed in any::<u64>(), n in 2usize..300) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let gt: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let mut pred: Vec<u8> = (0..n).map(|_| r.random_range(0..2)).collect();
        let before = confusion(&pred, &gt).unwrap().mean_iou().unwrap();
        if let Some(i) = (0..n).find(|&i| pred[i] != gt[i]) {
            pred[i] = gt[i];
            let after = confusion(&pred, &gt).unwrap().mean_iou().unwrap();
            prop_assert!(after >= before);
        }
    }

    #[test]
    fn confusion_of_concatenation_is_the_sum(seed in any::<u64>(), n in 1usize..200, m in 1usize..200) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let gt: Vec<u8> = (0..n + m).map(|_| [0u8, 1, 255][r.random_range(0..3)]).collect();
        let pred: Vec<u8> = (0..n + m).map(|_| r.random_range(0..2)).collect();
        let whole = confusion(&pred, &gt).unwrap();
        let mut parts = ConfusionMatrix::default();
        parts += confusion(&pred[..n], &gt[..n]).unwrap();
        parts += confusion(&pred[n..], &gt[n..]).unwrap();
        prop_assert_eq!(whole, parts);
    }
}

#[test]
fn perfect_prediction_scores_one() {
    let gt = [0u8, 1, 1, 255, 0];
    let pred = [0u8, 1, 1, 0, 0];
    assert_eq!(confusion(&pred, &gt).unwrap().mean_iou().unwrap(), 1.0);
}
