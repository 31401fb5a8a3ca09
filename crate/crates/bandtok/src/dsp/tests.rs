use super::*;
use crate::rng::SeedForge;
use rand::Rng;

fn silence(seconds: f64, sr: u32) -> Waveform {
    Waveform::new(vec![0.0; (seconds * sr as f64) as usize], sr).unwrap()
}

fn noise(n: usize, sr: u32, label: &str) -> Waveform {
    let mut rng = SeedForge::new(5150).stream(label);
    Waveform::new((0..n).map(|_| rng.random_range(-0.9..0.9)).collect(), sr).unwrap()
}

fn small_cfg() -> FrontendConfig {
    FrontendConfig {
        n_mels: 16,
        win_samples: 256,
        hop_samples: 64,
        floor_epsilon: 1e-5,
        mel_scale: MelScale::Slaney,
    }
}

// Naive O(n^2) DFT magnitude-squared spectrum, independent of rustfft.
fn dft_power(frame: &[f64]) -> Vec<f64> {
    let n = frame.len();
    (0..=n / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &x) in frame.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * i) as f64 / n as f64;
                re += x * ang.cos();
                im += x * ang.sin();
            }
            re * re + im * im
        })
        .collect()
}

// Full log-Mel oracle: reflect padding + Hann + naive DFT + explicit
// filterbank multiply, mirroring the documented pipeline step by step.
fn oracle_log_mel(w: &Waveform, cfg: &FrontendConfig) -> Mat {
    let bank = mel_filterbank(cfg.win_samples, cfg.n_mels, w.sample_rate_hz, cfg.mel_scale).unwrap();
    let window = hann_window(cfg.win_samples);
    let frames = frame_count(w.samples.len(), cfg.hop_samples);
    Mat::from_fn(frames, cfg.n_mels, |t, m| {
        let start = (t * cfg.hop_samples) as isize - (cfg.win_samples / 2) as isize;
        let frame: Vec<f64> = (0..cfg.win_samples)
            .map(|i| {
                w.samples[reflect_index(start + i as isize, w.samples.len())] * window[i]
            })
            .collect();
        let power = dft_power(&frame);
        let mel_power: f64 = bank.row(m).iter().zip(&power).map(|(w, p)| w * p).sum();
        mel_power.sqrt().max(cfg.floor_epsilon).ln()
    })
}

#[test]
fn silence_clamps_to_floor_with_ceil_framing() {
    let cfg = FrontendConfig::default();
    let spec = compute_log_mel(&silence(1.0, 44100), &cfg).unwrap();
    assert_eq!(spec.frames(), 87, "ceil(44100/512) frames expected");
    assert_eq!(spec.values.cols(), 128);
    let floor = cfg.log_floor();
    for &v in spec.values.as_slice() {
        assert_eq!(v, floor);
    }
}

#[test]
fn configuration_echoed_in_metadata() {
    let spec = compute_log_mel(&silence(0.1, 44100), &FrontendConfig::default()).unwrap();
    assert_eq!(spec.n_mels, 128);
    assert_eq!(spec.win_samples, 2048);
    assert_eq!(spec.hop_samples, 512);
    assert_eq!(spec.sample_rate_hz, 44100);
}

#[test]
fn sine_at_filter_center_peaks_in_that_column() {
    let cfg = small_cfg();
    let sr = 8000u32;
    let centers = mel_center_frequencies(cfg.n_mels, sr, cfg.mel_scale);
    for &k in &[3usize, 8, 12] {
        let f0 = centers[k];
        let samples: Vec<f64> = (0..sr as usize / 2)
            .map(|i| (2.0 * std::f64::consts::PI * f0 * i as f64 / sr as f64).sin())
            .collect();
        let w = Waveform::new(samples, sr).unwrap();
        let spec = compute_log_mel(&w, &cfg).unwrap();
        let oracle = oracle_log_mel(&w, &cfg);
        let diff = spec.values.sub(&oracle).unwrap().max_abs();
        assert!(diff < 1e-6, "fft pipeline strays {diff} from dft oracle");

        let mean_col = |m: &Mat, c: usize| -> f64 {
            (0..m.rows()).map(|r| m.get(r, c)).sum::<f64>() / m.rows() as f64
        };
        let argmax = (0..cfg.n_mels)
            .max_by(|&a, &b| {
                mean_col(&oracle, a)
                    .partial_cmp(&mean_col(&oracle, b))
                    .unwrap()
            })
            .unwrap();
        assert_eq!(argmax, k, "sine at filter {k} center peaked at {argmax}");
    }
}

#[test]
fn filterbank_degenerate_smallest_case() {
    let bank = mel_filterbank(4, 1, 8000, MelScale::Slaney).unwrap();
    assert_eq!(bank.rows(), 1);
    assert_eq!(bank.cols(), 3);
    assert!(bank.as_slice().iter().all(|&w| w >= 0.0));
    assert!(bank.as_slice().iter().any(|&w| w > 0.0));
}

#[test]
fn default_bank_rows_strictly_positive() {
    let bank = mel_filterbank(2048, 128, 44100, MelScale::Slaney).unwrap();
    assert_eq!(bank.cols(), 1025);
    for m in 0..128 {
        let sum: f64 = bank.row(m).iter().sum();
        assert!(sum > 0.0, "row {m} sums to {sum}");
    }
}

#[test]
fn filter_centers_strictly_increase() {
    for scale in [MelScale::Slaney, MelScale::Htk] {
        let centers = mel_center_frequencies(128, 44100, scale);
        for pair in centers.windows(2) {
            assert!(pair[0] < pair[1], "centers not increasing: {pair:?}");
        }
    }
}

#[test]
fn filterbank_too_many_mels_rejected() {
    assert!(matches!(
        mel_filterbank(4, 3, 8000, MelScale::Slaney),
        Err(Error::Config(_))
    ));
}

#[test]
fn filterbank_is_linear_over_power_spectra() {
    let bank = mel_filterbank(64, 8, 8000, MelScale::Slaney).unwrap();
    let mut rng = SeedForge::new(2).stream("fb-linearity");
    let a: Vec<f64> = (0..33).map(|_| rng.random_range(0.0..4.0)).collect();
    let b: Vec<f64> = (0..33).map(|_| rng.random_range(0.0..4.0)).collect();
    let apply = |p: &[f64]| -> Vec<f64> {
        (0..8)
            .map(|m| bank.row(m).iter().zip(p).map(|(w, x)| w * x).sum())
            .collect()
    };
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let lhs = apply(&sum);
    let rhs: Vec<f64> = apply(&a).iter().zip(apply(&b)).map(|(x, y)| x + y).collect();
    for (l, r) in lhs.iter().zip(&rhs) {
        assert!((l - r).abs() < 1e-12);
    }
}

#[test]
fn frame_count_is_ceil_n_over_hop() {
    for n in [1usize, 63, 64, 65, 500, 44100] {
        let w = Waveform::new(vec![0.1; n], 8000).unwrap();
        let cfg = small_cfg();
        let spec = compute_log_mel(&w, &cfg).unwrap();
        assert_eq!(spec.frames(), n.div_ceil(cfg.hop_samples), "n = {n}");
    }
}

#[test]
fn no_entry_below_clamp_floor() {
    let cfg = small_cfg();
    let spec = compute_log_mel(&noise(3000, 8000, "floor"), &cfg).unwrap();
    let floor = cfg.log_floor();
    for &v in spec.values.as_slice() {
        assert!(v >= floor);
    }
}

#[test]
fn log_mel_is_deterministic_and_matches_sequential() {
    let cfg = small_cfg();
    let w = noise(2000, 8000, "determinism");
    let a = compute_log_mel(&w, &cfg).unwrap();
    let b = compute_log_mel(&w, &cfg).unwrap();
    assert_eq!(a.values, b.values, "repeated calls must match bitwise");
    let seq = compute_log_mel_seq(&w, &cfg).unwrap();
    assert_eq!(a.values, seq.values, "parallel and sequential must match bitwise");
}

#[test]
fn empty_waveform_and_bad_config_rejected() {
    assert!(Waveform::new(vec![], 44100).is_err());
    let w = silence(0.01, 8000);
    let bad_mels = FrontendConfig {
        n_mels: 0,
        ..small_cfg()
    };
    assert!(matches!(compute_log_mel(&w, &bad_mels), Err(Error::Config(_))));
    let bad_hop = FrontendConfig {
        win_samples: 32,
        hop_samples: 64,
        ..small_cfg()
    };
    assert!(matches!(compute_log_mel(&w, &bad_hop), Err(Error::Config(_))));
}

#[test]
fn mel_distance_identity_and_offset() {
    let spec = compute_log_mel(&noise(1000, 8000, "dist"), &small_cfg()).unwrap();
    assert_eq!(mel_distance(&spec, &spec).unwrap(), 0.0);

    let zeros = LogMelSpectrogram {
        values: Mat::zeros(2, 2),
        n_mels: 2,
        hop_samples: 1,
        win_samples: 2,
        sample_rate_hz: 8000,
    };
    let ones = LogMelSpectrogram {
        values: Mat::from_fn(2, 2, |_, _| 1.0),
        ..zeros.clone()
    };
    assert_eq!(mel_distance(&zeros, &ones).unwrap(), 1.0);
}

#[test]
fn mel_distance_matches_double_loop_oracle() {
    let mut rng = SeedForge::new(3).stream("mel-dist");
    let mk = |rng: &mut rand_chacha::ChaCha8Rng| LogMelSpectrogram {
        values: Mat::from_fn(4, 4, |_, _| rng.random_range(-5.0..5.0)),
        n_mels: 4,
        hop_samples: 1,
        win_samples: 2,
        sample_rate_hz: 8000,
    };
    let a = mk(&mut rng);
    let b = mk(&mut rng);
    let mut sum = 0.0;
    for r in 0..4 {
        for c in 0..4 {
            sum += (a.values.get(r, c) - b.values.get(r, c)).abs();
        }
    }
    let oracle = sum / 16.0;
    assert!((mel_distance(&a, &b).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn mel_distance_is_a_metric_on_random_triples() {
    let mut rng = SeedForge::new(4).stream("mel-metric");
    let mk = |rng: &mut rand_chacha::ChaCha8Rng| LogMelSpectrogram {
        values: Mat::from_fn(3, 5, |_, _| rng.random_range(-2.0..2.0)),
        n_mels: 5,
        hop_samples: 1,
        win_samples: 2,
        sample_rate_hz: 8000,
    };
    for _ in 0..50 {
        let (a, b, c) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
        let dab = mel_distance(&a, &b).unwrap();
        let dba = mel_distance(&b, &a).unwrap();
        let dac = mel_distance(&a, &c).unwrap();
        let dcb = mel_distance(&c, &b).unwrap();
        assert_eq!(dab, dba, "symmetry");
        assert!(dab <= dac + dcb + 1e-12, "triangle inequality");
        assert!(dab > 0.0, "distinct random pairs have positive distance");
        assert_eq!(mel_distance(&a, &a).unwrap(), 0.0, "identity");
    }
}

#[test]
fn mel_distance_shape_mismatch_rejected() {
    let a = compute_log_mel(&noise(500, 8000, "s1"), &small_cfg()).unwrap();
    let b = compute_log_mel(&noise(1000, 8000, "s2"), &small_cfg()).unwrap();
    assert!(matches!(mel_distance(&a, &b), Err(Error::InvalidInput(_))));
}

#[test]
fn stft_distance_zero_for_identical_and_sign_flipped() {
    let a = noise(400, 8000, "stft");
    assert_eq!(stft_distance(&a, &a, &[64, 32]).unwrap(), 0.0);
    let flipped = Waveform::new(a.samples.iter().map(|s| -s).collect(), 8000).unwrap();
    assert_eq!(stft_distance(&a, &flipped, &[64, 32]).unwrap(), 0.0);
}

#[test]
fn stft_distance_matches_per_scale_oracle() {
    let a = noise(200, 8000, "stft-a");
    let b = noise(200, 8000, "stft-b");
    let scales = [64usize, 32];
    let got = stft_distance(&a, &b, &scales).unwrap();

    let floor = 1e-5_f64;
    let mut total = 0.0;
    for &win in &scales {
        let hop = win / 4;
        let window = hann_window(win);
        let frames = frame_count(200, hop);
        let mut sum = 0.0;
        for t in 0..frames {
            let start = (t * hop) as isize - (win / 2) as isize;
            let frame = |w: &Waveform| -> Vec<f64> {
                (0..win)
                    .map(|i| w.samples[reflect_index(start + i as isize, 200)] * window[i])
                    .collect()
            };
            let pa = dft_power(&frame(&a));
            let pb = dft_power(&frame(&b));
            for k in 0..=win / 2 {
                sum += (pa[k].sqrt().max(floor).ln() - pb[k].sqrt().max(floor).ln()).abs();
            }
        }
        total += sum / (frames * (win / 2 + 1)) as f64;
    }
    let oracle = total / scales.len() as f64;
    assert!((got - oracle).abs() < 1e-9, "stft distance {got} vs oracle {oracle}");
}

#[test]
fn stft_distance_length_mismatch_rejected() {
    let a = noise(100, 8000, "l1");
    let b = noise(101, 8000, "l2");
    assert!(stft_distance(&a, &b, &[32]).is_err());
}
