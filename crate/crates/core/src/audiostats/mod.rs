//! Sample-level statistics of audio: zero crossings, proximate movement,
//! seeded white noise and Monte Carlo checks of binomial tails.

mod montecarlo;
mod wav;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use montecarlo::{
    monte_carlo_tail, monte_carlo_tail_with_workers, wilson_interval, MonteCarloResult,
    PARTITION_TRIALS,
};
pub use wav::{decode_wav, encode_wav16, load_wav, quantize16, write_wav};

/// Generator behind [`white_noise`] and [`monte_carlo_tail`], recorded in
/// every output that depends on a seed.
pub const PRNG_ALGORITHM: &str = "ChaCha20 (rand_chacha 0.3, seed_from_u64)";

/// Sample rate given to generated noise.
pub const DEFAULT_SAMPLE_RATE: u32 = 44_100;

/// Mono samples in `[-1, 1]` at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::domain("sample rate must be positive"));
        }
        if let Some((i, x)) = samples
            .iter()
            .enumerate()
            .find(|(_, x)| !(-1.0..=1.0).contains(*x))
        {
            return Err(Error::domain(format!(
                "sample {i} = {x} lies outside [-1, 1]"
            )));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The same samples in reverse order.
    pub fn reversed(&self) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        AudioBuffer {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    fn pairs(&self) -> Result<impl Iterator<Item = (f64, f64)> + '_> {
        if self.samples.len() < 2 {
            return Err(Error::domain(format!(
                "rate statistics need at least 2 samples, got {}",
                self.samples.len()
            )));
        }
        Ok(self.samples.windows(2).map(|w| (w[0], w[1])))
    }
}

/// Rates over the `len - 1` successive sample pairs of a buffer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalStats {
    pub zcr: f64,
    pub proximity_rate: f64,
    pub epsilon: f64,
    pub pair_count: u64,
    /// Pairs with a strict sign change.
    pub crossings: u64,
    /// Pairs closer than `epsilon`.
    pub proximate: u64,
}

impl SignalStats {
    fn from_counts(crossings: u64, proximate: u64, pair_count: u64, epsilon: f64) -> Self {
        SignalStats {
            zcr: crossings as f64 / pair_count as f64,
            proximity_rate: proximate as f64 / pair_count as f64,
            epsilon,
            pair_count,
            crossings,
            proximate,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

fn count_crossings(buffer: &AudioBuffer) -> Result<u64> {
    // Exact zeros never count.
    Ok(buffer.pairs()?.filter(|(a, b)| a * b < 0.0).count() as u64)
}

fn count_proximate(buffer: &AudioBuffer, epsilon: f64) -> Result<u64> {
    check_epsilon(epsilon)?;
    Ok(buffer
        .pairs()?
        .filter(|(a, b)| (b - a).abs() < epsilon)
        .count() as u64)
}

/// Fraction of successive pairs whose product is negative.
pub fn zero_crossing_rate(buffer: &AudioBuffer) -> Result<f64> {
    Ok(count_crossings(buffer)? as f64 / (buffer.len() - 1) as f64)
}

/// Fraction of successive pairs with `|x[i] - x[i-1]| < epsilon`.
pub fn proximity_rate(buffer: &AudioBuffer, epsilon: f64) -> Result<f64> {
    Ok(count_proximate(buffer, epsilon)? as f64 / (buffer.len() - 1) as f64)
}

pub fn signal_stats(buffer: &AudioBuffer, epsilon: f64) -> Result<SignalStats> {
    let proximate = count_proximate(buffer, epsilon)?;
    let crossings = count_crossings(buffer)?;
    Ok(SignalStats::from_counts(
        crossings,
        proximate,
        (buffer.len() - 1) as u64,
        epsilon,
    ))
}

/// I.i.d. uniform samples on `[-amplitude, amplitude]` at
/// [`DEFAULT_SAMPLE_RATE`]. The same `(n, seed, amplitude)` always yields the
/// same samples.
pub fn white_noise(n: usize, seed: u64, amplitude: f64) -> Result<AudioBuffer> {
    if n == 0 {
        return Err(Error::domain("white noise needs at least one sample"));
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return Err(Error::domain(format!(
            "noise amplitude must lie in (0, 1], got {amplitude}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-amplitude, amplitude);
    let samples = (0..n).map(|_| dist.sample(&mut rng)).collect();
    AudioBuffer::new(samples, DEFAULT_SAMPLE_RATE)
}

/// Statistics of one readable corpus file.
#[derive(Clone, Debug)]
pub struct FileStats {
    pub path: PathBuf,
    pub samples: usize,
    pub sample_rate: u32,
    pub stats: SignalStats,
}

/// Per-file and pooled statistics of a corpus, plus the files that could
/// not be used.
#[derive(Clone, Debug)]
pub struct CorpusSummary {
    pub files: Vec<FileStats>,
    pub skipped: Vec<(PathBuf, String)>,
    pub pooled: SignalStats,
}

impl CorpusSummary {
    pub const CSV_HEADER: &'static str = "file,samples,sample_rate,zcr,proximity_rate,epsilon";

    /// One row per file, then a `pooled` row whose sample rate is left empty
    /// when the files disagree.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(Self::CSV_HEADER);
        out.push('\n');
        for f in &self.files {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&f.path.display().to_string()),
                f.samples,
                f.sample_rate,
                f.stats.zcr,
                f.stats.proximity_rate,
                f.stats.epsilon
            );
        }
        let rate = match self.files.first() {
            Some(first)
                if self
                    .files
                    .iter()
                    .all(|f| f.sample_rate == first.sample_rate) =>
            {
                first.sample_rate.to_string()
            }
            _ => String::new(),
        };
        let samples: usize = self.files.iter().map(|f| f.samples).sum();
        let _ = writeln!(
            out,
            "pooled,{samples},{rate},{},{},{}",
            self.pooled.zcr, self.pooled.proximity_rate, self.pooled.epsilon
        );
        out
    }
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

/// Statistics for every readable file, in input order, and their pooled
/// rates weighted by pair count. Unreadable files are listed in
/// [`CorpusSummary::skipped`].
pub fn corpus_summary<P: AsRef<Path> + Sync>(paths: &[P], epsilon: f64) -> Result<CorpusSummary> {
    check_epsilon(epsilon)?;
    let results: Vec<(PathBuf, Result<FileStats>)> = paths
        .par_iter()
        .map(|p| {
            let path = p.as_ref().to_path_buf();
            let stats = load_wav(&path).and_then(|b| {
                Ok(FileStats {
                    path: path.clone(),
                    samples: b.len(),
                    sample_rate: b.sample_rate(),
                    stats: signal_stats(&b, epsilon)?,
                })
            });
            (path, stats)
        })
        .collect();
    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for (path, r) in results {
        match r {
            Ok(f) => files.push(f),
            Err(e) => skipped.push((path, e.to_string())),
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyCorpus { skipped });
    }
    let sum = |f: fn(&SignalStats) -> u64| files.iter().map(|x| f(&x.stats)).sum::<u64>();
    let pooled = SignalStats::from_counts(
        sum(|s| s.crossings),
        sum(|s| s.proximate),
        sum(|s| s.pair_count),
        epsilon,
    );
    Ok(CorpusSummary {
        files,
        skipped,
        pooled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn buf(samples: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(samples, 8000).unwrap()
    }

    fn sine(freq: f64, rate: u32, len: usize) -> AudioBuffer {
        let samples = (0..len)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / f64::from(rate)).sin())
            .collect();
        AudioBuffer::new(samples, rate).unwrap()
    }

    #[test]
    fn buffer_validation() {
        assert!(AudioBuffer::new(vec![0.0, 1.5], 8000).is_err());
        assert!(AudioBuffer::new(vec![0.0, f64::NAN], 8000).is_err());
        assert!(AudioBuffer::new(vec![0.0], 0).is_err());
        assert!(zero_crossing_rate(&buf(vec![0.3])).is_err());
        assert!(proximity_rate(&buf(vec![0.3, 0.1]), 0.0).is_err());
        assert!(proximity_rate(&buf(vec![0.3, 0.1]), f64::NAN).is_err());
    }

    #[test]
    fn zero_crossing_examples() {
        assert_eq!(zero_crossing_rate(&buf(vec![0.4; 100])).unwrap(), 0.0);
        let alt: Vec<f64> = (0..100)
            .map(|i| if i % 2 == 0 { 0.7 } else { -0.7 })
            .collect();
        assert_eq!(zero_crossing_rate(&buf(alt)).unwrap(), 1.0);
        // Touching zero is not a crossing.
        assert_eq!(zero_crossing_rate(&buf(vec![0.5, 0.0, -0.5])).unwrap(), 0.0);
    }

    #[test]
    fn sine_at_440_hz() {
        let s = sine(440.0, 44_100, 44_100);
        let zcr = zero_crossing_rate(&s).unwrap();
        assert!((zcr - 2.0 * 440.0 / 44_100.0).abs() < 0.0005, "{zcr}");
        assert_eq!(proximity_rate(&s, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn proximity_examples() {
        assert_eq!(proximity_rate(&buf(vec![-0.2; 50]), 1e-9).unwrap(), 1.0);
        let stairs: Vec<f64> = (0..=10).map(|i| -1.0 + 0.2 * i as f64).collect();
        assert_eq!(proximity_rate(&buf(stairs), 0.1).unwrap(), 0.0);
        // Steps of exactly 0.25 are not closer than 0.25.
        let stairs: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
        assert_eq!(proximity_rate(&buf(stairs.clone()), 0.25).unwrap(), 0.0);
        assert_eq!(proximity_rate(&buf(stairs), 0.2500001).unwrap(), 1.0);
    }

    #[test]
    fn white_noise_statistics() {
        let noise = white_noise(1_000_000, 42, 1.0).unwrap();
        let s = signal_stats(&noise, 0.1).unwrap();
        assert!((s.zcr - 0.5).abs() < 0.002, "{}", s.zcr);
        // P(|x - y| < ε) for independent uniforms on [-1, 1].
        assert!(
            (s.proximity_rate - (0.1 - 0.01 / 4.0)).abs() < 0.002,
            "{}",
            s.proximity_rate
        );
        assert_eq!(s.pair_count, 999_999);
    }

    #[test]
    fn white_noise_is_deterministic() {
        let a = white_noise(1000, 7, 0.5).unwrap();
        let b = white_noise(1000, 7, 0.5).unwrap();
        assert!(a
            .samples()
            .iter()
            .zip(b.samples())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.samples().iter().all(|x| x.abs() <= 0.5));
        assert_ne!(a, white_noise(1000, 8, 0.5).unwrap());
        assert!(white_noise(0, 1, 1.0).is_err());
        assert!(white_noise(10, 1, 1.5).is_err());
    }

    const REFERENCE_SEED_42: [f64; 3] = [
        0.028098591530048234,
        -0.17960238753022817,
        -0.8043722673311224,
    ];

    #[test]
    fn white_noise_reference_prefix() {
        // Frozen output for seed 42, guarding against silent changes in the
        // generator or the sampling path.
        let a = white_noise(3, 42, 1.0).unwrap();
        assert_eq!(a.samples(), &REFERENCE_SEED_42);
    }

    #[test]
    fn wav_round_trip_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("noise.wav");
        let noise = white_noise(100_000, 3, 1.0).unwrap();
        write_wav(&noise, &path, 16).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.len(), noise.len());
        assert_eq!(back.sample_rate(), noise.sample_rate());
        // Written as round(32767·x), read back as v/32768.
        for (x, y) in noise.samples().iter().zip(back.samples()) {
            assert!((x - y).abs() <= (0.5 + x.abs()) / 32768.0 + 1e-15);
        }
        let (a, b) = (
            signal_stats(&noise, 0.1).unwrap(),
            signal_stats(&back, 0.1).unwrap(),
        );
        assert!((a.zcr - b.zcr).abs() <= 1e-4);
        assert!((a.proximity_rate - b.proximity_rate).abs() <= 1e-4);
    }

    #[test]
    fn wav_round_trip_on_writer_grid_is_within_one_step() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.wav");
        let samples: Vec<f64> = (-32767..=32767)
            .step_by(97)
            .map(|v| f64::from(v) / 32767.0)
            .collect();
        let b = AudioBuffer::new(samples, 48_000).unwrap();
        write_wav(&b, &path, 16).unwrap();
        let back = load_wav(&path).unwrap();
        for (x, y) in b.samples().iter().zip(back.samples()) {
            assert!((x - y).abs() <= 1.0 / 32768.0);
        }
        assert_eq!(
            zero_crossing_rate(&b).unwrap(),
            zero_crossing_rate(&back).unwrap()
        );
    }

    #[test]
    fn quantized_zeros_drop_crossings() {
        // sin(2π·440·i/44100) vanishes at i = 2205·m. In f64 those samples
        // are ±1e-13 and still change sign; on the 16-bit grid they become
        // exact zeros, which never count.
        let s = sine(440.0, 44_100, 44_100);
        let back = decode_wav(&encode_wav16(&s)).unwrap();
        let zeros = back.samples().iter().filter(|v| **v == 0.0).count();
        assert_eq!(zeros, 20);
        let (a, b) = (
            signal_stats(&s, 0.1).unwrap(),
            signal_stats(&back, 0.1).unwrap(),
        );
        assert_eq!(a.crossings - b.crossings, 19);
        assert!((a.zcr - b.zcr).abs() > 1e-4);
    }

    fn write_sine(dir: &Path, name: &str, freq: f64) -> PathBuf {
        let path = dir.join(name);
        write_wav(&sine(freq, 8000, 4000), &path, 16).unwrap();
        path
    }

    #[test]
    fn corpus_pooling() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_sine(dir.path(), "a.wav", 220.0);
        let one = corpus_summary(&[&a], 0.1).unwrap();
        assert_eq!(one.pooled, one.files[0].stats);
        let two = corpus_summary(&[&a, &a], 0.1).unwrap();
        assert_eq!(two.pooled.zcr, one.pooled.zcr);
        assert_eq!(two.pooled.proximity_rate, one.pooled.proximity_rate);

        let b = write_sine(dir.path(), "b.wav", 900.0);
        let mixed = corpus_summary(&[&a, &b], 0.1).unwrap();
        let expected = (mixed.files[0].stats.crossings + mixed.files[1].stats.crossings) as f64
            / (mixed.files[0].stats.pair_count + mixed.files[1].stats.pair_count) as f64;
        assert_eq!(mixed.pooled.zcr, expected);
        assert_eq!(mixed.files[1].path, b);
    }

    #[test]
    fn corpus_reports_unreadable_files() {
        let dir = tempfile::tempdir().unwrap();
        let good = write_sine(dir.path(), "good.wav", 220.0);
        let bad = dir.path().join("bad.wav");
        std::fs::write(&bad, b"not audio").unwrap();
        let missing = dir.path().join("missing.wav");
        let s = corpus_summary(&[&bad, &good, &missing], 0.1).unwrap();
        assert_eq!(s.files.len(), 1);
        assert_eq!(s.skipped.len(), 2);
        assert_eq!(s.skipped[0].0, bad);
        assert!(s.skipped[0].1.contains("RIFF"));
        match corpus_summary(&[&bad, &missing], 0.1) {
            Err(e @ Error::EmptyCorpus { .. }) => {
                let text = e.to_string();
                assert!(
                    text.contains("bad.wav") && text.contains("missing.wav"),
                    "{text}"
                );
            }
            other => panic!("{other:?}"),
        }
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CorpusSummary::CSV_HEADER));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 6);
        assert_eq!(row[0], good.display().to_string());
        assert_eq!(&row[1..3], &["4000", "8000"]);
        assert_eq!(row[5], "0.1");
        assert!(lines.next().unwrap().starts_with("pooled,4000,8000,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn rates_are_fractions_and_reversal_invariant(
            samples in prop::collection::vec(-1.0f64..=1.0, 2..200),
            eps in 0.001f64..2.0,
        ) {
            let b = buf(samples);
            let s = signal_stats(&b, eps).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.zcr));
            prop_assert!((0.0..=1.0).contains(&s.proximity_rate));
            prop_assert_eq!(s.pair_count as usize, b.len() - 1);
            let r = signal_stats(&b.reversed(), eps).unwrap();
            prop_assert_eq!(s, r);
        }

        #[test]
        fn rates_follow_amplitude_scaling(
            samples in prop::collection::vec(-1.0f64..=1.0, 2..200),
            eps in 0.001f64..1.0,
            shift in -6i32..=0,
        ) {
            // Powers of two scale exactly, so the comparisons are exact too.
            let c = 2f64.powi(shift);
            let b = buf(samples.clone());
            let scaled = buf(samples.iter().map(|x| x * c).collect());
            prop_assert_eq!(zero_crossing_rate(&b).unwrap(), zero_crossing_rate(&scaled).unwrap());
            prop_assert_eq!(proximity_rate(&b, eps).unwrap(), proximity_rate(&scaled, eps * c).unwrap());
        }
    }
}
