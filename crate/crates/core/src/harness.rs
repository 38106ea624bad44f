//! Monte Carlo code construction and AWGN/BPSK frame error rate simulation.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::arikan::clip_llr;
use crate::codec::{encode, CodeSpec, Crc, Decoder, ProcessorKind};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::ops::OpCounter;

/// Noise variance for `E_b/N_0 = snr_db` at code rate `rate`.
pub fn noise_variance(snr_db: f64, rate: f64) -> f64 {
    1.0 / (2.0 * rate * 10f64.powf(snr_db / 10.0))
}

/// BPSK (`0 -> +1`, `1 -> -1`) over AWGN; returns channel LLRs `2y / sigma^2`.
pub fn awgn_llr<R: Rng + ?Sized>(codeword: &[u8], snr_db: f64, rate: f64, rng: &mut R) -> Vec<f64> {
    assert!(rate > 0.0 && rate <= 1.0, "rate must lie in (0, 1]");
    let var = noise_variance(snr_db, rate);
    let sigma = var.sqrt();
    codeword
        .iter()
        .map(|&c| {
            let x = if c == 0 { 1.0 } else { -1.0 };
            let n: f64 = rng.sample(StandardNormal);
            clip_llr(2.0 * (x + sigma * n) / var)
        })
        .collect()
}

/// Wilson score interval for `errors` out of `frames` at normal quantile `z`.
pub fn wilson_interval(errors: u64, frames: u64, z: f64) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The interval always contains p; clamp away rounding at the edges.
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

/// Independent generator for the tuple `(seed, a, b)`.
pub fn stream_rng(seed: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&a.to_le_bytes());
    key[16..24].copy_from_slice(&b.to_le_bytes());
    key[24..].copy_from_slice(b"polar16\0");
    ChaCha8Rng::from_seed(key)
}

/// Runs `f` on a pool capped by `POLAR16_THREADS` when set.
pub fn with_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    match std::env::var("POLAR16_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        Some(t) if t > 0 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstructionResult {
    /// Genie-aided SC decision errors per input index.
    pub errors: Vec<u64>,
    pub trials: u64,
    /// The `n - k - r` indices with the most errors, ties to the larger index.
    pub frozen: Vec<usize>,
}

/// Genie-aided construction: transmit the all-zero word `trials` times and
/// count, per index, how often SC would have decided it wrongly.
#[allow(clippy::too_many_arguments)]
pub fn monte_carlo_construct(
    kernel: &Kernel,
    m: u32,
    k: usize,
    crc: Option<Crc>,
    snr_db: f64,
    trials: u64,
    seed: u64,
    kind: ProcessorKind,
) -> Result<ConstructionResult> {
    if trials == 0 {
        return Err(Error::InvalidConfig("construction needs at least one trial".into()));
    }
    let spec = CodeSpec::with_tail_frozen(kernel.clone(), m, k, crc)?;
    let n = spec.n();
    let rate = spec.rate();
    if rate <= 0.0 {
        return Err(Error::InvalidCode("construction needs k >= 1".into()));
    }
    let dec = Decoder::new(&spec, kind)?;
    let zeros = vec![0u8; n];
    let errors = with_pool(|| {
        (0..trials)
            .into_par_iter()
            .fold(
                || vec![0u64; n],
                |mut acc, t| {
                    let mut rng = stream_rng(seed, u64::MAX, t);
                    let y = awgn_llr(&zeros, snr_db, rate, &mut rng);
                    let mut ops = OpCounter::new();
                    for (a, e) in acc.iter_mut().zip(dec.genie_errors(&y, &zeros, &mut ops)) {
                        *a += e as u64;
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; n],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    });
    let r = crc.map_or(0, |c| c.width as usize);
    let frozen = choose_frozen(&errors, n - k - r);
    Ok(ConstructionResult {
        errors,
        trials,
        frozen,
    })
}

/// Indices of the `count` largest error counts, ties to the larger index;
/// returned sorted.
pub fn choose_frozen(errors: &[u64], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..errors.len()).collect();
    idx.sort_by(|&a, &b| errors[b].cmp(&errors[a]).then(b.cmp(&a)));
    let mut f = idx[..count].to_vec();
    f.sort_unstable();
    f
}

pub fn format_frozen(frozen: &[usize], comment: &str) -> String {
    let mut out = String::new();
    for line in comment.lines() {
        writeln!(out, "# {line}").ok();
    }
    let items: Vec<String> = frozen.iter().map(|i| i.to_string()).collect();
    writeln!(out, "{}", items.join(" ")).ok();
    out
}

/// Reads indices separated by whitespace or commas; `#` starts a comment.
pub fn parse_frozen(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c.is_whitespace() || c == ',') {
            if tok.is_empty() {
                continue;
            }
            out.push(
                tok.parse()
                    .map_err(|_| Error::Parse(format!("bad frozen index {tok:?}")))?,
            );
        }
    }
    Ok(out)
}

pub fn read_frozen(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_frozen(&text)
}

pub fn write_frozen(path: &Path, frozen: &[usize], comment: &str) -> Result<()> {
    std::fs::write(path, format_frozen(frozen, comment))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub spec: CodeSpec,
    pub snr_db: Vec<f64>,
    pub lists: Vec<usize>,
    pub max_frames: u64,
    pub max_errors: u64,
    pub seed: u64,
    pub processor: ProcessorKind,
    /// Frames decoded in parallel between stopping checks.
    pub batch: u64,
}

impl SimConfig {
    pub fn new(spec: CodeSpec) -> Self {
        Self {
            spec,
            snr_db: vec![2.0],
            lists: vec![1],
            max_frames: 10_000,
            max_errors: 100,
            seed: 1,
            processor: ProcessorKind::Auto,
            batch: 512,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::InvalidConfig("max frames must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.lists.is_empty() {
            return Err(Error::InvalidConfig("snr and list grids must be non-empty".into()));
        }
        if self.lists.contains(&0) {
            return Err(Error::InvalidConfig("list size must be at least 1".into()));
        }
        if self.spec.k() == 0 {
            return Err(Error::InvalidConfig("simulation needs k >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRow {
    pub snr_db: f64,
    pub list: usize,
    pub frames: u64,
    pub errors: u64,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Mean kernel-processing operations per frame.
    pub ops_mean: f64,
}

/// Frame `f` at grid point `s` uses the same payload and noise for every
/// list size, so list sizes are compared on identical channels.
pub fn simulate_fer(cfg: &SimConfig) -> Result<Vec<SimRow>> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let dec = Decoder::new(spec, cfg.processor)?;
    let rate = spec.rate();
    let mut rows = Vec::new();
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        for &list in &cfg.lists {
            let mut frames = 0u64;
            let mut errors = 0u64;
            let mut ops = 0u128;
            'outer: while frames < cfg.max_frames {
                let end = (frames + cfg.batch.max(1)).min(cfg.max_frames);
                let batch: Vec<(bool, u64)> = with_pool(|| {
                    (frames..end)
                        .into_par_iter()
                        .map(|f| {
                            let mut rng = stream_rng(cfg.seed, si as u64, f);
                            let payload: Vec<u8> = (0..spec.k()).map(|_| rng.random_range(0..2u8)).collect();
                            let c = encode(spec, &payload).expect("payload length");
                            let y = awgn_llr(&c, snr, rate, &mut rng);
                            let r = if list == 1 { dec.sc(&y) } else { dec.scl(&y, list) };
                            (r.payload != payload, r.ops.total())
                        })
                        .collect()
                });
                for (err, o) in batch {
                    frames += 1;
                    ops += o as u128;
                    if err {
                        errors += 1;
                        if errors >= cfg.max_errors {
                            break 'outer;
                        }
                    }
                }
            }
            let (ci_lo, ci_hi) = wilson_interval(errors, frames, 1.96);
            rows.push(SimRow {
                snr_db: snr,
                list,
                frames,
                errors,
                fer: errors as f64 / frames as f64,
                ci_lo,
                ci_hi,
                ops_mean: ops as f64 / frames as f64,
            });
        }
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "snr_db,list,frames,errors,fer,ci_lo,ci_hi,ops_mean";

pub fn rows_to_csv(cfg: &SimConfig, rows: &[SimRow]) -> String {
    let s = &cfg.spec;
    let mut out = String::new();
    writeln!(
        out,
        "# kernel {} n={} k={} crc={} seed={}",
        s.kernel().name(),
        s.n(),
        s.k(),
        s.crc().map_or("none".to_string(), |c| format!("{}:{:#x}", c.width, c.poly)),
        cfg.seed
    )
    .ok();
    writeln!(out, "# Eb/N0 uses rate k/n with crc bits counted as overhead; 95% Wilson intervals").ok();
    writeln!(out, "{CSV_HEADER}").ok();
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{:.1}",
            r.snr_db, r.list, r.frames, r.errors, r.fer, r.ci_lo, r.ci_hi, r.ops_mean
        )
        .ok();
    }
    out
}

/// Gnuplot script plotting FER against SNR, one curve per list size.
pub fn gnuplot_script(csv_path: &str, lists: &[usize]) -> String {
    let mut out = String::new();
    writeln!(out, "set datafile separator ','").ok();
    writeln!(out, "set logscale y").ok();
    writeln!(out, "set xlabel 'Eb/N0, dB'").ok();
    writeln!(out, "set ylabel 'FER'").ok();
    writeln!(out, "set grid").ok();
    let curves: Vec<String> = lists
        .iter()
        .map(|l| {
            format!("'{csv_path}' using 1:($2=={l} ? $5 : 1/0) skip 3 with linespoints title 'L={l}'")
        })
        .collect();
    writeln!(out, "plot {}", curves.join(", \\\n     ")).ok();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn llr_formula() {
        // rate 1 at 0 dB gives sigma^2 = 0.5.
        assert!((noise_variance(0.0, 1.0) - 0.5).abs() < 1e-12);
        let var = noise_variance(0.0, 1.0);
        assert!((2.0 * 1.0 / var - 4.0).abs() < 1e-12);
    }

    #[test]
    fn high_snr_signs() {
        let mut rng = stream_rng(1, 0, 0);
        let c: Vec<u8> = (0..200).map(|i| (i % 3 == 0) as u8).collect();
        let y = awgn_llr(&c, 40.0, 0.5, &mut rng);
        for (b, s) in c.iter().zip(&y) {
            assert_eq!(*b == 1, *s < 0.0);
        }
    }

    #[test]
    fn llr_mean() {
        let mut rng = stream_rng(2, 0, 0);
        let var = noise_variance(1.0, 0.5);
        let n = 1_000_000;
        let y = awgn_llr(&vec![0u8; n], 1.0, 0.5, &mut rng);
        let mean = y.iter().sum::<f64>() / n as f64;
        // LLR = 2y/var has mean 2/var and std 2/sqrt(var).
        let se = 2.0 / var.sqrt() / (n as f64).sqrt();
        assert!((mean - 2.0 / var).abs() < 3.0 * se, "{mean}");
    }

    #[test]
    fn wilson_contains_ratio() {
        for (e, n) in [(0, 10), (5, 100), (100, 100), (37, 1000)] {
            let (lo, hi) = wilson_interval(e, n, 1.96);
            let p = e as f64 / n as f64;
            assert!(lo <= p && p <= hi);
        }
    }

    #[test]
    fn frozen_io_roundtrip() {
        let f = vec![0, 3, 7, 12];
        let text = format_frozen(&f, "test set\nsecond line");
        assert_eq!(parse_frozen(&text).unwrap(), f);
        assert!(parse_frozen("1 x").is_err());
    }

    #[test]
    fn tie_rule_prefers_larger_index() {
        assert_eq!(choose_frozen(&[0, 0, 0, 0], 2), vec![2, 3]);
        assert_eq!(choose_frozen(&[5, 0, 1, 0], 2), vec![0, 2]);
    }

    #[test]
    fn config_validation() {
        let spec = CodeSpec::with_tail_frozen(Kernel::k2(), 1, 8, None).unwrap();
        let mut cfg = SimConfig::new(spec);
        cfg.max_frames = 0;
        assert!(simulate_fer(&cfg).is_err());
        cfg.max_frames = 1;
        cfg.snr_db.clear();
        assert!(simulate_fer(&cfg).is_err());
    }
}
