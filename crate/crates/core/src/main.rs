use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use polar16::codec::{CodeSpec, Crc, ProcessorKind};
use polar16::fast16::{op_report_text, run_block, Fast16Kernel};
use polar16::harness::{self, SimConfig};
use polar16::kernel::analysis_report;
use polar16::winproc::{kernel_llrs_bruteforce, GenericProcessor, KernelProcessor};
use polar16::{Error, Kernel, OpCounter, Result};

#[derive(Parser)]
#[command(name = "polar16", version, about = "Polar codes with 16x16 kernels")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-phase constraints, windows and partial distances of a kernel.
    Analyze {
        #[arg(long, default_value = "k1")]
        kernel: String,
        /// Measure fast16 per-phase costs (optionally naming the kernel) and
        /// check them against the reference table.
        #[arg(long, num_args = 0..=1, default_missing_value = "")]
        costs: Option<String>,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Monte Carlo (genie-aided SC) frozen set construction.
    Construct {
        #[command(flatten)]
        code: CodeArgs,
        #[arg(long, default_value_t = 2.0)]
        snr: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// FER simulation over AWGN with BPSK.
    Simulate {
        #[command(flatten)]
        code: CodeArgs,
        /// Frozen set file; without it the set is constructed first.
        #[arg(long)]
        frozen: Option<PathBuf>,
        #[arg(long, default_value_t = 20_000)]
        construct_trials: u64,
        /// Construction SNR; defaults to the first simulated SNR.
        #[arg(long)]
        construct_snr: Option<f64>,
        #[arg(long, value_delimiter = ',', default_value = "2.0")]
        snr: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        list: Vec<usize>,
        #[arg(long, default_value_t = 10_000)]
        frames: u64,
        #[arg(long, default_value_t = 100)]
        errors: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Proc::Auto)]
        processor: Proc,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a gnuplot script next to the CSV.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Oracle equivalence: fast16 vs generic window processor vs brute force.
    Selftest {
        #[arg(long, default_value = "k2")]
        kernel: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long, default_value = "k2")]
    kernel: String,
    /// Number of kernel levels; derived from --n when omitted.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: usize,
    /// CRC as WIDTH:POLY (hex), e.g. 8:0x07; "none" disables it.
    #[arg(long, default_value = "none")]
    crc: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum Proc {
    Auto,
    Generic,
    Fast16,
    Brute,
}

impl From<Proc> for ProcessorKind {
    fn from(p: Proc) -> Self {
        match p {
            Proc::Auto => ProcessorKind::Auto,
            Proc::Generic => ProcessorKind::Generic,
            Proc::Fast16 => ProcessorKind::Fast16,
            Proc::Brute => ProcessorKind::Brute,
        }
    }
}

impl CodeArgs {
    fn resolve(&self) -> Result<(Kernel, u32, Option<Crc>)> {
        let kernel = Kernel::by_name(&self.kernel)?;
        let l = kernel.size();
        let m = match (self.m, self.n) {
            (Some(m), Some(n)) if l.checked_pow(m) != Some(n) => {
                return Err(Error::InvalidConfig(format!("n = {n} is not {l}^{m}")))
            }
            (Some(m), _) => m,
            (None, Some(n)) => {
                let mut m = 0;
                let mut p = 1usize;
                while p < n {
                    p *= l;
                    m += 1;
                }
                if p != n {
                    return Err(Error::InvalidConfig(format!("n = {n} is not a power of {l}")));
                }
                m
            }
            (None, None) => return Err(Error::InvalidConfig("give --m or --n".into())),
        };
        Ok((kernel, m, parse_crc(&self.crc)?))
    }
}

fn parse_crc(s: &str) -> Result<Option<Crc>> {
    if s == "none" {
        return Ok(None);
    }
    let (w, p) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("crc {s:?} is not WIDTH:POLY")))?;
    let width = w.parse().map_err(|_| Error::Parse(format!("bad crc width {w:?}")))?;
    let poly = u64::from_str_radix(p.trim_start_matches("0x"), 16)
        .map_err(|_| Error::Parse(format!("bad crc polynomial {p:?}")))?;
    Crc::new(width, poly).map(Some)
}

fn analyze(kernel: &str, costs: Option<String>, csv: Option<PathBuf>) -> Result<bool> {
    let k = Kernel::by_name(kernel)?;
    let mut ok = true;
    let measured = match costs {
        None => None,
        Some(name) => {
            let target = if name.is_empty() { k.clone() } else { Kernel::by_name(&name)? };
            let kind = Fast16Kernel::detect(&target)
                .ok_or_else(|| Error::InvalidConfig(format!("no fast16 schedule for {}", target.name())))?;
            let mut rng = harness::stream_rng(0, 0, 0);
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-4.0..4.0)).collect();
            let (c, _) = run_block(kind, &y, rng.random::<u64>() & 0xFFFF);
            print!("{}", op_report_text(kind, &c));
            if c == kind.table_costs() {
                println!("costs match the reference table");
            } else {
                println!("costs DIFFER from the reference {:?}", kind.table_costs());
                ok = false;
            }
            (target.matrix() == k.matrix()).then_some(c)
        }
    };
    let (text, table) = analysis_report(&k, measured.as_ref().map(|c| &c[..]))?;
    print!("{text}");
    if let Some(path) = csv {
        std::fs::write(&path, table)?;
    }
    Ok(ok)
}

fn selftest(kernel: &str, trials: u64, seed: u64) -> Result<bool> {
    let k = Kernel::by_name(kernel)?;
    let kind = Fast16Kernel::detect(&k);
    let mut g = GenericProcessor::new(&k)?;
    let mut rng = harness::stream_rng(seed, 0, 0);
    let l = k.size();
    let (mut dev_fast, mut dev_brute) = (0.0f64, 0.0f64);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    for _ in 0..trials {
        let y: Vec<f64> = (0..l).map(|_| rng.random_range(-8.0..8.0)).collect();
        let u: u64 = rng.random::<u64>() & polar16_low_mask(l);
        let brute = kernel_llrs_bruteforce(&k, u, &y);
        let fast = kind.map(|kd| run_block(kd, &y, u).1);
        g.load(&y);
        let mut ops = OpCounter::new();
        for p in 0..l {
            let s = g.llr(&mut ops);
            g.push(((u >> p) & 1) as u8);
            dev_brute = dev_brute.max(rel(s, brute[p]));
            if let Some(f) = &fast {
                dev_fast = dev_fast.max(rel(f[p], s));
            }
        }
    }
    println!("kernel {} trials {trials} seed {seed}", k.name());
    println!("max relative deviation generic vs bruteforce: {dev_brute:.3e}");
    if kind.is_some() {
        println!("max relative deviation fast16 vs generic:    {dev_fast:.3e}");
    } else {
        println!("no fast16 schedule for this kernel");
    }
    Ok(dev_brute <= 1e-9 && dev_fast <= 1e-9)
}

fn polar16_low_mask(l: usize) -> u64 {
    if l >= 64 {
        u64::MAX
    } else {
        (1 << l) - 1
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Analyze { kernel, costs, csv } => analyze(&kernel, costs, csv),
        Cmd::Construct {
            code,
            snr,
            trials,
            seed,
            out,
        } => {
            let (kernel, m, crc) = code.resolve()?;
            let res = harness::monte_carlo_construct(&kernel, m, code.k, crc, snr, trials, seed, ProcessorKind::Auto)?;
            let comment = format!(
                "frozen set: kernel {} m={m} k={} snr={snr} dB trials={trials} seed={seed}",
                kernel.name(),
                code.k
            );
            match out {
                Some(p) => harness::write_frozen(&p, &res.frozen, &comment)?,
                None => print!("{}", harness::format_frozen(&res.frozen, &comment)),
            }
            Ok(true)
        }
        Cmd::Simulate {
            code,
            frozen,
            construct_trials,
            construct_snr,
            snr,
            list,
            frames,
            errors,
            seed,
            processor,
            out,
            gnuplot,
        } => {
            let (kernel, m, crc) = code.resolve()?;
            let frozen = match frozen {
                Some(p) => harness::read_frozen(&p)?,
                None => {
                    let at = construct_snr.unwrap_or(snr[0]);
                    eprintln!("constructing frozen set at {at} dB with {construct_trials} trials");
                    harness::monte_carlo_construct(&kernel, m, code.k, crc, at, construct_trials, seed, ProcessorKind::Auto)?
                        .frozen
                }
            };
            let spec = CodeSpec::new(kernel, m, &frozen, crc)?;
            if spec.k() != code.k {
                return Err(Error::InvalidCode(format!(
                    "frozen set gives k = {}, expected {}",
                    spec.k(),
                    code.k
                )));
            }
            let mut cfg = SimConfig::new(spec);
            cfg.snr_db = snr;
            cfg.lists = list;
            cfg.max_frames = frames;
            cfg.max_errors = errors;
            cfg.seed = seed;
            cfg.processor = processor.into();
            let rows = harness::simulate_fer(&cfg)?;
            let csv = harness::rows_to_csv(&cfg, &rows);
            match &out {
                Some(p) => std::fs::write(p, &csv)?,
                None => print!("{csv}"),
            }
            if let Some(g) = gnuplot {
                let data = out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "fer.csv".into());
                std::fs::write(g, harness::gnuplot_script(&data, &cfg.lists))?;
            }
            Ok(true)
        }
        Cmd::Selftest { kernel, trials, seed } => selftest(&kernel, trials, seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
