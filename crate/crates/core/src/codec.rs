//! Codes `G_m = M^(m) K^{⊗m}`: encoding, SC and SCL decoding, CRC.
//!
//! `M^(m)` (base-`l` digit reversal) commutes with `K^{⊗m}`, so the codeword
//! is `c = z M` with `z = u K^{⊗m}`. The decoders work on `z` with channel
//! LLRs read through the same permutation. A level-`s` block of length `l^s`
//! owns `l^(s-1)` kernel processors, each fed every `l^(s-1)`-th input.

use std::rc::Rc;
use std::sync::Arc;

use crate::arikan::{hard, tau};
use crate::binmat::{digit_reversal_perm, BinMatrix};
use crate::error::{Error, Result};
use crate::fast16::{Fast16Kernel, Fast16State};
use crate::kernel::Kernel;
use crate::ops::OpCounter;
use crate::winproc::{BruteProcessor, GenericProcessor, KernelProcessor};

/// CRC with zero initial state, no reflection, remainder appended MSB first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc {
    pub width: u32,
    /// Generator without the leading `x^width` term.
    pub poly: u64,
}

impl Crc {
    /// `x^8 + x^2 + x + 1`.
    pub const CRC8: Crc = Crc { width: 8, poly: 0x07 };

    pub fn new(width: u32, poly: u64) -> Result<Self> {
        if !(1..=32).contains(&width) || poly >> width != 0 {
            return Err(Error::InvalidConfig(format!(
                "crc polynomial {poly:#x} does not fit width {width}"
            )));
        }
        Ok(Self { width, poly })
    }

    pub fn remainder(&self, bits: &[u8]) -> u64 {
        let mask = (1u64 << self.width) - 1;
        let mut reg = 0u64;
        for &b in bits {
            let top = (reg >> (self.width - 1)) & 1 ^ (b & 1) as u64;
            reg = (reg << 1) & mask;
            if top == 1 {
                reg ^= self.poly;
            }
        }
        reg
    }
}

pub fn crc_append(bits: &[u8], crc: &Crc) -> Vec<u8> {
    let r = crc.remainder(bits);
    let mut out = bits.to_vec();
    out.extend((0..crc.width).rev().map(|i| ((r >> i) & 1) as u8));
    out
}

pub fn crc_check(bits: &[u8], crc: &Crc) -> bool {
    bits.len() >= crc.width as usize && crc.remainder(bits) == 0
}

/// One code instance. Frozen symbols are zero.
#[derive(Clone, Debug)]
pub struct CodeSpec {
    kernel: Arc<Kernel>,
    m: u32,
    n: usize,
    k: usize,
    frozen: Vec<bool>,
    info: Vec<usize>,
    crc: Option<Crc>,
}

impl CodeSpec {
    /// `frozen_set` holds `n - k - r` indices, `r` being the CRC width.
    pub fn new(kernel: Kernel, m: u32, frozen_set: &[usize], crc: Option<Crc>) -> Result<Self> {
        let l = kernel.size();
        if m == 0 {
            return Err(Error::InvalidCode("m must be at least 1".into()));
        }
        let n = l
            .checked_pow(m)
            .filter(|&n| n <= 1 << 20)
            .ok_or_else(|| Error::InvalidCode(format!("{l}^{m} is too long")))?;
        let mut frozen = vec![false; n];
        for &i in frozen_set {
            if i >= n {
                return Err(Error::InvalidCode(format!("frozen index {i} outside [0, {n})")));
            }
            if frozen[i] {
                return Err(Error::InvalidCode(format!("frozen index {i} repeated")));
            }
            frozen[i] = true;
        }
        let info: Vec<usize> = (0..n).filter(|&i| !frozen[i]).collect();
        let r = crc.map_or(0, |c| c.width as usize);
        if info.len() < r {
            return Err(Error::InvalidCode(format!(
                "{} information positions cannot hold a {r}-bit crc",
                info.len()
            )));
        }
        Ok(Self {
            kernel: Arc::new(kernel),
            m,
            n,
            k: info.len() - r,
            frozen,
            info,
            crc,
        })
    }

    /// Freezes the `n - k - r` highest indices; handy for noiseless checks.
    pub fn with_tail_frozen(kernel: Kernel, m: u32, k: usize, crc: Option<Crc>) -> Result<Self> {
        let n = kernel.size().pow(m);
        let r = crc.map_or(0, |c| c.width as usize);
        if k + r > n {
            return Err(Error::InvalidCode(format!("k + crc = {} exceeds n = {n}", k + r)));
        }
        let frozen: Vec<usize> = (k + r..n).collect();
        Self::new(kernel, m, &frozen, crc)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn l(&self) -> usize {
        self.kernel.size()
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Payload length, excluding CRC bits.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn crc(&self) -> Option<&Crc> {
        self.crc.as_ref()
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        self.frozen[i]
    }

    pub fn frozen_set(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.frozen[i]).collect()
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info
    }

    /// Places payload (and CRC) on the information positions.
    pub fn assemble(&self, payload: &[u8]) -> Result<Vec<u8>> {
        if payload.len() != self.k {
            return Err(Error::PayloadLength {
                expected: self.k,
                got: payload.len(),
            });
        }
        let bits = match &self.crc {
            Some(c) => crc_append(payload, c),
            None => payload.to_vec(),
        };
        let mut u = vec![0u8; self.n];
        for (&i, &b) in self.info.iter().zip(&bits) {
            u[i] = b & 1;
        }
        Ok(u)
    }

    /// Payload and CRC bits read off the information positions.
    pub fn extract(&self, u: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&i| u[i]).collect()
    }

    /// Explicit `M^(m) K^{⊗m}`, for small `n`.
    pub fn generator_matrix(&self) -> Result<BinMatrix> {
        let g = self.kernel.matrix().kron_power(self.m);
        g.permute_rows(&digit_reversal_perm(self.l(), self.m as usize))
    }
}

/// `u K^{⊗m}` in natural order.
pub fn transform(kernel: &Kernel, u: &[u8]) -> Vec<u8> {
    let l = kernel.size();
    let n = u.len();
    let mut z = u.to_vec();
    let mut stride = 1;
    while stride < n {
        let span = stride * l;
        for base in (0..n).step_by(span) {
            for r in 0..stride {
                let mut w = 0u64;
                for j in 0..l {
                    w |= (z[base + r + j * stride] as u64) << j;
                }
                let c = kernel.encode_mask(w);
                for j in 0..l {
                    z[base + r + j * stride] = ((c >> j) & 1) as u8;
                }
            }
        }
        stride = span;
    }
    z
}

pub fn encode(spec: &CodeSpec, payload: &[u8]) -> Result<Vec<u8>> {
    let u = spec.assemble(payload)?;
    Ok(encode_u(spec, &u))
}

/// Encodes a full input vector `u` (frozen positions included).
pub fn encode_u(spec: &CodeSpec, u: &[u8]) -> Vec<u8> {
    let z = transform(&spec.kernel, u);
    let perm = digit_reversal_perm(spec.l(), spec.m as usize);
    let mut c = vec![0u8; spec.n];
    for (i, &p) in perm.iter().enumerate() {
        c[p] = z[i];
    }
    c
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProcessorKind {
    /// fast16 for K1/K2, the window processor otherwise, brute force as a
    /// last resort.
    #[default]
    Auto,
    Generic,
    Fast16,
    Brute,
}

#[derive(Clone, Debug)]
pub enum AnyProcessor {
    Generic(GenericProcessor),
    Fast16(Fast16State),
    Brute(BruteProcessor),
}

macro_rules! dispatch {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            AnyProcessor::Generic($p) => $e,
            AnyProcessor::Fast16($p) => $e,
            AnyProcessor::Brute($p) => $e,
        }
    };
}

impl AnyProcessor {
    pub fn new(kernel: &Arc<Kernel>, kind: ProcessorKind) -> Result<Self> {
        match kind {
            ProcessorKind::Fast16 => Fast16State::for_kernel(kernel)
                .map(Self::Fast16)
                .ok_or_else(|| Error::InvalidConfig(format!("no fast16 schedule for kernel {}", kernel.name()))),
            ProcessorKind::Generic => Ok(Self::Generic(GenericProcessor::new(kernel)?)),
            ProcessorKind::Brute => Ok(Self::Brute(BruteProcessor::new(kernel.clone())?)),
            ProcessorKind::Auto => {
                if let Some(kind) = Fast16Kernel::detect(kernel) {
                    return Ok(Self::Fast16(Fast16State::new(kind)));
                }
                match GenericProcessor::new(kernel) {
                    Ok(g) => Ok(Self::Generic(g)),
                    Err(_) => Ok(Self::Brute(BruteProcessor::new(kernel.clone())?)),
                }
            }
        }
    }
}

impl KernelProcessor for AnyProcessor {
    fn size(&self) -> usize {
        dispatch!(self, p => p.size())
    }
    fn load(&mut self, y: &[f64]) {
        dispatch!(self, p => p.load(y))
    }
    fn phase(&self) -> usize {
        dispatch!(self, p => p.phase())
    }
    fn llr(&mut self, ops: &mut OpCounter) -> f64 {
        dispatch!(self, p => p.llr(ops))
    }
    fn push(&mut self, u: u8) {
        dispatch!(self, p => p.push(u))
    }
    fn decided(&self) -> u64 {
        dispatch!(self, p => p.decided())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult {
    /// Decided input vector, frozen positions included.
    pub u: Vec<u8>,
    pub codeword: Vec<u8>,
    pub payload: Vec<u8>,
    /// Accumulated path score (sum of penalties, at most zero).
    pub score: f64,
    /// `None` without CRC.
    pub crc_ok: Option<bool>,
    /// Kernel-processing work over all paths.
    pub ops: OpCounter,
    /// Number of live paths after each phase.
    pub path_counts: Vec<usize>,
}

/// One decoding path: kernel processors of every level, shared between
/// forks until one side writes.
#[derive(Clone)]
struct PathState {
    levels: Vec<Rc<Vec<AnyProcessor>>>,
    u: Vec<u8>,
    score: f64,
    z: Vec<u8>,
}

/// Decoder for one code, reusable across frames.
#[derive(Clone, Debug)]
pub struct Decoder {
    spec: CodeSpec,
    proto: AnyProcessor,
    perm: Vec<usize>,
    /// `pows[s] = l^s`.
    pows: Vec<usize>,
}

impl Decoder {
    pub fn new(spec: &CodeSpec, kind: ProcessorKind) -> Result<Self> {
        let proto = AnyProcessor::new(&spec.kernel, kind)?;
        let l = spec.l();
        Ok(Self {
            proto,
            perm: digit_reversal_perm(l, spec.m as usize),
            pows: (0..=spec.m).map(|s| l.pow(s)).collect(),
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &CodeSpec {
        &self.spec
    }

    fn fresh_path(&self) -> PathState {
        let m = self.spec.m as usize;
        PathState {
            levels: (1..=m)
                .map(|s| Rc::new(vec![self.proto.clone(); self.pows[s - 1]]))
                .collect(),
            u: Vec::with_capacity(self.spec.n),
            score: 0.0,
            z: Vec::new(),
        }
    }

    /// Loads every level whose block starts at leaf `i` and returns the LLR
    /// of `u_i`.
    fn leaf_llr(&self, p: &mut PathState, i: usize, y: &[f64], ops: &mut OpCounter) -> f64 {
        let m = self.spec.m as usize;
        let l = self.spec.l();
        let mut buf = vec![0.0; l];
        for s in (1..=m).rev() {
            if i % self.pows[s] != 0 {
                continue;
            }
            let stride = self.pows[s - 1];
            let input: Vec<f64> = if s == m {
                (0..self.spec.n).map(|j| y[self.perm[j]]).collect()
            } else {
                let parent = Rc::make_mut(&mut p.levels[s]);
                parent.iter_mut().map(|q| q.llr(ops)).collect()
            };
            let level = Rc::make_mut(&mut p.levels[s - 1]);
            for (r, proc_) in level.iter_mut().enumerate() {
                for (k, b) in buf.iter_mut().enumerate() {
                    *b = input[r + k * stride];
                }
                proc_.load(&buf);
            }
        }
        Rc::make_mut(&mut p.levels[0])[0].llr(ops)
    }

    /// Fixes `u_i` and propagates finished blocks upward.
    fn push_leaf(&self, p: &mut PathState, b: u8) {
        let m = self.spec.m as usize;
        let l = self.spec.l();
        p.u.push(b);
        Rc::make_mut(&mut p.levels[0])[0].push(b);
        let i = p.u.len() - 1;
        for s in 1..=m {
            if (i + 1) % self.pows[s] != 0 {
                break;
            }
            let stride = self.pows[s - 1];
            let mut w = vec![0u8; self.pows[s]];
            for (r, proc_) in p.levels[s - 1].iter().enumerate() {
                let c = self.spec.kernel.encode_mask(proc_.decided());
                for j in 0..l {
                    w[r + j * stride] = ((c >> j) & 1) as u8;
                }
            }
            if s < m {
                let parent = Rc::make_mut(&mut p.levels[s]);
                for (q, &bit) in parent.iter_mut().zip(&w) {
                    q.push(bit);
                }
            } else {
                p.z = w;
            }
        }
    }

    fn finish(&self, p: PathState, ops: OpCounter, path_counts: Vec<usize>) -> DecodeResult {
        let mut codeword = vec![0u8; self.spec.n];
        for (i, &q) in self.perm.iter().enumerate() {
            codeword[q] = p.z[i];
        }
        let bits = self.spec.extract(&p.u);
        let crc_ok = self.spec.crc.as_ref().map(|c| crc_check(&bits, c));
        DecodeResult {
            payload: bits[..self.spec.k].to_vec(),
            u: p.u,
            codeword,
            score: p.score,
            crc_ok,
            ops,
            path_counts,
        }
    }

    fn check_len(&self, y: &[f64]) {
        assert_eq!(y.len(), self.spec.n, "expected {} channel LLRs", self.spec.n);
    }

    /// Successive cancellation: hard decisions on information positions.
    pub fn sc(&self, y: &[f64]) -> DecodeResult {
        self.check_len(y);
        let mut ops = OpCounter::new();
        let mut p = self.fresh_path();
        for i in 0..self.spec.n {
            let s = self.leaf_llr(&mut p, i, y, &mut ops);
            let b = if self.spec.frozen[i] { 0 } else { hard(s) };
            p.score += tau(s, b);
            self.push_leaf(&mut p, b);
        }
        self.finish(p, ops, vec![1; self.spec.n])
    }

    /// Genie-aided SC: every decision is compared with the true `u_i` and then
    /// replaced by it. Returns which positions were decided wrongly.
    pub fn genie_errors(&self, y: &[f64], u_true: &[u8], ops: &mut OpCounter) -> Vec<bool> {
        self.check_len(y);
        let mut p = self.fresh_path();
        let mut errs = Vec::with_capacity(self.spec.n);
        for (i, &t) in u_true.iter().enumerate().take(self.spec.n) {
            let s = self.leaf_llr(&mut p, i, y, ops);
            errs.push(hard(s) != t);
            self.push_leaf(&mut p, t);
        }
        errs
    }

    /// List decoding with `list` paths. Paths fork only at information
    /// positions; survivors are the best scores, ties going to the lower
    /// parent index and then to bit 0. The answer is the best path passing
    /// the CRC, or the best path overall.
    pub fn scl(&self, y: &[f64], list: usize) -> DecodeResult {
        self.check_len(y);
        let list = list.max(1);
        let mut ops = OpCounter::new();
        let mut paths = vec![self.fresh_path()];
        let mut counts = Vec::with_capacity(self.spec.n);
        let mut llrs = Vec::with_capacity(list);
        for i in 0..self.spec.n {
            llrs.clear();
            for p in paths.iter_mut() {
                llrs.push(self.leaf_llr(p, i, y, &mut ops));
            }
            if self.spec.frozen[i] {
                for (p, &s) in paths.iter_mut().zip(&llrs) {
                    p.score += tau(s, 0);
                    self.push_leaf(p, 0);
                }
            } else {
                let mut cands: Vec<(f64, usize, u8)> = Vec::with_capacity(2 * paths.len());
                for (j, (p, &s)) in paths.iter().zip(&llrs).enumerate() {
                    cands.push((p.score + tau(s, 0), j, 0));
                    cands.push((p.score + tau(s, 1), j, 1));
                }
                let order = |a: &(f64, usize, u8), b: &(f64, usize, u8)| {
                    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
                };
                if cands.len() > list {
                    cands.select_nth_unstable_by(list - 1, order);
                    cands.truncate(list);
                }
                cands.sort_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2)));
                let mut old: Vec<Option<PathState>> = paths.drain(..).map(Some).collect();
                for (idx, &(score, j, b)) in cands.iter().enumerate() {
                    let shared = cands.get(idx + 1).is_some_and(|n| n.1 == j);
                    let mut p = if shared {
                        old[j].clone().expect("present")
                    } else {
                        old[j].take().expect("present")
                    };
                    p.score = score;
                    self.push_leaf(&mut p, b);
                    paths.push(p);
                }
            }
            counts.push(paths.len());
        }
        let pick = |pred: &dyn Fn(&PathState) -> bool| {
            paths
                .iter()
                .enumerate()
                .filter(|(_, p)| pred(p))
                .max_by(|(ia, a), (ib, b)| a.score.total_cmp(&b.score).then(ib.cmp(ia)))
                .map(|(i, _)| i)
        };
        let best = match &self.spec.crc {
            Some(c) => pick(&|p: &PathState| crc_check(&self.spec.extract(&p.u), c)),
            None => None,
        }
        .or_else(|| pick(&|_| true))
        .expect("at least one path");
        let p = paths.swap_remove(best);
        self.finish(p, ops, counts)
    }
}

pub fn sc_decode(spec: &CodeSpec, y: &[f64]) -> Result<DecodeResult> {
    Ok(Decoder::new(spec, ProcessorKind::Auto)?.sc(y))
}

pub fn scl_decode(spec: &CodeSpec, y: &[f64], list: usize) -> Result<DecodeResult> {
    Ok(Decoder::new(spec, ProcessorKind::Auto)?.scl(y, list))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arikan::LLR_CLIP;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noiseless(c: &[u8]) -> Vec<f64> {
        c.iter().map(|&b| if b == 0 { LLR_CLIP } else { -LLR_CLIP }).collect()
    }

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn crc_roundtrip_and_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let crc = Crc::CRC8;
        for _ in 0..1000 {
            let len = rng.random_range(0..64);
            let bits = random_bits(&mut rng, len);
            assert!(crc_check(&crc_append(&bits, &crc), &crc));
        }
        let bits = random_bits(&mut rng, 40);
        let coded = crc_append(&bits, &crc);
        for i in 0..coded.len() {
            let mut bad = coded.clone();
            bad[i] ^= 1;
            assert!(!crc_check(&bad, &crc));
        }
        assert_eq!(crc.remainder(&[]), 0);
    }

    #[test]
    fn spec_validation() {
        assert!(CodeSpec::new(Kernel::k1(), 1, &[16], None).is_err());
        assert!(CodeSpec::new(Kernel::k1(), 1, &[3, 3], None).is_err());
        assert!(CodeSpec::with_tail_frozen(Kernel::k1(), 1, 10, Some(Crc::CRC8)).is_err());
        let s = CodeSpec::with_tail_frozen(Kernel::k1(), 1, 4, Some(Crc::CRC8)).unwrap();
        assert_eq!((s.n(), s.k(), s.frozen_set().len()), (16, 4, 4));
        assert!(matches!(encode(&s, &[0; 3]), Err(Error::PayloadLength { expected: 4, got: 3 })));
    }

    #[test]
    fn encode_examples() {
        let s = CodeSpec::new(Kernel::k1(), 1, &(0..15).collect::<Vec<_>>(), None).unwrap();
        assert_eq!(encode(&s, &[1]).unwrap(), vec![1; 16]);
        assert_eq!(encode(&s, &[0]).unwrap(), vec![0; 16]);
    }

    #[test]
    fn encode_matches_generator_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (kernel, m) in [(Kernel::k1(), 2), (Kernel::k2(), 2), (Kernel::arikan(), 3)] {
            let s = CodeSpec::new(kernel, m, &[], None).unwrap();
            let g = s.generator_matrix().unwrap();
            for _ in 0..20 {
                let u = random_bits(&mut rng, s.n());
                assert_eq!(encode_u(&s, &u), g.left_mul_vec(&u).unwrap());
            }
        }
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kernel in [Kernel::k1(), Kernel::k2()] {
            for (m, k) in [(1, 8), (2, 128)] {
                let s = CodeSpec::with_tail_frozen(kernel.clone(), m, k, None).unwrap();
                for _ in 0..5 {
                    let payload = random_bits(&mut rng, k);
                    let c = encode(&s, &payload).unwrap();
                    let y = noiseless(&c);
                    let sc = sc_decode(&s, &y).unwrap();
                    assert_eq!(sc.payload, payload);
                    assert_eq!(sc.codeword, c);
                    assert_eq!(scl_decode(&s, &y, 4).unwrap().payload, payload);
                }
            }
        }
    }

    #[test]
    fn sc_with_nothing_frozen_follows_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let k = Kernel::k1();
        let s = CodeSpec::new(k.clone(), 1, &[], None).unwrap();
        for _ in 0..50 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
            let r = sc_decode(&s, &y).unwrap();
            let mut u = 0u64;
            for i in 0..16 {
                let llr = crate::winproc::kernel_llr_bruteforce(&k, u, &y, i);
                u |= (hard(llr) as u64) << i;
            }
            assert_eq!(crate::kernel::bits_to_mask(&r.u), u);
        }
    }

    #[test]
    fn path_score_equals_codeword_penalty() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = CodeSpec::with_tail_frozen(Kernel::k2(), 2, 128, None).unwrap();
        let dec = Decoder::new(&s, ProcessorKind::Auto).unwrap();
        for _ in 0..10 {
            let y: Vec<f64> = (0..256).map(|_| rng.random_range(-2.0..3.0)).collect();
            for r in [dec.sc(&y), dec.scl(&y, 4)] {
                let direct: f64 = y.iter().zip(&r.codeword).map(|(&s, &c)| tau(s, c)).sum();
                assert!((r.score - direct).abs() < 1e-6, "{} vs {direct}", r.score);
            }
        }
    }

    #[test]
    fn list_of_one_is_sc() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = CodeSpec::with_tail_frozen(Kernel::k1(), 2, 100, None).unwrap();
        let dec = Decoder::new(&s, ProcessorKind::Auto).unwrap();
        for _ in 0..20 {
            let y: Vec<f64> = (0..256).map(|_| rng.random_range(-2.0..3.0)).collect();
            let a = dec.sc(&y);
            let b = dec.scl(&y, 1);
            assert_eq!(a.u, b.u);
            assert_eq!(a.score, b.score);
        }
    }

    #[test]
    fn generic_and_fast16_agree_under_scl() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = CodeSpec::with_tail_frozen(Kernel::k2(), 1, 8, None).unwrap();
        let fast = Decoder::new(&s, ProcessorKind::Fast16).unwrap();
        let gen = Decoder::new(&s, ProcessorKind::Generic).unwrap();
        for _ in 0..50 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..3.0)).collect();
            let a = fast.scl(&y, 4);
            let b = gen.scl(&y, 4);
            assert_eq!(a.u, b.u);
            assert!((a.score - b.score).abs() < 1e-9);
        }
    }

    #[test]
    fn crc_selects_valid_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = CodeSpec::with_tail_frozen(Kernel::k2(), 1, 4, Some(Crc::CRC8)).unwrap();
        let payload = random_bits(&mut rng, 4);
        let c = encode(&s, &payload).unwrap();
        let r = scl_decode(&s, &noiseless(&c), 8).unwrap();
        assert_eq!(r.crc_ok, Some(true));
        assert_eq!(r.payload, payload);
    }

    #[test]
    fn more_frozen_never_more_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = CodeSpec::with_tail_frozen(Kernel::k2(), 1, 10, None).unwrap();
        let b = CodeSpec::with_tail_frozen(Kernel::k2(), 1, 6, None).unwrap();
        for _ in 0..20 {
            let y: Vec<f64> = (0..16).map(|_| rng.random_range(-2.0..3.0)).collect();
            let ra = scl_decode(&a, &y, 8).unwrap();
            let rb = scl_decode(&b, &y, 8).unwrap();
            assert!(ra.path_counts.iter().zip(&rb.path_counts).all(|(x, y)| y <= x));
        }
    }

    #[test]
    fn non_power_of_two_kernel_uses_bruteforce() {
        let m = BinMatrix::parse("100\n110\n011\n").unwrap();
        let k = Kernel::new("three", m).unwrap();
        let s = CodeSpec::with_tail_frozen(k, 2, 4, None).unwrap();
        let payload = vec![1, 0, 1, 1];
        let c = encode(&s, &payload).unwrap();
        assert_eq!(sc_decode(&s, &noiseless(&c)).unwrap().payload, payload);
    }
}
