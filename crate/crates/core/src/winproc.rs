//! Window-based kernel processing for arbitrary power-of-two kernels, and
//! exhaustive oracles for small kernels.
//!
//! At phase `phi` the kernel LLR is approximated by the gap between the best
//! Arikan path scores `R(v_0^h | y)` consistent with `u_phi = 0` and with
//! `u_phi = 1`. Only the window symbols are enumerated; everything else is
//! pinned by the decided prefix through the minimum-span constraints.

use std::sync::Arc;

use crate::arikan::{score_update, tau, LayeredLlrState};
use crate::error::{Error, Result};
use crate::kernel::{low_mask, Kernel, WindowPlan};
use crate::ops::OpCounter;

/// Largest decoding window the generic processor accepts.
pub const MAX_GENERIC_WINDOW: usize = 16;

/// A per-kernel soft-input processor driven phase by phase: `llr` gives the
/// LLR of the current input symbol, `push` fixes it and advances.
pub trait KernelProcessor: Clone + Send {
    fn size(&self) -> usize;

    /// Starts a new kernel block with channel-side LLRs `y`.
    fn load(&mut self, y: &[f64]);

    fn phase(&self) -> usize;

    /// LLR of `u_phase` given the decided prefix.
    fn llr(&mut self, ops: &mut OpCounter) -> f64;

    /// Decides `u_phase = u`. `llr` must have been called for this phase.
    fn push(&mut self, u: u8);

    /// Decided kernel inputs, bit `i` = `u_i`.
    fn decided(&self) -> u64;

    /// Ordered access: fails unless `phase` is the current phase.
    fn kernel_llr(&mut self, phase: usize, ops: &mut OpCounter) -> Result<f64> {
        if phase != self.phase() {
            return Err(Error::PhaseOrder {
                expected: self.phase(),
                got: phase,
            });
        }
        if phase >= self.size() {
            return Err(Error::Incomplete(phase, self.size()));
        }
        Ok(self.llr(ops))
    }
}

/// Generic processor: enumerates the `2^{|D_phi|+1}` candidates of each phase
/// and scores every one with a fresh layered SC pass. Ties between equal
/// scores keep the first (lexicographically smallest) window assignment.
#[derive(Clone, Debug)]
pub struct GenericProcessor {
    plan: Arc<WindowPlan>,
    y: Vec<f64>,
    u: u64,
    phase: usize,
    scratch: LayeredLlrState,
    cached: Option<f64>,
    best: [u64; 2],
}

impl GenericProcessor {
    pub fn new(kernel: &Kernel) -> Result<Self> {
        Self::from_plan(Arc::new(kernel.window_plan()?))
    }

    pub fn from_plan(plan: Arc<WindowPlan>) -> Result<Self> {
        if plan.max_window() > MAX_GENERIC_WINDOW {
            return Err(Error::InvalidKernel(format!(
                "decoding window of size {} exceeds {MAX_GENERIC_WINDOW}",
                plan.max_window()
            )));
        }
        let l = plan.size();
        Ok(Self {
            scratch: LayeredLlrState::new(plan.log2_size() as usize),
            plan,
            y: vec![0.0; l],
            u: 0,
            phase: 0,
            cached: None,
            best: [0; 2],
        })
    }

    pub fn plan(&self) -> &WindowPlan {
        &self.plan
    }

    /// Best `v_0^h` per hypothesis found at the last computed phase.
    pub fn best_candidates(&self) -> [u64; 2] {
        self.best
    }

    fn candidate_score(&mut self, v: u64, h: usize, ops: &mut OpCounter) -> f64 {
        self.scratch.load(&self.y);
        let mut r = 0.0;
        for i in 0..=h {
            let bit = ((v >> i) & 1) as u8;
            let s = self.scratch.llr(ops);
            ops.add(1);
            r = score_update(r, s, bit);
            if i < h {
                self.scratch.push(bit);
            }
        }
        r
    }
}

impl KernelProcessor for GenericProcessor {
    fn size(&self) -> usize {
        self.plan.size()
    }

    fn load(&mut self, y: &[f64]) {
        self.y.copy_from_slice(&y[..self.plan.size()]);
        self.u = 0;
        self.phase = 0;
        self.cached = None;
    }

    fn phase(&self) -> usize {
        self.phase
    }

    fn llr(&mut self, ops: &mut OpCounter) -> f64 {
        if let Some(s) = self.cached {
            return s;
        }
        let phase = self.phase;
        let h = self.plan.horizon(phase);
        let d = self.plan.window_size(phase);
        let mut best = [f64::NEG_INFINITY; 2];
        for b in 0..2u8 {
            for free in 0..(1u64 << d) {
                let v = self.plan.resolve_v(phase, self.u, b, free);
                let r = self.candidate_score(v, h, ops);
                if free > 0 {
                    ops.cmp(1);
                }
                if r > best[b as usize] {
                    best[b as usize] = r;
                    self.best[b as usize] = v;
                }
            }
        }
        ops.add(1);
        let s = best[0] - best[1];
        self.cached = Some(s);
        s
    }

    fn push(&mut self, u: u8) {
        self.u |= ((u & 1) as u64) << self.phase;
        self.phase += 1;
        self.cached = None;
    }

    fn decided(&self) -> u64 {
        self.u
    }
}

/// Exhaustive processor for kernels without a usable window plan (for
/// instance sizes that are not powers of two). Its work is not counted.
#[derive(Clone, Debug)]
pub struct BruteProcessor {
    kernel: Arc<Kernel>,
    y: Vec<f64>,
    u: u64,
    phase: usize,
    cached: Option<f64>,
}

impl BruteProcessor {
    /// Enumeration is exponential in the kernel size, so `l <= 16`.
    pub fn new(kernel: Arc<Kernel>) -> Result<Self> {
        if kernel.size() > 16 {
            return Err(Error::InvalidKernel(format!(
                "exhaustive processing limited to l <= 16, got {}",
                kernel.size()
            )));
        }
        Ok(Self {
            y: vec![0.0; kernel.size()],
            kernel,
            u: 0,
            phase: 0,
            cached: None,
        })
    }
}

impl KernelProcessor for BruteProcessor {
    fn size(&self) -> usize {
        self.kernel.size()
    }

    fn load(&mut self, y: &[f64]) {
        let l = self.kernel.size();
        self.y.copy_from_slice(&y[..l]);
        self.u = 0;
        self.phase = 0;
        self.cached = None;
    }

    fn phase(&self) -> usize {
        self.phase
    }

    fn llr(&mut self, _ops: &mut OpCounter) -> f64 {
        if let Some(s) = self.cached {
            return s;
        }
        let s = kernel_llr_bruteforce(&self.kernel, self.u, &self.y, self.phase);
        self.cached = Some(s);
        s
    }

    fn push(&mut self, u: u8) {
        self.u |= ((u & 1) as u64) << self.phase;
        self.phase += 1;
        self.cached = None;
    }

    fn decided(&self) -> u64 {
        self.u
    }
}

/// One-shot generic kernel LLR at `phase` for the decided prefix `u_prefix`.
pub fn kernel_llr_generic(
    kernel: &Kernel,
    u_prefix: u64,
    y: &[f64],
    phase: usize,
    ops: &mut OpCounter,
) -> Result<f64> {
    let mut p = GenericProcessor::new(kernel)?;
    p.load(y);
    for i in 0..phase {
        p.cached = Some(0.0);
        p.push(((u_prefix >> i) & 1) as u8);
    }
    p.kernel_llr(phase, ops)
}

/// Score of the kernel codeword `c` against channel LLRs: `sum tau(y_i, c_i)`.
fn codeword_penalty(y: &[f64], c: u64) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, &s)| tau(s, ((c >> i) & 1) as u8))
        .sum()
}

/// Exhaustive max-log kernel LLR: ML decoding of the code spanned by rows
/// `phase+1..l` for each hypothesis on `u_phase`.
pub fn kernel_llr_bruteforce(kernel: &Kernel, u_prefix: u64, y: &[f64], phase: usize) -> f64 {
    let l = kernel.size();
    assert!(phase < l);
    let base = kernel.encode_mask(u_prefix & low_mask(phase));
    let mut best = [f64::NEG_INFINITY; 2];
    for b in 0..2usize {
        let mut c = base ^ if b == 1 { kernel.row(phase) } else { 0 };
        let free = l - 1 - phase;
        best[b] = codeword_penalty(y, c);
        for g in 1..(1u64 << free) {
            c ^= kernel.row(phase + 1 + g.trailing_zeros() as usize);
            best[b] = best[b].max(codeword_penalty(y, c));
        }
    }
    best[0] - best[1]
}

/// Brute-force LLRs of every phase along the kernel input path `u`, sharing a
/// single enumeration of all `2^l` codewords. Intended for `l <= 16`.
pub fn kernel_llrs_bruteforce(kernel: &Kernel, u: u64, y: &[f64]) -> Vec<f64> {
    let l = kernel.size();
    assert!(l <= 20, "exhaustive enumeration limited to l <= 20");
    // Penalty of codeword c splits into lookups over byte chunks of c ^ hard(y).
    let chunks = l.div_ceil(8);
    let mut tables = vec![[0.0f64; 256]; chunks];
    let mut hard = 0u64;
    for (i, &s) in y.iter().enumerate().take(l) {
        if s < 0.0 {
            hard |= 1 << i;
        }
    }
    for (k, table) in tables.iter_mut().enumerate() {
        for m in 1..256usize {
            let low = m.trailing_zeros() as usize;
            let i = 8 * k + low;
            let w = if i < l { -y[i].abs() } else { 0.0 };
            table[m] = table[m & (m - 1)] + w;
        }
    }
    let penalty = |c: u64| -> f64 {
        let e = c ^ hard;
        (0..chunks).map(|k| tables[k][((e >> (8 * k)) & 0xFF) as usize]).sum()
    };
    // scores[w] for the input word w, with bit i of w = u_i.
    let total = 1usize << l;
    let mut scores = vec![0.0f64; total];
    let mut c = 0u64;
    let mut w = 0usize;
    scores[0] = penalty(0);
    for g in 1..total {
        let bit = g.trailing_zeros() as usize;
        c ^= kernel.row(bit);
        w ^= 1 << bit;
        scores[w] = penalty(c);
    }
    (0..l)
        .map(|phase| {
            let prefix = (u & low_mask(phase)) as usize;
            let mut best = [f64::NEG_INFINITY; 2];
            for suffix in 0..(1usize << (l - phase)) {
                let w = prefix | (suffix << phase);
                let b = suffix & 1;
                if scores[w] > best[b] {
                    best[b] = scores[w];
                }
            }
            best[0] - best[1]
        })
        .collect()
}

/// Exact probability `W(y, u_0^{phase-1} | u_phase)` summed over all
/// suffixes, from per-symbol likelihood pairs `(W(y_i|0), W(y_i|1))`.
/// `u` holds `u_0..u_phase` (bit `i` = `u_i`). The result is normalized so
/// that summing over all `u_0^phase` gives one.
pub fn exact_probability(kernel: &Kernel, u: u64, phase: usize, y_probs: &[(f64, f64)]) -> f64 {
    let l = kernel.size();
    let base = kernel.encode_mask(u & low_mask(phase + 1));
    let free = l - 1 - phase;
    let prob = |c: u64| -> f64 {
        y_probs
            .iter()
            .take(l)
            .enumerate()
            .map(|(i, &(p0, p1))| if (c >> i) & 1 == 0 { p0 } else { p1 })
            .product()
    };
    let mut c = base;
    let mut sum = prob(c);
    for g in 1..(1u64 << free) {
        c ^= kernel.row(phase + 1 + g.trailing_zeros() as usize);
        sum += prob(c);
    }
    // Each of the 2^l codewords carries prior 2^-l; the pairs are normalized,
    // so the joint over (u_0^phase) sums to one.
    sum
}

/// Max-approximation counterpart of [`exact_probability`]: only the most
/// likely continuation is kept.
pub fn approximate_probability(
    kernel: &Kernel,
    u: u64,
    phase: usize,
    y_probs: &[(f64, f64)],
) -> f64 {
    let l = kernel.size();
    let base = kernel.encode_mask(u & low_mask(phase + 1));
    let free = l - 1 - phase;
    let prob = |c: u64| -> f64 {
        y_probs
            .iter()
            .take(l)
            .enumerate()
            .map(|(i, &(p0, p1))| if (c >> i) & 1 == 0 { p0 } else { p1 })
            .product()
    };
    let mut c = base;
    let mut best = prob(c);
    for g in 1..(1u64 << free) {
        c ^= kernel.row(phase + 1 + g.trailing_zeros() as usize);
        best = best.max(prob(c));
    }
    best
}
