//! Min-sum LLR recursions of the Arikan transform and the path score.

use crate::error::{Error, Result};
use crate::ops::OpCounter;

/// Channel LLRs are clipped to this magnitude so infinities never enter
/// the recursions.
pub const LLR_CLIP: f64 = 1e6;

#[inline]
pub fn clip_llr(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-LLR_CLIP, LLR_CLIP)
    }
}

/// Hard decision with `sgn(0) = +1`, i.e. bit 0.
#[inline]
pub fn hard(s: f64) -> u8 {
    (s < 0.0) as u8
}

/// Check-node update `sgn(a) sgn(b) min(|a|, |b|)`.
#[inline]
pub fn q_fn(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update `(-1)^c a + b`.
#[inline]
pub fn p_fn(a: f64, b: f64, c: u8) -> f64 {
    if c & 1 == 0 {
        b + a
    } else {
        b - a
    }
}

/// Penalty for deciding `v` against LLR `s`: 0 if they agree, `-|s|` otherwise.
#[inline]
pub fn tau(s: f64, v: u8) -> f64 {
    if hard(s) == (v & 1) {
        0.0
    } else {
        -s.abs()
    }
}

#[inline]
pub fn score_update(r: f64, s: f64, v: u8) -> f64 {
    r + tau(s, v)
}

#[inline]
pub(crate) fn q_c(a: f64, b: f64, ops: &mut OpCounter) -> f64 {
    ops.cmp(1);
    q_fn(a, b)
}

#[inline]
pub(crate) fn p_c(a: f64, b: f64, c: u8, ops: &mut OpCounter) -> f64 {
    ops.add(1);
    p_fn(a, b, c)
}

/// Both continuations of score `r` by a symbol with LLR `s`; only one of them
/// actually needs an addition.
#[inline]
pub(crate) fn extend_c(r: f64, s: f64, ops: &mut OpCounter) -> [f64; 2] {
    ops.add(1);
    [score_update(r, s, 0), score_update(r, s, 1)]
}

/// `c = v F2^{⊗t}` on the low `n` bits of a mask.
#[inline]
pub fn arikan_encode_mask(mut v: u64, n: usize) -> u64 {
    const M: [u64; 6] = [
        0x5555_5555_5555_5555,
        0x3333_3333_3333_3333,
        0x0F0F_0F0F_0F0F_0F0F,
        0x00FF_00FF_00FF_00FF,
        0x0000_FFFF_0000_FFFF,
        0x0000_0000_FFFF_FFFF,
    ];
    let mut s = 1;
    let mut k = 0;
    while s < n {
        v ^= (v >> s) & M[k];
        s <<= 1;
        k += 1;
    }
    v
}

/// Successive-cancellation state of one `F2^{⊗t}` block: LLRs of every node
/// on the current root-to-leaf path and the codewords of finished left
/// siblings. Supports `t <= 6`.
#[derive(Clone, Debug)]
pub struct LayeredLlrState {
    t: usize,
    /// `llr[d]` holds `2^(t-d)` values of the depth-`d` node on the path.
    llr: Vec<Vec<f64>>,
    /// Codeword of the finished left child at depth `d`, when on the right.
    left: Vec<u64>,
    phase: usize,
    computed: bool,
    decided: u64,
}

impl LayeredLlrState {
    pub fn new(t: usize) -> Self {
        assert!(t <= 6, "block size above 64 not supported");
        Self {
            t,
            llr: (0..=t).map(|d| vec![0.0; 1 << (t - d)]).collect(),
            left: vec![0; t + 1],
            phase: 0,
            computed: false,
            decided: 0,
        }
    }

    pub fn size(&self) -> usize {
        1 << self.t
    }

    /// Resets to phase 0 with new channel LLRs.
    pub fn load(&mut self, y: &[f64]) {
        self.llr[0].copy_from_slice(&y[..1 << self.t]);
        self.phase = 0;
        self.computed = false;
        self.decided = 0;
    }

    pub fn phase(&self) -> usize {
        self.phase
    }

    /// Decided `v_0..v_{phase-1}`.
    pub fn decided(&self) -> u64 {
        self.decided
    }

    /// LLR of `v_phase` given the decided prefix.
    pub fn llr(&mut self, ops: &mut OpCounter) -> f64 {
        assert!(self.phase < self.size(), "block already complete");
        if !self.computed {
            let t = self.t;
            let i = self.phase;
            let d0 = if i == 0 { 1 } else { t - i.trailing_zeros() as usize };
            for d in d0..=t {
                let half = 1 << (t - d);
                let right = (i >> (t - d)) & 1 == 1;
                let (upper, lower) = self.llr.split_at_mut(d);
                let parent = &upper[d - 1];
                let node = &mut lower[0];
                if right {
                    let x = self.left[d];
                    for j in 0..half {
                        node[j] = p_c(parent[j], parent[j + half], ((x >> j) & 1) as u8, ops);
                    }
                } else {
                    for j in 0..half {
                        node[j] = q_c(parent[j], parent[j + half], ops);
                    }
                }
            }
            self.computed = true;
        }
        self.llr[self.t][0]
    }

    /// Decides `v_phase = v` and updates the partial sums.
    pub fn push(&mut self, v: u8) {
        if !self.computed {
            self.llr(&mut OpCounter::new());
        }
        let t = self.t;
        let i = self.phase;
        let mut w = (v & 1) as u64;
        self.decided |= w << i;
        for d in (1..=t).rev() {
            if (i >> (t - d)) & 1 == 0 {
                self.left[d] = w;
                break;
            }
            let size = 1 << (t - d);
            w = (self.left[d] ^ w) | (w << size);
        }
        self.phase += 1;
        self.computed = false;
    }

    /// LLR of `v_i` given `v_0..v_{i-1}` (bits of `prefix`), advancing the
    /// state as needed. Fails if `i` is behind the current phase or the
    /// prefix contradicts bits already decided.
    pub fn layer_llr(&mut self, i: usize, prefix: u64, ops: &mut OpCounter) -> Result<f64> {
        if i < self.phase {
            return Err(Error::PhaseOrder {
                expected: self.phase,
                got: i,
            });
        }
        if i >= self.size() {
            return Err(Error::PhaseOrder {
                expected: self.size() - 1,
                got: i,
            });
        }
        let low = crate::kernel::low_mask(self.phase);
        if (prefix ^ self.decided) & low != 0 {
            let bad = ((prefix ^ self.decided) & low).trailing_zeros() as usize;
            return Err(Error::PrefixConflict(bad));
        }
        while self.phase < i {
            let b = ((prefix >> self.phase) & 1) as u8;
            self.llr(ops);
            self.push(b);
        }
        Ok(self.llr(ops))
    }
}

/// Score of a full `v` path: `sum_beta tau(y_beta, (vF)_beta)`.
pub fn codeword_score(y: &[f64], v: u64) -> f64 {
    let c = arikan_encode_mask(v, y.len());
    y.iter()
        .enumerate()
        .map(|(b, &s)| tau(s, ((c >> b) & 1) as u8))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binmat::arikan_f2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_llrs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-6.0..6.0)).collect()
    }

    #[test]
    fn q_and_p_basics() {
        assert_eq!(q_fn(2.0, -3.0), -2.0);
        assert_eq!(q_fn(-2.0, -0.5), 0.5);
        assert_eq!(p_fn(2.0, 1.0, 0), 3.0);
        assert_eq!(p_fn(2.0, 1.0, 1), -1.0);
        assert_eq!(tau(0.0, 0), 0.0);
        assert_eq!(tau(-1.5, 0), -1.5);
        assert_eq!(tau(-1.5, 1), 0.0);
    }

    #[test]
    fn clip() {
        assert_eq!(clip_llr(f64::INFINITY), LLR_CLIP);
        assert_eq!(clip_llr(f64::NEG_INFINITY), -LLR_CLIP);
        assert_eq!(clip_llr(f64::NAN), 0.0);
    }

    #[test]
    fn encode_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..=6u32 {
            let n = 1usize << t;
            let f = arikan_f2().kron_power(t);
            for _ in 0..20 {
                let v: u64 = rng.random::<u64>() & crate::kernel::low_mask(n);
                let bits = crate::kernel::mask_to_bits(v, n);
                let c = f.left_mul_vec(&bits).unwrap();
                assert_eq!(arikan_encode_mask(v, n), crate::kernel::bits_to_mask(&c));
            }
        }
    }

    // The max-log LLR of v_i equals the gap between the best path scores with
    // v_i = 0 and v_i = 1 over all continuations.
    #[test]
    fn layer_llr_is_score_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in 1..=4usize {
            let n = 1 << t;
            let mut st = LayeredLlrState::new(t);
            for _ in 0..200 {
                let y = rand_llrs(&mut rng, n);
                let path: u64 = rng.random::<u64>() & crate::kernel::low_mask(n);
                st.load(&y);
                let mut ops = OpCounter::new();
                for i in 0..n {
                    let s = st.layer_llr(i, path, &mut ops).unwrap();
                    let mut best = [f64::NEG_INFINITY; 2];
                    for tail in 0..(1u64 << (n - i)) {
                        let v = (path & crate::kernel::low_mask(i)) | (tail << i);
                        let b = (tail & 1) as usize;
                        best[b] = best[b].max(codeword_score(&y, v));
                    }
                    assert!((s - (best[0] - best[1])).abs() < 1e-9);
                }
                // Every node is computed once: n-1 internal nodes, each with
                // as many ops as its size.
                assert_eq!(ops.total() as usize, t * n);
            }
        }
    }

    // Path score accumulated through tau equals the direct codeword score.
    #[test]
    fn path_score_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut st = LayeredLlrState::new(4);
        for _ in 0..500 {
            let y = rand_llrs(&mut rng, 16);
            let v: u64 = rng.random::<u64>() & 0xFFFF;
            st.load(&y);
            let mut r = 0.0;
            let mut ops = OpCounter::new();
            for i in 0..16 {
                let s = st.llr(&mut ops);
                let b = ((v >> i) & 1) as u8;
                r = score_update(r, s, b);
                st.push(b);
            }
            assert!((r - codeword_score(&y, v)).abs() < 1e-9);
        }
    }

    #[test]
    fn layer_llr_rejects_out_of_order() {
        let mut st = LayeredLlrState::new(2);
        st.load(&[1.0, -1.0, 0.5, 2.0]);
        let mut ops = OpCounter::new();
        st.layer_llr(2, 0b01, &mut ops).unwrap();
        assert!(matches!(
            st.layer_llr(1, 0b01, &mut ops),
            Err(Error::PhaseOrder { expected: 2, got: 1 })
        ));
        assert_eq!(st.layer_llr(3, 0b110, &mut ops), Err(Error::PrefixConflict(0)));
    }
}
