//! Reduced-complexity processors for the two 16x16 kernels K1 and K2.
//!
//! Both schedules follow the layered Arikan recursion for `K = T F2^{⊗4}`.
//! Inside a window epoch the candidates form a Reed-Muller coset, so their
//! scores come out of one fast Hadamard transform; the LLR subexpressions of
//! the second half of the block are shared across candidates (arrays `L`,
//! `X`, `Y` and friends), and maxima of the candidate scores are kept in a
//! tree so later phases of the epoch cost a single subtraction.
//!
//! Costs count one unit per real addition or comparison; sign flips, XORs,
//! halving and table lookups are free.

use std::sync::{Arc, OnceLock};

use crate::arikan::{arikan_encode_mask as enc, extend_c, hard, p_c, q_c};
use crate::error::{Error, Result};
use crate::kernel::{low_mask, Kernel, WindowPlan};
use crate::ops::OpCounter;
use crate::winproc::KernelProcessor;

pub const K1_COSTS: [u64; 16] = [15, 1, 3, 21, 127, 48, 95, 1, 127, 1, 1, 1, 1, 1, 3, 1];
pub const K2_COSTS: [u64; 16] = [15, 1, 3, 1, 7, 67, 24, 47, 1, 1, 1, 1, 7, 1, 3, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Fast16Kernel {
    K1,
    K2,
}

impl Fast16Kernel {
    pub fn kernel(self) -> Kernel {
        match self {
            Self::K1 => Kernel::k1(),
            Self::K2 => Kernel::k2(),
        }
    }

    /// Reference per-phase costs of the schedule.
    pub fn table_costs(self) -> [u64; 16] {
        match self {
            Self::K1 => K1_COSTS,
            Self::K2 => K2_COSTS,
        }
    }

    /// Recognizes K1 or K2 by matrix equality.
    pub fn detect(kernel: &Kernel) -> Option<Self> {
        if kernel.size() != 16 {
            return None;
        }
        [Self::K1, Self::K2]
            .into_iter()
            .find(|k| k.kernel().matrix() == kernel.matrix())
    }

    fn plan(self) -> Arc<WindowPlan> {
        static PLANS: OnceLock<[Arc<WindowPlan>; 2]> = OnceLock::new();
        let plans = PLANS.get_or_init(|| {
            [Kernel::k1(), Kernel::k2()]
                .map(|k| Arc::new(k.window_plan().expect("named kernels decompose")))
        });
        plans[self as usize].clone()
    }
}

/// Unnormalized Walsh-Hadamard transform, `out_k = sum_i (-1)^<i,k> s_i`.
/// Costs 24 additions.
pub fn fht8(s: &[f64; 8]) -> [f64; 8] {
    let mut a = *s;
    let mut h = 1;
    while h < 8 {
        for i in 0..8 {
            if i & h == 0 {
                let (x, y) = (a[i], a[i + h]);
                a[i] = x + y;
                a[i + h] = x - y;
            }
        }
        h <<= 1;
    }
    a
}

/// Four-point version of [`fht8`]; 8 additions.
pub fn fht4(s: &[f64; 4]) -> [f64; 4] {
    let (a, b) = (s[0] + s[1], s[0] - s[1]);
    let (c, d) = (s[2] + s[3], s[2] - s[3]);
    [a + c, b + d, a - c, b - d]
}

#[inline]
fn bit(v: u64, i: usize) -> u8 {
    ((v >> i) & 1) as u8
}

#[inline]
fn signed(s: f64, flip: bool) -> f64 {
    if flip {
        -s
    } else {
        s
    }
}

/// Memoized values keyed by a small integer; a value is paid for once.
#[derive(Clone, Copy, Debug)]
struct Memo<const N: usize> {
    vals: [f64; N],
    set: u64,
}

impl<const N: usize> Memo<N> {
    const EMPTY: Self = Self {
        vals: [0.0; N],
        set: 0,
    };

    #[inline]
    fn get_or(&mut self, key: usize, f: impl FnOnce() -> f64) -> f64 {
        if self.set >> key & 1 == 1 {
            self.vals[key]
        } else {
            let v = f();
            self.vals[key] = v;
            self.set |= 1 << key;
            v
        }
    }
}

/// Index and value of the largest entry; ties keep the first. `n - 1`
/// comparisons.
fn argmax(vals: impl IntoIterator<Item = (usize, f64)>, ops: &mut OpCounter) -> (usize, f64) {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in vals {
        best = match best {
            None => Some((i, v)),
            Some((bi, bv)) => {
                ops.cmp(1);
                if v > bv {
                    Some((i, v))
                } else {
                    Some((bi, bv))
                }
            }
        };
    }
    best.expect("non-empty")
}

/// Processor state for one 16x16 kernel block.
#[derive(Clone, Debug)]
pub struct Fast16State {
    kind: Fast16Kernel,
    plan: Arc<WindowPlan>,
    y: [f64; 16],
    u: u64,
    phase: usize,
    cached: Option<f64>,
    costs: [u64; 16],

    // Layered LLRs on the decided path.
    a1: [f64; 8],
    a2: [f64; 4],
    a3: [f64; 2],
    b3: [f64; 2],
    s4: [f64; 4],

    // Shared subexpressions of the second half: L[p][x_p] and its reductions.
    l: [[f64; 2]; 8],
    xm: Memo<16>,
    ym: Memo<32>,
    tm: Memo<32>,

    // First window epoch, per candidate.
    vm: [u64; 16],
    xc: [[f64; 4]; 16],
    y01: [[f64; 2]; 16],
    pz: [[f64; 2]; 16],
    r8: [[f64; 2]; 16],
    r9: [[f64; 2]; 16],
    r10: [[f64; 2]; 16],
    best: [usize; 2],
    groups: [f64; 4],

    // Second epoch (K1) and the max tree.
    vmb: [u64; 16],
    q01: [[f64; 2]; 16],
    t2c: [[f64; 4]; 16],
    tree: [[f64; 32]; 6],
    leaf_cand: [u8; 32],
    tree_first: usize,
    tree_depth: usize,

    // Tail of the block on the decided path.
    dq: [f64; 2],
    dt2: [f64; 4],
    b14: [f64; 2],
}

impl Fast16State {
    pub fn new(kind: Fast16Kernel) -> Self {
        Self {
            kind,
            plan: kind.plan(),
            y: [0.0; 16],
            u: 0,
            phase: 0,
            cached: None,
            costs: [0; 16],
            a1: [0.0; 8],
            a2: [0.0; 4],
            a3: [0.0; 2],
            b3: [0.0; 2],
            s4: [0.0; 4],
            l: [[0.0; 2]; 8],
            xm: Memo::EMPTY,
            ym: Memo::EMPTY,
            tm: Memo::EMPTY,
            vm: [0; 16],
            xc: [[0.0; 4]; 16],
            y01: [[0.0; 2]; 16],
            pz: [[0.0; 2]; 16],
            r8: [[0.0; 2]; 16],
            r9: [[0.0; 2]; 16],
            r10: [[0.0; 2]; 16],
            best: [0; 2],
            groups: [0.0; 4],
            vmb: [0; 16],
            q01: [[0.0; 2]; 16],
            t2c: [[0.0; 4]; 16],
            tree: [[0.0; 32]; 6],
            leaf_cand: [0; 32],
            tree_first: 0,
            tree_depth: 0,
            dq: [0.0; 2],
            dt2: [0.0; 4],
            b14: [0.0; 2],
        }
    }

    pub fn for_kernel(kernel: &Kernel) -> Option<Self> {
        Fast16Kernel::detect(kernel).map(Self::new)
    }

    pub fn kind(&self) -> Fast16Kernel {
        self.kind
    }

    /// LLR of `u_phase` for the decided prefix; `u_prefix` must agree with
    /// the symbols pushed so far.
    pub fn process_phase(&mut self, phase: usize, u_prefix: u64, ops: &mut OpCounter) -> Result<f64> {
        if phase != self.phase {
            return Err(Error::PhaseOrder {
                expected: self.phase,
                got: phase,
            });
        }
        let diff = (u_prefix ^ self.u) & low_mask(phase);
        if diff != 0 {
            return Err(Error::PrefixConflict(diff.trailing_zeros() as usize));
        }
        self.kernel_llr(phase, ops)
    }

    /// Per-phase operation counts of the finished block.
    pub fn op_report(&self) -> Result<[u64; 16]> {
        if self.phase < 16 {
            return Err(Error::Incomplete(self.phase, 16));
        }
        Ok(self.costs)
    }

    /// `v` symbols fixed by the decided prefix.
    fn dv(&self) -> u64 {
        self.plan.decided_v(self.phase, self.u).0
    }

    /// Turns the LLR of `v_j` into that of `u_phase` when the window is empty.
    fn to_u(&self, s: f64, v: u64) -> f64 {
        let j = self.plan.constraint(self.phase).j;
        debug_assert!(self.plan.inverse_column(self.phase) >> j & 1 == 1);
        signed(s, self.plan.u_from_v(self.phase, v & !(1 << j)) == 1)
    }

    fn compute(&mut self, ops: &mut OpCounter) -> f64 {
        use Fast16Kernel::*;
        match (self.kind, self.phase) {
            (_, 0) => self.std0(ops),
            (_, 1) => self.std1(ops),
            (_, 2) => self.std2(ops),
            (K1, 3) => self.k1_p3(ops),
            (K1, 4) => self.k1_p4(ops),
            (K1, 5) => self.k1_p5(ops),
            (K1, 6) => self.k1_p6(ops),
            (K1, 7) => self.k1_p7(ops),
            (K1, 8) => self.k1_p8(ops),
            (K1, 9..=12) => self.tree_step(ops),
            (K2, 3) => self.std3(ops),
            (K2, 4) => self.std4(ops),
            (K2, 5) => self.k2_p5(ops),
            (K2, 6) => self.k2_p6(ops),
            (K2, 7) => self.k2_p7(ops),
            (K2, 8..=10) => self.tree_step(ops),
            (K2, 11) => self.k2_p11(ops),
            (K2, 12) => self.k2_p12(ops),
            (_, 13) => self.tail13(ops),
            (_, 14) => self.tail14(ops),
            (_, 15) => self.tail15(ops),
            _ => unreachable!("phase out of range"),
        }
    }

    // ---- empty-window phases at the start of the block ----

    fn std0(&mut self, ops: &mut OpCounter) -> f64 {
        let y = self.y;
        for p in 0..8 {
            self.a1[p] = q_c(y[p], y[p + 8], ops);
        }
        for q in 0..4 {
            self.a2[q] = q_c(self.a1[q], self.a1[q + 4], ops);
        }
        for r in 0..2 {
            self.a3[r] = q_c(self.a2[r], self.a2[r + 2], ops);
        }
        let s = q_c(self.a3[0], self.a3[1], ops);
        self.to_u(s, 0)
    }

    fn std1(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let s = p_c(self.a3[0], self.a3[1], bit(v, 0), ops);
        self.to_u(s, v)
    }

    fn std2(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let x = enc(v & 0b11, 2);
        for r in 0..2 {
            self.b3[r] = p_c(self.a2[r], self.a2[r + 2], bit(x, r), ops);
        }
        let s = q_c(self.b3[0], self.b3[1], ops);
        self.to_u(s, v)
    }

    fn std3(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let s = p_c(self.b3[0], self.b3[1], bit(v, 2), ops);
        self.to_u(s, v)
    }

    fn std4(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let x = enc(v & 0xF, 4);
        for q in 0..4 {
            self.s4[q] = p_c(self.a1[q], self.a1[q + 4], bit(x, q), ops);
        }
        let c0 = q_c(self.s4[0], self.s4[2], ops);
        let c1 = q_c(self.s4[1], self.s4[3], ops);
        let s = q_c(c0, c1, ops);
        self.to_u(s, v)
    }

    // ---- shared second-half machinery ----

    fn fill_l(&mut self, ops: &mut OpCounter) {
        let y = self.y;
        for p in 0..8 {
            self.l[p] = [p_c(y[p], y[p + 8], 0, ops), p_c(y[p], y[p + 8], 1, ops)];
        }
        self.xm = Memo::EMPTY;
        self.ym = Memo::EMPTY;
        self.tm = Memo::EMPTY;
    }

    /// `X_q`, `Y_r` and `Z` of the second-half node for first-half codeword `x`.
    fn xyz(&mut self, x: u64, ops: &mut OpCounter) -> ([f64; 4], [f64; 2], f64) {
        let l = self.l;
        let mut xs = [0.0; 4];
        for (q, xq) in xs.iter_mut().enumerate() {
            let (a, b) = (bit(x, q), bit(x, q + 4));
            *xq = self.xm.get_or(q * 4 + (a | b << 1) as usize, || {
                q_c(l[q][a as usize], l[q + 4][b as usize], ops)
            });
        }
        let mut ys = [0.0; 2];
        for (r, yr) in ys.iter_mut().enumerate() {
            let pat = bit(x, r) | bit(x, r + 2) << 1 | bit(x, r + 4) << 2 | bit(x, r + 6) << 3;
            *yr = self
                .ym
                .get_or(r * 16 + pat as usize, || q_c(xs[r], xs[r + 2], ops));
        }
        let z = q_c(ys[0], ys[1], ops);
        (xs, ys, z)
    }

    /// LLRs of the node `(v12..v15)`: `P(L[p][x_p], L[p+4][x_{p+4}], x''_p)`.
    fn t2(&mut self, x: u64, x2: u64, ops: &mut OpCounter) -> [f64; 4] {
        let l = self.l;
        let mut t = [0.0; 4];
        for (p, tp) in t.iter_mut().enumerate() {
            let (a, b, c) = (bit(x, p), bit(x, p + 4), bit(x2, p));
            *tp = self.tm.get_or(p * 8 + (a | b << 1 | c << 2) as usize, || {
                p_c(l[p][a as usize], l[p + 4][b as usize], c, ops)
            });
        }
        t
    }

    /// Builds the max tree over `2^depth` leaves and returns the LLR of its
    /// first phase.
    fn build_tree(&mut self, first: usize, depth: usize, ops: &mut OpCounter) -> f64 {
        self.tree_first = first;
        self.tree_depth = depth;
        for d in (1..depth).rev() {
            for i in 0..(1 << d) {
                let (a, b) = (self.tree[d + 1][2 * i], self.tree[d + 1][2 * i + 1]);
                ops.cmp(1);
                self.tree[d][i] = a.max(b);
            }
        }
        ops.add(1);
        self.tree[1][0] - self.tree[1][1]
    }

    fn tree_prefix(&self, upto: usize) -> usize {
        (self.tree_first..upto).fold(0, |acc, i| acc << 1 | bit(self.u, i) as usize)
    }

    fn tree_step(&mut self, ops: &mut OpCounter) -> f64 {
        let d = self.phase - self.tree_first + 1;
        let p = self.tree_prefix(self.phase);
        ops.add(1);
        self.tree[d][2 * p] - self.tree[d][2 * p + 1]
    }

    fn decided_leaf(&self) -> usize {
        self.leaf_cand[self.tree_prefix(self.tree_first + self.tree_depth)] as usize
    }

    // ---- K1 ----

    fn k1_p3(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv() & 0b111;
        let s3 = p_c(self.b3[0], self.b3[1], bit(v, 2), ops);
        let r3 = extend_c(0.0, s3, ops);
        let mut grp: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for v3 in 0..2u64 {
            let vv = v | v3 << 3;
            let x = enc(vv, 4);
            let mut s = [0.0; 4];
            for (q, sq) in s.iter_mut().enumerate() {
                *sq = p_c(self.a1[q], self.a1[q + 4], bit(x, q), ops);
            }
            let c0 = q_c(s[0], s[2], ops);
            let c1 = q_c(s[1], s[3], ops);
            let s4 = q_c(c0, c1, ops);
            let r4 = extend_c(r3[v3 as usize], s4, ops);
            for v4 in 0..2u64 {
                let b = self.plan.u_from_v(3, vv | v4 << 4) as usize;
                grp[b].push(r4[v4 as usize]);
            }
        }
        let m0 = argmax(grp[0].iter().copied().enumerate(), ops).1;
        let m1 = argmax(grp[1].iter().copied().enumerate(), ops).1;
        ops.add(1);
        m0 - m1
    }

    fn k1_p4(&mut self, ops: &mut OpCounter) -> f64 {
        for c in 0..16 {
            self.vm[c] = self.plan.resolve_v(4, self.u, 0, c as u64) & 0xFF;
        }
        // Scores of the RM(1,3) coset around candidate 0.
        let xbar = enc(self.vm[0], 8);
        let mut s = [0.0; 8];
        for i in 0..8 {
            s[i] = signed(self.a1[i], bit(xbar, i) == 1);
        }
        let hat = fht8(&s);
        ops.add(24);
        let mut cand_of = [[usize::MAX; 2]; 8];
        let mut r7 = [0.0; 16];
        for c in 0..16 {
            let w = enc(self.vm[c], 8) ^ xbar;
            let sg = bit(w, 0);
            let a = (bit(w, 1) ^ sg) | (bit(w, 2) ^ sg) << 1 | (bit(w, 4) ^ sg) << 2;
            debug_assert!((0..8).all(|i| bit(w, i) == sg ^ (((i as u8) & a).count_ones() as u8 & 1)));
            r7[c] = 0.5 * signed(hat[a as usize], sg == 1);
            cand_of[a as usize][sg as usize] = c;
        }

        self.fill_l(ops);
        let mut z = [0.0; 16];
        for c in 0..16 {
            let (xs, ys, zc) = self.xyz(enc(self.vm[c], 8), ops);
            self.xc[c] = xs;
            self.y01[c] = ys;
            z[c] = zc;
            self.r8[c] = extend_c(r7[c], zc, ops);
        }

        // The overall best candidate sits at the largest |hat|.
        let (ast, _) = argmax((0..8).map(|a| (a, hat[a].abs())), ops);
        let sg = hard(hat[ast]) as usize;
        let cst = cand_of[ast][sg];
        let v8 = hard(z[cst]);
        let bhat = self.plan.u_from_v(4, self.vm[cst] | (v8 as u64) << 8) as usize;
        let top = self.r8[cst][v8 as usize];
        let other = (1 - bhat) as u8;
        let (oc, ov) = argmax(
            (0..16).map(|c| {
                let v8 = self.plan.u_from_v(4, self.vm[c]) ^ other;
                (c, self.r8[c][v8 as usize])
            }),
            ops,
        );
        self.best[bhat] = cst;
        self.best[1 - bhat] = oc;
        ops.add(1);
        if bhat == 0 {
            top - ov
        } else {
            ov - top
        }
    }

    fn k1_p5(&mut self, ops: &mut OpCounter) -> f64 {
        self.epoch_v9(5, ops)
    }

    /// Shared by K1 phase 5 and K2 phase 6: extends by `v9`, reusing the best
    /// candidate of the previous phase's decided group.
    fn epoch_v9(&mut self, phase: usize, ops: &mut OpCounter) -> f64 {
        let n = self.epoch_len();
        for c in 0..n {
            let v = self.plan.resolve_v(phase, self.u, 0, c as u64);
            self.vm[c] = v & low_mask(9);
            let v8 = bit(v, 8);
            let s9 = p_c(self.y01[c][0], self.y01[c][1], v8, ops);
            self.r9[c] = extend_c(self.r8[c][v8 as usize], s9, ops);
        }
        let prev = bit(self.u, phase - 1) as usize;
        let cb = self.best[prev];
        let s9 = p_c_free(self.y01[cb][0], self.y01[cb][1], bit(self.vm[cb], 8));
        let v9 = hard(s9);
        let bhat = self.plan.u_from_v(phase, self.vm[cb] | (v9 as u64) << 9) as usize;
        let top = self.r9[cb][v9 as usize];
        let other = (1 - bhat) as u8;
        let (oc, ov) = argmax(
            (0..n).map(|c| {
                let v9 = self.plan.u_from_v(phase, self.vm[c]) ^ other;
                (c, self.r9[c][v9 as usize])
            }),
            ops,
        );
        self.best[bhat] = cb;
        self.best[1 - bhat] = oc;
        ops.add(1);
        if bhat == 0 {
            top - ov
        } else {
            ov - top
        }
    }

    fn epoch_len(&self) -> usize {
        match self.kind {
            Fast16Kernel::K1 => 16,
            Fast16Kernel::K2 => 8,
        }
    }

    /// Extends every candidate by `v10` and stores the LLRs of node `(v10, v11)`.
    fn epoch_v10(&mut self, phase: usize, ops: &mut OpCounter) {
        for c in 0..self.epoch_len() {
            let v = self.plan.resolve_v(phase, self.u, 0, c as u64);
            self.vm[c] = v & low_mask(10);
            let (v8, v9) = (bit(v, 8), bit(v, 9));
            let x = self.xc[c];
            self.pz[c] = [p_c(x[0], x[2], v8 ^ v9, ops), p_c(x[1], x[3], v9, ops)];
            let s10 = q_c(self.pz[c][0], self.pz[c][1], ops);
            self.r10[c] = extend_c(self.r9[c][v9 as usize], s10, ops);
        }
    }

    fn k1_p6(&mut self, ops: &mut OpCounter) -> f64 {
        self.epoch_v10(6, ops);
        let mut g: [Vec<f64>; 4] = Default::default();
        for c in 0..16 {
            for v10 in 0..2u64 {
                let v = self.vm[c] | v10 << 10;
                let k = (self.plan.u_from_v(6, v) << 1 | self.plan.u_from_v(7, v)) as usize;
                g[k].push(self.r10[c][v10 as usize]);
            }
        }
        for k in 0..4 {
            debug_assert_eq!(g[k].len(), 8);
            self.groups[k] = argmax(g[k].iter().copied().enumerate(), ops).1;
        }
        ops.cmp(2);
        let m0 = self.groups[0].max(self.groups[1]);
        let m1 = self.groups[2].max(self.groups[3]);
        ops.add(1);
        m0 - m1
    }

    fn k1_p7(&mut self, ops: &mut OpCounter) -> f64 {
        let u6 = bit(self.u, 6) as usize;
        ops.add(1);
        self.groups[2 * u6] - self.groups[2 * u6 + 1]
    }

    fn k1_p8(&mut self, ops: &mut OpCounter) -> f64 {
        for c in 0..16 {
            self.vmb[c] = self.plan.resolve_v(8, self.u, 0, c as u64) & low_mask(12);
        }
        // Epoch-one index of a candidate: its (v3, v5, v6, v7).
        let old = |v: u64| (bit(v, 3) | bit(v, 5) << 1 | bit(v, 6) << 2 | bit(v, 7) << 3) as usize;
        let mut r11 = [[0.0; 2]; 8];
        for (k, r) in r11.iter_mut().enumerate() {
            let v = self.vmb[k];
            debug_assert_eq!(self.vmb[k | 8], v | 1 << 11);
            let a = old(v);
            debug_assert_eq!(self.vm[a], v & low_mask(10));
            let v10 = bit(v, 10);
            let s11 = p_c(self.pz[a][0], self.pz[a][1], v10, ops);
            *r = extend_c(self.r10[a][v10 as usize], s11, ops);
        }
        let mut filled = 0u32;
        for c in 0..16 {
            let v = self.vmb[c];
            let t = self.t2(enc(v & 0xFF, 8), enc((v >> 8) & 0xF, 4), ops);
            self.t2c[c] = t;
            let q0 = q_c(t[0], t[2], ops);
            let q1 = q_c(t[1], t[3], ops);
            self.q01[c] = [q0, q1];
            let s12 = q_c(q0, q1, ops);
            let r12 = extend_c(r11[c & 7][c >> 3], s12, ops);
            for v12 in 0..2u64 {
                let vv = v | v12 << 12;
                let leaf = (8..13).fold(0usize, |acc, i| acc << 1 | self.plan.u_from_v(i, vv) as usize);
                self.tree[5][leaf] = r12[v12 as usize];
                self.leaf_cand[leaf] = c as u8;
                filled |= 1 << leaf;
            }
        }
        debug_assert_eq!(filled, u32::MAX);
        self.build_tree(8, 5, ops)
    }

    // ---- K2 ----

    fn k2_p5(&mut self, ops: &mut OpCounter) -> f64 {
        for c in 0..8 {
            self.vm[c] = self.plan.resolve_v(5, self.u, 0, c as u64) & 0xFF;
        }
        // RM(1,2) coset scores of the node (v4..v7) around candidate 0.
        let cbar = enc(self.vm[0] >> 4, 4);
        let mut s = [0.0; 4];
        for q in 0..4 {
            s[q] = signed(self.s4[q], bit(cbar, q) == 1);
        }
        let hat = fht4(&s);
        ops.add(8);
        let mut cand_of = [[usize::MAX; 2]; 4];
        let mut r7 = [0.0; 8];
        for c in 0..8 {
            let w = enc(self.vm[c] >> 4, 4) ^ cbar;
            let sg = bit(w, 0);
            let a = (bit(w, 1) ^ sg) | (bit(w, 2) ^ sg) << 1;
            debug_assert!((0..4).all(|i| bit(w, i) == sg ^ (((i as u8) & a).count_ones() as u8 & 1)));
            r7[c] = 0.5 * signed(hat[a as usize], sg == 1);
            cand_of[a as usize][sg as usize] = c;
        }

        self.fill_l(ops);
        let mut z = [0.0; 8];
        for c in 0..8 {
            let (xs, ys, zc) = self.xyz(enc(self.vm[c], 8), ops);
            self.xc[c] = xs;
            self.y01[c] = ys;
            z[c] = zc;
            self.r8[c] = extend_c(r7[c], zc, ops);
        }

        let (ast, _) = argmax((0..4).map(|a| (a, hat[a].abs())), ops);
        let sg = hard(hat[ast]) as usize;
        let cst = cand_of[ast][sg];
        let v8 = hard(z[cst]);
        let bhat = self.plan.u_from_v(5, self.vm[cst] | (v8 as u64) << 8) as usize;
        let top = self.r8[cst][v8 as usize];
        let other = (1 - bhat) as u8;
        let (oc, ov) = argmax(
            (0..8).map(|c| {
                let v8 = self.plan.u_from_v(5, self.vm[c]) ^ other;
                (c, self.r8[c][v8 as usize])
            }),
            ops,
        );
        self.best[bhat] = cst;
        self.best[1 - bhat] = oc;
        ops.add(1);
        if bhat == 0 {
            top - ov
        } else {
            ov - top
        }
    }

    fn k2_p6(&mut self, ops: &mut OpCounter) -> f64 {
        self.epoch_v9(6, ops)
    }

    fn k2_p7(&mut self, ops: &mut OpCounter) -> f64 {
        self.epoch_v10(7, ops);
        let mut filled = 0u32;
        for c in 0..8 {
            for v10 in 0..2u64 {
                let v = self.vm[c] | v10 << 10;
                let leaf = (7..11).fold(0usize, |acc, i| acc << 1 | self.plan.u_from_v(i, v) as usize);
                self.tree[4][leaf] = self.r10[c][v10 as usize];
                self.leaf_cand[leaf] = c as u8;
                filled |= 1 << leaf;
            }
        }
        debug_assert_eq!(filled, 0xFFFF);
        self.build_tree(7, 4, ops)
    }

    fn k2_p11(&mut self, ops: &mut OpCounter) -> f64 {
        let c = self.decided_leaf();
        let v = self.dv();
        let s = p_c(self.pz[c][0], self.pz[c][1], bit(v, 10), ops);
        self.to_u(s, v)
    }

    fn k2_p12(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let (x, x2) = (enc(v & 0xFF, 8), enc((v >> 8) & 0xF, 4));
        let l = self.l;
        for p in 0..4 {
            self.dt2[p] = p_c(l[p][bit(x, p) as usize], l[p + 4][bit(x, p + 4) as usize], bit(x2, p), ops);
        }
        self.dq = [q_c(self.dt2[0], self.dt2[2], ops), q_c(self.dt2[1], self.dt2[3], ops)];
        let s = q_c(self.dq[0], self.dq[1], ops);
        self.to_u(s, v)
    }

    // ---- shared tail ----

    fn tail13(&mut self, ops: &mut OpCounter) -> f64 {
        if self.kind == Fast16Kernel::K1 {
            let c = self.decided_leaf();
            self.dq = self.q01[c];
            self.dt2 = self.t2c[c];
        }
        let v = self.dv();
        let s = p_c(self.dq[0], self.dq[1], bit(v, 12), ops);
        self.to_u(s, v)
    }

    fn tail14(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let (v12, v13) = (bit(v, 12), bit(v, 13));
        self.b14 = [
            p_c(self.dt2[0], self.dt2[2], v12 ^ v13, ops),
            p_c(self.dt2[1], self.dt2[3], v13, ops),
        ];
        let s = q_c(self.b14[0], self.b14[1], ops);
        self.to_u(s, v)
    }

    fn tail15(&mut self, ops: &mut OpCounter) -> f64 {
        let v = self.dv();
        let s = p_c(self.b14[0], self.b14[1], bit(v, 14), ops);
        self.to_u(s, v)
    }
}

/// Recomputes a value that was already paid for (it equals an entry of an
/// array computed earlier in the phase).
#[inline]
fn p_c_free(a: f64, b: f64, c: u8) -> f64 {
    crate::arikan::p_fn(a, b, c)
}

impl KernelProcessor for Fast16State {
    fn size(&self) -> usize {
        16
    }

    fn load(&mut self, y: &[f64]) {
        self.y.copy_from_slice(&y[..16]);
        self.u = 0;
        self.phase = 0;
        self.cached = None;
        self.costs = [0; 16];
    }

    fn phase(&self) -> usize {
        self.phase
    }

    fn llr(&mut self, ops: &mut OpCounter) -> f64 {
        if let Some(s) = self.cached {
            return s;
        }
        let mut local = OpCounter::new();
        let s = self.compute(&mut local);
        self.costs[self.phase] = local.total();
        *ops += local;
        self.cached = Some(s);
        s
    }

    fn push(&mut self, u: u8) {
        debug_assert!(self.cached.is_some(), "llr must precede push");
        self.u |= ((u & 1) as u64) << self.phase;
        self.phase += 1;
        self.cached = None;
    }

    fn decided(&self) -> u64 {
        self.u
    }
}

/// Runs a full block on `y` along the input path `u` and returns the per-phase
/// costs together with the LLRs.
pub fn run_block(kind: Fast16Kernel, y: &[f64], u: u64) -> ([u64; 16], [f64; 16]) {
    let mut st = Fast16State::new(kind);
    st.load(y);
    let mut llrs = [0.0; 16];
    let mut ops = OpCounter::new();
    for (p, s) in llrs.iter_mut().enumerate() {
        *s = st.llr(&mut ops);
        st.push(bit(u, p));
    }
    (st.op_report().expect("complete"), llrs)
}

/// Per-phase cost table, one line per phase plus the total.
pub fn op_report_text(kind: Fast16Kernel, costs: &[u64; 16]) -> String {
    let mut out = format!("{kind:?} per-phase costs\n");
    for (p, c) in costs.iter().enumerate() {
        out.push_str(&format!("{p:>5} {c:>6}\n"));
    }
    out.push_str(&format!("total {:>6}\n", costs.iter().sum::<u64>()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::winproc::{kernel_llrs_bruteforce, GenericProcessor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn fht8_examples() {
        let mut e = [0.0; 8];
        e[0] = 1.0;
        assert_eq!(fht8(&e), [1.0; 8]);
        let mut expect = [0.0; 8];
        expect[0] = 8.0;
        assert_eq!(fht8(&[1.0; 8]), expect);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s: [f64; 8] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
            let out = fht8(&s);
            for k in 0..8usize {
                let naive: f64 = (0..8usize)
                    .map(|i| if (i & k).count_ones() % 2 == 0 { s[i] } else { -s[i] })
                    .sum();
                assert!(close(out[k], naive));
            }
        }
    }

    #[test]
    fn fht4_matches_naive() {
        let s = [1.0, -2.0, 0.5, 3.0];
        let out = fht4(&s);
        for k in 0..4usize {
            let naive: f64 = (0..4usize)
                .map(|i| if (i & k).count_ones() % 2 == 0 { s[i] } else { -s[i] })
                .sum();
            assert!(close(out[k], naive));
        }
    }

    #[test]
    fn costs_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
            for _ in 0..20 {
                let y: Vec<f64> = (0..16).map(|_| rng.random_range(-4.0..4.0)).collect();
                let u: u64 = rng.random::<u64>() & 0xFFFF;
                let (costs, _) = run_block(kind, &y, u);
                assert_eq!(costs, kind.table_costs(), "{kind:?}");
            }
        }
        assert_eq!(K1_COSTS.iter().sum::<u64>(), 447);
        assert_eq!(K2_COSTS.iter().sum::<u64>(), 181);
    }

    #[test]
    fn matches_generic_and_bruteforce() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
            let k = kind.kernel();
            let mut g = GenericProcessor::new(&k).unwrap();
            for _ in 0..300 {
                let y: Vec<f64> = (0..16).map(|_| rng.random_range(-4.0..4.0)).collect();
                let u: u64 = rng.random::<u64>() & 0xFFFF;
                let (_, fast) = run_block(kind, &y, u);
                let brute = kernel_llrs_bruteforce(&k, u, &y);
                g.load(&y);
                let mut ops = OpCounter::new();
                for p in 0..16 {
                    let s = g.llr(&mut ops);
                    g.push(bit(u, p));
                    assert!(close(fast[p], s), "{kind:?} phase {p}: fast {} generic {s}", fast[p]);
                    assert!(close(s, brute[p]));
                }
            }
        }
    }

    #[test]
    fn adversarial_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pool = [0.0, 1.0, -1.0, 2.0, -2.0, crate::arikan::LLR_CLIP, -crate::arikan::LLR_CLIP];
        for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
            let k = kind.kernel();
            for _ in 0..300 {
                let y: Vec<f64> = (0..16).map(|_| pool[rng.random_range(0..pool.len())]).collect();
                let u: u64 = rng.random::<u64>() & 0xFFFF;
                let (_, fast) = run_block(kind, &y, u);
                let brute = kernel_llrs_bruteforce(&k, u, &y);
                for p in 0..16 {
                    assert!(close(fast[p], brute[p]), "{kind:?} phase {p}: {} vs {}", fast[p], brute[p]);
                }
            }
        }
    }

    #[test]
    fn ordering_and_report_errors() {
        let mut st = Fast16State::new(Fast16Kernel::K2);
        st.load(&[1.0; 16]);
        let mut ops = OpCounter::new();
        assert!(st.op_report().is_err());
        assert!(matches!(
            st.process_phase(2, 0, &mut ops),
            Err(Error::PhaseOrder { expected: 0, got: 2 })
        ));
        st.process_phase(0, 0, &mut ops).unwrap();
        st.push(1);
        assert_eq!(st.process_phase(1, 0, &mut ops), Err(Error::PrefixConflict(0)));
    }

    #[test]
    fn detect_named_kernels() {
        assert_eq!(Fast16Kernel::detect(&Kernel::k1()), Some(Fast16Kernel::K1));
        assert_eq!(Fast16Kernel::detect(&Kernel::k2()), Some(Fast16Kernel::K2));
        assert_eq!(Fast16Kernel::detect(&Kernel::arikan_power(4)), None);
    }
}
