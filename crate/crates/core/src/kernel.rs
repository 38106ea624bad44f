//! Polarization kernels and their decomposition into the Arikan transform.
//!
//! A kernel `K` of size `l = 2^t` is written as `K = T * F2^{⊗t}`. The inputs
//! `u` of the kernel and `v = u T` of the Arikan transform are linked by a
//! constraint matrix which, brought into minimum-span form, tells for every
//! phase which `v` symbols are pinned by the decided prefix and which remain
//! free (the decoding window).

use std::fmt::Write as _;

use crate::binmat::{arikan_f2, BinMatrix};
use crate::error::{Error, Result};

const K1_ROWS: [&str; 16] = [
    "1000000000000000",
    "1100000000000000",
    "1010000000000000",
    "1000100000000000",
    "1000000010000000",
    "1100000011000000",
    "1100110000000000",
    "1111000000000000",
    "1000100010001000",
    "1010011011000000",
    "0110110010100000",
    "1111111100000000",
    "1111000011110000",
    "1100110011001100",
    "1010101010101010",
    "1111111111111111",
];

/// Row permutation taking K1 to K2: row `i` of K2 is row `SIGMA[i]` of K1.
pub const SIGMA: [usize; 16] = [0, 1, 2, 7, 3, 4, 5, 6, 9, 10, 11, 12, 8, 13, 14, 15];

/// BEC scaling exponents of the named kernels. Metadata only; not computed here.
pub const K1_SCALING_EXPONENT: f64 = 3.346;
pub const K2_SCALING_EXPONENT: f64 = 3.45;

#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    name: String,
    matrix: BinMatrix,
    rows: Vec<u64>,
    scaling_exponent: Option<f64>,
}

impl Kernel {
    /// Validates a user supplied kernel: square, at most 64x64, invertible and
    /// not upper-triangular under any column permutation.
    pub fn new(name: impl Into<String>, matrix: BinMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidKernel(format!(
                "kernel must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let l = matrix.rows();
        if !(2..=64).contains(&l) {
            return Err(Error::InvalidKernel(format!("kernel size {l} outside 2..=64")));
        }
        matrix.invert().map_err(|_| Error::InvalidKernel("kernel is singular".into()))?;
        if column_permutable_to_upper_triangular(&matrix) {
            return Err(Error::InvalidKernel(
                "kernel is upper-triangular under a column permutation".into(),
            ));
        }
        let rows = (0..l).map(|r| matrix.row_mask(r)).collect();
        Ok(Self {
            name: name.into(),
            matrix,
            rows,
            scaling_exponent: None,
        })
    }

    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Self> {
        Self::new(name, BinMatrix::parse(text)?)
    }

    /// The Arikan kernel `F2`.
    pub fn arikan() -> Self {
        Self::new("arikan", arikan_f2()).expect("F2 is a valid kernel")
    }

    /// `F2^{⊗t}` viewed as a single `2^t x 2^t` kernel.
    pub fn arikan_power(t: u32) -> Self {
        Self::new(format!("arikan{}", 1usize << t), arikan_f2().kron_power(t))
            .expect("Kronecker powers of F2 are valid kernels")
    }

    pub fn k1() -> Self {
        let rows: Vec<Vec<u8>> = K1_ROWS
            .iter()
            .map(|r| r.bytes().map(|b| b - b'0').collect())
            .collect();
        let mut k = Self::new("k1", BinMatrix::from_rows(&rows).expect("static"))
            .expect("K1 is a valid kernel");
        k.scaling_exponent = Some(K1_SCALING_EXPONENT);
        k
    }

    pub fn k2() -> Self {
        let m = Self::k1().matrix.permute_rows(&SIGMA).expect("static");
        let mut k = Self::new("k2", m).expect("K2 is a valid kernel");
        k.scaling_exponent = Some(K2_SCALING_EXPONENT);
        k
    }

    /// Resolves `k1`, `k2`, `arikan`, or a path (optionally prefixed `file:`).
    pub fn by_name(spec: &str) -> Result<Self> {
        match spec {
            "k1" | "K1" => Ok(Self::k1()),
            "k2" | "K2" => Ok(Self::k2()),
            "arikan" | "f2" | "F2" => Ok(Self::arikan()),
            "arikan16" => Ok(Self::arikan_power(4)),
            other => {
                let path = other.strip_prefix("file:").unwrap_or(other);
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{path}: {e}")))?;
                Self::from_text(path, &text)
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn matrix(&self) -> &BinMatrix {
        &self.matrix
    }

    /// Row `i` as a bit mask over columns.
    pub fn row(&self, i: usize) -> u64 {
        self.rows[i]
    }

    pub fn scaling_exponent(&self) -> Option<f64> {
        self.scaling_exponent
    }

    /// `log2 l`, when `l` is a power of two.
    pub fn log2_size(&self) -> Option<u32> {
        let l = self.size();
        l.is_power_of_two().then(|| l.trailing_zeros())
    }

    /// Encodes `u` (bit `i` = `u_i`) into `uK` (bit `j` = `c_j`).
    #[inline]
    pub fn encode_mask(&self, mut u: u64) -> u64 {
        let mut c = 0;
        while u != 0 {
            let i = u.trailing_zeros() as usize;
            c ^= self.rows[i];
            u &= u - 1;
        }
        c
    }

    pub fn encode(&self, u: &[u8]) -> Vec<u8> {
        let mask = bits_to_mask(u);
        mask_to_bits(self.encode_mask(mask), self.size())
    }

    /// Returns `T` with `T * F2^{⊗t} = K`.
    pub fn decompose(&self) -> Result<BinMatrix> {
        let t = self.log2_size().ok_or(Error::NotPowerOfTwo(self.size()))?;
        // F2^{⊗t} is an involution.
        self.matrix.multiply(&arikan_f2().kron_power(t))
    }

    pub fn window_plan(&self) -> Result<WindowPlan> {
        WindowPlan::new(self)
    }

    pub fn profile(&self) -> KernelProfile {
        KernelProfile::new(self)
    }
}

/// Greedy peeling: a column permutation making `m` upper-triangular exists
/// iff the last remaining row always has exactly one nonzero among the
/// remaining columns.
fn column_permutable_to_upper_triangular(m: &BinMatrix) -> bool {
    let l = m.rows();
    let mut live: u64 = if l == 64 { u64::MAX } else { (1u64 << l) - 1 };
    for r in (0..l).rev() {
        let row = m.row_mask(r) & live;
        if row.count_ones() != 1 {
            return false;
        }
        live &= !row;
    }
    true
}

pub(crate) fn bits_to_mask(bits: &[u8]) -> u64 {
    bits.iter()
        .enumerate()
        .fold(0u64, |acc, (i, &b)| acc | (((b & 1) as u64) << i))
}

pub(crate) fn mask_to_bits(mask: u64, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((mask >> i) & 1) as u8).collect()
}

#[inline]
pub(crate) fn parity(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

/// One row of the minimum-span constraint system:
/// `u_phase = XOR_{s in u_terms} u_s  XOR  XOR_{t in v_terms} v_t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseConstraint {
    pub phase: usize,
    /// Bit `s` set for every earlier kernel input `u_s` in the expression.
    pub u_terms: u64,
    /// Bit `t` set for every Arikan input `v_t` in the expression.
    pub v_terms: u64,
    /// Largest `t` in `v_terms`.
    pub j: usize,
}

#[derive(Clone, Debug)]
pub struct WindowPlan {
    l: usize,
    t: u32,
    constraints: Vec<PhaseConstraint>,
    horizons: Vec<usize>,
    windows: Vec<u64>,
    /// Column `phi` of `T^-1` as a mask over `v`: `u_phi = parity(v & inv_cols[phi])`.
    inv_cols: Vec<u64>,
    /// `owner[t]` is the phase whose constraint ends at `v_t`.
    owner: Vec<usize>,
}

impl WindowPlan {
    fn new(kernel: &Kernel) -> Result<Self> {
        let l = kernel.size();
        let t = kernel.log2_size().ok_or(Error::NotPowerOfTwo(l))?;
        let tm = kernel.decompose()?;
        let tinv = tm.invert()?;
        let s = tm.transpose().reverse_cols();
        let theta = s.hconcat(&BinMatrix::identity(l))?.min_span_form()?;

        let mut constraints = Vec::with_capacity(l);
        for phase in 0..l {
            let r = l - 1 - phase;
            let mut u_terms = 0u64;
            for s in 0..phase {
                if theta.get(r, l - 1 - s) {
                    u_terms |= 1 << s;
                }
            }
            let mut v_terms = 0u64;
            for t in 0..l {
                if theta.get(r, l + t) {
                    v_terms |= 1 << t;
                }
            }
            let z = theta.trailing(r).expect("full rank");
            debug_assert!(z >= l);
            constraints.push(PhaseConstraint {
                phase,
                u_terms,
                v_terms,
                j: z - l,
            });
        }

        let mut horizons = Vec::with_capacity(l);
        let mut windows = Vec::with_capacity(l);
        let mut owner = vec![usize::MAX; l];
        let mut h = 0;
        let mut pinned = 0u64;
        for c in &constraints {
            h = h.max(c.j);
            pinned |= 1 << c.j;
            owner[c.j] = c.phase;
            horizons.push(h);
            windows.push(low_mask(h + 1) & !pinned);
        }
        let inv_cols = (0..l)
            .map(|phi| (0..l).filter(|&t| tinv.get(t, phi)).fold(0u64, |m, t| m | (1 << t)))
            .collect();

        Ok(Self {
            l,
            t,
            constraints,
            horizons,
            windows,
            inv_cols,
            owner,
        })
    }

    pub fn size(&self) -> usize {
        self.l
    }

    pub fn log2_size(&self) -> u32 {
        self.t
    }

    pub fn constraint(&self, phase: usize) -> &PhaseConstraint {
        &self.constraints[phase]
    }

    pub fn constraints(&self) -> &[PhaseConstraint] {
        &self.constraints
    }

    pub fn horizon(&self, phase: usize) -> usize {
        self.horizons[phase]
    }

    /// Decoding window `D_phase` as a bit mask over `v` indices.
    pub fn window_mask(&self, phase: usize) -> u64 {
        self.windows[phase]
    }

    pub fn window(&self, phase: usize) -> Vec<usize> {
        mask_indices(self.windows[phase])
    }

    pub fn window_size(&self, phase: usize) -> usize {
        self.windows[phase].count_ones() as usize
    }

    pub fn max_window(&self) -> usize {
        (0..self.l).map(|p| self.window_size(p)).max().unwrap_or(0)
    }

    /// Mask of the `v` symbols entering the pure-`v` expression of `u_phase`.
    pub fn inverse_column(&self, phase: usize) -> u64 {
        self.inv_cols[phase]
    }

    /// Value of `u_phase` implied by the Arikan inputs `v`.
    #[inline]
    pub fn u_from_v(&self, phase: usize, v: u64) -> u8 {
        parity(v & self.inv_cols[phase])
    }

    /// Completes `v_0..v_{h_phase}` from the decided prefix `u_0..u_{phase-1}`
    /// (bits of `u_prefix`), the hypothesis `u_phase = b`, and an assignment
    /// of the window: bit `k` of `free` goes to the `k`-th smallest index in
    /// `D_phase`.
    pub fn resolve_v(&self, phase: usize, u_prefix: u64, b: u8, free: u64) -> u64 {
        let u = (u_prefix & low_mask(phase)) | ((b as u64 & 1) << phase);
        let window = self.windows[phase];
        let mut v = 0u64;
        let mut k = 0;
        for t in 0..=self.horizons[phase] {
            let bit = if window >> t & 1 == 1 {
                let bit = (free >> k) & 1;
                k += 1;
                bit
            } else {
                let c = &self.constraints[self.owner[t]];
                debug_assert!(c.phase <= phase);
                let rest = c.v_terms & !(1 << t);
                ((u >> c.phase) & 1) ^ parity(c.u_terms & u) as u64 ^ parity(rest & v) as u64
            };
            v |= bit << t;
        }
        v
    }

    /// The `v` symbols fixed by a decided prefix `u_0..u_{phase-1}` alone:
    /// returns `(values, known)` masks. A pinned `v_t` whose constraint also
    /// involves window symbols stays unknown.
    pub fn decided_v(&self, phase: usize, u_prefix: u64) -> (u64, u64) {
        let mut pinned = 0u64;
        for c in &self.constraints[..phase] {
            pinned |= 1 << c.j;
        }
        let mut known = 0u64;
        let mut v = 0u64;
        for t in mask_indices(pinned) {
            let c = &self.constraints[self.owner[t]];
            let rest = c.v_terms & !(1 << t);
            if rest & !known != 0 {
                continue;
            }
            let bit = ((u_prefix >> c.phase) & 1)
                ^ parity(c.u_terms & u_prefix) as u64
                ^ parity(rest & v) as u64;
            v |= bit << t;
            known |= 1 << t;
        }
        (v, known)
    }

    /// Table form of `u_phase` in terms of `v` only, e.g. `u5 = v6+v9`.
    pub fn pure_v_expression(&self, phase: usize) -> String {
        let terms: Vec<String> = mask_indices(self.inv_cols[phase])
            .into_iter()
            .map(|t| format!("v{t}"))
            .collect();
        format!("u{phase} = {}", terms.join("+"))
    }

    /// Minimum-span constraint form, which may involve earlier `u`s,
    /// e.g. `u10 = u6+u9+v5`.
    pub fn constraint_expression(&self, phase: usize) -> String {
        let c = &self.constraints[phase];
        let mut terms: Vec<String> = mask_indices(c.u_terms)
            .into_iter()
            .map(|s| format!("u{s}"))
            .collect();
        terms.extend(mask_indices(c.v_terms).into_iter().map(|t| format!("v{t}")));
        format!("u{phase} = {}", terms.join("+"))
    }

    /// Window in set notation, e.g. `{3,5,6,7}`.
    pub fn window_string(&self, phase: usize) -> String {
        let items: Vec<String> = self.window(phase).iter().map(|t| t.to_string()).collect();
        format!("{{{}}}", items.join(","))
    }
}

#[inline]
pub(crate) fn low_mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

pub(crate) fn mask_indices(mut m: u64) -> Vec<usize> {
    let mut out = Vec::new();
    while m != 0 {
        out.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelProfile {
    pub partial_distances: Vec<u32>,
    pub polarization_rate: f64,
}

impl KernelProfile {
    fn new(kernel: &Kernel) -> Self {
        let l = kernel.size();
        let partial_distances: Vec<u32> = (0..l).map(|i| partial_distance(kernel, i)).collect();
        let log_l = (l as f64).ln();
        let polarization_rate = partial_distances
            .iter()
            .map(|&d| (d as f64).ln() / log_l)
            .sum::<f64>()
            / l as f64;
        Self {
            partial_distances,
            polarization_rate,
        }
    }
}

/// Minimum weight of `row_i + span(row_{i+1}, ..., row_{l-1})`, enumerated
/// in Gray-code order.
fn partial_distance(kernel: &Kernel, i: usize) -> u32 {
    let l = kernel.size();
    let later: Vec<u64> = (i + 1..l).map(|r| kernel.row(r)).collect();
    let mut word = kernel.row(i);
    let mut best = word.count_ones();
    let count: u64 = 1 << later.len();
    for g in 1..count {
        word ^= later[g.trailing_zeros() as usize];
        best = best.min(word.count_ones());
    }
    best
}

/// Report table: one row per phase, ready for aligned text or CSV output.
pub fn analysis_report(kernel: &Kernel, costs: Option<&[u64]>) -> Result<(String, String)> {
    let plan = kernel.window_plan()?;
    let prof = kernel.profile();
    let l = kernel.size();
    let mut text = String::new();
    let mut csv = String::from("phase,u_phi,constraint,j,h,window,window_size,cost,partial_distance\n");
    writeln!(text, "kernel {} ({l}x{l})", kernel.name()).ok();
    writeln!(
        text,
        "{:>5}  {:<22} {:<24} {:>3} {:>3}  {:<14} {:>3} {:>6} {:>4}",
        "phase", "u_phi", "constraint", "j", "h", "D", "|D|", "cost", "d"
    )
    .ok();
    for p in 0..l {
        let cost = costs.map(|c| c[p].to_string()).unwrap_or_else(|| "-".into());
        let c = plan.constraint(p);
        writeln!(
            text,
            "{:>5}  {:<22} {:<24} {:>3} {:>3}  {:<14} {:>3} {:>6} {:>4}",
            p,
            plan.pure_v_expression(p),
            plan.constraint_expression(p),
            c.j,
            plan.horizon(p),
            plan.window_string(p),
            plan.window_size(p),
            cost,
            prof.partial_distances[p]
        )
        .ok();
        writeln!(
            csv,
            "{},{},{},{},{},\"{}\",{},{},{}",
            p,
            plan.pure_v_expression(p),
            plan.constraint_expression(p),
            c.j,
            plan.horizon(p),
            plan.window_string(p),
            plan.window_size(p),
            cost,
            prof.partial_distances[p]
        )
        .ok();
    }
    writeln!(text, "max |D| = {}", plan.max_window()).ok();
    if let Some(c) = costs {
        writeln!(text, "total cost = {}", c.iter().sum::<u64>()).ok();
    }
    writeln!(text, "polarization rate E(K) = {:.6}", prof.polarization_rate).ok();
    if let Some(mu) = kernel.scaling_exponent() {
        writeln!(text, "BEC scaling exponent (reference value) = {mu}").ok();
    }
    Ok((text, csv))
}
