use polar16::arikan::{codeword_score, score_update, LayeredLlrState, LLR_CLIP};
use polar16::fast16::{run_block, Fast16Kernel, Fast16State};
use polar16::winproc::{kernel_llr_bruteforce, kernel_llr_generic, kernel_llrs_bruteforce};
use polar16::{GenericProcessor, Kernel, KernelProcessor, OpCounter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

fn random_y(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..16).map(|_| rng.random_range(-6.0..6.0)).collect()
}

#[test]
fn three_way_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
        let k = kind.kernel();
        let mut g = GenericProcessor::new(&k).unwrap();
        for _ in 0..1000 {
            let y = random_y(&mut rng);
            let u: u64 = rng.random::<u64>() & 0xFFFF;
            let (_, fast) = run_block(kind, &y, u);
            let brute = kernel_llrs_bruteforce(&k, u, &y);
            g.load(&y);
            let mut ops = OpCounter::new();
            for p in 0..16 {
                let s = g.kernel_llr(p, &mut ops).unwrap();
                g.push(((u >> p) & 1) as u8);
                assert!(close(fast[p], s) && close(s, brute[p]), "{kind:?} phase {p}");
            }
        }
    }
}

#[test]
fn one_shot_helpers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let k = Kernel::k2();
    for _ in 0..50 {
        let y = random_y(&mut rng);
        let u: u64 = rng.random::<u64>() & 0xFFFF;
        let p = rng.random_range(0..16);
        let mut ops = OpCounter::new();
        let g = kernel_llr_generic(&k, u, &y, p, &mut ops).unwrap();
        assert!(close(g, kernel_llr_bruteforce(&k, u, &y, p)));
    }
}

#[test]
fn tied_and_saturated_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let pool = [0.0, 0.5, -0.5, 1.0, -1.0, LLR_CLIP, -LLR_CLIP];
    for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
        let k = kind.kernel();
        for _ in 0..500 {
            let y: Vec<f64> = (0..16).map(|_| pool[rng.random_range(0..pool.len())]).collect();
            let u: u64 = rng.random::<u64>() & 0xFFFF;
            let (_, fast) = run_block(kind, &y, u);
            let brute = kernel_llrs_bruteforce(&k, u, &y);
            for p in 0..16 {
                assert!(close(fast[p], brute[p]), "{kind:?} phase {p}");
            }
        }
        let (_, zero) = run_block(kind, &[0.0; 16], 0);
        assert!(zero.iter().all(|&s| s == 0.0));
    }
}

#[test]
fn costs_do_not_depend_on_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
        for _ in 0..100 {
            let y = random_y(&mut rng);
            let (c, _) = run_block(kind, &y, rng.random::<u64>() & 0xFFFF);
            assert_eq!(c, kind.table_costs());
        }
    }
}

#[test]
fn cheap_phases() {
    let y: Vec<f64> = (0..16).map(|i| i as f64 - 7.5).collect();
    let (c1, _) = run_block(Fast16Kernel::K1, &y, 0);
    assert!(c1[7] <= 1);
    let (c2, _) = run_block(Fast16Kernel::K2, &y, 0);
    assert!(c2[8..=10].iter().all(|&c| c <= 1));
}

#[test]
fn out_of_order_phase_is_an_error() {
    let mut st = Fast16State::new(Fast16Kernel::K1);
    st.load(&[1.0; 16]);
    let mut ops = OpCounter::new();
    assert!(st.process_phase(1, 0, &mut ops).is_err());
    assert!(st.process_phase(0, 0, &mut ops).is_ok());
}

// Accumulating tau along any path reproduces the direct codeword score.
#[test]
fn score_identity_all_block_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for t in 1..=4usize {
        let n = 1 << t;
        let mut st = LayeredLlrState::new(t);
        for _ in 0..1000 {
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v: u64 = rng.random::<u64>() & ((1 << n) - 1);
            st.load(&y);
            let mut ops = OpCounter::new();
            let mut r = 0.0;
            for i in 0..n {
                let b = ((v >> i) & 1) as u8;
                r = score_update(r, st.llr(&mut ops), b);
                st.push(b);
            }
            assert!((r - codeword_score(&y, v)).abs() <= 1e-9);
        }
    }
}

#[test]
fn generic_counter_far_above_fast16() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for kind in [Fast16Kernel::K1, Fast16Kernel::K2] {
        let mut g = GenericProcessor::new(&kind.kernel()).unwrap();
        let y = random_y(&mut rng);
        g.load(&y);
        let mut ops = OpCounter::new();
        for _ in 0..16 {
            g.llr(&mut ops);
            g.push(0);
        }
        let fast: u64 = kind.table_costs().iter().sum();
        assert!(ops.total() >= 15 * fast, "{kind:?}: {}", ops.total());
    }
}
