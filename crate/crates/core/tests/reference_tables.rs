use polar16::fast16::{run_block, Fast16Kernel};
use polar16::Kernel;

// (pure-v expression, window) per phase.
const K1_TABLE: [(&str, &str); 16] = [
    ("v0", "{}"),
    ("v1", "{}"),
    ("v2", "{}"),
    ("v4", "{3}"),
    ("v8", "{3,5,6,7}"),
    ("v6+v9", "{3,5,6,7}"),
    ("v5+v6+v10", "{3,5,6,7}"),
    ("v3", "{5,6,7}"),
    ("v12", "{5,6,7,11}"),
    ("v6", "{5,7,11}"),
    ("v10", "{7,11}"),
    ("v7", "{11}"),
    ("v11", "{}"),
    ("v13", "{}"),
    ("v14", "{}"),
    ("v15", "{}"),
];

const K2_TABLE: [(&str, &str); 16] = [
    ("v0", "{}"),
    ("v1", "{}"),
    ("v2", "{}"),
    ("v3", "{}"),
    ("v4", "{}"),
    ("v8", "{5,6,7}"),
    ("v6+v9", "{5,6,7}"),
    ("v5+v6+v10", "{5,6,7}"),
    ("v6", "{5,7}"),
    ("v10", "{7}"),
    ("v7", "{}"),
    ("v11", "{}"),
    ("v12", "{}"),
    ("v13", "{}"),
    ("v14", "{}"),
    ("v15", "{}"),
];

fn check(kernel: Kernel, table: &[(&str, &str); 16], max_window: usize) {
    let plan = kernel.window_plan().unwrap();
    for (p, (expr, window)) in table.iter().enumerate() {
        assert_eq!(plan.pure_v_expression(p), format!("u{p} = {expr}"), "phase {p}");
        assert_eq!(plan.window_string(p), *window, "phase {p}");
    }
    assert_eq!(plan.max_window(), max_window);
}

#[test]
fn k1_windows_and_expressions() {
    check(Kernel::k1(), &K1_TABLE, 4);
}

#[test]
fn k2_windows_and_expressions() {
    check(Kernel::k2(), &K2_TABLE, 3);
}

#[test]
fn constraint_form_may_carry_earlier_inputs() {
    let p1 = Kernel::k1().window_plan().unwrap();
    assert_eq!(p1.constraint_expression(10), "u10 = u6+u9+v5");
    let p2 = Kernel::k2().window_plan().unwrap();
    assert_eq!(p2.constraint_expression(9), "u9 = u7+u8+v5");
}

#[test]
fn measured_costs() {
    let y: Vec<f64> = (0..16).map(|i| (i as f64 * 0.7).sin() * 3.0).collect();
    let (c1, _) = run_block(Fast16Kernel::K1, &y, 0x5a5a);
    assert_eq!(c1, [15, 1, 3, 21, 127, 48, 95, 1, 127, 1, 1, 1, 1, 1, 3, 1]);
    assert_eq!(c1.iter().sum::<u64>(), 447);
    let (c2, _) = run_block(Fast16Kernel::K2, &y, 0x5a5a);
    assert_eq!(c2, [15, 1, 3, 1, 7, 67, 24, 47, 1, 1, 1, 1, 7, 1, 3, 1]);
    assert_eq!(c2.iter().sum::<u64>(), 181);
}

#[test]
fn polarization_rate() {
    for k in [Kernel::k1(), Kernel::k2()] {
        let e = k.profile().polarization_rate;
        assert!((e - 0.51828).abs() <= 5e-6, "{}: {e}", k.name());
    }
    let f2 = Kernel::arikan().profile().polarization_rate;
    assert!((f2 - 0.5).abs() < 1e-12);
}

#[test]
fn partial_distances() {
    assert_eq!(
        Kernel::k1().profile().partial_distances,
        vec![1, 2, 2, 2, 2, 4, 4, 4, 4, 6, 6, 8, 8, 8, 8, 16]
    );
    assert_eq!(
        Kernel::k2().profile().partial_distances,
        vec![1, 2, 2, 4, 2, 2, 4, 4, 6, 6, 8, 8, 4, 8, 8, 16]
    );
}

#[test]
fn report_lists_every_phase() {
    let (text, csv) = polar16::kernel::analysis_report(&Kernel::k2(), Some(&Fast16Kernel::K2.table_costs())).unwrap();
    assert!(text.contains("total cost = 181"));
    assert_eq!(csv.lines().count(), 17);
    assert!(csv.lines().nth(6).unwrap().starts_with("5,u5 = v8,u5 = v8,8,8,\"{5,6,7}\",3,67,"));
}
