mod common;

use common::*;

#[test]
fn brute_force_hundred_paths() {
    let worst = brute_force_suite(100).unwrap();
    println!("worst discrepancy {worst:.3} grid steps");
    assert!(worst <= 1.0 + 1e-9, "worst discrepancy {worst} grid steps");
}

#[test]
fn e1_golden_values() {
    for (name, got, want) in e1_golden() {
        assert!((got - want).abs() <= 1e-12, "{name}: {got} vs {want}");
    }
}

#[test]
fn grid_oracle_sees_e1_hitting() {
    let g = Grid::new(&e1(), 0.01, &[]);
    let x = g.hitting(-4.0, 0.0).unwrap();
    assert!((x - (2.0 + 5.0 / 6.0)).abs() <= 0.01);
}
