//! Solver outputs against frozen grid-oracle values and independent scans.

use swexp::grid_oracle::{grid_e_rb, grid_v_rb, GridSpec};
use swexp::rate_functions::breakpoints;
use swexp::solvers::{e_rb, v_ex, v_rb};
use swexp::{CondPmf, Pmf, SolverConfig, Source};

fn sec7() -> Source {
    Source::new(
        Pmf::new(vec![0.2, 0.8]).unwrap(),
        CondPmf::new(vec![vec![0.8, 0.15, 0.05], vec![0.05, 0.15, 0.8]]).unwrap(),
    )
    .unwrap()
}

fn qx() -> Pmf {
    Pmf::new(vec![0.25, 0.75]).unwrap()
}

// Frozen from the grid oracle at resolutions 100 and 200.
const GRID_V_RB: [f64; 2] = [0.206376401669, 0.206201990394];
const GRID_E_RB: [f64; 2] = [0.045417369364, 0.045355200959];

#[test]
fn frozen_grid_values_reproduce() {
    let src = sec7();
    for (i, res) in [100, 200].into_iter().enumerate() {
        let gs = GridSpec::new(res).unwrap();
        let v = grid_v_rb(&src, &qx(), 0.05, 1.0, &gs).unwrap().value;
        assert!((v - GRID_V_RB[i]).abs() < 1e-10, "{v}");
        let e = grid_e_rb(&src, 0.39, 0.002, 0.5, &gs).unwrap().value;
        assert!((e - GRID_E_RB[i]).abs() < 1e-10, "{e}");
    }
}

#[test]
fn v_rb_below_grid_and_within_refinement_slack() {
    let v = v_rb(&sec7(), &qx(), 0.05, 1.0, &SolverConfig::default()).unwrap().value;
    assert!(v <= GRID_V_RB[1] + 1e-9);
    // The grid error shrinks at least as fast as the last refinement step.
    assert!(GRID_V_RB[1] - v <= 2.0 * (GRID_V_RB[0] - GRID_V_RB[1]));
}

#[test]
fn e_rb_below_grid_and_within_refinement_slack() {
    let e = e_rb(&sec7(), 0.39, 0.002, 0.5, &SolverConfig::default()).unwrap().value;
    assert!(e <= GRID_E_RB[1] + 1e-9);
    assert!(GRID_E_RB[1] - e <= 2.0 * (GRID_E_RB[0] - GRID_E_RB[1]));
}

#[test]
fn grid_refinement_is_nested() {
    // Every point of the res-200 grid lies on the res-400 grid.
    let src = sec7();
    let a = grid_v_rb(&src, &qx(), 0.05, 1.0, &GridSpec::new(200).unwrap()).unwrap().value;
    let b = grid_v_rb(&src, &qx(), 0.05, 1.0, &GridSpec::new(400).unwrap()).unwrap().value;
    assert!(b <= a + 1e-12);
}

#[test]
fn v_ex_matches_frozen_value() {
    let v = v_ex(&sec7(), &qx(), 0.2, &SolverConfig::default()).unwrap().value;
    assert!((v - 0.009441557030).abs() < 1e-7, "{v}");
}

#[test]
fn breakpoint_entropy_matches_direct_sum() {
    let src = sec7();
    let q = qx();
    let b = breakpoints(&src, &q, &SolverConfig::default()).unwrap();
    let h: f64 = q.as_slice().iter().map(|p| -p * p.ln()).sum();
    assert!((b.h - h).abs() < 1e-12);
    assert!(b.ee0 <= b.ee_a_rb && b.ee_a_rb <= b.ee_max_rb);
    assert!(b.ee_a_ex <= b.ee_max_ex);
}
