use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vof_lp::{solve_lp, solve_milp, LinearProgram, LpStatus, MilpError};

/// Random mixed-binary instance: `k` binaries gating `k` continuous
/// productions `x_i <= cap_i * u_i`, a demand row and a few side rows.
fn gated_instance(rng: &mut ChaCha8Rng, k: usize) -> LinearProgram {
    let n = 2 * k;
    let mut lp = LinearProgram::new(n);
    let mut total_cap = 0.0;
    for i in 0..k {
        let cap: f64 = rng.gen_range(2.0..10.0);
        total_cap += cap;
        lp.set_cost(i, rng.gen_range(1.0..5.0));
        lp.set_bounds(i, 0.0, cap);
        lp.set_cost(k + i, rng.gen_range(0.0..15.0));
        lp.set_bounds(k + i, 0.0, 1.0);
        lp.add_le_terms(&[(i, 1.0), (k + i, -cap)], 0.0);
    }
    let demand = rng.gen_range(0.1..0.8) * total_cap;
    let all: Vec<(usize, f64)> = (0..k).map(|i| (i, 1.0)).collect();
    lp.add_eq_terms(&all, demand);
    for _ in 0..rng.gen_range(0..3) {
        let a = rng.gen_range(0..k);
        let b = rng.gen_range(0..k);
        if a != b {
            // At most one of two units on.
            lp.add_le_terms(&[(k + a, 1.0), (k + b, 1.0)], 1.0 + rng.gen_range(0..2) as f64);
        }
    }
    lp
}

fn brute_force(lp: &LinearProgram, binaries: &[usize]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for pattern in 0u32..(1 << binaries.len()) {
        let mut fixed = lp.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = f64::from((pattern >> bit) & 1);
            fixed.set_bounds(j, v, v);
        }
        let sol = solve_lp(&fixed).unwrap();
        if sol.status == LpStatus::Optimal {
            best = Some(best.map_or(sol.objective, |b: f64| b.min(sol.objective)));
        }
    }
    best
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..60 {
        let k = rng.gen_range(1..=12);
        let lp = gated_instance(&mut rng, k);
        let binaries: Vec<usize> = (k..2 * k).collect();
        let expected = brute_force(&lp, &binaries);
        match (solve_milp(&lp, &binaries), expected) {
            (Ok(sol), Some(best)) => {
                assert!((sol.objective() - best).abs() <= 1e-7 * (1.0 + best.abs()), "case {case}: {} vs {best}", sol.objective());
                assert!(sol.relaxation_bound <= sol.objective() + 1e-9, "case {case}");
                for &j in &binaries {
                    let v = sol.incumbent.x[j];
                    assert!((v - v.round()).abs() <= 1e-6, "case {case}: u{j} = {v}");
                }
            }
            (Err(MilpError::Infeasible), None) => {}
            (got, want) => panic!("case {case}: got {got:?}, enumeration {want:?}"),
        }
    }
}
