//! Random instance families shared by the certificate tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vof_lp::LinearProgram;

/// A feasible, bounded instance with at most `max_vars` variables and
/// `max_rows` rows. Roughly a third of the instances use small integer data,
/// which makes degenerate vertices common.
pub fn feasible_bounded(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> LinearProgram {
    let n = rng.gen_range(1..=max_vars);
    let integer_data = rng.gen_bool(0.35);
    let coef = |rng: &mut ChaCha8Rng| -> f64 {
        if integer_data {
            rng.gen_range(-3..=3) as f64
        } else if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(-5.0..5.0)
        }
    };

    let mut lp = LinearProgram::new(n);
    let mut x0 = vec![0.0; n];
    for j in 0..n {
        let kind = rng.gen_range(0..10);
        let center: f64 = if integer_data { rng.gen_range(-2..=2) as f64 } else { rng.gen_range(-3.0..3.0) };
        let (lo, hi) = match kind {
            0 => (f64::NEG_INFINITY, f64::INFINITY),
            1 => (center, center),
            2 => (f64::NEG_INFINITY, center + 2.0),
            3 => (center - 2.0, f64::INFINITY),
            _ => (center - rng.gen_range(0.0..3.0_f64).round(), center + rng.gen_range(0.5..4.0_f64).round()),
        };
        lp.set_bounds(j, lo, hi);
        x0[j] = if lo.is_finite() && hi.is_finite() {
            if integer_data {
                ((lo + hi) / 2.0).round().clamp(lo, hi)
            } else {
                rng.gen_range(lo..=hi)
            }
        } else if lo.is_finite() {
            lo + if integer_data { 1.0 } else { rng.gen_range(0.0..2.0) }
        } else if hi.is_finite() {
            hi - if integer_data { 1.0 } else { rng.gen_range(0.0..2.0) }
        } else {
            center
        };
        lp.set_cost(j, coef(rng));
    }

    let open_sided = (0..n).filter(|&j| !lp.lower[j].is_finite() || !lp.upper[j].is_finite()).count();
    let budget = max_rows.saturating_sub(2 * open_sided).max(1);
    let rows = rng.gen_range(budget / 3..=budget);
    for _ in 0..rows {
        let coeffs: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let lhs: f64 = coeffs.iter().zip(&x0).map(|(a, x)| a * x).sum();
        if rng.gen_bool(0.25) && lp.eq_rows.len() < n {
            lp.add_eq(coeffs, lhs);
        } else {
            let slack = if integer_data || rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..3.0) };
            lp.add_le(coeffs, lhs + slack);
        }
    }
    // Bound every variable with an infinite side through rows so the instance
    // stays bounded.
    for j in 0..n {
        if !lp.lower[j].is_finite() || !lp.upper[j].is_finite() {
            let mut up = vec![0.0; n];
            up[j] = 1.0;
            let mut down = vec![0.0; n];
            down[j] = -1.0;
            lp.add_le(up, x0[j].max(0.0) + 6.0);
            lp.add_le(down, (-x0[j]).max(0.0) + 6.0);
        }
    }
    lp
}

/// A feasible instance with two contradictory inequality rows appended.
pub fn contradictory(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> LinearProgram {
    let mut lp = feasible_bounded(rng, max_vars, max_rows.saturating_sub(2).max(4));
    let n = lp.num_vars();
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let beta = rng.gen_range(-3.0..3.0);
    let gap = rng.gen_range(0.5..3.0);
    lp.add_le(a.clone(), beta);
    lp.add_le(a.iter().map(|v| -v).collect(), -beta - gap);
    lp
}

/// A feasible instance extended by two free columns `p`, `q` with
/// `col_q = -col_p` and `c_p + c_q < 0`, so `e_p + e_q` is an improving ray.
pub fn with_free_ray(rng: &mut ChaCha8Rng, max_vars: usize, max_rows: usize) -> LinearProgram {
    let base = feasible_bounded(rng, max_vars.saturating_sub(2).max(1), max_rows);
    let n = base.num_vars();
    let mut lp = LinearProgram::new(n + 2);
    lp.objective[..n].copy_from_slice(&base.objective);
    lp.lower[..n].copy_from_slice(&base.lower);
    lp.upper[..n].copy_from_slice(&base.upper);
    for j in [n, n + 1] {
        lp.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }
    let cp = rng.gen_range(-3.0..3.0);
    lp.set_cost(n, cp);
    lp.set_cost(n + 1, -cp - rng.gen_range(0.5..2.0));
    for row in &base.eq_rows {
        let a = rng.gen_range(-2.0..2.0);
        let mut coeffs = row.coeffs.clone();
        coeffs.extend([a, -a]);
        lp.add_eq(coeffs, row.rhs);
    }
    for row in &base.ub_rows {
        let a = rng.gen_range(-2.0..2.0);
        let mut coeffs = row.coeffs.clone();
        coeffs.extend([a, -a]);
        lp.add_le(coeffs, row.rhs);
    }
    lp
}
