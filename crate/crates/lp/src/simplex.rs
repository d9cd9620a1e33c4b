//! Bounded-variable revised simplex on a dense explicit basis inverse.
//!
//! Every row is turned into an equality: `<=` rows get a slack in
//! `[0, +inf)`, and rows whose initial residual cannot be carried by a slack
//! get an artificial. Phase 1 drives the artificials to zero, after which
//! they are fixed at `[0, 0]` and phase 2 optimizes the real objective.
//!
//! Pricing uses Devex reference weights with a two-pass Harris ratio
//! test; after a run of degenerate pivots the solver falls back to Bland's
//! rule until it makes progress again.

use crate::problem::LinearProgram;
use crate::{LpError, LpSolution, LpStatus};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_LIMIT: usize = 50;
const REFRESH_EVERY: usize = 64;
const REINVERT_EVERY: usize = 512;
/// Pivots smaller than this (relative to the largest entry of the column)
/// are only taken from a freshly reinverted basis.
const SMALL_PIVOT: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
}

enum Step {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    /// Row-major `m x m`.
    binv: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    /// Devex pricing weights, one per column.
    weights: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    since_refresh: usize,
    since_reinvert: usize,
}

pub(crate) fn solve(lp: &LinearProgram, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    let m_eq = lp.eq_rows.len();
    let m_ub = lp.ub_rows.len();
    let m = m_eq + m_ub;

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut b = Vec::with_capacity(m);
    for (i, row) in lp.eq_rows.iter().chain(&lp.ub_rows).enumerate() {
        for (j, &a) in row.coeffs.iter().enumerate() {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
        b.push(row.rhs);
    }

    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    let mut x = Vec::with_capacity(n + m);
    let mut state = Vec::with_capacity(n + m);
    for j in 0..n {
        let (v, s) = initial_position(lo[j], hi[j]);
        x.push(v);
        state.push(s);
    }

    let mut residual = b.clone();
    for (j, col) in cols.iter().enumerate() {
        if x[j] != 0.0 {
            for &(i, a) in col {
                residual[i] -= a * x[j];
            }
        }
    }

    // Slacks for the inequality rows.
    for i in 0..m_ub {
        cols.push(vec![(m_eq + i, 1.0)]);
        lo.push(0.0);
        hi.push(f64::INFINITY);
        x.push(0.0);
        state.push(State::Lower);
    }

    let mut basis = vec![usize::MAX; m];
    let mut binv = vec![0.0; m * m];
    let mut artificials = Vec::new();
    for i in 0..m {
        let r = residual[i];
        if i >= m_eq && r >= 0.0 {
            let slack = n + (i - m_eq);
            basis[i] = slack;
            x[slack] = r;
            state[slack] = State::Basic;
            binv[i * m + i] = 1.0;
        } else {
            let sign = if r >= 0.0 { 1.0 } else { -1.0 };
            let j = cols.len();
            cols.push(vec![(i, sign)]);
            lo.push(0.0);
            hi.push(f64::INFINITY);
            x.push(r.abs());
            state.push(State::Basic);
            basis[i] = j;
            binv[i * m + i] = sign;
            artificials.push(j);
        }
    }

    let total = cols.len();
    let mut sx = Simplex {
        m,
        cols,
        b,
        lo,
        hi,
        cost: vec![0.0; total],
        x,
        state,
        basis,
        binv,
        y: vec![0.0; m],
        d: vec![0.0; total],
        weights: vec![1.0; total],
        iterations: 0,
        max_iterations: 50_000 + 20 * (m + total),
        since_refresh: 0,
        since_reinvert: 0,
    };

    if !artificials.is_empty() {
        for &j in &artificials {
            sx.cost[j] = 1.0;
        }
        sx.refresh();
        match sx.run()? {
            Step::Optimal => {}
            Step::Unbounded => {
                return Err(LpError::NumericalFailure("phase 1 reported an unbounded ray".into()));
            }
        }
        let infeasibility: f64 = artificials.iter().map(|&j| sx.x[j].max(0.0)).sum();
        let scale = 1.0 + sx.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if infeasibility > 1e-9 * scale {
            return Ok(LpSolution::without_certificate(LpStatus::Infeasible, sx.iterations));
        }
        for &j in &artificials {
            sx.cost[j] = 0.0;
            sx.hi[j] = 0.0;
            if sx.state[j] != State::Basic {
                sx.x[j] = 0.0;
                sx.state[j] = State::Lower;
            }
        }
    }

    sx.cost[..n].copy_from_slice(&lp.objective);
    sx.weights.iter_mut().for_each(|w| *w = 1.0);
    sx.refresh();
    match sx.run()? {
        Step::Unbounded => Ok(LpSolution::without_certificate(LpStatus::Unbounded, sx.iterations)),
        Step::Optimal => Ok(sx.extract(lp, n, m_eq)),
    }
}

fn initial_position(lo: f64, hi: f64) -> (f64, State) {
    if lo.is_finite() {
        (lo, State::Lower)
    } else if hi.is_finite() {
        (hi, State::Upper)
    } else {
        (0.0, State::Free)
    }
}

impl Simplex {
    fn run(&mut self) -> Result<Step, LpError> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut reinverted_at_end = false;
        let mut fresh_inverse = false;
        // Columns whose only blocking pivot was tiny even on a fresh inverse
        // sit out until the next successful pivot.
        let mut rejected: Vec<usize> = Vec::new();
        let mut accept_small = false;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::NumericalFailure(format!(
                    "no convergence within {} iterations",
                    self.max_iterations
                )));
            }
            if self.since_reinvert >= REINVERT_EVERY && self.m <= 400 {
                self.reinvert()?;
                self.refresh();
                fresh_inverse = true;
            } else if self.since_refresh >= REFRESH_EVERY {
                self.refresh();
            }

            let Some((q, dir)) = self.choose_entering(bland, &rejected) else {
                if !rejected.is_empty() {
                    self.reinvert()?;
                    self.refresh();
                    fresh_inverse = true;
                    rejected.clear();
                    if self.choose_entering(bland, &rejected).is_some() {
                        // Nothing else improves; take the small pivot after all.
                        accept_small = true;
                        continue;
                    }
                }
                // Recompute from the inverse before trusting the optimality test.
                self.refresh();
                if self.choose_entering(bland, &rejected).is_some() {
                    continue;
                }
                let cost_scale = 1.0 + self.cost.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
                if self.max_primal_violation() > 1e-7
                    || self.row_residual() > 1e-9 * self.rhs_scale()
                    || self.basic_dual_residual() > 1e-9 * cost_scale
                {
                    if reinverted_at_end {
                        return Err(LpError::NumericalFailure("basic solution drifted out of bounds".into()));
                    }
                    reinverted_at_end = true;
                    self.reinvert()?;
                    self.refresh();
                    fresh_inverse = true;
                    continue;
                }
                return Ok(Step::Optimal);
            };

            self.iterations += 1;
            self.since_refresh += 1;
            self.since_reinvert += 1;

            let alpha = self.ftran(q);
            let span = self.hi[q] - self.lo[q];
            let choice = if bland {
                self.ratio_bland(&alpha, dir)
            } else {
                self.ratio_harris(&alpha, dir)
            };

            let (theta, leave) = match choice {
                None if span.is_infinite() => return Ok(Step::Unbounded),
                None => (span, None),
                Some((theta_limit, _, _)) if span <= theta_limit => (span, None),
                Some((_, theta, r)) => (theta, Some(r)),
            };

            if let Some(r) = leave {
                let amax = alpha.iter().fold(0.0_f64, |acc, a| acc.max(a.abs()));
                if !accept_small && alpha[r].abs() < SMALL_PIVOT * amax.max(1.0) {
                    if fresh_inverse {
                        rejected.push(q);
                        continue;
                    }
                    self.reinvert()?;
                    self.refresh();
                    fresh_inverse = true;
                    continue;
                }
            }

            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            if theta > 0.0 {
                for (r, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        self.x[self.basis[r]] -= dir * theta * a;
                    }
                }
                self.x[q] += dir * theta;
            }

            match leave {
                None => {
                    // Bound flip: the entering variable crosses to its other bound.
                    if dir > 0.0 {
                        self.x[q] = self.hi[q];
                        self.state[q] = State::Upper;
                    } else {
                        self.x[q] = self.lo[q];
                        self.state[q] = State::Lower;
                    }
                }
                Some(r) => {
                    self.pivot(q, r, dir, &alpha);
                    fresh_inverse = false;
                    accept_small = false;
                    rejected.clear();
                }
            }
        }
    }

    fn choose_entering(&self, bland: bool, rejected: &[usize]) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.cols.len() {
            if rejected.contains(&j) {
                continue;
            }
            let dj = self.d[j];
            let dir = match self.state[j] {
                State::Basic => continue,
                _ if self.hi[j] <= self.lo[j] => continue,
                State::Lower if dj < -DUAL_TOL => 1.0,
                State::Upper if dj > DUAL_TOL => -1.0,
                State::Free if dj.abs() > DUAL_TOL => -dj.signum(),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj * dj / self.weights[j];
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn ftran(&self, q: usize) -> Vec<f64> {
        let m = self.m;
        let col = &self.cols[q];
        let mut alpha = vec![0.0; m];
        for (r, out) in alpha.iter_mut().enumerate() {
            let row = &self.binv[r * m..(r + 1) * m];
            let mut s = 0.0;
            for &(i, a) in col {
                s += row[i] * a;
            }
            *out = s;
        }
        alpha
    }

    /// Returns `(theta_limit, theta, row)`: the relaxed step bound used to
    /// compare against a bound flip, the actual step and the leaving row.
    fn ratio_harris(&self, alpha: &[f64], dir: f64) -> Option<(f64, f64, usize)> {
        let mut limit = f64::INFINITY;
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let delta = -dir * a;
            let t = if delta < 0.0 {
                if !self.lo[var].is_finite() {
                    continue;
                }
                (self.x[var] - self.lo[var] + PRIMAL_TOL) / -delta
            } else {
                if !self.hi[var].is_finite() {
                    continue;
                }
                (self.hi[var] - self.x[var] + PRIMAL_TOL) / delta
            };
            limit = limit.min(t);
        }
        if limit.is_infinite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut best_mag = 0.0;
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let delta = -dir * a;
            let t = if delta < 0.0 {
                if !self.lo[var].is_finite() {
                    continue;
                }
                (self.x[var] - self.lo[var]) / -delta
            } else {
                if !self.hi[var].is_finite() {
                    continue;
                }
                (self.hi[var] - self.x[var]) / delta
            };
            if t <= limit && a.abs() > best_mag {
                best_mag = a.abs();
                best = Some((r, t.max(0.0)));
            }
        }
        best.map(|(r, t)| (limit, t, r))
    }

    fn ratio_bland(&self, alpha: &[f64], dir: f64) -> Option<(f64, f64, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (r, &a) in alpha.iter().enumerate() {
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let var = self.basis[r];
            let delta = -dir * a;
            let t = if delta < 0.0 {
                if !self.lo[var].is_finite() {
                    continue;
                }
                (self.x[var] - self.lo[var]) / -delta
            } else {
                if !self.hi[var].is_finite() {
                    continue;
                }
                (self.hi[var] - self.x[var]) / delta
            };
            let t = t.max(0.0);
            best = match best {
                None => Some((r, t)),
                Some((br, bt)) => {
                    if t < bt - 1e-12 || (t <= bt + 1e-12 && var < self.basis[br]) {
                        Some((r, t))
                    } else {
                        Some((br, bt))
                    }
                }
            };
        }
        best.map(|(r, t)| (t, t, r))
    }

    fn pivot(&mut self, q: usize, r: usize, dir: f64, alpha: &[f64]) {
        let m = self.m;
        let leaving = self.basis[r];
        let delta = -dir * alpha[r];
        if delta < 0.0 {
            self.x[leaving] = self.lo[leaving];
            self.state[leaving] = State::Lower;
        } else {
            self.x[leaving] = self.hi[leaving];
            self.state[leaving] = if self.hi[leaving] > self.lo[leaving] { State::Upper } else { State::Lower };
        }

        let pivot = alpha[r];
        let rho: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / pivot).collect();
        for (i, &a) in alpha.iter().enumerate() {
            if i == r || a == 0.0 {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (dst, &p) in row.iter_mut().zip(&rho) {
                *dst -= a * p;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&rho);

        let dq = self.d[q];
        let wq = self.weights[q];
        for (j, col) in self.cols.iter().enumerate() {
            if (self.state[j] == State::Basic && j != leaving) || j == q {
                continue;
            }
            let mut s = 0.0;
            for &(i, a) in col {
                s += rho[i] * a;
            }
            if s != 0.0 {
                self.d[j] -= dq * s;
                if j != leaving {
                    self.weights[j] = self.weights[j].max(s * s * wq);
                }
            }
        }
        for (yi, &p) in self.y.iter_mut().zip(&rho) {
            *yi += dq * p;
        }
        self.weights[leaving] = (wq / (pivot * pivot)).max(1.0);
        self.d[q] = 0.0;
        self.basis[r] = q;
        self.state[q] = State::Basic;
    }

    /// Recomputes the basic values, row duals and reduced costs from the
    /// current inverse.
    fn refresh(&mut self) {
        let m = self.m;
        let mut res = self.b.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for &(i, a) in col {
                    res[i] -= a * self.x[j];
                }
            }
        }
        for r in 0..m {
            let row = &self.binv[r * m..(r + 1) * m];
            self.x[self.basis[r]] = row.iter().zip(&res).map(|(p, v)| p * v).sum();
        }
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yk, &p) in self.y.iter_mut().zip(row) {
                    *yk += cb * p;
                }
            }
        }
        for (j, col) in self.cols.iter().enumerate() {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - col.iter().map(|&(i, a)| self.y[i] * a).sum::<f64>()
            };
        }
        self.since_refresh = 0;
    }

    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut mat = vec![0.0; m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[j] {
                mat[i * m + r] = a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let (p, pv) = (c..m)
                .map(|i| (i, mat[i * m + c].abs()))
                .fold((c, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            if pv < 1e-12 {
                return Err(LpError::NumericalFailure("singular basis during reinversion".into()));
            }
            if p != c {
                for k in 0..m {
                    mat.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let piv = mat[c * m + c];
            for k in 0..m {
                mat[c * m + k] /= piv;
                inv[c * m + k] /= piv;
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = mat[i * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    mat[i * m + k] -= f * mat[c * m + k];
                    inv[i * m + k] -= f * inv[c * m + k];
                }
            }
        }
        // `inv` now maps row space onto basis positions: B^{-1}[r][i].
        self.binv = inv;
        self.since_reinvert = 0;
        Ok(())
    }

    fn rhs_scale(&self) -> f64 {
        1.0 + self.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest `|c_j - y·a_j|` over basic columns, zero in exact arithmetic.
    fn basic_dual_residual(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| (self.cost[j] - self.cols[j].iter().map(|&(i, a)| self.y[i] * a).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|b - A x|` over all rows, slacks and artificials included.
    fn row_residual(&self) -> f64 {
        let mut res = self.b.clone();
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                res[i] -= a * self.x[j];
            }
        }
        res.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn max_primal_violation(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| {
                let v = self.x[j];
                let below = if self.lo[j].is_finite() { (self.lo[j] - v) / (1.0 + self.lo[j].abs()) } else { 0.0 };
                let above = if self.hi[j].is_finite() { (v - self.hi[j]) / (1.0 + self.hi[j].abs()) } else { 0.0 };
                below.max(above).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    fn extract(&self, lp: &LinearProgram, n: usize, m_eq: usize) -> LpSolution {
        let mut x: Vec<f64> = self.x[..n].to_vec();
        // Snap values sitting within tolerance of a bound onto it.
        for j in 0..n {
            if self.lo[j].is_finite() && (x[j] - self.lo[j]).abs() <= PRIMAL_TOL {
                x[j] = self.lo[j];
            }
            if self.hi[j].is_finite() && (x[j] - self.hi[j]).abs() <= PRIMAL_TOL {
                x[j] = self.hi[j];
            }
        }
        let eq_duals = self.y[..m_eq].to_vec();
        let ineq_duals: Vec<f64> = self.y[m_eq..].iter().map(|v| -v).collect();
        let mut lower_duals = vec![0.0; n];
        let mut upper_duals = vec![0.0; n];
        for j in 0..n {
            let dj = self.d[j];
            match self.state[j] {
                State::Basic | State::Free => {}
                State::Lower if dj >= 0.0 || self.hi[j] > self.lo[j] => lower_duals[j] = dj,
                State::Lower => upper_duals[j] = -dj,
                State::Upper => upper_duals[j] = -dj,
            }
        }
        let mut basis = self.basis.clone();
        basis.sort_unstable();
        LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective_value(&x),
            x,
            eq_duals,
            ineq_duals,
            lower_duals,
            upper_duals,
            basis,
            iterations: self.iterations,
        }
    }
}
