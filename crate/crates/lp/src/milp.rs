//! Depth-first branch-and-bound over [`solve_lp`](crate::solve_lp).
//!
//! The search dives into the child nearest to the fractional value, branches
//! on the most fractional variable, and on backtrack resumes the open node
//! with the lowest parent bound.

use thiserror::Error;

use crate::{solve_lp_with_bounds, LinearProgram, LpError, LpSolution, LpStatus, TOL, TOL_INT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MilpOptions {
    pub node_budget: usize,
    pub tol_int: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { node_budget: 100_000, tol_int: TOL_INT }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    /// LP solution of the node that produced the incumbent; integer
    /// variables are fixed by bounds there, so its duals price the fixed
    /// commitment.
    pub incumbent: LpSolution,
    /// Objective of the root relaxation.
    pub relaxation_bound: f64,
    /// Best proven lower bound when the search stopped.
    pub best_bound: f64,
    pub nodes: usize,
    /// `incumbent.objective - best_bound`.
    pub gap: f64,
}

impl MilpSolution {
    pub fn objective(&self) -> f64 {
        self.incumbent.objective
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MilpError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("Infeasible: no integer-feasible point")]
    Infeasible,
    #[error("Unbounded: relaxation is unbounded")]
    Unbounded,
    #[error("NodeBudgetExceeded: stopped after {nodes} nodes")]
    NodeBudgetExceeded { nodes: usize, best: Option<Box<MilpSolution>> },
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    bound: f64,
}

pub fn solve_milp(lp: &LinearProgram, integer_vars: &[usize]) -> Result<MilpSolution, MilpError> {
    solve_milp_with(lp, integer_vars, &MilpOptions::default())
}

pub fn solve_milp_with(lp: &LinearProgram, integer_vars: &[usize], opts: &MilpOptions) -> Result<MilpSolution, MilpError> {
    lp.validate()?;
    if let Some(&j) = integer_vars.iter().find(|&&j| j >= lp.num_vars()) {
        return Err(LpError::MalformedProblem(format!("integer variable {j} is not declared")).into());
    }

    let mut nodes = 1;
    let root = solve_lp_with_bounds(lp, &lp.lower, &lp.upper)?;
    match root.status {
        LpStatus::Infeasible => return Err(MilpError::Infeasible),
        LpStatus::Unbounded => return Err(MilpError::Unbounded),
        LpStatus::Optimal => {}
    }
    let relaxation_bound = root.objective;

    let mut incumbent: Option<LpSolution> = None;
    let mut open: Vec<Node> = Vec::new();
    let mut current = Some((lp.lower.clone(), lp.upper.clone(), root));

    loop {
        if let Some((lower, upper, sol)) = current.take() {
            let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |inc| inc.objective);
            if sol.objective < cutoff - TOL * (1.0 + cutoff.abs().min(1e12)) {
                match most_fractional(&sol.x, integer_vars, opts.tol_int) {
                    None => incumbent = Some(sol),
                    Some((j, value)) => {
                        let down_hi = value.floor();
                        let up_lo = value.ceil();
                        let mut down = Node { lower: lower.clone(), upper: upper.clone(), bound: sol.objective };
                        down.upper[j] = down_hi;
                        let mut up = Node { lower, upper, bound: sol.objective };
                        up.lower[j] = up_lo;
                        let (dive, other) = if value - down_hi >= 0.5 { (up, down) } else { (down, up) };
                        open.push(other);
                        current = solve_node(lp, dive, &mut nodes)?;
                        if nodes >= opts.node_budget {
                            return budget_exceeded(incumbent, relaxation_bound, &open, nodes);
                        }
                        continue;
                    }
                }
            }
        }

        // Backtrack to the open node with the best bound.
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |inc| inc.objective);
        open.retain(|node| node.bound < cutoff - TOL * (1.0 + cutoff.abs().min(1e12)));
        let Some(best) = (0..open.len()).min_by(|&a, &b| open[a].bound.total_cmp(&open[b].bound)) else {
            break;
        };
        let node = open.swap_remove(best);
        current = solve_node(lp, node, &mut nodes)?;
        if nodes >= opts.node_budget && (current.is_some() || !open.is_empty()) {
            return budget_exceeded(incumbent, relaxation_bound, &open, nodes);
        }
    }

    match incumbent {
        None => Err(MilpError::Infeasible),
        Some(inc) => Ok(MilpSolution {
            best_bound: inc.objective,
            gap: 0.0,
            incumbent: inc,
            relaxation_bound,
            nodes,
        }),
    }
}

fn solve_node(lp: &LinearProgram, node: Node, nodes: &mut usize) -> Result<Option<(Vec<f64>, Vec<f64>, LpSolution)>, MilpError> {
    *nodes += 1;
    let sol = solve_lp_with_bounds(lp, &node.lower, &node.upper)?;
    Ok(match sol.status {
        LpStatus::Optimal => Some((node.lower, node.upper, sol)),
        // A bounded root cannot have unbounded children; treat as pruned.
        _ => None,
    })
}

fn most_fractional(x: &[f64], integer_vars: &[usize], tol: f64) -> Option<(usize, f64)> {
    let mut best = None;
    let mut best_frac = tol;
    for &j in integer_vars {
        let frac = (x[j] - x[j].round()).abs();
        if frac > best_frac {
            best_frac = frac;
            best = Some((j, x[j]));
        }
    }
    best
}

fn budget_exceeded(incumbent: Option<LpSolution>, relaxation_bound: f64, open: &[Node], nodes: usize) -> Result<MilpSolution, MilpError> {
    let best = incumbent.map(|inc| {
        let open_bound = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
        let best_bound = open_bound.min(inc.objective).max(relaxation_bound);
        Box::new(MilpSolution {
            gap: inc.objective - best_bound,
            best_bound,
            incumbent: inc,
            relaxation_bound,
            nodes,
        })
    });
    Err(MilpError::NodeBudgetExceeded { nodes, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_rounding_up() {
        let mut lp = LinearProgram::new(1);
        lp.set_cost(0, 1.0);
        lp.set_bounds(0, 0.0, 1.0);
        lp.add_le(vec![-1.0], -0.3);
        let sol = solve_milp(&lp, &[0]).unwrap();
        assert_eq!(sol.incumbent.x[0], 1.0);
        assert!((sol.objective() - 1.0).abs() < 1e-12);
        assert!(sol.relaxation_bound <= sol.objective());
        assert!((sol.relaxation_bound - 0.3).abs() < 1e-12);
    }

    #[test]
    fn integer_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.set_bounds(0, 0.0, 1.0);
        lp.add_eq(vec![2.0], 1.0);
        assert_eq!(solve_milp(&lp, &[0]).unwrap_err(), MilpError::Infeasible);
    }

    #[test]
    fn undeclared_integer_var_is_malformed() {
        let lp = LinearProgram::new(1);
        assert!(matches!(solve_milp(&lp, &[3]), Err(MilpError::Lp(LpError::MalformedProblem(_)))));
    }

    #[test]
    fn budget_returns_incumbent_and_gap() {
        // Knapsack-like: many fractional relaxations.
        let n = 14;
        let mut lp = LinearProgram::new(n);
        let weights: Vec<f64> = (0..n).map(|i| 3.0 + (i * 7 % 5) as f64 + 0.1 * i as f64).collect();
        for j in 0..n {
            lp.set_cost(j, -(weights[j] + 1.3 * (j % 3) as f64));
            lp.set_bounds(j, 0.0, 1.0);
        }
        lp.add_le(weights.clone(), 20.5);
        let opts = MilpOptions { node_budget: 3, ..Default::default() };
        match solve_milp_with(&lp, &(0..n).collect::<Vec<_>>(), &opts) {
            Err(MilpError::NodeBudgetExceeded { nodes, best }) => {
                assert!(nodes >= 3);
                if let Some(best) = best {
                    assert!(best.gap >= -1e-9);
                    assert!(best.relaxation_bound <= best.objective() + 1e-9);
                }
            }
            Ok(sol) => assert!(sol.nodes <= 3),
            Err(e) => panic!("unexpected {e}"),
        }
    }
}
