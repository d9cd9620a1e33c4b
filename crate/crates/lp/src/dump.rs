use std::fmt::Write;

use crate::LinearProgram;

/// Plain-text dump of an instance for bug reports.
///
/// Layout: a header line, the objective row, one line per equality row
/// (`E rhs | coeffs`), one per inequality row (`L rhs | coeffs`), then one
/// `B index lower upper` line per variable. Not a stable format.
pub fn to_debug_text(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "LP vars={} eq={} le={}", lp.num_vars(), lp.eq_rows.len(), lp.ub_rows.len());
    let _ = writeln!(out, "OBJ {}", join(&lp.objective));
    for row in &lp.eq_rows {
        let _ = writeln!(out, "E {} | {}", row.rhs, join(&row.coeffs));
    }
    for row in &lp.ub_rows {
        let _ = writeln!(out, "L {} | {}", row.rhs, join(&row.coeffs));
    }
    for (j, (lo, hi)) in lp.lower.iter().zip(&lp.upper).enumerate() {
        let _ = writeln!(out, "B {j} {lo} {hi}");
    }
    out
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
