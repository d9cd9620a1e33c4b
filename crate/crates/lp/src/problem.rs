use crate::LpError;

/// A single dense constraint row `coeffs · v (=|<=) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// `min c·v` subject to equality rows, `<=` rows and variable bounds.
///
/// Rows are stored densely. Bounds may be infinite on either side; a
/// variable with both bounds infinite is free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub eq_rows: Vec<Row>,
    pub ub_rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// `num_vars` variables with zero cost and bounds `[0, +inf)`.
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            eq_rows: Vec::new(),
            ub_rows: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.eq_rows.len() + self.ub_rows.len()
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> usize {
        self.eq_rows.push(Row { coeffs, rhs });
        self.eq_rows.len() - 1
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) -> usize {
        self.ub_rows.push(Row { coeffs, rhs });
        self.ub_rows.len() - 1
    }

    /// Adds an equality row given as `(var, coeff)` pairs. Repeated
    /// variables are summed.
    pub fn add_eq_terms(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let coeffs = self.densify(terms);
        self.add_eq(coeffs, rhs)
    }

    pub fn add_le_terms(&mut self, terms: &[(usize, f64)], rhs: f64) -> usize {
        let coeffs = self.densify(terms);
        self.add_le(coeffs, rhs)
    }

    fn densify(&self, terms: &[(usize, f64)]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            coeffs[j] += a;
        }
        coeffs
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        dot(&self.objective, v)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::MalformedProblem(format!(
                "bounds have lengths {}/{} but there are {n} variables",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some(j) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::MalformedProblem(format!("objective coefficient {j} is not finite")));
        }
        for (kind, rows) in [("equality", &self.eq_rows), ("inequality", &self.ub_rows)] {
            for (i, row) in rows.iter().enumerate() {
                if row.coeffs.len() != n {
                    return Err(LpError::MalformedProblem(format!(
                        "{kind} row {i} has {} coefficients, expected {n}",
                        row.coeffs.len()
                    )));
                }
                if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
                    return Err(LpError::MalformedProblem(format!("{kind} row {i} has a non-finite entry")));
                }
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY || lo > hi {
                return Err(LpError::MalformedProblem(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
