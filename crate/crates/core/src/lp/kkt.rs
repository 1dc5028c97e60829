use std::fmt;

use super::{dot, LinearProgram, LpSolution};

const BOUND_TOL: f64 = 1e-9;
const ROW_TOL: f64 = 1e-6;
const DUAL_SIGN_TOL: f64 = 1e-9;
const SLACKNESS_TOL: f64 = 1e-6;
const GAP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `x[col]` outside `[lb, ub]` by `excess`.
    Bound { col: usize, excess: f64 },
    /// `(A·x)[row] - b[row] = excess > 0`.
    Row { row: usize, excess: f64 },
    /// `|(A_eq·x)[row] - b_eq[row]|`.
    Equality { row: usize, residual: f64 },
    /// Negative multiplier on a `<=` row.
    DualSign { row: usize, mu: f64 },
    /// Reduced cost pushes toward an infinite bound.
    DualBound { col: usize, reduced_cost: f64 },
    /// `mu[row]·(b[row] - (A·x)[row])`.
    Slackness { row: usize, residual: f64 },
    /// Primal minus dual objective.
    DualityGap { primal: f64, dual: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Bound { col, excess } => write!(f, "column {col} outside bounds by {excess:e}"),
            Violation::Row { row, excess } => write!(f, "row {row} exceeds rhs by {excess:e}"),
            Violation::Equality { row, residual } => {
                write!(f, "equality {row} off by {residual:e}")
            }
            Violation::DualSign { row, mu } => write!(f, "row {row} has negative multiplier {mu:e}"),
            Violation::DualBound { col, reduced_cost } => {
                write!(f, "column {col} has infeasible reduced cost {reduced_cost:e}")
            }
            Violation::Slackness { row, residual } => {
                write!(f, "row {row} complementary slackness residual {residual:e}")
            }
            Violation::DualityGap { primal, dual } => {
                write!(f, "duality gap: primal {primal} vs dual {dual}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KktReport {
    pub violations: Vec<Violation>,
    /// Largest complementary slackness residual over the `<=` rows.
    pub max_slackness: f64,
    /// `|primal - dual|`.
    pub duality_gap: f64,
}

impl KktReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks an optimal solution against the optimality conditions of `lp`.
/// Reduced costs are recomputed from `mu` and `lambda` rather than read
/// from the solution.
pub fn verify_kkt(lp: &LinearProgram, sol: &LpSolution) -> KktReport {
    let mut report = KktReport::default();
    let x = &sol.x;
    let n = lp.num_cols();

    for j in 0..n {
        let excess = (lp.lb[j] - x[j]).max(x[j] - lp.ub[j]);
        if excess > BOUND_TOL {
            report.violations.push(Violation::Bound { col: j, excess });
        }
    }
    for (r, row) in lp.a_ub.iter().enumerate() {
        let ax = dot(row, x);
        let excess = ax - lp.b_ub[r];
        if excess > ROW_TOL {
            report.violations.push(Violation::Row { row: r, excess });
        }
        let mu = sol.mu[r];
        if mu < -DUAL_SIGN_TOL {
            report.violations.push(Violation::DualSign { row: r, mu });
        }
        let residual = (mu * (lp.b_ub[r] - ax)).abs();
        report.max_slackness = report.max_slackness.max(residual);
        if residual > SLACKNESS_TOL * (1.0 + lp.b_ub[r].abs()) {
            report.violations.push(Violation::Slackness { row: r, residual });
        }
    }
    for (r, row) in lp.a_eq.iter().enumerate() {
        let residual = (dot(row, x) - lp.b_eq[r]).abs();
        if residual > ROW_TOL {
            report.violations.push(Violation::Equality { row: r, residual });
        }
    }

    // dual objective: -mu·b + lambda·b_eq + bound terms
    let mut dual = -dot(&sol.mu, &lp.b_ub) + dot(&sol.lambda, &lp.b_eq);
    for j in 0..n {
        let mut d = lp.c[j];
        for (r, row) in lp.a_ub.iter().enumerate() {
            d += sol.mu[r] * row[j];
        }
        for (r, row) in lp.a_eq.iter().enumerate() {
            d -= sol.lambda[r] * row[j];
        }
        let scale = 1.0 + lp.c[j].abs();
        if d > 0.0 {
            if lp.lb[j].is_finite() {
                dual += d * lp.lb[j];
            } else if d > GAP_TOL * scale {
                report.violations.push(Violation::DualBound { col: j, reduced_cost: d });
            }
        } else if d < 0.0 {
            if lp.ub[j].is_finite() {
                dual += d * lp.ub[j];
            } else if d < -GAP_TOL * scale {
                report.violations.push(Violation::DualBound { col: j, reduced_cost: d });
            }
        }
    }
    let primal = lp.objective(x);
    report.duality_gap = (primal - dual).abs();
    if report.duality_gap > GAP_TOL * (1.0 + primal.abs()) {
        report.violations.push(Violation::DualityGap { primal, dual });
    }
    report
}
