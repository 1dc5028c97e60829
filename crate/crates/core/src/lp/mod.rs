//! Linear programs in the form
//!
//! ```text
//! min c·x   s.t.  A·x <= b,  A_eq·x = b_eq,  lb <= x <= ub
//! ```
//!
//! with a dense two-phase bounded-variable primal simplex that also returns
//! the dual multipliers of every row.

mod assemble;
mod kkt;
mod simplex;

use std::io::{self, Write};

use thiserror::Error;

pub use assemble::{build_clearing_lp, BuildError, ClearingLp};
pub use kkt::{verify_kkt, KktReport, Violation};
pub use simplex::solve_lp;

pub const PIVOT_TOL: f64 = 1e-10;
pub const FEASIBILITY_TOL: f64 = 1e-9;
pub const OPTIMALITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    Singular,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    /// One label per inequality row.
    pub row_tags: Vec<String>,
    /// One label per equality row.
    pub eq_tags: Vec<String>,
    /// One label per column.
    pub col_tags: Vec<String>,
}

impl LinearProgram {
    /// Program with the given objective and box bounds and no rows.
    pub fn new(c: Vec<f64>, lb: Vec<f64>, ub: Vec<f64>) -> Self {
        let col_tags = (0..c.len()).map(|j| format!("x{j}")).collect();
        LinearProgram {
            c,
            lb,
            ub,
            col_tags,
            ..Default::default()
        }
    }

    pub fn num_cols(&self) -> usize {
        self.c.len()
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64, tag: impl Into<String>) {
        self.a_ub.push(row);
        self.b_ub.push(rhs);
        self.row_tags.push(tag.into());
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64, tag: impl Into<String>) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
        self.eq_tags.push(tag.into());
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.c.len();
        let bad = |what: String| Err(LpError::Malformed(what));
        if self.lb.len() != n || self.ub.len() != n {
            return bad(format!("{n} columns but {} / {} bounds", self.lb.len(), self.ub.len()));
        }
        if self.col_tags.len() != n {
            return bad(format!("{n} columns but {} column tags", self.col_tags.len()));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_ub.len() != self.row_tags.len() {
            return bad("inequality rows, rhs and tags disagree in length".into());
        }
        if self.a_eq.len() != self.b_eq.len() || self.a_eq.len() != self.eq_tags.len() {
            return bad("equality rows, rhs and tags disagree in length".into());
        }
        for (r, row) in self.a_ub.iter().chain(&self.a_eq).enumerate() {
            if row.len() != n {
                return bad(format!("row {r} has {} entries, expected {n}", row.len()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return bad(format!("row {r} has a non-finite coefficient"));
            }
        }
        if self.c.iter().chain(&self.b_ub).chain(&self.b_eq).any(|v| !v.is_finite()) {
            return bad("non-finite objective or right-hand side".into());
        }
        for j in 0..n {
            let (l, u) = (self.lb[j], self.ub[j]);
            if l.is_nan() || u.is_nan() || l > u {
                return bad(format!("column {j} has bounds [{l}, {u}]"));
            }
            if l == f64::INFINITY || u == f64::NEG_INFINITY {
                return bad(format!("column {j} has bounds [{l}, {u}]"));
            }
            if l == f64::NEG_INFINITY && u == f64::INFINITY {
                return bad(format!("column {j} is free; free columns are not supported"));
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// Debug dump: one `col` line per column (tag, c, lb, ub), then one
    /// `le`/`eq` line per row (tag, coefficients, rhs).
    pub fn write_tableau<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# columns: tag c lb ub")?;
        for j in 0..self.c.len() {
            writeln!(
                out,
                "col {} {} {} {}",
                self.col_tags[j], self.c[j], self.lb[j], self.ub[j]
            )?;
        }
        writeln!(out, "# rows: kind tag coefficients rhs")?;
        let rows = self
            .a_ub
            .iter()
            .zip(&self.b_ub)
            .zip(&self.row_tags)
            .map(|r| ("le", r))
            .chain(self.a_eq.iter().zip(&self.b_eq).zip(&self.eq_tags).map(|r| ("eq", r)));
        for (kind, ((row, rhs), tag)) in rows {
            write!(out, "{kind} {tag}")?;
            for v in row {
                write!(out, " {v}")?;
            }
            writeln!(out, " {rhs}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Minimized objective `c·x`.
    pub objective: f64,
    /// Multipliers of the `<=` rows, non-negative at an optimum.
    pub mu: Vec<f64>,
    /// Multipliers of the equality rows.
    pub lambda: Vec<f64>,
    /// `c - A'(-mu) - A_eq'·lambda` per column: the duals of the bounds.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn welfare(&self) -> f64 {
        -self.objective
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}
