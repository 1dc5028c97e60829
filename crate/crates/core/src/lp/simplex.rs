//! Two-phase primal simplex with bounded variables.
//!
//! The basis inverse is kept dense and updated in product form, with a
//! fresh Gauss-Jordan inversion every `REFACTOR_EVERY` pivots. Pricing is
//! largest reduced cost until `2·(rows + cols)` iterations have passed in a
//! phase, then Bland's rule.

use log::debug;

use super::{LinearProgram, LpError, LpSolution, LpStatus, OPTIMALITY_TOL, PIVOT_TOL};

const REFACTOR_EVERY: usize = 50;
const RATIO_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic(usize),
    Lower,
    Upper,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex {
    m: usize,
    n_struct: usize,
    first_artificial: usize,
    /// Sparse columns `(row, value)` of every variable.
    cols: Vec<Vec<(usize, f64)>>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    rhs: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    binv: Vec<f64>,
    pivots_since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

/// Solves `lp`. Infeasible and unbounded programs are reported through
/// [`LpStatus`]; only malformed input and numerical breakdown are errors.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let mut s = Simplex::new(lp);
    let n = lp.num_cols();

    if s.first_artificial < s.cols.len() {
        let phase1: Vec<f64> = (0..s.cols.len())
            .map(|j| if j >= s.first_artificial { 1.0 } else { 0.0 })
            .collect();
        s.iterate(&phase1)?;
        let infeasibility: f64 = s.x[s.first_artificial..].iter().sum();
        let scale = 1.0 + lp.b_ub.iter().chain(&lp.b_eq).fold(0.0_f64, |m, v| m.max(v.abs()));
        if infeasibility > 1e-7 * scale {
            debug!("phase 1 ended with infeasibility {infeasibility}");
            return Ok(s.finish(lp, LpStatus::Infeasible, &phase1));
        }
        s.retire_artificials()?;
    }

    let mut cost = lp.c.clone();
    cost.resize(s.cols.len(), 0.0);
    let status = match s.iterate(&cost)? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    debug!(
        "simplex finished: {:?} after {} iterations ({} rows, {} cols)",
        status, s.iterations, s.m, n
    );
    Ok(s.finish(lp, status, &cost))
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let n = lp.num_cols();
        let m_ub = lp.a_ub.len();
        let m = m_ub + lp.a_eq.len();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (r, row) in lp.a_ub.iter().chain(&lp.a_eq).enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((r, v));
                }
            }
        }
        let mut lb = lp.lb.clone();
        let mut ub = lp.ub.clone();
        let mut x: Vec<f64> = (0..n)
            .map(|j| if lb[j].is_finite() { lb[j] } else { ub[j] })
            .collect();
        let mut state: Vec<State> = (0..n)
            .map(|j| if lb[j].is_finite() { State::Lower } else { State::Upper })
            .collect();

        let rhs: Vec<f64> = lp.b_ub.iter().chain(&lp.b_eq).copied().collect();
        let mut residual = rhs.clone();
        for (j, col) in cols.iter().enumerate() {
            for &(r, v) in col {
                residual[r] -= v * x[j];
            }
        }

        let mut basis = vec![0; m];
        let mut binv = vec![0.0; m * m];
        // slacks
        for r in 0..m_ub {
            cols.push(vec![(r, 1.0)]);
            lb.push(0.0);
            ub.push(f64::INFINITY);
            if residual[r] >= 0.0 {
                x.push(residual[r]);
                state.push(State::Basic(r));
                basis[r] = cols.len() - 1;
                binv[r * m + r] = 1.0;
            } else {
                x.push(0.0);
                state.push(State::Lower);
            }
        }
        let first_artificial = cols.len();
        for r in 0..m {
            let needs_artificial = r >= m_ub || residual[r] < 0.0;
            if !needs_artificial {
                continue;
            }
            let sign = if residual[r] >= 0.0 { 1.0 } else { -1.0 };
            cols.push(vec![(r, sign)]);
            lb.push(0.0);
            ub.push(f64::INFINITY);
            x.push(residual[r].abs());
            state.push(State::Basic(r));
            basis[r] = cols.len() - 1;
            binv[r * m + r] = sign;
        }

        let max_iterations = 50 * (m + cols.len()) + 10_000;
        Simplex {
            m,
            n_struct: n,
            first_artificial,
            cols,
            lb,
            ub,
            rhs,
            x,
            state,
            basis,
            binv,
            pivots_since_refactor: 0,
            iterations: 0,
            max_iterations,
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &var) in self.basis.iter().enumerate() {
            let cb = cost[var];
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yk, b) in y.iter_mut().zip(row) {
                *yk += cb * b;
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        cost[j] - self.cols[j].iter().map(|&(r, v)| y[r] * v).sum::<f64>()
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.cols[j] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    fn iterate(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        let bland_after = 2 * (self.m + self.n_struct);
        let mut phase_iterations = 0;
        loop {
            if self.pivots_since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            let bland = phase_iterations >= bland_after;
            let y = self.duals(cost);

            // pricing
            let mut entering: Option<(usize, f64)> = None;
            let mut best_score = 0.0;
            for j in 0..self.cols.len() {
                let dir = match self.state[j] {
                    State::Basic(_) => continue,
                    _ if self.ub[j] <= self.lb[j] => continue,
                    State::Lower => 1.0,
                    State::Upper => -1.0,
                };
                let d = self.reduced_cost(j, cost, &y);
                let score = -dir * d;
                if score <= OPTIMALITY_TOL {
                    continue;
                }
                if bland {
                    entering = Some((j, dir));
                    break;
                }
                if score > best_score {
                    best_score = score;
                    entering = Some((j, dir));
                }
            }
            let Some((q, dir)) = entering else {
                return Ok(Outcome::Optimal);
            };

            let alpha = self.ftran(q);

            // ratio test
            let mut step = self.ub[q] - self.lb[q];
            let mut leaving: Option<(usize, State)> = None;
            let mut leave_step = f64::INFINITY;
            for (i, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let var = self.basis[i];
                let rate = -dir * a;
                let (limit, bound) = if rate < 0.0 {
                    ((self.x[var] - self.lb[var]) / -rate, State::Lower)
                } else if self.ub[var].is_finite() {
                    ((self.ub[var] - self.x[var]) / rate, State::Upper)
                } else {
                    continue;
                };
                let limit = limit.max(0.0);
                let take = match leaving {
                    None => true,
                    Some((r, _)) => {
                        if limit < leave_step - RATIO_TIE {
                            true
                        } else if limit <= leave_step + RATIO_TIE {
                            if bland {
                                var < self.basis[r]
                            } else {
                                a.abs() > alpha[r].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    leaving = Some((i, bound));
                    leave_step = limit;
                }
            }
            let flip = step <= leave_step;
            if !flip {
                step = leave_step;
            }
            if !step.is_finite() {
                return Ok(Outcome::Unbounded);
            }

            self.x[q] += dir * step;
            for (i, &a) in alpha.iter().enumerate() {
                self.x[self.basis[i]] -= dir * step * a;
            }
            if flip {
                self.state[q] = if dir > 0.0 { State::Upper } else { State::Lower };
                self.x[q] = if dir > 0.0 { self.ub[q] } else { self.lb[q] };
            } else {
                let (r, bound) = leaving.expect("finite step without leaving row");
                let out = self.basis[r];
                self.x[out] = match bound {
                    State::Upper => self.ub[out],
                    _ => self.lb[out],
                };
                self.state[out] = bound;
                self.state[q] = State::Basic(r);
                self.basis[r] = q;
                self.pivot(r, &alpha);
            }

            self.iterations += 1;
            phase_iterations += 1;
            if self.iterations > self.max_iterations {
                return Err(LpError::IterationLimit(self.max_iterations));
            }
        }
    }

    fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let p = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= p;
        }
        for (i, &f) in alpha.iter().enumerate() {
            if i == r || f == 0.0 {
                continue;
            }
            for k in 0..m {
                self.binv[i * m + k] -= f * self.binv[r * m + k];
            }
        }
        self.pivots_since_refactor += 1;
    }

    /// Recomputes `B⁻¹` from scratch and the basic values from the
    /// nonbasic ones.
    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for (i, &var) in self.basis.iter().enumerate() {
            for &(r, v) in &self.cols[var] {
                b[r * m + i] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&a, &c| b[a * m + col].abs().total_cmp(&b[c * m + col].abs()))
                .unwrap_or(col);
            if b[piv * m + col].abs() < 1e-12 {
                return Err(LpError::Singular);
            }
            if piv != col {
                for k in 0..m {
                    b.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let p = b[col * m + col];
            for k in 0..m {
                b[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for i in 0..m {
                if i == col {
                    continue;
                }
                let f = b[i * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    b[i * m + k] -= f * b[col * m + k];
                    inv[i * m + k] -= f * inv[col * m + k];
                }
            }
        }
        self.binv = inv;
        self.pivots_since_refactor = 0;

        let mut residual = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if matches!(self.state[j], State::Basic(_)) || self.x[j] == 0.0 {
                continue;
            }
            for &(r, v) in col {
                residual[r] -= v * self.x[j];
            }
        }
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.x[self.basis[i]] = row.iter().zip(&residual).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    /// Fixes artificials at zero and pivots the ones still basic out of the
    /// basis where some real column can replace them. Rows where none can
    /// are redundant and keep their (zero) artificial.
    fn retire_artificials(&mut self) -> Result<(), LpError> {
        let m = self.m;
        for j in self.first_artificial..self.cols.len() {
            self.ub[j] = 0.0;
            if !matches!(self.state[j], State::Basic(_)) {
                self.x[j] = 0.0;
                self.state[j] = State::Lower;
            }
        }
        for r in 0..m {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                if matches!(self.state[j], State::Basic(_)) {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(k, a)| row[k] * a).sum();
                if v.abs() > 1e-7 && best.is_none_or(|(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.ftran(q);
                let out = self.basis[r];
                self.x[out] = 0.0;
                self.state[out] = State::Lower;
                self.state[q] = State::Basic(r);
                self.basis[r] = q;
                self.pivot(r, &alpha);
            }
        }
        self.refactor()
    }

    fn finish(mut self, lp: &LinearProgram, status: LpStatus, cost: &[f64]) -> LpSolution {
        if self.refactor().is_err() {
            debug!("final refactorization failed; keeping product-form inverse");
        }
        let n = self.n_struct;
        let m_ub = lp.a_ub.len();
        let y = self.duals(cost);
        let mut x: Vec<f64> = self.x[..n].to_vec();
        if status == LpStatus::Optimal {
            for j in 0..n {
                x[j] = x[j].clamp(lp.lb[j], lp.ub[j]);
            }
        }
        let reduced_costs = (0..n).map(|j| self.reduced_cost(j, cost, &y)).collect();
        LpSolution {
            status,
            objective: lp.objective(&x),
            x,
            mu: y[..m_ub].iter().map(|v| 0.0 - v).collect(),
            lambda: y[m_ub..].to_vec(),
            reduced_costs,
            iterations: self.iterations,
        }
    }
}
