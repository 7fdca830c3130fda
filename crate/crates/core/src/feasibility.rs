//! Linear feasibility backend.
//!
//! Constraints are collected as sparse triplets with an equality or ≤ sense
//! over free variables; `solve` reports a feasible point or infeasibility.
//! The backend is Clarabel with a ½‖x‖² objective, so feasible systems return
//! the (approximately) minimum-norm point, which keeps stored certificates
//! reproducible. Returned points are re-checked against the constraints at the
//! caller's tolerance rather than trusting solver status alone.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeasibilityError {
    #[error("constraint references variable {var} but system has {num_vars}")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("solver setup failed: {0}")]
    Setup(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    /// a'x ≤ b
    Le,
    /// a'x = b
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    sense: Sense,
    rhs: f64,
    entries: Vec<(usize, f64)>,
}

/// A linear system over `num_vars` free variables.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    num_vars: usize,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Feasible(Vec<f64>),
    Infeasible,
}

impl SolveOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, SolveOutcome::Feasible(_))
    }

    pub fn point(self) -> Option<Vec<f64>> {
        match self {
            SolveOutcome::Feasible(x) => Some(x),
            SolveOutcome::Infeasible => None,
        }
    }
}

impl LinearSystem {
    pub fn new(num_vars: usize) -> Self {
        LinearSystem {
            num_vars,
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Add a constraint Σ coeff·x_var `sense` rhs. Zero coefficients are
    /// dropped; duplicate variable entries are summed.
    pub fn push_row(
        &mut self,
        sense: Sense,
        rhs: f64,
        coeffs: impl IntoIterator<Item = (usize, f64)>,
    ) -> Result<(), FeasibilityError> {
        let mut entries: Vec<(usize, f64)> = Vec::new();
        for (var, c) in coeffs {
            if var >= self.num_vars {
                return Err(FeasibilityError::VariableOutOfRange {
                    var,
                    num_vars: self.num_vars,
                });
            }
            if c == 0.0 {
                continue;
            }
            match entries.iter_mut().find(|(v, _)| *v == var) {
                Some((_, acc)) => *acc += c,
                None => entries.push((var, c)),
            }
        }
        self.rows.push(Row {
            sense,
            rhs,
            entries,
        });
        Ok(())
    }

    /// Largest constraint violation at `x` (0 when all rows hold).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.entries.iter().map(|&(v, c)| c * x[v]).sum();
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Decide feasibility. A candidate point is accepted only when its worst
    /// constraint violation is at most `tol`.
    pub fn solve(&self, tol: f64) -> Result<SolveOutcome, FeasibilityError> {
        if self.rows.is_empty() {
            return Ok(SolveOutcome::Feasible(vec![0.0; self.num_vars]));
        }
        if self.num_vars == 0 {
            let feasible = self.max_violation(&[]) <= tol;
            return Ok(if feasible {
                SolveOutcome::Feasible(vec![])
            } else {
                SolveOutcome::Infeasible
            });
        }

        // Equality rows first so the cone layout is [Zero, Nonnegative].
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&i| match self.rows[i].sense {
            Sense::Eq => 0u8,
            Sense::Le => 1u8,
        });
        let n_eq = self
            .rows
            .iter()
            .filter(|r| r.sense == Sense::Eq)
            .count();
        let m = self.rows.len();

        // Column-major triplets.
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.num_vars];
        let mut b = vec![0.0; m];
        for (new_row, &old_row) in order.iter().enumerate() {
            let row = &self.rows[old_row];
            b[new_row] = row.rhs;
            for &(var, c) in &row.entries {
                cols[var].push((new_row, c));
            }
        }
        let mut colptr = Vec::with_capacity(self.num_vars + 1);
        let mut rowval = Vec::new();
        let mut nzval = Vec::new();
        colptr.push(0usize);
        for col in &mut cols {
            col.sort_by_key(|&(r, _)| r);
            for &(r, v) in col.iter() {
                rowval.push(r);
                nzval.push(v);
            }
            colptr.push(rowval.len());
        }
        let a = CscMatrix::new(m, self.num_vars, colptr, rowval, nzval);

        let p = CscMatrix::identity(self.num_vars);
        let q = vec![0.0; self.num_vars];
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        if n_eq > 0 {
            cones.push(ZeroConeT(n_eq));
        }
        if m > n_eq {
            cones.push(NonnegativeConeT(m - n_eq));
        }
        let settings = DefaultSettingsBuilder::default()
            .verbose(false)
            .build()
            .map_err(|e| FeasibilityError::Setup(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| FeasibilityError::Setup(format!("{e:?}")))?;
        solver.solve();

        let status = solver.solution.status;
        match status {
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                Ok(SolveOutcome::Infeasible)
            }
            _ => {
                let x = solver.solution.x.clone();
                if x.len() == self.num_vars && self.max_violation(&x) <= tol {
                    Ok(SolveOutcome::Feasible(x))
                } else {
                    if !matches!(
                        status,
                        SolverStatus::Solved | SolverStatus::AlmostSolved
                    ) {
                        log::debug!(
                            "solver returned {status:?}; candidate rejected at tol {tol:e}"
                        );
                    }
                    Ok(SolveOutcome::Infeasible)
                }
            }
        }
    }
}
