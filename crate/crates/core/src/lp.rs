//! Dense two-phase simplex for the small linear programs that show up in the
//! lower bounds and the allocation rules.
//!
//! Variables are implicitly nonnegative. Pivoting follows Bland's
//! smallest-index rule in both phases, so the solver terminates on degenerate
//! problems and returns the same vertex for identical input.

use thiserror::Error;

/// Largest number of structural variables accepted by [`solve`].
pub const MAX_VARIABLES: usize = 64;
/// Largest number of constraint rows accepted by [`solve`].
pub const MAX_CONSTRAINTS: usize = 256;

/// Feasibility tolerance (scaled by the magnitude of the right-hand side).
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost tolerance used to declare optimality.
pub const OPTIMALITY_TOL: f64 = 1e-9;

const PIVOT_TOL: f64 = 1e-11;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        Self {
            sense,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn minimize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Minimize, objective)
    }

    pub fn maximize(objective: Vec<f64>) -> Self {
        Self::new(Sense::Maximize, objective)
    }

    pub fn num_variables(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        solve(self)
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
    /// Primal point; all zeros unless `status` is `Optimal`.
    pub primal: Vec<f64>,
    /// Objective value in the problem's own sense; NaN unless `Optimal`.
    pub value: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, n: usize) -> Self {
        Self {
            status,
            primal: vec![0.0; n],
            value: f64::NAN,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program has {0} variables, limit is {MAX_VARIABLES}")]
    TooManyVariables(usize),
    #[error("linear program has {0} constraints, limit is {MAX_CONSTRAINTS}")]
    TooManyConstraints(usize),
    #[error("constraint {row} has {found} coefficients, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite coefficient in linear program")]
    NonFinite,
    #[error("simplex exceeded {MAX_PIVOTS} pivots")]
    PivotLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows[i]` holds the coefficients of row `i` followed by its right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.kinds.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.width()]
    }

    fn pivot(&mut self, row: usize, col: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(LpError::PivotLimit);
        }
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        self.rows[row][col] = 1.0;
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[col];
            if factor == 0.0 {
                continue;
            }
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            r[col] = 0.0;
        }
        self.basis[row] = col;
        Ok(())
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` for the current basis.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut reduced = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for (j, r) in reduced.iter_mut().enumerate() {
                *r -= cb * self.rows[i][j];
            }
        }
        reduced
    }

    /// Runs Bland-rule simplex minimizing `cost` over columns allowed by `enterable`.
    /// Returns `false` if the objective is unbounded below.
    fn minimize(&mut self, cost: &[f64], enterable: &dyn Fn(usize) -> bool) -> Result<bool, LpError> {
        loop {
            let reduced = self.reduced_costs(cost);
            let entering = (0..self.width())
                .find(|&j| enterable(j) && !self.basis.contains(&j) && reduced[j] < -OPTIMALITY_TOL);
            let Some(col) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((row, _)) => self.pivot(row, col)?,
                None => return Ok(false),
            }
        }
    }
}

fn validate(lp: &LinearProgram) -> Result<(), LpError> {
    let n = lp.objective.len();
    if n > MAX_VARIABLES {
        return Err(LpError::TooManyVariables(n));
    }
    if lp.constraints.len() > MAX_CONSTRAINTS {
        return Err(LpError::TooManyConstraints(lp.constraints.len()));
    }
    for (row, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::DimensionMismatch {
                row,
                expected: n,
                found: c.coeffs.len(),
            });
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NonFinite);
    }
    Ok(())
}

/// Solves `lp` with the two-phase method.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    validate(lp)?;
    let n = lp.objective.len();
    let m = lp.constraints.len();

    // Normalize to nonnegative right-hand sides.
    let rows: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();

    let num_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let num_artificial = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + num_slack + num_artificial;

    let mut kinds = vec![ColumnKind::Structural; n];
    kinds.extend(std::iter::repeat_n(ColumnKind::Slack, num_slack));
    kinds.extend(std::iter::repeat_n(ColumnKind::Artificial, num_artificial));

    let mut tableau_rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_slack = n;
    let mut next_artificial = n + num_slack;
    for (coeffs, relation, rhs) in &rows {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(coeffs);
        row[width] = *rhs;
        match relation {
            Relation::Le => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_artificial] = 1.0;
                basis.push(next_artificial);
                next_artificial += 1;
            }
            Relation::Eq => {
                row[next_artificial] = 1.0;
                basis.push(next_artificial);
                next_artificial += 1;
            }
        }
        tableau_rows.push(row);
    }

    let mut t = Tableau {
        rows: tableau_rows,
        basis,
        kinds,
        pivots: 0,
    };

    let scale = rows.iter().fold(1.0_f64, |acc, r| acc.max(r.2.abs()));

    // Phase 1: drive the artificial variables to zero.
    if num_artificial > 0 {
        let cost: Vec<f64> = t
            .kinds
            .iter()
            .map(|k| if *k == ColumnKind::Artificial { 1.0 } else { 0.0 })
            .collect();
        t.minimize(&cost, &|_| true)?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| t.kinds[b] == ColumnKind::Artificial)
            .map(|(i, _)| t.rhs(i).max(0.0))
            .sum();
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, n));
        }

        // Pivot zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.kinds[t.basis[i]] != ColumnKind::Artificial {
                i += 1;
                continue;
            }
            let replacement = (0..t.width()).find(|&j| {
                t.kinds[j] != ColumnKind::Artificial && t.rows[i][j].abs() > 1e-9
            });
            match replacement {
                Some(j) => {
                    t.pivot(i, j)?;
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        }
    }

    // Phase 2 on the original objective, expressed as a minimization.
    let sign = match lp.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let mut cost = vec![0.0; t.width()];
    for (c, o) in cost.iter_mut().zip(&lp.objective) {
        *c = sign * o;
    }
    let kinds = t.kinds.clone();
    let bounded = t.minimize(&cost, &|j| kinds[j] != ColumnKind::Artificial)?;
    if !bounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, n));
    }

    let mut primal = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            let v = t.rhs(i);
            primal[b] = if v.abs() <= FEASIBILITY_TOL * scale * 1e-3 { 0.0 } else { v.max(0.0) };
        }
    }
    let value = lp.objective.iter().zip(&primal).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal,
        value,
    })
}
