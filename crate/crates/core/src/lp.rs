//! Exact rational linear programming.
//!
//! Dense two-phase tableau simplex with Bland's rule. All variables are
//! non-negative. No floating point is involved anywhere: an `Infeasible`
//! answer means the phase-1 optimum is exactly positive, and every
//! `Optimal` solution is substituted back into the original constraints
//! before it is returned.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::finstoch::StochChannel;
use crate::rational::{RatMatrix, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `Σ coeff·x[var]  (relation)  rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        Self { coeffs, relation, rhs }
    }

    pub fn eq(coeffs: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn le(coeffs: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        Self::new(coeffs, Relation::Le, rhs)
    }

    pub fn ge(coeffs: Vec<(usize, Rational)>, rhs: Rational) -> Self {
        Self::new(coeffs, Relation::Ge, rhs)
    }

    fn lhs(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().fold(Rational::zero(), |s, (j, c)| s + c * &x[*j])
    }

    pub fn is_satisfied(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// Maximize `objective · x` subject to `constraints`, `x ≥ 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(usize, Rational)>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, ..Self::default() }
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn constrain(&mut self, c: Constraint) {
        self.constraints.push(c);
    }

    pub fn maximize(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = objective;
    }

    fn check_dims(&self) -> Result<()> {
        let bad = self
            .constraints
            .iter()
            .flat_map(|c| c.coeffs.iter())
            .chain(self.objective.iter())
            .find(|(j, _)| *j >= self.num_vars);
        match bad {
            Some((j, _)) => Err(Error::DimensionMismatch(format!("variable {j} of {}", self.num_vars))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub solution: Option<Vec<Rational>>,
    pub objective: Option<Rational>,
}

impl LpResult {
    fn without(status: LpStatus) -> Self {
        Self { status, solution: None, objective: None }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpResult> {
    lp.check_dims()?;
    let Some(reduced) = presolve(lp) else {
        return Ok(LpResult::without(LpStatus::Infeasible));
    };
    let (status, x_reduced) = Tableau::run(&reduced)?;
    let Some(x_reduced) = x_reduced else {
        return Ok(LpResult::without(status));
    };
    let mut x = vec![Rational::zero(); lp.num_vars];
    for (k, &orig) in reduced.kept.iter().enumerate() {
        x[orig] = x_reduced[k].clone();
    }
    if let Some(c) = lp.constraints.iter().find(|c| !c.is_satisfied(&x)) {
        return Err(Error::InvariantViolation(format!("simplex solution violates {c:?}")));
    }
    if x.iter().any(Signed::is_negative) {
        return Err(Error::InvariantViolation("simplex solution has a negative entry".into()));
    }
    let value = lp.objective.iter().fold(Rational::zero(), |s, (j, c)| s + c * &x[*j]);
    Ok(LpResult { status, solution: Some(x), objective: Some(value) })
}

struct Reduced {
    /// Original index of each surviving variable.
    kept: Vec<usize>,
    rows: Vec<(Vec<(usize, Rational)>, Relation, Rational)>,
    objective: Vec<(usize, Rational)>,
}

/// Removes variables forced to zero by rows of the form `Σ c_j x_j = 0`
/// (or `≤ 0`) with all `c_j ≥ 0`, and the mirror image. Returns `None` if a
/// row is left empty and violated.
fn presolve(lp: &LinearProgram) -> Option<Reduced> {
    let n = lp.num_vars;
    let mut zero = vec![false; n];
    let mut active: Vec<bool> = vec![true; lp.constraints.len()];
    loop {
        let mut changed = false;
        for (r, c) in lp.constraints.iter().enumerate() {
            if !active[r] {
                continue;
            }
            let live: Vec<&(usize, Rational)> = c.coeffs.iter().filter(|(j, v)| !zero[*j] && !v.is_zero()).collect();
            let all_pos = live.iter().all(|(_, v)| v.is_positive());
            let all_neg = live.iter().all(|(_, v)| v.is_negative());
            let forces = c.rhs.is_zero()
                && match c.relation {
                    Relation::Eq => all_pos || all_neg,
                    Relation::Le => all_pos,
                    Relation::Ge => all_neg,
                };
            if forces {
                for (j, _) in live {
                    zero[*j] = true;
                }
                active[r] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&j| !zero[j]).collect();
    let mut new_index = vec![usize::MAX; n];
    for (k, &j) in kept.iter().enumerate() {
        new_index[j] = k;
    }
    let remap = |coeffs: &[(usize, Rational)]| -> Vec<(usize, Rational)> {
        let mut dense: Vec<(usize, Rational)> = Vec::new();
        for (j, v) in coeffs {
            if zero[*j] || v.is_zero() {
                continue;
            }
            let k = new_index[*j];
            match dense.iter_mut().find(|(i, _)| *i == k) {
                Some((_, acc)) => *acc += v,
                None => dense.push((k, v.clone())),
            }
        }
        dense.retain(|(_, v)| !v.is_zero());
        dense
    };
    let mut rows = Vec::new();
    for c in &lp.constraints {
        let coeffs = remap(&c.coeffs);
        if coeffs.is_empty() {
            let ok = match c.relation {
                Relation::Le => Rational::zero() <= c.rhs,
                Relation::Ge => Rational::zero() >= c.rhs,
                Relation::Eq => c.rhs.is_zero(),
            };
            if !ok {
                return None;
            }
            continue;
        }
        rows.push((coeffs, c.relation, c.rhs.clone()));
    }
    Some(Reduced { kept, objective: remap(&lp.objective), rows })
}

struct Tableau {
    /// Constraint rows, each `width + 1` long (last entry = rhs).
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn run(lp: &Reduced) -> Result<(LpStatus, Option<Vec<Rational>>)> {
        let n = lp.kept.len();
        let m = lp.rows.len();
        let slack_count = lp.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let mut rows: Vec<Vec<Rational>> = Vec::with_capacity(m);
        let mut basis = vec![usize::MAX; m];
        let mut needs_artificial = Vec::new();
        let mut next_slack = n;
        for (i, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
            let mut row = vec![Rational::zero(); n + slack_count];
            for (j, v) in coeffs {
                row[*j] = v.clone();
            }
            let mut rhs = rhs.clone();
            let mut rel = *rel;
            match rel {
                Relation::Le | Relation::Ge => {
                    row[next_slack] = if rel == Relation::Le { Rational::one() } else { -Rational::one() };
                    next_slack += 1;
                }
                Relation::Eq => {}
            }
            if rhs.is_negative() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            if rel == Relation::Le {
                basis[i] = next_slack - 1;
            } else {
                needs_artificial.push(i);
            }
            row.push(rhs);
            rows.push(row);
        }
        let structural = n + slack_count;
        let width = structural + needs_artificial.len();
        for row in rows.iter_mut() {
            let rhs = row.pop().expect("rhs");
            row.resize(width, Rational::zero());
            row.push(rhs);
        }
        for (k, &i) in needs_artificial.iter().enumerate() {
            rows[i][structural + k] = Rational::one();
            basis[i] = structural + k;
        }
        let mut t = Tableau { rows, basis, width };

        if !needs_artificial.is_empty() {
            let mut cost = vec![Rational::zero(); width];
            for c in cost.iter_mut().skip(structural) {
                *c = -Rational::one();
            }
            let (status, value) = t.optimize(&cost, width);
            debug_assert_eq!(status, LpStatus::Optimal, "phase 1 is bounded");
            if value.is_negative() {
                return Ok((LpStatus::Infeasible, None));
            }
            t.expel_artificials(structural);
            for row in t.rows.iter_mut() {
                let rhs = row.pop().expect("rhs");
                row.truncate(structural);
                row.push(rhs);
            }
            t.width = structural;
        }

        let mut cost = vec![Rational::zero(); t.width];
        for (j, v) in &lp.objective {
            cost[*j] = v.clone();
        }
        let (status, _) = t.optimize(&cost, t.width);
        if status == LpStatus::Unbounded {
            return Ok((status, None));
        }
        let mut x = vec![Rational::zero(); n];
        for (i, &b) in t.basis.iter().enumerate() {
            if b < n {
                x[b] = t.rows[i][t.width].clone();
            }
        }
        Ok((LpStatus::Optimal, Some(x)))
    }

    /// Maximizes `cost · x` over columns `< limit` from the current basic
    /// feasible solution. Returns the status and the optimal value.
    fn optimize(&mut self, cost: &[Rational], limit: usize) -> (LpStatus, Rational) {
        let w = self.width;
        // Reduced-cost row: r_j = c_j − Σ_i c_{B_i} a_ij, last entry −z.
        let mut obj: Vec<Rational> = cost.iter().cloned().chain(std::iter::once(Rational::zero())).collect();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &cost[b];
            if cb.is_zero() {
                continue;
            }
            for (o, a) in obj.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *o -= cb * a;
                }
            }
        }
        loop {
            // Bland: lowest-index improving column.
            let Some(enter) = (0..limit).find(|&j| obj[j].is_positive()) else {
                return (LpStatus::Optimal, -obj[w].clone());
            };
            // Ratio test, ties broken by lowest basic variable index.
            let mut leave: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = &row[enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &row[w] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((pivot_row, _)) = leave else {
                return (LpStatus::Unbounded, Rational::zero());
            };
            self.pivot(pivot_row, enter, &mut obj);
        }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [Rational]) {
        let inv = Rational::one() / &self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..pivot_row.len()).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |row: &mut [Rational]| {
            let f = row[c].clone();
            if f.is_zero() {
                return;
            }
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(obj);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// After a zero-valued phase 1, pivots basic artificials out or drops
    /// their (redundant) rows.
    fn expel_artificials(&mut self, structural: usize) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < structural {
                i += 1;
                continue;
            }
            match (0..structural).find(|&j| !self.rows[i][j].is_zero()) {
                Some(j) => {
                    let mut scratch = vec![Rational::zero(); self.width + 1];
                    self.pivot(i, j, &mut scratch);
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.basis.remove(i);
                }
            }
        }
    }
}

/// A feasibility/optimization problem whose first `out·in` variables are
/// the entries of a stochastic matrix `out × in` (row-major).
#[derive(Debug, Clone)]
pub struct ChannelProgram {
    in_dim: usize,
    out_dim: usize,
    lp: LinearProgram,
}

impl ChannelProgram {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        let mut lp = LinearProgram::new(in_dim * out_dim);
        for c in 0..in_dim {
            let coeffs = (0..out_dim).map(|r| (r * in_dim + c, Rational::one())).collect();
            lp.constrain(Constraint::eq(coeffs, Rational::one()));
        }
        Self { in_dim, out_dim, lp }
    }

    pub fn var(&self, row: usize, col: usize) -> usize {
        row * self.in_dim + col
    }

    pub fn add_aux_var(&mut self) -> usize {
        self.lp.add_var()
    }

    pub fn constrain(&mut self, c: Constraint) {
        self.lp.constrain(c);
    }

    pub fn maximize(&mut self, objective: Vec<(usize, Rational)>) {
        self.lp.maximize(objective);
    }

    /// Linear expressions for the entries of `channel · input`.
    pub fn image_exprs(&self, input: &RatMatrix) -> Result<Vec<Vec<Vec<(usize, Rational)>>>> {
        if input.rows() != self.in_dim {
            return Err(Error::DimensionMismatch(format!("input has {} rows, channel {} inputs", input.rows(), self.in_dim)));
        }
        Ok((0..self.out_dim)
            .map(|r| {
                (0..input.cols())
                    .map(|j| {
                        (0..self.in_dim)
                            .filter(|&k| !input[(k, j)].is_zero())
                            .map(|k| (self.var(r, k), input[(k, j)].clone()))
                            .collect()
                    })
                    .collect()
            })
            .collect())
    }

    /// Requires `channel · input = output` entrywise.
    pub fn require_maps(&mut self, input: &RatMatrix, output: &RatMatrix) -> Result<()> {
        if output.rows() != self.out_dim || output.cols() != input.cols() {
            return Err(Error::DimensionMismatch(format!(
                "target is {}x{}, expected {}x{}",
                output.rows(),
                output.cols(),
                self.out_dim,
                input.cols()
            )));
        }
        let exprs = self.image_exprs(input)?;
        for (r, row) in exprs.into_iter().enumerate() {
            for (j, expr) in row.into_iter().enumerate() {
                self.lp.constrain(Constraint::eq(expr, output[(r, j)].clone()));
            }
        }
        Ok(())
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn solve(&self) -> Result<ChannelSolution> {
        let result = solve(&self.lp)?;
        let channel = match &result.solution {
            Some(x) => {
                let m = RatMatrix::from_vec(self.out_dim, self.in_dim, x[..self.in_dim * self.out_dim].to_vec());
                Some(StochChannel::new(m).map_err(|e| Error::InvariantViolation(format!("LP channel: {e}")))?)
            }
            None => None,
        };
        Ok(ChannelSolution { result, channel })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSolution {
    pub result: LpResult,
    pub channel: Option<StochChannel>,
}

/// Is there a stochastic `out × in` matrix mapping each `input` column
/// block to the paired `output`?
pub fn channel_feasibility(in_dim: usize, out_dim: usize, conditions: &[(RatMatrix, RatMatrix)]) -> Result<ChannelSolution> {
    let mut program = ChannelProgram::new(in_dim, out_dim);
    for (input, output) in conditions {
        program.require_maps(input, output)?;
    }
    program.solve()
}
