//! Exact rational linear programming.
//!
//! Solves `min c.x  s.t.  A x = b, x >= 0` with a two-phase tableau simplex
//! over arbitrary-precision rationals. Pivoting is Dantzig's rule with a
//! fallback to Bland's least-index rule on degenerate stalls. Optimal
//! results carry a primal vertex and a dual vector; [`verify`] checks them
//! against the program without touching solver state. By default a
//! floating-point simplex first guesses an optimal basis; its answer is used
//! only after the exact checks in [`verify`] pass.

mod guided;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::Rational;

pub const DEFAULT_MAX_PIVOTS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(u64),
}

type SparseRow = Vec<(usize, Rational)>;

/// `min objective.x` subject to `rows[i].x = rhs[i]` and `x >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    objective: Vec<Rational>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram { num_vars, rows: Vec::new(), rhs: Vec::new(), objective: vec![Rational::zero(); num_vars] }
    }

    /// Adds an equality row. Repeated indices are summed and zero entries dropped.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, Rational)>, rhs: Rational) -> Result<usize, LpError> {
        if let Some(&(j, _)) = coeffs.iter().find(|(j, _)| *j >= self.num_vars) {
            return Err(LpError::DimensionMismatch(format!("column {j} >= {} variables", self.num_vars)));
        }
        let mut row = coeffs;
        row.sort_by_key(|(j, _)| *j);
        let mut merged: SparseRow = Vec::with_capacity(row.len());
        for (j, v) in row {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += v,
                _ => merged.push((j, v)),
            }
        }
        merged.retain(|(_, v)| !v.is_zero());
        self.rows.push(merged);
        self.rhs.push(rhs);
        Ok(self.rows.len() - 1)
    }

    pub fn set_objective(&mut self, var: usize, coeff: Rational) -> Result<(), LpError> {
        if var >= self.num_vars {
            return Err(LpError::DimensionMismatch(format!("objective column {var} >= {}", self.num_vars)));
        }
        self.objective[var] = coeff;
        Ok(())
    }

    /// Builds a program from dense data, checking every dimension.
    pub fn from_dense(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> Result<Self, LpError> {
        if a.len() != b.len() {
            return Err(LpError::DimensionMismatch(format!("{} rows but {} right-hand sides", a.len(), b.len())));
        }
        let mut lp = LinearProgram::new(c.len());
        for (row, rhs) in a.iter().zip(b) {
            if row.len() != c.len() {
                return Err(LpError::DimensionMismatch(format!(
                    "row of length {} for {} variables",
                    row.len(),
                    c.len()
                )));
            }
            let coeffs = row.iter().cloned().enumerate().filter(|(_, v)| !v.is_zero()).collect();
            lp.add_constraint(coeffs, rhs.clone())?;
        }
        lp.objective = c.to_vec();
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, Rational)>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    pub fn objective(&self) -> &[Rational] {
        &self.objective
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub value: Option<Rational>,
    pub primal: Vec<Rational>,
    pub dual: Vec<Rational>,
    pub pivots: u64,
    pub method: SolveMethod,
}

/// Which solver produced an optimal result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// Exact tableau simplex.
    Exact,
    /// Floating-point basis with exact primal and dual recovered and verified.
    Guided,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub max_pivots: u64,
    /// Try the floating-point guided solve before the exact tableau.
    pub guided: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { max_pivots: DEFAULT_MAX_PIVOTS, guided: true }
    }
}

pub fn solve_min(lp: &LinearProgram) -> Result<LpResult, LpError> {
    solve_min_with(lp, SolveOptions::default())
}

pub fn solve_min_with(lp: &LinearProgram, options: SolveOptions) -> Result<LpResult, LpError> {
    if lp.objective.len() != lp.num_vars || lp.rows.len() != lp.rhs.len() {
        return Err(LpError::DimensionMismatch("objective or right-hand side length".into()));
    }
    let mut spent = 0;
    if options.guided && lp.num_vars > 0 && !lp.rows.is_empty() {
        match guided::solve(lp, options.max_pivots)? {
            guided::Guess::Solved(result) => return Ok(result),
            guided::Guess::Inconclusive { pivots } => spent = pivots,
        }
    }
    let mut result = Tableau::new(lp, options.max_pivots).solve()?;
    result.pivots += spent;
    Ok(result)
}

/// Exact optimality check: primal feasibility, dual feasibility
/// (`A^T y <= c`) and equal objective values.
pub fn verify(lp: &LinearProgram, result: &LpResult) -> bool {
    if result.status != LpStatus::Optimal {
        return false;
    }
    let (x, y) = (&result.primal, &result.dual);
    if x.len() != lp.num_vars || y.len() != lp.rows.len() {
        return false;
    }
    if x.iter().any(Signed::is_negative) {
        return false;
    }
    for (row, b) in lp.rows.iter().zip(&lp.rhs) {
        let ax: Rational = row.iter().map(|(j, a)| a * &x[*j]).sum();
        if &ax != b {
            return false;
        }
    }
    let mut aty = vec![Rational::zero(); lp.num_vars];
    for (row, yi) in lp.rows.iter().zip(y) {
        if yi.is_zero() {
            continue;
        }
        for (j, a) in row {
            aty[*j] += a * yi;
        }
    }
    if aty.iter().zip(&lp.objective).any(|(l, c)| l > c) {
        return false;
    }
    let primal_value = lp.objective_value(x);
    let dual_value: Rational = lp.rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    match &result.value {
        Some(v) => *v == primal_value && primal_value == dual_value,
        None => false,
    }
}

/// Degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 64;

struct Tableau {
    n: usize,
    rows: Vec<SparseRow>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Rows negated to make the right-hand side nonnegative.
    flipped: Vec<bool>,
    m_orig: usize,
    costs: Vec<Rational>,
    reduced: Vec<Rational>,
    value: Rational,
    pivots: u64,
    max_pivots: u64,
}

impl Tableau {
    fn new(lp: &LinearProgram, max_pivots: u64) -> Self {
        let n = lp.num_vars;
        let m = lp.rows.len();
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut flipped = Vec::with_capacity(m);
        for (i, (row, b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let flip = b.is_negative();
            let mut r: SparseRow = row.iter().map(|(j, v)| (*j, if flip { -v.clone() } else { v.clone() })).collect();
            r.push((n + i, Rational::from_integer(1.into())));
            rows.push(r);
            rhs.push(if flip { -b.clone() } else { b.clone() });
            flipped.push(flip);
        }
        Tableau {
            n,
            rows,
            rhs,
            basis: (n..n + m).collect(),
            flipped,
            m_orig: m,
            costs: lp.objective.clone(),
            reduced: Vec::new(),
            value: Rational::zero(),
            pivots: 0,
            max_pivots,
        }
    }

    fn solve(mut self) -> Result<LpResult, LpError> {
        let total = self.n + self.m_orig;
        // phase one: minimize the sum of artificials
        let mut phase_one = vec![Rational::zero(); total];
        phase_one[self.n..].fill(Rational::from_integer(1.into()));
        self.price(&phase_one);
        if self.iterate()? == LpStatus::Unbounded {
            unreachable!("phase one objective is bounded below by zero");
        }
        if self.value.is_positive() {
            return Ok(LpResult {
                status: LpStatus::Infeasible,
                value: None,
                primal: Vec::new(),
                dual: Vec::new(),
                pivots: self.pivots,
                method: SolveMethod::Exact,
            });
        }
        self.expel_artificials()?;

        let mut phase_two = vec![Rational::zero(); total];
        phase_two[..self.n].clone_from_slice(&self.costs);
        self.price(&phase_two);
        if self.iterate()? == LpStatus::Unbounded {
            return Ok(LpResult {
                status: LpStatus::Unbounded,
                value: None,
                primal: Vec::new(),
                dual: Vec::new(),
                pivots: self.pivots,
                method: SolveMethod::Exact,
            });
        }

        let mut primal = vec![Rational::zero(); self.n];
        for (i, &k) in self.basis.iter().enumerate() {
            if k < self.n {
                primal[k] = self.rhs[i].clone();
            }
        }
        // reduced cost of artificial i is -y'_i in the sign-normalized system
        let dual: Vec<Rational> = (0..self.m_orig)
            .map(|i| {
                let y = -self.reduced[self.n + i].clone();
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let value: Rational = self.costs.iter().zip(&primal).map(|(c, x)| c * x).sum();
        Ok(LpResult {
            status: LpStatus::Optimal,
            value: Some(value),
            primal,
            dual,
            pivots: self.pivots,
            method: SolveMethod::Exact,
        })
    }

    /// Recomputes reduced costs and objective value for cost vector `c`.
    fn price(&mut self, c: &[Rational]) {
        let mut reduced = c.to_vec();
        let mut value = Rational::zero();
        for (i, &k) in self.basis.iter().enumerate() {
            let ck = &c[k];
            if ck.is_zero() {
                continue;
            }
            for (j, a) in &self.rows[i] {
                reduced[*j] -= ck * a;
            }
            value += ck * &self.rhs[i];
        }
        self.reduced = reduced;
        self.value = value;
    }

    fn entry(&self, i: usize, j: usize) -> Option<&Rational> {
        self.rows[i].binary_search_by_key(&j, |(k, _)| *k).ok().map(|p| &self.rows[i][p].1)
    }

    /// Simplex iterations on the current cost row. Entering columns follow the
    /// most negative reduced cost; after `DEGENERATE_STREAK` pivots without
    /// progress the rule switches to Bland's least index until the objective
    /// strictly improves, which rules out cycling.
    fn iterate(&mut self) -> Result<LpStatus, LpError> {
        let mut stalled = 0usize;
        loop {
            let entering = if stalled >= DEGENERATE_STREAK {
                (0..self.n).find(|&j| self.reduced[j].is_negative())
            } else {
                (0..self.n)
                    .filter(|&j| self.reduced[j].is_negative())
                    .min_by(|&i, &j| self.reduced[i].cmp(&self.reduced[j]).then(i.cmp(&j)))
            };
            let Some(s) = entering else {
                return Ok(LpStatus::Optimal);
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let Some(a) = self.entry(i, s) else { continue };
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best || (ratio == best && self.basis[i] < self.basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(LpStatus::Unbounded);
            };
            if ratio.is_zero() {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.pivot(r, s)?;
        }
    }

    fn pivot(&mut self, r: usize, s: usize) -> Result<(), LpError> {
        if self.pivots >= self.max_pivots {
            return Err(LpError::PivotLimit(self.max_pivots));
        }
        self.pivots += 1;
        let a = self.entry(r, s).expect("pivot on a structural zero").clone();
        for (_, v) in self.rows[r].iter_mut() {
            *v /= &a;
        }
        self.rhs[r] /= &a;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let Some(f) = self.entry(i, s).cloned() else { continue };
            self.rows[i] = subtract_scaled(&self.rows[i], &f, &pivot_row);
            self.rhs[i] -= &f * &pivot_rhs;
        }
        let f = self.reduced[s].clone();
        if !f.is_zero() {
            for (j, v) in &pivot_row {
                self.reduced[*j] -= &f * v;
            }
            self.value += &f * &pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = s;
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis; rows with no
    /// structural entry left are redundant and dropped.
    fn expel_artificials(&mut self) -> Result<(), LpError> {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] < self.n {
                i += 1;
                continue;
            }
            let candidate = self.rows[i].iter().find(|(j, _)| *j < self.n).map(|(j, _)| *j);
            match candidate {
                Some(j) => {
                    self.pivot(i, j)?;
                    i += 1;
                }
                None => {
                    self.rows.remove(i);
                    self.rhs.remove(i);
                    self.basis.remove(i);
                }
            }
        }
        Ok(())
    }
}

/// `row - f * pivot` for sorted sparse rows.
fn subtract_scaled(row: &SparseRow, f: &Rational, pivot: &SparseRow) -> SparseRow {
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut p, mut q) = (0, 0);
    while p < row.len() || q < pivot.len() {
        let take_row = q >= pivot.len() || (p < row.len() && row[p].0 < pivot[q].0);
        let take_pivot = p >= row.len() || (q < pivot.len() && pivot[q].0 < row[p].0);
        if take_row {
            out.push(row[p].clone());
            p += 1;
        } else if take_pivot {
            out.push((pivot[q].0, -(f * &pivot[q].1)));
            q += 1;
        } else {
            let v = &row[p].1 - f * &pivot[q].1;
            if !v.is_zero() {
                out.push((row[p].0, v));
            }
            p += 1;
            q += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn dense(a: &[&[i64]], b: &[i64], c: &[i64]) -> LinearProgram {
        let a: Vec<Vec<Rational>> = a.iter().map(|r| r.iter().map(|&v| q(v)).collect()).collect();
        let b: Vec<Rational> = b.iter().map(|&v| q(v)).collect();
        let c: Vec<Rational> = c.iter().map(|&v| q(v)).collect();
        LinearProgram::from_dense(&a, &b, &c).unwrap()
    }

    #[test]
    fn simple_sum() {
        let lp = dense(&[&[1, 1]], &[1], &[1, 1]);
        let res = solve_min(&lp).unwrap();
        assert_eq!(res.status, LpStatus::Optimal);
        assert_eq!(res.value, Some(q(1)));
        assert!(verify(&lp, &res));
    }

    #[test]
    fn negative_objective_picks_vertex() {
        let lp = dense(&[&[1, 1]], &[1], &[-1, 0]);
        let res = solve_min(&lp).unwrap();
        assert_eq!(res.value, Some(q(-1)));
        assert_eq!(res.primal, vec![q(1), q(0)]);
        assert!(verify(&lp, &res));
    }

    #[test]
    fn infeasible() {
        let lp = dense(&[&[1, 0]], &[-1], &[0, 0]);
        assert_eq!(solve_min(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let lp = dense(&[&[1, -1]], &[0], &[-1, 0]);
        assert_eq!(solve_min(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn verify_rejects_tampering() {
        let lp = dense(&[&[1, 1]], &[1], &[1, 1]);
        let res = solve_min(&lp).unwrap();
        let mut bad_value = res.clone();
        bad_value.value = Some(q(2));
        assert!(!verify(&lp, &bad_value));
        let mut bad_primal = res.clone();
        bad_primal.primal = vec![q(2), q(0)];
        assert!(!verify(&lp, &bad_primal));
        let mut bad_dual = res;
        bad_dual.dual = vec![q(5)];
        assert!(!verify(&lp, &bad_dual));
    }

    #[test]
    fn redundant_and_negated_rows() {
        // x1 + x2 = 2 stated twice, once negated; min x1 - x2
        let lp = dense(&[&[1, 1, 0], &[-1, -1, 0], &[0, 1, 1]], &[2, -2, 1], &[1, -1, 0]);
        let res = solve_min(&lp).unwrap();
        assert_eq!(res.value, Some(q(0)));
        assert!(verify(&lp, &res));
    }

    #[test]
    fn dimension_errors() {
        let mut lp = LinearProgram::new(2);
        assert!(matches!(lp.add_constraint(vec![(2, q(1))], q(0)), Err(LpError::DimensionMismatch(_))));
        assert!(LinearProgram::from_dense(&[vec![q(1)]], &[q(1)], &[q(1), q(1)]).is_err());
        assert!(LinearProgram::from_dense(&[vec![q(1)]], &[], &[q(1)]).is_err());
    }

    #[test]
    fn pivot_limit_is_an_error() {
        let lp = dense(&[&[1, 1, 1, 0], &[1, 2, 0, 1]], &[4, 6], &[-1, -1, 0, 0]);
        let err = solve_min_with(&lp, SolveOptions { max_pivots: 1, guided: false }).unwrap_err();
        assert_eq!(err, LpError::PivotLimit(1));
        assert!(verify(&lp, &solve_min(&lp).unwrap()));
    }
}
