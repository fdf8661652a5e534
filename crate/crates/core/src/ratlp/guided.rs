//! Floating-point simplex used only to guess an optimal basis. The guess is
//! turned into exact primal and dual vectors, which are accepted only if
//! they pass the exact optimality checks; otherwise the caller falls back to
//! the exact tableau.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{verify, LinearProgram, LpError, LpResult, LpStatus, SolveMethod, SparseRow};
use crate::Rational;

const EPS: f64 = 1e-9;
const DROP: f64 = 1e-12;
const DEGENERATE_STREAK: usize = 64;
const MAX_DENOMINATOR: i64 = 1 << 24;

/// Outcome of the floating-point attempt.
pub(super) enum Guess {
    Solved(LpResult),
    /// No verified answer; solve exactly.
    Inconclusive {
        pivots: u64,
    },
}

pub(super) fn solve(lp: &LinearProgram, max_pivots: u64) -> Result<Guess, LpError> {
    let mut t = FloatTableau::new(lp, max_pivots);
    let Some(basis) = t.run()? else {
        return Ok(Guess::Inconclusive { pivots: t.pivots });
    };
    let pivots = t.pivots;
    match certify(lp, &basis, &t) {
        Some(mut result) => {
            result.pivots = pivots;
            Ok(Guess::Solved(result))
        }
        None => Ok(Guess::Inconclusive { pivots }),
    }
}

struct FloatTableau {
    n: usize,
    m: usize,
    width: usize,
    a: Vec<f64>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
    flipped: Vec<bool>,
    costs: Vec<f64>,
    reduced: Vec<f64>,
    pivots: u64,
    max_pivots: u64,
}

/// Basis columns of the active rows, as `(row, column)`.
type Basis = Vec<(usize, usize)>;

impl FloatTableau {
    fn new(lp: &LinearProgram, max_pivots: u64) -> Self {
        let n = lp.num_vars;
        let m = lp.rows.len();
        let width = n + m;
        let mut a = vec![0.0; m * width];
        let mut rhs = vec![0.0; m];
        let mut flipped = vec![false; m];
        for (i, (row, b)) in lp.rows.iter().zip(&lp.rhs).enumerate() {
            let flip = b.is_negative();
            let s = if flip { -1.0 } else { 1.0 };
            for (j, v) in row {
                a[i * width + j] = s * to_f64(v);
            }
            a[i * width + n + i] = 1.0;
            rhs[i] = s * to_f64(b);
            flipped[i] = flip;
        }
        FloatTableau {
            n,
            m,
            width,
            a,
            rhs,
            basis: (n..n + m).collect(),
            active: vec![true; m],
            flipped,
            costs: lp.objective.iter().map(to_f64).collect(),
            reduced: Vec::new(),
            pivots: 0,
            max_pivots,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.width..(i + 1) * self.width]
    }

    fn price(&mut self, c: &[f64]) {
        let mut reduced = c.to_vec();
        for i in 0..self.m {
            let ck = c[self.basis[i]];
            if !self.active[i] || ck == 0.0 {
                continue;
            }
            for (r, v) in reduced.iter_mut().zip(self.row(i)) {
                *r -= ck * v;
            }
        }
        self.reduced = reduced;
    }

    /// Returns the optimal basis, or `None` when the float run is not usable.
    fn run(&mut self) -> Result<Option<Basis>, LpError> {
        let mut phase_one = vec![0.0; self.width];
        phase_one[self.n..].fill(1.0);
        self.price(&phase_one);
        if !self.iterate()? {
            return Ok(None);
        }
        let infeasibility: f64 = (0..self.m).filter(|&i| self.basis[i] >= self.n).map(|i| self.rhs[i]).sum();
        if infeasibility > 1e-7 {
            return Ok(None);
        }
        for i in 0..self.m {
            if self.basis[i] < self.n {
                continue;
            }
            let row = self.row(i);
            let best =
                (0..self.n).filter(|&j| row[j].abs() > 1e-7).max_by(|&x, &y| row[x].abs().total_cmp(&row[y].abs()));
            match best {
                Some(j) => self.pivot(i, j)?,
                None => self.active[i] = false,
            }
        }
        let mut phase_two = vec![0.0; self.width];
        phase_two[..self.n].copy_from_slice(&self.costs);
        self.price(&phase_two);
        if !self.iterate()? {
            return Ok(None);
        }
        Ok(Some((0..self.m).filter(|&i| self.active[i]).map(|i| (i, self.basis[i])).collect()))
    }

    /// Simplex iterations; false on apparent unboundedness.
    fn iterate(&mut self) -> Result<bool, LpError> {
        let mut stalled = 0usize;
        loop {
            let candidates = (0..self.n).filter(|&j| self.reduced[j] < -EPS);
            let entering = if stalled >= DEGENERATE_STREAK {
                candidates.into_iter().next()
            } else {
                candidates.min_by(|&x, &y| self.reduced[x].total_cmp(&self.reduced[y]))
            };
            let Some(s) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64, f64)> = None;
            for i in 0..self.m {
                let v = self.a[i * self.width + s];
                if !self.active[i] || v <= EPS {
                    continue;
                }
                let ratio = self.rhs[i].max(0.0) / v;
                leave = match leave {
                    None => Some((i, ratio, v)),
                    Some((r, best, bv)) => {
                        let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                        let better = if tie {
                            if stalled >= DEGENERATE_STREAK {
                                self.basis[i] < self.basis[r]
                            } else {
                                v > bv
                            }
                        } else {
                            ratio < best
                        };
                        if better {
                            Some((i, ratio, v))
                        } else {
                            Some((r, best, bv))
                        }
                    }
                };
            }
            let Some((r, ratio, _)) = leave else {
                return Ok(false);
            };
            stalled = if ratio <= EPS { stalled + 1 } else { 0 };
            self.pivot(r, s)?;
        }
    }

    fn pivot(&mut self, r: usize, s: usize) -> Result<(), LpError> {
        if self.pivots >= self.max_pivots {
            return Err(LpError::PivotLimit(self.max_pivots));
        }
        self.pivots += 1;
        let w = self.width;
        let p = self.a[r * w + s];
        for v in &mut self.a[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.rhs[r] /= p;
        let pivot_row: Vec<(usize, f64)> =
            self.a[r * w..(r + 1) * w].iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + s];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[i * w..(i + 1) * w];
            for &(j, v) in &pivot_row {
                let x = row[j] - f * v;
                row[j] = if x.abs() < DROP { 0.0 } else { x };
            }
            row[s] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
        }
        let f = self.reduced[s];
        if f != 0.0 {
            for &(j, v) in &pivot_row {
                self.reduced[j] -= f * v;
            }
            self.reduced[s] = 0.0;
        }
        self.basis[r] = s;
        Ok(())
    }
}

fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact primal and dual vectors for the float basis, if they verify.
fn certify(lp: &LinearProgram, basis: &Basis, t: &FloatTableau) -> Option<LpResult> {
    let n = lp.num_vars;
    let m = lp.rows.len();
    let rounded_primal = || -> Option<Vec<Rational>> {
        let mut x = vec![Rational::zero(); n];
        for &(i, j) in basis {
            x[j] = approximate(t.rhs[i])?;
        }
        primal_feasible(lp, &x).then_some(x)
    };
    let x = rounded_primal().or_else(|| {
        let x = exact_primal(lp, basis)?;
        primal_feasible(lp, &x).then_some(x)
    })?;
    let value = lp.objective_value(&x);
    let dual_ok = |y: &Vec<Rational>| {
        let candidate = LpResult {
            status: LpStatus::Optimal,
            value: Some(value.clone()),
            primal: x.clone(),
            dual: y.clone(),
            pivots: 0,
            method: SolveMethod::Guided,
        };
        verify(lp, &candidate)
    };
    let rounded_dual = || -> Option<Vec<Rational>> {
        let mut y = vec![Rational::zero(); m];
        for (i, yi) in y.iter_mut().enumerate() {
            if !t.active[i] {
                continue;
            }
            let v = approximate(-t.reduced[n + i])?;
            *yi = if t.flipped[i] { -v } else { v };
        }
        dual_ok(&y).then_some(y)
    };
    let y = rounded_dual().or_else(|| {
        let y = exact_dual(lp, basis)?;
        dual_ok(&y).then_some(y)
    })?;
    Some(LpResult {
        status: LpStatus::Optimal,
        value: Some(value),
        primal: x,
        dual: y,
        pivots: 0,
        method: SolveMethod::Guided,
    })
}

fn primal_feasible(lp: &LinearProgram, x: &[Rational]) -> bool {
    x.iter().all(|v| !v.is_negative())
        && lp.rows.iter().zip(&lp.rhs).all(|(row, b)| &row.iter().map(|(j, a)| a * &x[*j]).sum::<Rational>() == b)
}

/// Solves `A[rows, cols] x = b[rows]` exactly for the basis columns.
fn exact_primal(lp: &LinearProgram, basis: &Basis) -> Option<Vec<Rational>> {
    let col_index: std::collections::HashMap<usize, usize> =
        basis.iter().enumerate().map(|(k, &(_, j))| (j, k)).collect();
    let rows: Vec<SparseRow> = basis
        .iter()
        .map(|&(i, _)| {
            let mut r: SparseRow =
                lp.rows[i].iter().filter_map(|(j, v)| col_index.get(j).map(|&k| (k, v.clone()))).collect();
            r.sort_by_key(|(k, _)| *k);
            r
        })
        .collect();
    let rhs = basis.iter().map(|&(i, _)| lp.rhs[i].clone()).collect();
    let xb = solve_square(rows, rhs, basis.len())?;
    let mut x = vec![Rational::zero(); lp.num_vars];
    for (k, &(_, j)) in basis.iter().enumerate() {
        x[j] = xb[k].clone();
    }
    Some(x)
}

/// Solves `A[rows, cols]^T y = c[cols]` exactly; other rows get `y = 0`.
fn exact_dual(lp: &LinearProgram, basis: &Basis) -> Option<Vec<Rational>> {
    let col_index: std::collections::HashMap<usize, usize> =
        basis.iter().enumerate().map(|(k, &(_, j))| (j, k)).collect();
    let mut rows: Vec<SparseRow> = vec![Vec::new(); basis.len()];
    for (k, &(i, _)) in basis.iter().enumerate() {
        for (j, v) in &lp.rows[i] {
            if let Some(&c) = col_index.get(j) {
                rows[c].push((k, v.clone()));
            }
        }
    }
    let rhs = basis.iter().map(|&(_, j)| lp.objective[j].clone()).collect();
    let yb = solve_square(rows, rhs, basis.len())?;
    let mut y = vec![Rational::zero(); lp.rows.len()];
    for (k, &(i, _)) in basis.iter().enumerate() {
        y[i] = yb[k].clone();
    }
    Some(y)
}

/// Sparse Gaussian elimination on a square system; `None` if singular.
fn solve_square(mut rows: Vec<SparseRow>, mut rhs: Vec<Rational>, k: usize) -> Option<Vec<Rational>> {
    if rows.len() != k {
        return None;
    }
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(k);
    for col in 0..k {
        let entry = |r: &SparseRow| r.binary_search_by_key(&col, |(j, _)| *j).ok();
        let (pos, &pr) = remaining
            .iter()
            .enumerate()
            .filter(|(_, &r)| entry(&rows[r]).is_some())
            .min_by_key(|(_, &r)| rows[r].len())?;
        remaining.swap_remove(pos);
        let pivot_row = std::mem::take(&mut rows[pr]);
        let pv = pivot_row[entry(&pivot_row).expect("chosen for its entry")].1.clone();
        let pivot_row: SparseRow = pivot_row.into_iter().map(|(j, v)| (j, v / &pv)).collect();
        rhs[pr] = &rhs[pr] / &pv;
        for &r in &remaining {
            if let Some(p) = entry(&rows[r]) {
                let f = rows[r][p].1.clone();
                rows[r] = super::subtract_scaled(&rows[r], &f, &pivot_row);
                let delta = &f * &rhs[pr];
                rhs[r] -= delta;
            }
        }
        rows[pr] = pivot_row;
        order.push((col, pr));
    }
    let mut x = vec![Rational::zero(); k];
    for &(col, r) in order.iter().rev() {
        let mut v = rhs[r].clone();
        for (j, a) in &rows[r] {
            if *j != col {
                v -= a * &x[*j];
            }
        }
        x[col] = v;
    }
    Some(x)
}

/// Nearest rational with a small denominator, by continued fractions.
fn approximate(v: f64) -> Option<Rational> {
    if !v.is_finite() {
        return None;
    }
    let tol = 1e-9 * (1.0 + v.abs());
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if k1 > BigInt::from(MAX_DENOMINATOR) {
            return None;
        }
        let approx = h1.to_f64()? / k1.to_f64()?;
        if (approx - v).abs() <= tol {
            return Some(Rational::new(h1, k1));
        }
        let frac = x - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        x = 1.0 / frac;
    }
    None
}
