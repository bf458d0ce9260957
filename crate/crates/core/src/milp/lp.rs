//! Dense bounded-variable simplex.
//!
//! Cold solves run a two-phase primal simplex. Nonbasic variables sit at
//! one of their bounds, so box constraints never become tableau rows. The
//! tableau is periodically rebuilt from the original matrix for the current
//! basis so round-off does not accumulate. A solved [`Tableau`] can be
//! re-optimized after bound changes with the dual simplex, which is how
//! branch and bound warm-starts its children.

use crate::error::{Error, Result};

pub const FEASIBILITY_TOL: f64 = 1e-7;
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const HARRIS_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-11;
const REINVERT_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c.x` subject to the rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    /// `n` variables on `[0, inf)` with zero cost.
    pub fn new(n: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; n],
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { coefs, sense, rhs });
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (j, v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        for r in &self.rows {
            let lhs: f64 = r.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match r.sense {
                Sense::Le => lhs - r.rhs,
                Sense::Ge => r.rhs - lhs,
                Sense::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::domain("bound vectors do not match the variable count"));
        }
        if self.objective.iter().chain(&self.lower).any(|v| !v.is_finite()) {
            return Err(Error::domain("objective and lower bounds must be finite"));
        }
        if self.upper.iter().any(|v| v.is_nan()) {
            return Err(Error::domain("upper bound is NaN"));
        }
        for r in &self.rows {
            if !r.rhs.is_finite() || r.coefs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(Error::domain("row has a non-finite coefficient or bad index"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible { iterations: usize },
    Unbounded { iterations: usize },
}

impl LpOutcome {
    pub fn iterations(&self) -> usize {
        match self {
            LpOutcome::Optimal(s) => s.iterations,
            LpOutcome::Infeasible { iterations } | LpOutcome::Unbounded { iterations } => *iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum End {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Simplex state: structural columns first, then one slack per inequality
/// row and one artificial per `Ge`/`Eq` row.
#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    cols: usize,
    n: usize,
    a: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    lo: Vec<f64>,
    up: Vec<f64>,
    at_upper: Vec<bool>,
    cost: Vec<f64>,
    /// Row-major copy of the initial matrix and right-hand side.
    a0: Vec<f64>,
    b0: Vec<f64>,
    /// Column holding the initial unit vector of each row; these columns of
    /// the current tableau form the basis inverse.
    unit: Vec<usize>,
    first_artificial: usize,
    since_reinvert: usize,
    iterations: usize,
}

/// Basis snapshot sufficient to rebuild a [`Tableau`].
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Basis {
    basis: Vec<usize>,
    at_upper: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    fn value(&self, j: usize) -> f64 {
        if self.at_upper[j] {
            self.up[j]
        } else {
            self.lo[j]
        }
    }

    fn reduced_costs(&mut self) {
        let mut d = self.cost.clone();
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.a[i * self.cols..(i + 1) * self.cols];
            for (dj, aij) in d.iter_mut().zip(row) {
                *dj -= cb * aij;
            }
        }
        for i in 0..self.m {
            d[self.basis[i]] = 0.0;
        }
        self.d = d;
    }

    /// Basic values from the basis inverse and the nonbasic bounds.
    fn refresh_beta(&mut self) {
        let cols = self.cols;
        let mut rhs = self.b0.clone();
        for j in 0..cols {
            if self.is_basic[j] {
                continue;
            }
            let v = self.value(j);
            if v == 0.0 {
                continue;
            }
            for (k, r) in rhs.iter_mut().enumerate() {
                let a = self.a0[k * cols + j];
                if a != 0.0 {
                    *r -= a * v;
                }
            }
        }
        for i in 0..self.m {
            let row = &self.a[i * cols..(i + 1) * cols];
            self.beta[i] = self.unit.iter().zip(&rhs).map(|(&c, r)| row[c] * r).sum();
        }
    }

    /// Rebuilds the tableau for the current basis by Gauss-Jordan
    /// elimination with partial pivoting. `false` if the basis is singular.
    fn reinvert(&mut self) -> bool {
        let cols = self.cols;
        let m = self.m;
        let mut a = self.a0.clone();
        let mut order: Vec<usize> = Vec::with_capacity(m);
        let mut used = vec![false; m];
        let mut pivot_row = vec![0.0; cols];
        for &q in &self.basis {
            let mut best = None;
            let mut best_abs = SINGULAR_TOL;
            for (p, &u) in used.iter().enumerate() {
                let v = a[p * cols + q].abs();
                if !u && v > best_abs {
                    best_abs = v;
                    best = Some(p);
                }
            }
            let Some(p) = best else {
                return false;
            };
            used[p] = true;
            order.push(p);
            let piv = a[p * cols + q];
            for v in a[p * cols..(p + 1) * cols].iter_mut() {
                *v /= piv;
            }
            a[p * cols + q] = 1.0;
            pivot_row.copy_from_slice(&a[p * cols..(p + 1) * cols]);
            let nz: Vec<usize> = (0..cols).filter(|&j| pivot_row[j] != 0.0).collect();
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = a[i * cols + q];
                if f == 0.0 {
                    continue;
                }
                let row = &mut a[i * cols..(i + 1) * cols];
                for &j in &nz {
                    row[j] -= f * pivot_row[j];
                }
                row[q] = 0.0;
            }
        }
        let mut out = vec![0.0; m * cols];
        for (r, &p) in order.iter().enumerate() {
            out[r * cols..(r + 1) * cols].copy_from_slice(&a[p * cols..(p + 1) * cols]);
        }
        self.a = out;
        self.refresh_beta();
        self.reduced_costs();
        self.since_reinvert = 0;
        true
    }

    fn maybe_reinvert(&mut self) -> Result<()> {
        if self.since_reinvert >= REINVERT_EVERY.max(self.m) && !self.reinvert() {
            return Err(Error::Internal("simplex basis became singular".into()));
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.at(r, q);
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            for v in row.iter_mut() {
                *v /= p;
            }
            row[q] = 1.0;
        }
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        let nz: Vec<usize> = (0..cols).filter(|&j| pivot_row[j] != 0.0).collect();
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                row[j] -= f * pivot_row[j];
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * pivot_row[j];
            }
        }
        self.d[q] = 0.0;
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
        self.since_reinvert += 1;
    }

    /// Moves nonbasic `q` by `step`, updating the basic values.
    fn shift_basics(&mut self, q: usize, step: f64) {
        for i in 0..self.m {
            let alpha = self.at(i, q);
            if alpha != 0.0 {
                self.beta[i] -= step * alpha;
            }
        }
    }

    fn movable(&self, j: usize) -> bool {
        !self.is_basic[j] && self.up[j] > self.lo[j]
    }

    /// Bounded primal simplex from a primal feasible basis.
    fn primal(&mut self, limit: usize) -> Result<End> {
        self.reduced_costs();
        let mut degenerate = 0usize;
        let bland_after = 10 * (self.m + self.cols);
        let mut bland = false;
        loop {
            self.maybe_reinvert()?;
            let mut q = None;
            let mut best_gain = 0.0;
            for j in 0..self.cols {
                if !self.movable(j) {
                    continue;
                }
                let gain = if self.at_upper[j] { self.d[j] } else { -self.d[j] };
                if gain > OPTIMALITY_TOL {
                    if bland {
                        q = Some(j);
                        break;
                    }
                    if gain > best_gain {
                        best_gain = gain;
                        q = Some(j);
                    }
                }
            }
            let Some(q) = q else {
                return Ok(End::Optimal);
            };
            if self.iterations >= limit {
                return Err(Error::Internal(format!("simplex iteration limit {limit} reached")));
            }
            self.iterations += 1;
            let s = if self.at_upper[q] { -1.0 } else { 1.0 };

            // Harris two-pass ratio test: bound the step with relaxed
            // bounds, then take the largest pivot within it.
            let ratio = |t: &Tableau, i: usize, tol: f64| -> Option<f64> {
                let alpha = t.at(i, q);
                if alpha.abs() <= PIVOT_TOL {
                    return None;
                }
                let delta = s * alpha;
                let b = t.basis[i];
                if delta > 0.0 {
                    Some(((t.beta[i] - t.lo[b]).max(0.0) + tol) / delta)
                } else if t.up[b].is_finite() {
                    Some(((t.up[b] - t.beta[i]).max(0.0) + tol) / -delta)
                } else {
                    None
                }
            };
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                if let Some(r) = ratio(self, i, HARRIS_TOL) {
                    theta_max = theta_max.min(r);
                }
            }
            let range = self.up[q] - self.lo[q];
            if theta_max.is_infinite() && range.is_infinite() {
                return Ok(End::Unbounded);
            }
            let mut leave: Option<usize> = None;
            let mut theta = range;
            if range > theta_max {
                let mut best = 0.0;
                for i in 0..self.m {
                    let Some(r0) = ratio(self, i, 0.0) else {
                        continue;
                    };
                    if r0 > theta_max {
                        continue;
                    }
                    let better = if bland {
                        leave.is_none_or(|l| {
                            r0 < theta - DEGENERATE_STEP
                                || (r0 <= theta + DEGENERATE_STEP && self.basis[i] < self.basis[l])
                        })
                    } else {
                        self.at(i, q).abs() > best
                    };
                    if better {
                        best = self.at(i, q).abs();
                        leave = Some(i);
                        theta = r0;
                    }
                }
            }
            if theta < DEGENERATE_STEP {
                degenerate += 1;
                if degenerate > bland_after {
                    bland = true;
                }
            }
            self.shift_basics(q, s * theta);
            match leave {
                None => self.at_upper[q] = !self.at_upper[q],
                Some(r) => {
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = s * self.at(r, q) < 0.0;
                    let entering = self.value(q) + s * theta;
                    self.pivot(r, q);
                    self.beta[r] = entering;
                    self.at_upper[q] = false;
                }
            }
        }
    }

    fn bound_violation(&self, i: usize) -> f64 {
        let b = self.basis[i];
        let tol = FEASIBILITY_TOL * (1.0 + self.beta[i].abs());
        if self.beta[i] < self.lo[b] - tol {
            self.lo[b] - self.beta[i]
        } else if self.beta[i] > self.up[b] + tol {
            self.beta[i] - self.up[b]
        } else {
            0.0
        }
    }

    /// Bounded dual simplex from a dual feasible basis.
    fn dual(&mut self, limit: usize) -> Result<End> {
        loop {
            self.maybe_reinvert()?;
            let mut r = None;
            let mut worst = 0.0;
            for i in 0..self.m {
                let v = self.bound_violation(i);
                if v > worst {
                    worst = v;
                    r = Some(i);
                }
            }
            let Some(r) = r else {
                return Ok(End::Optimal);
            };
            if self.iterations >= limit {
                return Err(Error::Internal(format!("dual simplex iteration limit {limit} reached")));
            }
            self.iterations += 1;
            let b = self.basis[r];
            let below = self.beta[r] < self.lo[b];
            // Entering candidates move x_b towards its violated bound.
            let eligible = |t: &Tableau, j: usize| -> Option<f64> {
                if !t.movable(j) {
                    return None;
                }
                let alpha = t.at(r, j);
                if alpha.abs() <= PIVOT_TOL {
                    return None;
                }
                let ok = if below {
                    (alpha < 0.0) != t.at_upper[j]
                } else {
                    (alpha > 0.0) != t.at_upper[j]
                };
                ok.then_some(alpha.abs())
            };
            let mut ratio_max = f64::INFINITY;
            for j in 0..self.cols {
                if let Some(alpha) = eligible(self, j) {
                    ratio_max = ratio_max.min((self.d[j].abs() + OPTIMALITY_TOL) / alpha);
                }
            }
            if ratio_max.is_infinite() {
                return Ok(End::Infeasible);
            }
            let mut q = None;
            let mut best = 0.0;
            for j in 0..self.cols {
                if let Some(alpha) = eligible(self, j) {
                    if self.d[j].abs() / alpha <= ratio_max && alpha > best {
                        best = alpha;
                        q = Some(j);
                    }
                }
            }
            let q = q.expect("a candidate attains the minimum ratio");
            let target = if below { self.lo[b] } else { self.up[b] };
            let step = (self.beta[r] - target) / self.at(r, q);
            let entering = self.value(q) + step;
            self.shift_basics(q, step);
            self.at_upper[b] = !below;
            self.pivot(r, q);
            self.beta[r] = entering;
            self.at_upper[q] = false;
        }
    }

    fn solution(&self, iterations: usize) -> LpSolution {
        let mut x: Vec<f64> = (0..self.n).map(|j| self.value(j)).collect();
        for i in 0..self.m {
            if self.basis[i] < self.n {
                x[self.basis[i]] = self.beta[i];
            }
        }
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[j], self.up[j]);
        }
        let objective = x.iter().zip(&self.cost).map(|(v, c)| v * c).sum();
        LpSolution {
            x,
            objective,
            iterations,
        }
    }

    fn limit(&self) -> usize {
        self.iterations + 50 * (self.m + self.cols) + 10_000
    }

    pub(crate) fn basis(&self) -> Basis {
        Basis {
            basis: self.basis.clone(),
            at_upper: self.at_upper.clone(),
        }
    }

    /// Replaces the structural bounds and re-optimizes with the dual
    /// simplex, first restoring `basis` when given. The basis must come
    /// from a tableau of the same program.
    pub(crate) fn resolve(&mut self, lower: &[f64], upper: &[f64], basis: Option<&Basis>) -> Result<LpOutcome> {
        if lower.iter().zip(upper).any(|(l, u)| *l > *u + FEASIBILITY_TOL) {
            return Ok(LpOutcome::Infeasible { iterations: 0 });
        }
        let start = self.iterations;
        self.lo[..self.n].copy_from_slice(lower);
        self.up[..self.n].copy_from_slice(upper);
        if let Some(b) = basis {
            self.basis.clone_from(&b.basis);
            self.at_upper.clone_from(&b.at_upper);
            self.is_basic.iter_mut().for_each(|v| *v = false);
            for &j in &self.basis {
                self.is_basic[j] = true;
            }
        }
        for j in 0..self.cols {
            if self.at_upper[j] && !self.up[j].is_finite() {
                self.at_upper[j] = false;
            }
        }
        if basis.is_some() {
            if !self.reinvert() {
                return Err(Error::Internal("stored basis is singular".into()));
            }
        } else {
            self.refresh_beta();
        }
        let limit = self.limit();
        if self.dual(limit)? != End::Optimal {
            return Ok(LpOutcome::Infeasible {
                iterations: self.iterations - start,
            });
        }
        let limit = self.limit();
        if self.primal(limit)? == End::Unbounded {
            return Ok(LpOutcome::Unbounded {
                iterations: self.iterations - start,
            });
        }
        Ok(LpOutcome::Optimal(self.solution(self.iterations - start)))
    }
}

/// Cold solve that also returns the final tableau when optimal.
pub(crate) fn solve_tableau(lp: &LinearProgram) -> Result<(LpOutcome, Option<Tableau>)> {
    lp.validate()?;
    let n = lp.num_vars();
    if (0..n).any(|j| lp.lower[j] > lp.upper[j] + FEASIBILITY_TOL) {
        return Ok((LpOutcome::Infeasible { iterations: 0 }, None));
    }
    let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);

    // Rows are flipped so the right-hand side is non-negative with every
    // structural variable at its lower bound.
    let mut rows = Vec::with_capacity(lp.rows.len());
    for r in &lp.rows {
        let shifted: f64 = r.rhs - r.coefs.iter().map(|&(j, a)| a * lp.lower[j]).sum::<f64>();
        let live = r.coefs.iter().any(|&(j, a)| a != 0.0 && lp.upper[j] > lp.lower[j]);
        if !live {
            let ok = match r.sense {
                Sense::Le => shifted >= -FEASIBILITY_TOL * scale,
                Sense::Ge => shifted <= FEASIBILITY_TOL * scale,
                Sense::Eq => shifted.abs() <= FEASIBILITY_TOL * scale,
            };
            if !ok {
                return Ok((LpOutcome::Infeasible { iterations: 0 }, None));
            }
        }
        let flip = shifted < 0.0;
        let sense = match (r.sense, flip) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        };
        rows.push((r, if flip { -1.0 } else { 1.0 }, sense));
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.2 != Sense::Eq).count();
    let artificials = rows.iter().filter(|r| r.2 != Sense::Le).count();
    let cols = n + slacks + artificials;
    let mut t = Tableau {
        m,
        cols,
        n,
        a: vec![0.0; m * cols],
        beta: vec![0.0; m],
        d: vec![0.0; cols],
        basis: vec![0; m],
        is_basic: vec![false; cols],
        lo: vec![0.0; cols],
        up: vec![f64::INFINITY; cols],
        at_upper: vec![false; cols],
        cost: vec![0.0; cols],
        a0: Vec::new(),
        b0: vec![0.0; m],
        unit: vec![0; m],
        first_artificial: n + slacks,
        since_reinvert: 0,
        iterations: 0,
    };
    t.lo[..n].copy_from_slice(&lp.lower);
    t.up[..n].copy_from_slice(&lp.upper);
    let mut next_slack = n;
    let mut next_art = n + slacks;
    for (i, (r, sign, sense)) in rows.iter().enumerate() {
        for &(c, a) in &r.coefs {
            t.a[i * cols + c] += sign * a;
        }
        t.b0[i] = sign * r.rhs;
        match sense {
            Sense::Le => {
                t.a[i * cols + next_slack] = 1.0;
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                t.a[i * cols + next_slack] = -1.0;
                next_slack += 1;
                t.a[i * cols + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
            Sense::Eq => {
                t.a[i * cols + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
        t.is_basic[t.basis[i]] = true;
        t.unit[i] = t.basis[i];
    }
    t.a0 = t.a.clone();
    t.refresh_beta();
    for v in t.beta.iter_mut() {
        if *v < 0.0 && *v > -FEASIBILITY_TOL * scale {
            *v = 0.0;
        }
    }

    if artificials > 0 {
        for c in t.cost.iter_mut().skip(t.first_artificial) {
            *c = 1.0;
        }
        let limit = t.limit();
        t.primal(limit)?;
        let infeasibility: f64 = (0..m)
            .filter(|&i| t.basis[i] >= t.first_artificial)
            .map(|i| t.beta[i].abs())
            .sum();
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok((LpOutcome::Infeasible { iterations: t.iterations }, None));
        }
        for j in t.first_artificial..cols {
            t.up[j] = 0.0;
            t.at_upper[j] = false;
        }
    }

    t.cost = vec![0.0; cols];
    t.cost[..n].copy_from_slice(&lp.objective);
    let limit = t.limit();
    if t.primal(limit)? == End::Unbounded {
        return Ok((LpOutcome::Unbounded { iterations: t.iterations }, None));
    }
    // Rebuild once more so the reported values carry no pivot drift, and
    // repair any small violations that exposes.
    if !t.reinvert() {
        return Err(Error::Internal("optimal basis is singular".into()));
    }
    let limit = t.limit();
    if t.dual(limit)? != End::Optimal {
        return Ok((LpOutcome::Infeasible { iterations: t.iterations }, None));
    }
    let limit = t.limit();
    if t.primal(limit)? == End::Unbounded {
        return Ok((LpOutcome::Unbounded { iterations: t.iterations }, None));
    }
    let sol = t.solution(t.iterations);
    Ok((LpOutcome::Optimal(sol), Some(t)))
}

/// Solves the program. `Err` only for malformed input or a runaway pivot
/// sequence.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpOutcome> {
    solve_tableau(lp).map(|(o, _)| o)
}
