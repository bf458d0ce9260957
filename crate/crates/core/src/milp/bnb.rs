//! Depth-first branch and bound over simplex relaxations. Children are
//! re-optimized from the parent basis with the dual simplex.

use serde::{Deserialize, Serialize};

use super::lp::{solve_tableau, Basis, LinearProgram, LpOutcome, Tableau};
use crate::error::{Error, Result};

pub const INTEGRALITY_TOL: f64 = 1e-6;
const PRUNE_REL_TOL: f64 = 1e-9;

/// A linear program with some integer columns. Lower `priority` values are
/// branched on first.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub integer: Vec<bool>,
    pub priority: Vec<u8>,
}

impl MilpProblem {
    /// Integer solutions within `tol` of every row and bound.
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.lp.num_vars()
            && self.lp.max_violation(x) <= tol
            && x
                .iter()
                .zip(&self.integer)
                .all(|(v, &int)| !int || (v - v.round()).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BnbStats {
    pub nodes: usize,
    pub lp_iterations: usize,
}

impl std::ops::AddAssign for BnbStats {
    fn add_assign(&mut self, o: Self) {
        self.nodes += o.nodes;
        self.lp_iterations += o.lp_iterations;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BnbStatus {
    Optimal,
    Infeasible,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub best: Option<(Vec<f64>, f64)>,
    /// Lower bound on the optimum; equals the objective when optimal.
    pub bound: f64,
    pub stats: BnbStats,
}

impl BnbResult {
    /// Relative gap between incumbent and bound.
    pub fn gap(&self) -> f64 {
        match &self.best {
            Some((_, obj)) if self.status == BnbStatus::NodeLimit => {
                ((obj - self.bound) / obj.abs().max(1e-12)).max(0.0)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BnbOptions {
    pub node_limit: Option<usize>,
}

struct Node {
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    objective: f64,
    basis: Basis,
    /// Kept only for the node explored next.
    tableau: Option<Box<Tableau>>,
}

struct Relaxer<'a> {
    p: &'a MilpProblem,
    root: Tableau,
    stats: BnbStats,
}

impl Relaxer<'_> {
    fn cold(&mut self, lower: &[f64], upper: &[f64]) -> Result<(LpOutcome, Option<Tableau>)> {
        let lp = LinearProgram {
            objective: self.p.lp.objective.clone(),
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            rows: self.p.lp.rows.clone(),
        };
        solve_tableau(&lp)
    }

    /// Tableau at the optimum of `node`.
    fn restore(&mut self, node: &mut Node) -> Result<Option<Tableau>> {
        if let Some(t) = node.tableau.take() {
            return Ok(Some(*t));
        }
        let mut t = self.root.clone();
        match t.resolve(&node.lower, &node.upper, Some(&node.basis)) {
            Ok(LpOutcome::Optimal(_)) => Ok(Some(t)),
            _ => match self.cold(&node.lower, &node.upper)? {
                (LpOutcome::Optimal(_), t) => Ok(t),
                _ => Ok(None),
            },
        }
    }

    /// Re-optimizes `parent` under new bounds, falling back to a cold solve.
    fn child(&mut self, mut parent: Tableau, lower: Vec<f64>, upper: Vec<f64>) -> Result<Option<Node>> {
        self.stats.nodes += 1;
        let warm = parent.resolve(&lower, &upper, None);
        let (out, t) = match warm {
            Ok(out @ (LpOutcome::Optimal(_) | LpOutcome::Infeasible { .. })) => (out, Some(parent)),
            _ => self.cold(&lower, &upper)?,
        };
        self.stats.lp_iterations += out.iterations();
        match (out, t) {
            (LpOutcome::Optimal(s), Some(t)) => Ok(Some(Node {
                lower,
                upper,
                x: s.x,
                objective: s.objective,
                basis: t.basis(),
                tableau: Some(Box::new(t)),
            })),
            (LpOutcome::Unbounded { .. }, _) => Err(Error::domain("LP relaxation is unbounded")),
            _ => Ok(None),
        }
    }
}

/// Most fractional integer column among the lowest priority class that has
/// one; ties go to the lowest index.
fn branching_column(p: &MilpProblem, x: &[f64]) -> Option<usize> {
    let mut best: Option<(u8, f64, usize)> = None;
    for (j, v) in x.iter().enumerate() {
        if !p.integer[j] {
            continue;
        }
        let frac = v - v.floor();
        if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let score = (frac - 0.5).abs();
        let key = (p.priority[j], score, j);
        if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
            best = Some(key);
        }
    }
    best.map(|b| b.2)
}

fn rounded(p: &MilpProblem, x: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(&p.integer)
        .map(|(v, &int)| if int { v.round() } else { *v })
        .collect()
}

/// Solves `p` to proven optimality unless a node limit stops it first.
///
/// `incumbent`, when feasible, seeds the pruning bound.
pub fn branch_and_bound(p: &MilpProblem, incumbent: Option<Vec<f64>>, opts: &BnbOptions) -> Result<BnbResult> {
    let n = p.lp.num_vars();
    if p.integer.len() != n || p.priority.len() != n {
        return Err(Error::domain("integrality and priority vectors must match the variable count"));
    }
    let mut stats = BnbStats::default();
    let mut best: Option<(Vec<f64>, f64)> = incumbent
        .filter(|x| p.is_feasible(x, INTEGRALITY_TOL))
        .map(|x| {
            let obj = p.lp.objective_value(&x);
            (x, obj)
        });
    let prune = |obj: f64, best: &Option<(Vec<f64>, f64)>| match best {
        Some((_, b)) => obj >= b - PRUNE_REL_TOL * b.abs().max(1.0),
        None => false,
    };

    stats.nodes += 1;
    let (out, root) = solve_tableau(&p.lp)?;
    stats.lp_iterations += out.iterations();
    let (x0, obj0, root) = match (out, root) {
        (LpOutcome::Optimal(s), Some(t)) => (s.x, s.objective, t),
        (LpOutcome::Unbounded { .. }, _) => return Err(Error::domain("LP relaxation is unbounded")),
        _ => {
            return Ok(BnbResult {
                status: BnbStatus::Infeasible,
                best: None,
                bound: f64::INFINITY,
                stats,
            })
        }
    };
    let root_bound = obj0;
    let mut stack = vec![Node {
        lower: p.lp.lower.clone(),
        upper: p.lp.upper.clone(),
        x: x0,
        objective: obj0,
        basis: root.basis(),
        tableau: Some(Box::new(root.clone())),
    }];
    let mut relaxer = Relaxer { p, root, stats };
    let mut limited = false;
    while let Some(mut node) = stack.pop() {
        debug_assert!(node.objective >= root_bound - 1e-6 * root_bound.abs().max(1.0));
        if prune(node.objective, &best) {
            continue;
        }
        let Some(j) = branching_column(p, &node.x) else {
            let x = rounded(p, &node.x);
            if p.is_feasible(&x, INTEGRALITY_TOL) {
                let obj = p.lp.objective_value(&x);
                if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                    best = Some((x, obj));
                }
            }
            continue;
        };
        if opts.node_limit.is_some_and(|lim| relaxer.stats.nodes >= lim) {
            limited = true;
            stack.push(node);
            break;
        }
        let Some(parent) = relaxer.restore(&mut node)? else {
            continue;
        };
        let v = node.x[j];
        let mut down_upper = node.upper.clone();
        down_upper[j] = v.floor();
        let mut up_lower = node.lower.clone();
        up_lower[j] = v.ceil();
        let down = relaxer.child(parent.clone(), node.lower, down_upper)?;
        let up = relaxer.child(parent, up_lower, node.upper)?;
        let mut children: Vec<Node> = down.into_iter().chain(up).filter(|c| !prune(c.objective, &best)).collect();
        // Worse child first so the better one is explored next.
        children.sort_by(|a, b| b.objective.total_cmp(&a.objective));
        if children.len() == 2 {
            children[0].tableau = None;
        }
        stack.extend(children);
    }
    let stats = relaxer.stats;

    let status = match (&best, limited) {
        (_, true) => BnbStatus::NodeLimit,
        (Some(_), false) => BnbStatus::Optimal,
        (None, false) => BnbStatus::Infeasible,
    };
    let bound = match status {
        BnbStatus::Optimal => best.as_ref().map(|b| b.1).unwrap_or(f64::INFINITY),
        BnbStatus::Infeasible => f64::INFINITY,
        BnbStatus::NodeLimit => stack
            .iter()
            .map(|n| n.objective)
            .fold(best.as_ref().map_or(f64::INFINITY, |b| b.1), f64::min),
    };
    Ok(BnbResult {
        status,
        best,
        bound,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::lp::Sense;

    fn knapsack() -> MilpProblem {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, binaries.
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![-5.0, -4.0, -3.0];
        lp.upper = vec![1.0; 3];
        lp.add_row(vec![(0, 2.0), (1, 3.0), (2, 1.0)], Sense::Le, 5.0);
        lp.add_row(vec![(0, 4.0), (1, 1.0), (2, 2.0)], Sense::Le, 11.0);
        MilpProblem {
            lp,
            integer: vec![true; 3],
            priority: vec![0; 3],
        }
    }

    #[test]
    fn solves_small_knapsack() {
        let r = branch_and_bound(&knapsack(), None, &BnbOptions::default()).unwrap();
        assert_eq!(r.status, BnbStatus::Optimal);
        assert_eq!(r.gap(), 0.0);
        let (x, obj) = r.best.unwrap();
        assert_eq!(obj, -9.0);
        assert_eq!(x, vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn integer_infeasible() {
        // 2x = 1 has no integer solution.
        let mut lp = LinearProgram::new(1);
        lp.upper = vec![5.0];
        lp.add_row(vec![(0, 2.0)], Sense::Eq, 1.0);
        let p = MilpProblem {
            lp,
            integer: vec![true],
            priority: vec![0],
        };
        let r = branch_and_bound(&p, None, &BnbOptions::default()).unwrap();
        assert_eq!(r.status, BnbStatus::Infeasible);
    }

    #[test]
    fn incumbent_does_not_change_optimum() {
        let p = knapsack();
        let r = branch_and_bound(&p, Some(vec![0.0, 0.0, 1.0]), &BnbOptions::default()).unwrap();
        assert_eq!(r.best.unwrap().1, -9.0);
        // Infeasible seeds are ignored.
        let r = branch_and_bound(&p, Some(vec![1.0, 1.0, 1.0]), &BnbOptions::default()).unwrap();
        assert_eq!(r.best.unwrap().1, -9.0);
    }

    #[test]
    fn node_limit_reports_gap() {
        let r = branch_and_bound(&knapsack(), None, &BnbOptions { node_limit: Some(1) }).unwrap();
        assert_eq!(r.status, BnbStatus::NodeLimit);
        assert!(r.bound <= -9.0);
    }
}
