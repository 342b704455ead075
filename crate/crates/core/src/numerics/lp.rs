//! Dense two-phase tableau simplex for small linear programs.
//!
//! Problems are `minimize c·x` over `x >= 0` subject to rows of the form
//! `a·x (<=|>=|=) b`. Pricing is Dantzig's most-negative reduced cost; after
//! a run of degenerate pivots the solver switches to Bland's rule for the
//! rest of the phase, which rules out cycling.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

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

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LpProblem {
    pub fn minimize(objective: Vec<f64>) -> Self {
        Self { objective, constraints: Vec::new() }
    }

    pub fn subject_to(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.add_constraint(coeffs, relation, rhs);
        self
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
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
    /// Vertex of the feasible polytope; all zeros unless `Optimal`.
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 32;

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    let n = problem.num_vars();
    if problem.objective.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("LP objective has non-finite coefficients"));
    }
    for row in &problem.constraints {
        if row.coeffs.len() != n {
            return Err(Error::InvalidInput("LP row length differs from variable count"));
        }
        if !row.rhs.is_finite() || row.coeffs.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidInput("LP row has non-finite coefficients"));
        }
    }
    Tableau::build(problem).solve(problem)
}

struct Tableau {
    m: usize,
    /// original + slack/surplus + artificial columns
    ncols: usize,
    n_orig: usize,
    art_start: usize,
    /// row-major, `ncols + 1` wide, last column is the right-hand side
    t: Vec<f64>,
    basis: Vec<usize>,
    banned: Vec<bool>,
}

impl Tableau {
    fn build(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let m = problem.constraints.len();

        // Equilibrate rows and flip signs so every rhs is non-negative.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
        for c in &problem.constraints {
            let scale = c.coeffs.iter().fold(c.rhs.abs(), |acc, a| acc.max(a.abs()));
            let s = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let mut coeffs: Vec<f64> = c.coeffs.iter().map(|a| a * s).collect();
            let mut rhs = c.rhs * s;
            let mut rel = c.relation;
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            rows.push((coeffs, rel, rhs));
        }

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let art_start = n + n_slack;
        let ncols = art_start + n_art;
        let w = ncols + 1;
        let mut t = vec![0.0; m * w];
        let mut basis = vec![0; m];
        let mut slack = n;
        let mut art = art_start;
        for (i, (coeffs, rel, rhs)) in rows.into_iter().enumerate() {
            let row = &mut t[i * w..(i + 1) * w];
            row[..n].copy_from_slice(&coeffs);
            row[ncols] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis[i] = art;
                    art += 1;
                }
            }
        }
        Self { m, ncols, n_orig: n, art_start, t, basis, banned: vec![false; ncols] }
    }

    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    fn pivot(&mut self, r: usize, col: usize, cost: &mut [f64]) {
        let w = self.width();
        let p = self.t[r * w + col];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = other[col];
            if f != 0.0 {
                for (o, pv) in other.iter_mut().zip(prow.iter()) {
                    *o -= f * pv;
                }
                other[col] = 0.0;
            }
        }
        let f = cost[col];
        if f != 0.0 {
            for (c, pv) in cost.iter_mut().zip(prow.iter()) {
                *c -= f * pv;
            }
            cost[col] = 0.0;
        }
        self.basis[r] = col;
    }

    /// Reduced-cost row (with `-objective` in the last slot) for costs `c`
    /// over all columns.
    fn reduced_costs(&self, c: &[f64]) -> Vec<f64> {
        let w = self.width();
        let mut cost = vec![0.0; w];
        cost[..self.ncols].copy_from_slice(c);
        for i in 0..self.m {
            let cb = c[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    cost[j] -= cb * self.t[i * w + j];
                }
            }
        }
        cost
    }

    /// Runs simplex iterations; `Ok(false)` signals unboundedness.
    fn iterate(&mut self, cost: &mut [f64]) -> Result<bool> {
        let max_iter = 50 * (self.m + self.ncols) + 1000;
        let mut degenerate = 0;
        let mut bland = false;
        for _ in 0..max_iter {
            let entering = if bland {
                (0..self.ncols).find(|&j| !self.banned[j] && cost[j] < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_val = -COST_TOL;
                for j in 0..self.ncols {
                    if !self.banned[j] && cost[j] < best_val {
                        best_val = cost[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = entering else {
                return Ok(true);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, col);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            ratio < best_ratio - 1e-14 || (ratio <= best_ratio + 1e-14 && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(false);
            };
            if best_ratio <= 1e-14 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, col, cost);
        }
        Err(Error::Convergence { what: "simplex", iterations: max_iter })
    }

    fn solve(mut self, problem: &LpProblem) -> Result<LpSolution> {
        let n = self.n_orig;
        let infeasible = || LpSolution { status: LpStatus::Infeasible, x: vec![0.0; n], objective: f64::NAN };

        if self.art_start < self.ncols {
            let mut c1 = vec![0.0; self.ncols];
            c1[self.art_start..].iter_mut().for_each(|c| *c = 1.0);
            let mut cost = self.reduced_costs(&c1);
            self.iterate(&mut cost)?;
            let art_sum: f64 = (0..self.m).filter(|&i| self.basis[i] >= self.art_start).map(|i| self.rhs(i)).sum();
            if art_sum > FEAS_TOL {
                return Ok(infeasible());
            }
            // Drive remaining zero-level artificials out of the basis.
            for i in 0..self.m {
                if self.basis[i] >= self.art_start {
                    if let Some(col) = (0..self.art_start).find(|&j| self.at(i, j).abs() > 1e-9) {
                        self.pivot(i, col, &mut cost);
                    }
                }
            }
            for j in self.art_start..self.ncols {
                self.banned[j] = true;
            }
        }

        let mut c2 = vec![0.0; self.ncols];
        let cscale = problem.objective.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()));
        let cs = if cscale > 0.0 { 1.0 / cscale } else { 1.0 };
        for (dst, c) in c2.iter_mut().zip(&problem.objective) {
            *dst = c * cs;
        }
        let mut cost = self.reduced_costs(&c2);
        if !self.iterate(&mut cost)? {
            return Ok(LpSolution { status: LpStatus::Unbounded, x: vec![0.0; n], objective: f64::NEG_INFINITY });
        }

        let mut x = vec![0.0; n];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < n {
                x[b] = self.rhs(i).max(0.0);
            }
        }
        // Reject if an artificial stuck in the basis carries a value (redundant
        // rows keep theirs at zero).
        if (0..self.m).any(|i| self.basis[i] >= self.art_start && self.rhs(i) > FEAS_TOL) {
            return Ok(infeasible());
        }
        let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { status: LpStatus::Optimal, x, objective })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let p = LpProblem::minimize(vec![1.0]).subject_to(vec![1.0], Relation::Ge, 3.0);
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.x[0] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_mass_on_cheapest() {
        let c = vec![3.0, 1.5, 0.2, 4.0];
        let p = LpProblem::minimize(c).subject_to(vec![1.0; 4], Relation::Eq, 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.x, vec![0.0, 0.0, 1.0, 0.0]);
        assert!((s.objective - 0.2).abs() < 1e-15);
    }

    #[test]
    fn detects_infeasible() {
        let p = LpProblem::minimize(vec![1.0, 1.0]).subject_to(vec![1.0, 1.0], Relation::Le, 1.0).subject_to(
            vec![1.0, 1.0],
            Relation::Ge,
            2.0,
        );
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let p = LpProblem::minimize(vec![-1.0, 0.0]).subject_to(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // -x - y <= -2 (i.e. x + y >= 2), duplicated equality
        let p = LpProblem::minimize(vec![1.0, 2.0])
            .subject_to(vec![-1.0, -1.0], Relation::Le, -2.0)
            .subject_to(vec![1.0, 1.0], Relation::Eq, 2.0)
            .subject_to(vec![2.0, 2.0], Relation::Eq, 4.0);
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.x[0] - 2.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_rows() {
        let p = LpProblem::minimize(vec![1.0, 2.0]).subject_to(vec![1.0], Relation::Le, 1.0);
        assert!(solve_lp(&p).is_err());
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under naive Dantzig pricing.
        let p = LpProblem::minimize(vec![-0.75, 150.0, -0.02, 6.0])
            .subject_to(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .subject_to(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .subject_to(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let s = solve_lp(&p).unwrap();
        assert!(s.is_optimal());
        assert!((s.objective + 0.05).abs() < 1e-12);
    }
}
