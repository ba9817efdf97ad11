//! Dense two-phase primal simplex with bounded variables.
//!
//! Variables are shifted to `[0, u]`; nonbasic variables sit at either bound.
//! Entering and leaving choices follow Bland's rule (lowest index), which
//! rules out cycling and makes the pivot sequence a pure function of the
//! input.

use std::time::{Duration, Instant};

use super::{Direction, LpProblem, LpSolution, LpStatus, Sense};
use crate::error::Result;

const COST_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

struct Tableau {
    m: usize,
    cols: usize,
    /// `B⁻¹A`, row-major.
    t: Vec<f64>,
    /// Values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    /// Reduced costs for the current phase objective.
    d: Vec<f64>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

impl Tableau {
    fn row(&self, i: usize) -> &[f64] {
        &self.t[i * self.cols..(i + 1) * self.cols]
    }

    fn price(&mut self, cost: &[f64]) {
        self.d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (d, a) in self.d.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }
    }

    fn value(&self, j: usize, row_of: &[Option<usize>]) -> f64 {
        match row_of[j] {
            Some(i) => self.beta[i],
            None if self.at_upper[j] => self.upper[j],
            None => 0.0,
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let piv = self.t[r * cols + j];
        {
            let row = &mut self.t[r * cols..(r + 1) * cols];
            for a in row.iter_mut() {
                *a /= piv;
            }
        }
        let pivot_row: Vec<f64> = self.row(r).to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + j];
            if f != 0.0 {
                let row = &mut self.t[i * cols..(i + 1) * cols];
                for (a, p) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * p;
                }
                row[j] = 0.0;
            }
        }
        let dj = self.d[j];
        if dj != 0.0 {
            for (d, p) in self.d.iter_mut().zip(&pivot_row) {
                *d -= dj * p;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }

    fn run(&mut self, max_iters: usize, deadline: Option<Instant>) -> Outcome {
        loop {
            // Bland: first improving column.
            let entering = (0..self.cols).find(|&j| {
                !self.is_basic[j]
                    && self.upper[j] > 0.0
                    && if self.at_upper[j] {
                        self.d[j] > COST_TOL
                    } else {
                        self.d[j] < -COST_TOL
                    }
            });
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            if self.iterations >= max_iters {
                return Outcome::IterationLimit;
            }
            if let Some(deadline) = deadline {
                if self.iterations.is_multiple_of(64) && Instant::now() > deadline {
                    return Outcome::TimeLimit;
                }
            }
            self.iterations += 1;

            let sigma = if self.at_upper[j] { -1.0 } else { 1.0 };
            let mut theta = self.upper[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let change = -sigma * self.t[i * self.cols + j];
                let ratio = if change < -PIVOT_TOL {
                    self.beta[i].max(0.0) / -change
                } else if change > PIVOT_TOL && self.upper[self.basis[i]].is_finite() {
                    (self.upper[self.basis[i]] - self.beta[i]).max(0.0) / change
                } else {
                    continue;
                };
                let better = match leave {
                    None => ratio < theta || (theta.is_infinite() && ratio.is_finite()),
                    Some((r, best)) => {
                        ratio < best - FEAS_TOL
                            || (ratio <= best + FEAS_TOL && self.basis[i] < self.basis[r])
                    }
                };
                if better && ratio <= theta {
                    leave = Some((i, ratio));
                }
            }
            if let Some((_, ratio)) = leave {
                // A bound flip that ties a basis change wins; no pivot needed.
                if self.upper[j] <= ratio {
                    leave = None;
                } else {
                    theta = ratio;
                }
            }
            if theta.is_infinite() {
                return Outcome::Unbounded;
            }
            for i in 0..self.m {
                let change = -sigma * self.t[i * self.cols + j];
                self.beta[i] += theta * change;
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, _)) => {
                    let change = -sigma * self.t[r * self.cols + j];
                    let leaving = self.basis[r];
                    self.at_upper[leaving] = change > 0.0;
                    let entering_value = if sigma > 0.0 { theta } else { self.upper[j] - theta };
                    self.at_upper[j] = false;
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                }
            }
        }
    }
}

pub fn solve(problem: &LpProblem, max_iters: usize, time_limit: Option<Duration>) -> Result<LpSolution> {
    problem.validate()?;
    let deadline = time_limit.map(|d| Instant::now() + d);
    let n = problem.num_vars();
    let m = problem.num_rows();

    // Column layout: structurals, one slack per inequality, then artificials.
    let mut slack_of = vec![None; m];
    let mut cols = n;
    for (i, row) in problem.rows.iter().enumerate() {
        if row.sense != Sense::Eq {
            slack_of[i] = Some(cols);
            cols += 1;
        }
    }
    let mut rhs = Vec::with_capacity(m);
    let mut flip = vec![1.0; m];
    let mut ident = vec![usize::MAX; m];
    let mut artificials = Vec::new();
    for (i, row) in problem.rows.iter().enumerate() {
        let shift: f64 = row.coeffs.iter().map(|&(j, a)| a * problem.lower[j]).sum();
        let b = row.rhs - shift;
        if b < 0.0 {
            flip[i] = -1.0;
        }
        rhs.push(b.abs());
        let slack_sign = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => 0.0,
        } * flip[i];
        if slack_sign > 0.0 {
            ident[i] = slack_of[i].unwrap();
        } else {
            ident[i] = cols;
            artificials.push(cols);
            cols += 1;
        }
    }

    let mut t = vec![0.0; m * cols];
    for (i, row) in problem.rows.iter().enumerate() {
        let r = &mut t[i * cols..(i + 1) * cols];
        for &(j, a) in &row.coeffs {
            r[j] += flip[i] * a;
        }
        if let Some(s) = slack_of[i] {
            r[s] = flip[i] * if row.sense == Sense::Le { 1.0 } else { -1.0 };
        }
        if ident[i] >= n + slack_of.iter().flatten().count() {
            r[ident[i]] = 1.0;
        }
    }
    let mut upper = vec![f64::INFINITY; cols];
    for j in 0..n {
        upper[j] = problem.upper[j] - problem.lower[j];
    }
    let mut is_basic = vec![false; cols];
    for &b in &ident {
        is_basic[b] = true;
    }
    let mut tab = Tableau {
        m,
        cols,
        t,
        beta: rhs,
        basis: ident.clone(),
        is_basic,
        at_upper: vec![false; cols],
        upper,
        d: Vec::new(),
        iterations: 0,
    };

    // Phase 1: drive the artificials to zero.
    if !artificials.is_empty() {
        let mut cost = vec![0.0; cols];
        for &a in &artificials {
            cost[a] = 1.0;
        }
        tab.price(&cost);
        match tab.run(max_iters, deadline) {
            Outcome::Optimal => {}
            Outcome::IterationLimit => return Ok(LpSolution::without_point(LpStatus::IterationLimit, tab.iterations)),
            Outcome::TimeLimit => return Ok(LpSolution::without_point(LpStatus::TimeLimit, tab.iterations)),
            Outcome::Unbounded => unreachable!("phase one objective is bounded below"),
        }
        let infeas: f64 = (0..m)
            .filter(|&i| cost[tab.basis[i]] > 0.0)
            .map(|i| tab.beta[i])
            .sum();
        let scale = 1.0 + tab.beta.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if infeas > FEAS_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.iterations));
        }
        // Pivot leftover (zero-valued) artificials out where possible.
        let first_art = artificials[0];
        for r in 0..m {
            if tab.basis[r] < first_art {
                continue;
            }
            let candidate = (0..first_art).find(|&j| !tab.is_basic[j] && tab.t[r * cols + j].abs() > 1e-9);
            if let Some(j) = candidate {
                let value = if tab.at_upper[j] { tab.upper[j] } else { 0.0 };
                let art = tab.basis[r];
                tab.pivot(r, j);
                tab.at_upper[art] = false;
                tab.at_upper[j] = false;
                // θ = 0 pivot: other basics keep their values.
                tab.beta[r] = value;
            }
        }
        for &a in &artificials {
            tab.upper[a] = 0.0;
        }
    }

    // Phase 2.
    let dir = match problem.direction {
        Direction::Maximize => -1.0,
        Direction::Minimize => 1.0,
    };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = dir * problem.objective[j];
    }
    tab.price(&cost);
    match tab.run(max_iters, deadline) {
        Outcome::Optimal => {}
        Outcome::Unbounded => return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations)),
        Outcome::IterationLimit => return Ok(LpSolution::without_point(LpStatus::IterationLimit, tab.iterations)),
        Outcome::TimeLimit => return Ok(LpSolution::without_point(LpStatus::TimeLimit, tab.iterations)),
    }

    let mut row_of = vec![None; cols];
    for (i, &b) in tab.basis.iter().enumerate() {
        row_of[b] = Some(i);
    }
    let x: Vec<f64> = (0..n)
        .map(|j| (problem.lower[j] + tab.value(j, &row_of)).clamp(problem.lower[j], problem.upper[j]))
        .collect();
    // Shadow prices: the reduced cost of row i's initial identity column is -y'_i.
    let duals: Vec<f64> = (0..m).map(|i| dir * flip[i] * -tab.d[ident[i]]).collect();
    let mut reduced_costs = problem.objective.clone();
    for (i, row) in problem.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            reduced_costs[j] -= duals[i] * a;
        }
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: problem.objective_value(&x),
        x,
        duals,
        reduced_costs,
        iterations: tab.iterations,
    })
}
