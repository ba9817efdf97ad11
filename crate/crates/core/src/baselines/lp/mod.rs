//! Linear programs with bounded variables.
//!
//! Two solvers sit behind [`solve`]: an exact dense primal simplex
//! ([`simplex`]) for small problems and a sparse interior-point backend
//! ([`interior`]) for the large perfect-information programs.

pub mod interior;
pub mod simplex;

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `direction cᵀx` subject to sparse rows and `lower ≤ x ≤ upper`. Lower
/// bounds must be finite; upper bounds may be `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            objective: Vec::new(),
            rows: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Lp("bound vectors do not match variable count".into()));
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !lo.is_finite() || hi.is_nan() || lo > hi || !self.objective[j].is_finite() {
                return Err(Error::Lp(format!("variable {j}: invalid bounds [{lo}, {hi}] or cost")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::Lp(format!("row {i}: non-finite rhs")));
            }
            if let Some(&(j, a)) = row.coeffs.iter().find(|(j, a)| *j >= n || !a.is_finite()) {
                return Err(Error::Lp(format!("row {i}: bad coefficient {a} on variable {j}")));
            }
        }
        Ok(())
    }

    /// CPLEX LP text format, for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}",
            match self.direction {
                Direction::Maximize => "Maximize",
                Direction::Minimize => "Minimize",
            }
        );
        s.push_str(" obj:");
        write_terms(&mut s, self.objective.iter().copied().enumerate());
        s.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(s, " r{i}:");
            write_terms(&mut s, row.coeffs.iter().copied());
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Eq => "=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {:?}", row.rhs);
        }
        s.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            if self.upper[j].is_finite() {
                let _ = writeln!(s, " {:?} <= x{j} <= {:?}", self.lower[j], self.upper[j]);
            } else {
                let _ = writeln!(s, " x{j} >= {:?}", self.lower[j]);
            }
        }
        s.push_str("End\n");
        s
    }
}

fn write_terms(s: &mut String, terms: impl Iterator<Item = (usize, f64)>) {
    let mut any = false;
    for (j, a) in terms.filter(|(_, a)| *a != 0.0) {
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(s, " {sign} {:?} x{j}", a.abs());
        any = true;
    }
    if !any {
        s.push_str(" 0 x0");
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

impl LpStatus {
    /// The run stopped on a budget rather than a verdict.
    pub fn did_not_finish(self) -> bool {
        matches!(self, LpStatus::IterationLimit | LpStatus::TimeLimit)
    }
}

/// Solver result. `duals[i]` is the shadow price of row `i` (rate of change
/// of the optimal objective per unit of its right-hand side); `reduced_costs`
/// are `c - Aᵀy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub(crate) fn without_point(status: LpStatus, iterations: usize) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Dense simplex when the tableau is small, interior point otherwise.
    #[default]
    Auto,
    Simplex,
    InteriorPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub backend: Backend,
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Auto,
            max_iters: 1_000_000,
            time_limit: None,
        }
    }
}

/// Largest `rows × columns` tableau `Backend::Auto` hands to the simplex.
pub const AUTO_SIMPLEX_TABLEAU: usize = 4_000_000;

pub fn solve(problem: &LpProblem, options: &SolveOptions) -> Result<LpSolution> {
    problem.validate()?;
    let backend = match options.backend {
        Backend::Auto => {
            let m = problem.num_rows();
            let cols = problem.num_vars() + 2 * m;
            if m * cols <= AUTO_SIMPLEX_TABLEAU {
                Backend::Simplex
            } else {
                Backend::InteriorPoint
            }
        }
        b => b,
    };
    match backend {
        Backend::InteriorPoint => interior::solve(problem, options),
        _ => simplex::solve(problem, options.max_iters, options.time_limit),
    }
}

/// Largest violations of the optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktReport {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity)
    }
}

/// Checks primal feasibility, sign feasibility of duals and reduced costs,
/// and complementary slackness, all in the problem's own direction.
pub fn kkt_residuals(problem: &LpProblem, sol: &LpSolution) -> KktReport {
    let mut rep = KktReport::default();
    let x = &sol.x;
    // For maximization a positive shadow price is "correct" on ≤ rows.
    let sign = match problem.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    for (j, &v) in x.iter().enumerate() {
        rep.primal = rep.primal.max(problem.lower[j] - v).max(v - problem.upper[j]);
    }
    for (i, row) in problem.rows.iter().enumerate() {
        let slack = row.rhs - row.activity(x);
        let y = sign * sol.duals[i];
        let (viol, dual_viol) = match row.sense {
            Sense::Le => (-slack, -y),
            Sense::Ge => (slack, y),
            Sense::Eq => (slack.abs(), 0.0),
        };
        rep.primal = rep.primal.max(viol);
        rep.dual = rep.dual.max(dual_viol);
        rep.complementarity = rep.complementarity.max((sol.duals[i] * slack).abs());
    }
    let mut aty = vec![0.0; problem.num_vars()];
    for (i, row) in problem.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            aty[j] += sol.duals[i] * a;
        }
    }
    for j in 0..problem.num_vars() {
        // Stationarity of the reported reduced costs.
        let stationarity = (problem.objective[j] - aty[j] - sol.reduced_costs[j]).abs();
        rep.dual = rep.dual.max(stationarity);
        // r > 0 wants x at its upper bound, r < 0 at its lower bound.
        let r = sign * sol.reduced_costs[j];
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        let comp = if r > 0.0 {
            if hi.is_finite() {
                r * (hi - x[j])
            } else {
                rep.dual = rep.dual.max(r);
                0.0
            }
        } else {
            -r * (x[j] - lo)
        };
        rep.complementarity = rep.complementarity.max(comp.abs());
    }
    rep
}
