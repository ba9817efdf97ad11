//! Sparse interior-point backend on top of `clarabel`.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};

use super::{Direction, LpProblem, LpSolution, LpStatus, Sense, SolveOptions};
use crate::error::{Error, Result};

/// Row of `problem` behind each conic row: `Some((row, sign))` for rows,
/// `None` for bound rows.
type Origin = Option<(usize, f64)>;

pub fn solve(problem: &LpProblem, options: &SolveOptions) -> Result<LpSolution> {
    problem.validate()?;
    let n = problem.num_vars();
    let dir = match problem.direction {
        Direction::Maximize => -1.0,
        Direction::Minimize => 1.0,
    };
    let q: Vec<f64> = problem.objective.iter().map(|c| dir * c).collect();

    // Equalities first (zero cone), then everything written as `a x ≤ b`.
    let (mut ri, mut ci, mut vals, mut b) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut origin: Vec<Origin> = Vec::new();
    let mut push_row = |coeffs: &mut dyn Iterator<Item = (usize, f64)>, rhs: f64, o: Origin| {
        let r = b.len();
        for (j, a) in coeffs {
            ri.push(r);
            ci.push(j);
            vals.push(a);
        }
        b.push(rhs);
        origin.push(o);
    };
    let mut num_eq = 0;
    for (i, row) in problem.rows.iter().enumerate().filter(|(_, r)| r.sense == Sense::Eq) {
        push_row(&mut row.coeffs.iter().copied(), row.rhs, Some((i, 1.0)));
        num_eq += 1;
    }
    for (i, row) in problem.rows.iter().enumerate() {
        let s = match row.sense {
            Sense::Eq => continue,
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        };
        push_row(&mut row.coeffs.iter().map(|&(j, a)| (j, s * a)), s * row.rhs, Some((i, s)));
    }
    for j in 0..n {
        push_row(&mut std::iter::once((j, -1.0)), -problem.lower[j], None);
        if problem.upper[j].is_finite() {
            push_row(&mut std::iter::once((j, 1.0)), problem.upper[j], None);
        }
    }
    let m = b.len();
    let a = CscMatrix::new_from_triplets(m, n, ri, ci, vals);
    let p = CscMatrix::<f64>::zeros((n, n));
    let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
    if num_eq > 0 {
        cones.push(ZeroConeT(num_eq));
    }
    if m > num_eq {
        cones.push(NonnegativeConeT(m - num_eq));
    }
    let mut settings = DefaultSettingsBuilder::default();
    settings
        .verbose(false)
        .max_iter(options.max_iters.min(u32::MAX as usize) as u32)
        .tol_gap_abs(1e-9)
        .tol_gap_rel(1e-9)
        .tol_feas(1e-9);
    if let Some(limit) = options.time_limit {
        settings.time_limit(limit.as_secs_f64());
    }
    let settings = settings.build().map_err(|e| Error::Lp(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| Error::Lp(e.to_string()))?;
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations as usize;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => LpStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => LpStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => LpStatus::Unbounded,
        SolverStatus::MaxIterations => LpStatus::IterationLimit,
        SolverStatus::MaxTime => LpStatus::TimeLimit,
        other => return Err(Error::Lp(format!("interior point failed: {other:?}"))),
    };
    if status != LpStatus::Optimal {
        return Ok(LpSolution::without_point(status, iterations));
    }

    let x: Vec<f64> = (0..n)
        .map(|j| sol.x[j].clamp(problem.lower[j], problem.upper[j]))
        .collect();
    // Stationarity reads q + Aᵀz = 0, so the internal shadow price of a
    // `≤` row is -z; undo the row sign and the direction flip.
    let mut duals = vec![0.0; problem.num_rows()];
    for (k, o) in origin.iter().enumerate() {
        if let Some((i, s)) = *o {
            duals[i] = dir * s * -sol.z[k];
        }
    }
    let mut reduced_costs = problem.objective.clone();
    for (i, row) in problem.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            reduced_costs[j] -= duals[i] * a;
        }
    }
    Ok(LpSolution {
        status,
        objective: problem.objective_value(&x),
        x,
        duals,
        reduced_costs,
        iterations,
    })
}
