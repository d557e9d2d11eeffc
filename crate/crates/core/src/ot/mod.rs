//! Discrete optimal transport: plans, W2 distances, empirical log/exp maps,
//! barycentric projection, and the mass-weighted aggregation rule used to
//! move tangent vectors through non-injective plans.

mod assignment;
mod sinkhorn;
mod transport_lp;

pub use sinkhorn::{solve_sinkhorn, SinkhornParams, SinkhornSolution};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, TangentField};
use crate::error::{Error, Result};

/// Marginal feasibility tolerance enforced on every returned plan.
pub const MARGINAL_TOL: f64 = 1e-7;

/// One nonzero cell of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry {
    pub row: u32,
    pub col: u32,
    pub mass: f64,
}

/// A nonnegative n x m transport plan with prescribed marginals, stored as
/// its nonzero cells. Exact solutions are supported on at most n + m - 1
/// cells, so the sparse layout is also the economical one.
#[derive(Debug, Clone)]
pub struct Coupling {
    n: usize,
    m: usize,
    entries: Vec<PlanEntry>,
    source_weights: DVector<f64>,
    target_weights: DVector<f64>,
    objective: f64,
}

impl Coupling {
    /// Validate marginals (within `MARGINAL_TOL`) and nonnegativity.
    pub fn new(
        n: usize,
        m: usize,
        entries: Vec<PlanEntry>,
        source_weights: DVector<f64>,
        target_weights: DVector<f64>,
        objective: f64,
    ) -> Result<Self> {
        if source_weights.len() != n || target_weights.len() != m {
            return Err(Error::DimensionMismatch("marginal lengths do not match plan shape".into()));
        }
        let c = Self { n, m, entries, source_weights, target_weights, objective };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let mut row = vec![0.0f64; self.n];
        let mut col = vec![0.0f64; self.m];
        for e in &self.entries {
            if !(e.mass >= 0.0) || !e.mass.is_finite() {
                return Err(Error::Solver(format!("plan entry ({}, {}) has mass {}", e.row, e.col, e.mass)));
            }
            if e.row as usize >= self.n || e.col as usize >= self.m {
                return Err(Error::Solver("plan entry out of bounds".into()));
            }
            row[e.row as usize] += e.mass;
            col[e.col as usize] += e.mass;
        }
        for i in 0..self.n {
            if (row[i] - self.source_weights[i]).abs() > MARGINAL_TOL {
                return Err(Error::Solver(format!(
                    "row {} sums to {:.12e}, marginal is {:.12e}",
                    i, row[i], self.source_weights[i]
                )));
            }
        }
        for j in 0..self.m {
            if (col[j] - self.target_weights[j]).abs() > MARGINAL_TOL {
                return Err(Error::Solver(format!(
                    "column {} sums to {:.12e}, marginal is {:.12e}",
                    j, col[j], self.target_weights[j]
                )));
            }
        }
        Ok(())
    }

    /// Build from a dense plan matrix; the objective is computed against `cost`.
    pub fn from_dense(
        plan: &DMatrix<f64>,
        source_weights: DVector<f64>,
        target_weights: DVector<f64>,
        cost: &DMatrix<f64>,
    ) -> Result<Self> {
        let (n, m) = plan.shape();
        if cost.shape() != (n, m) {
            return Err(Error::DimensionMismatch("cost and plan shapes differ".into()));
        }
        let mut entries = Vec::new();
        let mut objective = 0.0;
        for i in 0..n {
            for j in 0..m {
                let mass = plan[(i, j)];
                if mass != 0.0 {
                    entries.push(PlanEntry { row: i as u32, col: j as u32, mass });
                    objective += mass * cost[(i, j)];
                }
            }
        }
        Self::new(n, m, entries, source_weights, target_weights, objective)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn entries(&self) -> &[PlanEntry] {
        &self.entries
    }

    pub fn source_weights(&self) -> &DVector<f64> {
        &self.source_weights
    }

    pub fn target_weights(&self) -> &DVector<f64> {
        &self.target_weights
    }

    /// Transport cost `<Gamma, C>` reported by the solver.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.n, self.m);
        for e in &self.entries {
            p[(e.row as usize, e.col as usize)] += e.mass;
        }
        p
    }

    pub fn row_masses(&self) -> DVector<f64> {
        let mut r = DVector::zeros(self.n);
        for e in &self.entries {
            r[e.row as usize] += e.mass;
        }
        r
    }

    pub fn col_masses(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.m);
        for e in &self.entries {
            c[e.col as usize] += e.mass;
        }
        c
    }

    /// Conditional barycenters of the target points under the plan:
    /// `ybar_i = sum_j G_ij y_j / sum_j G_ij`.
    pub fn barycentric_projection(&self, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if targets.nrows() != self.m {
            return Err(Error::DimensionMismatch(format!(
                "plan has {} columns, {} target points supplied",
                self.m,
                targets.nrows()
            )));
        }
        let d = targets.ncols();
        let row_mass = self.row_masses();
        for i in 0..self.n {
            if row_mass[i] <= 0.0 {
                return Err(Error::DegeneratePlan(format!("row {i} carries no mass")));
            }
        }
        let mut out = DMatrix::zeros(self.n, d);
        for e in &self.entries {
            let (i, j) = (e.row as usize, e.col as usize);
            for k in 0..d {
                out[(i, k)] += e.mass * targets[(j, k)];
            }
        }
        for i in 0..self.n {
            for k in 0..d {
                out[(i, k)] /= row_mass[i];
            }
        }
        Ok(out)
    }

    /// Mass-weighted average of incoming source vectors at each target point:
    /// `ztilde_j = sum_i G_ij z_i / sum_i G_ij`.
    pub fn weighted_aggregate(&self, source_vectors: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if source_vectors.nrows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "plan has {} rows, {} source vectors supplied",
                self.n,
                source_vectors.nrows()
            )));
        }
        let d = source_vectors.ncols();
        let col_mass = self.col_masses();
        for j in 0..self.m {
            if col_mass[j] <= 0.0 {
                return Err(Error::DegeneratePlan(format!("column {j} carries no mass")));
            }
        }
        let mut out = DMatrix::zeros(self.m, d);
        for e in &self.entries {
            let (i, j) = (e.row as usize, e.col as usize);
            for k in 0..d {
                out[(j, k)] += e.mass * source_vectors[(i, k)];
            }
        }
        for j in 0..self.m {
            for k in 0..d {
                out[(j, k)] /= col_mass[j];
            }
        }
        Ok(out)
    }
}

/// Pairwise squared Euclidean distances between the rows of `x` and `y`.
pub fn pairwise_sq_cost(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "point dimensions differ: {} vs {}",
            x.ncols(),
            y.ncols()
        )));
    }
    let (n, m, d) = (x.nrows(), y.nrows(), x.ncols());
    let mut c = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..d {
                let diff = x[(i, k)] - y[(j, k)];
                s += diff * diff;
            }
            c[(i, j)] = s;
        }
    }
    Ok(c)
}

fn check_marginal(a: &DVector<f64>, label: &str) -> Result<()> {
    if a.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput(format!("{label} marginal has negative or non-finite mass")));
    }
    Ok(())
}

/// Exact discrete optimal transport to LP optimality.
///
/// Uniform square instances are solved as an assignment problem; general
/// marginals go through a successive-shortest-path transportation solve.
pub fn solve_exact(a: &DVector<f64>, b: &DVector<f64>, cost: &DMatrix<f64>) -> Result<Coupling> {
    let (n, m) = cost.shape();
    if a.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "marginals {} x {} do not match cost {} x {}",
            a.len(),
            b.len(),
            n,
            m
        )));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidInput("cost matrix has non-finite entries".into()));
    }
    check_marginal(a, "source")?;
    check_marginal(b, "target")?;
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "infeasible marginals: masses {sa:.9} vs {sb:.9} differ beyond 1e-6"
        )));
    }
    solve_exact_oracle(a, b, &|i, j| cost[(i, j)])
}

/// Exact OT with costs supplied by an oracle, avoiding the dense matrix.
pub(crate) fn solve_exact_oracle(
    a: &DVector<f64>,
    b: &DVector<f64>,
    cost: &dyn Fn(usize, usize) -> f64,
) -> Result<Coupling> {
    let (n, m) = (a.len(), b.len());
    if is_uniform_square(a, b) {
        let perm = assignment::solve(n, cost)?;
        let mut entries = Vec::with_capacity(n);
        let mut objective = 0.0;
        for (i, &j) in perm.iter().enumerate() {
            entries.push(PlanEntry { row: i as u32, col: j as u32, mass: a[i] });
            objective += a[i] * cost(i, j);
        }
        return Coupling::new(n, m, entries, a.clone(), b.clone(), objective);
    }
    transport_lp::solve(a, b, cost)
}

/// Both marginals uniform with the same support size.
fn is_uniform_square(a: &DVector<f64>, b: &DVector<f64>) -> bool {
    let n = a.len();
    if n != b.len() {
        return false;
    }
    let w = 1.0 / n as f64;
    let tol = w * 1e-12;
    a.iter().chain(b.iter()).all(|&x| (x - w).abs() <= tol)
}

/// Which plan solver to use and its entropic parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Exact,
    Sinkhorn,
}

/// Solver configuration shared by every operation that needs a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_method")]
    pub method: SolverMethod,
    /// Entropic regularization strength (sinkhorn only).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Marginal tolerance for the entropic solver.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_method() -> SolverMethod {
    SolverMethod::Exact
}
fn default_epsilon() -> f64 {
    1e-2
}
fn default_max_iter() -> usize {
    10_000
}
fn default_tol() -> f64 {
    1e-9
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: default_method(),
            epsilon: default_epsilon(),
            max_iter: default_max_iter(),
            tol: default_tol(),
        }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn sinkhorn(epsilon: f64) -> Self {
        Self { method: SolverMethod::Sinkhorn, epsilon, ..Self::default() }
    }
}

/// Optimal plan between two clouds under squared Euclidean cost.
pub fn plan(source: &PointCloud, target: &PointCloud, solver: &SolverConfig) -> Result<Coupling> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch(format!(
            "clouds have dims {} and {}",
            source.dim(),
            target.dim()
        )));
    }
    match solver.method {
        SolverMethod::Exact => {
            let (xp, yp) = (source.points(), target.points());
            let d = source.dim();
            let oracle = |i: usize, j: usize| {
                let mut s = 0.0;
                for k in 0..d {
                    let diff = xp[(i, k)] - yp[(j, k)];
                    s += diff * diff;
                }
                s
            };
            solve_exact_oracle(source.weights(), target.weights(), &oracle)
        }
        SolverMethod::Sinkhorn => {
            let cost = pairwise_sq_cost(source.points(), target.points())?;
            let params = SinkhornParams {
                epsilon: solver.epsilon,
                max_iter: solver.max_iter,
                tol: solver.tol,
            };
            Ok(solve_sinkhorn(source.weights(), target.weights(), &cost, &params)?.coupling)
        }
    }
}

/// 2-Wasserstein distance between two clouds.
pub fn w2_distance(p: &PointCloud, q: &PointCloud, solver: &SolverConfig) -> Result<f64> {
    let coupling = plan(p, q, solver)?;
    Ok(coupling.objective().max(0.0).sqrt())
}

/// Empirical Wasserstein log map: displacement from each source point to the
/// conditional barycenter of its plan row.
pub fn log_map(p: &PointCloud, q: &PointCloud, solver: &SolverConfig) -> Result<TangentField> {
    let coupling = plan(p, q, solver)?;
    let bary = coupling.barycentric_projection(q.points())?;
    let vectors = bary - p.points();
    TangentField::new(p.clone(), vectors)
}

/// Empirical Wasserstein exponential map: push every support point along its
/// tangent vector scaled by `t`, keeping weights.
pub fn exp_map(p: &PointCloud, field: &TangentField, t: f64) -> Result<PointCloud> {
    if !field.same_anchor(p) {
        return Err(Error::InvalidInput("tangent field is not anchored at this cloud".into()));
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("step {t} is not finite")));
    }
    let points = p.points() + field.vectors() * t;
    p.with_points(points)
}
