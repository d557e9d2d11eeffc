//! Entropic-regularized transport via Sinkhorn iterations. Scaling updates
//! run in the log domain once epsilon drops below 1e-2 times the median
//! cost, which is where the plain exponentials start to underflow.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ot::{Coupling, PlanEntry, MARGINAL_TOL};

#[derive(Debug, Clone, Copy)]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        Self { epsilon: 1e-2, max_iter: 10_000, tol: 1e-9 }
    }
}

/// Entropic plan plus convergence report.
#[derive(Debug, Clone)]
pub struct SinkhornSolution {
    pub coupling: Coupling,
    pub iterations: usize,
    pub marginal_violation: f64,
    pub converged: bool,
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let k = values.len();
    if k == 0 {
        return 0.0;
    }
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

pub fn solve_sinkhorn(
    a: &DVector<f64>,
    b: &DVector<f64>,
    cost: &DMatrix<f64>,
    params: &SinkhornParams,
) -> Result<SinkhornSolution> {
    let (n, m) = cost.shape();
    if a.len() != n || b.len() != m {
        return Err(Error::DimensionMismatch("marginals do not match cost shape".into()));
    }
    if params.epsilon <= 0.0 {
        return Err(Error::InvalidInput(format!("epsilon must be positive, got {}", params.epsilon)));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "infeasible marginals: masses {sa:.9} vs {sb:.9} differ beyond 1e-6"
        )));
    }

    let mut costs: Vec<f64> = cost.iter().cloned().collect();
    let med = median(&mut costs);
    let use_log_domain = params.epsilon < 1e-2 * med;

    let (plan, iterations) = if use_log_domain {
        log_domain_plan(a, b, cost, params)?
    } else {
        scaling_plan(a, b, cost, params)?
    };

    // Row update ran last, so rows are exact; report the column violation.
    let mut violation = 0.0f64;
    let mut col = vec![0.0f64; m];
    for j in 0..m {
        for i in 0..n {
            col[j] += plan[(i, j)];
        }
        violation = violation.max((col[j] - b[j]).abs());
    }
    let mut row_dev = 0.0f64;
    for i in 0..n {
        let s: f64 = plan.row(i).iter().sum();
        row_dev = row_dev.max((s - a[i]).abs());
    }
    violation = violation.max(row_dev);

    let converged = violation <= params.tol;
    if violation > MARGINAL_TOL {
        return Err(Error::Solver(format!(
            "sinkhorn stopped with marginal violation {violation:.3e} > {MARGINAL_TOL:.0e}; \
             increase max_iter or epsilon"
        )));
    }

    let mut entries = Vec::with_capacity(n * m);
    let mut objective = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mass = plan[(i, j)];
            if mass > 0.0 {
                entries.push(PlanEntry { row: i as u32, col: j as u32, mass });
                objective += mass * cost[(i, j)];
            }
        }
    }
    let coupling = Coupling::new(n, m, entries, a.clone(), b.clone(), objective)?;
    Ok(SinkhornSolution { coupling, iterations, marginal_violation: violation, converged })
}

fn scaling_plan(
    a: &DVector<f64>,
    b: &DVector<f64>,
    cost: &DMatrix<f64>,
    params: &SinkhornParams,
) -> Result<(DMatrix<f64>, usize)> {
    let (n, m) = cost.shape();
    let kernel = cost.map(|c| (-c / params.epsilon).exp());
    let mut u = DVector::from_element(n, 1.0);
    let mut v = DVector::from_element(m, 1.0);
    let mut iterations = 0;

    for it in 0..params.max_iter {
        iterations = it + 1;
        // v-update: match columns.
        let ktu = kernel.tr_mul(&u);
        for j in 0..m {
            let denom = ktu[j];
            if denom <= f64::MIN_POSITIVE || !denom.is_finite() {
                return Err(Error::Solver(
                    "sinkhorn scaling underflowed; use a larger epsilon (log-domain updates engage below 1e-2 x median cost)".into(),
                ));
            }
            v[j] = b[j] / denom;
        }
        // u-update: match rows.
        let kv = &kernel * &v;
        for i in 0..n {
            let denom = kv[i];
            if denom <= f64::MIN_POSITIVE || !denom.is_finite() {
                return Err(Error::Solver(
                    "sinkhorn scaling underflowed; use a larger epsilon (log-domain updates engage below 1e-2 x median cost)".into(),
                ));
            }
            u[i] = a[i] / denom;
        }
        // After the u-update rows are exact; check columns.
        let ktu = kernel.tr_mul(&u);
        let mut col_err = 0.0f64;
        for j in 0..m {
            col_err = col_err.max((ktu[j] * v[j] - b[j]).abs());
        }
        if col_err <= params.tol {
            break;
        }
    }

    let mut plan = kernel;
    for i in 0..n {
        for j in 0..m {
            plan[(i, j)] *= u[i] * v[j];
        }
    }
    Ok((plan, iterations))
}

fn log_domain_plan(
    a: &DVector<f64>,
    b: &DVector<f64>,
    cost: &DMatrix<f64>,
    params: &SinkhornParams,
) -> Result<(DMatrix<f64>, usize)> {
    let (n, m) = cost.shape();
    let eps = params.epsilon;
    let log_a: Vec<f64> = a.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    let log_b: Vec<f64> = b.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
    let mut f = vec![0.0f64; n];
    let mut g = vec![0.0f64; m];
    let mut iterations = 0;

    let logsumexp = |vals: &mut dyn Iterator<Item = f64>| -> f64 {
        let collected: Vec<f64> = vals.collect();
        let max = collected.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return max;
        }
        let s: f64 = collected.iter().map(|v| (v - max).exp()).sum();
        max + s.ln()
    };

    for it in 0..params.max_iter {
        iterations = it + 1;
        for j in 0..m {
            let lse = logsumexp(&mut (0..n).map(|i| (f[i] - cost[(i, j)]) / eps));
            g[j] = if log_b[j].is_finite() { eps * (log_b[j] - lse) } else { f64::NEG_INFINITY };
        }
        let mut col_err = 0.0f64;
        for i in 0..n {
            let lse = logsumexp(&mut (0..m).map(|j| (g[j] - cost[(i, j)]) / eps));
            f[i] = if log_a[i].is_finite() { eps * (log_a[i] - lse) } else { f64::NEG_INFINITY };
        }
        // Rows are exact after the f-update; measure column deviation.
        for j in 0..m {
            let lse = logsumexp(&mut (0..n).map(|i| (f[i] + g[j] - cost[(i, j)]) / eps));
            let colsum = lse.exp();
            col_err = col_err.max((colsum - b[j]).abs());
        }
        if col_err <= params.tol {
            break;
        }
    }

    let mut plan = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let v = ((f[i] + g[j] - cost[(i, j)]) / eps).exp();
            if !v.is_finite() {
                return Err(Error::Solver("sinkhorn log-domain plan has non-finite entries".into()));
            }
            plan[(i, j)] = v;
        }
    }
    Ok((plan, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_atom_plan() {
        let a = DVector::from_vec(vec![1.0]);
        let c = DMatrix::from_row_slice(1, 1, &[3.0]);
        let sol = solve_sinkhorn(&a, &a, &c, &SinkhornParams::default()).unwrap();
        assert_relative_eq!(sol.coupling.to_dense()[(0, 0)], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn two_point_symmetric_instance_matches_closed_form() {
        // Marginals (1/2, 1/2), cost [[0,1],[1,0]], entropic optimum has
        // off-diagonal mass q = 0.5 * exp(-1/eps) / (1 + exp(-1/eps)).
        let a = DVector::from_vec(vec![0.5, 0.5]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let eps = 1e-3;
        let sol = solve_sinkhorn(&a, &a, &c, &SinkhornParams { epsilon: eps, ..Default::default() }).unwrap();
        let plan = sol.coupling.to_dense();
        assert!((plan[(0, 0)] - 0.5).abs() < 1e-3);
        assert!(plan[(0, 1)].abs() < 1e-3);
        assert!((plan[(1, 1)] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let a = DVector::from_vec(vec![1.0]);
        let c = DMatrix::from_row_slice(1, 1, &[3.0]);
        let params = SinkhornParams { epsilon: 0.0, ..Default::default() };
        assert!(solve_sinkhorn(&a, &a, &c, &params).is_err());
    }
}
