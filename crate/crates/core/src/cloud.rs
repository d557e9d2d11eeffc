//! Weighted empirical measures on R^d and tangent fields over them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A weighted empirical measure: `n` support points in R^d with probability
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: DMatrix<f64>,
    weights: DVector<f64>,
}

impl PointCloud {
    /// Build a cloud from a support matrix (one point per row) and weights.
    ///
    /// Weights must be nonnegative and sum to one within 1e-9; all entries
    /// must be finite.
    pub fn new(points: DMatrix<f64>, weights: DVector<f64>) -> Result<Self> {
        let n = points.nrows();
        let d = points.ncols();
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(format!(
                "point cloud must have n >= 1 and d >= 1, got {n} x {d}"
            )));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} points",
                weights.len(),
                n
            )));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite coordinate in point cloud".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Uniformly weighted cloud over the given support.
    pub fn uniform(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        if n == 0 {
            return Err(Error::InvalidInput("point cloud must have n >= 1".into()));
        }
        let weights = DVector::from_element(n, 1.0 / n as f64);
        Self::new(points, weights)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// Weighted mean of the support.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for i in 0..self.len() {
            m.axpy(self.weights[i], &self.points.row(i).transpose(), 1.0);
        }
        m
    }

    /// Unbiased weighted sample covariance (frequency weights normalized to
    /// probabilities; the usual 1/(1 - sum w_i^2) correction).
    pub fn covariance(&self) -> DMatrix<f64> {
        let d = self.dim();
        let m = self.mean();
        let mut cov = DMatrix::zeros(d, d);
        let mut sq = 0.0;
        for i in 0..self.len() {
            let w = self.weights[i];
            sq += w * w;
            let c = self.points.row(i).transpose() - &m;
            cov.syger(w, &c, &c, 1.0);
        }
        let denom = 1.0 - sq;
        if denom > f64::EPSILON {
            cov /= denom;
        }
        // syger fills the lower triangle; mirror it.
        for r in 0..d {
            for c in (r + 1)..d {
                cov[(r, c)] = cov[(c, r)];
            }
        }
        cov
    }

    /// Cloud translated by `shift`.
    pub fn translated(&self, shift: &DVector<f64>) -> Result<Self> {
        if shift.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "shift has dim {}, cloud has dim {}",
                shift.len(),
                self.dim()
            )));
        }
        let mut points = self.points.clone();
        for i in 0..points.nrows() {
            for j in 0..points.ncols() {
                points[(i, j)] += shift[j];
            }
        }
        Ok(Self { points, weights: self.weights.clone() })
    }

    /// Replace the support, keeping weights. The new support must have the
    /// same row count.
    pub fn with_points(&self, points: DMatrix<f64>) -> Result<Self> {
        Self::new(points, self.weights.clone())
    }
}

/// A tangent velocity field sampled on the support of an anchor cloud:
/// one vector in R^d per anchor point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    anchor: PointCloud,
    vectors: DMatrix<f64>,
}

impl TangentField {
    pub fn new(anchor: PointCloud, vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() != anchor.len() || vectors.ncols() != anchor.dim() {
            return Err(Error::DimensionMismatch(format!(
                "field is {} x {}, anchor is {} x {}",
                vectors.nrows(),
                vectors.ncols(),
                anchor.len(),
                anchor.dim()
            )));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in tangent field".into()));
        }
        Ok(Self { anchor, vectors })
    }

    pub fn zero(anchor: PointCloud) -> Self {
        let vectors = DMatrix::zeros(anchor.len(), anchor.dim());
        Self { anchor, vectors }
    }

    pub fn anchor(&self) -> &PointCloud {
        &self.anchor
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn into_vectors(self) -> DMatrix<f64> {
        self.vectors
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// Weighted mean vector of the field under the anchor weights.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for i in 0..self.anchor.len() {
            m.axpy(self.anchor.weights()[i], &self.vectors.row(i).transpose(), 1.0);
        }
        m
    }

    /// L^2(anchor) norm: sqrt(sum_i w_i |v_i|^2).
    pub fn l2_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.anchor.len() {
            s += self.anchor.weights()[i] * self.vectors.row(i).norm_squared();
        }
        s.sqrt()
    }

    /// Weighted L^2 inner product with another field on the same anchor.
    pub fn l2_inner(&self, other: &TangentField) -> Result<f64> {
        if self.anchor.len() != other.anchor.len() || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch("fields live on different supports".into()));
        }
        let mut s = 0.0;
        for i in 0..self.anchor.len() {
            s += self.anchor.weights()[i] * self.vectors.row(i).dot(&other.vectors.row(i));
        }
        Ok(s)
    }

    /// True when both fields are anchored at bitwise-identical clouds.
    pub fn same_anchor(&self, cloud: &PointCloud) -> bool {
        self.anchor == *cloud
    }
}

/// A time-ordered sequence of clouds sharing one ambient dimension.
#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: Vec<PointCloud>,
    times: Vec<f64>,
}

impl Trajectory {
    /// Build from clouds with default time labels 0..T-1.
    pub fn new(steps: Vec<PointCloud>) -> Result<Self> {
        let times = (0..steps.len()).map(|i| i as f64).collect();
        Self::with_times(steps, times)
    }

    pub fn with_times(steps: Vec<PointCloud>, times: Vec<f64>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidInput("trajectory must contain at least one step".into()));
        }
        if times.len() != steps.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} time labels for {} steps",
                times.len(),
                steps.len()
            )));
        }
        let d = steps[0].dim();
        for (i, s) in steps.iter().enumerate() {
            if s.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "step {i} has dim {}, expected {d}",
                    s.dim()
                )));
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("time labels must be strictly increasing".into()));
        }
        Ok(Self { steps, times })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.steps[0].dim()
    }

    pub fn steps(&self) -> &[PointCloud] {
        &self.steps
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step(&self, i: usize) -> &PointCloud {
        &self.steps[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cloud(points: &[f64], n: usize, d: usize) -> PointCloud {
        PointCloud::uniform(DMatrix::from_row_slice(n, d, points)).unwrap()
    }

    #[test]
    fn rejects_bad_weights() {
        let pts = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert!(PointCloud::new(pts.clone(), DVector::from_vec(vec![0.5, 0.6])).is_err());
        assert!(PointCloud::new(pts.clone(), DVector::from_vec(vec![-0.1, 1.1])).is_err());
        assert!(PointCloud::new(pts, DVector::from_vec(vec![f64::NAN, 1.0])).is_err());
    }

    #[test]
    fn rejects_non_finite_points() {
        let pts = DMatrix::from_row_slice(1, 2, &[f64::INFINITY, 0.0]);
        assert!(PointCloud::uniform(pts).is_err());
    }

    #[test]
    fn mean_and_covariance() {
        let c = cloud(&[0.0, 0.0, 2.0, 0.0, 0.0, 2.0, 2.0, 2.0], 4, 2);
        let m = c.mean();
        assert_relative_eq!(m[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m[1], 1.0, epsilon = 1e-12);
        let cov = c.covariance();
        // Unbiased: (1/(n-1)) sum (x - mean)^2 = 4/3 per diagonal.
        assert_relative_eq!(cov[(0, 0)], 4.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(cov[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tangent_field_shape_check() {
        let c = cloud(&[0.0, 1.0], 2, 1);
        assert!(TangentField::new(c.clone(), DMatrix::zeros(3, 1)).is_err());
        assert!(TangentField::new(c, DMatrix::zeros(2, 1)).is_ok());
    }

    #[test]
    fn trajectory_validation() {
        let a = cloud(&[0.0], 1, 1);
        let b = cloud(&[0.0, 0.0], 1, 2);
        assert!(Trajectory::new(vec![a.clone(), b]).is_err());
        assert!(Trajectory::with_times(vec![a.clone(), a.clone()], vec![1.0, 1.0]).is_err());
        let t = Trajectory::new(vec![a.clone(), a]).unwrap();
        assert_eq!(t.times(), &[0.0, 1.0]);
    }
}
