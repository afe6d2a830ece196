//! Gain, whitening, and the most informative directions of a hypothesis pair.
//!
//! The gain of a direction `u` is the variance ratio `uᵀΣ1u / uᵀΣ2u`. With a
//! whitening matrix `W` (`WᵀΣ2W = I`) and `u = Wv`, the gain becomes the
//! Rayleigh quotient of `WᵀΣ1W`, so the best directions are `W` times the
//! leading eigenvectors of that matrix.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::covariance::{center, hypothesis_covariances, CovariancePair};
use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::tiling::{HypothesisTilings, TileMap};

/// Default relative eigenvalue floor for whitening.
pub const DEFAULT_FLOOR: f64 = 1e-9;

/// Relative gap under which two eigenvalues are treated as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Denominators `uᵀΣ2u` at or below this fraction of `‖u‖²·tr(Σ2)` are degenerate.
const GAIN_DENOMINATOR_FLOOR: f64 = 1e-14;

/// Eigenpairs sorted by decreasing eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with eigenvalues in decreasing order.
pub fn sorted_symmetric_eigen(a: &DMatrix<f64>) -> SortedEigen {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), order.len(), |i, c| eig.eigenvectors[(i, order[c])]);
    SortedEigen { values, vectors }
}

/// `uᵀΣ1u / uᵀΣ2u`.
pub fn gain(u: &[f64], cov: &CovariancePair) -> Result<f64> {
    let m = cov.dim();
    if u.len() != m {
        return Err(Error::ShapeMismatch { expected: (m, 1), actual: (u.len(), 1) });
    }
    let u = DVector::from_column_slice(u);
    let norm2 = u.norm_squared();
    if norm2 == 0.0 || !norm2.is_finite() {
        return Err(Error::InvalidParameter("direction must be non-zero and finite".into()));
    }
    let num = (u.transpose() * &cov.sigma1 * &u)[(0, 0)];
    let den = (u.transpose() * &cov.sigma2 * &u)[(0, 0)];
    let scale = cov.sigma2.trace().abs().max(f64::MIN_POSITIVE);
    if den <= GAIN_DENOMINATOR_FLOOR * norm2 * scale {
        return Err(Error::DegenerateDirection(den));
    }
    Ok(num / den)
}

/// A whitening matrix and how it was regularised.
#[derive(Debug, Clone)]
pub struct Whitener {
    /// `W = Q·Λ_f^{-1/2}` with columns in decreasing eigenvalue order of `Σ2`.
    pub matrix: DMatrix<f64>,
    /// Eigenvalues of `Σ2`, decreasing, before clamping.
    pub eigenvalues: Vec<f64>,
    /// Absolute value eigenvalues were clamped up to (`floor · λ_max`).
    pub floor_value: f64,
    /// Number of eigenvalues that were below the floor.
    pub clamped: usize,
}

/// Whitens `sigma2`, clamping eigenvalues below `floor · λ_max` up to that value.
pub fn whiten(sigma2: &DMatrix<f64>, floor: f64) -> Result<Whitener> {
    if !sigma2.is_square() || sigma2.nrows() == 0 {
        return Err(Error::InvalidShape(format!("{:?} covariance", sigma2.shape())));
    }
    if !(0.0..1.0).contains(&floor) {
        return Err(Error::InvalidParameter(format!("eigenvalue floor must lie in [0, 1), got {floor}")));
    }
    let eig = sorted_symmetric_eigen(sigma2);
    let lambda_max = eig.values[0];
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(Error::DegenerateCovariance("Σ2 has no positive eigenvalue".into()));
    }
    let floor_value = floor * lambda_max;
    let mut clamped = 0;
    let mut matrix = eig.vectors.clone();
    for (c, &lambda) in eig.values.iter().enumerate() {
        let l = if lambda < floor_value || lambda <= 0.0 {
            clamped += 1;
            floor_value.max(f64::MIN_POSITIVE)
        } else {
            lambda
        };
        matrix.column_mut(c).scale_mut(1.0 / l.sqrt());
    }
    Ok(Whitener { matrix, eigenvalues: eig.values, floor_value, clamped })
}

/// Optimal directions for a hypothesis pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    /// Unit vectors, best first.
    pub directions: Vec<Vec<f64>>,
    /// Gain of each direction (eigenvalues of `WᵀΣ1W`).
    pub gains: Vec<f64>,
    /// The whitening matrix, row-major.
    pub whitener: Vec<Vec<f64>>,
    /// Relative eigenvalue floor requested.
    pub floor: f64,
    /// Absolute eigenvalue floor applied to `Σ2`.
    pub floor_value: f64,
    /// Eigenvalues of `Σ2` that were clamped.
    pub clamped: usize,
    /// Fewer directions than requested were returned.
    pub reduced: bool,
    /// The top direction is not unique (tied leading gains) or `Σ2` was singular.
    pub degenerate: bool,
}

impl ProjectionResult {
    pub fn top_gain(&self) -> f64 {
        self.gains[0]
    }

    pub fn num_dirs(&self) -> usize {
        self.directions.len()
    }

    /// Directions as columns of an `m × k` matrix.
    pub fn direction_matrix(&self) -> DMatrix<f64> {
        let m = self.directions[0].len();
        DMatrix::from_fn(m, self.directions.len(), |i, k| self.directions[k][i])
    }

    /// Indices and values of the `count` largest-magnitude loadings of direction `k`.
    pub fn top_loadings(&self, k: usize, count: usize) -> Vec<(usize, f64)> {
        let mut v: Vec<(usize, f64)> = self.directions[k].iter().copied().enumerate().collect();
        v.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        v.truncate(count);
        v
    }
}

/// Flips `v` so that its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut [f64]) {
    let (mut best, mut idx) = (0.0f64, 0usize);
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn most_informative_directions(cov: &CovariancePair, num_dirs: usize, floor: f64) -> Result<ProjectionResult> {
    let m = cov.dim();
    if num_dirs == 0 || num_dirs > m {
        return Err(Error::InvalidParameter(format!("num_dirs must lie in 1..={m}, got {num_dirs}")));
    }
    let w = whiten(&cov.sigma2, floor)?;
    let a = w.matrix.transpose() * &cov.sigma1 * &w.matrix;
    let eig = sorted_symmetric_eigen(&a);
    let rank = m - w.clamped;
    let count = num_dirs.min(rank.max(1));
    let mut directions = Vec::with_capacity(count);
    let mut gains = Vec::with_capacity(count);
    for k in 0..count {
        let u = &w.matrix * eig.vectors.column(k);
        let norm = u.norm();
        if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
            return Err(Error::DegenerateCovariance("whitened direction has zero norm".into()));
        }
        let mut v: Vec<f64> = u.iter().map(|x| x / norm).collect();
        fix_sign(&mut v);
        directions.push(v);
        gains.push(eig.values[k]);
    }
    let lead = eig.values[0].abs().max(f64::MIN_POSITIVE);
    let tied = m > 1 && (eig.values[0] - eig.values[1]).abs() <= TIE_TOLERANCE * lead;
    Ok(ProjectionResult {
        directions,
        gains,
        whitener: w.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
        floor,
        floor_value: w.floor_value,
        clamped: w.clamped,
        reduced: count < num_dirs,
        degenerate: tied || w.clamped > 0,
    })
}

/// Coordinates of the column-centred data along each direction (`n × k`).
pub fn project(data: &DataMatrix, result: &ProjectionResult) -> Result<DMatrix<f64>> {
    project_matrix(data.values(), result)
}

pub fn project_matrix(x: &DMatrix<f64>, result: &ProjectionResult) -> Result<DMatrix<f64>> {
    let m = result.directions.first().map_or(0, Vec::len);
    if x.ncols() != m {
        return Err(Error::ShapeMismatch { expected: (x.nrows(), m), actual: x.shape() });
    }
    let y = crate::covariance::center_matrix(x);
    Ok(y.values() * result.direction_matrix())
}

/// Pearson correlation matrix of the columns (zero-variance columns get a unit diagonal).
pub fn correlation_matrix(data: &DataMatrix) -> DMatrix<f64> {
    let y = center(data);
    let n = data.n_rows() as f64;
    let cov = y.values().transpose() * y.values() / n;
    let sd: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    DMatrix::from_fn(cov.nrows(), cov.ncols(), |i, j| {
        if i == j {
            1.0
        } else if sd[i] > 0.0 && sd[j] > 0.0 {
            cov[(i, j)] / (sd[i] * sd[j])
        } else {
            0.0
        }
    })
}

/// First principal component of the correlation matrix, sign-normalised.
pub fn first_principal_component(data: &DataMatrix) -> Vec<f64> {
    let eig = sorted_symmetric_eigen(&correlation_matrix(data));
    let mut v: Vec<f64> = eig.vectors.column(0).iter().copied().collect();
    fix_sign(&mut v);
    v
}

/// Norm of the projection of unit vector `u` onto the span of orthonormal `basis` columns.
pub fn subspace_alignment(u: &[f64], basis: &DMatrix<f64>) -> f64 {
    let u = DVector::from_column_slice(u);
    (basis.transpose() * u).norm()
}

/// Checks that unguided exploration on unit-variance data recovers the first
/// principal component of the correlation matrix.
///
/// When the leading correlation eigenvalue is repeated the direction is
/// compared against the whole leading eigenspace.
pub fn pca_limit_check(data: &DataMatrix) -> Result<bool> {
    let (n, m) = data.shape();
    let y = center(data);
    let pair = hypothesis_covariances(&y, &TileMap::new(n, m)?, &HypothesisTilings::unguided(n, m)?)?;
    let result = most_informative_directions(&pair, 1, DEFAULT_FLOOR)?;
    let eig = sorted_symmetric_eigen(&correlation_matrix(data));
    let lead = eig.values[0];
    let width = eig.values.iter().take_while(|&&l| (lead - l).abs() <= TIE_TOLERANCE * lead.abs()).count();
    let basis = eig.vectors.columns(0, width).into_owned();
    Ok(subspace_alignment(&result.directions[0], &basis) >= 1.0 - 1e-6)
}
