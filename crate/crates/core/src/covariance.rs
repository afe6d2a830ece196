//! Analytic covariance of the tile-constrained permutation distribution.
//!
//! For columns `j, j'`, rows that one tile permutes jointly in both columns
//! contribute `Y(i,j)·Y(i,j')`. Every other row contributes the product of its
//! two tile means, since the two columns are then permuted independently and
//! `E[Y(π_l(i), l)]` is the mean of column `l` over the rows of the tile that
//! holds cell `(i, l)`. The normaliser is `1/n`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::tiling::{HypothesisTilings, TileMap};

/// Column-centred data `Y` and the means that were subtracted.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredData {
    values: DMatrix<f64>,
    means: Vec<f64>,
}

impl CenteredData {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

pub fn center(data: &DataMatrix) -> CenteredData {
    center_matrix(data.values())
}

pub fn center_matrix(x: &DMatrix<f64>) -> CenteredData {
    let n = x.nrows() as f64;
    let mut values = x.clone();
    let mut means = Vec::with_capacity(x.ncols());
    for mut col in values.column_iter_mut() {
        let mean = col.iter().sum::<f64>() / n;
        col.add_scalar_mut(-mean);
        means.push(mean);
    }
    CenteredData { values, means }
}

/// `Σ1` and `Σ2` of a hypothesis pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub sigma1: DMatrix<f64>,
    pub sigma2: DMatrix<f64>,
}

impl CovariancePair {
    pub fn new(sigma1: DMatrix<f64>, sigma2: DMatrix<f64>) -> Result<Self> {
        if !sigma1.is_square() || sigma1.shape() != sigma2.shape() {
            return Err(Error::ShapeMismatch { expected: sigma1.shape(), actual: sigma2.shape() });
        }
        Ok(CovariancePair { sigma1, sigma2 })
    }

    pub fn dim(&self) -> usize {
        self.sigma1.nrows()
    }
}

/// Exact covariance matrix of the distribution defined by `map`.
pub fn tiling_covariance(y: &CenteredData, map: &TileMap) -> Result<DMatrix<f64>> {
    let (n, m) = y.shape();
    if map.shape() != (n, m) {
        return Err(Error::ShapeMismatch { expected: (n, m), actual: map.shape() });
    }
    let yv = &y.values;

    // Column-major copies of the IDs and of the per-cell tile means.
    let mut ids = vec![0u32; n * m];
    for i in 0..n {
        for (j, &id) in map.row(i).iter().enumerate() {
            ids[j * n + i] = id;
        }
    }
    let mut tile_mean = DMatrix::<f64>::zeros(n, m);
    for span in map.spans() {
        let inv = 1.0 / span.rows.len() as f64;
        for &j in &span.cols {
            let mean = span.rows.iter().map(|&i| yv[(i, j)]).sum::<f64>() * inv;
            for &i in &span.rows {
                tile_mean[(i, j)] = mean;
            }
        }
    }

    let upper: Vec<Vec<f64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let yj = yv.column(j);
            let aj = tile_mean.column(j);
            let idj = &ids[j * n..(j + 1) * n];
            (j..m)
                .map(|k| {
                    let yk = yv.column(k);
                    let ak = tile_mean.column(k);
                    let idk = &ids[k * n..(k + 1) * n];
                    let mut s = 0.0;
                    for i in 0..n {
                        s += if idj[i] == idk[i] { yj[i] * yk[i] } else { aj[i] * ak[i] };
                    }
                    s / n as f64
                })
                .collect()
        })
        .collect();

    let mut cov = DMatrix::zeros(m, m);
    for (j, row) in upper.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            cov[(j, j + off)] = v;
            cov[(j + off, j)] = v;
        }
    }
    Ok(cov)
}

/// The two merged tilings `user + H1` and `user + H2`.
pub fn hypothesis_maps(user: &TileMap, h: &HypothesisTilings) -> Result<(TileMap, TileMap)> {
    let (n, m) = user.shape();
    h.check_bounds(n, m)?;
    let (t1, t2) = h.tiles();
    Ok((user.merge_all(&t1)?, user.merge_all(&t2)?))
}

pub fn hypothesis_covariances(y: &CenteredData, user: &TileMap, h: &HypothesisTilings) -> Result<CovariancePair> {
    let (map1, map2) = hypothesis_maps(user, h)?;
    let (s1, s2) = rayon::join(|| tiling_covariance(y, &map1), || tiling_covariance(y, &map2));
    CovariancePair::new(s1?, s2?)
}
