//! Uniform sampling of permutation vectors allowed by a tiling.
//!
//! Each tile draws one uniform permutation of its row set and applies it to
//! every column it spans. The generator for a tile is the ChaCha8 stream
//! numbered by the tile ID, so a draw does not depend on the order in which
//! tiles are visited.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::rng;
use crate::tiling::{PermutationVector, TileMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub seed: u64,
    pub count: usize,
}

impl SampleConfig {
    pub fn new(seed: u64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        Ok(SampleConfig { seed, count })
    }

    /// Seed of the `k`-th draw.
    pub fn draw_seed(&self, k: usize) -> u64 {
        rng::derive(self.seed, &[k as u64])
    }
}

pub fn sample_permutation(map: &TileMap, seed: u64) -> PermutationVector {
    let (n, m) = map.shape();
    let mut perms = vec![vec![0usize; n]; m];
    for span in map.spans() {
        let mut r = rng::stream_rng(seed, u64::from(span.id));
        let mut image = span.rows.clone();
        image.shuffle(&mut r);
        for &j in &span.cols {
            let col = &mut perms[j];
            for (&i, &src) in span.rows.iter().zip(&image) {
                col[i] = src;
            }
        }
    }
    PermutationVector::from_unchecked(perms)
}

/// Applies `p` to the numeric values: `out(i, j) = x(π_j(i), j)`.
pub fn apply_permutation(data: &DataMatrix, p: &PermutationVector) -> Result<DataMatrix> {
    if p.shape() != data.shape() {
        return Err(Error::ShapeMismatch { expected: data.shape(), actual: p.shape() });
    }
    let x = data.values();
    let values = nalgebra::DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(p.column(j)[i], j)]);
    data.with_values(values)
}

pub fn sample_dataset(data: &DataMatrix, map: &TileMap, seed: u64) -> Result<DataMatrix> {
    if map.shape() != data.shape() {
        return Err(Error::ShapeMismatch { expected: data.shape(), actual: map.shape() });
    }
    apply_permutation(data, &sample_permutation(map, seed))
}

/// Draws `config.count` datasets in parallel; draw `k` uses [`SampleConfig::draw_seed`].
pub fn sample_datasets(data: &DataMatrix, map: &TileMap, config: &SampleConfig) -> Result<Vec<DataMatrix>> {
    (0..config.count).into_par_iter().map(|k| sample_dataset(data, map, config.draw_seed(k))).collect()
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use super::*;
    use crate::tiling::{enumerate_allowed, is_allowed, Tile, DEFAULT_ENUMERATION_CAP};

    fn random_data(n: usize, m: usize, seed: u64) -> DataMatrix {
        use rand::Rng;
        let mut r = rng::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        DataMatrix::from_rows(&rows).unwrap()
    }

    fn chi_square_uniform_p(map: &TileMap, tiles: &[Tile], draws_per_cell: usize, seed: u64) -> f64 {
        let (n, m) = map.shape();
        let allowed = enumerate_allowed(tiles, n, m, DEFAULT_ENUMERATION_CAP).unwrap();
        let k = allowed.len();
        let draws = draws_per_cell * k;
        let mut counts: HashMap<PermutationVector, usize> = HashMap::new();
        for d in 0..draws {
            let p = sample_permutation(map, rng::derive(seed, &[d as u64]));
            assert!(allowed.contains(&p));
            *counts.entry(p).or_default() += 1;
        }
        if k == 1 {
            return 1.0;
        }
        let expected = draws as f64 / k as f64;
        let stat: f64 = allowed
            .iter()
            .map(|p| {
                let c = *counts.get(p).unwrap_or(&0) as f64;
                (c - expected).powi(2) / expected
            })
            .sum();
        1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn full_tile_shares_one_permutation() {
        let map = TileMap::new(6, 4).unwrap().merge(&Tile::full(6, 4).unwrap()).unwrap();
        let p = sample_permutation(&map, 9);
        assert!(p.perms().iter().all(|c| c == p.column(0)));
        let data = random_data(6, 4, 1);
        let s = sample_dataset(&data, &map, 9).unwrap();
        let y = crate::covariance::center(&data);
        let ys = crate::covariance::center(&s);
        let c1 = y.values().transpose() * y.values();
        let c2 = ys.values().transpose() * ys.values();
        assert!((c1 - c2).abs().max() < 1e-12);
    }

    #[test]
    fn baseline_shuffles_columns_independently() {
        let data = random_data(30, 3, 2);
        let map = TileMap::new(30, 3).unwrap();
        let p = sample_permutation(&map, 5);
        assert_ne!(p.column(0), p.column(1));
        let s = sample_dataset(&data, &map, 5).unwrap();
        for j in 0..3 {
            let mut a = data.column(j);
            let mut b = s.column(j);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn tile_pairs_are_preserved() {
        let data = random_data(12, 4, 3);
        let rows: Vec<usize> = vec![1, 2, 5, 7, 8];
        let tile = Tile::new(rows.clone(), vec![1, 3]).unwrap();
        let map = TileMap::new(12, 4).unwrap().merge(&tile).unwrap();
        let s = sample_dataset(&data, &map, 11).unwrap();
        let pairs = |d: &DataMatrix| {
            let mut v: Vec<(u64, u64)> =
                rows.iter().map(|&i| (d.values()[(i, 1)].to_bits(), d.values()[(i, 3)].to_bits())).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(pairs(&data), pairs(&s));
    }

    #[test]
    fn overlap_example_is_sampled_uniformly() {
        let tiles = vec![Tile::new(vec![0, 1], vec![0, 1]).unwrap(), Tile::new(vec![1, 2], vec![1, 2]).unwrap()];
        let map = TileMap::new(3, 3).unwrap().merge_all(&tiles).unwrap();
        let allowed = enumerate_allowed(&tiles, 3, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        let draws = 100_000usize;
        let mut counts: HashMap<PermutationVector, usize> = HashMap::new();
        for d in 0..draws {
            *counts.entry(sample_permutation(&map, rng::derive(77, &[d as u64]))).or_default() += 1;
        }
        assert_eq!(counts.len(), allowed.len());
        let p = chi_square_uniform_p(&map, &tiles, 100_000 / allowed.len(), 77);
        assert!(p > 0.01, "chi-square p = {p}");
    }

    #[test]
    fn uniform_on_small_maps() {
        let cases: Vec<(usize, usize, Vec<Tile>)> = vec![
            (3, 2, vec![]),
            (4, 2, vec![Tile::new(vec![0, 1, 2], vec![0, 1]).unwrap()]),
            (4, 3, vec![Tile::new(vec![0, 1], vec![0, 1]).unwrap(), Tile::new(vec![1, 2, 3], vec![1, 2]).unwrap()]),
            (3, 3, vec![Tile::new(vec![0, 2], vec![0, 2]).unwrap()]),
        ];
        for (c, (n, m, tiles)) in cases.into_iter().enumerate() {
            let map = TileMap::new(n, m).unwrap().merge_all(&tiles).unwrap();
            let size = enumerate_allowed(&tiles, n, m, DEFAULT_ENUMERATION_CAP).unwrap().len();
            assert!(size <= 720);
            let p = chi_square_uniform_p(&map, &tiles, 100, 1000 + c as u64);
            assert!(p > 0.01, "case {c}: chi-square p = {p}");
        }
    }

    #[test]
    fn deterministic_and_checked() {
        let map = TileMap::new(10, 3).unwrap().merge(&Tile::new(vec![2, 3, 4], vec![0, 2]).unwrap()).unwrap();
        assert_eq!(sample_permutation(&map, 4), sample_permutation(&map, 4));
        let data = random_data(9, 3, 0);
        assert!(matches!(sample_dataset(&data, &map, 1), Err(Error::ShapeMismatch { .. })));
        let cfg = SampleConfig::new(3, 4).unwrap();
        let a = sample_datasets(&random_data(10, 3, 0), &map, &cfg).unwrap();
        let b = sample_datasets(&random_data(10, 3, 0), &map, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(SampleConfig::new(1, 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn samples_are_allowed_and_preserve_marginals(
            (n, m, tiles) in (1usize..15, 1usize..6).prop_flat_map(|(n, m)| {
                let tile = (proptest::collection::btree_set(0..n, 1..=n), proptest::collection::btree_set(0..m, 1..=m))
                    .prop_map(|(r, c)| Tile::new(r.into_iter().collect::<Vec<_>>(), c.into_iter().collect::<Vec<_>>()).unwrap());
                (Just(n), Just(m), proptest::collection::vec(tile, 0..4))
            }),
            seed in any::<u64>(),
        ) {
            let map = TileMap::new(n, m).unwrap().merge_all(&tiles).unwrap();
            let p = sample_permutation(&map, seed);
            prop_assert!(is_allowed(&p, &tiles, (n, m)).unwrap());
            prop_assert!(is_allowed(&p, &map.tiles(), (n, m)).unwrap());
            let data = random_data(n, m, seed);
            let s = sample_dataset(&data, &map, seed).unwrap();
            for j in 0..m {
                let mut a = data.column(j);
                let mut b = s.column(j);
                a.sort_by(f64::total_cmp);
                b.sort_by(f64::total_cmp);
                prop_assert_eq!(a, b);
            }
        }
    }
}
