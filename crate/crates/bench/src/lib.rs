//! Shared fixtures for the criterion benches.

use tilexplore_core::ingestion::{make_gaussian, GaussianSpec};
use tilexplore_core::rng;
use tilexplore_core::{DataMatrix, HypothesisTilings, Tile, TileMap};

/// Gaussian data with three factor columns at the given size.
pub fn data(n: usize, m: usize) -> DataMatrix {
    make_gaussian(&GaussianSpec { n, m, factor_levels: vec![2, 4, 8], latent: 3, effect: 1.0, seed: 11 }).unwrap()
}

/// A few overlapping tiles over row blocks and column ranges.
pub fn tiles(n: usize, m: usize) -> Vec<Tile> {
    let seed = rng::derive(11, &[n as u64, m as u64]);
    (0..4u64)
        .map(|k| {
            let start = (rng::derive(seed, &[k]) % (n as u64 / 2)) as usize;
            let rows: Vec<usize> = (start..start + n / 3).collect();
            let c0 = (k as usize * m / 5).min(m - 1);
            let cols: Vec<usize> = (c0..(c0 + m / 2).max(c0 + 1).min(m)).collect();
            Tile::new(rows, cols).unwrap()
        })
        .collect()
}

pub fn user_map(n: usize, m: usize) -> TileMap {
    TileMap::new(n, m).unwrap().merge_all(&tiles(n, m)).unwrap()
}

/// Focus on the first half of the rows with columns in groups of four.
pub fn hypothesis(n: usize, m: usize) -> HypothesisTilings {
    let groups = (0..m).collect::<Vec<_>>().chunks(4).map(|c| c.to_vec()).collect();
    HypothesisTilings::from_partition((0..n / 2).collect(), groups).unwrap()
}
