//! Sampled permutation vectors against an independent tile predicate.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tilexplore_core::rng;
use tilexplore_core::sampler::{sample_dataset, sample_permutation};
use tilexplore_core::{DataMatrix, PermutationVector, Tile, TileMap};

fn subset(r: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let k = r.random_range(1..=n);
    let mut v = sample_indices(r, n, k).into_vec();
    v.sort_unstable();
    v
}

fn respects(p: &PermutationVector, rows: &[usize], cols: &[usize]) -> bool {
    rows.iter().all(|&i| {
        let first = p.column(cols[0])[i];
        rows.binary_search(&first).is_ok() && cols.iter().all(|&j| p.column(j)[i] == first)
    })
}

fn is_permutation(col: &[usize]) -> bool {
    let mut seen = vec![false; col.len()];
    col.iter().all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

#[test]
fn ten_thousand_samples_respect_their_tiles() {
    let mut r = rng::rng(77);
    for trial in 0..10_000u64 {
        let (n, m) = (r.random_range(1..=30), r.random_range(1..=6));
        let raw: Vec<(Vec<usize>, Vec<usize>)> =
            (0..r.random_range(0..=5)).map(|_| (subset(&mut r, n), subset(&mut r, m))).collect();
        let tiles: Vec<Tile> = raw.iter().map(|(a, b)| Tile::new(a.clone(), b.clone()).unwrap()).collect();
        let map = TileMap::new(n, m).unwrap().merge_all(&tiles).unwrap();
        let p = sample_permutation(&map, rng::derive(5, &[trial]));
        assert_eq!(p.shape(), (n, m));
        for j in 0..m {
            assert!(is_permutation(p.column(j)), "trial {trial}: column {j} is not a permutation");
        }
        for (rows, cols) in &raw {
            assert!(respects(&p, rows, cols), "trial {trial}: tile {rows:?} x {cols:?} violated");
        }
    }
}

#[test]
fn sampled_columns_keep_their_values() {
    let mut r = rng::rng(78);
    let (n, m) = (40, 5);
    let values = nalgebra::DMatrix::from_fn(n, m, |_, _| rng::normal(&mut r));
    let data = DataMatrix::new(values, (0..m).map(|j| format!("c{j}")).collect()).unwrap();
    let map =
        TileMap::new(n, m).unwrap().merge(&Tile::new((0..20).collect::<Vec<_>>(), vec![1, 2, 3]).unwrap()).unwrap();
    let s = sample_dataset(&data, &map, 9).unwrap();
    for j in 0..m {
        let mut a: Vec<f64> = data.column(j).to_vec();
        let mut b: Vec<f64> = s.column(j).to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        assert_eq!(a, b);
    }
    // Rows inside the tile stay aligned across its columns.
    for i in 0..n {
        let src = (0..n).find(|&k| data.values()[(k, 1)] == s.values()[(i, 1)]).unwrap();
        if src < 20 {
            assert_eq!(s.values()[(i, 2)], data.values()[(src, 2)]);
            assert_eq!(s.values()[(i, 3)], data.values()[(src, 3)]);
        }
    }
    assert_eq!(s, sample_dataset(&data, &map, 9).unwrap());
}
