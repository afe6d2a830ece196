//! Tiles, the non-overlapping [`TileMap`] representation and the tile merge.
//!
//! A tile `(R, C)` forces every column in `C` to apply the same permutation to
//! the rows in `R`, and that permutation must map `R` onto itself. A tiling is
//! a set of pairwise non-overlapping tiles; it is stored as an `n × m` grid of
//! tile IDs where every ID occupies a combinatorial rectangle `R × C`.
//!
//! The empty state is not "no tiles" but one full-height tile per column, so
//! every cell belongs to exactly one tile.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A combinatorial tile: a set of rows and a set of columns (0-based, sorted, unique).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TileRepr")]
pub struct Tile {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

#[derive(Deserialize)]
struct TileRepr {
    rows: Vec<usize>,
    cols: Vec<usize>,
}

impl TryFrom<TileRepr> for Tile {
    type Error = Error;

    fn try_from(repr: TileRepr) -> Result<Self> {
        Tile::new(repr.rows, repr.cols)
    }
}

fn sorted_unique(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

impl Tile {
    pub fn new(rows: impl Into<Vec<usize>>, cols: impl Into<Vec<usize>>) -> Result<Self> {
        let rows = sorted_unique(rows.into());
        let cols = sorted_unique(cols.into());
        if rows.is_empty() {
            return Err(Error::InvalidTile("tile has no rows".into()));
        }
        if cols.is_empty() {
            return Err(Error::InvalidTile("tile has no columns".into()));
        }
        Ok(Tile { rows, cols })
    }

    /// The tile covering every cell of an `n × m` matrix.
    pub fn full(n: usize, m: usize) -> Result<Self> {
        Tile::new((0..n).collect::<Vec<_>>(), (0..m).collect::<Vec<_>>())
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn check_bounds(&self, n: usize, m: usize) -> Result<()> {
        let max_row = *self.rows.last().expect("non-empty");
        let max_col = *self.cols.last().expect("non-empty");
        if max_row >= n || max_col >= m {
            return Err(Error::InvalidTile(format!(
                "tile reaches row {max_row}, column {max_col} on a {n}×{m} matrix"
            )));
        }
        Ok(())
    }
}

/// A tile as found in a [`TileMap`], together with its ID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileSpan {
    pub id: u32,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

/// Non-overlapping tiling stored as a row-major grid of tile IDs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<u32>>", into = "Vec<Vec<u32>>")]
pub struct TileMap {
    n: usize,
    m: usize,
    grid: Vec<u32>,
    next_id: u32,
}

impl TileMap {
    /// Baseline tiling: column `j` is a single full-height tile with ID `j`.
    pub fn new(n: usize, m: usize) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidShape(format!("tile map must be non-empty, got {n}×{m}")));
        }
        let m32 = u32::try_from(m).map_err(|_| Error::InvalidShape(format!("{m} columns")))?;
        let grid = (0..n).flat_map(|_| 0..m32).collect();
        Ok(TileMap { n, m, grid, next_id: m32 })
    }

    /// Rebuilds a map from a row-major grid, checking the rectangle invariant.
    pub fn from_grid(rows: Vec<Vec<u32>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 {
            return Err(Error::InvalidShape("empty tile grid".into()));
        }
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidShape("ragged tile grid".into()));
        }
        let grid: Vec<u32> = rows.into_iter().flatten().collect();
        let next_id = grid.iter().copied().max().unwrap_or(0) + 1;
        let map = TileMap { n, m, grid, next_id };
        map.check_invariants()?;
        Ok(map)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn id(&self, i: usize, j: usize) -> u32 {
        self.grid[i * self.m + j]
    }

    /// Row `i` of the grid.
    pub fn row(&self, i: usize) -> &[u32] {
        &self.grid[i * self.m..(i + 1) * self.m]
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.grid.chunks(self.m).map(<[u32]>::to_vec).collect()
    }

    pub fn num_tiles(&self) -> usize {
        self.grid.iter().collect::<HashSet<_>>().len()
    }

    /// Returns the merge of `tile` into this tiling; `self` is left untouched.
    pub fn merge(&self, tile: &Tile) -> Result<TileMap> {
        let mut out = self.clone();
        out.merge_in_place(tile)?;
        Ok(out)
    }

    /// Merges `tile` into this tiling in `O(n·m)`.
    ///
    /// Rows of the tile are grouped by the tuple of tile IDs they carry across
    /// the tile's columns. Each group becomes a fresh tile spanning the union
    /// of the columns of every tile in its signature.
    pub fn merge_in_place(&mut self, tile: &Tile) -> Result<()> {
        tile.check_bounds(self.n, self.m)?;
        let cols = tile.cols();

        struct Group {
            rows: Vec<usize>,
            ids: HashSet<u32>,
        }
        let mut index: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut groups: Vec<Group> = Vec::new();
        for &i in tile.rows() {
            let row = self.row(i);
            let key: Vec<u32> = cols.iter().map(|&c| row[c]).collect();
            match index.get(&key) {
                Some(&g) => groups[g].rows.push(i),
                None => {
                    index.insert(key.clone(), groups.len());
                    groups.push(Group { rows: vec![i], ids: key.into_iter().collect() });
                }
            }
        }

        for group in groups {
            // Every row of a group lies in the same tiles, so the affected
            // columns can be read off its first row.
            let first = self.row(group.rows[0]);
            let affected: Vec<usize> = (0..self.m).filter(|&c| group.ids.contains(&first[c])).collect();
            let id = self.next_id;
            self.next_id =
                self.next_id.checked_add(1).ok_or_else(|| Error::InvalidShape("tile ID space exhausted".into()))?;
            for &i in &group.rows {
                let base = i * self.m;
                for &c in &affected {
                    self.grid[base + c] = id;
                }
            }
        }
        Ok(())
    }

    /// Merges every tile in order.
    pub fn merge_all<'a>(&self, tiles: impl IntoIterator<Item = &'a Tile>) -> Result<TileMap> {
        let mut out = self.clone();
        for t in tiles {
            out.merge_in_place(t)?;
        }
        Ok(out)
    }

    /// Lists the tiles of the map in order of first appearance (row-major).
    pub fn spans(&self) -> Vec<TileSpan> {
        let mut index: HashMap<u32, usize> = HashMap::new();
        let mut spans: Vec<TileSpan> = Vec::new();
        for i in 0..self.n {
            for (j, &id) in self.row(i).iter().enumerate() {
                let k = *index.entry(id).or_insert_with(|| {
                    spans.push(TileSpan { id, rows: Vec::new(), cols: Vec::new() });
                    spans.len() - 1
                });
                let span = &mut spans[k];
                if span.rows.last() != Some(&i) {
                    span.rows.push(i);
                }
                if span.rows.len() == 1 {
                    span.cols.push(j);
                }
            }
        }
        spans
    }

    /// The tiles of the map as plain [`Tile`] values.
    pub fn tiles(&self) -> Vec<Tile> {
        self.spans().into_iter().map(|s| Tile { rows: s.rows, cols: s.cols }).collect()
    }

    /// Rows that some tile permutes together in both columns `j` and `j2`.
    pub fn rows_permuted_together(&self, j: usize, j2: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.id(i, j) == self.id(i, j2)).collect()
    }

    /// Verifies that every tile ID occupies a combinatorial rectangle.
    pub fn check_invariants(&self) -> Result<()> {
        if self.grid.len() != self.n * self.m {
            return Err(Error::InvalidShape("grid length does not match shape".into()));
        }
        let mut cells: HashMap<u32, (BTreeSet<usize>, BTreeSet<usize>, usize)> = HashMap::new();
        for i in 0..self.n {
            for (j, &id) in self.row(i).iter().enumerate() {
                let e = cells.entry(id).or_default();
                e.0.insert(i);
                e.1.insert(j);
                e.2 += 1;
            }
        }
        for (id, (rows, cols, count)) in cells {
            if rows.len() * cols.len() != count {
                return Err(Error::InvalidTile(format!("tile {id} is not a rectangle")));
            }
            if id >= self.next_id {
                return Err(Error::InvalidTile(format!("tile {id} is not below next_id {}", self.next_id)));
            }
        }
        Ok(())
    }
}

impl From<TileMap> for Vec<Vec<u32>> {
    fn from(map: TileMap) -> Self {
        map.to_rows()
    }
}

impl TryFrom<Vec<Vec<u32>>> for TileMap {
    type Error = Error;

    fn try_from(rows: Vec<Vec<u32>>) -> Result<Self> {
        TileMap::from_grid(rows)
    }
}

/// A hypothesis: focus rows `R`, columns `C`, and a partition of `C`.
///
/// The first tiling keeps every relation inside `(R, C)`; the second keeps only
/// the relations inside each partition block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HypothesisRepr")]
pub struct HypothesisTilings {
    rows: Vec<usize>,
    cols: Vec<usize>,
    partition: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct HypothesisRepr {
    rows: Vec<usize>,
    cols: Vec<usize>,
    partition: Vec<Vec<usize>>,
}

impl TryFrom<HypothesisRepr> for HypothesisTilings {
    type Error = Error;

    fn try_from(r: HypothesisRepr) -> Result<Self> {
        HypothesisTilings::new(r.rows, r.cols, r.partition)
    }
}

impl HypothesisTilings {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>, partition: Vec<Vec<usize>>) -> Result<Self> {
        let rows = sorted_unique(rows);
        let cols = sorted_unique(cols);
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::InvalidHypothesis("rows and columns must be non-empty".into()));
        }
        if partition.is_empty() {
            return Err(Error::InvalidHypothesis("partition needs at least one block".into()));
        }
        let partition: Vec<Vec<usize>> = partition.into_iter().map(sorted_unique).collect();
        let mut seen = BTreeSet::new();
        for block in &partition {
            if block.is_empty() {
                return Err(Error::InvalidHypothesis("empty partition block".into()));
            }
            for &c in block {
                if !seen.insert(c) {
                    return Err(Error::InvalidHypothesis(format!("column {c} appears in two blocks")));
                }
            }
        }
        if !seen.iter().copied().eq(cols.iter().copied()) {
            return Err(Error::InvalidHypothesis("partition blocks do not cover exactly the columns".into()));
        }
        Ok(HypothesisTilings { rows, cols, partition })
    }

    /// Builds a hypothesis whose columns are the union of the partition blocks.
    pub fn from_partition(rows: Vec<usize>, partition: Vec<Vec<usize>>) -> Result<Self> {
        let cols = partition.iter().flatten().copied().collect();
        HypothesisTilings::new(rows, cols, partition)
    }

    /// All rows, all columns, singleton partition: unguided exploration.
    pub fn unguided(n: usize, m: usize) -> Result<Self> {
        HypothesisTilings::new((0..n).collect(), (0..m).collect(), (0..m).map(|j| vec![j]).collect())
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn partition(&self) -> &[Vec<usize>] {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.partition.len()
    }

    pub fn check_bounds(&self, n: usize, m: usize) -> Result<()> {
        let r = *self.rows.last().expect("non-empty");
        let c = *self.cols.last().expect("non-empty");
        if r >= n || c >= m {
            return Err(Error::InvalidHypothesis(format!(
                "hypothesis reaches row {r}, column {c} on a {n}×{m} matrix"
            )));
        }
        Ok(())
    }

    /// `([(R, C)], [(R, C_1), …, (R, C_k)])`.
    pub fn tiles(&self) -> (Vec<Tile>, Vec<Tile>) {
        let h1 = vec![Tile { rows: self.rows.clone(), cols: self.cols.clone() }];
        let h2 = self.partition.iter().map(|block| Tile { rows: self.rows.clone(), cols: block.clone() }).collect();
        (h1, h2)
    }
}

/// One bijection on `[n]` per column; `perms[j][i]` is the source row `π_j(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PermutationVector {
    perms: Vec<Vec<usize>>,
}

impl PermutationVector {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self> {
        let n = perms.first().map_or(0, Vec::len);
        for (j, p) in perms.iter().enumerate() {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if p.len() != n || !sorted.iter().copied().eq(0..n) {
                return Err(Error::InvalidParameter(format!("column {j} is not a bijection on [{n}]")));
            }
        }
        Ok(PermutationVector { perms })
    }

    pub(crate) fn from_unchecked(perms: Vec<Vec<usize>>) -> Self {
        PermutationVector { perms }
    }

    pub fn identity(n: usize, m: usize) -> Self {
        PermutationVector { perms: vec![(0..n).collect(); m] }
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    pub fn column(&self, j: usize) -> &[usize] {
        &self.perms[j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.perms.first().map_or(0, Vec::len), self.perms.len())
    }
}

/// Checks the tile constraint for every tile: for `i ∈ R` and `j, j' ∈ C`,
/// `π_j(i) ∈ R` and `π_j(i) = π_j'(i)`.
pub fn is_allowed(p: &PermutationVector, tiles: &[Tile], shape: (usize, usize)) -> Result<bool> {
    if p.shape() != shape {
        return Err(Error::ShapeMismatch { expected: shape, actual: p.shape() });
    }
    for t in tiles {
        t.check_bounds(shape.0, shape.1)?;
    }
    Ok(tiles.iter().all(|t| tile_allows(t, p.perms())))
}

fn tile_allows(t: &Tile, perms: &[Vec<usize>]) -> bool {
    let first = t.cols[0];
    t.rows.iter().all(|&i| {
        let target = perms[first][i];
        t.rows.binary_search(&target).is_ok() && t.cols.iter().all(|&j| perms[j][i] == target)
    })
}

/// Default cap on `(n!)^m` for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                prefix.push(k);
                rec(prefix, used, out);
                prefix.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Visits every permutation vector allowed by `tiles` on an `n × m` matrix.
///
/// Candidates are built column by column; a partial vector is extended only
/// while it satisfies the constraints restricted to the columns chosen so far.
pub fn for_each_allowed<F>(tiles: &[Tile], n: usize, m: usize, cap: u64, mut visit: F) -> Result<()>
where
    F: FnMut(&[Vec<usize>]),
{
    if n == 0 || m == 0 {
        return Err(Error::InvalidShape(format!("{n}×{m}")));
    }
    let count = (1..=n).map(|k| k as f64).product::<f64>().powi(m as i32);
    if count > cap as f64 {
        return Err(Error::TooLarge { count, cap });
    }
    for t in tiles {
        t.check_bounds(n, m)?;
    }
    let candidates = all_permutations(n);

    fn rec<F: FnMut(&[Vec<usize>])>(
        j: usize,
        m: usize,
        tiles: &[Tile],
        candidates: &[Vec<usize>],
        chosen: &mut Vec<Vec<usize>>,
        visit: &mut F,
    ) {
        if j == m {
            visit(chosen);
            return;
        }
        for cand in candidates {
            let ok = tiles.iter().filter(|t| t.cols.binary_search(&j).is_ok()).all(|t| {
                let earlier = t.cols.iter().copied().find(|&c| c < j);
                t.rows
                    .iter()
                    .all(|&i| t.rows.binary_search(&cand[i]).is_ok() && earlier.is_none_or(|c| chosen[c][i] == cand[i]))
            });
            if ok {
                chosen.push(cand.clone());
                rec(j + 1, m, tiles, candidates, chosen, visit);
                chosen.pop();
            }
        }
    }
    let mut chosen = Vec::with_capacity(m);
    rec(0, m, tiles, &candidates, &mut chosen, &mut visit);
    Ok(())
}

/// The exact set of permutation vectors allowed by `tiles`.
pub fn enumerate_allowed(tiles: &[Tile], n: usize, m: usize, cap: u64) -> Result<BTreeSet<PermutationVector>> {
    let mut out = BTreeSet::new();
    for_each_allowed(tiles, n, m, cap, |p| {
        out.insert(PermutationVector::from_unchecked(p.to_vec()));
    })?;
    Ok(out)
}
