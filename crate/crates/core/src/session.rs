//! The exploration loop: data, the user's accumulated tiles, the current
//! hypothesis pair, views, and a replayable event history.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{center, hypothesis_covariances, hypothesis_maps, CenteredData, CovariancePair};
use crate::error::{Error, Result};
use crate::ingestion::DataMatrix;
use crate::projection::{gain, most_informative_directions, project, ProjectionResult, DEFAULT_FLOOR};
use crate::rng;
use crate::sampler::sample_dataset;
use crate::selection::{attribute_ratios, selection_to_tile, AttributeReport, PointSelection};
use crate::tiling::{HypothesisTilings, Tile, TileMap};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of loadings reported per axis.
pub const AXIS_LABELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SetHypothesis {
        hypothesis: HypothesisTilings,
    },
    AddTile {
        tile: Tile,
        source: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    id: String,
    data: Arc<DataMatrix>,
    centered: Arc<CenteredData>,
    user_map: TileMap,
    hypothesis: Option<HypothesisTilings>,
    history: Vec<Event>,
    seed: u64,
    floor: f64,
}

/// A block of coordinates stored row-major with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coords {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Coords {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let values = m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect();
        Coords { rows: m.nrows(), cols: m.ncols(), values }
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.cols + k]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Loading {
    pub column: usize,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewState {
    pub projection: ProjectionResult,
    pub coords_data: Coords,
    pub coords_sample_h1: Vec<Coords>,
    pub coords_sample_h2: Vec<Coords>,
    pub focus_rows: Vec<usize>,
    pub outside_focus: Vec<bool>,
    pub gain: f64,
    pub degenerate: bool,
    /// Largest-magnitude loadings of each direction.
    pub axis_labels: Vec<Vec<Loading>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideSummary {
    pub name: String,
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub m: usize,
    pub columns: Vec<String>,
    pub side_columns: Vec<SideSummary>,
}

impl DatasetSummary {
    pub fn of(data: &DataMatrix) -> Self {
        DatasetSummary {
            n: data.n_rows(),
            m: data.n_cols(),
            columns: data.col_names().to_vec(),
            side_columns: data
                .side_cols()
                .iter()
                .map(|c| SideSummary { name: c.name.clone(), levels: c.levels() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub rows: usize,
    pub cols: Vec<usize>,
    pub k: usize,
}

/// Parallel-coordinates payload for a set of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpPayload {
    pub columns: Vec<String>,
    pub rows: Vec<usize>,
    /// Scaled values of the listed rows, row-major `rows.len() × columns.len()`.
    pub values: Vec<f64>,
    pub report: AttributeReport,
}

/// Persisted form of a session: a data reference, the seed and the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub schema_version: u32,
    pub id: String,
    pub seed: u64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_ref: Option<String>,
    /// Kept as raw JSON so that a bad event can be reported by position.
    pub history: Vec<serde_json::Value>,
}

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

impl Session {
    pub fn new(data: DataMatrix, seed: u64) -> Self {
        Session::from_shared(Arc::new(data), seed)
    }

    pub fn from_shared(data: Arc<DataMatrix>, seed: u64) -> Self {
        let (n, m) = data.shape();
        let centered = Arc::new(center(&data));
        Session {
            id: format!("{:016x}", rng::derive(seed, &[n as u64, m as u64])),
            data,
            centered,
            user_map: TileMap::new(n, m).expect("data is non-empty"),
            hypothesis: None,
            history: Vec::new(),
            seed,
            floor: DEFAULT_FLOOR,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn data(&self) -> &DataMatrix {
        &self.data
    }

    pub fn shared_data(&self) -> Arc<DataMatrix> {
        Arc::clone(&self.data)
    }

    pub fn centered(&self) -> &CenteredData {
        &self.centered
    }

    pub fn user_map(&self) -> &TileMap {
        &self.user_map
    }

    pub fn hypothesis(&self) -> Option<&HypothesisTilings> {
        self.hypothesis.as_ref()
    }

    pub fn history(&self) -> &[Event] {
        &self.history
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn tile_count(&self) -> usize {
        self.history.iter().filter(|e| matches!(e, Event::AddTile { .. })).count()
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary::of(&self.data)
    }

    pub fn hypothesis_summary(&self) -> Option<HypothesisSummary> {
        self.hypothesis.as_ref().map(|h| HypothesisSummary { rows: h.rows().len(), cols: h.cols().to_vec(), k: h.k() })
    }

    pub fn set_hypothesis(&mut self, h: HypothesisTilings) -> Result<()> {
        h.check_bounds(self.data.n_rows(), self.data.n_cols())?;
        self.hypothesis = Some(h.clone());
        self.history.push(Event::SetHypothesis { hypothesis: h });
        Ok(())
    }

    /// Adds a tile as it is; `source` is a free-form label kept in the history.
    pub fn add_tile(&mut self, tile: Tile, source: impl Into<String>) -> Result<()> {
        self.push_tile(tile, source.into(), None)
    }

    pub fn add_tile_from_selection(&mut self, sel: &PointSelection, tau: f64) -> Result<(Tile, AttributeReport)> {
        let (tile, report) = selection_to_tile(&self.data, sel, tau)?;
        self.push_tile(tile.clone(), sel.source.clone(), Some(tau))?;
        Ok((tile, report))
    }

    fn push_tile(&mut self, tile: Tile, source: String, tau: Option<f64>) -> Result<()> {
        self.user_map.merge_in_place(&tile)?;
        self.history.push(Event::AddTile { tile, source, tau });
        Ok(())
    }

    pub fn covariances(&self) -> Result<CovariancePair> {
        let h = self.hypothesis.as_ref().ok_or(Error::NoHypothesis)?;
        hypothesis_covariances(&self.centered, &self.user_map, h)
    }

    /// Seed of the `k`-th sample overlay on hypothesis side `side` (1 or 2).
    pub fn sample_seed(&self, side: u64, k: usize) -> u64 {
        rng::derive(self.seed, &[self.history.len() as u64, side, k as u64])
    }

    /// The most informative view of the current hypothesis, with `samples`
    /// sampled datasets from each side projected alongside the data.
    pub fn compute_view(&self, samples: usize) -> Result<ViewState> {
        let h = self.hypothesis.as_ref().ok_or(Error::NoHypothesis)?;
        let (map1, map2) = hypothesis_maps(&self.user_map, h)?;
        let pair = hypothesis_covariances(&self.centered, &self.user_map, h)?;
        let projection = most_informative_directions(&pair, self.data.n_cols().min(2), self.floor)?;
        let coords_data = Coords::from_matrix(&project(&self.data, &projection)?);
        let overlay = |map: &TileMap, side: u64| -> Result<Vec<Coords>> {
            (0..samples)
                .into_par_iter()
                .map(|k| {
                    let s = sample_dataset(&self.data, map, self.sample_seed(side, k))?;
                    Ok(Coords::from_matrix(&project(&s, &projection)?))
                })
                .collect()
        };
        let coords_sample_h1 = overlay(&map1, 1)?;
        let coords_sample_h2 = overlay(&map2, 2)?;
        let mut outside_focus = vec![true; self.data.n_rows()];
        for &i in h.rows() {
            outside_focus[i] = false;
        }
        let axis_labels = (0..projection.num_dirs())
            .map(|k| {
                projection
                    .top_loadings(k, AXIS_LABELS)
                    .into_iter()
                    .map(|(column, value)| Loading { column, name: self.data.col_names()[column].clone(), value })
                    .collect()
            })
            .collect();
        Ok(ViewState {
            gain: projection.top_gain(),
            degenerate: projection.degenerate,
            projection,
            coords_data,
            coords_sample_h1,
            coords_sample_h2,
            focus_rows: h.rows().to_vec(),
            outside_focus,
            axis_labels,
        })
    }

    pub fn pcp(&self, sel: &PointSelection, tau: f64) -> Result<PcpPayload> {
        let report = attribute_ratios(&self.data, sel, tau)?;
        let x = self.data.values();
        let values = sel.rows().iter().flat_map(|&i| x.row(i).iter().copied().collect::<Vec<_>>()).collect();
        Ok(PcpPayload { columns: self.data.col_names().to_vec(), rows: sel.rows().to_vec(), values, report })
    }

    pub fn gain_matrix(&self, pairs: &[PairSpec], external: &[NamedDirection]) -> Result<GainTable> {
        gain_matrix(&self.centered, &self.user_map, pairs, external, self.floor)
    }

    pub fn to_document(&self, data_ref: Option<String>) -> SessionDocument {
        SessionDocument {
            schema_version: SCHEMA_VERSION,
            id: self.id.clone(),
            seed: self.seed,
            floor: self.floor,
            data_ref,
            history: self.history.iter().map(|e| serde_json::to_value(e).expect("events serialise")).collect(),
        }
    }

    /// Applies one event as the live operations would.
    pub fn apply(&mut self, event: Event) -> Result<()> {
        match event {
            Event::SetHypothesis { hypothesis } => self.set_hypothesis(hypothesis),
            Event::AddTile { tile, source, tau } => self.push_tile(tile, source, tau),
        }
    }

    /// The session as it was after the first `len` events.
    pub fn rewind(&self, len: usize) -> Result<Session> {
        if len > self.history.len() {
            return Err(Error::InvalidParameter(format!("history has {} events, not {len}", self.history.len())));
        }
        let mut s =
            Session::from_shared(Arc::clone(&self.data), self.seed).with_id(self.id.clone()).with_floor(self.floor);
        for e in &self.history[..len] {
            s.apply(e.clone())?;
        }
        Ok(s)
    }
}

/// Rebuilds a session from its persisted document.
pub fn replay(data: Arc<DataMatrix>, doc: &SessionDocument) -> Result<Session> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidParameter(format!("unsupported schema version {}", doc.schema_version)));
    }
    let mut s = Session::from_shared(data, doc.seed).with_id(doc.id.clone()).with_floor(doc.floor);
    for (offset, raw) in doc.history.iter().enumerate() {
        let event: Event =
            serde_json::from_value(raw.clone()).map_err(|e| Error::MalformedEvent { offset, reason: e.to_string() })?;
        s.apply(event).map_err(|e| Error::MalformedEvent { offset, reason: e.to_string() })?;
    }
    Ok(s)
}

/// A hypothesis pair for the gain table. Without `user_tiles` the session's
/// own tiles are used; with them, the baseline plus exactly those tiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_tiles: Option<Vec<Tile>>,
    pub hypothesis: HypothesisTilings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedDirection {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub direction: String,
    /// Index of the pair this direction is optimal for, if any.
    pub optimal_for: Option<usize>,
    pub values: Vec<f64>,
    /// `None` where the gain is undefined.
    pub gains: Vec<Option<f64>>,
    pub degenerate: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    pub pairs: Vec<String>,
    pub rows: Vec<GainRow>,
    /// Per pair: its own optimal direction scores at least as high as every
    /// other optimal direction under that pair.
    pub diagonal_dominant: Vec<bool>,
}

impl GainTable {
    pub fn get(&self, direction: &str, pair: &str) -> Option<f64> {
        let c = self.pairs.iter().position(|p| p == pair)?;
        self.rows.iter().find(|r| r.direction == direction)?.gains[c]
    }

    pub fn all_dominant(&self) -> bool {
        self.diagonal_dominant.iter().all(|&d| d)
    }
}

/// Relative slack allowed when comparing gains for dominance.
const DOMINANCE_TOLERANCE: f64 = 1e-9;

pub fn gain_matrix(
    y: &CenteredData,
    user_map: &TileMap,
    pairs: &[PairSpec],
    external: &[NamedDirection],
    floor: f64,
) -> Result<GainTable> {
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("gain table needs at least one pair".into()));
    }
    let (n, m) = y.shape();
    let covs: Vec<CovariancePair> = pairs
        .par_iter()
        .map(|p| {
            let map = match &p.user_tiles {
                Some(tiles) => TileMap::new(n, m)?.merge_all(tiles)?,
                None => user_map.clone(),
            };
            hypothesis_covariances(y, &map, &p.hypothesis)
        })
        .collect::<Result<_>>()?;
    let mut directions: Vec<(String, Option<usize>, Vec<f64>)> = Vec::new();
    for (c, (p, cov)) in pairs.iter().zip(&covs).enumerate() {
        let r = most_informative_directions(cov, 1, floor)?;
        directions.push((p.name.clone(), Some(c), r.directions[0].clone()));
    }
    for d in external {
        if d.values.len() != m {
            return Err(Error::ShapeMismatch { expected: (m, 1), actual: (d.values.len(), 1) });
        }
        directions.push((d.name.clone(), None, d.values.clone()));
    }
    let rows: Vec<GainRow> = directions
        .into_iter()
        .map(|(direction, optimal_for, values)| {
            let cells: Vec<Option<f64>> = covs.iter().map(|cov| gain(&values, cov).ok()).collect();
            GainRow {
                direction,
                optimal_for,
                degenerate: cells.iter().map(Option::is_none).collect(),
                gains: cells,
                values,
            }
        })
        .collect();
    let diagonal_dominant = (0..pairs.len())
        .map(|c| {
            let Some(own) = rows[c].gains[c] else { return false };
            rows.iter()
                .filter(|r| r.optimal_for.is_some())
                .all(|r| r.gains[c].is_none_or(|g| g <= own + DOMINANCE_TOLERANCE * own.abs().max(1.0)))
        })
        .collect();
    Ok(GainTable { pairs: pairs.iter().map(|p| p.name.clone()).collect(), rows, diagonal_dominant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingestion::{make_gaussian, GaussianSpec};
    use crate::projection::first_principal_component;
    use crate::selection::DEFAULT_TAU;
    use crate::tiling::{enumerate_allowed, DEFAULT_ENUMERATION_CAP};

    fn gaussian(n: usize, m: usize, seed: u64) -> DataMatrix {
        make_gaussian(&GaussianSpec { n, m, factor_levels: vec![3, 2], latent: 2, effect: 1.5, seed }).unwrap()
    }

    #[test]
    fn fresh_session() {
        let s = Session::new(gaussian(40, 5, 1), 7);
        assert_eq!(s.user_map(), &TileMap::new(40, 5).unwrap());
        assert!(s.hypothesis().is_none() && s.history().is_empty());
        assert!(matches!(s.compute_view(1), Err(Error::NoHypothesis)));
        assert_eq!(Session::new(gaussian(40, 5, 1), 7), s);
        let tiny = Session::new(DataMatrix::from_rows(&[vec![1.0]]).unwrap(), 0);
        assert_eq!(tiny.user_map().shape(), (1, 1));
    }

    #[test]
    fn unguided_view_is_first_principal_component() {
        let data = gaussian(150, 6, 2);
        let mut s = Session::new(data.clone(), 3);
        s.set_hypothesis(HypothesisTilings::unguided(150, 6).unwrap()).unwrap();
        let v = s.compute_view(2).unwrap();
        let pc = first_principal_component(&data);
        let cos: f64 = v.projection.directions[0].iter().zip(&pc).map(|(a, b)| a * b).sum();
        assert!(cos.abs() > 1.0 - 1e-8);
        assert_eq!(v.coords_data.rows, 150);
        assert_eq!(v.coords_data.cols, 2);
        assert_eq!(v.coords_sample_h1.len(), 2);
        assert!(v.outside_focus.iter().all(|f| !f));
        assert_eq!(v.axis_labels[0].len(), 5);
        assert_eq!(
            v.axis_labels[0][0].value.abs(),
            v.projection.directions[0].iter().map(|x| x.abs()).fold(0.0, f64::max)
        );
    }

    #[test]
    fn identical_sides_are_degenerate() {
        let mut s = Session::new(gaussian(30, 4, 4), 1);
        s.set_hypothesis(HypothesisTilings::from_partition((0..30).collect(), vec![vec![0, 1, 2, 3]]).unwrap())
            .unwrap();
        let v = s.compute_view(0).unwrap();
        assert!((v.gain - 1.0).abs() < 1e-9);
        assert!(v.degenerate);
        assert!(v.coords_sample_h1.is_empty());
    }

    #[test]
    fn focus_flags() {
        let mut s = Session::new(gaussian(20, 3, 5), 1);
        s.set_hypothesis(HypothesisTilings::from_partition(vec![2, 3, 9], vec![vec![0], vec![1, 2]]).unwrap()).unwrap();
        let v = s.compute_view(1).unwrap();
        assert_eq!(v.outside_focus.iter().filter(|f| !**f).count(), 3);
        assert!(!v.outside_focus[9] && v.outside_focus[0]);
    }

    #[test]
    fn seeds_move_overlays_only() {
        let data = gaussian(60, 4, 6);
        let view = |seed| {
            let mut s = Session::new(data.clone(), seed);
            s.set_hypothesis(HypothesisTilings::unguided(60, 4).unwrap()).unwrap();
            s.compute_view(1).unwrap()
        };
        let (a, b) = (view(1), view(2));
        assert_eq!(a.projection, b.projection);
        assert_eq!(a.coords_data, b.coords_data);
        assert_ne!(a.coords_sample_h2, b.coords_sample_h2);
        assert_eq!(a, view(1));
    }

    #[test]
    fn tiles_from_selections() {
        let data = gaussian(50, 5, 8);
        let mut s = Session::new(data.clone(), 1);
        let rows = data.side_col("F1").unwrap().rows_equal_to("L1");
        let sel = PointSelection::new(rows.clone(), "F1=L1").unwrap();
        let (tile, report) = s.add_tile_from_selection(&sel, 1.1).unwrap();
        assert_eq!(tile.rows(), rows.as_slice());
        assert_eq!(report.chosen(), tile.cols());
        assert_eq!(s.tile_count(), 1);
        assert!(matches!(s.add_tile_from_selection(&sel, 0.0), Err(Error::EmptyTile { .. })));
        assert_eq!(s.history().len(), 1);
    }

    #[test]
    fn repeated_tile_keeps_allowed_set() {
        let data = gaussian(4, 3, 9);
        let mut s = Session::new(data, 1);
        let tile = Tile::new(vec![0, 1, 2], vec![0, 2]).unwrap();
        s.add_tile(tile.clone(), "t").unwrap();
        let once = s.user_map().clone();
        s.add_tile(tile, "t").unwrap();
        let a = enumerate_allowed(&once.tiles(), 4, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        let b = enumerate_allowed(&s.user_map().tiles(), 4, 3, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn full_selection_drives_gain_to_one() {
        let data = gaussian(40, 4, 10);
        let mut s = Session::new(data, 2);
        s.add_tile_from_selection(&PointSelection::new((0..40).collect::<Vec<_>>(), "all").unwrap(), 1.1).unwrap();
        s.set_hypothesis(HypothesisTilings::unguided(40, 4).unwrap()).unwrap();
        let v = s.compute_view(0).unwrap();
        assert!((v.gain - 1.0).abs() < 1e-9);
    }

    #[test]
    fn replay_is_exact() {
        let data = Arc::new(gaussian(80, 6, 11));
        let mut s = Session::from_shared(Arc::clone(&data), 5);
        s.set_hypothesis(HypothesisTilings::unguided(80, 6).unwrap()).unwrap();
        let rows = data.side_col("F2").unwrap().rows_equal_to("L2");
        s.add_tile_from_selection(&PointSelection::new(rows, "cluster").unwrap(), 0.9).unwrap();
        s.set_hypothesis(
            HypothesisTilings::from_partition((0..40).collect(), vec![vec![0, 1], vec![2, 3, 4]]).unwrap(),
        )
        .unwrap();
        let doc = s.to_document(Some("gaussian".into()));
        let json = serde_json::to_string(&doc).unwrap();
        let back = replay(Arc::clone(&data), &serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.compute_view(1).unwrap(), s.compute_view(1).unwrap());
        assert_eq!(
            replay(Arc::clone(&data), &Session::from_shared(Arc::clone(&data), 5).to_document(None)).unwrap(),
            s.rewind(0).unwrap()
        );
        assert_eq!(s.rewind(1).unwrap().hypothesis(), Some(&HypothesisTilings::unguided(80, 6).unwrap()));
    }

    #[test]
    fn replay_names_bad_offsets() {
        let data = Arc::new(gaussian(10, 3, 12));
        let mut doc = Session::from_shared(Arc::clone(&data), 1).to_document(None);
        doc.history
            .push(serde_json::json!({"event": "add_tile", "tile": {"rows": [0, 1], "cols": [0]}, "source": "x"}));
        doc.history.push(serde_json::json!({"event": "teleport"}));
        assert!(matches!(replay(Arc::clone(&data), &doc), Err(Error::MalformedEvent { offset: 1, .. })));
        doc.history[1] =
            serde_json::json!({"event": "add_tile", "tile": {"rows": [0, 99], "cols": [0]}, "source": "x"});
        assert!(matches!(replay(Arc::clone(&data), &doc), Err(Error::MalformedEvent { offset: 1, .. })));
        doc.history.truncate(1);
        assert_eq!(replay(data, &doc).unwrap().tile_count(), 1);
    }

    #[test]
    fn gain_table_properties() {
        let data = gaussian(120, 6, 13);
        let s = Session::new(data.clone(), 1);
        let rows = data.side_col("F1").unwrap().rows_equal_to("L2");
        let tile = Tile::new(rows.clone(), vec![0, 1, 2]).unwrap();
        let pairs = vec![
            PairSpec { name: "E0".into(), user_tiles: None, hypothesis: HypothesisTilings::unguided(120, 6).unwrap() },
            PairSpec {
                name: "E1".into(),
                user_tiles: Some(vec![tile]),
                hypothesis: HypothesisTilings::unguided(120, 6).unwrap(),
            },
            PairSpec {
                name: "F0".into(),
                user_tiles: None,
                hypothesis: HypothesisTilings::from_partition(rows, vec![vec![0, 1], vec![2, 3], vec![4, 5]]).unwrap(),
            },
        ];
        let pca = NamedDirection { name: "pca".into(), values: first_principal_component(&data) };
        let t = s.gain_matrix(&pairs, &[pca]).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.all_dominant());
        let (a, b) = (t.get("E0", "E0").unwrap(), t.get("pca", "E0").unwrap());
        assert!((a - b).abs() <= 1e-8 * a);
        for c in 0..3 {
            let own = t.rows[c].gains[c].unwrap();
            assert!(t.rows.iter().all(|r| r.gains[c].unwrap() <= own * (1.0 + 1e-9)));
        }
        let twin = vec![pairs[0].clone(), PairSpec { name: "E0b".into(), ..pairs[0].clone() }];
        let t = s.gain_matrix(&twin, &[]).unwrap();
        assert!(t.rows.iter().all(|r| r.gains[0] == r.gains[1]));
        assert!(s.gain_matrix(&[], &[]).is_err());
    }

    #[test]
    fn pcp_ratios() {
        let s = Session::new(gaussian(30, 4, 14), 1);
        let p = s.pcp(&PointSelection::new((0..30).collect::<Vec<_>>(), "all").unwrap(), DEFAULT_TAU).unwrap();
        assert_eq!(p.values.len(), 30 * 4);
        assert!(p.report.columns.iter().all(|c| (c.ratio - 1.0).abs() < 1e-12));
    }
}
