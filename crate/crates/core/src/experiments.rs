//! Experiment drivers: robustness to perturbation, runtime scaling, gain
//! tables for a set of hypothesis pairs, and scripted exploration sessions.
//!
//! Every driver is deterministic for a fixed seed apart from wall-clock
//! columns, whose names start with `t_`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{center, hypothesis_covariances, tiling_covariance, CovariancePair};
use crate::error::{Error, Result};
use crate::ingestion::{
    format_float, kept_rows, load_csv, make_gaussian, perturb, DataMatrix, GaussianSpec, LoadOptions, Manifest,
    SideColumn,
};
use crate::plot;
use crate::projection::{first_principal_component, gain, most_informative_directions, DEFAULT_FLOOR};
use crate::request::{HypothesisSpec, RowSpec};
use crate::rng;
use crate::selection::{crosstab, selection_to_tile, PointSelection};
use crate::session::{gain_matrix, GainTable, NamedDirection, PairSpec, Session, ViewState};
use crate::tiling::{HypothesisTilings, Tile, TileMap};

const MAX_TILE_ATTEMPTS: u64 = 1000;

fn default_floor() -> f64 {
    DEFAULT_FLOOR
}

/// Draws a tile whose rows share one level of a random factor and whose
/// columns are a uniform random subset of size `2..=max_cols`.
pub fn random_factor_tile(factors: &[&SideColumn], m: usize, max_cols: usize, r: &mut ChaCha8Rng) -> Result<Tile> {
    if factors.is_empty() {
        return Err(Error::InvalidParameter("random tiles need at least one factor column".into()));
    }
    let factor = factors[r.random_range(0..factors.len())];
    let levels = factor.levels();
    let level = &levels[r.random_range(0..levels.len())];
    let hi = max_cols.min(m).max(1);
    let lo = 2.min(hi);
    let k = r.random_range(lo..=hi);
    let mut cols = sample_indices(r, m, k).into_vec();
    cols.sort_unstable();
    Tile::new(factor.rows_equal_to(level), cols)
}

fn factor_columns<'a>(data: &'a DataMatrix, names: Option<&[String]>) -> Result<Vec<&'a SideColumn>> {
    let cols: Vec<&SideColumn> = match names {
        Some(names) => names
            .iter()
            .map(|n| data.side_col(n).ok_or_else(|| Error::UnknownColumn(n.clone())))
            .collect::<Result<_>>()?,
        None => data.side_cols().iter().collect(),
    };
    if cols.is_empty() {
        return Err(Error::InvalidParameter("the data has no factor column to draw tile rows from".into()));
    }
    Ok(cols)
}

/// `tile` restricted to `kept` (sorted original indices) and re-indexed; `None` if no row survives.
fn restrict(tile: &Tile, kept: &[usize]) -> Option<Tile> {
    let rows: Vec<usize> = tile.rows().iter().filter_map(|i| kept.binary_search(i).ok()).collect();
    Tile::new(rows, tile.cols().to_vec()).ok()
}

struct TileSet {
    background: Vec<Tile>,
    hypothesis: Tile,
}

impl TileSet {
    fn hypothesis(&self) -> Result<HypothesisTilings> {
        let h = &self.hypothesis;
        HypothesisTilings::new(h.rows().to_vec(), h.cols().to_vec(), h.cols().iter().map(|&c| vec![c]).collect())
    }

    fn restrict(&self, kept: &[usize]) -> Option<TileSet> {
        Some(TileSet {
            background: self.background.iter().map(|t| restrict(t, kept)).collect::<Option<_>>()?,
            hypothesis: restrict(&self.hypothesis, kept)?,
        })
    }
}

fn draw_tiles(factors: &[&SideColumn], m: usize, max_cols: usize, count: usize, r: &mut ChaCha8Rng) -> Result<TileSet> {
    let background = (0..count).map(|_| random_factor_tile(factors, m, max_cols, r)).collect::<Result<_>>()?;
    Ok(TileSet { background, hypothesis: random_factor_tile(factors, m, max_cols, r)? })
}

fn optimal_direction(data: &DataMatrix, tiles: &TileSet, floor: f64) -> Result<(Vec<f64>, CovariancePair)> {
    let (n, m) = data.shape();
    let user = TileMap::new(n, m)?.merge_all(&tiles.background)?;
    let cov = hypothesis_covariances(&center(data), &user, &tiles.hypothesis()?)?;
    let u = most_informative_directions(&cov, 1, floor)?.directions.remove(0);
    Ok((u, cov))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySpec {
    pub sigmas: Vec<f64>,
    pub delta_ns: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    /// Factor columns to draw tile rows from; all side columns when absent.
    #[serde(default)]
    pub factors: Option<Vec<String>>,
    #[serde(default = "default_background")]
    pub background_tiles: usize,
    #[serde(default = "default_max_cols")]
    pub max_cols: usize,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

fn default_background() -> usize {
    3
}

fn default_max_cols() -> usize {
    32
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            sigmas: vec![0.0, 1.0, 10.0],
            delta_ns: vec![0, 200],
            repeats: 20,
            seed: 1,
            factors: None,
            background_tiles: default_background(),
            max_cols: default_max_cols(),
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRecord {
    pub repeat: usize,
    pub sigma: f64,
    pub delta_n: usize,
    pub gain_optimal: f64,
    pub gain_perturbed: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub sigma: f64,
    pub delta_n: usize,
    pub repeats: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityTable {
    pub rows: Vec<StabilityRow>,
    pub records: Vec<StabilityRecord>,
}

impl StabilityTable {
    pub fn mean_error(&self, sigma: f64, delta_n: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.sigma == sigma && r.delta_n == delta_n).map(|r| r.mean_error)
    }
}

/// Gain lost by optimising on perturbed data, measured on the original pair.
///
/// Each repeat draws its background and hypothesis tiles once and shares them,
/// together with the removed rows and the base noise, across the whole grid.
pub fn run_stability(data: &DataMatrix, spec: &StabilitySpec) -> Result<StabilityTable> {
    if spec.repeats == 0 || spec.sigmas.is_empty() || spec.delta_ns.is_empty() {
        return Err(Error::InvalidParameter("stability grid and repeats must be non-empty".into()));
    }
    let (n, m) = data.shape();
    let factors = factor_columns(data, spec.factors.as_deref())?;
    let per_repeat: Vec<Vec<StabilityRecord>> = (0..spec.repeats)
        .into_par_iter()
        .map(|rep| -> Result<Vec<StabilityRecord>> {
            let rep_seed = rng::derive(spec.seed, &[rep as u64]);
            let perturb_seed = rng::derive(rep_seed, &[1]);
            let kept: BTreeMap<usize, Vec<usize>> =
                spec.delta_ns.iter().map(|&dn| (dn, kept_rows(n, dn.min(n.saturating_sub(1)), perturb_seed))).collect();
            // Redraw until every tile keeps at least one row under every removal.
            let mut attempt = 0;
            let tiles = loop {
                let mut r = rng::stream_rng(rep_seed, attempt);
                let t = draw_tiles(&factors, m, spec.max_cols, spec.background_tiles, &mut r)?;
                if kept.values().all(|k| t.restrict(k).is_some()) {
                    break t;
                }
                attempt += 1;
                if attempt == MAX_TILE_ATTEMPTS {
                    return Err(Error::InvalidParameter("could not draw tiles that survive row removal".into()));
                }
            };
            let (u, cov) = optimal_direction(data, &tiles, spec.floor)?;
            let g_opt = gain(&u, &cov)?;
            let mut out = Vec::new();
            for &delta_n in &spec.delta_ns {
                for &sigma in &spec.sigmas {
                    let p = perturb(data, sigma, delta_n, perturb_seed)?;
                    let local = tiles.restrict(&kept[&delta_n]).expect("checked above");
                    let (u_star, _) = optimal_direction(&p, &local, spec.floor)?;
                    let g = gain(&u_star, &cov)?;
                    out.push(StabilityRecord {
                        repeat: rep,
                        sigma,
                        delta_n,
                        gain_optimal: g_opt,
                        gain_perturbed: g,
                        error: g_opt - g,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let records: Vec<StabilityRecord> = per_repeat.into_iter().flatten().collect();
    let mut rows = Vec::new();
    for &delta_n in &spec.delta_ns {
        for &sigma in &spec.sigmas {
            let errs: Vec<f64> =
                records.iter().filter(|r| r.sigma == sigma && r.delta_n == delta_n).map(|r| r.error).collect();
            let k = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / k;
            let var =
                if errs.len() > 1 { errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
            rows.push(StabilityRow {
                sigma,
                delta_n,
                repeats: errs.len(),
                mean_error: mean,
                std_error: (var / k).sqrt(),
                max_error: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    Ok(StabilityTable { rows, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub sizes: Vec<(usize, usize)>,
    pub repeats: usize,
    pub seed: u64,
    #[serde(default = "default_background")]
    pub background_tiles: usize,
    #[serde(default = "default_max_cols")]
    pub max_cols: usize,
    #[serde(default = "default_floor")]
    pub floor: f64,
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec {
            sizes: vec![(1000, 10), (10_000, 10), (1000, 100), (10_000, 100), (1000, 200), (10_000, 200)],
            repeats: 5,
            seed: 1,
            background_tiles: default_background(),
            max_cols: default_max_cols(),
            floor: DEFAULT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub m: usize,
    pub repeats: usize,
    /// Top gain of the last repeat; deterministic.
    pub gain: f64,
    /// Median seconds to build the user tiling and both hypothesis tilings.
    pub t_model: f64,
    /// Median seconds to compute both covariances and the directions.
    pub t_view: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Median wall-clock times on Gaussian data. Sizes run one after another so
/// that timings do not compete for cores.
pub fn run_scaling(spec: &ScalingSpec) -> Result<Vec<ScalingRow>> {
    if spec.repeats == 0 || spec.sizes.is_empty() {
        return Err(Error::InvalidParameter("scaling grid and repeats must be non-empty".into()));
    }
    let mut rows = Vec::with_capacity(spec.sizes.len());
    for &(n, m) in &spec.sizes {
        let data_seed = rng::derive(spec.seed, &[n as u64, m as u64]);
        let data = make_gaussian(&GaussianSpec {
            n,
            m,
            factor_levels: vec![2, 4, 8],
            latent: 0,
            effect: 0.0,
            seed: data_seed,
        })?;
        let factors = factor_columns(&data, None)?;
        let y = center(&data);
        let (mut t_model, mut t_view, mut last_gain) = (Vec::new(), Vec::new(), f64::NAN);
        for rep in 0..spec.repeats {
            let mut r = rng::stream_rng(data_seed, rep as u64);
            let tiles = draw_tiles(&factors, m, spec.max_cols, spec.background_tiles, &mut r)?;
            let h = tiles.hypothesis()?;
            let start = Instant::now();
            let user = TileMap::new(n, m)?.merge_all(&tiles.background)?;
            let (t1, t2) = h.tiles();
            let map1 = user.merge_all(&t1)?;
            let map2 = user.merge_all(&t2)?;
            t_model.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            let cov = CovariancePair::new(tiling_covariance(&y, &map1)?, tiling_covariance(&y, &map2)?)?;
            let result = most_informative_directions(&cov, 2.min(m), spec.floor)?;
            t_view.push(start.elapsed().as_secs_f64());
            last_gain = result.top_gain();
        }
        rows.push(ScalingRow {
            n,
            m,
            repeats: spec.repeats,
            gain: last_gain,
            t_model: median(t_model),
            t_view: median(t_view),
        });
    }
    Ok(rows)
}

/// Least-squares line through `(x, y)`: `(slope, intercept, r²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / k, y.iter().sum::<f64>() / k);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Where a script's data comes from. Paths are relative to the script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSource {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
}

impl DataSource {
    pub fn load(&self, base: &Path) -> Result<DataMatrix> {
        let mut options = LoadOptions::default();
        if let Some(m) = &self.manifest {
            options = options.with_manifest(&Manifest::from_path(base.join(m))?);
        }
        Ok(load_csv(base.join(&self.path), &options)?.data)
    }
}

fn default_tau() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub name: String,
    /// Selections turned into user tiles before the hypothesis is applied.
    #[serde(default)]
    pub tiles: Vec<String>,
    pub hypothesis: HypothesisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalDirection {
    pub name: String,
    pub file: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrixConfig {
    pub data: DataSource,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub selections: BTreeMap<String, RowSpec>,
    pub pairs: Vec<PairConfig>,
    /// Adds the first principal component as a row named `pca`.
    #[serde(default)]
    pub pca: bool,
    #[serde(default)]
    pub external: Vec<ExternalDirection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMatrixOutput {
    pub table: GainTable,
    pub tiles: BTreeMap<String, Tile>,
    /// External direction files that could not be read.
    pub skipped: Vec<String>,
}

fn selection_tile(data: &DataMatrix, selections: &BTreeMap<String, RowSpec>, name: &str, tau: f64) -> Result<Tile> {
    let spec = selections.get(name).ok_or_else(|| Error::InvalidSelection(format!("unknown selection `{name}`")))?;
    let sel = PointSelection::new(spec.resolve(data)?, name)?;
    Ok(selection_to_tile(data, &sel, tau)?.0)
}

fn read_direction(path: &Path) -> Result<Vec<f64>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum DirectionFile {
        Plain(Vec<f64>),
        Named { values: Vec<f64> },
    }
    Ok(match serde_json::from_str::<DirectionFile>(&fs::read_to_string(path)?)? {
        DirectionFile::Plain(v) | DirectionFile::Named { values: v } => v,
    })
}

pub fn run_gain_matrix(data: &DataMatrix, config: &GainMatrixConfig, base: &Path) -> Result<GainMatrixOutput> {
    let mut tiles = BTreeMap::new();
    let mut pairs = Vec::with_capacity(config.pairs.len());
    for p in &config.pairs {
        let mut user_tiles = Vec::new();
        for name in &p.tiles {
            let t = selection_tile(data, &config.selections, name, config.tau)?;
            tiles.insert(name.clone(), t.clone());
            user_tiles.push(t);
        }
        pairs.push(PairSpec {
            name: p.name.clone(),
            user_tiles: Some(user_tiles),
            hypothesis: p.hypothesis.resolve(data)?,
        });
    }
    let mut external = Vec::new();
    if config.pca {
        external.push(NamedDirection { name: "pca".into(), values: first_principal_component(data) });
    }
    let mut skipped = Vec::new();
    for e in &config.external {
        match read_direction(&base.join(&e.file)) {
            Ok(values) => external.push(NamedDirection { name: e.name.clone(), values }),
            Err(_) => skipped.push(e.name.clone()),
        }
    }
    let (n, m) = data.shape();
    let table = gain_matrix(&center(data), &TileMap::new(n, m)?, &pairs, &external, config.floor)?;
    Ok(GainMatrixOutput { table, tiles, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkthroughStep {
    pub name: String,
    /// Selections added as user tiles before this step's view.
    #[serde(default)]
    pub tiles: Vec<String>,
    /// Replaces the current hypothesis; the previous one is kept when absent.
    #[serde(default)]
    pub hypothesis: Option<HypothesisSpec>,
    /// Selections to describe with crosstabs and parallel coordinates.
    #[serde(default)]
    pub inspect: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkthroughSession {
    pub name: String,
    pub steps: Vec<WalkthroughStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkthroughScript {
    pub data: DataSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub crosstab_columns: Vec<String>,
    #[serde(default)]
    pub selections: BTreeMap<String, RowSpec>,
    pub sessions: Vec<WalkthroughSession>,
    /// Pairs of step names whose top directions are compared.
    #[serde(default)]
    pub compare: Vec<(String, String)>,
}

fn default_samples() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub session: String,
    pub step: String,
    pub tiles: usize,
    pub gain: f64,
    pub degenerate: bool,
    pub direction: Vec<f64>,
    /// selection → column → level → count
    pub crosstabs: BTreeMap<String, BTreeMap<String, BTreeMap<String, usize>>>,
    /// selection → columns chosen by the ratio rule at the script's tau
    pub chosen_columns: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkthroughOutput {
    pub steps: Vec<StepSummary>,
    pub comparisons: Vec<Comparison>,
}

impl WalkthroughOutput {
    pub fn step(&self, name: &str) -> Option<&StepSummary> {
        self.steps.iter().find(|s| s.step == name)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn write_coords(path: &Path, view: &ViewState) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "sample", "row", "x", "y", "outside_focus"])?;
    let blocks = std::iter::once(("data", 0, &view.coords_data))
        .chain(view.coords_sample_h1.iter().enumerate().map(|(k, c)| ("h1", k, c)))
        .chain(view.coords_sample_h2.iter().enumerate().map(|(k, c)| ("h2", k, c)));
    for (kind, k, c) in blocks {
        for i in 0..c.rows {
            let y = if c.cols > 1 { format_float(c.get(i, 1)) } else { String::new() };
            w.write_record([
                kind.to_string(),
                k.to_string(),
                i.to_string(),
                format_float(c.get(i, 0)),
                y,
                view.outside_focus[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Replays the script, writing views, plots, crosstabs and session logs to `out_dir`.
pub fn run_walkthrough(data: Arc<DataMatrix>, script: &WalkthroughScript, out_dir: &Path) -> Result<WalkthroughOutput> {
    fs::create_dir_all(out_dir)?;
    let resolve = |name: &str| -> Result<PointSelection> {
        let spec = script
            .selections
            .get(name)
            .ok_or_else(|| Error::InvalidSelection(format!("script refers to unknown selection `{name}`")))?;
        PointSelection::new(spec.resolve(&data)?, name)
    };
    let mut steps = Vec::new();
    let mut directions: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut crosstab_rows = Vec::new();
    for ws in &script.sessions {
        let mut session =
            Session::from_shared(Arc::clone(&data), script.seed).with_id(ws.name.clone()).with_floor(script.floor);
        for step in &ws.steps {
            for name in &step.tiles {
                session.add_tile_from_selection(&resolve(name)?, script.tau)?;
            }
            if let Some(h) = &step.hypothesis {
                session.set_hypothesis(h.resolve(&data)?)?;
            }
            let view = session.compute_view(script.samples)?;
            let stem = out_dir.join(&step.name);
            let with_ext = |ext: &str| PathBuf::from(format!("{}.{ext}", stem.display()));
            write_json(&with_ext("view.json"), &view)?;
            write_coords(&with_ext("coords.csv"), &view)?;
            let mut crosstabs = BTreeMap::new();
            let mut chosen_columns = BTreeMap::new();
            let mut highlight = Vec::new();
            for (k, name) in step.inspect.iter().enumerate() {
                let sel = resolve(name)?;
                if k == 0 {
                    highlight = sel.rows().to_vec();
                }
                let mut tabs = BTreeMap::new();
                for col in &script.crosstab_columns {
                    let t = crosstab(&data, col, &sel)?;
                    for (level, count) in &t.counts {
                        crosstab_rows.push([
                            step.name.clone(),
                            name.clone(),
                            col.clone(),
                            level.clone(),
                            count.to_string(),
                        ]);
                    }
                    tabs.insert(col.clone(), t.counts);
                }
                crosstabs.insert(name.clone(), tabs);
                let pcp = session.pcp(&sel, script.tau)?;
                let report = &pcp.report;
                chosen_columns
                    .insert(name.clone(), report.chosen().into_iter().map(|j| data.col_names()[j].clone()).collect());
                write_json(&with_ext(&format!("{name}.pcp.json")), &pcp)?;
                fs::write(
                    with_ext(&format!("{name}.pcp.svg")),
                    plot::pcp_svg(&data, sel.rows(), report, &format!("{} / {name}", step.name)),
                )?;
            }
            fs::write(with_ext("scatter.svg"), plot::scatter_svg(&view, &highlight, &step.name))?;
            directions.insert(step.name.clone(), view.projection.directions[0].clone());
            steps.push(StepSummary {
                session: ws.name.clone(),
                step: step.name.clone(),
                tiles: session.tile_count(),
                gain: view.gain,
                degenerate: view.degenerate,
                direction: view.projection.directions[0].clone(),
                crosstabs,
                chosen_columns,
            });
        }
        write_json(
            &out_dir.join(format!("{}.session.json", ws.name)),
            &session.to_document(Some(script.data.path.display().to_string())),
        )?;
    }
    let comparisons = script
        .compare
        .iter()
        .map(|(a, b)| {
            let (u, v) = match (directions.get(a), directions.get(b)) {
                (Some(u), Some(v)) => (u, v),
                _ => return Err(Error::InvalidParameter(format!("cannot compare unknown steps `{a}` and `{b}`"))),
            };
            Ok(Comparison {
                a: a.clone(),
                b: b.clone(),
                cosine: u.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = WalkthroughOutput { steps, comparisons };
    write_json(&out_dir.join("walkthrough.json"), &out)?;
    let mut w = csv::Writer::from_path(out_dir.join("walkthrough.csv"))?;
    w.write_record(["session", "step", "tiles", "gain", "degenerate"])?;
    for s in &out.steps {
        w.write_record([
            s.session.clone(),
            s.step.clone(),
            s.tiles.to_string(),
            format_float(s.gain),
            s.degenerate.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out_dir.join("crosstabs.csv"))?;
    w.write_record(["step", "selection", "column", "level", "count"])?;
    for r in crosstab_rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(out)
}

pub fn write_stability(dir: &Path, table: &StabilityTable) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("stability.csv"))?;
    w.write_record(["sigma", "delta_n", "repeats", "mean_error", "std_error", "max_error"])?;
    for r in &table.rows {
        w.write_record([
            format_float(r.sigma),
            r.delta_n.to_string(),
            r.repeats.to_string(),
            format_float(r.mean_error),
            format_float(r.std_error),
            format_float(r.max_error),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join("stability_repeats.csv"))?;
    w.write_record(["repeat", "sigma", "delta_n", "gain_optimal", "gain_perturbed", "error"])?;
    for r in &table.records {
        w.write_record([
            r.repeat.to_string(),
            format_float(r.sigma),
            r.delta_n.to_string(),
            format_float(r.gain_optimal),
            format_float(r.gain_perturbed),
            format_float(r.error),
        ])?;
    }
    w.flush()?;
    let mut sigmas: Vec<f64> = table.rows.iter().map(|r| r.sigma).collect();
    sigmas.dedup();
    let mut delta_ns: Vec<usize> = table.rows.iter().map(|r| r.delta_n).collect();
    delta_ns.dedup();
    let series: Vec<(String, Vec<f64>)> = delta_ns
        .iter()
        .map(|&dn| (format!("Δn={dn}"), sigmas.iter().map(|&s| table.mean_error(s, dn).unwrap_or(f64::NAN)).collect()))
        .collect();
    fs::write(dir.join("stability.svg"), plot::line_svg("mean gain error", "sigma", "error", &sigmas, &series))?;
    Ok(())
}

pub fn write_scaling(dir: &Path, rows: &[ScalingRow]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("scaling.csv"))?;
    w.write_record(["n", "m", "nm", "repeats", "gain", "t_model", "t_view"])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            (r.n * r.m).to_string(),
            r.repeats.to_string(),
            format_float(r.gain),
            format!("{:.6}", r.t_model),
            format!("{:.6}", r.t_view),
        ])?;
    }
    w.flush()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n * r.m) as f64).collect();
    let series = vec![
        ("t_model".to_string(), rows.iter().map(|r| r.t_model).collect()),
        ("t_view".to_string(), rows.iter().map(|r| r.t_view).collect()),
    ];
    fs::write(dir.join("scaling.svg"), plot::line_svg("median wall-clock time", "n·m", "seconds", &xs, &series))?;
    Ok(())
}

pub fn write_gain_matrix(dir: &Path, out: &GainMatrixOutput) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("gains.csv"))?;
    let mut header = vec!["direction".to_string(), "optimal_for".to_string()];
    header.extend(out.table.pairs.iter().cloned());
    w.write_record(&header)?;
    for r in &out.table.rows {
        let mut rec = vec![r.direction.clone(), r.optimal_for.map(|c| out.table.pairs[c].clone()).unwrap_or_default()];
        rec.extend(r.gains.iter().map(|g| g.map(format_float).unwrap_or_else(|| "NA".into())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_json(&dir.join("gains.json"), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{make_districts, DistrictParams};

    fn small_stability() -> StabilitySpec {
        StabilitySpec { sigmas: vec![0.0, 1.0, 10.0], delta_ns: vec![0, 100], repeats: 4, ..StabilitySpec::default() }
    }

    #[test]
    fn stability_basics() {
        let data = make_districts(&DistrictParams::default()).unwrap();
        let t = run_stability(&data, &small_stability()).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.records.len(), 24);
        assert_eq!(t.mean_error(0.0, 0), Some(0.0));
        assert!(t.records.iter().all(|r| r.error >= -1e-9 * r.gain_optimal));
        assert_eq!(t, run_stability(&data, &small_stability()).unwrap());
    }

    #[test]
    fn stability_needs_factors() {
        let data = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]]).unwrap();
        assert!(run_stability(&data, &small_stability()).is_err());
    }

    #[test]
    fn restriction_reindexes() {
        let t = Tile::new(vec![1, 4, 6], vec![0]).unwrap();
        assert_eq!(restrict(&t, &[0, 1, 2, 6]).unwrap().rows(), &[1, 3]);
        assert!(restrict(&t, &[0, 2]).is_none());
    }

    #[test]
    fn scaling_runs() {
        let spec = ScalingSpec { sizes: vec![(200, 5), (400, 12)], repeats: 3, ..ScalingSpec::default() };
        let rows = run_scaling(&spec).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.t_model > 0.0 && r.t_view > 0.0 && r.gain >= 1.0 - 1e-9));
        let again = run_scaling(&spec).unwrap();
        assert_eq!(rows.iter().map(|r| r.gain).collect::<Vec<_>>(), again.iter().map(|r| r.gain).collect::<Vec<_>>());
    }

    #[test]
    fn fit() {
        let (s, i, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((s - 2.0).abs() < 1e-12 && (i - 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
