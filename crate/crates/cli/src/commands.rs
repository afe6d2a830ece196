use std::collections::BTreeMap;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use tilexplore_core::covariance::hypothesis_maps;
use tilexplore_core::experiments::{
    run_gain_matrix, run_scaling, run_stability, run_walkthrough, write_gain_matrix, write_scaling, write_stability,
    GainMatrixConfig, GainMatrixOutput, ScalingSpec, StabilitySpec, WalkthroughScript,
};
use tilexplore_core::ingestion::{load_csv, make_toy, LoadOptions, Manifest, ToyParams};
use tilexplore_core::plot;
use tilexplore_core::request::HypothesisSpec;
use tilexplore_core::sampler::sample_dataset;
use tilexplore_core::selection::{attribute_ratios, crosstab, PointSelection, DEFAULT_TAU};
use tilexplore_core::session::{replay, PairSpec, SessionDocument};
use tilexplore_core::synthetic::{make_districts, DistrictParams};
use tilexplore_core::{DataMatrix, Session};
use tilexplore_service::{GainsRequest, ServiceConfig, StoreConfig};

use crate::{parse, Cli, Command, CovAction, DataArgs, Experiment, SessionArg};

/// Where a session's data comes from; stored as the document's `data_ref`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct DataRef {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    data: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    synthetic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subsample: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn synthetic(name: &str) -> Result<DataMatrix> {
    Ok(match name {
        "districts" => make_districts(&DistrictParams::default())?,
        "toy" => make_toy(&ToyParams::default())?,
        other => bail!("unknown synthetic dataset `{other}` (try `districts` or `toy`)"),
    })
}

impl DataRef {
    fn from_args(args: &DataArgs, subsample: Option<usize>, seed: u64) -> Result<Self> {
        let abs = |p: &Path| p.canonicalize().with_context(|| format!("cannot open {}", p.display()));
        Ok(DataRef {
            data: args.data.as_deref().map(abs).transpose()?,
            manifest: args.manifest.as_deref().map(abs).transpose()?,
            synthetic: args.synthetic.clone(),
            subsample,
            seed,
        })
    }

    fn load(&self) -> Result<DataMatrix> {
        match (&self.data, &self.synthetic) {
            (Some(path), None) => {
                let mut options =
                    LoadOptions { subsample_n: self.subsample, seed: self.seed, ..LoadOptions::default() };
                if let Some(m) = &self.manifest {
                    options = options.with_manifest(&Manifest::from_path(m)?);
                }
                let loaded = load_csv(path, &options).with_context(|| format!("loading {}", path.display()))?;
                for d in &loaded.report.dropped {
                    eprintln!("dropped line {}: {}", d.line, d.reason);
                }
                Ok(loaded.data)
            }
            (None, Some(name)) => synthetic(name),
            _ => bail!("give either --data or --synthetic"),
        }
    }
}

fn open(arg: &SessionArg, floor: Option<f64>) -> Result<(Session, DataRef)> {
    let text = fs::read_to_string(&arg.session)
        .with_context(|| format!("cannot read session {} (run `explore load` first)", arg.session.display()))?;
    let doc: SessionDocument = serde_json::from_str(&text)?;
    let data_ref: DataRef = serde_json::from_str(doc.data_ref.as_deref().context("session has no data reference")?)?;
    let mut session = replay(Arc::new(data_ref.load()?), &doc)?;
    if let Some(f) = floor {
        session = session.with_floor(f);
    }
    Ok((session, data_ref))
}

fn save(arg: &SessionArg, session: &Session, data_ref: &DataRef) -> Result<()> {
    let doc = session.to_document(Some(serde_json::to_string(data_ref)?));
    if let Some(dir) = arg.session.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&arg.session, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn out_dir(cli_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(cli_dir).with_context(|| format!("creating {}", cli_dir.display()))?;
    Ok(cli_dir.to_path_buf())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn experiment_data(args: &DataArgs) -> Result<DataMatrix> {
    DataRef::from_args(args, None, 0)?.load()
}

pub fn run(cli: Cli) -> Result<()> {
    let tau = cli.tau.unwrap_or(DEFAULT_TAU);
    match cli.command {
        Command::Load { data, session, subsample } => {
            let data_ref = DataRef::from_args(&data, subsample, cli.seed.unwrap_or(0))?;
            let mut s = Session::new(data_ref.load()?, cli.seed.unwrap_or(0));
            if let Some(f) = cli.floor {
                s = s.with_floor(f);
            }
            save(&session, &s, &data_ref)?;
            print_json(&s.summary())
        }
        Command::Hypothesize { session, rows, cols, partition, spec } => {
            let (mut s, data_ref) = open(&session, cli.floor)?;
            let spec: HypothesisSpec = match spec {
                Some(path) => read_json(&path)?,
                None => parse::hypothesis(&rows, cols.as_deref(), partition.as_deref())?,
            };
            s.set_hypothesis(spec.resolve(s.data())?)?;
            save(&session, &s, &data_ref)?;
            print_json(&s.hypothesis_summary())
        }
        Command::View { session, samples, name } => {
            let (s, _) = open(&session, cli.floor)?;
            let view = s.compute_view(samples)?;
            let dir = out_dir(&cli.out_dir)?;
            write_json(&dir.join(format!("{name}.json")), &view)?;
            let mut w = csv::Writer::from_path(dir.join(format!("{name}.coords.csv")))?;
            w.write_record(["row", "x", "y", "focus"])?;
            for i in 0..view.coords_data.rows {
                let y = if view.coords_data.cols > 1 { view.coords_data.get(i, 1) } else { 0.0 };
                w.write_record([
                    i.to_string(),
                    view.coords_data.get(i, 0).to_string(),
                    y.to_string(),
                    (!view.outside_focus[i]).to_string(),
                ])?;
            }
            w.flush()?;
            fs::write(dir.join(format!("{name}.svg")), plot::scatter_svg(&view, &[], &name))?;
            println!("gain {:.6}{}", view.gain, if view.degenerate { " (degenerate)" } else { "" });
            for (k, labels) in view.axis_labels.iter().enumerate() {
                let text: Vec<String> = labels.iter().map(|l| format!("{:+.3} {}", l.value, l.name)).collect();
                println!("axis {}: {}", k + 1, text.join("  "));
            }
            Ok(())
        }
        Command::Select { session, rows, name } => {
            let (s, _) = open(&session, cli.floor)?;
            let sel = PointSelection::new(parse::required_rows(&rows)?.resolve(s.data())?, name.clone())?;
            let report = attribute_ratios(s.data(), &sel, tau)?;
            let dir = out_dir(&cli.out_dir)?;
            let tabs = s
                .data()
                .side_cols()
                .iter()
                .map(|c| Ok((c.name.clone(), crosstab(s.data(), &c.name, &sel)?.counts)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            write_json(&dir.join(format!("{name}.pcp.json")), &s.pcp(&sel, tau)?)?;
            write_json(&dir.join(format!("{name}.crosstab.json")), &tabs)?;
            fs::write(dir.join(format!("{name}.pcp.svg")), plot::pcp_svg(s.data(), sel.rows(), &report, &name))?;
            println!("{} rows, tau {tau}", sel.len());
            for c in &report.columns {
                println!("{:>24} {:>8.3} {}", c.name, c.ratio, if c.chosen { "*" } else { "" });
            }
            for (col, counts) in &tabs {
                let text: Vec<String> = counts.iter().map(|(l, n)| format!("{l}:{n}")).collect();
                println!("{col}: {}", text.join(" "));
            }
            Ok(())
        }
        Command::Tile { session, rows, label } => {
            let (mut s, data_ref) = open(&session, cli.floor)?;
            let label = label.unwrap_or_else(|| format!("tile{}", s.tile_count() + 1));
            let sel = PointSelection::new(parse::required_rows(&rows)?.resolve(s.data())?, label)?;
            let (tile, report) = s.add_tile_from_selection(&sel, tau)?;
            save(&session, &s, &data_ref)?;
            let names: Vec<&str> = report.chosen().into_iter().map(|j| s.data().col_names()[j].as_str()).collect();
            println!(
                "tile {}: {} rows x {} columns: {}",
                s.tile_count(),
                tile.rows().len(),
                tile.cols().len(),
                names.join(", ")
            );
            Ok(())
        }
        Command::Gains { session, pairs } => {
            let (s, _) = open(&session, cli.floor)?;
            let req: GainsRequest = read_json(&pairs)?;
            let specs = req
                .pairs
                .iter()
                .map(|p| {
                    Ok(PairSpec {
                        name: p.name.clone(),
                        user_tiles: p.tiles.clone(),
                        hypothesis: p.hypothesis.resolve(s.data())?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let table = s.gain_matrix(&specs, &req.external)?;
            let dir = out_dir(&cli.out_dir)?;
            write_gain_matrix(
                &dir,
                &GainMatrixOutput { table: table.clone(), tiles: BTreeMap::new(), skipped: Vec::new() },
            )?;
            print_gain_table(&table);
            Ok(())
        }
        Command::Sample { session, side, count } => {
            if !(side == 1 || side == 2) {
                bail!("--side must be 1 or 2");
            }
            let (s, _) = open(&session, cli.floor)?;
            let h = s.hypothesis().context("no hypothesis set; run `explore hypothesize` first")?;
            let (m1, m2) = hypothesis_maps(s.user_map(), h)?;
            let map = if side == 1 { m1 } else { m2 };
            let dir = out_dir(&cli.out_dir)?;
            for k in 0..count {
                let sample = sample_dataset(s.data(), &map, s.sample_seed(side, k))?.unscaled();
                let path = dir.join(format!("sample_h{side}_{}.csv", k + 1));
                sample.write_csv(fs::File::create(&path)?)?;
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Cov { action: CovAction::Dump { session } } => {
            let (s, _) = open(&session, cli.floor)?;
            let pair = s.covariances()?;
            let dir = out_dir(&cli.out_dir)?;
            for (name, m) in [("sigma1", &pair.sigma1), ("sigma2", &pair.sigma2)] {
                let mut w = csv::Writer::from_path(dir.join(format!("{name}.csv")))?;
                w.write_record(s.data().col_names())?;
                for i in 0..m.nrows() {
                    w.write_record(m.row(i).iter().map(|v| format!("{v:e}")))?;
                }
                w.flush()?;
            }
            println!("wrote sigma1.csv and sigma2.csv to {}", dir.display());
            Ok(())
        }
        Command::Serve { port, host, data_dir, persist, ui_dir, cors_origin } => {
            let addr: SocketAddr = format!("{host}:{port}").parse().context("bad --host/--port")?;
            let config = ServiceConfig { store: StoreConfig { data_dir, persist }, ui_dir, cors_origin };
            tokio::runtime::Runtime::new()?.block_on(tilexplore_service::serve(addr, config))?;
            Ok(())
        }
        Command::Experiment { kind } => experiment(kind, &cli.out_dir, cli.seed, cli.tau, cli.floor),
    }
}

fn print_gain_table(table: &tilexplore_core::session::GainTable) {
    println!("{:>12} {}", "direction", table.pairs.iter().map(|p| format!("{p:>12}")).collect::<String>());
    for row in &table.rows {
        let cells: String =
            row.gains.iter().map(|g| g.map_or(format!("{:>12}", "-"), |g| format!("{g:>12.4}"))).collect();
        println!("{:>12} {cells}", row.direction);
    }
    println!("diagonal dominant: {:?}", table.diagonal_dominant);
}

fn experiment(kind: Experiment, out: &Path, seed: Option<u64>, tau: Option<f64>, floor: Option<f64>) -> Result<()> {
    let dir = out_dir(out)?;
    match kind {
        Experiment::Stability { data, config, repeats } => {
            let mut spec: StabilitySpec = config.as_deref().map(read_json).transpose()?.unwrap_or_default();
            spec.seed = seed.unwrap_or(spec.seed);
            spec.repeats = repeats.unwrap_or(spec.repeats);
            spec.floor = floor.unwrap_or(spec.floor);
            let table = run_stability(&experiment_data(&data)?, &spec)?;
            write_stability(&dir, &table)?;
            println!("{:>6} {:>6} {:>10} {:>10}", "sigma", "dn", "mean", "std");
            for r in &table.rows {
                println!("{:>6} {:>6} {:>10.4} {:>10.4}", r.sigma, r.delta_n, r.mean_error, r.std_error);
            }
        }
        Experiment::Scaling { config, sizes, repeats } => {
            let mut spec: ScalingSpec = config.as_deref().map(read_json).transpose()?.unwrap_or_default();
            if let Some(text) = sizes {
                spec.sizes = text
                    .split(',')
                    .map(|s| {
                        let (n, m) = s.trim().split_once('x').with_context(|| format!("`{s}` is not NxM"))?;
                        Ok((n.parse()?, m.parse()?))
                    })
                    .collect::<Result<_>>()?;
            }
            spec.seed = seed.unwrap_or(spec.seed);
            spec.repeats = repeats.unwrap_or(spec.repeats);
            spec.floor = floor.unwrap_or(spec.floor);
            let rows = run_scaling(&spec)?;
            write_scaling(&dir, &rows)?;
            println!("{:>7} {:>5} {:>12} {:>12}", "n", "m", "t_model", "t_view");
            for r in &rows {
                println!("{:>7} {:>5} {:>12.6} {:>12.6}", r.n, r.m, r.t_model, r.t_view);
            }
        }
        Experiment::Gainmatrix { config, synthetic: name } => {
            let mut cfg: GainMatrixConfig = read_json(&config)?;
            let base = config.parent().unwrap_or(Path::new(".")).to_path_buf();
            cfg.tau = tau.unwrap_or(cfg.tau);
            cfg.floor = floor.unwrap_or(cfg.floor);
            let data = match name {
                Some(n) => synthetic(&n)?,
                None => cfg.data.load(&base)?,
            };
            let out = run_gain_matrix(&data, &cfg, &base)?;
            for s in &out.skipped {
                eprintln!("skipped external direction: {s}");
            }
            write_gain_matrix(&dir, &out)?;
            print_gain_table(&out.table);
        }
        Experiment::Walkthrough { script, synthetic: name } => {
            let mut sc: WalkthroughScript = read_json(&script)?;
            let base = script.parent().unwrap_or(Path::new(".")).to_path_buf();
            sc.seed = seed.unwrap_or(sc.seed);
            sc.tau = tau.unwrap_or(sc.tau);
            sc.floor = floor.unwrap_or(sc.floor);
            let data = match name {
                Some(n) => synthetic(&n)?,
                None => sc.data.load(&base)?,
            };
            let out = run_walkthrough(Arc::new(data), &sc, &dir)?;
            for s in &out.steps {
                println!("{}/{}: gain {:.4}, {} tiles", s.session, s.step, s.gain, s.tiles);
            }
            for c in &out.comparisons {
                println!("cos({}, {}) = {:.4}", c.a, c.b, c.cosine);
            }
        }
    }
    println!("outputs in {}", dir.display());
    Ok(())
}
