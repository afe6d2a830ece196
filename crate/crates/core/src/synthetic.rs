//! A synthetic district dataset shaped like the German socio-economic data:
//! 412 rows, 32 named numeric columns and the `Region`, `Type` and `State`
//! factors, with an East-rural block that differs in voting and age structure
//! and an urban block that differs in workforce structure.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingestion::DataMatrix;
use crate::rng;

pub const VOTING: [&str; 5] = ["LEFT.2009", "CDU.2009", "SPD.2009", "FDP.2009", "GREEN.2009"];
pub const DEMOGRAPHY: [&str; 5] = ["Elderly.pop.", "Old.Pop.", "Mid.aged.Pop.", "Young.Pop.", "Children.Pop."];
pub const WORKFORCE: [&str; 8] = [
    "Agricult..workf.",
    "Prod..workf.",
    "Manufac..Workf.",
    "Constr..workf.",
    "Service.workf.",
    "Trade.workf.",
    "Finance.workf.",
    "Pub..serv..workf.",
];
pub const EDUCATION: [&str; 5] = ["Highschool.degree", "No.school.degree", "Unemploy.", "Unempl..Youth", "Income"];
pub const OTHER: [&str; 9] = [
    "Voter.Participation",
    "Pop.Density",
    "Area",
    "GDP",
    "GDP.Growth",
    "Foreign.Pop.",
    "Birth.Rate",
    "Death.Rate",
    "Migration",
];

/// The 32 column names, in output order.
pub fn district_columns() -> Vec<String> {
    [&VOTING[..], &DEMOGRAPHY, &WORKFORCE, &EDUCATION, &OTHER].concat().into_iter().map(String::from).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistrictParams {
    pub seed: u64,
    /// Standard deviation of the idiosyncratic noise on every column.
    pub noise: f64,
}

impl Default for DistrictParams {
    fn default() -> Self {
        DistrictParams { seed: 2009, noise: 0.6 }
    }
}

/// (region, type, count, states)
const LAYOUT: [(&str, &str, usize, usize); 8] = [
    ("East", "Rural", 65, 6),
    ("East", "Urban", 22, 6),
    ("North", "Rural", 48, 4),
    ("North", "Urban", 22, 4),
    ("South", "Rural", 106, 2),
    ("South", "Urban", 44, 2),
    ("West", "Rural", 79, 4),
    ("West", "Urban", 26, 4),
];

/// Loadings of each column on (east-rural, urban, age, prosperity).
fn loadings(name: &str) -> [f64; 4] {
    match name {
        "LEFT.2009" => [2.2, 0.3, 0.3, -0.4],
        "CDU.2009" => [-0.6, -0.9, 0.2, 0.5],
        "SPD.2009" => [-0.7, 0.4, 0.1, -0.2],
        "FDP.2009" => [-0.8, 0.2, -0.2, 0.6],
        "GREEN.2009" => [-1.0, 1.4, -0.4, 0.5],
        "Elderly.pop." => [0.9, -0.2, 1.2, 0.0],
        "Old.Pop." => [1.4, -0.3, 1.0, -0.2],
        "Mid.aged.Pop." => [0.3, 0.2, -0.3, 0.3],
        "Young.Pop." => [-0.5, 0.9, -1.0, 0.2],
        "Children.Pop." => [-1.2, -0.4, -1.1, 0.1],
        "Agricult..workf." => [0.6, -1.6, 0.2, -0.3],
        "Prod..workf." => [0.2, -0.8, 0.0, 0.5],
        "Manufac..Workf." => [-0.2, -0.7, 0.0, 0.7],
        "Constr..workf." => [0.9, -0.9, 0.1, -0.2],
        "Service.workf." => [0.1, 1.6, -0.1, 0.3],
        "Trade.workf." => [-0.1, 0.8, 0.0, 0.2],
        "Finance.workf." => [-0.5, 1.2, -0.2, 0.6],
        "Pub..serv..workf." => [0.7, 0.9, 0.2, -0.3],
        "Highschool.degree" => [0.2, 1.3, -0.3, 0.5],
        "No.school.degree" => [0.8, 0.1, 0.1, -0.6],
        "Unemploy." => [1.6, 0.5, 0.2, -0.9],
        "Unempl..Youth" => [1.3, 0.3, 0.1, -0.8],
        "Income" => [-1.2, 0.6, 0.2, 1.2],
        "Voter.Participation" => [-1.0, 0.0, 0.3, 0.6],
        "Pop.Density" => [-0.3, 2.0, -0.2, 0.2],
        "Area" => [0.5, -1.2, 0.1, 0.0],
        "GDP" => [-0.9, 1.1, 0.0, 1.0],
        "GDP.Growth" => [-0.3, 0.9, -0.3, 0.4],
        "Foreign.Pop." => [-1.3, 1.0, -0.3, 0.4],
        "Birth.Rate" => [-0.8, 0.1, -0.9, 0.2],
        "Death.Rate" => [1.0, -0.2, 1.1, -0.2],
        _ => [0.6, 0.2, 0.4, -0.1],
    }
}

pub fn make_districts(p: &DistrictParams) -> Result<DataMatrix> {
    let n: usize = LAYOUT.iter().map(|l| l.2).sum();
    let cols = district_columns();
    let mut r = rng::rng(p.seed);
    let mut region = Vec::with_capacity(n);
    let mut kind = Vec::with_capacity(n);
    let mut state = Vec::with_capacity(n);
    let mut latent = Vec::with_capacity(n);
    for (reg, typ, count, states) in LAYOUT {
        for i in 0..count {
            region.push(reg.to_string());
            kind.push(typ.to_string());
            state.push(format!("{reg}-{}", i % states + 1));
            let east_rural = if reg == "East" && typ == "Rural" { 1.0 } else { 0.0 };
            let urban = if typ == "Urban" { 1.0 } else { -0.4 };
            let east = if reg == "East" { 0.5 } else { 0.0 };
            latent.push([
                1.4 * east_rural + east + 0.15 * rng::normal(&mut r),
                urban + 0.35 * rng::normal(&mut r),
                rng::normal(&mut r),
                rng::normal(&mut r) + if reg == "South" { 0.5 } else { 0.0 },
            ]);
        }
    }
    let weights: Vec<[f64; 4]> = cols.iter().map(|c| loadings(c)).collect();
    let values =
        DMatrix::from_fn(n, cols.len(), |i, j| weights[j].iter().zip(&latent[i]).map(|(w, z)| w * z).sum::<f64>());
    let noise = DMatrix::from_fn(n, cols.len(), |_, _| p.noise * rng::normal(&mut r));
    DataMatrix::new(values + noise, cols)?
        .with_side_column("Region", region)?
        .with_side_column("Type", kind)?
        .with_side_column("State", state)
        .map(|d| d.scaled())
}
