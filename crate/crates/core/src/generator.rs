//! Structured benchmark generator: uniform destinations in an `l × l`
//! square, RLs on a corners-inclusive grid, one random grid RL serving as
//! both depots.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{euclidean, Instance, Metric};

pub const MAX_ATTEMPTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingName {
    Basis,
    SpLow,
    SpHigh,
    EnLow,
    EnHigh,
    LocLow,
    LocHigh,
    DenLow,
    DenHigh,
}

impl SettingName {
    pub const ALL: [SettingName; 9] = [
        SettingName::Basis,
        SettingName::SpLow,
        SettingName::SpHigh,
        SettingName::EnLow,
        SettingName::EnHigh,
        SettingName::LocLow,
        SettingName::LocHigh,
        SettingName::DenLow,
        SettingName::DenHigh,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            SettingName::Basis => "Basis",
            SettingName::SpLow => "SpLow",
            SettingName::SpHigh => "SpHigh",
            SettingName::EnLow => "EnLow",
            SettingName::EnHigh => "EnHigh",
            SettingName::LocLow => "LocLow",
            SettingName::LocHigh => "LocHigh",
            SettingName::DenLow => "DenLow",
            SettingName::DenHigh => "DenHigh",
        }
    }

    fn index(&self) -> u64 {
        SettingName::ALL.iter().position(|s| s == self).unwrap() as u64
    }
}

impl fmt::Display for SettingName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SettingName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SettingName::ALL
            .into_iter()
            .find(|n| n.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown setting `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Large,
}

impl Size {
    pub fn as_str(&self) -> &'static str {
        match self {
            Size::Small => "small",
            Size::Large => "large",
        }
    }
}

impl fmt::Display for Size {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Size {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(Size::Small),
            "large" => Ok(Size::Large),
            _ => Err(Error::InvalidArgument(format!("unknown size `{s}`"))),
        }
    }
}

/// Fully resolved generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSetting {
    pub name: SettingName,
    pub size: Size,
    /// Rover speed in length units per time unit.
    pub delta: f64,
    pub e_max: f64,
    pub n_d: usize,
    pub n_r: usize,
    pub rows: usize,
    pub cols: usize,
    /// Side of the square.
    pub l: f64,
    /// Target density in destinations per squared length unit.
    pub density: f64,
    pub seed: u64,
}

impl GeneratorSetting {
    pub fn new(name: SettingName, size: Size, seed: u64) -> Self {
        use SettingName::*;
        let delta = match name {
            SpLow => 1.0 / 3.0,
            SpHigh => 1.0,
            _ => 0.5,
        };
        let e_max = match name {
            EnLow => 750.0,
            EnHigh => 1250.0,
            _ => 1000.0,
        };
        let density = match name {
            DenLow => 8e-6,
            DenHigh => 45e-6,
            _ => 16e-6,
        };
        let (n_d, (rows, cols), l) = match size {
            Size::Small => (
                16,
                match name {
                    LocLow => (2, 3),
                    LocHigh => (4, 4),
                    _ => (3, 3),
                },
                match name {
                    DenLow => 1400.0,
                    DenHigh => 600.0,
                    _ => 1000.0,
                },
            ),
            Size::Large => (
                100,
                match name {
                    LocLow => (6, 6),
                    LocHigh => (10, 10),
                    _ => (7, 7),
                },
                match name {
                    DenLow => 3500.0,
                    DenHigh => 1500.0,
                    _ => 2500.0,
                },
            ),
        };
        GeneratorSetting {
            name,
            size,
            delta,
            e_max,
            n_d,
            n_r: rows * cols,
            rows,
            cols,
            l,
            density,
            seed,
        }
    }

    pub fn instance_name(&self) -> String {
        format!("{}-{}-{}", self.size, self.name, self.seed)
    }

    /// Relative difference between `n_d / l²` and the target density.
    pub fn density_mismatch(&self) -> f64 {
        let realized = self.n_d as f64 / (self.l * self.l);
        (realized - self.density).abs() / self.density
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows * self.cols != self.n_r || self.rows < 2 || self.cols < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid {}x{} does not hold {} RLs",
                self.rows, self.cols, self.n_r
            )));
        }
        if !(self.delta > 0.0 && self.e_max > 0.0 && self.l > 0.0) || self.n_d == 0 {
            return Err(Error::InvalidArgument(
                "setting parameters must be positive".into(),
            ));
        }
        if self.density_mismatch() > 0.05 {
            return Err(Error::InvalidArgument(format!(
                "side {} gives density {:.3e}, target {:.3e}",
                self.l,
                self.n_d as f64 / (self.l * self.l),
                self.density
            )));
        }
        Ok(())
    }
}

/// Grid nodes `(j·l/(cols−1), i·l/(rows−1))`, row by row.
pub fn grid_locations(rows: usize, cols: usize, l: f64) -> Vec<[f64; 2]> {
    let step = |k: usize, m: usize| {
        if m <= 1 {
            0.0
        } else {
            k as f64 * l / (m - 1) as f64
        }
    };
    (0..rows)
        .flat_map(|i| (0..cols).map(move |j| [step(j, cols), step(i, rows)]))
        .collect()
}

fn reachable(dests: &[[f64; 2]], rls: &[[f64; 2]], e_max: f64) -> bool {
    dests.iter().all(|&v| {
        let near = rls.iter().map(|&w| euclidean(v, w)).fold(f64::INFINITY, f64::min);
        // The instance validator checks c(w,v) + c(v,w) with the same sums.
        near + near <= e_max + crate::model::EPS
    })
}

/// Random stream for `setting`: seeded by the instance seed, one stream per
/// (setting, size) pair.
pub fn setting_rng(setting: &GeneratorSetting) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(setting.seed);
    let size = match setting.size {
        Size::Small => 0,
        Size::Large => 1,
    };
    rng.set_stream(setting.name.index() * 2 + size);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub setting: GeneratorSetting,
    pub attempts: usize,
    pub depot: usize,
}

pub fn generate(setting: &GeneratorSetting) -> Result<Instance> {
    generate_with_info(setting).map(|(inst, _)| inst)
}

/// Redraws the destinations until every one has an RL within half the
/// flight budget, at most [`MAX_ATTEMPTS`] times.
pub fn generate_with_info(setting: &GeneratorSetting) -> Result<(Instance, Generated)> {
    setting.validate()?;
    let mut rng = setting_rng(setting);
    let rls = grid_locations(setting.rows, setting.cols, setting.l);
    for attempt in 1..=MAX_ATTEMPTS {
        let dests: Vec<[f64; 2]> = (0..setting.n_d)
            .map(|_| {
                [
                    rng.random_range(0.0..=setting.l),
                    rng.random_range(0.0..=setting.l),
                ]
            })
            .collect();
        if !reachable(&dests, &rls, setting.e_max) {
            continue;
        }
        let depot = rng.random_range(0..setting.n_r);
        let inst = Instance::from_coordinates(
            &setting.instance_name(),
            dests,
            rls,
            depot,
            depot,
            setting.e_max,
            setting.delta,
            Metric::Manhattan,
        )?;
        let info = Generated {
            setting: setting.clone(),
            attempts: attempt,
            depot,
        };
        return Ok((inst, info));
    }
    Err(Error::Infeasible(format!(
        "{}: no reachable layout in {MAX_ATTEMPTS} attempts",
        setting.instance_name()
    )))
}

/// Instances for seeds `seed..seed + count`, generated in parallel.
pub fn generate_batch(
    name: SettingName,
    size: Size,
    seed: u64,
    count: usize,
) -> Result<Vec<(Instance, Generated)>> {
    (0..count as u64)
        .into_par_iter()
        .map(|k| generate_with_info(&GeneratorSetting::new(name, size, seed + k)))
        .collect()
}
