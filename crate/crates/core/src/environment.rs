//! Hourly temperature and relative humidity, the temperature-dependent
//! Young's modulus of steel, and the yearly drivers of atmospheric corrosion.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{TimeGrid, HOURS_PER_YEAR};
use crate::seed::{self, Stream};

/// Ambient validity window of the modulus law, °C.
pub const MODULUS_T_MIN: f64 = -40.0;
pub const MODULUS_T_MAX: f64 = 100.0;

/// Relative humidity above which (with T > 0 °C) a surface counts as wet.
pub const WET_RH_PCT: f64 = 80.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureSource {
    Synthetic,
    /// CSV with header `timestamp,T_degC,RH_pct`, one row per grid hour.
    ExternalFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Annual mean, °C.
    pub mean: f64,
    /// Seasonal half-swing, °C.
    pub seasonal_amplitude: f64,
    /// Phase of the seasonal sine, rad. The default puts the minimum mid-January.
    pub seasonal_phase: f64,
    /// Daily half-swing, °C.
    pub diurnal_amplitude: f64,
    /// Phase of the daily sine, rad. The default puts the maximum at 15:00.
    pub diurnal_phase: f64,
    /// Lag-one coefficient of the hourly residual.
    pub ar1: f64,
    /// Innovation std of the residual, °C.
    pub noise_std: f64,
    /// Mean relative humidity at the annual-mean temperature, %.
    pub rh_base: f64,
    /// Humidity drop per °C above the mean, %/°C.
    pub rh_coupling: f64,
    /// Lag-one coefficient of the humidity residual.
    pub rh_ar1: f64,
    /// Innovation std of the humidity residual, %.
    pub rh_noise_std: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            mean: 15.0,
            seasonal_amplitude: 10.0,
            seasonal_phase: -PI / 2.0 - 2.0 * PI * 15.0 / 365.0,
            diurnal_amplitude: 4.0,
            diurnal_phase: PI / 2.0 - 2.0 * PI * 15.0 / 24.0,
            ar1: 0.95,
            noise_std: 0.5,
            rh_base: 70.0,
            rh_coupling: 2.0,
            rh_ar1: 0.9,
            rh_noise_std: 3.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.seasonal_amplitude < 0.0 || self.diurnal_amplitude < 0.0 {
            return Err(Error::param("synth amplitudes", "must be ≥ 0"));
        }
        if self.noise_std < 0.0 || self.rh_noise_std < 0.0 {
            return Err(Error::param("synth noise std", "must be ≥ 0"));
        }
        if !(0.0..1.0).contains(&self.ar1.abs()) || !(0.0..1.0).contains(&self.rh_ar1.abs()) {
            return Err(Error::param("ar1", "|coefficient| must be < 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvParams {
    /// Amplification of the linear temperature term, 1/°C.
    pub alpha_t: f64,
    /// Reference modulus, MPa.
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    /// °C
    pub e3: f64,
    /// °C
    pub e4: f64,
    pub temp_source: TemperatureSource,
    pub synth: SynthParams,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            alpha_t: 0.0015,
            e0: 210_000.0,
            e1: 3.768,
            e2: 1.0,
            e3: 639.0,
            e4: 1_650_000.0,
            temp_source: TemperatureSource::Synthetic,
            synth: SynthParams::default(),
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_t < 0.0 {
            return Err(Error::param("alpha_t", "must be ≥ 0"));
        }
        if self.e0 <= 0.0 {
            return Err(Error::param("e0", "must be > 0"));
        }
        if self.e1 <= 0.0 || self.e2 <= 0.0 || self.e3 <= 0.0 || self.e4 <= 0.0 {
            return Err(Error::param("e1..e4", "must be > 0"));
        }
        self.synth.validate()
    }
}

/// Young's modulus (MPa) at temperature `t` (°C).
///
/// `E0 (1 − α_T T) exp(−½ (|T|/e3)^e1 − ½ (|T|/e4)^e2)`. The power terms use
/// `|T|` so fractional exponents stay defined below 0 °C.
pub fn youngs_modulus(t: f64, params: &EnvParams) -> Result<f64> {
    if !(MODULUS_T_MIN..=MODULUS_T_MAX).contains(&t) || !t.is_finite() {
        return Err(Error::TemperatureOutOfDomain(t));
    }
    let a = t.abs();
    let decay = -0.5 * (a / params.e3).powf(params.e1) - 0.5 * (a / params.e4).powf(params.e2);
    Ok(params.e0 * (1.0 - params.alpha_t * t) * decay.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { seed: u64 },
    ExternalFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSeries {
    /// °C per hour.
    pub temperature: Vec<f64>,
    /// % per hour, within [0, 100].
    pub humidity: Vec<f64>,
    pub provenance: Provenance,
}

impl EnvSeries {
    pub fn len(&self) -> usize {
        self.temperature.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temperature.is_empty()
    }

    /// Constant series, mainly for tests and degenerate scenarios.
    pub fn constant(n: usize, temperature: f64, humidity: f64) -> Self {
        Self {
            temperature: vec![temperature; n],
            humidity: vec![humidity.clamp(0.0, 100.0); n],
            provenance: Provenance::ExternalFile,
        }
    }
}

/// Seasonal + diurnal harmonics with an AR(1) residual. Humidity follows the
/// temperature anomaly with the opposite sign plus its own AR(1) residual.
pub fn synth_temperature(grid: &TimeGrid, params: &SynthParams, master_seed: u64) -> Result<EnvSeries> {
    params.validate()?;
    let n = grid.len();
    let mut t_rng = seed::rng(master_seed, Stream::Temperature, 0, 0);
    let mut h_rng = seed::rng(master_seed, Stream::Humidity, 0, 0);
    let t_noise = Normal::new(0.0, params.noise_std).map_err(|e| Error::param("noise_std", e.to_string()))?;
    let h_noise =
        Normal::new(0.0, params.rh_noise_std).map_err(|e| Error::param("rh_noise_std", e.to_string()))?;

    // Start the residuals from their stationary distributions.
    let t_stat = params.noise_std / (1.0 - params.ar1 * params.ar1).sqrt();
    let h_stat = params.rh_noise_std / (1.0 - params.rh_ar1 * params.rh_ar1).sqrt();
    let mut t_res = t_stat * standard_normal(&mut t_rng);
    let mut h_res = h_stat * standard_normal(&mut h_rng);

    let mut temperature = Vec::with_capacity(n);
    let mut humidity = Vec::with_capacity(n);
    for i in 0..n {
        let day = grid.day_of_year(i);
        let hour = TimeGrid::hour_of_day(i) as f64;
        let seasonal = params.seasonal_amplitude * (2.0 * PI * day / 365.0 + params.seasonal_phase).sin();
        let diurnal = params.diurnal_amplitude * (2.0 * PI * hour / 24.0 + params.diurnal_phase).sin();
        if i > 0 {
            t_res = params.ar1 * t_res + t_noise.sample(&mut t_rng);
            h_res = params.rh_ar1 * h_res + h_noise.sample(&mut h_rng);
        }
        let t = params.mean + seasonal + diurnal + t_res;
        let rh = (params.rh_base - params.rh_coupling * (t - params.mean) + h_res).clamp(0.0, 100.0);
        temperature.push(t);
        humidity.push(rh);
    }
    Ok(EnvSeries {
        temperature,
        humidity,
        provenance: Provenance::Synthetic { seed: master_seed },
    })
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}

#[derive(Debug, Deserialize)]
struct EnvRow {
    timestamp: String,
    #[serde(rename = "T_degC")]
    t_degc: f64,
    #[serde(rename = "RH_pct")]
    rh_pct: f64,
}

/// Reads an hourly `timestamp,T_degC,RH_pct` CSV aligned with `grid`.
pub fn read_env_csv(path: &Path, grid: &TimeGrid) -> Result<EnvSeries> {
    let mut reader = csv::Reader::from_path(path)?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    let mut temperature = Vec::with_capacity(grid.len());
    let mut humidity = Vec::with_capacity(grid.len());
    for (row, rec) in reader.deserialize::<EnvRow>().enumerate() {
        let rec = rec?;
        if row >= grid.len() {
            return Err(malformed(format!("more than {} rows", grid.len())));
        }
        let expected = grid.timestamp(row)?;
        let ts = chrono::NaiveDateTime::parse_from_str(rec.timestamp.trim(), "%Y-%m-%dT%H:%M:%S")
            .or_else(|_| chrono::NaiveDateTime::parse_from_str(rec.timestamp.trim(), "%Y-%m-%dT%H:%M"))
            .map_err(|e| malformed(format!("row {row}: {e}")))?;
        if ts != expected {
            return Err(malformed(format!("row {row}: expected {expected}, found {ts}")));
        }
        if !(0.0..=100.0).contains(&rec.rh_pct) {
            return Err(malformed(format!("row {row}: RH {} outside [0, 100]", rec.rh_pct)));
        }
        temperature.push(rec.t_degc);
        humidity.push(rec.rh_pct);
    }
    if temperature.len() != grid.len() {
        return Err(malformed(format!("{} rows, grid has {}", temperature.len(), grid.len())));
    }
    Ok(EnvSeries {
        temperature,
        humidity,
        provenance: Provenance::ExternalFile,
    })
}

pub fn write_env_csv(path: &Path, grid: &TimeGrid, env: &EnvSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "T_degC", "RH_pct"])?;
    for i in 0..env.len() {
        let ts = grid.timestamp(i)?.format("%Y-%m-%dT%H:%M:%S").to_string();
        w.write_record([ts, env.temperature[i].to_string(), env.humidity[i].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Realizes the series configured in `params`.
pub fn realize(grid: &TimeGrid, params: &EnvParams, master_seed: u64) -> Result<EnvSeries> {
    params.validate()?;
    match &params.temp_source {
        TemperatureSource::Synthetic => synth_temperature(grid, &params.synth, master_seed),
        TemperatureSource::ExternalFile { path } => read_env_csv(path, grid),
    }
}

fn full_year(env: &EnvSeries, grid: &TimeGrid, year: i32) -> Result<std::ops::Range<usize>> {
    if env.len() != grid.len() {
        return Err(Error::LengthMismatch {
            left: env.len(),
            right: grid.len(),
        });
    }
    let range = grid.year_range(year);
    if range.len() != HOURS_PER_YEAR {
        return Err(Error::IncompleteYear {
            year,
            hours: range.len(),
            expected: HOURS_PER_YEAR,
        });
    }
    Ok(range)
}

/// Hours of calendar `year` with RH > 80 % and T > 0 °C.
pub fn time_of_wetness(env: &EnvSeries, grid: &TimeGrid, year: i32) -> Result<u32> {
    let range = full_year(env, grid, year)?;
    Ok(range
        .filter(|&i| env.humidity[i] > WET_RH_PCT && env.temperature[i] > 0.0)
        .count() as u32)
}

/// Yearly drivers of the corrosion law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YearlyAggregates {
    pub year: i32,
    /// h/year
    pub tow: f64,
    /// °C
    pub mean_temperature: f64,
    /// %
    pub mean_humidity: f64,
}

pub fn yearly_aggregates(env: &EnvSeries, grid: &TimeGrid, year: i32) -> Result<YearlyAggregates> {
    let range = full_year(env, grid, year)?;
    let n = range.len() as f64;
    let mean_temperature = env.temperature[range.clone()].iter().sum::<f64>() / n;
    let mean_humidity = env.humidity[range].iter().sum::<f64>() / n;
    Ok(YearlyAggregates {
        year,
        tow: time_of_wetness(env, grid, year)? as f64,
        mean_temperature,
        mean_humidity,
    })
}
