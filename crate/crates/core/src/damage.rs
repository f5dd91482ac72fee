//! FAST (stepwise stiffness loss) and SLOW (uniform corrosion) damage
//! schedules on the acquisition grid.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::environment::YearlyAggregates;
use crate::error::{Error, Result};
use crate::grid::{TimeGrid, HOURS_PER_YEAR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FastVariant {
    /// One 10 % step.
    #[serde(rename = "2.1")]
    SingleStep,
    /// 1 % at the start of each of 18 months.
    #[serde(rename = "2.2")]
    Monthly,
    /// Doubling steps 1 % → 32 % every three months.
    #[serde(rename = "2.3")]
    Geometric,
}

impl FastVariant {
    pub const ALL: [FastVariant; 3] = [FastVariant::SingleStep, FastVariant::Monthly, FastVariant::Geometric];

    pub fn step_count(self) -> usize {
        match self {
            FastVariant::SingleStep => 1,
            FastVariant::Monthly => 18,
            FastVariant::Geometric => 6,
        }
    }
}

impl FromStr for FastVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2.1" => Ok(FastVariant::SingleStep),
            "2.2" => Ok(FastVariant::Monthly),
            "2.3" => Ok(FastVariant::Geometric),
            _ => Err(Error::Unknown {
                kind: "FAST variant",
                value: s.to_owned(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FastStep {
    pub onset: usize,
    /// Cumulative decay rate from `onset` on.
    pub rate: f64,
}

/// Right-continuous step function of the stiffness decay rate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FastSchedule {
    pub steps: Vec<FastStep>,
}

impl FastSchedule {
    pub fn new(steps: Vec<FastStep>) -> Result<Self> {
        let s = Self { steps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let mut prev: Option<FastStep> = None;
        for step in &self.steps {
            if !(0.0..1.0).contains(&step.rate) {
                return Err(Error::InvalidDecayRate(step.rate));
            }
            if let Some(p) = prev {
                if step.onset <= p.onset {
                    return Err(Error::param("fast onsets", "must be strictly increasing"));
                }
                if step.rate <= p.rate {
                    return Err(Error::param("fast rates", "must be strictly increasing"));
                }
            }
            prev = Some(*step);
        }
        Ok(())
    }

    pub fn rate_at(&self, i: usize) -> f64 {
        let k = self.steps.partition_point(|s| s.onset <= i);
        if k == 0 {
            0.0
        } else {
            self.steps[k - 1].rate
        }
    }

    pub fn series(&self, n: usize) -> Vec<f64> {
        (0..n).map(|i| self.rate_at(i)).collect()
    }

    pub fn final_rate(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.rate)
    }
}

pub fn fast_schedule(variant: FastVariant, grid: &TimeGrid, onset: NaiveDate) -> Result<FastSchedule> {
    let months = grid.month_starts(onset, 18);
    if months.len() < 18 {
        return Err(Error::param("grid", "does not cover the 18-month damage window"));
    }
    let steps = match variant {
        FastVariant::SingleStep => vec![FastStep {
            onset: months[0],
            rate: 0.10,
        }],
        FastVariant::Monthly => months
            .iter()
            .enumerate()
            .map(|(k, &onset)| FastStep {
                onset,
                rate: 0.01 * (k + 1) as f64,
            })
            .collect(),
        FastVariant::Geometric => months
            .iter()
            .step_by(3)
            .enumerate()
            .map(|(k, &onset)| FastStep {
                onset,
                rate: 0.01 * f64::from(1u32 << k),
            })
            .collect(),
    };
    FastSchedule::new(steps)
}

/// Coefficients and corrosivity inputs of the dose-response law
/// `d = A t^B (TOW/C)^D (1 + SO2/E)^F (1 + Cl/G)^H exp(J (T + T0))`, in µm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorrosionParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub j: f64,
    pub t0: f64,
    /// µg/m³
    pub so2: f64,
    /// Chloride deposition, mg/(m²·day).
    pub cl: f64,
    /// h/year; `None` takes the time of wetness from the environment.
    pub tow: Option<f64>,
    /// °C; `None` takes the yearly mean temperature from the environment.
    pub temperature: Option<f64>,
    /// When set, `a` is replaced by the value that gives this depth (µm)
    /// after one year at multiplier 1.
    pub calibrate_to: Option<f64>,
}

impl Default for CorrosionParams {
    fn default() -> Self {
        Self {
            a: 13.4,
            b: 1.0,
            c: 3800.0,
            d: 0.46,
            e: 25.6,
            f: 0.62,
            g: 50.0,
            h: 0.34,
            j: 0.0205,
            t0: 20.0,
            so2: 17.5,
            cl: 1.0,
            tow: None,
            temperature: None,
            calibrate_to: Some(47.03),
        }
    }
}

/// Drivers evaluated once and held fixed over the exposure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrosionDrivers {
    /// h/year
    pub tow: f64,
    /// °C
    pub temperature: f64,
}

impl CorrosionDrivers {
    pub fn from_aggregates(params: &CorrosionParams, agg: &YearlyAggregates) -> Self {
        Self {
            tow: params.tow.unwrap_or(agg.tow),
            temperature: params.temperature.unwrap_or(agg.mean_temperature),
        }
    }
}

impl CorrosionParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("corrosion.a", self.a),
            ("corrosion.b", self.b),
            ("corrosion.c", self.c),
            ("corrosion.e", self.e),
            ("corrosion.g", self.g),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.so2 < 0.0 || self.cl < 0.0 {
            return Err(Error::param("corrosivity", "concentrations must be ≥ 0"));
        }
        if let Some(target) = self.calibrate_to {
            if target.is_nan() || target <= 0.0 {
                return Err(Error::param("calibrate_to", "must be > 0"));
            }
        }
        Ok(())
    }

    /// Everything but `A t^B`.
    fn environment_factor(&self, drivers: &CorrosionDrivers) -> f64 {
        (drivers.tow / self.c).powf(self.d)
            * (1.0 + self.so2 / self.e).powf(self.f)
            * (1.0 + self.cl / self.g).powf(self.h)
            * (self.j * (drivers.temperature + self.t0)).exp()
    }

    /// The effective `A` after optional calibration.
    pub fn effective_a(&self, drivers: &CorrosionDrivers) -> Result<f64> {
        match self.calibrate_to {
            None => Ok(self.a),
            Some(target) => {
                let factor = self.environment_factor(drivers);
                if !(factor.is_finite() && factor > 0.0) {
                    return Err(Error::param(
                        "corrosion drivers",
                        "cannot calibrate with a zero time of wetness",
                    ));
                }
                Ok(target / factor)
            }
        }
    }
}

/// Corrosion depth in µm after `t_years` of exposure.
pub fn corrosion_depth(t_years: f64, params: &CorrosionParams, drivers: &CorrosionDrivers, multiplier: f64) -> Result<f64> {
    if t_years.is_nan() || t_years < 0.0 {
        return Err(Error::param("t_exposure", format!("must be ≥ 0, got {t_years}")));
    }
    if multiplier.is_nan() || multiplier <= 0.0 {
        return Err(Error::param("multiplier", "must be > 0"));
    }
    if t_years == 0.0 {
        return Ok(0.0);
    }
    let a = params.effective_a(drivers)?;
    Ok(multiplier * a * t_years.powf(params.b) * params.environment_factor(drivers))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlowLevel {
    /// Natural ageing.
    #[serde(rename = "0")]
    Ageing,
    /// Accelerated corrosion, moderate.
    #[serde(rename = "1")]
    Accelerated,
    /// Accelerated corrosion, severe.
    #[serde(rename = "3")]
    Severe,
}

impl SlowLevel {
    pub const ALL: [SlowLevel; 3] = [SlowLevel::Ageing, SlowLevel::Accelerated, SlowLevel::Severe];

    pub fn code(self) -> u8 {
        match self {
            SlowLevel::Ageing => 0,
            SlowLevel::Accelerated => 1,
            SlowLevel::Severe => 3,
        }
    }
}

impl FromStr for SlowLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(SlowLevel::Ageing),
            "1" => Ok(SlowLevel::Accelerated),
            "3" => Ok(SlowLevel::Severe),
            _ => Err(Error::Unknown {
                kind: "corrosion level",
                value: s.to_owned(),
            }),
        }
    }
}

impl fmt::Display for SlowLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lev.{}", self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelMultipliers {
    pub ageing: f64,
    pub accelerated: f64,
    pub severe: f64,
}

impl Default for LevelMultipliers {
    fn default() -> Self {
        Self {
            ageing: 1.0,
            accelerated: 10.0,
            severe: 20.0,
        }
    }
}

impl LevelMultipliers {
    pub fn get(&self, level: SlowLevel) -> f64 {
        match level {
            SlowLevel::Ageing => self.ageing,
            SlowLevel::Accelerated => self.accelerated,
            SlowLevel::Severe => self.severe,
        }
    }
}

/// Damage configuration shared by all sub-datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DamageSpec {
    /// First FAST step and start of the corrosion exposure clock.
    pub onset: NaiveDate,
    pub corrosion: CorrosionParams,
    pub multipliers: LevelMultipliers,
    /// Calendar year whose aggregates drive the corrosion law.
    pub driver_year: Option<i32>,
}

impl Default for DamageSpec {
    fn default() -> Self {
        Self {
            onset: NaiveDate::from_ymd_opt(2021, 7, 1).unwrap(),
            corrosion: CorrosionParams::default(),
            multipliers: LevelMultipliers::default(),
            driver_year: None,
        }
    }
}

impl DamageSpec {
    pub fn validate(&self) -> Result<()> {
        self.corrosion.validate()?;
        for level in SlowLevel::ALL {
            let m = self.multipliers.get(level);
            if m.is_nan() || m <= 0.0 {
                return Err(Error::param("multipliers", format!("{level} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Corrosion depth in mm per hour: zero before `exposure_start`, then the
/// dose-response law with exposure time `(i − start) / 8760` years.
pub fn slow_schedule(
    level: SlowLevel,
    grid: &TimeGrid,
    exposure_start: usize,
    params: &CorrosionParams,
    drivers: &CorrosionDrivers,
    multipliers: &LevelMultipliers,
) -> Result<Vec<f64>> {
    let multiplier = multipliers.get(level);
    (0..grid.len())
        .map(|i| {
            if i < exposure_start {
                Ok(0.0)
            } else {
                let t = (i - exposure_start) as f64 / HOURS_PER_YEAR as f64;
                Ok(corrosion_depth(t, params, drivers, multiplier)? * 1e-3)
            }
        })
        .collect()
}

/// Per-hour damage state of one sub-dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DamageSeries {
    pub r_fast: Vec<f64>,
    /// mm
    pub d_slow: Vec<f64>,
}

impl DamageSeries {
    pub fn undamaged(n: usize) -> Self {
        Self {
            r_fast: vec![0.0; n],
            d_slow: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.r_fast.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_fast.is_empty()
    }

    /// Pointwise composition of a FAST and a SLOW schedule.
    pub fn compose(fast: &FastSchedule, d_slow: Vec<f64>) -> Self {
        Self {
            r_fast: fast.series(d_slow.len()),
            d_slow,
        }
    }
}
