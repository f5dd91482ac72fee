//! Scenario configuration, sub-dataset definitions and per-acquisition
//! covariates.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::damage::{fast_schedule, slow_schedule, CorrosionDrivers, DamageSeries, DamageSpec, FastSchedule, FastVariant, SlowLevel};
use crate::dynamics::ExcitationParams;
use crate::environment::{self, youngs_modulus, EnvParams, EnvSeries};
use crate::error::{Error, Result};
use crate::faults::{plan_contamination, sample_acquisitions, FaultClass, FaultPlan, FaultPolicy};
use crate::grid::{GridSpec, TimeGrid};
use crate::load::{LiveLoadParams, LoadProcess, DEAD_LOAD};
use crate::structure::{BeamModel, SdofParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub grid: GridSpec,
    pub beam: BeamModel,
    pub load: LiveLoadParams,
    /// Permanent line load, kN/m.
    pub dead_load: f64,
    pub env: EnvParams,
    pub excitation: ExcitationParams,
    pub damage: DamageSpec,
    /// Fault policy of the sampled, contaminated sub-dataset.
    pub sampled_faults: FaultPolicy,
    /// Fault policy of the combined-damage sub-dataset.
    pub overlay_faults: FaultPolicy,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub n_workers: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            beam: BeamModel::default(),
            load: LiveLoadParams::default(),
            dead_load: DEAD_LOAD,
            env: EnvParams::default(),
            excitation: ExcitationParams::default(),
            damage: DamageSpec::default(),
            sampled_faults: FaultPolicy::sampled(),
            overlay_faults: FaultPolicy::overlay(),
            master_seed: 2020,
            n_workers: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.beam.validate()?;
        self.load.validate()?;
        self.env.validate()?;
        self.excitation.validate()?;
        self.damage.validate()?;
        self.sampled_faults.validate()?;
        self.overlay_faults.validate()?;
        if self.dead_load.is_nan() || self.dead_load <= 0.0 {
            return Err(Error::param("dead_load", "must be > 0"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// The nine sub-datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubDataset {
    D1,
    D21,
    D22,
    D23,
    D31,
    D32,
    D33,
    D4,
    D5,
}

impl SubDataset {
    pub const ALL: [SubDataset; 9] = [
        SubDataset::D1,
        SubDataset::D21,
        SubDataset::D22,
        SubDataset::D23,
        SubDataset::D31,
        SubDataset::D32,
        SubDataset::D33,
        SubDataset::D4,
        SubDataset::D5,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SubDataset::D1 => "D1",
            SubDataset::D21 => "D2.1",
            SubDataset::D22 => "D2.2",
            SubDataset::D23 => "D2.3",
            SubDataset::D31 => "D3.1",
            SubDataset::D32 => "D3.2",
            SubDataset::D33 => "D3.3",
            SubDataset::D4 => "D4",
            SubDataset::D5 => "D5",
        }
    }

    /// File-name suffix: sub-dataset digit plus alternative digit if any.
    pub fn suffix(self) -> &'static str {
        match self {
            SubDataset::D1 => "1",
            SubDataset::D21 => "21",
            SubDataset::D22 => "22",
            SubDataset::D23 => "23",
            SubDataset::D31 => "31",
            SubDataset::D32 => "32",
            SubDataset::D33 => "33",
            SubDataset::D4 => "4",
            SubDataset::D5 => "5",
        }
    }

    pub fn from_suffix(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|d| d.suffix() == s)
    }

    pub fn fast(self) -> Option<FastVariant> {
        match self {
            SubDataset::D21 => Some(FastVariant::SingleStep),
            SubDataset::D22 => Some(FastVariant::Monthly),
            SubDataset::D23 | SubDataset::D5 => Some(FastVariant::Geometric),
            _ => None,
        }
    }

    pub fn slow(self) -> Option<SlowLevel> {
        match self {
            SubDataset::D31 => Some(SlowLevel::Ageing),
            SubDataset::D32 => Some(SlowLevel::Accelerated),
            SubDataset::D33 | SubDataset::D5 => Some(SlowLevel::Severe),
            _ => None,
        }
    }

    pub fn is_contaminated(self) -> bool {
        matches!(self, SubDataset::D4 | SubDataset::D5)
    }

    /// Sub-dataset whose damage and excitation this one reuses.
    pub fn damage_source(self) -> SubDataset {
        match self {
            SubDataset::D4 => SubDataset::D1,
            other => other,
        }
    }
}

impl fmt::Display for SubDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SubDataset {
    type Err = Error;

    /// Accepts `D2.1`, `2.1` and `21` forms, case-insensitive.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches(['D', 'd']);
        Self::ALL
            .into_iter()
            .find(|d| d.code()[1..] == *t || d.suffix() == t)
            .ok_or_else(|| Error::Unknown {
                kind: "sub-dataset",
                value: s.to_owned(),
            })
    }
}

/// Declarative description of one sub-dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDatasetSpec {
    pub code: SubDataset,
    pub window: std::ops::Range<usize>,
    pub fast: Option<FastSchedule>,
    pub slow_level: Option<SlowLevel>,
    pub fault_policy: Option<FaultPolicy>,
    pub expected_count: usize,
}

/// A sub-dataset with its damage history, acquisition set and fault plan.
#[derive(Debug, Clone)]
pub struct SubDatasetRun {
    pub spec: SubDatasetSpec,
    pub damage: DamageSeries,
    /// Sorted acquisition indices.
    pub acquisitions: Vec<usize>,
    pub faults: FaultPlan,
}

/// Covariates of one acquisition; fixed for its whole record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateRecord {
    pub index: usize,
    /// °C
    pub temperature: f64,
    /// kN/m
    pub p_des: f64,
    /// m/s², human and traffic input standard deviations; known once the
    /// acquisition has been simulated.
    pub sigma_av: Option<(f64, f64)>,
    pub r_fast: f64,
    /// mm
    pub d_slow: f64,
    pub sfm: Option<FaultClass>,
    pub measurement_noise: bool,
}

/// Every upstream series realized for one configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: TimeGrid,
    pub env: EnvSeries,
    pub loads: LoadProcess,
    /// Index of the first damaged hour.
    pub onset: usize,
    pub drivers: CorrosionDrivers,
}

impl Scenario {
    pub fn realize(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grid = TimeGrid::from_spec(&config.grid)?;
        let env = environment::realize(&grid, &config.env, config.master_seed)?;
        let loads = LoadProcess::realize(&grid, &config.load, config.dead_load, config.master_seed)?;
        let onset = grid
            .index_of(config.damage.onset.and_hms_opt(0, 0, 0).unwrap())
            .ok_or_else(|| Error::param("damage.onset", "not on the time grid"))?;
        let year = config.damage.driver_year.unwrap_or(chrono::Datelike::year(&config.grid.start_date));
        let agg = environment::yearly_aggregates(&env, &grid, year)?;
        let drivers = CorrosionDrivers::from_aggregates(&config.damage.corrosion, &agg);
        Ok(Self {
            config,
            grid,
            env,
            loads,
            onset,
            drivers,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn spec(&self, code: SubDataset) -> Result<SubDatasetSpec> {
        let n = self.len();
        let window = if code == SubDataset::D1 { 0..n } else { self.onset..n };
        let fast = code
            .fast()
            .map(|v| fast_schedule(v, &self.grid, self.config.damage.onset))
            .transpose()?;
        let fault_policy = match code {
            SubDataset::D4 => Some(self.config.sampled_faults.clone()),
            SubDataset::D5 => Some(self.config.overlay_faults.clone()),
            _ => None,
        };
        let expected_count = match fault_policy.as_ref().and_then(|p| p.target_count) {
            Some(t) => t.min(window.len()),
            None => window.len(),
        };
        Ok(SubDatasetSpec {
            code,
            window,
            fast,
            slow_level: code.slow(),
            fault_policy,
            expected_count,
        })
    }

    pub fn damage(&self, spec: &SubDatasetSpec) -> Result<DamageSeries> {
        let n = self.len();
        let d_slow = match spec.slow_level {
            Some(level) => slow_schedule(
                level,
                &self.grid,
                self.onset,
                &self.config.damage.corrosion,
                &self.drivers,
                &self.config.damage.multipliers,
            )?,
            None => vec![0.0; n],
        };
        Ok(match &spec.fast {
            Some(f) => DamageSeries::compose(f, d_slow),
            None => DamageSeries {
                r_fast: vec![0.0; n],
                d_slow,
            },
        })
    }

    pub fn subdataset(&self, code: SubDataset) -> Result<SubDatasetRun> {
        let spec = self.spec(code)?;
        let damage = self.damage(&spec)?;
        let p = &self.config.excitation;
        let (acquisitions, faults) = match &spec.fault_policy {
            None => (spec.window.clone().collect(), FaultPlan::default()),
            Some(policy) => {
                let acq = match policy.target_count {
                    Some(t) => sample_acquisitions(spec.window.clone(), t, self.config.master_seed),
                    None => spec.window.clone().collect(),
                };
                let plan = plan_contamination(&acq, policy, p.n_samples(), p.fs, self.config.master_seed)?;
                (acq, plan)
            }
        };
        Ok(SubDatasetRun {
            spec,
            damage,
            acquisitions,
            faults,
        })
    }

    /// Young's modulus at hour `i`, MPa.
    pub fn modulus(&self, i: usize) -> Result<f64> {
        youngs_modulus(self.env.temperature[i], &self.config.env)
    }

    /// Equivalent oscillator at hour `i` under `damage`.
    pub fn sdof(&self, i: usize, damage: &DamageSeries) -> Result<SdofParams> {
        self.config
            .beam
            .sdof(self.modulus(i)?, self.loads.p_des[i], damage.d_slow[i], damage.r_fast[i])
    }

    /// Midspan deflection at hour `i` under `damage`, mm.
    pub fn deflection(&self, i: usize, damage: &DamageSeries) -> Result<f64> {
        self.config
            .beam
            .deflection(self.modulus(i)?, self.loads.p_des[i], damage.d_slow[i], damage.r_fast[i])
    }

    pub fn covariates_for(&self, i: usize, run: &SubDatasetRun) -> Result<CovariateRecord> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(CovariateRecord {
            index: i,
            temperature: self.env.temperature[i],
            p_des: self.loads.p_des[i],
            sigma_av: None,
            r_fast: run.damage.r_fast[i],
            d_slow: run.damage.d_slow[i],
            sfm: run.faults.get(i).map(|l| l.class()),
            measurement_noise: self.config.excitation.measurement_noise,
        })
    }
}
