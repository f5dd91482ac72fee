//! Probabilistic live load: a sustained Poisson square wave plus intermittent
//! Poisson spikes, combined with the dead load for the serviceability check.

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{TimeGrid, HOURS_PER_DAY, HOURS_PER_YEAR};
use crate::seed::{self, Stream};

/// Total dead load, kN/m.
pub const DEAD_LOAD: f64 = 28.72;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveLoadParams {
    /// Reference minimum influence area, m².
    pub a0: f64,
    /// Tributary area, m².
    pub area: f64,
    /// Influence-line shape factor.
    pub kappa: f64,
    /// Mean sustained intensity, kN/m².
    pub m_lt: f64,
    /// kN/m²
    pub sigma_v: f64,
    /// kN/m²
    pub sigma_u: f64,
    /// Mean time between sustained-load renewals, years.
    pub inv_lambda: f64,
    /// Mean intermittent intensity, kN/m².
    pub m_st: f64,
    /// kN/m²
    pub sigma_big_u: f64,
    /// Mean time between intermittent events, years.
    pub inv_nu: f64,
    /// Duration of each intermittent event, days.
    pub d_p: f64,
    pub sigma_lt_override: Option<f64>,
    pub sigma_st_override: Option<f64>,
    /// Beam span used to turn area intensity into line load, m.
    pub span: f64,
}

impl Default for LiveLoadParams {
    fn default() -> Self {
        Self {
            a0: 20.0,
            area: 30.0,
            kappa: 1.0,
            m_lt: 3.0,
            sigma_v: 0.15,
            sigma_u: 0.3,
            inv_lambda: 10.0,
            m_st: 0.3,
            sigma_big_u: 0.4,
            inv_nu: 0.2,
            d_p: 5.0,
            sigma_lt_override: Some(0.07),
            sigma_st_override: Some(0.03),
            span: 6.0,
        }
    }
}

impl LiveLoadParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a0", self.a0),
            ("area", self.area),
            ("m_lt", self.m_lt),
            ("sigma_v", self.sigma_v),
            ("sigma_u", self.sigma_u),
            ("inv_lambda", self.inv_lambda),
            ("m_st", self.m_st),
            ("sigma_U", self.sigma_big_u),
            ("inv_nu", self.inv_nu),
            ("d_p", self.d_p),
            ("span", self.span),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::param(name, format!("must be > 0, got {v}")));
            }
        }
        if self.kappa < 0.0 {
            return Err(Error::param("kappa", "must be ≥ 0"));
        }
        if self.area <= self.a0 {
            return Err(Error::param("area", "tributary area must exceed a0"));
        }
        for (name, v) in [("sigma_lt_override", self.sigma_lt_override), ("sigma_st_override", self.sigma_st_override)] {
            if let Some(v) = v {
                if v <= 0.0 {
                    return Err(Error::param(name, "must be > 0"));
                }
            }
        }
        Ok(())
    }

    /// Tributary width turning kN/m² into kN/m.
    pub fn tributary_width(&self) -> f64 {
        self.area / self.span
    }

    pub fn event_hours(&self) -> usize {
        (self.d_p * HOURS_PER_DAY as f64).round() as usize
    }
}

/// `sqrt(σ_v² + σ_u² κ A0/A)`, unless overridden.
pub fn sustained_std(params: &LiveLoadParams) -> f64 {
    params.sigma_lt_override.unwrap_or_else(|| {
        (params.sigma_v.powi(2) + params.sigma_u.powi(2) * params.kappa * params.a0 / params.area).sqrt()
    })
}

/// `sqrt(σ_U² κ A0/A)`, unless overridden.
pub fn intermittent_std(params: &LiveLoadParams) -> f64 {
    params
        .sigma_st_override
        .unwrap_or_else(|| (params.sigma_big_u.powi(2) * params.kappa * params.a0 / params.area).sqrt())
}

/// Shape and rate of the Gamma law with the given mean and std.
pub fn gamma_shape_rate(mean: f64, std: f64) -> Result<(f64, f64)> {
    if mean.is_nan() || mean <= 0.0 {
        return Err(Error::param("mean", "must be > 0"));
    }
    if std.is_nan() || std <= 0.0 {
        return Err(Error::param("std", "must be > 0"));
    }
    let var = std * std;
    Ok((mean * mean / var, mean / var))
}

fn gamma(mean: f64, std: f64) -> Result<Gamma<f64>> {
    let (shape, rate) = gamma_shape_rate(mean, std)?;
    Gamma::new(shape, 1.0 / rate).map_err(|e| Error::param("gamma", e.to_string()))
}

/// Draws the waiting time in hours for a process with mean `mean_years`;
/// infinite means never.
fn waiting_hours<R: Rng + ?Sized>(mean_years: f64, rng: &mut R) -> Result<f64> {
    if mean_years.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let exp = Exp::new(1.0 / (mean_years * HOURS_PER_YEAR as f64))
        .map_err(|e| Error::param("renewal rate", e.to_string()))?;
    Ok(exp.sample(rng))
}

/// One renewal of the sustained load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Renewal {
    /// First hour at which the intensity applies.
    pub start: usize,
    /// kN/m²
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SustainedRealization {
    pub renewals: Vec<Renewal>,
    /// kN/m² per hour.
    pub series: Vec<f64>,
}

/// Piecewise-constant Gamma intensities with exponential holding times.
pub fn realize_sustained(grid: &TimeGrid, params: &LiveLoadParams, master_seed: u64) -> Result<SustainedRealization> {
    params.validate()?;
    let n = grid.len();
    let law = gamma(params.m_lt, sustained_std(params))?;
    let mut rng = seed::rng(master_seed, Stream::SustainedLoad, 0, 0);
    let mut renewals = vec![Renewal {
        start: 0,
        intensity: law.sample(&mut rng),
    }];
    let mut t = 0.0;
    loop {
        t += waiting_hours(params.inv_lambda, &mut rng)?;
        let start = t.ceil();
        if !start.is_finite() || start >= n as f64 {
            break;
        }
        let start = start as usize;
        let intensity = law.sample(&mut rng);
        match renewals.last_mut() {
            // Two renewals inside one hour: the later one wins.
            Some(last) if last.start == start => last.intensity = intensity,
            _ => renewals.push(Renewal { start, intensity }),
        }
    }
    let mut series = vec![0.0; n];
    for (k, r) in renewals.iter().enumerate() {
        let end = renewals.get(k + 1).map_or(n, |next| next.start);
        series[r.start..end].fill(r.intensity);
    }
    Ok(SustainedRealization { renewals, series })
}

/// One intermittent event. The recorded duration is always the full
/// configured length even if the grid ends first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub start: usize,
    pub hours: usize,
    /// kN/m²
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntermittentRealization {
    pub events: Vec<SpikeEvent>,
    /// kN/m² per hour; overlapping events add.
    pub series: Vec<f64>,
}

pub fn realize_intermittent(
    grid: &TimeGrid,
    params: &LiveLoadParams,
    master_seed: u64,
) -> Result<IntermittentRealization> {
    params.validate()?;
    let n = grid.len();
    let law = gamma(params.m_st, intermittent_std(params))?;
    let hours = params.event_hours();
    let mut rng = seed::rng(master_seed, Stream::IntermittentLoad, 0, 0);
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        t += waiting_hours(params.inv_nu, &mut rng)?;
        let start = t.floor();
        if !start.is_finite() || start >= n as f64 {
            break;
        }
        events.push(SpikeEvent {
            start: start as usize,
            hours,
            intensity: law.sample(&mut rng),
        });
    }
    let mut series = vec![0.0; n];
    for e in &events {
        for v in &mut series[e.start..(e.start + e.hours).min(n)] {
            *v += e.intensity;
        }
    }
    Ok(IntermittentRealization { events, series })
}

/// Realized loads on the hourly grid, all in kN/m.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProcess {
    pub p_q_lt: Vec<f64>,
    pub p_q_st: Vec<f64>,
    pub p_g: f64,
    pub p_des: Vec<f64>,
}

/// Extremes and averages of a realized load history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadEnvelope {
    pub lt_max: f64,
    pub lt_min: f64,
    pub st_max: f64,
    pub st_min: f64,
    pub q_max: f64,
    pub q_min: f64,
    pub q_avg: f64,
    pub q_max_over_g: f64,
    pub q_min_over_g: f64,
    pub des_avg: f64,
}

/// Plausibility band for a three-year history around the reference
/// realization (max p_Q 19.11, min 11.51, avg 15.01 kN/m).
pub const Q_MAX_BAND: (f64, f64) = (16.0, 22.0);

impl LoadProcess {
    pub fn len(&self) -> usize {
        self.p_des.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_des.is_empty()
    }

    /// Live load p_Q = p_Q,lt + p_Q,st at hour `i`.
    pub fn live(&self, i: usize) -> f64 {
        self.p_q_lt[i] + self.p_q_st[i]
    }

    pub fn envelope(&self) -> LoadEnvelope {
        let fold = |v: &[f64]| {
            v.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
        };
        let (lt_min, lt_max) = fold(&self.p_q_lt);
        let (st_min, st_max) = fold(&self.p_q_st);
        let q: Vec<f64> = (0..self.len()).map(|i| self.live(i)).collect();
        let (q_min, q_max) = fold(&q);
        let n = self.len() as f64;
        LoadEnvelope {
            lt_max,
            lt_min,
            st_max,
            st_min,
            q_max,
            q_min,
            q_avg: q.iter().sum::<f64>() / n,
            q_max_over_g: q_max / self.p_g,
            q_min_over_g: q_min / self.p_g,
            des_avg: self.p_des.iter().sum::<f64>() / n,
        }
    }

    /// Realizes both components and converts them to line loads.
    pub fn realize(grid: &TimeGrid, params: &LiveLoadParams, p_g: f64, master_seed: u64) -> Result<Self> {
        let width = params.tributary_width();
        let lt = realize_sustained(grid, params, master_seed)?;
        let st = realize_intermittent(grid, params, master_seed)?;
        let to_line = |v: Vec<f64>| v.into_iter().map(|x| x * width).collect::<Vec<_>>();
        combine_sls(p_g, to_line(lt.series), to_line(st.series))
    }
}

/// `p_des = 1.0 p_G + 1.0 (p_Q,lt + p_Q,st)`.
pub fn combine_sls(p_g: f64, lt: Vec<f64>, st: Vec<f64>) -> Result<LoadProcess> {
    if lt.len() != st.len() {
        return Err(Error::LengthMismatch {
            left: lt.len(),
            right: st.len(),
        });
    }
    let p_des = lt.iter().zip(&st).map(|(a, b)| 1.0 * p_g + 1.0 * (a + b)).collect();
    Ok(LoadProcess {
        p_q_lt: lt,
        p_q_st: st,
        p_g,
        p_des,
    })
}

/// Partial factors of the ultimate limit state combination.
pub const GAMMA_G1: f64 = 1.3;
pub const GAMMA_G2: f64 = 1.5;
pub const GAMMA_Q: f64 = 1.5;

/// Structural dead load (beam + slab) and non-structural dead load, kN/m.
pub const DEAD_LOAD_STRUCTURAL: f64 = 22.72;
pub const DEAD_LOAD_NON_STRUCTURAL: f64 = 6.0;

/// Fundamental ULS combination for line loads, kN/m.
pub fn combine_uls(p_g1: f64, p_g2: f64, p_q: f64) -> f64 {
    GAMMA_G1 * p_g1 + GAMMA_G2 * p_g2 + GAMMA_Q * p_q
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn grid3() -> TimeGrid {
        TimeGrid::build(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 3).unwrap()
    }

    fn formula_params() -> LiveLoadParams {
        LiveLoadParams {
            sigma_lt_override: None,
            sigma_st_override: None,
            ..LiveLoadParams::default()
        }
    }

    #[test]
    fn sustained_std_formula() {
        // sqrt(0.0225 + 0.09·2/3)
        assert!((sustained_std(&formula_params()) - 0.2872281).abs() < 1e-6);
        let k0 = LiveLoadParams {
            kappa: 0.0,
            ..formula_params()
        };
        assert_eq!(sustained_std(&k0), 0.15);
        assert_eq!(sustained_std(&LiveLoadParams::default()), 0.07);
    }

    #[test]
    fn intermittent_std_formula() {
        // sqrt(0.16·2/3)
        assert!((intermittent_std(&formula_params()) - 0.3265986).abs() < 1e-6);
        let k0 = LiveLoadParams {
            kappa: 0.0,
            ..formula_params()
        };
        assert_eq!(intermittent_std(&k0), 0.0);
        assert_eq!(intermittent_std(&LiveLoadParams::default()), 0.03);
    }

    #[test]
    fn gamma_parameters() {
        let (a, b) = gamma_shape_rate(3.0, 0.07).unwrap();
        assert!((a - 9.0 / 0.0049).abs() < 1e-9);
        assert!((b - 3.0 / 0.0049).abs() < 1e-9);
        assert!((a - 1836.7347).abs() < 1e-3 && (b - 612.2449).abs() < 1e-3);
        assert_eq!(gamma_shape_rate(1.0, 1.0).unwrap(), (1.0, 1.0));
        assert!(gamma_shape_rate(0.0, 1.0).is_err());
        assert!(gamma_shape_rate(1.0, -1.0).is_err());
    }

    #[test]
    fn infinite_renewal_holds_one_draw() {
        let p = LiveLoadParams {
            inv_lambda: f64::INFINITY,
            ..LiveLoadParams::default()
        };
        let r = realize_sustained(&grid3(), &p, 1).unwrap();
        assert_eq!(r.renewals.len(), 1);
        assert!(r.series.iter().all(|&x| x == r.series[0]));
    }

    #[test]
    fn infinite_interarrival_is_silent() {
        let p = LiveLoadParams {
            inv_nu: f64::INFINITY,
            ..LiveLoadParams::default()
        };
        let r = realize_intermittent(&grid3(), &p, 1).unwrap();
        assert!(r.events.is_empty());
        assert!(r.series.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn events_last_five_days() {
        let g = grid3();
        for seed in 0..20 {
            let r = realize_intermittent(&g, &LiveLoadParams::default(), seed).unwrap();
            for e in &r.events {
                assert_eq!(e.hours, 120);
                assert!(e.intensity >= 0.0);
            }
            // Isolated events that end inside the grid form runs of exactly 120 nonzero hours.
            for (k, e) in r.events.iter().enumerate() {
                let prev_end = if k == 0 { 0 } else { r.events[k - 1].start + 120 };
                let next_start = r.events.get(k + 1).map_or(usize::MAX, |n| n.start);
                if e.start > prev_end && e.start + 120 < next_start && e.start + 120 < g.len() {
                    let run = &r.series[e.start..e.start + 120];
                    assert!(run.iter().all(|&x| x > 0.0));
                    assert_eq!(r.series[e.start + 120], 0.0);
                    if e.start > 0 {
                        assert_eq!(r.series[e.start - 1], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn sls_combination() {
        let p = combine_sls(DEAD_LOAD, vec![15.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!((p.p_des[0] - 43.72).abs() < 1e-12);
        assert_eq!(p.p_des[1], DEAD_LOAD);
        assert!(matches!(combine_sls(1.0, vec![0.0], vec![]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn uls_combination_reproduces_reference_loads() {
        assert!((combine_uls(DEAD_LOAD_STRUCTURAL, DEAD_LOAD_NON_STRUCTURAL, 15.0) - 61.04).abs() < 0.005);
        assert!((combine_uls(DEAD_LOAD_STRUCTURAL, DEAD_LOAD_NON_STRUCTURAL, 19.11) - 67.20).abs() < 0.005);
        assert!((DEAD_LOAD_STRUCTURAL + DEAD_LOAD_NON_STRUCTURAL - DEAD_LOAD).abs() < 1e-12);
    }

    #[test]
    fn realized_history_is_plausible() {
        let p = LoadProcess::realize(&grid3(), &LiveLoadParams::default(), DEAD_LOAD, 2020).unwrap();
        let env = p.envelope();
        assert!(env.st_min == 0.0);
        assert!(env.q_avg > 13.0 && env.q_avg < 17.0, "{env:?}");
        for i in 0..p.len() {
            assert_eq!(p.p_des[i], DEAD_LOAD + p.live(i));
        }
        log::info!("load envelope {env:?}");
    }

    #[test]
    fn validation() {
        let bad = LiveLoadParams {
            area: 10.0,
            ..LiveLoadParams::default()
        };
        assert!(bad.validate().is_err());
        let bad = LiveLoadParams {
            m_lt: 0.0,
            ..LiveLoadParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
