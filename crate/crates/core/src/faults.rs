//! Sensor faults and malfunctions: injectors, contamination planning and
//! per-class detection statistics.
//!
//! Windows are half-open sample ranges `[start, end)`. Drift and cable
//! detachment use time measured from the window start.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::signal::{mean, rms, welch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultClass {
    #[serde(rename = "D")]
    Drift,
    #[serde(rename = "B")]
    Bias,
    #[serde(rename = "S")]
    Spikes,
    #[serde(rename = "G")]
    Gain,
    #[serde(rename = "N")]
    Noise,
    #[serde(rename = "M")]
    Missing,
    #[serde(rename = "C_temp")]
    CableTemporary,
    #[serde(rename = "C_perm")]
    CablePermanent,
}

impl FaultClass {
    pub const ALL: [FaultClass; 8] = [
        FaultClass::Drift,
        FaultClass::Bias,
        FaultClass::Spikes,
        FaultClass::Gain,
        FaultClass::Noise,
        FaultClass::Missing,
        FaultClass::CableTemporary,
        FaultClass::CablePermanent,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FaultClass::Drift => "D",
            FaultClass::Bias => "B",
            FaultClass::Spikes => "S",
            FaultClass::Gain => "G",
            FaultClass::Noise => "N",
            FaultClass::Missing => "M",
            FaultClass::CableTemporary => "C_temp",
            FaultClass::CablePermanent => "C_perm",
        }
    }

    /// Spikes and temporary detachment hit a single acquisition; every other
    /// class persists over a run of consecutive acquisitions.
    pub fn is_prolonged(self) -> bool {
        !matches!(self, FaultClass::Spikes | FaultClass::CableTemporary)
    }
}

impl fmt::Display for FaultClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FaultClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FaultClass::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "fault class",
                value: s.to_owned(),
            })
    }
}

/// Closed interval `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(Error::param(name, "need finite min ≤ max"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultRanges {
    /// m/s²
    pub drift: Range,
    /// m/s²
    pub bias: Range,
    /// m/s²
    pub spike_amplitude: Range,
    /// Spikes per acquisition, as multiples of `fs`.
    pub spike_count_fs: Range,
    pub gain: Range,
    /// m/s²
    pub noise: Range,
    /// Gap start as a fraction of the record.
    pub missing_start: Range,
    /// m/s²
    pub cable_amplitude: Range,
    /// Hz
    pub cable_frequency: Range,
    /// 1/s
    pub cable_decay: Range,
    /// s
    pub cable_temporary_duration: Range,
}

impl Default for FaultRanges {
    fn default() -> Self {
        Self {
            drift: Range::new(1e-3, 2e-3),
            bias: Range::new(1.2, 1.7),
            spike_amplitude: Range::new(5e-3, 5e-2),
            spike_count_fs: Range::new(0.1, 0.2),
            gain: Range::new(1.1, 3.1),
            noise: Range::new(1e-5, 1e-3),
            missing_start: Range::new(0.2, 0.8),
            cable_amplitude: Range::new(0.05, 0.2),
            cable_frequency: Range::new(0.5, 1.5),
            cable_decay: Range::new(0.02, 0.05),
            cable_temporary_duration: Range::new(10.0, 60.0),
        }
    }
}

impl FaultRanges {
    pub fn validate(&self) -> Result<()> {
        self.drift.validate("drift")?;
        self.bias.validate("bias")?;
        self.spike_amplitude.validate("spike_amplitude")?;
        self.spike_count_fs.validate("spike_count_fs")?;
        self.gain.validate("gain")?;
        self.noise.validate("noise")?;
        self.missing_start.validate("missing_start")?;
        self.cable_amplitude.validate("cable_amplitude")?;
        self.cable_frequency.validate("cable_frequency")?;
        self.cable_decay.validate("cable_decay")?;
        self.cable_temporary_duration.validate("cable_temporary_duration")?;
        if self.missing_start.min < 0.0 || self.missing_start.max > 1.0 {
            return Err(Error::param("missing_start", "must lie in [0, 1]"));
        }
        if self.noise.min < 0.0 || self.spike_count_fs.min < 0.0 || self.cable_temporary_duration.min < 0.0 {
            return Err(Error::param("fault ranges", "noise, spike count and duration must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultPolicy {
    pub classes: Vec<FaultClass>,
    /// Upper bound on the contaminated share of the sampled acquisitions.
    pub fraction: f64,
    /// Acquisitions drawn from the window; `None` keeps all of them.
    pub target_count: Option<usize>,
    /// Run length of prolonged faults, in acquisitions.
    pub run_length: (usize, usize),
    pub ranges: FaultRanges,
}

impl Default for FaultPolicy {
    fn default() -> Self {
        Self {
            classes: FaultClass::ALL.to_vec(),
            fraction: 0.5,
            target_count: Some(6600),
            run_length: (5, 25),
            ranges: FaultRanges::default(),
        }
    }
}

impl FaultPolicy {
    /// Sampled corpus with at most half of it contaminated.
    pub fn sampled() -> Self {
        Self::default()
    }

    /// Whole window with 30 % contaminated.
    pub fn overlay() -> Self {
        Self {
            fraction: 0.3,
            target_count: None,
            ..Self::default()
        }
    }

    pub fn clean() -> Self {
        Self {
            fraction: 0.0,
            target_count: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::param("fraction", "must lie in [0, 1]"));
        }
        let (lo, hi) = self.run_length;
        if lo == 0 || lo > hi {
            return Err(Error::param("run_length", "need 1 ≤ min ≤ max"));
        }
        let mut seen = self.classes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.classes.len() {
            return Err(Error::param("classes", "duplicate fault class"));
        }
        self.ranges.validate()
    }
}

/// Parameters of one contaminated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class")]
pub enum FaultParams {
    #[serde(rename = "D")]
    Drift { s: f64 },
    #[serde(rename = "B")]
    Bias { s: f64 },
    #[serde(rename = "S")]
    Spikes { amplitude: f64, positions: Vec<usize> },
    #[serde(rename = "G")]
    Gain { s: f64 },
    #[serde(rename = "N")]
    Noise { s: f64 },
    #[serde(rename = "M")]
    Missing,
    #[serde(rename = "C_temp")]
    CableTemporary { amplitude: f64, frequency: f64, decay: f64 },
    #[serde(rename = "C_perm")]
    CablePermanent { amplitude: f64, frequency: f64, decay: f64 },
}

impl FaultParams {
    pub fn class(&self) -> FaultClass {
        match self {
            FaultParams::Drift { .. } => FaultClass::Drift,
            FaultParams::Bias { .. } => FaultClass::Bias,
            FaultParams::Spikes { .. } => FaultClass::Spikes,
            FaultParams::Gain { .. } => FaultClass::Gain,
            FaultParams::Noise { .. } => FaultClass::Noise,
            FaultParams::Missing => FaultClass::Missing,
            FaultParams::CableTemporary { .. } => FaultClass::CableTemporary,
            FaultParams::CablePermanent { .. } => FaultClass::CablePermanent,
        }
    }

    /// Compact `key=value` list without commas.
    pub fn summary(&self) -> String {
        match self {
            FaultParams::Drift { s } | FaultParams::Bias { s } | FaultParams::Gain { s } | FaultParams::Noise { s } => {
                format!("s={s}")
            }
            FaultParams::Spikes { amplitude, positions } => format!("s={amplitude};count={}", positions.len()),
            FaultParams::Missing => "-".to_owned(),
            FaultParams::CableTemporary {
                amplitude,
                frequency,
                decay,
            }
            | FaultParams::CablePermanent {
                amplitude,
                frequency,
                decay,
            } => format!("s={amplitude};f={frequency};lambda={decay}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultLabel {
    /// Acquisition index on the global grid.
    pub index: usize,
    pub params: FaultParams,
    /// First affected sample.
    pub t_start: usize,
    /// One past the last affected sample.
    pub t_end: usize,
}

impl FaultLabel {
    pub fn class(&self) -> FaultClass {
        self.params.class()
    }

    pub fn window(&self) -> std::ops::Range<usize> {
        self.t_start..self.t_end
    }
}

fn check_window(a: &[f64], w: &std::ops::Range<usize>) -> Result<()> {
    if w.start > w.end || w.end > a.len() {
        return Err(Error::WindowOutOfBounds {
            start: w.start,
            end: w.end,
            len: a.len(),
        });
    }
    Ok(())
}

/// `a + s·exp(−τ / (l_s/10)) + s`, τ in seconds from the window start.
pub fn inject_drift(a: &mut [f64], s: f64, window: std::ops::Range<usize>, fs: f64) -> Result<()> {
    check_window(a, &window)?;
    let tau_c = a.len() as f64 / fs / 10.0;
    let start = window.start;
    for k in window {
        let tau = (k - start) as f64 / fs;
        a[k] += s * (-tau / tau_c).exp() + s;
    }
    Ok(())
}

pub fn inject_bias(a: &mut [f64], s: f64, window: std::ops::Range<usize>) -> Result<()> {
    check_window(a, &window)?;
    a[window].iter_mut().for_each(|v| *v += s);
    Ok(())
}

pub fn inject_spikes(a: &mut [f64], amplitude: f64, positions: &[usize]) -> Result<()> {
    if let Some(&p) = positions.iter().find(|&&p| p >= a.len()) {
        return Err(Error::WindowOutOfBounds {
            start: p,
            end: p + 1,
            len: a.len(),
        });
    }
    for &p in positions {
        a[p] += amplitude;
    }
    Ok(())
}

pub fn inject_gain(a: &mut [f64], s: f64, window: std::ops::Range<usize>) -> Result<()> {
    check_window(a, &window)?;
    a[window].iter_mut().for_each(|v| *v *= s);
    Ok(())
}

pub fn inject_noise<R: Rng>(a: &mut [f64], s: f64, window: std::ops::Range<usize>, rng: &mut R) -> Result<()> {
    check_window(a, &window)?;
    if s == 0.0 {
        return Ok(());
    }
    let n = Normal::new(0.0, s).map_err(|e| Error::param("noise", e.to_string()))?;
    a[window].iter_mut().for_each(|v| *v += n.sample(rng));
    Ok(())
}

pub fn inject_missing(a: &mut [f64], window: std::ops::Range<usize>) -> Result<()> {
    check_window(a, &window)?;
    a[window].iter_mut().for_each(|v| *v = f64::NAN);
    Ok(())
}

/// Replaces the window with `s·sin(2π f τ)·exp(−λ τ)`.
pub fn inject_cable_detachment(
    a: &mut [f64],
    amplitude: f64,
    frequency: f64,
    decay: f64,
    window: std::ops::Range<usize>,
    fs: f64,
) -> Result<()> {
    check_window(a, &window)?;
    let start = window.start;
    for k in window {
        let tau = (k - start) as f64 / fs;
        a[k] = amplitude * (2.0 * PI * frequency * tau).sin() * (-decay * tau).exp();
    }
    Ok(())
}

/// Applies a label to a clean record. `master_seed` feeds the noise draws.
pub fn apply(a: &mut [f64], label: &FaultLabel, fs: f64, master_seed: u64) -> Result<()> {
    let w = label.window();
    match &label.params {
        FaultParams::Drift { s } => inject_drift(a, *s, w, fs),
        FaultParams::Bias { s } => inject_bias(a, *s, w),
        FaultParams::Spikes { amplitude, positions } => inject_spikes(a, *amplitude, positions),
        FaultParams::Gain { s } => inject_gain(a, *s, w),
        FaultParams::Noise { s } => {
            let mut rng = seed::rng(master_seed, Stream::FaultApply, label.index as u64, 0);
            inject_noise(a, *s, w, &mut rng)
        }
        FaultParams::Missing => inject_missing(a, w),
        FaultParams::CableTemporary {
            amplitude,
            frequency,
            decay,
        }
        | FaultParams::CablePermanent {
            amplitude,
            frequency,
            decay,
        } => inject_cable_detachment(a, *amplitude, *frequency, *decay, w, fs),
    }
}

/// Uniformly samples `target` distinct indices from `window`, sorted.
pub fn sample_acquisitions(window: std::ops::Range<usize>, target: usize, master_seed: u64) -> Vec<usize> {
    let n = window.len();
    let target = target.min(n);
    let mut rng = seed::rng(master_seed, Stream::Sampling, window.start as u64, 0);
    let mut picked: Vec<usize> = sample(&mut rng, n, target).into_iter().map(|k| window.start + k).collect();
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FaultPlan {
    /// Sorted by acquisition index, at most one label per acquisition.
    pub labels: Vec<FaultLabel>,
}

impl FaultPlan {
    pub fn get(&self, index: usize) -> Option<&FaultLabel> {
        self.labels
            .binary_search_by_key(&index, |l| l.index)
            .ok()
            .map(|k| &self.labels[k])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn class_counts(&self) -> Vec<(FaultClass, usize)> {
        FaultClass::ALL
            .into_iter()
            .map(|c| (c, self.labels.iter().filter(|l| l.class() == c).count()))
            .collect()
    }
}

struct Run {
    class: FaultClass,
    len: usize,
}

/// Assigns faults to positions of `corpus` (sorted acquisition indices).
/// Each class gets an equal share of `fraction × corpus.len()`; prolonged
/// classes fill it with runs of consecutive corpus entries.
pub fn plan_contamination(corpus: &[usize], policy: &FaultPolicy, n_samples: usize, fs: f64, master_seed: u64) -> Result<FaultPlan> {
    policy.validate()?;
    let budget = (policy.fraction * corpus.len() as f64).floor() as usize;
    if budget == 0 || policy.classes.is_empty() {
        return Ok(FaultPlan::default());
    }
    let per_class = budget / policy.classes.len();
    let (run_min, run_max) = policy.run_length;
    if policy.classes.iter().any(|c| c.is_prolonged()) && per_class < run_min {
        return Err(Error::InfeasiblePolicy(format!(
            "{per_class} acquisitions per class cannot hold a run of {run_min}"
        )));
    }

    let mut rng = seed::rng(master_seed, Stream::FaultPlan, corpus.first().copied().unwrap_or(0) as u64, 0);
    let mut runs = Vec::new();
    for &class in &policy.classes {
        if class.is_prolonged() {
            let mut left = per_class;
            while left >= run_min {
                let len = rng.random_range(run_min..=run_max.min(left));
                runs.push(Run { class, len });
                left -= len;
            }
        } else {
            runs.extend((0..per_class).map(|_| Run { class, len: 1 }));
        }
    }
    // Random order, then uniformly random gaps between consecutive runs.
    for k in (1..runs.len()).rev() {
        runs.swap(k, rng.random_range(0..=k));
    }
    let occupied: usize = runs.iter().map(|r| r.len).sum();
    let free = corpus.len() - occupied;
    let mut slots: Vec<usize> = sample(&mut rng, free + runs.len(), runs.len()).into_vec();
    slots.sort_unstable();

    let mut labels = Vec::with_capacity(occupied);
    let mut before = 0;
    for (j, (run, slot)) in runs.iter().zip(&slots).enumerate() {
        let first = slot - j + before;
        before += run.len;
        let members = &corpus[first..first + run.len];
        labels.extend(run_labels(run.class, members, &policy.ranges, n_samples, fs, master_seed, &mut rng));
    }
    labels.sort_by_key(|l| l.index);
    Ok(FaultPlan { labels })
}

fn run_labels<R: Rng>(
    class: FaultClass,
    members: &[usize],
    ranges: &FaultRanges,
    n: usize,
    fs: f64,
    master_seed: u64,
    rng: &mut R,
) -> Vec<FaultLabel> {
    let onset = rng.random_range(0..n / 2);
    let draw_cable = |rng: &mut R| (ranges.cable_amplitude.draw(rng), ranges.cable_frequency.draw(rng), ranges.cable_decay.draw(rng));
    let shared = match class {
        FaultClass::Drift => Some(FaultParams::Drift { s: ranges.drift.draw(rng) }),
        FaultClass::Bias => Some(FaultParams::Bias { s: ranges.bias.draw(rng) }),
        FaultClass::Gain => Some(FaultParams::Gain { s: ranges.gain.draw(rng) }),
        FaultClass::Noise => Some(FaultParams::Noise { s: ranges.noise.draw(rng) }),
        FaultClass::Missing => Some(FaultParams::Missing),
        FaultClass::CablePermanent => {
            let (amplitude, frequency, decay) = draw_cable(rng);
            Some(FaultParams::CablePermanent {
                amplitude,
                frequency,
                decay,
            })
        }
        FaultClass::Spikes | FaultClass::CableTemporary => None,
    };

    members
        .iter()
        .enumerate()
        .map(|(k, &index)| match (class, &shared) {
            (FaultClass::Missing, _) => {
                let start = (ranges.missing_start.draw(rng) * n as f64).floor() as usize;
                FaultLabel {
                    index,
                    params: FaultParams::Missing,
                    t_start: start.min(n),
                    t_end: n,
                }
            }
            (_, Some(params)) => FaultLabel {
                index,
                params: params.clone(),
                t_start: if k == 0 { onset } else { 0 },
                t_end: n,
            },
            (FaultClass::Spikes, None) => {
                let lo = (ranges.spike_count_fs.min * fs).round() as usize;
                let hi = (ranges.spike_count_fs.max * fs).round() as usize;
                let count = rng.random_range(lo..=hi).min(n);
                let mut prng = seed::rng(master_seed, Stream::FaultApply, index as u64, 1);
                let mut positions = sample(&mut prng, n, count).into_vec();
                positions.sort_unstable();
                let (t_start, t_end) = match (positions.first(), positions.last()) {
                    (Some(&a), Some(&b)) => (a, b + 1),
                    _ => (0, 0),
                };
                FaultLabel {
                    index,
                    params: FaultParams::Spikes {
                        amplitude: ranges.spike_amplitude.draw(rng),
                        positions,
                    },
                    t_start,
                    t_end,
                }
            }
            _ => {
                let (amplitude, frequency, decay) = draw_cable(rng);
                let len = ((ranges.cable_temporary_duration.draw(rng) * fs).round() as usize).min(n);
                let t_start = rng.random_range(0..=n - len);
                FaultLabel {
                    index,
                    params: FaultParams::CableTemporary {
                        amplitude,
                        frequency,
                        decay,
                    },
                    t_start,
                    t_end: t_start + len,
                }
            }
        })
        .collect()
}

/// Whether the class-specific statistic flags `dirty` as contaminated while
/// leaving its clean counterpart unflagged.
///
/// | class | statistic |
/// |-------|-----------|
/// | D, B  | window mean above 0.5·min offset |
/// | S     | peak second difference over its robust scale |
/// | G     | window RMS ratio to the clean record |
/// | N     | 25–50 Hz power ratio to the clean record |
/// | M     | count of missing samples |
/// | C     | share of window power below 2 Hz |
pub fn separates(class: FaultClass, clean: &[f64], dirty: &[f64], window: std::ops::Range<usize>, fs: f64, ranges: &FaultRanges) -> bool {
    let w = window;
    match class {
        FaultClass::Drift | FaultClass::Bias => {
            let thr = 0.5 * if class == FaultClass::Drift { ranges.drift.min } else { ranges.bias.min };
            mean(&dirty[w.clone()]).abs() > thr && mean(&clean[w]).abs() <= thr
        }
        FaultClass::Spikes => spike_score(dirty) > 8.0 && spike_score(clean) <= 8.0,
        FaultClass::Gain => rms(&dirty[w.clone()]) / rms(&clean[w]) >= 0.99 * ranges.gain.min,
        FaultClass::Noise => {
            let band = |x: &[f64]| welch(x, fs, 1024).map(|p| p.band_power(25.0, fs / 2.0)).unwrap_or(0.0);
            band(&dirty[w.clone()]) > 2.0 * band(&clean[w])
        }
        FaultClass::Missing => {
            dirty.iter().filter(|v| v.is_nan()).count() > 0 && clean.iter().all(|v| !v.is_nan())
        }
        FaultClass::CableTemporary | FaultClass::CablePermanent => {
            low_share(&dirty[w.clone()], fs) > 0.5 && low_share(&clean[w], fs) <= 0.5
        }
    }
}

/// Largest |second difference| over 1.4826·MAD of all second differences.
pub fn spike_score(a: &[f64]) -> f64 {
    if a.len() < 3 {
        return 0.0;
    }
    let d: Vec<f64> = a.windows(3).map(|w| w[1] - 0.5 * (w[0] + w[2])).collect();
    let mut abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mad = 1.4826 * abs[abs.len() / 2];
    let peak = abs.last().copied().unwrap_or(0.0);
    if mad == 0.0 {
        return if peak > 0.0 { f64::INFINITY } else { 0.0 };
    }
    peak / mad
}

/// Fraction of window power below 2 Hz.
pub fn low_share(a: &[f64], fs: f64) -> f64 {
    if a.len() < 8 {
        return 0.0;
    }
    match welch(a, fs, a.len().min(2048)) {
        Ok(p) => {
            let total = p.band_power(0.0, fs / 2.0);
            if total > 0.0 {
                p.band_power(0.0, 2.0) / total
            } else {
                0.0
            }
        }
        Err(_) => 0.0,
    }
}
