//! Butterworth band-pass design, zero-phase filtering and Welch PSD.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One biquad `(b0 + b1 z⁻¹ + b2 z⁻²) / (1 + a1 z⁻¹ + a2 z⁻²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * freq / fs);
        let z2 = z1 * z1;
        (self.b[0] + self.b[1] * z1 + self.b[2] * z2) / (self.a[0] + self.a[1] * z1 + self.a[2] * z2)
    }

    /// Steady-state transposed direct-form II state for a unit step input.
    fn step_state(&self) -> [f64; 2] {
        let dc = (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[1] + self.a[2]);
        let z2 = self.b[2] - self.a[2] * dc;
        let z1 = self.b[1] - self.a[1] * dc + z2;
        [z1, z2]
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<Biquad>,
}

impl Sos {
    /// Digital Butterworth band-pass of prototype order `order` (the cascade
    /// has `2·order` poles), band edges in Hz.
    pub fn butter_bandpass(order: usize, low: f64, high: f64, fs: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::param("filter order", "must be ≥ 1"));
        }
        if !(low > 0.0 && low < high && high < fs / 2.0) {
            return Err(Error::param("band", format!("need 0 < {low} < {high} < fs/2")));
        }
        let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
        let (w1, w2) = (warp(low), warp(high));
        let w0 = (w1 * w2).sqrt();
        let bw = w2 - w1;
        let k = 2.0 * fs;

        let mut upper = Vec::with_capacity(order);
        for j in 0..order {
            let theta = PI * (2 * j + order + 1) as f64 / (2 * order) as f64;
            let p = Complex64::from_polar(1.0, theta);
            let half = p * bw / 2.0;
            let disc = (half * half - w0 * w0).sqrt();
            for s in [half + disc, half - disc] {
                let z = (k + s) / (k - s);
                if z.im.abs() < 1e-12 {
                    return Err(Error::param("band", "too wide for complex-pole sections"));
                }
                if z.im > 0.0 {
                    upper.push(z);
                }
            }
        }
        debug_assert_eq!(upper.len(), order);

        let mut sections: Vec<Biquad> = upper
            .iter()
            .map(|z| Biquad {
                b: [1.0, 0.0, -1.0],
                a: [1.0, -2.0 * z.re, z.norm_sqr()],
            })
            .collect();

        let center = fs / PI * (w0 / k).atan();
        let gain = sections.iter().map(|s| s.response(center, fs)).product::<Complex64>().norm();
        let per_section = gain.powf(-1.0 / order as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        Ok(Self { sections })
    }

    pub fn response(&self, freq: f64, fs: f64) -> Complex64 {
        self.sections.iter().map(|s| s.response(freq, fs)).product()
    }

    /// Causal filtering with optional initial states.
    fn run(&self, x: &mut [f64], init: Option<&[[f64; 2]]>) {
        for (k, s) in self.sections.iter().enumerate() {
            let [mut z1, mut z2] = init.map_or([0.0, 0.0], |z| z[k]);
            let [b0, b1, b2] = s.b;
            let [_, a1, a2] = s.a;
            for v in x.iter_mut() {
                let xin = *v;
                let y = b0 * xin + z1;
                z1 = b1 * xin - a1 * y + z2;
                z2 = b2 * xin - a2 * y;
                *v = y;
            }
        }
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.run(&mut y, None);
        y
    }

    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let [z1, z2] = s.step_state();
                let out = [z1 * scale, z2 * scale];
                scale *= (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[1] + s.a[2]);
                out
            })
            .collect()
    }

    /// Zero-phase forward-backward filtering with odd reflection padding and
    /// steady-state initial conditions.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let pad = (3 * (2 * self.sections.len() + 1)).min(n.saturating_sub(1));
        if n < 2 {
            return Err(Error::param("filtfilt", "signal too short"));
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|k| 2.0 * x[0] - x[k]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|k| 2.0 * x[n - 1] - x[n - 1 - k]));

        let zi = self.step_states();
        let scaled = |x0: f64| zi.iter().map(|z| [z[0] * x0, z[1] * x0]).collect::<Vec<_>>();

        let init = scaled(ext[0]);
        self.run(&mut ext, Some(&init));
        ext.reverse();
        let init = scaled(ext[0]);
        self.run(&mut ext, Some(&init));
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Psd {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
}

impl Psd {
    pub fn resolution(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(f64::INFINITY)
    }

    /// Frequency of the largest bin inside `[lo, hi]`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| (lo..=hi).contains(*f))
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, _)| *f)
    }

    /// Integrated power over `[lo, hi]`.
    pub fn band_power(&self, lo: f64, hi: f64) -> f64 {
        let df = self.resolution();
        self.freqs
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| (lo..=hi).contains(*f))
            .map(|(_, p)| p * df)
            .sum()
    }
}

fn hann(n: usize) -> Vec<f64> {
    // Periodic form, as used for spectral estimation.
    (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect()
}

/// Welch estimate with a Hann window, 50 % overlap and per-segment mean
/// removal. `nperseg == x.len()` gives the single-segment periodogram.
pub fn welch(x: &[f64], fs: f64, nperseg: usize) -> Result<Psd> {
    if x.is_empty() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateSignal);
    }
    let nperseg = nperseg.clamp(1, x.len());
    let step = (nperseg - nperseg / 2).max(1);
    let window = hann(nperseg);
    let win_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(nperseg);
    let n_bins = nperseg / 2 + 1;
    let mut power = vec![0.0; n_bins];
    let mut buf = vec![Complex64::default(); nperseg];
    let mut segments = 0usize;
    let mut start = 0;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let mean = seg.iter().sum::<f64>() / nperseg as f64;
        for ((b, v), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = Complex64::new((v - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += c.norm_sqr();
        }
        segments += 1;
        start += step;
    }
    let scale = 1.0 / (fs * win_power * segments as f64);
    for (k, p) in power.iter_mut().enumerate() {
        *p *= scale;
        let nyquist = nperseg.is_multiple_of(2) && k == nperseg / 2;
        if k != 0 && !nyquist {
            *p *= 2.0;
        }
    }
    let freqs = (0..n_bins).map(|k| k as f64 * fs / nperseg as f64).collect();
    Ok(Psd { freqs, power })
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    if x.len() < 2 {
        return 0.0;
    }
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}
