//! Direct DFT at chosen frequencies, transfer functions and source propagation.
//!
//! `X(f) = sum_n x[n] exp(-i 2 pi f n dt) dt`. Spectra of one analysis share a
//! [`FrequencyGrid`]; derivative outputs are only meaningful inside the band
//! where the excitation spectrum is at least `1e-3` of its peak.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Default valid-band threshold relative to the excitation peak.
pub const BAND_THRESHOLD: f64 = 1e-3;
/// Probe tails above this fraction of the peak trigger a leakage warning.
pub const TAIL_THRESHOLD: f64 = 1e-6;

/// Ascending analysis frequencies in Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    freqs: Arc<Vec<f64>>,
}

impl FrequencyGrid {
    /// `count` evenly spaced points over `[lo, hi]`.
    pub fn linspace(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi >= lo) || count == 0 || (count == 1 && hi != lo) {
            return Err(Error::invalid(format!("invalid frequency band {lo}:{hi} with {count} points")));
        }
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        Ok(FrequencyGrid { freqs: Arc::new((0..count).map(|i| lo + step * i as f64).collect()) })
    }

    pub fn from_values(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() || freqs.windows(2).any(|w| !(w[1] > w[0])) || !(freqs[0] > 0.0) {
            return Err(Error::invalid("frequencies must be positive and strictly ascending"));
        }
        Ok(FrequencyGrid { freqs: Arc::new(freqs) })
    }

    pub fn values(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn check_nyquist(&self, dt: f64) -> Result<()> {
        let nyq = 0.5 / dt;
        match self.freqs.last() {
            Some(&f) if f >= nyq => {
                Err(Error::invalid(format!("frequency {f:.4e} Hz at or above Nyquist {nyq:.4e} Hz")))
            }
            _ => Ok(()),
        }
    }

    /// `exp(i 2 pi f dt)` per frequency: the one-step advance factor.
    pub fn step_factors(&self, dt: f64) -> Vec<Complex64> {
        self.freqs.iter().map(|&f| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * f * dt)).collect()
    }

    fn same(&self, other: &FrequencyGrid) -> bool {
        Arc::ptr_eq(&self.freqs, &other.freqs) || self.freqs == other.freqs
    }
}

/// Complex samples on a frequency grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(grid: &FrequencyGrid) -> Self {
        Spectrum { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn new(grid: &FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid("spectrum length differs from its frequency grid"));
        }
        Ok(Spectrum { grid: grid.clone(), values })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Spectrum { grid: self.grid.clone(), values: self.values.iter().map(|v| v * s).collect() }
    }

    /// Pointwise combination of two spectra on the same grid.
    pub fn zip_with(&self, other: &Spectrum, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Spectrum> {
        if !self.grid.same(&other.grid) {
            return Err(Error::invalid("spectra on different frequency grids"));
        }
        Ok(Spectrum {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn norm(&self, mask: &[bool]) -> f64 {
        self.values.iter().zip(mask).filter(|(_, &m)| m).map(|(v, _)| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// CSV text with header `frequency_hz,real,imag,magnitude,phase_rad`,
    /// restricted to the frequencies where `mask` is set.
    pub fn to_csv(&self, mask: &[bool]) -> String {
        let mut out = String::from("frequency_hz,real,imag,magnitude,phase_rad\n");
        for ((f, v), _) in self.grid.values().iter().zip(&self.values).zip(mask).filter(|(_, &m)| m) {
            out.push_str(&format!("{f:e},{:e},{:e},{:e},{:e}\n", v.re, v.im, v.norm(), v.arg()));
        }
        out
    }
}

/// Relative L2 distance `|a - b| / |b|` over the frequencies where `mask` is set.
pub fn relative_l2(a: &Spectrum, b: &Spectrum, mask: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for ((x, y), &m) in a.values.iter().zip(&b.values).zip(mask) {
        if m {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    }
}

/// Riemann-sum DFT of a real series at the grid frequencies.
pub fn dft(samples: &[f64], dt: f64, grid: &FrequencyGrid) -> Result<Spectrum> {
    if samples.is_empty() {
        return Err(Error::invalid("cannot transform an empty series"));
    }
    grid.check_nyquist(dt)?;
    let values = grid
        .values()
        .par_iter()
        .map(|&f| {
            // Four interleaved twiddle recurrences hide the multiply latency;
            // each block restarts from exact phases to bound drift.
            const LANES: usize = 4;
            const BLOCK: usize = 256;
            let w0 = -2.0 * std::f64::consts::PI * f * dt;
            let stride = Complex64::from_polar(1.0, w0 * LANES as f64);
            let mut acc = [Complex64::new(0.0, 0.0); LANES];
            for (b, block) in samples.chunks(BLOCK).enumerate() {
                let base = b * BLOCK;
                let mut w: [Complex64; LANES] =
                    std::array::from_fn(|l| Complex64::from_polar(1.0, w0 * (base + l) as f64));
                let mut quads = block.chunks_exact(LANES);
                for q in &mut quads {
                    for l in 0..LANES {
                        acc[l] += w[l] * q[l];
                        w[l] *= stride;
                    }
                }
                for (l, &x) in quads.remainder().iter().enumerate() {
                    acc[l] += w[l] * x;
                }
            }
            acc.iter().sum::<Complex64>() * dt
        })
        .collect();
    Ok(Spectrum { grid: grid.clone(), values })
}

/// DFTs of many series at once.
pub fn dft_many(series: &[&[f64]], dt: f64, grid: &FrequencyGrid) -> Result<Vec<Spectrum>> {
    series.par_iter().map(|s| dft(s, dt, grid)).collect()
}

/// Frequencies where `|excitation| >= threshold * max|excitation|`.
pub fn valid_band(excitation: &Spectrum, threshold: f64) -> Vec<bool> {
    let peak = excitation.values.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
    excitation.values.iter().map(|v| peak > 0.0 && v.norm() >= threshold * peak).collect()
}

/// Valid band judged against the DC amplitude of the excitation series.
///
/// Gaussian spectra peak at DC, which may lie below the analysis band.
pub fn valid_band_dc(excitation_series: &[f64], excitation: &Spectrum, dt: f64, threshold: f64) -> Vec<bool> {
    let dc: f64 = excitation_series.iter().sum::<f64>().abs() * dt;
    let peak = excitation.values.iter().map(|v| v.norm()).fold(dc, f64::max);
    excitation.values.iter().map(|v| peak > 0.0 && v.norm() >= threshold * peak).collect()
}

/// True when the last 5% of a record stays below `TAIL_THRESHOLD` of its peak.
pub fn tail_settled(samples: &[f64]) -> bool {
    let peak = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return true;
    }
    let start = samples.len() - (samples.len() / 20).max(1);
    samples[start..].iter().all(|v| v.abs() <= TAIL_THRESHOLD * peak)
}

/// Ratio spectrum between two nodes, restricted to a valid band.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferFunction {
    /// 1-based source cell.
    pub from: usize,
    /// 1-based observation cell.
    pub to: usize,
    pub spectrum: Spectrum,
    pub valid: Vec<bool>,
}

impl TransferFunction {
    /// Value at frequency index `i`, `None` outside the valid band.
    pub fn at(&self, i: usize) -> Option<Complex64> {
        self.valid[i].then(|| self.spectrum.values[i])
    }

    pub fn band_is_empty(&self) -> bool {
        !self.valid.iter().any(|&v| v)
    }
}

/// `dft(response) / dft(excitation)` on the band where the excitation is strong.
pub fn transfer_function(
    response: &[f64],
    excitation: &[f64],
    dt: f64,
    grid: &FrequencyGrid,
    from: usize,
    to: usize,
) -> Result<TransferFunction> {
    let r = dft(response, dt, grid)?;
    let e = dft(excitation, dt, grid)?;
    ratio(&r, &e, excitation, dt, from, to)
}

fn ratio(r: &Spectrum, e: &Spectrum, excitation: &[f64], dt: f64, from: usize, to: usize) -> Result<TransferFunction> {
    let valid = valid_band_dc(excitation, e, dt, BAND_THRESHOLD);
    if !valid.iter().any(|&v| v) {
        return Err(Error::numerical("excitation spectrum is empty over the analysis band"));
    }
    let values = r
        .values
        .iter()
        .zip(&e.values)
        .zip(&valid)
        .map(|((&a, &b), &ok)| if ok { a / b } else { Complex64::new(0.0, 0.0) })
        .collect();
    Ok(TransferFunction { from, to, spectrum: Spectrum { grid: r.grid.clone(), values }, valid })
}

/// Total over incident field at one cell.
pub fn self_transfer_function(
    total: &[f64],
    incident: &[f64],
    dt: f64,
    grid: &FrequencyGrid,
    cell: usize,
) -> Result<TransferFunction> {
    transfer_function(total, incident, dt, grid, cell, cell)
}

/// `sum_i H_i(f) S_i(f)` over source cells.
pub fn propagate(tfs: &[&TransferFunction], sources: &[&Spectrum]) -> Result<Spectrum> {
    if tfs.len() != sources.len() {
        return Err(Error::invalid("every source cell needs a transfer function"));
    }
    let Some(first) = tfs.first() else {
        return Err(Error::invalid("nothing to propagate"));
    };
    let grid = &first.spectrum.grid;
    let mut out = Spectrum::zeros(grid);
    for (tf, s) in tfs.iter().zip(sources) {
        let term = tf.spectrum.zip_with(s, |h, j| h * j)?;
        for (o, t) in out.values.iter_mut().zip(term.values) {
            *o += t;
        }
    }
    Ok(out)
}
