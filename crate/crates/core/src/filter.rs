//! Band-pass Butterworth design (bilinear transform) and zero-phase filtering.
//!
//! The design path mirrors the classical recipe: analog low-pass prototype
//! poles, low-pass to band-pass transformation with pre-warped edge
//! frequencies, bilinear transform to the z-domain, and a cascade of
//! second-order sections. Zero-phase response comes from running the cascade
//! forward and then backward over the signal, with odd-reflection padding and
//! steady-state initial conditions to suppress edge transients.

use num_complex::Complex64;

use crate::error::{CoreError, Result};

/// Band-pass specification. The order is the analog prototype order; the
/// digital filter has twice as many poles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
}

impl FilterSpec {
    pub fn new(low_cut_hz: f64, high_cut_hz: f64) -> Self {
        Self {
            low_cut_hz,
            high_cut_hz,
            order: 2,
        }
    }

    pub fn validate(&self, fs: f64) -> Result<()> {
        if self.order != 2 {
            return Err(CoreError::Config(format!(
                "filter order must be 2, got {}",
                self.order
            )));
        }
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz) {
            return Err(CoreError::Config(format!(
                "need 0 < low_cut < high_cut, got {} and {}",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        if self.high_cut_hz >= fs / 2.0 {
            return Err(CoreError::Config(format!(
                "high_cut {} Hz must be below Nyquist {} Hz",
                self.high_cut_hz,
                fs / 2.0
            )));
        }
        Ok(())
    }
}

/// One biquad in `b0 + b1 z^-1 + b2 z^-2` / `1 + a1 z^-1 + a2 z^-2` form.
#[derive(Debug, Clone, Copy)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

/// Designs the digital band-pass as second-order sections.
pub fn design_bandpass_sos(fs: f64, spec: &FilterSpec) -> Result<Vec<Sos>> {
    spec.validate(fs)?;

    let fs2 = 2.0 * fs;
    // Pre-warped analog edge frequencies (rad/s).
    let wl = fs2 * (std::f64::consts::PI * spec.low_cut_hz / fs).tan();
    let wh = fs2 * (std::f64::consts::PI * spec.high_cut_hz / fs).tan();
    let bw = wh - wl;
    let w0 = (wl * wh).sqrt();

    // Order-2 Butterworth low-pass prototype poles (upper half-plane member;
    // the conjugate is implied).
    let proto = Complex64::from_polar(1.0, 3.0 * std::f64::consts::PI / 4.0);

    // Low-pass to band-pass: each prototype pole yields two analog poles.
    let sp = proto * (bw / 2.0);
    let disc = (sp * sp - Complex64::new(w0 * w0, 0.0)).sqrt();
    let analog_poles = [sp + disc, sp - disc]; // plus their conjugates

    // Bilinear transform. Gain: k_a = bw^order with `order` zeros at s = 0.
    let mut digital_poles = Vec::with_capacity(4);
    let mut denom = Complex64::new(1.0, 0.0);
    for &p in &analog_poles {
        digital_poles.push((Complex64::new(fs2, 0.0) + p) / (Complex64::new(fs2, 0.0) - p));
        // Conjugate pair contributes |fs2 - p|^2 to the denominator product.
        denom *= (Complex64::new(fs2, 0.0) - p) * (Complex64::new(fs2, 0.0) - p.conj());
    }
    let k_analog = bw.powi(2);
    let k_digital = k_analog * fs2.powi(2) / denom.re;

    // Two sections; each pairs one digital pole with its conjugate and takes
    // one zero at z = 1 and one at z = -1, i.e. numerator (1 - z^-2).
    let g = k_digital.abs().sqrt();
    let sign = if k_digital < 0.0 { -1.0 } else { 1.0 };
    let sos = digital_poles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let gain = if i == 0 { sign * g } else { g };
            Sos {
                b: [gain, 0.0, -gain],
                a: [-2.0 * p.re, p.norm_sqr()],
            }
        })
        .collect();
    Ok(sos)
}

/// Steady-state (unit-step) filter state for one section, scaled by `x0`.
fn section_zi(s: &Sos, x0: f64) -> [f64; 2] {
    let y_ss = (s.b[0] + s.b[1] + s.b[2]) / (1.0 + s.a[0] + s.a[1]);
    let z2 = s.b[2] - s.a[1] * y_ss;
    let z1 = s.b[1] - s.a[0] * y_ss + z2;
    [z1 * x0, z2 * x0]
}

/// Runs the cascade once, in place, direct-form II transposed.
fn sosfilt_inplace(sos: &[Sos], x: &mut [f64]) {
    for s in sos {
        if x.is_empty() {
            return;
        }
        let [mut z1, mut z2] = section_zi(s, x[0]);
        for v in x.iter_mut() {
            let xin = *v;
            let y = s.b[0] * xin + z1;
            z1 = s.b[1] * xin - s.a[0] * y + z2;
            z2 = s.b[2] * xin - s.a[1] * y;
            *v = y;
        }
    }
}

/// Zero-phase filtering: odd-reflection padding, forward pass, reversed pass.
/// Output has the same length as the input.
pub fn sosfiltfilt(sos: &[Sos], x: &[f64], fs: f64, low_cut_hz: f64) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    // Pad long enough for the slowest pole's transient to settle (the
    // high-pass corner dominates).
    let padlen = ((3.0 * fs / low_cut_hz).ceil() as usize)
        .max(24)
        .min(n.saturating_sub(1));

    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for i in (1..=padlen).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=padlen {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }

    sosfilt_inplace(sos, &mut ext);
    ext.reverse();
    sosfilt_inplace(sos, &mut ext);
    ext.reverse();

    ext[padlen..padlen + n].to_vec()
}

/// Zero-phase band-pass Butterworth filtering of `samples`.
pub fn butterworth_bandpass(samples: &[f64], fs: f64, spec: &FilterSpec) -> Result<Vec<f64>> {
    let sos = design_bandpass_sos(fs, spec)?;
    Ok(sosfiltfilt(&sos, samples, fs, spec.low_cut_hz))
}
