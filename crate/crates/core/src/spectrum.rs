//! Noise spectra from correlation series, peak annotation and sampling checks.
//!
//! `S̃(ω_k) = τ Σ_{m=1}^{N} e^{iω_k mτ} C̃(mτ)` on `ω_k = kπ/(Nτ)`, `k = 0..=N`.
//! With this normalization `Σ_k w_k |S̃_k|² = Nτ² Σ_m C̃_m²` where
//! `w_0 = w_N = ½` and `w_k = 1` otherwise. There is no `m = 0` sample, so
//! the spectrum carries a flat offset of `-C(0)τ` relative to the continuous
//! transform.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bath::BathModel;
use crate::correlation::{mode_table, CorrelationSeries, MODE_PRUNE_REL};
use crate::error::{Error, Result};
use crate::operator::{hermitian_norm, C64, ZERO};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    #[default]
    None,
    /// Half Hann taper `cos²(π(m-1)/(2N))`, 1 at the first sample.
    Hann,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub tau: f64,
    pub n: usize,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
}

impl Spectrum {
    /// Grid spacing `π/(Nτ)`.
    pub fn resolution(&self) -> f64 {
        PI / (self.n as f64 * self.tau)
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Index of the bin nearest to `omega`.
    pub fn bin_of(&self, omega: f64) -> usize {
        ((omega / self.resolution()).round().max(0.0) as usize).min(self.n)
    }

    /// `Σ_k w_k |S̃_k|²` with half weight on the end bins.
    pub fn weighted_energy(&self) -> f64 {
        let last = self.len() - 1;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| if k == 0 || k == last { 0.5 } else { 1.0 } * a.norm_sqr())
            .sum()
    }
}

pub fn frequency_grid(n: usize, tau: f64) -> Vec<f64> {
    (0..=n).map(|k| k as f64 * PI / (n as f64 * tau)).collect()
}

pub fn reconstruct_spectrum(series: &CorrelationSeries) -> Result<Spectrum> {
    reconstruct_spectrum_with(series, Window::None)
}

pub fn reconstruct_spectrum_with(series: &CorrelationSeries, window: Window) -> Result<Spectrum> {
    let n = series.len();
    if n == 0 {
        return Err(Error::EmptySeries);
    }
    if n < 2 {
        return Err(Error::EmptyInput("at least two correlation samples"));
    }
    let tau = series.tau;
    let mut buf = vec![ZERO; 2 * n];
    for (m, &c) in series.values.iter().enumerate() {
        let w = match window {
            Window::None => 1.0,
            Window::Hann => (PI * m as f64 / (2.0 * n as f64)).cos().powi(2),
        };
        buf[m + 1] = C64::new(c * w, 0.0);
    }
    // The inverse transform carries the e^{+i} kernel and no normalization.
    FftPlanner::new().plan_fft_inverse(2 * n).process(&mut buf);
    let amplitudes = buf[..=n].iter().map(|x| x * tau).collect();
    Ok(Spectrum {
        tau,
        n,
        frequencies: frequency_grid(n, tau),
        amplitudes,
    })
}

/// Direct evaluation of the transform at an arbitrary frequency.
pub fn evaluate_at(series: &CorrelationSeries, omega: f64) -> C64 {
    let tau = series.tau;
    series
        .values
        .iter()
        .enumerate()
        .map(|(i, &c)| C64::from_polar(c * tau, omega * (i + 1) as f64 * tau))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakAnnotation {
    pub center: f64,
    pub height: f64,
    /// Full width where the power `|S̃|²` falls to half its maximum.
    pub fwhm: f64,
    pub matched_mode: Option<usize>,
}

/// Local maxima of `|S̃|` above `threshold · max|S̃|`, strongest first.
pub fn find_peaks(spec: &Spectrum, threshold: f64) -> Result<Vec<PeakAnnotation>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::OutOfRange {
            name: "threshold",
            value: threshold,
        });
    }
    let mag = spec.magnitude();
    let len = mag.len();
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if len < 2 || max == 0.0 {
        return Ok(Vec::new());
    }
    let dw = spec.resolution();
    let mut peaks = Vec::new();
    for k in 0..len {
        let left_ok = if k == 0 { true } else { mag[k] > mag[k - 1] };
        let right_ok = if k + 1 == len { true } else { mag[k] >= mag[k + 1] };
        let strict_somewhere = (k > 0 && mag[k] > mag[k - 1]) || (k + 1 < len && mag[k] > mag[k + 1]);
        if !(left_ok && right_ok && strict_somewhere) || mag[k] <= threshold * max {
            continue;
        }
        let (center, height) = if k > 0 && k + 1 < len {
            let (ym, y0, yp) = (mag[k - 1], mag[k], mag[k + 1]);
            let denom = ym - 2.0 * y0 + yp;
            let delta = if denom != 0.0 { 0.5 * (ym - yp) / denom } else { 0.0 };
            (spec.frequencies[k] + delta * dw, y0 - 0.25 * (ym - yp) * delta)
        } else {
            (spec.frequencies[k], mag[k])
        };
        let level = height / 2f64.sqrt();
        let left = crossing(&mag, &spec.frequencies, k, level, false);
        let right = crossing(&mag, &spec.frequencies, k, level, true);
        peaks.push(PeakAnnotation {
            center,
            height,
            fwhm: (right - left).max(dw),
            matched_mode: None,
        });
    }
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height).then(a.center.total_cmp(&b.center)));
    Ok(peaks)
}

fn crossing(mag: &[f64], freqs: &[f64], k: usize, level: f64, forward: bool) -> f64 {
    let mut i = k;
    loop {
        let next = if forward {
            if i + 1 >= mag.len() {
                return freqs[i];
            }
            i + 1
        } else {
            if i == 0 {
                return freqs[0];
            }
            i - 1
        };
        if mag[next] < level {
            let f = (mag[i] - level) / (mag[i] - mag[next]);
            return freqs[i] + f * (freqs[next] - freqs[i]);
        }
        i = next;
    }
}

/// Assigns each peak the index of the nearest reference frequency within `tol`.
pub fn match_peaks(peaks: &mut [PeakAnnotation], reference: &[f64], tol: f64) {
    for p in peaks.iter_mut() {
        p.matched_mode = reference
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (w - p.center).abs()))
            .filter(|&(_, d)| d <= tol)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i);
    }
}

/// `|((ω + π/τ) mod 2π/τ) - π/τ|`
pub fn folded_frequency(omega: f64, tau: f64) -> f64 {
    let half = PI / tau;
    ((omega + half).rem_euclid(2.0 * half) - half).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliasedMode {
    pub omega: f64,
    pub folded: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingDiagnostic {
    pub tau: f64,
    /// `π/τ`
    pub nyquist: f64,
    /// `2‖B‖`, the a priori bound on any transition frequency.
    pub two_b_norm: f64,
    pub max_frequency: f64,
    pub aliased: Vec<AliasedMode>,
}

impl SamplingDiagnostic {
    pub fn passed(&self) -> bool {
        self.aliased.is_empty()
    }

    /// Whether the conservative `τ ≤ π/(2‖B‖)` condition holds.
    pub fn norm_bound_holds(&self) -> bool {
        self.two_b_norm <= self.nyquist * (1.0 + 1e-12)
    }
}

/// Window check over the transition frequencies that carry weight in `C(t)`.
pub fn validate_sampling(bath: &BathModel, tau: f64) -> Result<SamplingDiagnostic> {
    let modes = mode_table(bath)?;
    let freqs = modes.positive_frequencies(MODE_PRUNE_REL);
    let mut diag = validate_frequencies(&freqs, tau);
    diag.two_b_norm = 2.0 * hermitian_norm(bath.b())?;
    Ok(diag)
}

/// Window check for an explicit list of frequencies; the boundary `π/τ` is in the window.
pub fn validate_frequencies(freqs: &[f64], tau: f64) -> SamplingDiagnostic {
    let nyquist = PI / tau;
    let aliased = freqs
        .iter()
        .map(|w| w.abs())
        .filter(|&w| w > nyquist * (1.0 + 1e-12))
        .map(|omega| AliasedMode {
            omega,
            folded: folded_frequency(omega, tau),
        })
        .collect();
    SamplingDiagnostic {
        tau,
        nyquist,
        two_b_norm: 0.0,
        max_frequency: freqs.iter().fold(0.0, |m, w| m.max(w.abs())),
        aliased,
    }
}

/// `‖|S| - |S*|‖₂ / ‖|S|‖₂`
pub fn estimation_error(s_ref: &Spectrum, s_est: &Spectrum) -> Result<f64> {
    if s_ref.n != s_est.n || (s_ref.tau - s_est.tau).abs() > 1e-12 * s_ref.tau.abs() {
        return Err(Error::GridMismatch);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (r, e) in s_ref.amplitudes.iter().zip(&s_est.amplitudes) {
        num += (r.norm() - e.norm()).powi(2);
        den += r.norm_sqr();
    }
    if den == 0.0 {
        return Err(Error::EmptyInput("reference spectrum is zero"));
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::Provenance;

    fn series(tau: f64, values: Vec<f64>) -> CorrelationSeries {
        CorrelationSeries::new(tau, values, Provenance::Analytic)
    }

    fn cosine(n: usize, tau: f64, omega: f64, lambda: f64) -> CorrelationSeries {
        let v = (1..=n)
            .map(|m| lambda.powi(m as i32 - 1) * (m as f64 * omega * tau).cos())
            .collect();
        series(tau, v)
    }

    #[test]
    fn zero_and_empty() {
        let s = reconstruct_spectrum(&series(1.0, vec![0.0; 8])).unwrap();
        assert!(s.magnitude().iter().all(|&x| x == 0.0));
        assert_eq!(reconstruct_spectrum(&series(1.0, vec![])), Err(Error::EmptySeries));
    }

    #[test]
    fn fft_matches_direct_sum() {
        let c = series(0.7, (0..37).map(|m| ((m * m) as f64 * 0.37).sin()).collect());
        let s = reconstruct_spectrum(&c).unwrap();
        for (w, a) in s.frequencies.iter().zip(&s.amplitudes) {
            assert!((evaluate_at(&c, *w) - a).norm() < 1e-11);
        }
    }

    #[test]
    fn parseval_constant() {
        let c = series(0.3, (0..50).map(|m| (m as f64 * 0.9).cos() * 0.97f64.powi(m)).collect());
        let s = reconstruct_spectrum(&c).unwrap();
        let rhs = 50.0 * 0.09 * c.values.iter().map(|x| x * x).sum::<f64>();
        assert!((s.weighted_energy() - rhs).abs() < 1e-10 * rhs);
    }

    #[test]
    fn on_grid_cosine_peaks_at_its_bin() {
        let (n, tau) = (128, 1.0);
        let omega = 17.0 * PI / (n as f64 * tau);
        let s = reconstruct_spectrum(&cosine(n, tau, omega, 1.0)).unwrap();
        let mag = s.magnitude();
        let arg = (0..mag.len()).max_by(|&a, &b| mag[a].total_cmp(&mag[b])).unwrap();
        assert_eq!(arg, 17);
    }

    #[test]
    fn damped_cosine_matches_geometric_series() {
        let (n, tau, w0, lam) = (4096, 0.5, 1.3, 0.99);
        let s = reconstruct_spectrum(&cosine(n, tau, w0, lam)).unwrap();
        let closed = |w: f64| {
            let term = |x: f64| {
                let e = C64::from_polar(1.0, x * tau);
                e / (C64::new(1.0, 0.0) - e * lam)
            };
            (term(w + w0) + term(w - w0)) * (0.5 * tau)
        };
        let peak = s.magnitude().iter().cloned().fold(0.0, f64::max);
        for (w, a) in s.frequencies.iter().zip(&s.amplitudes) {
            assert!((closed(*w) - a).norm() < 1e-3 * peak);
        }
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let s = Spectrum {
            tau: 1.0,
            n: 4,
            frequencies: frequency_grid(4, 1.0),
            amplitudes: vec![C64::new(1.0, 0.0); 5],
        };
        assert!(find_peaks(&s, 0.1).unwrap().is_empty());
    }

    #[test]
    fn plateau_resolves_to_lower_bin() {
        let mag = [0.0, 1.0, 2.0, 2.0, 1.0, 0.0];
        let s = Spectrum {
            tau: 1.0,
            n: 5,
            frequencies: frequency_grid(5, 1.0),
            amplitudes: mag.iter().map(|&m| C64::new(m, 0.0)).collect(),
        };
        let p = find_peaks(&s, 0.5).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p[0].center < s.frequencies[3]);
    }

    #[test]
    fn two_equal_cosines_give_equal_peaks() {
        let (n, tau) = (512, 1.0);
        let v = (1..=n)
            .map(|m| (m as f64 * 0.8).cos() + (m as f64 * 2.1).cos())
            .collect();
        let p = find_peaks(&reconstruct_spectrum(&series(tau, v)).unwrap(), 0.3).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0].height / p[1].height - 1.0).abs() < 0.02);
        let mut centers = [p[0].center, p[1].center];
        centers.sort_by(f64::total_cmp);
        let bin = PI / n as f64;
        assert!((centers[0] - 0.8).abs() < bin && (centers[1] - 2.1).abs() < bin);
    }

    #[test]
    fn lorentzian_width() {
        let (n, tau, lam) = (8192, 0.5, 0.99);
        let s = reconstruct_spectrum(&cosine(n, tau, 2.0, lam)).unwrap();
        let p = find_peaks(&s, 0.5).unwrap();
        let expected = 2.0 * (1.0 - lam) / tau;
        assert!((p[0].fwhm / expected - 1.0).abs() < 0.05, "{} vs {expected}", p[0].fwhm);
    }

    #[test]
    fn folding_arithmetic() {
        let tau = 2.0;
        let w = 1.2 * PI / tau;
        assert!((folded_frequency(w, tau) - 0.8 * PI / tau).abs() < 1e-12);
        let d = validate_frequencies(&[PI / tau], tau);
        assert!(d.passed());
        let d = validate_frequencies(&[0.3, w], tau);
        assert!(!d.passed());
        assert!((d.aliased[0].folded - 0.8 * PI / tau).abs() < 1e-12);
    }

    #[test]
    fn boundary_bath_passes() {
        let bath = crate::bath::presets::qubit(0.1, 1.0).unwrap();
        // ω = 2b = 2‖B‖ = π/τ
        let d = validate_sampling(&bath, PI / 2.0).unwrap();
        assert!(d.passed() && d.norm_bound_holds());
    }

    #[test]
    fn estimation_error_limits() {
        let s = reconstruct_spectrum(&cosine(64, 1.0, 0.7, 0.98)).unwrap();
        assert_eq!(estimation_error(&s, &s).unwrap(), 0.0);
        let mut zero = s.clone();
        zero.amplitudes.iter_mut().for_each(|a| *a = ZERO);
        assert!((estimation_error(&s, &zero).unwrap() - 1.0).abs() < 1e-15);
        let other = reconstruct_spectrum(&cosine(32, 1.0, 0.7, 0.98)).unwrap();
        assert_eq!(estimation_error(&s, &other), Err(Error::GridMismatch));
    }
}
