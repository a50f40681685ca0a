use crate::domain::time::TimeAxis;
use crate::error::{Result, WdriError};

/// Source time function sampled on a [`TimeAxis`], normalized to unit peak.
#[derive(Debug, Clone)]
pub struct Wavelet {
    pub samples: Vec<f64>,
    pub peak_frequency: f64,
    pub delay: f64,
}

impl Wavelet {
    fn normalized(mut samples: Vec<f64>, peak_frequency: f64, delay: f64) -> Result<Self> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(WdriError::InvalidArgument(
                "wavelet samples must be finite".into(),
            ));
        }
        let peak = samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
        if peak == 0.0 {
            return Err(WdriError::DegenerateInput(
                "wavelet is identically zero".into(),
            ));
        }
        for s in &mut samples {
            *s /= peak;
        }
        Ok(Wavelet {
            samples,
            peak_frequency,
            delay,
        })
    }
}

/// Default causal delay used when none is given.
pub fn default_ricker_delay(peak_frequency: f64) -> f64 {
    1.5 / peak_frequency
}

/// Ricker wavelet (1 - 2 pi^2 f^2 t'^2) exp(-pi^2 f^2 t'^2) with t' = t - delay,
/// normalized to unit peak.
pub fn ricker(peak_frequency: f64, time: TimeAxis, delay: f64) -> Result<Wavelet> {
    if !(peak_frequency > 0.0) {
        return Err(WdriError::InvalidArgument(format!(
            "peak frequency must be positive, got {peak_frequency}"
        )));
    }
    if delay < 0.0 {
        return Err(WdriError::InvalidArgument(format!(
            "delay must be non-negative, got {delay}"
        )));
    }
    let pf = std::f64::consts::PI * peak_frequency;
    let samples: Vec<f64> = (0..time.nt)
        .map(|n| {
            let t = time.sample(n) - delay;
            let a = pf * pf * t * t;
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect();
    Wavelet::normalized(samples, peak_frequency, delay)
}

/// Band-pass filtered Ricker: a Ricker at (low+high)/2 run through a zero-phase
/// (forward-backward) Butterworth band-pass built from 2nd-order sections,
/// renormalized to unit peak.
pub fn bandpass_ricker(low: f64, high: f64, time: TimeAxis) -> Result<Wavelet> {
    if !(low > 0.0) || !(high > low) {
        return Err(WdriError::InvalidArgument(format!(
            "band must satisfy 0 < low < high, got [{low}, {high}]"
        )));
    }
    if high >= time.nyquist() {
        return Err(WdriError::InvalidArgument(format!(
            "band edge {high} Hz is at or above Nyquist {} Hz",
            time.nyquist()
        )));
    }
    let center = 0.5 * (low + high);
    let base = ricker(center, time, default_ricker_delay(center))?;

    let hp = Biquad::high_pass(low, time.dt);
    let lp = Biquad::low_pass(high, time.dt);
    let mut samples = base.samples;
    // Forward-backward application of each section cancels the phase and
    // doubles the rolloff (4th order per edge overall).
    for section in [&hp, &lp] {
        section.filter_in_place(&mut samples);
        samples.reverse();
        section.filter_in_place(&mut samples);
        samples.reverse();
    }
    Wavelet::normalized(samples, center, base.delay)
}

/// Time support (s) over which |w| exceeds `fraction` of the peak amplitude.
pub fn wavelet_halfwidth(wavelet: &Wavelet, dt: f64, fraction: f64) -> f64 {
    let peak = wavelet.samples.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
    let thresh = fraction * peak;
    let first = wavelet.samples.iter().position(|s| s.abs() >= thresh);
    let last = wavelet.samples.iter().rposition(|s| s.abs() >= thresh);
    match (first, last) {
        (Some(a), Some(b)) if b > a => 0.5 * (b - a) as f64 * dt,
        _ => 0.0,
    }
}

/// 2nd-order Butterworth section (RBJ cookbook coefficients), direct form I.
#[derive(Debug, Clone)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2], // a1, a2 with a0 normalized to 1
}

impl Biquad {
    fn low_pass(cutoff: f64, dt: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff * dt;
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = w0.sin() / (2.0 * q);
        let cosw = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad {
            b: [
                (1.0 - cosw) / 2.0 / a0,
                (1.0 - cosw) / a0,
                (1.0 - cosw) / 2.0 / a0,
            ],
            a: [-2.0 * cosw / a0, (1.0 - alpha) / a0],
        }
    }

    fn high_pass(cutoff: f64, dt: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff * dt;
        let q = std::f64::consts::FRAC_1_SQRT_2;
        let alpha = w0.sin() / (2.0 * q);
        let cosw = w0.cos();
        let a0 = 1.0 + alpha;
        Biquad {
            b: [
                (1.0 + cosw) / 2.0 / a0,
                -(1.0 + cosw) / a0,
                (1.0 + cosw) / 2.0 / a0,
            ],
            a: [-2.0 * cosw / a0, (1.0 - alpha) / a0],
        }
    }

    fn filter_in_place(&self, x: &mut [f64]) {
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 =
                self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive DFT magnitude at bin k (oracle; independent of any filter code).
    fn dft_magnitude(samples: &[f64], k: usize) -> f64 {
        let n = samples.len() as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for (idx, &s) in samples.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * k as f64 * idx as f64 / n;
            re += s * phase.cos();
            im += s * phase.sin();
        }
        (re * re + im * im).sqrt()
    }

    fn spectrum_argmax_hz(samples: &[f64], dt: f64) -> f64 {
        let n = samples.len();
        let mut best = (0usize, 0.0f64);
        for k in 1..n / 2 {
            let mag = dft_magnitude(samples, k);
            if mag > best.1 {
                best = (k, mag);
            }
        }
        best.0 as f64 / (n as f64 * dt)
    }

    #[test]
    fn ricker_peak_is_one_at_delay() {
        let time = TimeAxis::new(1001, 1e-3).unwrap();
        let w = ricker(10.0, time, 0.2).unwrap();
        // delay 0.2 s falls exactly on sample 200
        assert!((w.samples[200] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ricker_spectral_peak_near_nominal() {
        // Camembert source: f = 10 Hz, dt = 3 ms, nt = 2500
        let time = TimeAxis::new(2500, 3e-3).unwrap();
        let w = ricker(10.0, time, default_ricker_delay(10.0)).unwrap();
        let peak_hz = spectrum_argmax_hz(&w.samples, time.dt);
        let bin = 1.0 / (2500.0 * 3e-3);
        assert!(
            (peak_hz - 10.0).abs() <= bin + 1e-9,
            "spectral peak {peak_hz} Hz not within one bin of 10 Hz"
        );
    }

    #[test]
    fn ricker_rejects_bad_frequency() {
        let time = TimeAxis::new(100, 1e-3).unwrap();
        assert!(ricker(0.0, time, 0.0).is_err());
        assert!(ricker(-3.0, time, 0.0).is_err());
    }

    #[test]
    fn bandpass_peak_near_band_center() {
        let time = TimeAxis::new(2048, 4e-3).unwrap();
        let w = bandpass_ricker(2.5, 5.0, time).unwrap();
        let peak_hz = spectrum_argmax_hz(&w.samples, time.dt);
        assert!(
            (peak_hz - 3.75).abs() < 0.5,
            "spectral peak {peak_hz} Hz not near 3.75 Hz"
        );
    }

    #[test]
    fn bandpass_suppresses_out_of_band_energy() {
        let time = TimeAxis::new(2048, 4e-3).unwrap();
        let w = bandpass_ricker(2.5, 5.0, time).unwrap();
        let n = w.samples.len();
        let df = 1.0 / (n as f64 * time.dt);
        let mut total = 0.0;
        let mut above = 0.0;
        for k in 1..n / 2 {
            let e = dft_magnitude(&w.samples, k).powi(2);
            total += e;
            if k as f64 * df > 10.0 {
                above += e;
            }
        }
        assert!(
            above / total < 0.01,
            "energy above 2*high = {}",
            above / total
        );
    }

    #[test]
    fn bandpass_rejects_empty_band() {
        let time = TimeAxis::new(256, 4e-3).unwrap();
        assert!(bandpass_ricker(3.0, 3.0, time).is_err());
        assert!(bandpass_ricker(3.0, 200.0, time).is_err());
    }

    #[test]
    fn halfwidth_of_impulse_is_zero() {
        let w = Wavelet {
            samples: vec![0.0, 1.0, 0.0, 0.0],
            peak_frequency: 1.0,
            delay: 0.0,
        };
        assert_eq!(wavelet_halfwidth(&w, 1e-3, 0.01), 0.0);
    }
}
