//! Post-run signal analysis of sampled observables.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

/// Period of the strongest oscillation in a uniformly sampled signal, from
/// the peak of its zero-padded, Hann-windowed spectrum refined by parabolic
/// interpolation. `None` for flat or too-short signals.
pub fn dominant_period(times: &[f64], values: &[f64]) -> Option<f64> {
    let n = times.len().min(values.len());
    if n < 8 {
        return None;
    }
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return None;
    }
    let mean = values[..n].iter().sum::<f64>() / n as f64;
    let padded = (16 * n).next_power_of_two();
    let mut buf = vec![C64::new(0.0, 0.0); padded];
    for (k, (b, v)) in buf.iter_mut().zip(values).enumerate() {
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos();
        *b = C64::new((v - mean) * w, 0.0);
    }
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let mag: Vec<f64> = buf[..padded / 2].iter().map(|z| z.norm()).collect();
    let (peak, &max) = mag.iter().enumerate().skip(1).max_by(|a, b| a.1.total_cmp(b.1))?;
    if max <= 1e-14 * n as f64 || peak + 1 >= mag.len() {
        return None;
    }
    let (a, b, c) = (mag[peak - 1], mag[peak], mag[peak + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    let freq = (peak as f64 + shift) / (padded as f64 * dt);
    Some(1.0 / freq)
}
