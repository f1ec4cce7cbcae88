//! Two-level Rabi model in closed form, and an explicit RK4 integrator of the
//! same model to check it against.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Two vibrational levels coupled by a laser of strength `w_l` through the
/// Franck–Condon amplitude `f`. Units are arbitrary with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelModel {
    pub e_g: f64,
    pub e_e: f64,
    pub w_l: f64,
    pub f: C64,
}

impl TwoLevelModel {
    pub fn new(e_g: f64, e_e: f64, w_l: f64, f: C64) -> Result<Self> {
        for (what, v) in [("E_g", e_g), ("E_e", e_e), ("W_L", w_l), ("Re F", f.re), ("Im F", f.im)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{what} = {v}")));
            }
        }
        if f.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("|F| = {} exceeds 1", f.norm())));
        }
        Ok(Self { e_g, e_e, w_l, f })
    }

    /// `|W_L F|`.
    pub fn coupling(&self) -> f64 {
        (self.w_l * self.f).norm()
    }

    /// `Ω = √(|W_L F|² + ((E_e - E_g)/2)²)`.
    pub fn rabi_frequency(&self) -> f64 {
        self.coupling().hypot(0.5 * (self.e_e - self.e_g))
    }

    /// Largest excited population reached, `|W_L F|² / Ω²`.
    pub fn amplitude(&self) -> f64 {
        let omega = self.rabi_frequency();
        if omega == 0.0 {
            0.0
        } else {
            (self.coupling() / omega).powi(2)
        }
    }

    /// `T^R = π / Ω`; infinite without coupling or detuning.
    pub fn rabi_period(&self) -> f64 {
        std::f64::consts::PI / self.rabi_frequency()
    }

    /// `|c_e(t)|²` for a start in the lower level.
    pub fn excited_population(&self, t: f64) -> f64 {
        self.amplitude() * (self.rabi_frequency() * t).sin().powi(2)
    }

    /// `L = 2 (1 - |F|²) P_e (1 - P_e)`.
    pub fn linear_entropy(&self, t: f64) -> f64 {
        let p = self.excited_population(t);
        2.0 * (1.0 - self.f.norm_sqr()) * p * (1.0 - p)
    }
}

/// One sample of the integrated amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSample {
    pub time: f64,
    pub ground: C64,
    pub excited: C64,
}

impl TwoLevelSample {
    pub fn excited_population(&self) -> f64 {
        self.excited.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ground.norm_sqr() + self.excited.norm_sqr()
    }
}

/// Integrates `i ẋ = H x` with `H = [[E_g, W F*], [W F, E_e]]` by classical
/// RK4 from the lower level. The step must satisfy `dt ≤ 0.01/Ω`; it is
/// shortened so the last sample lands on `t_end`.
pub fn integrate_two_level(m: &TwoLevelModel, t_end: f64, dt: f64) -> Result<Vec<TwoLevelSample>> {
    if !(dt > 0.0) || !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidInput(format!(
            "need dt > 0 and t_end ≥ 0, got dt = {dt}, t_end = {t_end}"
        )));
    }
    let omega = m.rabi_frequency();
    if omega > 0.0 && dt > 0.01 / omega {
        return Err(Error::OutOfRange {
            what: "dt".into(),
            value: dt,
            min: 0.0,
            max: 0.01 / omega,
        });
    }
    let n = (t_end / dt).ceil() as usize;
    let h = if n == 0 { 0.0 } else { t_end / n as f64 };

    // Removing the mean energy only changes a global phase and keeps the
    // RK4 phase error small.
    let mean = 0.5 * (m.e_g + m.e_e);
    let (a, d) = (m.e_g - mean, m.e_e - mean);
    let w = m.f * m.w_l;
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |x: [C64; 2]| -> [C64; 2] { [minus_i * (x[0] * a + x[1] * w.conj()), minus_i * (x[0] * w + x[1] * d)] };

    let mut x = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut out = Vec::with_capacity(n + 1);
    out.push(TwoLevelSample {
        time: 0.0,
        ground: x[0],
        excited: x[1],
    });
    for step in 1..=n {
        let k1 = rhs(x);
        let k2 = rhs([x[0] + k1[0] * (0.5 * h), x[1] + k1[1] * (0.5 * h)]);
        let k3 = rhs([x[0] + k2[0] * (0.5 * h), x[1] + k2[1] * (0.5 * h)]);
        let k4 = rhs([x[0] + k3[0] * h, x[1] + k3[1] * h]);
        for i in 0..2 {
            x[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
        }
        let time = step as f64 * h;
        let phase = C64::from_polar(1.0, -mean * time);
        out.push(TwoLevelSample {
            time,
            ground: x[0] * phase,
            excited: x[1] * phase,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn model(e_g: f64, e_e: f64, w: f64, f: f64) -> TwoLevelModel {
        TwoLevelModel::new(e_g, e_e, w, C64::new(f, 0.0)).unwrap()
    }

    #[test]
    fn frequency_examples() {
        assert!((model(1.0, 1.0, 0.3, 0.5).rabi_frequency() - 0.15).abs() < 1e-15);
        assert!((model(0.0, 0.6, 0.0, 0.5).rabi_frequency() - 0.3).abs() < 1e-15);
        assert!((model(0.0, 8.0, 3.0, 1.0).rabi_frequency() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn population_examples() {
        let m = model(0.0, 0.0, 0.2, 0.9);
        let omega = m.rabi_frequency();
        assert_eq!(m.excited_population(0.0), 0.0);
        assert!((m.excited_population(PI / (2.0 * omega)) - 1.0).abs() < 1e-15);
        assert!(m.excited_population(m.rabi_period()) < 1e-30);
        let detuned = model(0.0, 0.4, 0.1, 1.0);
        assert!((detuned.amplitude() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn linear_entropy_examples() {
        let ident = model(0.0, 0.0, 0.2, 1.0);
        for t in [0.0, 1.0, 3.3, 17.0] {
            assert_eq!(ident.linear_entropy(t), 0.0);
        }
        // F = 0 switches the coupling off entirely, so the maximal value is
        // approached as |F| → 0.
        let orth = TwoLevelModel::new(0.0, 0.0, 0.2, C64::new(0.0, 0.0)).unwrap();
        assert_eq!(orth.linear_entropy(5.0), 0.0);
        let weak = model(0.0, 0.0, 0.2, 1e-9);
        let t = PI / (4.0 * weak.rabi_frequency());
        assert!((weak.linear_entropy(t) - 0.5).abs() < 1e-12);
        assert_eq!(weak.linear_entropy(0.0), 0.0);
    }

    #[test]
    fn zeros_at_period_multiples() {
        let m = model(-0.3, 0.1, 0.13, 0.7);
        let period = m.rabi_period();
        for k in 1..=5 {
            // Bisect on the derivative sign around each expected zero.
            let target = k as f64 * period;
            let (mut lo, mut hi) = (target - 0.25 * period, target + 0.25 * period);
            let slope = |t: f64| (2.0 * m.rabi_frequency() * t).sin();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if slope(lo) * slope(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((0.5 * (lo + hi) - target).abs() / target < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TwoLevelModel::new(0.0, 0.0, 1.0, C64::new(1.1, 0.0)).is_err());
        assert!(TwoLevelModel::new(f64::NAN, 0.0, 1.0, C64::new(0.1, 0.0)).is_err());
        let m = model(0.0, 0.0, 1.0, 1.0);
        assert!(integrate_two_level(&m, 10.0, 0.02).is_err());
        assert!(integrate_two_level(&m, 10.0, 0.0).is_err());
    }

    #[test]
    fn uncoupled_stays_put() {
        let m = model(0.0, 0.5, 0.0, 0.8);
        for s in integrate_two_level(&m, 100.0, 0.01).unwrap() {
            assert_eq!(s.excited, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn integrator_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let f = C64::from_polar(rng.gen_range(0.05..1.0), rng.gen_range(0.0..2.0 * PI));
            let m = TwoLevelModel::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.05..1.0),
                f,
            )
            .unwrap();
            let omega = m.rabi_frequency();
            let traj = integrate_two_level(&m, 10.0 * m.rabi_period(), 0.01 / omega).unwrap();
            for s in &traj {
                assert!((s.excited_population() - m.excited_population(s.time)).abs() < 1e-6);
                assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            }
        }
    }
}
