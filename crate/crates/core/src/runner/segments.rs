//! Partition of the time axis into rotating-wave segments.
//!
//! Each segment has at most one active pulse, whose photon energy dresses the
//! pulse's lower channel. Consecutive pulses hand over where their envelopes
//! are equal, which is the minimum of `max(f_a, f_b)` between their centers.

use crate::error::Result;
use crate::grid::centrifugal_term;
use crate::propagator::{
    default_time_step, spectral_range, CouplingBlock, CouplingValue, Drive, HamiltonianSnapshot,
    TimeDependentHamiltonian,
};
use crate::pulses::PulseSpec;
use crate::units;

use super::config::Scenario;

/// Envelope fraction of either peak at a switch time that triggers a warning.
pub const OVERLAP_WARNING: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct Segment {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Active pulse instance and the config entry it came from.
    pub pulse: Option<(usize, PulseSpec)>,
    pub hamiltonian: TimeDependentHamiltonian,
}

/// Handover between two consecutive pulse instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch {
    pub time: f64,
    /// `f_a / peak_a` and `f_b / peak_b` at the switch time.
    pub relative_envelopes: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SegmentPlan {
    pub segments: Vec<Segment>,
    pub switches: Vec<Switch>,
    pub warnings: Vec<String>,
}

fn log_envelope(p: &PulseSpec, t: f64) -> f64 {
    let x = (t - p.t_p) / p.tau_c;
    0.5 * (p.tau_l / p.tau_c).ln() - 2.0 * std::f64::consts::LN_2 * x * x
}

/// Time between the centers of `a` and `b` (`a.t_p ≤ b.t_p`) where the
/// envelopes are equal, or the interval end where the smaller one dominates
/// throughout.
pub fn split_time(a: &PulseSpec, b: &PulseSpec) -> f64 {
    let diff = |t: f64| log_envelope(a, t) - log_envelope(b, t);
    // On [t_a, t_b] f_a decreases and f_b increases, so diff is monotone.
    let (mut lo, mut hi) = (a.t_p, b.t_p);
    if diff(lo) <= 0.0 {
        return lo;
    }
    if diff(hi) >= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if diff(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Channel potentials on the grid with the centrifugal term, undressed.
fn bare_potentials(s: &Scenario) -> Result<Vec<Vec<f64>>> {
    let centrifugal = centrifugal_term(&s.grid, s.mass, s.j)?;
    s.curves
        .iter()
        .map(|c| {
            let mut v = c.sample(&s.grid)?;
            v.iter_mut().zip(&centrifugal).for_each(|(v, c)| *v += c);
            Ok(v)
        })
        .collect()
}

fn hamiltonian(s: &Scenario, bare: &[Vec<f64>], pulse: Option<&PulseSpec>) -> TimeDependentHamiltonian {
    let mut potentials = bare.to_vec();
    if let Some(p) = pulse {
        potentials[p.channels.0].iter_mut().for_each(|v| *v += p.photon_energy);
    }
    let couplings = s
        .couplings
        .iter()
        .map(|(r, c, curve)| CouplingBlock {
            row: *r,
            col: *c,
            value: CouplingValue::Radial(curve.sample(&s.grid)),
        })
        .collect();
    TimeDependentHamiltonian {
        base: HamiltonianSnapshot {
            mass: s.mass,
            potentials,
            couplings,
        },
        drives: pulse.map(|p| Drive { pulse: p.clone() }).into_iter().collect(),
    }
}

/// Pulse instances up to `t_end`, repetitions included, each tagged with the
/// index of its entry in the scenario document.
fn expand_with_origin(s: &Scenario, t_end: f64) -> Vec<(usize, PulseSpec)> {
    let base: Vec<(usize, PulseSpec)> = s
        .pulse_origin
        .iter()
        .copied()
        .zip(s.pulses.pulses().iter().cloned())
        .collect();
    let mut out = base.clone();
    if let (Some(period), Some(first)) = (s.pulses.repetition_period(), base.first()) {
        let mut k = 1;
        while first.1.t_p + k as f64 * period <= t_end {
            let shift = k as f64 * period;
            out.extend(base.iter().map(|(i, p)| {
                (
                    *i,
                    PulseSpec {
                        t_p: p.t_p + shift,
                        ..p.clone()
                    },
                )
            }));
            k += 1;
        }
    }
    out.sort_by(|a, b| a.1.t_p.total_cmp(&b.1.t_p));
    out
}

pub fn build_segments(s: &Scenario) -> Result<SegmentPlan> {
    let bare = bare_potentials(s)?;
    let (t0, t1) = (s.propagation.t_start, s.propagation.t_end);
    let instances = expand_with_origin(s, t1);

    let mut switches = Vec::new();
    let mut warnings = Vec::new();
    let mut bounds = vec![f64::NEG_INFINITY];
    for w in instances.windows(2) {
        let (w0, w1) = (&w[0].1, &w[1].1);
        let t = split_time(w0, w1);
        let rel = (w0.envelope(t) / w0.peak(), w1.envelope(t) / w1.peak());
        if rel.0 > OVERLAP_WARNING || rel.1 > OVERLAP_WARNING {
            let msg = format!(
                "pulses centered at {:.6} ps and {:.6} ps overlap: at the switch time {:.6} ps their envelopes are {:.1}% and {:.1}% of peak",
                units::time_from_internal(w0.t_p),
                units::time_from_internal(w1.t_p),
                units::time_from_internal(t),
                100.0 * rel.0,
                100.0 * rel.1
            );
            log::warn!("{msg}");
            warnings.push(msg);
        }
        switches.push(Switch {
            time: t,
            relative_envelopes: rel,
        });
        bounds.push(t);
    }
    bounds.push(f64::INFINITY);

    let mut segments = Vec::new();
    if instances.is_empty() {
        segments.push(Segment {
            index: 0,
            t_start: t0,
            t_end: t1,
            pulse: None,
            hamiltonian: hamiltonian(s, &bare, None),
        });
    } else {
        for (k, (origin, p)) in instances.iter().enumerate() {
            let (a, b) = (bounds[k].max(t0), bounds[k + 1].min(t1));
            if b <= a {
                continue;
            }
            segments.push(Segment {
                index: segments.len(),
                t_start: a,
                t_end: b,
                pulse: Some((*origin, p.clone())),
                hamiltonian: hamiltonian(s, &bare, Some(p)),
            });
        }
    }
    switches.retain(|sw| sw.time > t0 && sw.time < t1);
    Ok(SegmentPlan {
        segments,
        switches,
        warnings,
    })
}

/// The most restrictive of the envelope, chirped-Rabi and spectral step
/// limits over every segment.
pub fn default_dt(s: &Scenario) -> Result<f64> {
    let plan = build_segments(s)?;
    let mut dt = f64::INFINITY;
    for seg in &plan.segments {
        let range = spectral_range(
            &seg.hamiltonian.envelope_snapshot(),
            &s.grid,
            s.propagation.spectral_margin,
        );
        let pulses: Vec<PulseSpec> = seg.pulse.iter().map(|(_, p)| p.clone()).collect();
        dt = dt.min(default_time_step(&pulses, range));
    }
    Ok(dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::config::load_scenario;
    use std::path::Path;

    fn pulse(t_p: f64, tau_c: f64, tau_l: f64) -> PulseSpec {
        PulseSpec {
            w_l: 1e-5,
            photon_energy: 0.05,
            t_p,
            tau_c,
            tau_l,
            chirp_rate: 0.0,
            channels: (0, 1),
        }
    }

    fn scenario(pulses: &str, extra: &str, t_end: f64) -> Scenario {
        let text = format!(
            r#"{{
            "grid": {{"r_min_a0": 1.0, "r_max_a0": 8.0, "n_points": 32}},
            "mass_amu": 1.0,
            "channels": [
                {{"name": "g", "potential": {{"kind": "morse", "d_e_cm1": 20000, "a_per_a0": 1.0, "r_e_a0": 2.0}}}},
                {{"name": "e", "potential": {{"kind": "morse", "d_e_cm1": 10000, "a_per_a0": 1.0, "r_e_a0": 2.5, "v_asym_cm1": 15000}}}}
            ],
            "pulses": [{pulses}],
            {extra}
            "initial_state": {{"kind": "eigenstate", "channel": "g", "level": 0}},
            "propagation": {{"t_end_ps": {t_end}, "dt_ps": 0.01}}
        }}"#
        );
        load_scenario(&text, Path::new(".")).unwrap()
    }

    fn p(t: f64) -> String {
        format!(
            r#"{{"lower": "g", "upper": "e", "w_l_cm1": 1, "photon_energy_cm1": 15000, "t_p_ps": {t}, "tau_c_ps": 20, "tau_l_ps": 20}}"#
        )
    }

    #[test]
    fn equal_pulses_split_at_midpoint() {
        let t = split_time(&pulse(150.0, 20.0, 10.0), &pulse(275.0, 20.0, 10.0));
        assert!((t - 212.5).abs() < 1e-9);
    }

    #[test]
    fn split_sits_on_envelope_crossing() {
        let a = pulse(150.0, 40.0, 10.0);
        let b = pulse(275.0, 15.0, 15.0);
        let t = split_time(&a, &b);
        assert!(t > 150.0 && t < 275.0);
        assert!((a.envelope(t) - b.envelope(t)).abs() < 1e-12);
        // The handover time minimizes max(f_a, f_b) on the interval.
        for dt in [-1.0, 1.0] {
            assert!(a.envelope(t + dt).max(b.envelope(t + dt)) > a.envelope(t));
        }
    }

    #[test]
    fn dominated_pulse_splits_at_center() {
        // Peak 0.01 against a broad pulse of peak 1.
        let weak = pulse(100.0, 10.0, 0.001);
        let broad = pulse(101.0, 1000.0, 1000.0);
        assert_eq!(split_time(&weak, &broad), 100.0);
    }

    #[test]
    fn single_pulse_single_segment() {
        let s = scenario(&p(100.0), "", 300.0);
        let plan = build_segments(&s).unwrap();
        assert_eq!(plan.segments.len(), 1);
        assert_eq!(plan.segments[0].t_start, 0.0);
        assert_eq!(plan.segments[0].t_end, s.propagation.t_end);
        assert!(plan.warnings.is_empty());
        // Lower channel dressed by the photon energy.
        let h = &plan.segments[0].hamiltonian.base;
        let shift = h.potentials[0][5] - s.curves[0].evaluate(s.grid.point(5)).unwrap();
        assert!((shift - units::energy_to_internal(15000.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn no_pulse_single_undriven_segment() {
        let text = r#"{
            "grid": {"r_min_a0": 1.0, "r_max_a0": 8.0, "n_points": 32},
            "mass_amu": 1.0,
            "channels": [{"name": "g", "potential": {"kind": "harmonic", "omega_cm1": 500, "r_e_a0": 4}}],
            "initial_state": {"kind": "eigenstate", "channel": "g", "level": 0},
            "propagation": {"t_end_ps": 0.1}
        }"#;
        let s = load_scenario(text, Path::new(".")).unwrap();
        let plan = build_segments(&s).unwrap();
        assert_eq!(plan.segments.len(), 1);
        assert!(plan.segments[0].pulse.is_none() && plan.segments[0].hamiltonian.drives.is_empty());
    }

    #[test]
    fn two_pulses_two_segments() {
        let s = scenario(&format!("{}, {}", p(150.0), p(275.0)), "", 500.0);
        let plan = build_segments(&s).unwrap();
        assert_eq!(plan.segments.len(), 2);
        let sw = units::time_from_internal(plan.switches[0].time);
        assert!((sw - 212.5).abs() < 1e-6, "{sw}");
        assert_eq!(plan.segments[0].t_end, plan.segments[1].t_start);
        assert!(plan.warnings.is_empty());
    }

    #[test]
    fn repetition_shifts_segment_pairs() {
        let s = scenario(
            &format!("{}, {}", p(150.0), p(275.0)),
            r#""repetition_period_ps": 1800,"#,
            3000.0,
        );
        let plan = build_segments(&s).unwrap();
        assert_eq!(plan.segments.len(), 4);
        let centers: Vec<f64> = plan
            .segments
            .iter()
            .map(|seg| units::time_from_internal(seg.pulse.as_ref().unwrap().1.t_p))
            .collect();
        for (c, e) in centers.iter().zip([150.0, 275.0, 1950.0, 2075.0]) {
            assert!((c - e).abs() < 1e-9, "{c}");
        }
        assert_eq!(plan.segments[2].pulse.as_ref().unwrap().0, 0);
        assert_eq!(plan.segments[3].pulse.as_ref().unwrap().0, 1);
        let d = plan.switches[2].time - plan.switches[0].time;
        assert!((units::time_from_internal(d) - 1800.0).abs() < 1e-9);
    }

    #[test]
    fn overlapping_pulses_warn() {
        let s = scenario(&format!("{}, {}", p(150.0), p(160.0)), "", 400.0);
        let plan = build_segments(&s).unwrap();
        assert_eq!(plan.warnings.len(), 1);
        assert!(plan.switches[0].relative_envelopes.0 > OVERLAP_WARNING);
    }
}
