//! Scenario documents: a strict JSON schema whose keys carry their units,
//! and the validated, unit-converted [`Scenario`] built from it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::potentials::{CouplingCurve, PotentialCurve};
use crate::propagator::PropagationConfig;
use crate::pulses::{default_chirp_rate, PulseSequence, PulseSpec};
use crate::units;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    pub mass_amu: f64,
    /// Rotational quantum number shared by every channel.
    #[serde(default)]
    pub j: u32,
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub couplings: Vec<CouplingConfig>,
    #[serde(default)]
    pub pulses: Vec<PulseConfig>,
    #[serde(default)]
    pub repetition_period_ps: Option<f64>,
    pub initial_state: InitialStateConfig,
    pub propagation: PropagationSection,
    #[serde(default)]
    pub observables: ObservablesConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min_a0: f64,
    pub r_max_a0: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub name: String,
    pub potential: PotentialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Morse {
        d_e_cm1: f64,
        a_per_a0: f64,
        r_e_a0: f64,
        #[serde(default)]
        v_asym_cm1: f64,
    },
    Harmonic {
        omega_cm1: f64,
        r_e_a0: f64,
        #[serde(default)]
        v_min_cm1: f64,
    },
    /// Either a file (R in a₀, V in cm⁻¹; relative to the scenario file) or
    /// inline `[R_a0, V_cm1]` pairs.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        file: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<Vec<[f64; 2]>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub between: [String; 2],
    pub curve: CouplingCurveConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingCurveConfig {
    Constant {
        w_cm1: f64,
    },
    Gaussian {
        amplitude_cm1: f64,
        r_0_a0: f64,
        sigma_a0: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub lower: String,
    pub upper: String,
    pub w_l_cm1: f64,
    pub photon_energy_cm1: f64,
    pub t_p_ps: f64,
    pub tau_c_ps: f64,
    pub tau_l_ps: f64,
    /// Derived from τ_L, τ_C and `chirp_sign` when absent.
    #[serde(default)]
    pub chirp_rate_per_ps2: Option<f64>,
    #[serde(default = "default_chirp_sign")]
    pub chirp_sign: f64,
}

fn default_chirp_sign() -> f64 {
    -1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    Eigenstate {
        channel: String,
        level: LevelRef,
    },
    Gaussian {
        channel: String,
        center_a0: f64,
        width_a0: f64,
        #[serde(default)]
        momentum_au: f64,
    },
}

/// A vibrational quantum number or `"last_bound"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelRef {
    Index(usize),
    Keyword(String),
}

pub const LAST_BOUND: &str = "last_bound";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagationSection {
    #[serde(default)]
    pub t_start_ps: f64,
    pub t_end_ps: f64,
    /// Chosen from the pulse and spectral time scales when absent.
    #[serde(default)]
    pub dt_ps: Option<f64>,
    #[serde(default = "default_tolerance")]
    pub chebyshev_tolerance: f64,
    #[serde(default = "default_margin")]
    pub spectral_margin: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_tolerance() -> f64 {
    PropagationConfig::DEFAULT_TOLERANCE
}

fn default_margin() -> f64 {
    PropagationConfig::DEFAULT_MARGIN
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesConfig {
    #[serde(default)]
    pub r_cut_a0: Vec<f64>,
    #[serde(default)]
    pub snapshot_times_ps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_time_series")]
    pub time_series: String,
    #[serde(default = "default_metadata")]
    pub metadata: String,
    #[serde(default = "default_snapshot_prefix")]
    pub snapshot_prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            time_series: default_time_series(),
            metadata: default_metadata(),
            snapshot_prefix: default_snapshot_prefix(),
        }
    }
}

fn default_directory() -> String {
    "output".into()
}

fn default_time_series() -> String {
    "timeseries.csv".into()
}

fn default_metadata() -> String {
    "metadata.json".into()
}

fn default_snapshot_prefix() -> String {
    "snapshot".into()
}

impl ScenarioConfig {
    /// Strict parse; errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path == "." { String::new() } else { path },
                e.into_inner().to_string(),
            )
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.name == name)
    }

    fn resolve(&self, path: &str, name: &str) -> Result<usize> {
        self.channel_index(name)
            .ok_or_else(|| Error::config(path, format!("unknown channel \"{name}\"")))
    }
}

/// Initial wavepacket in internal units.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Eigenstate {
        channel: usize,
        level: LevelChoice,
    },
    Gaussian {
        channel: usize,
        center: f64,
        width: f64,
        momentum: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelChoice {
    Index(usize),
    LastBound,
}

impl InitialState {
    pub fn channel(&self) -> usize {
        match *self {
            Self::Eigenstate { channel, .. } | Self::Gaussian { channel, .. } => channel,
        }
    }
}

/// A validated scenario in atomic units, together with the materialized
/// document it came from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: SpatialGrid,
    pub mass: f64,
    pub j: u32,
    pub curves: Vec<PotentialCurve>,
    /// `(row, col, curve)` with `row < col`.
    pub couplings: Vec<(usize, usize, CouplingCurve)>,
    pub pulses: PulseSequence,
    /// Index into `config.pulses` of every pulse in `pulses`, same order.
    pub pulse_origin: Vec<usize>,
    pub initial: InitialState,
    pub propagation: PropagationConfig,
    pub r_cuts: Vec<f64>,
    pub snapshot_times: Vec<f64>,
}

impl Scenario {
    pub fn channel_names(&self) -> Vec<&str> {
        self.config.channels.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn n_channels(&self) -> usize {
        self.curves.len()
    }
}

/// Reads and validates a scenario file; tabulated potentials are resolved
/// relative to its directory.
pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    load_scenario(&text, &base)
}

/// Parses, validates and converts a scenario document. Every default,
/// including the time step, is written back into `Scenario::config`.
pub fn load_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let config = ScenarioConfig::from_json(text)?;
    build_scenario(config, base_dir)
}

fn cm1(path: &str, v: f64) -> Result<f64> {
    units::energy_to_internal(v).map_err(|e| Error::config(path, e.to_string()))
}

fn ps(path: &str, v: f64) -> Result<f64> {
    units::time_to_internal(v).map_err(|e| Error::config(path, e.to_string()))
}

fn wrap<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ (Error::Config { .. } | Error::Io { .. }) => e,
        other => Error::config(path, other.to_string()),
    })
}

pub fn build_scenario(mut config: ScenarioConfig, base_dir: &Path) -> Result<Scenario> {
    let g = config.grid;
    let grid = wrap("grid", SpatialGrid::new(g.r_min_a0, g.r_max_a0, g.n_points))?;
    if !(config.mass_amu > 0.0) || !config.mass_amu.is_finite() {
        return Err(Error::config(
            "mass_amu",
            format!("must be positive, got {}", config.mass_amu),
        ));
    }
    let mass = units::mass_to_internal(config.mass_amu)?;

    if config.channels.is_empty() {
        return Err(Error::config("channels", "at least one channel is required"));
    }
    let mut curves = Vec::with_capacity(config.channels.len());
    for (i, ch) in config.channels.iter().enumerate() {
        let path = format!("channels[{i}]");
        if ch.name.is_empty() {
            return Err(Error::config(format!("{path}.name"), "channel name must not be empty"));
        }
        if config.channels[..i].iter().any(|c| c.name == ch.name) {
            return Err(Error::config(
                format!("{path}.name"),
                format!("duplicate channel \"{}\"", ch.name),
            ));
        }
        curves.push(build_curve(
            &ch.potential,
            mass,
            base_dir,
            &format!("{path}.potential"),
        )?);
    }

    let mut couplings = Vec::new();
    for (i, c) in config.couplings.iter().enumerate() {
        let path = format!("couplings[{i}]");
        let a = config.resolve(&format!("{path}.between[0]"), &c.between[0])?;
        let b = config.resolve(&format!("{path}.between[1]"), &c.between[1])?;
        if a == b {
            return Err(Error::config(
                format!("{path}.between"),
                "a coupling needs two distinct channels",
            ));
        }
        let (row, col) = (a.min(b), a.max(b));
        if couplings.iter().any(|&(r, c, _)| (r, c) == (row, col)) {
            return Err(Error::config(&path, "duplicate coupling for this channel pair"));
        }
        let curve = match c.curve {
            CouplingCurveConfig::Constant { w_cm1 } => wrap(
                &path,
                CouplingCurve::constant(cm1(&format!("{path}.curve.w_cm1"), w_cm1)?),
            )?,
            CouplingCurveConfig::Gaussian {
                amplitude_cm1,
                r_0_a0,
                sigma_a0,
            } => wrap(
                &path,
                CouplingCurve::gaussian(
                    cm1(&format!("{path}.curve.amplitude_cm1"), amplitude_cm1)?,
                    r_0_a0,
                    sigma_a0,
                ),
            )?,
        };
        couplings.push((row, col, curve));
    }

    let mut specs = Vec::with_capacity(config.pulses.len());
    for i in 0..config.pulses.len() {
        let path = format!("pulses[{i}]");
        let p = &config.pulses[i];
        let lower = config.resolve(&format!("{path}.lower"), &p.lower)?;
        let upper = config.resolve(&format!("{path}.upper"), &p.upper)?;
        if lower == upper {
            return Err(Error::config(&path, "lower and upper channel must differ"));
        }
        let pair = (lower.min(upper), lower.max(upper));
        if couplings.iter().any(|&(r, c, _)| (r, c) == pair) {
            return Err(Error::config(
                &path,
                format!(
                    "channels \"{}\" and \"{}\" already have a static coupling",
                    p.lower, p.upper
                ),
            ));
        }
        if p.chirp_sign != 1.0 && p.chirp_sign != -1.0 {
            return Err(Error::config(
                format!("{path}.chirp_sign"),
                format!("must be +1 or -1, got {}", p.chirp_sign),
            ));
        }
        let tau_c = ps(&format!("{path}.tau_c_ps"), p.tau_c_ps)?;
        let tau_l = ps(&format!("{path}.tau_l_ps"), p.tau_l_ps)?;
        if !(tau_l > 0.0) || tau_c < tau_l {
            return Err(Error::config(
                &path,
                format!(
                    "need τ_C ≥ τ_L > 0, got τ_C = {} ps, τ_L = {} ps",
                    p.tau_c_ps, p.tau_l_ps
                ),
            ));
        }
        let chirp_rate = match p.chirp_rate_per_ps2 {
            Some(rate) => units::rate2_to_internal(rate)
                .map_err(|e| Error::config(format!("{path}.chirp_rate_per_ps2"), e.to_string()))?,
            None => {
                let rate = wrap(&path, default_chirp_rate(tau_l, tau_c, p.chirp_sign))?;
                config.pulses[i].chirp_rate_per_ps2 = Some(units::rate2_from_internal(rate));
                rate
            }
        };
        let p = &config.pulses[i];
        let spec = PulseSpec {
            w_l: cm1(&format!("{path}.w_l_cm1"), p.w_l_cm1)?,
            photon_energy: cm1(&format!("{path}.photon_energy_cm1"), p.photon_energy_cm1)?,
            t_p: ps(&format!("{path}.t_p_ps"), p.t_p_ps)?,
            tau_c,
            tau_l,
            chirp_rate,
            channels: (lower, upper),
        };
        wrap(&path, spec.validate())?;
        specs.push((i, spec));
    }
    specs.sort_by(|a, b| a.1.t_p.total_cmp(&b.1.t_p));
    let pulse_origin = specs.iter().map(|(i, _)| *i).collect();
    let repetition = match config.repetition_period_ps {
        Some(t) => Some(ps("repetition_period_ps", t)?),
        None => None,
    };
    let pulses = wrap(
        "repetition_period_ps",
        PulseSequence::new(specs.into_iter().map(|(_, s)| s).collect(), repetition),
    )?;

    let initial = match &config.initial_state {
        InitialStateConfig::Eigenstate { channel, level } => {
            let channel = config.resolve("initial_state.channel", channel)?;
            let level = match level {
                LevelRef::Index(v) => LevelChoice::Index(*v),
                LevelRef::Keyword(k) if k == LAST_BOUND => {
                    if curves[channel].asymptote().is_none() {
                        return Err(Error::config(
                            "initial_state.level",
                            "\"last_bound\" needs a potential with a dissociation limit",
                        ));
                    }
                    LevelChoice::LastBound
                }
                LevelRef::Keyword(k) => {
                    return Err(Error::config(
                        "initial_state.level",
                        format!("expected an integer or \"{LAST_BOUND}\", got \"{k}\""),
                    ))
                }
            };
            InitialState::Eigenstate { channel, level }
        }
        InitialStateConfig::Gaussian {
            channel,
            center_a0,
            width_a0,
            momentum_au,
        } => {
            let channel = config.resolve("initial_state.channel", channel)?;
            if !(*width_a0 > 0.0) {
                return Err(Error::config(
                    "initial_state.width_a0",
                    format!("must be positive, got {width_a0}"),
                ));
            }
            if !(*center_a0 > grid.r_min() && *center_a0 < grid.r_max()) || !momentum_au.is_finite() {
                return Err(Error::config(
                    "initial_state",
                    "center must lie inside the grid and momentum must be finite",
                ));
            }
            InitialState::Gaussian {
                channel,
                center: *center_a0,
                width: *width_a0,
                momentum: *momentum_au,
            }
        }
    };

    let prop = &config.propagation;
    let t_start = ps("propagation.t_start_ps", prop.t_start_ps)?;
    let t_end = ps("propagation.t_end_ps", prop.t_end_ps)?;
    if !(t_end > t_start) {
        return Err(Error::config("propagation.t_end_ps", "must be later than t_start_ps"));
    }
    let mut propagation = PropagationConfig {
        dt: 1.0,
        t_start,
        t_end,
        chebyshev_tolerance: prop.chebyshev_tolerance,
        spectral_margin: prop.spectral_margin,
        sample_stride: prop.sample_stride,
    };
    wrap("propagation", propagation.validate())?;
    if let Some(dt) = prop.dt_ps {
        if !(dt > 0.0) {
            return Err(Error::config(
                "propagation.dt_ps",
                format!("must be positive, got {dt}"),
            ));
        }
        propagation.dt = ps("propagation.dt_ps", dt)?;
    }

    for (i, &r) in config.observables.r_cut_a0.iter().enumerate() {
        if !(r > grid.r_min() && r <= grid.r_max()) {
            return Err(Error::config(
                format!("observables.r_cut_a0[{i}]"),
                format!("{r} lies outside ({}, {}]", grid.r_min(), grid.r_max()),
            ));
        }
    }
    let mut snapshot_times = Vec::new();
    for (i, &t) in config.observables.snapshot_times_ps.iter().enumerate() {
        let path = format!("observables.snapshot_times_ps[{i}]");
        if !(t >= prop.t_start_ps && t <= prop.t_end_ps) {
            return Err(Error::config(
                path,
                format!("{t} ps lies outside the propagation window"),
            ));
        }
        snapshot_times.push(ps(&path, t)?);
    }
    for (what, name) in [
        ("time_series", &config.output.time_series),
        ("metadata", &config.output.metadata),
        ("snapshot_prefix", &config.output.snapshot_prefix),
    ] {
        if name.is_empty() || name.contains('/') || name.contains('\\') {
            return Err(Error::config(
                format!("output.{what}"),
                "must be a plain, non-empty file name",
            ));
        }
    }

    let mut scenario = Scenario {
        r_cuts: config.observables.r_cut_a0.clone(),
        config,
        grid,
        mass,
        j: 0,
        curves,
        couplings,
        pulses,
        pulse_origin,
        initial,
        propagation,
        snapshot_times,
    };
    scenario.j = scenario.config.j;
    // Centrifugal terms must be finite on the grid.
    wrap(
        "j",
        crate::grid::centrifugal_term(&scenario.grid, mass, scenario.j).map(|_| ()),
    )?;

    if scenario.config.propagation.dt_ps.is_none() {
        let dt = super::segments::default_dt(&scenario)?;
        scenario.propagation.dt = dt;
        scenario.config.propagation.dt_ps = Some(units::time_from_internal(dt));
    }
    Ok(scenario)
}

fn build_curve(spec: &PotentialConfig, mass: f64, base_dir: &Path, path: &str) -> Result<PotentialCurve> {
    match spec {
        PotentialConfig::Morse {
            d_e_cm1,
            a_per_a0,
            r_e_a0,
            v_asym_cm1,
        } => wrap(
            path,
            PotentialCurve::morse(
                cm1(&format!("{path}.d_e_cm1"), *d_e_cm1)?,
                *a_per_a0,
                *r_e_a0,
                cm1(&format!("{path}.v_asym_cm1"), *v_asym_cm1)?,
            ),
        ),
        PotentialConfig::Harmonic {
            omega_cm1,
            r_e_a0,
            v_min_cm1,
        } => wrap(
            path,
            PotentialCurve::harmonic(
                cm1(&format!("{path}.omega_cm1"), *omega_cm1)?,
                *r_e_a0,
                cm1(&format!("{path}.v_min_cm1"), *v_min_cm1)?,
                mass,
            ),
        ),
        PotentialConfig::Tabulated { file, points } => match (file, points) {
            (Some(f), None) => {
                let p: PathBuf = base_dir.join(f);
                PotentialCurve::from_table_file(&p).map_err(|e| match e {
                    Error::Io { .. } => e,
                    other => Error::config(format!("{path}.file"), other.to_string()),
                })
            }
            (None, Some(pts)) => {
                let r = pts.iter().map(|p| p[0]).collect();
                let v = pts
                    .iter()
                    .map(|p| cm1(&format!("{path}.points"), p[1]))
                    .collect::<Result<Vec<_>>>()?;
                wrap(&format!("{path}.points"), PotentialCurve::tabulated(r, v))
            }
            _ => Err(Error::config(
                path,
                "tabulated potential needs exactly one of `file` or `points`",
            )),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "grid": {"r_min_a0": 1.0, "r_max_a0": 8.0, "n_points": 64},
        "mass_amu": 1.0,
        "channels": [{"name": "g", "potential": {"kind": "morse", "d_e_cm1": 20000, "a_per_a0": 1.0, "r_e_a0": 2.0}}],
        "initial_state": {"kind": "eigenstate", "channel": "g", "level": 0},
        "propagation": {"t_end_ps": 0.01}
    }"#;

    fn two_channel(pulse_extra: &str) -> String {
        format!(
            r#"{{
            "grid": {{"r_min_a0": 1.0, "r_max_a0": 8.0, "n_points": 64}},
            "mass_amu": 1.0,
            "channels": [
                {{"name": "g", "potential": {{"kind": "morse", "d_e_cm1": 20000, "a_per_a0": 1.0, "r_e_a0": 2.0}}}},
                {{"name": "e", "potential": {{"kind": "harmonic", "omega_cm1": 1000, "r_e_a0": 2.5, "v_min_cm1": 15000}}}}
            ],
            "pulses": [{{"lower": "g", "upper": "e", "w_l_cm1": 10, "photon_energy_cm1": 15000,
                         "t_p_ps": 0.5, "tau_c_ps": 0.2, "tau_l_ps": 0.1{pulse_extra}}}],
            "initial_state": {{"kind": "eigenstate", "channel": "g", "level": "last_bound"}},
            "propagation": {{"t_end_ps": 1.0}}
        }}"#
        )
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let s = load_scenario(MINIMAL, Path::new(".")).unwrap();
        let c = &s.config;
        assert_eq!(c.j, 0);
        assert_eq!(c.propagation.t_start_ps, 0.0);
        assert_eq!(c.propagation.chebyshev_tolerance, 1e-12);
        assert_eq!(c.propagation.spectral_margin, 1.1);
        assert_eq!(c.propagation.sample_stride, 1);
        assert!(c.propagation.dt_ps.unwrap() > 0.0);
        assert_eq!(c.output, OutputConfig::default());
        assert_eq!(
            s.initial,
            InitialState::Eigenstate {
                channel: 0,
                level: LevelChoice::Index(0)
            }
        );
        assert!((s.propagation.dt - units::time_to_internal(c.propagation.dt_ps.unwrap()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn round_trip_is_identity() {
        for text in [MINIMAL.to_string(), two_channel("")] {
            let s = load_scenario(&text, Path::new(".")).unwrap();
            let again = ScenarioConfig::from_json(&s.config.to_json()).unwrap();
            assert_eq!(again, s.config);
            let rebuilt = build_scenario(again, Path::new(".")).unwrap();
            assert_eq!(rebuilt.config, s.config);
            assert_eq!(rebuilt.propagation, s.propagation);
        }
    }

    #[test]
    fn chirp_rate_is_materialized() {
        let s = load_scenario(&two_channel(""), Path::new(".")).unwrap();
        let rate = s.config.pulses[0].chirp_rate_per_ps2.unwrap();
        let expected = -(4.0 * std::f64::consts::LN_2 / 0.04) * 3f64.sqrt();
        assert!((rate - expected).abs() < 1e-9 * expected.abs(), "{rate} vs {expected}");
        let explicit = load_scenario(&two_channel(r#", "chirp_rate_per_ps2": 5.0"#), Path::new(".")).unwrap();
        assert_eq!(explicit.config.pulses[0].chirp_rate_per_ps2, Some(5.0));
    }

    #[test]
    fn unknown_channel_is_named() {
        let text = two_channel("").replace(r#""upper": "e""#, r#""upper": "x""#);
        let err = load_scenario(&text, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("\"x\"") && err.contains("pulses[0].upper"), "{err}");
    }

    #[test]
    fn short_chirped_width_cites_pulse() {
        let text = two_channel("").replace(r#""tau_c_ps": 0.2"#, r#""tau_c_ps": 0.05"#);
        let err = load_scenario(&text, Path::new(".")).unwrap_err().to_string();
        assert!(err.contains("pulses[0]"), "{err}");
    }

    #[test]
    fn unknown_fields_rejected_with_path() {
        let text = MINIMAL.replace(r#""n_points": 64"#, r#""n_points": 64, "spacing": 0.1"#);
        let err = load_scenario(&text, Path::new(".")).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
        let msg = err.to_string();
        assert!(msg.contains("grid") && msg.contains("spacing"), "{msg}");
        let typo = MINIMAL.replace(r#""d_e_cm1""#, r#""de_cm1""#);
        assert!(load_scenario(&typo, Path::new(".")).is_err());
    }

    #[test]
    fn semantic_errors() {
        let cases = [
            MINIMAL.replace(r#""mass_amu": 1.0"#, r#""mass_amu": -1.0"#),
            MINIMAL.replace(r#""t_end_ps": 0.01"#, r#""t_end_ps": 0.0"#),
            MINIMAL.replace(r#""level": 0"#, r#""level": "top""#),
            MINIMAL.replace(r#""t_end_ps": 0.01"#, r#""t_end_ps": 0.01, "dt_ps": -1"#),
            MINIMAL.replace(r#""n_points": 64"#, r#""n_points": 2"#),
            MINIMAL.replace(
                r#""propagation""#,
                r#""observables": {"r_cut_a0": [9.0]}, "propagation""#,
            ),
            MINIMAL.replace(
                r#""propagation""#,
                r#""observables": {"snapshot_times_ps": [1.0]}, "propagation""#,
            ),
        ];
        for text in cases {
            assert!(
                matches!(load_scenario(&text, Path::new(".")), Err(Error::Config { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn last_bound_needs_asymptote() {
        let text = two_channel("").replace(r#""channel": "g""#, r#""channel": "e""#);
        assert!(load_scenario(&text, Path::new(".")).is_err());
    }

    #[test]
    fn static_and_laser_coupling_on_one_pair_rejected() {
        let text = two_channel("").replace(
            r#""pulses""#,
            r#""couplings": [{"between": ["g", "e"], "curve": {"kind": "constant", "w_cm1": 5}}], "pulses""#,
        );
        assert!(load_scenario(&text, Path::new(".")).is_err());
    }

    #[test]
    fn tabulated_points_and_file() {
        let dir = tempfile::tempdir().unwrap();
        let table: String = (0..40)
            .map(|i| {
                let r = 0.5 + 0.25 * i as f64;
                format!("{r} {}\n", 5000.0 * (r - 3.0).powi(2))
            })
            .collect();
        std::fs::write(dir.path().join("v.dat"), format!("# R V\n{table}")).unwrap();
        let file = MINIMAL.replace(
            r#"{"kind": "morse", "d_e_cm1": 20000, "a_per_a0": 1.0, "r_e_a0": 2.0}"#,
            r#"{"kind": "tabulated", "file": "v.dat"}"#,
        );
        let s = load_scenario(&file, dir.path()).unwrap();
        assert!((s.curves[0].evaluate(3.0).unwrap()).abs() < 1e-12);
        let both = MINIMAL.replace(
            r#"{"kind": "morse", "d_e_cm1": 20000, "a_per_a0": 1.0, "r_e_a0": 2.0}"#,
            r#"{"kind": "tabulated", "file": "v.dat", "points": [[1,0],[2,0],[3,0],[4,0]]}"#,
        );
        assert!(load_scenario(&both, dir.path()).is_err());
        let missing = file.replace("v.dat", "nope.dat");
        assert!(matches!(load_scenario(&missing, dir.path()), Err(Error::Io { .. })));
    }
}
