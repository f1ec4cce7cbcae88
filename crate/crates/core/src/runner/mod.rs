//! Scenario orchestration: loads a scenario, prepares the initial state,
//! propagates segment by segment and samples the entanglement measures.

pub mod analysis;
pub mod config;
pub mod output;
pub mod segments;

use std::time::Instant;

use crate::entanglement::EntanglementRecord;
use crate::error::{Error, Result};
use crate::grid::RadialWavefunction;
use crate::propagator::{propagate, ChannelState, PropagationConfig};
use crate::units;
use crate::vibrational::{solve_levels, LevelSelection};

pub use config::{load_scenario, load_scenario_file, Scenario, ScenarioConfig};
pub use output::{write_outputs, RunMetadata};
pub use segments::{build_segments, SegmentPlan};

use config::{InitialState, LevelChoice};

/// Relative edge amplitude above which the grid is reported as too small.
pub const EDGE_WARNING: f64 = 1e-3;

/// Vibrational level chosen as the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedLevel {
    pub channel: usize,
    pub v: usize,
    pub energy: f64,
}

/// Wavefunction of every channel at (close to) a requested time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested: f64,
    pub state: ChannelState,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<EntanglementRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: ChannelState,
    pub selected_level: Option<SelectedLevel>,
    pub plan: SegmentPlan,
    pub warnings: Vec<String>,
    pub max_norm_drift: f64,
    pub steps: usize,
    pub wall_time_s: f64,
}

/// Builds the initial state of the scenario.
pub fn initial_state(s: &Scenario) -> Result<(ChannelState, Option<SelectedLevel>)> {
    let n = s.n_channels();
    let t0 = s.propagation.t_start;
    match s.initial {
        InitialState::Eigenstate { channel, level } => {
            let curve = &s.curves[channel];
            let selection = match level {
                LevelChoice::Index(v) => LevelSelection::Count(v + 1),
                LevelChoice::LastBound => {
                    LevelSelection::Below(curve.asymptote().expect("validated: curve has an asymptote"))
                }
            };
            let basis = solve_levels(&s.grid, curve, s.mass, s.j, selection)?;
            let lvl = match level {
                LevelChoice::Index(v) => basis.level(v),
                LevelChoice::LastBound => basis.last_bound(),
            }
            .ok_or(Error::LevelShortfall { requested: 1, found: 0 })?;
            let selected = SelectedLevel {
                channel,
                v: lvl.v,
                energy: lvl.energy,
            };
            Ok((
                ChannelState::single(t0, n, channel, lvl.wavefunction.clone())?,
                Some(selected),
            ))
        }
        InitialState::Gaussian {
            channel,
            center,
            width,
            momentum,
        } => {
            let psi = RadialWavefunction::gaussian(s.grid, center, width, momentum)?;
            Ok((ChannelState::single(t0, n, channel, psi)?, None))
        }
    }
}

/// Runs the whole scenario, sampling records as it goes. Only the sampled
/// records and the requested snapshots are kept, never the full history.
pub fn run(s: &Scenario) -> Result<RunOutput> {
    let clock = Instant::now();
    let plan = build_segments(s)?;
    let mut warnings = plan.warnings.clone();
    let (mut state, selected_level) = initial_state(s)?;
    let norm0 = state.total_norm_sqr();

    let mut records: Vec<EntanglementRecord> = Vec::new();
    // Closest sample seen so far for each requested snapshot time.
    let mut snapshots: Vec<Option<Snapshot>> = vec![None; s.snapshot_times.len()];
    let mut edge_warned = vec![false; s.n_channels()];
    let mut max_drift: f64 = 0.0;
    let mut steps = 0;
    let names = s.channel_names();

    for seg in &plan.segments {
        let config = PropagationConfig {
            t_start: seg.t_start,
            t_end: seg.t_end,
            ..s.propagation
        };
        steps += config.steps().0;
        let mut first = true;
        let skip_first = !records.is_empty();
        state = propagate(&state, &seg.hamiltonian, &config, |st| {
            // The segment's opening state is the previous segment's last sample.
            let duplicate = first && skip_first;
            first = false;
            if duplicate {
                return Ok(());
            }
            max_drift = max_drift.max((st.total_norm_sqr() - norm0).abs());
            records.push(EntanglementRecord::evaluate(st, &s.r_cuts)?);
            for (slot, &t) in snapshots.iter_mut().zip(&s.snapshot_times) {
                let better = slot.as_ref().is_none_or(|b| (st.time - t).abs() < (b.state.time - t).abs());
                if better {
                    *slot = Some(Snapshot { requested: t, state: st.clone() });
                }
            }
            for (c, warned) in edge_warned.iter_mut().enumerate() {
                if !*warned && st.channel(c).edge_fraction() > EDGE_WARNING {
                    *warned = true;
                    let msg = format!(
                        "wavepacket in channel \"{}\" reaches the grid edge at t = {:.6} ps (edge/peak amplitude {:.2e}); enlarge r_max",
                        names[c],
                        units::time_from_internal(st.time),
                        st.channel(c).edge_fraction()
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
            Ok(())
        })
        .map_err(|e| Error::Segment { segment: seg.index, source: Box::new(e) })?;
    }

    Ok(RunOutput {
        records,
        snapshots: snapshots.into_iter().flatten().collect(),
        final_state: state,
        selected_level,
        plan,
        warnings,
        max_norm_drift: max_drift,
        steps,
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}
