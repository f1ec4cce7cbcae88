//! Multichannel time evolution with a short-step Chebyshev expansion of
//! `exp(-i H dt)`.
//!
//! Within one step the Hamiltonian is frozen at the step midpoint, which makes
//! the scheme second order in `dt` for time-dependent couplings while each
//! frozen step is exact to the Chebyshev tolerance.

use num_complex::Complex64 as C64;

use crate::bessel::bessel_j_sequence;
use crate::error::{Error, Result};
use crate::grid::{inner_product_raw, KineticOperator, KineticWorkspace, RadialWavefunction, SpatialGrid};
use crate::pulses::PulseSpec;

/// Norm drift that aborts a propagation.
pub const NORM_ABORT: f64 = 1e-6;

/// Wavepackets of every electronic channel at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub time: f64,
    channels: Vec<RadialWavefunction>,
}

impl ChannelState {
    pub fn new(time: f64, channels: Vec<RadialWavefunction>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidInput("a state needs at least one channel".into()))?;
        for c in &channels[1..] {
            first.grid().ensure_same(c.grid())?;
        }
        Ok(Self { time, channels })
    }

    /// State with `psi` in channel `index` and the other channels empty.
    pub fn single(time: f64, n_channels: usize, index: usize, psi: RadialWavefunction) -> Result<Self> {
        if index >= n_channels {
            return Err(Error::InvalidInput(format!("channel {index} out of {n_channels}")));
        }
        let grid = *psi.grid();
        let mut channels = vec![RadialWavefunction::zeros(grid); n_channels];
        channels[index] = psi;
        Self::new(time, channels)
    }

    pub fn channels(&self) -> &[RadialWavefunction] {
        &self.channels
    }

    pub fn channel(&self, n: usize) -> &RadialWavefunction {
        &self.channels[n]
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.channels[0].grid()
    }

    pub fn total_norm_sqr(&self) -> f64 {
        self.channels.iter().map(|c| c.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingValue {
    /// Real R-dependent coupling on the grid (static, symmetric).
    Radial(Vec<f64>),
    /// R-independent complex coupling.
    Scalar(C64),
}

/// Block `(row, col)` of the channel Hamiltonian; block `(col, row)` is its
/// conjugate and is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    pub row: usize,
    pub col: usize,
    pub value: CouplingValue,
}

impl CouplingBlock {
    fn magnitude_at(&self, k: usize) -> f64 {
        match &self.value {
            CouplingValue::Radial(v) => v[k].abs(),
            CouplingValue::Scalar(c) => c.norm(),
        }
    }
}

/// The channel Hamiltonian at one instant: kinetic energy plus diagonal
/// (dressed) potentials plus inter-channel couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSnapshot {
    pub mass: f64,
    pub potentials: Vec<Vec<f64>>,
    pub couplings: Vec<CouplingBlock>,
}

impl HamiltonianSnapshot {
    pub fn n_channels(&self) -> usize {
        self.potentials.len()
    }

    /// Checks block structure: valid distinct indices, one block per
    /// unordered pair, finite values, arrays matching the grid.
    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        let n = self.n_channels();
        if n == 0 {
            return Err(Error::InvalidInput("Hamiltonian has no channels".into()));
        }
        if !(self.mass > 0.0) {
            return Err(Error::InvalidInput(format!("mass must be positive, got {}", self.mass)));
        }
        for v in &self.potentials {
            if v.len() != grid.n_points() {
                return Err(Error::GridMismatch(format!("potential has {} points", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("potential value".into()));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for b in &self.couplings {
            if b.row >= n || b.col >= n || b.row == b.col {
                return Err(Error::InvalidInput(format!(
                    "invalid coupling block ({}, {})",
                    b.row, b.col
                )));
            }
            if !seen.insert((b.row.min(b.col), b.row.max(b.col))) {
                return Err(Error::InvalidInput(format!(
                    "duplicate coupling block for channels ({}, {})",
                    b.row, b.col
                )));
            }
            match &b.value {
                CouplingValue::Radial(v) => {
                    if v.len() != grid.n_points() {
                        return Err(Error::GridMismatch(format!("coupling has {} points", v.len())));
                    }
                    if v.iter().any(|x| !x.is_finite()) {
                        return Err(Error::NonFinite("coupling value".into()));
                    }
                }
                CouplingValue::Scalar(c) => {
                    if !c.re.is_finite() || !c.im.is_finite() {
                        return Err(Error::NonFinite("coupling value".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Matrix element `H_mn` of the channel block at grid point `k`
    /// (potential part only; kinetic energy excluded).
    pub fn element(&self, m: usize, n: usize, k: usize) -> C64 {
        if m == n {
            return C64::new(self.potentials[m][k], 0.0);
        }
        self.couplings
            .iter()
            .find_map(|b| {
                let v = match &b.value {
                    CouplingValue::Radial(v) => C64::new(v[k], 0.0),
                    CouplingValue::Scalar(c) => *c,
                };
                if (b.row, b.col) == (m, n) {
                    Some(v)
                } else if (b.row, b.col) == (n, m) {
                    Some(v.conj())
                } else {
                    None
                }
            })
            .unwrap_or_default()
    }
}

/// Chebyshev and time-stepping parameters (atomic units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub chebyshev_tolerance: f64,
    pub spectral_margin: f64,
    pub sample_stride: usize,
}

impl PropagationConfig {
    pub const DEFAULT_TOLERANCE: f64 = 1e-12;
    pub const DEFAULT_MARGIN: f64 = 1.1;

    pub fn new(dt: f64, t_start: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_start,
            t_end,
            chebyshev_tolerance: Self::DEFAULT_TOLERANCE,
            spectral_margin: Self::DEFAULT_MARGIN,
            sample_stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.t_start) {
            return Err(Error::InvalidInput(format!(
                "t_end ({}) precedes t_start ({})",
                self.t_end, self.t_start
            )));
        }
        if !(self.chebyshev_tolerance > 0.0 && self.chebyshev_tolerance < 1.0) {
            return Err(Error::InvalidInput(format!(
                "Chebyshev tolerance must lie in (0, 1), got {}",
                self.chebyshev_tolerance
            )));
        }
        if !(self.spectral_margin >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "spectral margin must be ≥ 1, got {}",
                self.spectral_margin
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidInput("sample stride must be ≥ 1".into()));
        }
        Ok(())
    }

    /// Number of steps and the effective step that lands exactly on `t_end`.
    pub fn steps(&self) -> (usize, f64) {
        let span = self.t_end - self.t_start;
        if span <= 0.0 {
            return (0, self.dt);
        }
        let n = ((span / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, span / n as f64)
    }
}

/// Spectral bounds `(E_min, E_max)` of the snapshot on `grid`, widened by
/// `margin` about their midpoint. Coupling magnitudes enter through a
/// Gershgorin bound on the channel block at every grid point.
pub fn spectral_range(h: &HamiltonianSnapshot, grid: &SpatialGrid, margin: f64) -> (f64, f64) {
    let n = h.n_channels();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut radius = vec![0.0; n];
    for k in 0..grid.n_points() {
        radius.iter_mut().for_each(|r| *r = 0.0);
        for b in &h.couplings {
            let m = b.magnitude_at(k);
            radius[b.row] += m;
            radius[b.col] += m;
        }
        for (c, r) in radius.iter().enumerate() {
            let v = h.potentials[c][k];
            lo = lo.min(v - r);
            hi = hi.max(v + r);
        }
    }
    hi += grid.kinetic_max(h.mass);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo) * margin;
    (mid - half, mid + half)
}

/// Applies the channel Hamiltonian, reusing kinetic-transform buffers.
struct HamiltonianApplier {
    kinetic: KineticOperator,
    work: KineticWorkspace,
}

impl HamiltonianApplier {
    fn new(grid: SpatialGrid, mass: f64) -> Result<Self> {
        let kinetic = KineticOperator::new(grid, mass)?;
        let work = kinetic.workspace();
        Ok(Self { kinetic, work })
    }

    /// `out = (2 H ψ - (E_max + E_min) ψ) / (E_max - E_min)`.
    fn apply_normalized(
        &mut self,
        h: &HamiltonianSnapshot,
        range: (f64, f64),
        input: &[Vec<C64>],
        out: &mut [Vec<C64>],
    ) {
        let scale = 2.0 / (range.1 - range.0);
        let shift = range.1 + range.0;
        for (c, (psi, o)) in input.iter().zip(out.iter_mut()).enumerate() {
            self.kinetic.apply_into(psi, o, &mut self.work);
            for ((o, p), v) in o.iter_mut().zip(psi).zip(&h.potentials[c]) {
                *o += p * *v;
            }
        }
        for b in &h.couplings {
            let (r, c) = (b.row, b.col);
            match &b.value {
                CouplingValue::Radial(v) => {
                    for k in 0..v.len() {
                        let (a_r, a_c) = (input[r][k], input[c][k]);
                        out[r][k] += a_c * v[k];
                        out[c][k] += a_r * v[k];
                    }
                }
                CouplingValue::Scalar(w) => {
                    let wc = w.conj();
                    for k in 0..input[r].len() {
                        let (a_r, a_c) = (input[r][k], input[c][k]);
                        out[r][k] += a_c * w;
                        out[c][k] += a_r * wc;
                    }
                }
            }
        }
        let half_shift = 0.5 * shift;
        for (psi, o) in input.iter().zip(out.iter_mut()) {
            for (o, p) in o.iter_mut().zip(psi) {
                *o = (*o - p * half_shift) * scale;
            }
        }
    }
}

/// Chebyshev coefficients `a_k` of `exp(-i α x)` truncated at the tolerance.
#[derive(Debug, Clone)]
pub struct ChebyshevSeries {
    pub alpha: f64,
    pub coefficients: Vec<C64>,
}

impl ChebyshevSeries {
    pub fn new(alpha: f64, tol: f64) -> Result<Self> {
        if alpha == 0.0 {
            return Ok(Self {
                alpha,
                coefficients: vec![C64::new(1.0, 0.0)],
            });
        }
        let cap = (10.0 * alpha + 100.0).floor() as usize;
        let j = bessel_j_sequence(alpha, cap);
        let first = alpha.ceil() as usize;
        let order = (first..=cap).find(|&k| (2.0 * j[k]).abs() < tol).ok_or_else(|| {
            Error::Numerical(format!(
                "Chebyshev series for α = {alpha:.3e} does not converge within {cap} terms; reduce dt"
            ))
        })?;
        let mut phase = C64::new(1.0, 0.0);
        let coefficients = (0..order)
            .map(|k| {
                let a = if k == 0 { j[0] * phase } else { 2.0 * j[k] * phase };
                phase *= C64::new(0.0, -1.0);
                a
            })
            .collect();
        Ok(Self { alpha, coefficients })
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// Reusable Chebyshev stepper for one grid and mass.
pub struct ChebyshevStepper {
    grid: SpatialGrid,
    applier: HamiltonianApplier,
    series: Option<(f64, f64, ChebyshevSeries)>,
    tolerance: f64,
    prev: Vec<Vec<C64>>,
    cur: Vec<Vec<C64>>,
    next: Vec<Vec<C64>>,
    acc: Vec<Vec<C64>>,
}

impl ChebyshevStepper {
    pub fn new(grid: SpatialGrid, mass: f64, n_channels: usize, tolerance: f64) -> Result<Self> {
        let zeros = vec![vec![C64::new(0.0, 0.0); grid.n_points()]; n_channels];
        Ok(Self {
            grid,
            applier: HamiltonianApplier::new(grid, mass)?,
            series: None,
            tolerance,
            prev: zeros.clone(),
            cur: zeros.clone(),
            next: zeros.clone(),
            acc: zeros,
        })
    }

    fn series(&mut self, dt: f64, range: (f64, f64)) -> Result<&ChebyshevSeries> {
        let alpha = 0.5 * (range.1 - range.0) * dt;
        let stale = match &self.series {
            Some((a, tol, _)) => *a != alpha || *tol != self.tolerance,
            None => true,
        };
        if stale {
            self.series = Some((alpha, self.tolerance, ChebyshevSeries::new(alpha, self.tolerance)?));
        }
        Ok(&self.series.as_ref().unwrap().2)
    }

    /// Advances `state` in place by `dt` under the frozen Hamiltonian `h`.
    pub fn step(
        &mut self,
        state: &mut ChannelState,
        h: &HamiltonianSnapshot,
        dt: f64,
        range: (f64, f64),
    ) -> Result<()> {
        self.grid.ensure_same(state.grid())?;
        debug_assert!(
            h.validate(&self.grid).is_ok(),
            "non-Hermitian or malformed Hamiltonian snapshot"
        );
        if dt == 0.0 {
            return Ok(());
        }
        if !(range.1 > range.0) {
            return Err(Error::Numerical(format!("degenerate spectral range {range:?}")));
        }
        let coeffs = self.series(dt, range)?.coefficients.clone();
        let n_ch = state.n_channels();
        let n = self.grid.n_points();

        for (c, wf) in state.channels.iter().enumerate() {
            self.prev[c].copy_from_slice(wf.amplitudes());
            for k in 0..n {
                self.acc[c][k] = self.prev[c][k] * coeffs[0];
            }
        }
        if coeffs.len() > 1 {
            self.applier
                .apply_normalized(h, range, &self.prev[..n_ch], &mut self.cur[..n_ch]);
            for c in 0..n_ch {
                for k in 0..n {
                    self.acc[c][k] += self.cur[c][k] * coeffs[1];
                }
            }
        }
        for a in coeffs.iter().skip(2) {
            self.applier
                .apply_normalized(h, range, &self.cur[..n_ch], &mut self.next[..n_ch]);
            for c in 0..n_ch {
                for k in 0..n {
                    let v = 2.0 * self.next[c][k] - self.prev[c][k];
                    self.next[c][k] = v;
                    self.acc[c][k] += v * a;
                }
            }
            std::mem::swap(&mut self.prev, &mut self.cur);
            std::mem::swap(&mut self.cur, &mut self.next);
        }

        let global = C64::from_polar(1.0, -0.5 * (range.1 + range.0) * dt);
        for (c, wf) in state.channels.iter_mut().enumerate() {
            let amps = wf.amplitudes_mut();
            for (k, a) in amps.iter_mut().enumerate() {
                let v = self.acc[c][k] * global;
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::Numerical(
                        "non-finite amplitudes after Chebyshev step (spectral range violated?)".into(),
                    ));
                }
                *a = v;
            }
        }
        state.time += dt;
        Ok(())
    }
}

/// One Chebyshev step `exp(-i H dt) ψ` as a standalone operation.
pub fn chebyshev_step(
    state: &ChannelState,
    h: &HamiltonianSnapshot,
    dt: f64,
    range: (f64, f64),
    tol: f64,
) -> Result<ChannelState> {
    if dt < 0.0 {
        return Err(Error::InvalidInput(format!("dt must be non-negative, got {dt}")));
    }
    h.validate(state.grid())?;
    let mut stepper = ChebyshevStepper::new(*state.grid(), h.mass, state.n_channels(), tol)?;
    let mut out = state.clone();
    stepper.step(&mut out, h, dt, range)?;
    Ok(out)
}

/// A laser coupling active in the current RWA frame:
/// block `(upper, lower) = -W_L f(t) exp(-i φ(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drive {
    pub pulse: PulseSpec,
}

impl Drive {
    pub fn block_at(&self, t: f64) -> CouplingBlock {
        let p = &self.pulse;
        let value = C64::from_polar(-p.w_l * p.envelope(t), -p.phase(t));
        CouplingBlock {
            row: p.channels.1,
            col: p.channels.0,
            value: CouplingValue::Scalar(value),
        }
    }

    /// Block with the largest magnitude the drive reaches.
    pub fn peak_block(&self) -> CouplingBlock {
        CouplingBlock {
            row: self.pulse.channels.1,
            col: self.pulse.channels.0,
            value: CouplingValue::Scalar(C64::new((self.pulse.w_l * self.pulse.peak()).abs(), 0.0)),
        }
    }
}

/// Static Hamiltonian plus time-dependent laser drives.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDependentHamiltonian {
    pub base: HamiltonianSnapshot,
    pub drives: Vec<Drive>,
}

impl TimeDependentHamiltonian {
    pub fn snapshot(&self, t: f64) -> HamiltonianSnapshot {
        let mut h = self.base.clone();
        h.couplings.extend(self.drives.iter().map(|d| d.block_at(t)));
        h
    }

    /// Snapshot whose spectral bounds enclose those of every instant.
    pub fn envelope_snapshot(&self) -> HamiltonianSnapshot {
        let mut h = self.base.clone();
        h.couplings.extend(self.drives.iter().map(|d| d.peak_block()));
        h
    }

    fn fill_snapshot(&self, t: f64, h: &mut HamiltonianSnapshot) {
        let n_static = self.base.couplings.len();
        h.couplings.truncate(n_static);
        h.couplings.extend(self.drives.iter().map(|d| d.block_at(t)));
    }
}

/// Integrates from `config.t_start` to `config.t_end`. The observer sees the
/// initial state, every `sample_stride`-th step, and the final state.
pub fn propagate<F>(
    initial: &ChannelState,
    hamiltonian: &TimeDependentHamiltonian,
    config: &PropagationConfig,
    mut observer: F,
) -> Result<ChannelState>
where
    F: FnMut(&ChannelState) -> Result<()>,
{
    config.validate()?;
    let grid = *initial.grid();
    hamiltonian.envelope_snapshot().validate(&grid)?;
    if hamiltonian.base.n_channels() != initial.n_channels() {
        return Err(Error::InvalidInput(format!(
            "state has {} channels, Hamiltonian {}",
            initial.n_channels(),
            hamiltonian.base.n_channels()
        )));
    }
    let range = spectral_range(&hamiltonian.envelope_snapshot(), &grid, config.spectral_margin);
    let (n_steps, dt) = config.steps();
    let mut stepper = ChebyshevStepper::new(
        grid,
        hamiltonian.base.mass,
        initial.n_channels(),
        config.chebyshev_tolerance,
    )?;

    let mut state = initial.clone();
    state.time = config.t_start;
    let norm0 = state.total_norm_sqr();
    observer(&state)?;
    let mut h = hamiltonian.snapshot(config.t_start);
    for step in 1..=n_steps {
        let t0 = config.t_start + (step - 1) as f64 * dt;
        hamiltonian.fill_snapshot(t0 + 0.5 * dt, &mut h);
        stepper.step(&mut state, &h, dt, range)?;
        // Avoid accumulating roundoff in the clock.
        state.time = config.t_start + step as f64 * dt;
        let drift = (state.total_norm_sqr() - norm0).abs();
        if drift > NORM_ABORT {
            return Err(Error::NormDrift {
                drift,
                time: state.time,
                limit: NORM_ABORT,
            });
        }
        if step % config.sample_stride == 0 || step == n_steps {
            observer(&state)?;
        }
    }
    Ok(state)
}

/// Conservative step: resolves the envelope, the chirped Rabi cycling and the
/// spectral content at once.
pub fn default_time_step(pulses: &[PulseSpec], range: (f64, f64)) -> f64 {
    let spectral = 2.0 * std::f64::consts::PI / (10.0 * (range.1 - range.0));
    pulses.iter().fold(spectral, |dt, p| {
        let mut dt = dt.min(p.tau_c / 2000.0);
        if let Ok(t) = p.chirped_rabi_period() {
            dt = dt.min(t / 200.0);
        }
        dt
    })
}

/// Overlap `⟨a|b⟩` of two raw amplitude buffers on `grid`.
pub fn overlap(grid: &SpatialGrid, a: &[C64], b: &[C64]) -> C64 {
    inner_product_raw(grid.spacing(), a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner_product;
    use crate::potentials::PotentialCurve;
    use crate::vibrational::{solve_levels, LevelSelection};

    fn flat(grid: &SpatialGrid, value: f64) -> Vec<f64> {
        vec![value; grid.n_points()]
    }

    #[test]
    fn free_particle_range() {
        let grid = SpatialGrid::new(0.0, 10.0, 64).unwrap();
        let h = HamiltonianSnapshot {
            mass: 2.0,
            potentials: vec![flat(&grid, 0.0)],
            couplings: vec![],
        };
        let (lo, hi) = spectral_range(&h, &grid, 1.1);
        assert!(lo <= 0.0);
        assert!(hi >= (64.0 * std::f64::consts::PI / 10.0).powi(2) / 4.0);
    }

    #[test]
    fn range_gauge_shift_and_coupling_widening() {
        let grid = SpatialGrid::new(0.0, 10.0, 64).unwrap();
        let base = HamiltonianSnapshot {
            mass: 2.0,
            potentials: vec![flat(&grid, 0.1), flat(&grid, -0.2)],
            couplings: vec![],
        };
        let (lo, hi) = spectral_range(&base, &grid, 1.1);
        let mut shifted = base.clone();
        shifted
            .potentials
            .iter_mut()
            .for_each(|v| v.iter_mut().for_each(|x| *x += 0.37));
        let (lo2, hi2) = spectral_range(&shifted, &grid, 1.1);
        assert!((lo2 - lo - 0.37).abs() < 1e-12 && (hi2 - hi - 0.37).abs() < 1e-12);

        let w = 0.05;
        let mut coupled = base.clone();
        coupled.couplings.push(CouplingBlock {
            row: 0,
            col: 1,
            value: CouplingValue::Scalar(C64::new(0.0, w)),
        });
        let (lo3, hi3) = spectral_range(&coupled, &grid, 1.0);
        let (lo1, hi1) = spectral_range(&base, &grid, 1.0);
        assert!(
            lo3 <= lo1 - w + 1e-12 && hi3 >= hi1 + w - 1e-12,
            "{lo3} {lo1} {hi3} {hi1}"
        );
    }

    #[test]
    fn eigenvector_acquires_phase() {
        let grid = SpatialGrid::new(-2.0, 2.0, 128).unwrap();
        let mass = 1000.0;
        let curve = PotentialCurve::harmonic(0.01, 0.0, 0.0, mass).unwrap();
        let basis = solve_levels(&grid, &curve, mass, 0, LevelSelection::Count(3)).unwrap();
        let level = &basis.levels()[2];
        let h = HamiltonianSnapshot {
            mass,
            potentials: vec![curve.sample(&grid).unwrap()],
            couplings: vec![],
        };
        let range = spectral_range(&h, &grid, 1.1);
        let state = ChannelState::single(0.0, 1, 0, level.wavefunction.clone()).unwrap();
        let dt = 37.0;
        let out = chebyshev_step(&state, &h, dt, range, 1e-14).unwrap();
        let phase = C64::from_polar(1.0, -level.energy * dt);
        for (a, b) in out.channel(0).amplitudes().iter().zip(level.wavefunction.amplitudes()) {
            assert!((a - b * phase).norm() < 1e-12 * 3.0, "{}", (a - b * phase).norm());
        }
        assert!((out.total_norm_sqr() - 1.0).abs() < 1e-12);
        assert_eq!(out.time, dt);
    }

    #[test]
    fn zero_step_is_identity() {
        let grid = SpatialGrid::new(0.0, 5.0, 32).unwrap();
        let psi = RadialWavefunction::gaussian(grid, 2.5, 0.4, 1.0).unwrap();
        let state = ChannelState::single(1.0, 2, 1, psi).unwrap();
        let h = HamiltonianSnapshot {
            mass: 1.0,
            potentials: vec![flat(&grid, 0.0); 2],
            couplings: vec![],
        };
        let out = chebyshev_step(&state, &h, 0.0, spectral_range(&h, &grid, 1.1), 1e-12).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn two_level_constant_functions_match_matrix_exponential() {
        // Both channels hold the same lowest sine mode; its kinetic energy is a
        // common offset, so the channel amplitudes follow the 2×2 exponential of
        // [[e_a, w], [w*, e_b]] exactly.
        let grid = SpatialGrid::new(0.0, 10.0, 32).unwrap();
        let mass = 1.0;
        let (e_a, e_b) = (0.02, -0.01);
        let w = C64::new(0.015, -0.008);
        let h = HamiltonianSnapshot {
            mass,
            potentials: vec![flat(&grid, e_a), flat(&grid, e_b)],
            couplings: vec![CouplingBlock {
                row: 0,
                col: 1,
                value: CouplingValue::Scalar(w),
            }],
        };
        let mode = grid.sine_mode(1);
        let t1 = grid.mode_energy(1, mass);
        let state = ChannelState::new(0.0, vec![mode.clone(), RadialWavefunction::zeros(grid)]).unwrap();
        let dt = 55.0;
        let out = chebyshev_step(&state, &h, dt, spectral_range(&h, &grid, 1.1), 1e-14).unwrap();

        // Closed-form exp(-i M dt) for Hermitian 2×2 M = m0 I + σ·n.
        let m0 = 0.5 * (e_a + e_b) + t1;
        let dz = 0.5 * (e_a - e_b);
        let omega = (dz * dz + w.norm_sqr()).sqrt();
        let (c, s) = ((omega * dt).cos(), (omega * dt).sin());
        let g = C64::from_polar(1.0, -m0 * dt);
        let u00 = g * C64::new(c, -s * dz / omega);
        let u10 = g * C64::new(0.0, -s / omega) * w.conj();
        let a0 = inner_product(&mode, out.channel(0)).unwrap();
        let a1 = inner_product(&mode, out.channel(1)).unwrap();
        assert!((a0 - u00).norm() < 1e-10, "{a0} vs {u00}");
        assert!((a1 - u10).norm() < 1e-10, "{a1} vs {u10}");
    }

    #[test]
    fn one_step_equals_two_half_steps() {
        let grid = SpatialGrid::new(1.0, 9.0, 96).unwrap();
        let mass = 500.0;
        let v0 = PotentialCurve::morse(0.05, 1.0, 3.0, 0.0)
            .unwrap()
            .sample(&grid)
            .unwrap();
        let v1 = PotentialCurve::harmonic(0.008, 4.0, -0.03, mass)
            .unwrap()
            .sample(&grid)
            .unwrap();
        let h = HamiltonianSnapshot {
            mass,
            potentials: vec![v0, v1],
            couplings: vec![CouplingBlock {
                row: 1,
                col: 0,
                value: CouplingValue::Radial(
                    grid.points()
                        .iter()
                        .map(|r| 0.004 * (-(r - 4.0).powi(2)).exp())
                        .collect(),
                ),
            }],
        };
        let range = spectral_range(&h, &grid, 1.1);
        let psi = RadialWavefunction::gaussian(grid, 3.5, 0.3, 2.0).unwrap();
        let state = ChannelState::single(0.0, 2, 0, psi).unwrap();
        let dt = 40.0;
        let full = chebyshev_step(&state, &h, dt, range, 1e-14).unwrap();
        let half = chebyshev_step(&state, &h, dt / 2.0, range, 1e-14).unwrap();
        let twice = chebyshev_step(&half, &h, dt / 2.0, range, 1e-14).unwrap();
        for c in 0..2 {
            for (a, b) in full.channel(c).amplitudes().iter().zip(twice.channel(c).amplitudes()) {
                assert!((a - b).norm() < 1e-11);
            }
        }
        assert!((full.total_norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn series_respects_bessel_plateau_and_cap() {
        let s = ChebyshevSeries::new(300.0, 1e-12).unwrap();
        assert!(s.order() as f64 >= 300.0);
        assert!(s.order() < 400);
        assert_eq!(ChebyshevSeries::new(0.0, 1e-12).unwrap().order(), 1);
    }

    #[test]
    fn snapshot_validation() {
        let grid = SpatialGrid::new(0.0, 5.0, 16).unwrap();
        let mut h = HamiltonianSnapshot {
            mass: 1.0,
            potentials: vec![flat(&grid, 0.0); 2],
            couplings: vec![],
        };
        h.couplings.push(CouplingBlock {
            row: 0,
            col: 1,
            value: CouplingValue::Scalar(C64::new(1.0, 0.0)),
        });
        assert!(h.validate(&grid).is_ok());
        assert_eq!(h.element(1, 0, 3), C64::new(1.0, 0.0));
        h.couplings.push(CouplingBlock {
            row: 1,
            col: 0,
            value: CouplingValue::Scalar(C64::new(1.0, 0.0)),
        });
        assert!(h.validate(&grid).is_err());
        h.couplings.truncate(1);
        h.couplings.push(CouplingBlock {
            row: 1,
            col: 1,
            value: CouplingValue::Scalar(C64::new(1.0, 0.0)),
        });
        assert!(h.validate(&grid).is_err());
    }

    #[test]
    fn stationary_state_stays_put() {
        let grid = SpatialGrid::new(-2.0, 2.0, 64).unwrap();
        let mass = 1000.0;
        let curve = PotentialCurve::harmonic(0.01, 0.0, 0.0, mass).unwrap();
        let basis = solve_levels(&grid, &curve, mass, 0, LevelSelection::Count(1)).unwrap();
        let e0 = basis.levels()[0].energy;
        let psi0 = basis.levels()[0].wavefunction.clone();
        let h = TimeDependentHamiltonian {
            base: HamiltonianSnapshot {
                mass,
                potentials: vec![curve.sample(&grid).unwrap(), curve.sample(&grid).unwrap()],
                couplings: vec![],
            },
            drives: vec![],
        };
        let init = ChannelState::single(0.0, 2, 0, psi0.clone()).unwrap();
        let mut config = PropagationConfig::new(10.0, 0.0, 1000.0);
        config.sample_stride = 10;
        let mut samples = Vec::new();
        let out = propagate(&init, &h, &config, |s| {
            samples.push((s.time, s.channel(0).norm_sqr(), s.channel(1).norm_sqr()));
            Ok(())
        })
        .unwrap();
        assert_eq!(samples.len(), 11);
        for (_, p0, p1) in &samples {
            assert!((p0 - 1.0).abs() < 1e-10 && *p1 < 1e-24, "{p0} {p1}");
        }
        let phase = C64::from_polar(1.0, -e0 * 1000.0);
        for (a, b) in out.channel(0).amplitudes().iter().zip(psi0.amplitudes()) {
            assert!((a - b * phase).norm() < 1e-10);
        }
        assert!((out.time - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_state_oscillates_at_trap_period() {
        let grid = SpatialGrid::new(-3.0, 3.0, 128).unwrap();
        let mass = 1000.0;
        let omega = 0.01;
        let curve = PotentialCurve::harmonic(omega, 0.0, 0.0, mass).unwrap();
        let h = TimeDependentHamiltonian {
            base: HamiltonianSnapshot {
                mass,
                potentials: vec![curve.sample(&grid).unwrap()],
                couplings: vec![],
            },
            drives: vec![],
        };
        // Ground-state width displaced by 0.5 a₀.
        let width = 1.0 / (mass * omega).sqrt();
        let psi = RadialWavefunction::gaussian(grid, 0.5, width, 0.0).unwrap();
        let init = ChannelState::single(0.0, 1, 0, psi).unwrap();
        let period = 2.0 * std::f64::consts::PI / omega;
        let config = PropagationConfig::new(period / 200.0, 0.0, 5.0 * period);
        let points = grid.points();
        let mut trace = Vec::new();
        propagate(&init, &h, &config, |s| {
            let mean: f64 = grid.spacing()
                * s.channel(0)
                    .amplitudes()
                    .iter()
                    .zip(&points)
                    .map(|(a, r)| a.norm_sqr() * r)
                    .sum::<f64>();
            trace.push((s.time, mean));
            Ok(())
        })
        .unwrap();
        // ⟨R⟩(t) = 0.5 cos(ω t); compare maxima times with the analytic period.
        for (t, r) in &trace {
            assert!((r - 0.5 * (omega * t).cos()).abs() < 2e-3, "t = {t}");
        }
        let upward: Vec<f64> = trace
            .windows(2)
            .filter(|w| w[0].1 < 0.0 && w[1].1 >= 0.0)
            .map(|w| w[0].0 + (w[1].0 - w[0].0) * (-w[0].1) / (w[1].1 - w[0].1))
            .collect();
        assert_eq!(upward.len(), 5);
        let measured = (upward[4] - upward[0]) / 4.0;
        assert!((measured - period).abs() / period < 1e-3, "{measured} vs {period}");
    }

    #[test]
    fn degenerate_flat_channels_full_transfer() {
        // Identical flat channels coupled by constant W: population moves
        // completely to the second channel at π/(2W), back at π/W.
        let grid = SpatialGrid::new(0.0, 10.0, 32).unwrap();
        let w = 0.002;
        let h = TimeDependentHamiltonian {
            base: HamiltonianSnapshot {
                mass: 1.0,
                potentials: vec![flat(&grid, 0.0); 2],
                couplings: vec![CouplingBlock {
                    row: 1,
                    col: 0,
                    value: CouplingValue::Radial(flat(&grid, w)),
                }],
            },
            drives: vec![],
        };
        let init = ChannelState::single(0.0, 2, 0, grid.sine_mode(1)).unwrap();
        let quarter = std::f64::consts::PI / (2.0 * w);
        let out = propagate(&init, &h, &PropagationConfig::new(quarter / 50.0, 0.0, quarter), |_| {
            Ok(())
        })
        .unwrap();
        assert!(out.channel(1).norm_sqr() > 1.0 - 1e-10);
        let out = propagate(
            &init,
            &h,
            &PropagationConfig::new(quarter / 50.0, 0.0, 2.0 * quarter),
            |_| Ok(()),
        )
        .unwrap();
        assert!(out.channel(0).norm_sqr() > 1.0 - 1e-10);
    }

    #[test]
    fn config_validation_and_steps() {
        assert!(PropagationConfig::new(0.0, 0.0, 1.0).validate().is_err());
        assert!(PropagationConfig::new(1.0, 2.0, 1.0).validate().is_err());
        let mut c = PropagationConfig::new(1.0, 0.0, 10.0);
        c.chebyshev_tolerance = 1.0;
        assert!(c.validate().is_err());
        c.chebyshev_tolerance = 1e-12;
        c.spectral_margin = 0.9;
        assert!(c.validate().is_err());
        assert_eq!(PropagationConfig::new(0.3, 0.0, 1.0).steps(), (4, 0.25));
        assert_eq!(PropagationConfig::new(0.25, 0.0, 1.0).steps(), (4, 0.25));
        assert_eq!(PropagationConfig::new(0.25, 1.0, 1.0).steps().0, 0);
    }

    #[test]
    fn norm_drift_aborts() {
        // A spectral range far too narrow makes the series blow up or drift.
        let grid = SpatialGrid::new(0.0, 10.0, 64).unwrap();
        let h = HamiltonianSnapshot {
            mass: 0.01,
            potentials: vec![flat(&grid, 0.0)],
            couplings: vec![],
        };
        let psi = RadialWavefunction::gaussian(grid, 5.0, 0.3, 0.0).unwrap();
        let state = ChannelState::single(0.0, 1, 0, psi).unwrap();
        let result = chebyshev_step(&state, &h, 1.0, (0.0, 1.0), 1e-12);
        match result {
            Err(_) => {}
            Ok(s) => assert!((s.total_norm_sqr() - 1.0).abs() > 1e-6),
        }
    }
}
