//! Uniform radial grid with hard walls and the sine-DVR kinetic operator.
//!
//! Grid points are `R_k = r_min + k Δ` for `k = 1..=n` with
//! `Δ = (r_max - r_min) / (n + 1)`; the walls themselves are excluded. The
//! sine modes `sin(m π (R - r_min) / L)`, `m = 1..=n`, sampled on the grid are
//! exact eigenvectors of the kinetic operator with eigenvalue
//! `(m π / L)² / 2μ`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of interior grid points.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    r_min: f64,
    r_max: f64,
    n_points: usize,
}

impl SpatialGrid {
    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self> {
        if !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::NonFinite(format!("grid bounds [{r_min}, {r_max}]")));
        }
        if r_max <= r_min {
            return Err(Error::InvalidInput(format!(
                "grid requires r_max > r_min, got [{r_min}, {r_max}]"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidInput(format!(
                "grid requires at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Ok(Self { r_min, r_max, n_points })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Box length between the two walls.
    pub fn length(&self) -> f64 {
        self.r_max - self.r_min
    }

    /// Grid spacing, which is also the quadrature weight of every point.
    pub fn spacing(&self) -> f64 {
        self.length() / (self.n_points + 1) as f64
    }

    /// Position of the grid point with zero-based index `k`.
    pub fn point(&self, k: usize) -> f64 {
        self.r_min + (k + 1) as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    /// Index of the grid point closest to `r`, clamped to the grid.
    pub fn nearest_index(&self, r: f64) -> usize {
        let k = ((r - self.r_min) / self.spacing()).round() as isize - 1;
        k.clamp(0, self.n_points as isize - 1) as usize
    }

    /// Largest wavenumber representable on the grid, `n π / L`.
    pub fn k_max(&self) -> f64 {
        self.n_points as f64 * PI / self.length()
    }

    /// Kinetic energy of sine mode `m` (1-based).
    pub fn mode_energy(&self, m: usize, mass: f64) -> f64 {
        let k = m as f64 * PI / self.length();
        k * k / (2.0 * mass)
    }

    /// Largest kinetic energy on the grid.
    pub fn kinetic_max(&self, mass: f64) -> f64 {
        self.mode_energy(self.n_points, mass)
    }

    pub fn ensure_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Sine mode `m` (1-based), normalized with the Δ-weighted norm.
    pub fn sine_mode(&self, m: usize) -> RadialWavefunction {
        let norm = (2.0 / self.length()).sqrt();
        let amplitudes = (0..self.n_points)
            .map(|k| {
                let x = (self.point(k) - self.r_min) / self.length();
                C64::new(norm * (m as f64 * PI * x).sin(), 0.0)
            })
            .collect();
        RadialWavefunction {
            grid: *self,
            amplitudes,
        }
    }
}

/// Radial function sampled on a grid, in units of a₀^(-1/2).
#[derive(Debug, Clone, PartialEq)]
pub struct RadialWavefunction {
    grid: SpatialGrid,
    amplitudes: Vec<C64>,
}

impl RadialWavefunction {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for {} grid points",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("wavefunction amplitude".into()));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            amplitudes: vec![C64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn from_real(grid: SpatialGrid, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| C64::new(v, 0.0)).collect())
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> C64) -> Result<Self> {
        Self::new(grid, grid.points().into_iter().map(f).collect())
    }

    /// Gaussian wavepacket `exp(-(R-center)²/(2 width²) + i p R)`, normalized on
    /// the grid.
    pub fn gaussian(grid: SpatialGrid, center: f64, width: f64, momentum: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian width must be positive, got {width}"
            )));
        }
        let mut psi = Self::from_fn(grid, |r| {
            let x = (r - center) / width;
            C64::from_polar((-0.5 * x * x).exp(), momentum * r)
        })?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.spacing() * self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Numerical(format!(
                "cannot normalize wavefunction with norm² {n}"
            )));
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(())
    }

    pub fn scale(&mut self, factor: C64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: C64, other: &RadialWavefunction) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        self.amplitudes
            .iter_mut()
            .zip(&other.amplitudes)
            .for_each(|(a, b)| *a += factor * b);
        Ok(())
    }

    /// Largest |amplitude| in the last 5% of grid points relative to the peak.
    pub fn edge_fraction(&self) -> f64 {
        let peak = self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.amplitudes.len();
        let tail = ((n as f64 * 0.05).ceil() as usize).max(1);
        self.amplitudes[n - tail..].iter().map(|a| a.norm()).fold(0.0, f64::max) / peak
    }
}

/// `Δ Σ conj(a_k) b_k`.
pub fn inner_product(a: &RadialWavefunction, b: &RadialWavefunction) -> Result<C64> {
    a.grid.ensure_same(&b.grid)?;
    Ok(inner_product_raw(a.grid.spacing(), &a.amplitudes, &b.amplitudes))
}

pub(crate) fn inner_product_raw(spacing: f64, a: &[C64], b: &[C64]) -> C64 {
    spacing * a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>()
}

/// Diagonal centrifugal potential `J(J+1) / (2 μ R²)`.
pub fn centrifugal_term(grid: &SpatialGrid, mass: f64, j: u32) -> Result<Vec<f64>> {
    if j == 0 {
        return Ok(vec![0.0; grid.n_points()]);
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
    }
    if grid.point(0) <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "centrifugal term needs R > 0, grid starts at {}",
            grid.point(0)
        )));
    }
    let jj = (j as f64) * (j as f64 + 1.0);
    Ok(grid.points().iter().map(|r| jj / (2.0 * mass * r * r)).collect())
}

/// Dense sine-DVR kinetic matrix (closed form of the sine-mode sum).
pub fn kinetic_matrix(grid: &SpatialGrid, mass: f64) -> DMatrix<f64> {
    let n = grid.n_points();
    let big_n = (n + 1) as f64;
    let l = grid.length();
    let pref = PI * PI / (2.0 * l * l) / (2.0 * mass);
    DMatrix::from_fn(n, n, |a, b| {
        let (i, j) = ((a + 1) as f64, (b + 1) as f64);
        if a == b {
            let s = (PI * i / big_n).sin();
            pref * ((2.0 * big_n * big_n + 1.0) / 3.0 - 1.0 / (s * s))
        } else {
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
            let sm = (PI * (i - j) / (2.0 * big_n)).sin();
            let sp = (PI * (i + j) / (2.0 * big_n)).sin();
            pref * sign * (1.0 / (sm * sm) - 1.0 / (sp * sp))
        }
    })
}

/// Kinetic operator `-(1/2μ) d²/dR²` applied through a fast sine transform.
#[derive(Clone)]
pub struct KineticOperator {
    grid: SpatialGrid,
    mass: f64,
    mode_energies: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for KineticOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KineticOperator")
            .field("grid", &self.grid)
            .field("mass", &self.mass)
            .finish()
    }
}

/// Scratch buffers for [`KineticOperator::apply_into`].
pub struct KineticWorkspace {
    buffer: Vec<C64>,
    modes: Vec<C64>,
    scratch: Vec<C64>,
}

impl KineticOperator {
    pub fn new(grid: SpatialGrid, mass: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
        }
        let mode_energies = (1..=grid.n_points()).map(|m| grid.mode_energy(m, mass)).collect();
        let fft = FftPlanner::new().plan_fft_forward(2 * (grid.n_points() + 1));
        Ok(Self {
            grid,
            mass,
            mode_energies,
            fft,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn workspace(&self) -> KineticWorkspace {
        KineticWorkspace {
            buffer: vec![C64::new(0.0, 0.0); self.fft.len()],
            modes: vec![C64::new(0.0, 0.0); self.grid.n_points()],
            scratch: vec![C64::new(0.0, 0.0); self.fft.get_inplace_scratch_len()],
        }
    }

    pub fn apply(&self, psi: &RadialWavefunction) -> Result<RadialWavefunction> {
        self.grid.ensure_same(psi.grid())?;
        let mut out = RadialWavefunction::zeros(self.grid);
        self.apply_into(psi.amplitudes(), &mut out.amplitudes, &mut self.workspace());
        Ok(out)
    }

    /// Writes `T ψ` into `output`. Both slices must have `n_points` entries.
    pub fn apply_into(&self, input: &[C64], output: &mut [C64], work: &mut KineticWorkspace) {
        let n = self.grid.n_points();
        debug_assert_eq!(input.len(), n);
        debug_assert_eq!(output.len(), n);
        let coeffs = &mut work.buffer;
        self.sine_transform(input, coeffs, &mut work.scratch);
        // coeffs[1..=n] now hold the sine coefficients S_m.
        for ((m, s), e) in work.modes.iter_mut().zip(&coeffs[1..=n]).zip(&self.mode_energies) {
            *m = s * e;
        }
        self.sine_transform(&work.modes, coeffs, &mut work.scratch);
        let scale = 2.0 / (n + 1) as f64;
        for (o, c) in output.iter_mut().zip(&coeffs[1..=n]) {
            *o = c * scale;
        }
    }

    /// DST-I: `S_m = Σ_k x_k sin(π m k / (n+1))`, stored at `out[m]`.
    fn sine_transform(&self, x: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        let n = x.len();
        let big_n = n + 1;
        let zero = C64::new(0.0, 0.0);
        out[0] = zero;
        out[big_n] = zero;
        for (k, &v) in x.iter().enumerate() {
            out[k + 1] = v;
            out[2 * big_n - (k + 1)] = -v;
        }
        self.fft.process_with_scratch(out, scratch);
        // FFT of the odd extension is -2i S_m.
        for v in out[1..=n].iter_mut() {
            *v = C64::new(-v.im, v.re) * 0.5;
        }
    }
}
