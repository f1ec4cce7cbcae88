//! Single-channel vibrational eigenproblem on the sine-DVR grid, Franck–Condon
//! overlaps and projections of wavepackets onto vibrational bases.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{centrifugal_term, inner_product, kinetic_matrix, RadialWavefunction, SpatialGrid};
use crate::potentials::PotentialCurve;
use crate::units;

/// Levels closer than this to the asymptote do not count as bound.
pub const BOUND_MARGIN: f64 = 1e-10;

/// Amplitudes below this fraction of the peak are ignored when fixing the
/// phase and when counting nodes.
const PHASE_THRESHOLD: f64 = 1e-8;

/// Which eigenpairs [`solve_levels`] returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSelection {
    /// The lowest `n` levels; all of them must be bound.
    Count(usize),
    /// Every level with energy below the ceiling (hartree).
    Below(f64),
    /// The complete DVR spectrum, bound or not.
    All,
}

#[derive(Debug, Clone)]
pub struct Level {
    pub v: usize,
    pub energy: f64,
    pub wavefunction: RadialWavefunction,
}

#[derive(Debug, Clone)]
pub struct VibrationalBasis {
    channel: usize,
    mass: f64,
    j: u32,
    asymptote: Option<f64>,
    levels: Vec<Level>,
}

impl VibrationalBasis {
    pub fn channel(&self) -> usize {
        self.channel
    }

    pub fn with_channel(mut self, channel: usize) -> Self {
        self.channel = channel;
        self
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, v: usize) -> Option<&Level> {
        self.levels.get(v)
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    /// Highest level strictly below `asymptote - BOUND_MARGIN`.
    pub fn last_bound(&self) -> Option<&Level> {
        let limit = self.asymptote? - BOUND_MARGIN;
        self.levels.iter().rev().find(|l| l.energy < limit)
    }

    /// Number of levels below the dissociation limit (all, for unbounded curves).
    pub fn bound_count(&self) -> usize {
        match self.asymptote {
            Some(a) => self.levels.iter().filter(|l| l.energy < a - BOUND_MARGIN).count(),
            None => self.levels.len(),
        }
    }

    pub fn truncated(&self, n: usize) -> Self {
        Self {
            levels: self.levels[..n.min(self.levels.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn write_levels_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["v", "E_cm1"]).map_err(|e| csv_error(path, e))?;
        for l in &self.levels {
            w.write_record([
                l.v.to_string(),
                format!("{:.12e}", units::energy_from_internal(l.energy)),
            ])
            .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes `R_a0, re, im` rows for one wavefunction.
pub fn write_wavefunction_csv(psi: &RadialWavefunction, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "R_a0,re,im").map_err(io)?;
    for (r, a) in psi.grid().points().iter().zip(psi.amplitudes()) {
        writeln!(out, "{r:.12e},{:.12e},{:.12e}", a.re, a.im).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Dense DVR Hamiltonian `T + V + J(J+1)/2μR²`.
pub fn dvr_hamiltonian(grid: &SpatialGrid, curve: &PotentialCurve, mass: f64, j: u32) -> Result<DMatrix<f64>> {
    let mut h = kinetic_matrix(grid, mass);
    let v = curve.sample(grid)?;
    let c = centrifugal_term(grid, mass, j)?;
    for k in 0..grid.n_points() {
        h[(k, k)] += v[k] + c[k];
    }
    Ok(h)
}

/// Eigenpairs of one channel's DVR Hamiltonian, ascending in energy.
pub fn solve_levels(
    grid: &SpatialGrid,
    curve: &PotentialCurve,
    mass: f64,
    j: u32,
    selection: LevelSelection,
) -> Result<VibrationalBasis> {
    if let LevelSelection::Count(0) = selection {
        return Err(Error::InvalidInput("at least one level must be requested".into()));
    }
    let h = dvr_hamiltonian(grid, curve, mass, j)?;
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..grid.n_points()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let asymptote = curve.asymptote();
    let bound = |e: f64| asymptote.is_none_or(|a| e < a - BOUND_MARGIN);
    let keep = match selection {
        LevelSelection::Count(n) => {
            let found = order.iter().take_while(|&&i| bound(eig.eigenvalues[i])).count();
            if found < n {
                return Err(Error::LevelShortfall { requested: n, found });
            }
            n
        }
        LevelSelection::Below(ceiling) => order.iter().take_while(|&&i| eig.eigenvalues[i] < ceiling).count(),
        LevelSelection::All => order.len(),
    };

    let scale = 1.0 / grid.spacing().sqrt();
    let levels = order[..keep]
        .iter()
        .enumerate()
        .map(|(v, &i)| {
            let column = eig.eigenvectors.column(i);
            let mut amps: Vec<C64> = column.iter().map(|&x| C64::new(x * scale, 0.0)).collect();
            fix_phase(&mut amps);
            Ok(Level {
                v,
                energy: eig.eigenvalues[i],
                wavefunction: RadialWavefunction::new(*grid, amps)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(VibrationalBasis {
        channel: 0,
        mass,
        j,
        asymptote,
        levels,
    })
}

/// Rotates the global phase so that the first significant amplitude, scanning
/// from `r_min`, is real and positive.
pub fn fix_phase(amps: &mut [C64]) {
    let peak = amps.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    if let Some(first) = amps.iter().find(|a| a.norm() > PHASE_THRESHOLD * peak) {
        let rot = first.conj() / first.norm();
        amps.iter_mut().for_each(|a| *a *= rot);
    }
}

/// Sign changes of the real part, ignoring negligible amplitudes.
pub fn node_count(psi: &RadialWavefunction) -> usize {
    let peak = psi.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut nodes = 0;
    let mut last_sign = 0.0;
    for a in psi.amplitudes() {
        if a.re.abs() <= PHASE_THRESHOLD * peak {
            continue;
        }
        let s = a.re.signum();
        if last_sign != 0.0 && s != last_sign {
            nodes += 1;
        }
        last_sign = s;
    }
    nodes
}

/// Overlap `⟨χ_a|χ_b⟩` and Franck–Condon factor `|⟨χ_a|χ_b⟩|²`.
pub fn franck_condon(a: &RadialWavefunction, b: &RadialWavefunction) -> Result<(C64, f64)> {
    let overlap = inner_product(a, b)?;
    Ok((overlap, overlap.norm_sqr()))
}

/// Overlap matrix `⟨χ_va|χ_vb⟩` between the first `na` and `nb` levels.
pub fn overlap_matrix(a: &VibrationalBasis, b: &VibrationalBasis, na: usize, nb: usize) -> Result<DMatrix<C64>> {
    if na > a.len() || nb > b.len() {
        return Err(Error::LevelShortfall {
            requested: na.max(nb),
            found: if na > a.len() { a.len() } else { b.len() },
        });
    }
    let mut m = DMatrix::zeros(na, nb);
    for (i, la) in a.levels[..na].iter().enumerate() {
        for (j, lb) in b.levels[..nb].iter().enumerate() {
            m[(i, j)] = inner_product(&la.wavefunction, &lb.wavefunction)?;
        }
    }
    Ok(m)
}

/// Expansion coefficients of one channel's wavepacket in its vibrational basis.
#[derive(Debug, Clone)]
pub struct CoefficientVector {
    pub channel: usize,
    pub coefficients: Vec<C64>,
    /// Population not captured by the retained levels.
    pub residual: f64,
}

impl CoefficientVector {
    pub fn population(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>() + self.residual
    }
}

/// `c_v = ⟨χ_v|ψ⟩` for every level of the basis.
pub fn project(psi: &RadialWavefunction, basis: &VibrationalBasis) -> Result<CoefficientVector> {
    let coefficients = basis
        .levels
        .iter()
        .map(|l| inner_product(&l.wavefunction, psi))
        .collect::<Result<Vec<_>>>()?;
    let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    Ok(CoefficientVector {
        channel: basis.channel,
        coefficients,
        residual: psi.norm_sqr() - captured,
    })
}

/// `Σ_v c_v χ_v`.
pub fn reconstruct(coeffs: &CoefficientVector, basis: &VibrationalBasis) -> Result<RadialWavefunction> {
    let grid = *basis
        .levels
        .first()
        .ok_or_else(|| Error::InvalidInput("empty basis".into()))?
        .wavefunction
        .grid();
    let mut psi = RadialWavefunction::zeros(grid);
    for (c, l) in coeffs.coefficients.iter().zip(&basis.levels) {
        psi.axpy(*c, &l.wavefunction)?;
    }
    Ok(psi)
}
