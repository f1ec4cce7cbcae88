//! Entanglement between the electronic and vibrational degrees of freedom,
//! evaluated from the electronic reduced density matrix.
//!
//! The reduced matrix is the Gram matrix of the channel wavepackets,
//! `ρ_mn = ⟨ψ_n|ψ_m⟩`, which needs no vibronic basis. The coefficient-form
//! purity is kept as an independent check of it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::inner_product;
use crate::propagator::ChannelState;
use crate::vibrational::CoefficientVector;

/// Eigenvalues this close to 0 or 1 are snapped onto the bound.
pub const CLIP_WINDOW: f64 = 1e-10;
/// Eigenvalues below `-NEGATIVE_LIMIT` indicate a corrupted state.
pub const NEGATIVE_LIMIT: f64 = 1e-8;
/// Largest anti-Hermitian part accepted by the eigensolver.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of the trace from 1 for entropies.
pub const TRACE_TOLERANCE: f64 = 1e-8;
/// `|S_exact - S_pop|` above which the population formula is flagged.
pub const DISCREPANCY_THRESHOLD: f64 = 1e-6;
/// Largest coefficient residual accepted by the coefficient formulas.
pub const RESIDUAL_LIMIT: f64 = 1e-8;

/// Electronic reduced density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    matrix: DMatrix<C64>,
}

impl ReducedDensityMatrix {
    /// Wraps a matrix after checking that it is square and Hermitian to
    /// [`HERMITIAN_TOLERANCE`]. The stored copy is exactly Hermitian.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "density matrix must be square and non-empty, got {}×{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("density matrix element".into()));
        }
        let adjoint = matrix.adjoint();
        let deviation = (&matrix - &adjoint).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > HERMITIAN_TOLERANCE {
            return Err(Error::NonHermitian(deviation));
        }
        Ok(Self {
            matrix: (matrix + adjoint) * C64::new(0.5, 0.0),
        })
    }

    /// Diagonal matrix of populations, i.e. no interchannel coherence.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let n = populations.len();
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(populations[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }
}

/// `ρ_mn = ⟨ψ_n|ψ_m⟩`, Hermitized against roundoff.
pub fn reduced_density(state: &ChannelState) -> Result<ReducedDensityMatrix> {
    let ch = state.channels();
    let n = ch.len();
    let mut m = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        for j in i..n {
            let v = inner_product(&ch[j], &ch[i])?;
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
        m[(i, i)].im = 0.0;
    }
    ReducedDensityMatrix::from_matrix(m)
}

/// `P_n = ⟨ψ_n|ψ_n⟩`.
pub fn populations(state: &ChannelState) -> Vec<f64> {
    state.channels().iter().map(|c| c.norm_sqr()).collect()
}

/// Population of every channel inside `R ≤ r_cut`.
pub fn partial_population(state: &ChannelState, r_cut: f64) -> Result<Vec<f64>> {
    let grid = state.grid();
    if !(r_cut > grid.r_min() && r_cut <= grid.r_max()) {
        return Err(Error::OutOfRange {
            what: "R_cut".into(),
            value: r_cut,
            min: grid.r_min(),
            max: grid.r_max(),
        });
    }
    let points = grid.points();
    let inside = points.iter().take_while(|&&r| r <= r_cut).count();
    Ok(state
        .channels()
        .iter()
        .map(|c| grid.spacing() * c.amplitudes()[..inside].iter().map(|a| a.norm_sqr()).sum::<f64>())
        .collect())
}

/// Eigenvalues of `ρ` in descending order, snapped onto `[0, 1]` inside the
/// clipping window.
pub fn schmidt_spectrum(rho: &ReducedDensityMatrix) -> Result<Vec<f64>> {
    let eig = SymmetricEigen::new(rho.matrix.clone());
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    for v in values.iter_mut() {
        if *v < -NEGATIVE_LIMIT {
            return Err(Error::NegativeEigenvalue(*v));
        }
        if v.abs() < CLIP_WINDOW {
            *v = 0.0;
        } else if (*v - 1.0).abs() < CLIP_WINDOW {
            *v = 1.0;
        }
    }
    Ok(values)
}

fn shannon_bits(p: &[f64]) -> f64 {
    let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    // -0.0 when every term vanishes.
    s.max(0.0)
}

/// `-Σ λ log₂ λ` over the Schmidt spectrum.
pub fn von_neumann(rho: &ReducedDensityMatrix) -> Result<f64> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(Error::TraceViolation(trace));
    }
    Ok(shannon_bits(&schmidt_spectrum(rho)?))
}

/// Shannon entropy of the populations, which ignores interchannel coherence.
pub fn von_neumann_population_approx(populations: &[f64]) -> f64 {
    shannon_bits(populations)
}

/// `Tr ρ² = Σ_mn |ρ_mn|²`.
pub fn purity(rho: &ReducedDensityMatrix) -> f64 {
    rho.matrix.iter().map(|z| z.norm_sqr()).sum()
}

pub fn linear_entropy(rho: &ReducedDensityMatrix) -> f64 {
    1.0 - purity(rho)
}

/// `-log₂ Tr ρ²`.
pub fn renyi2(rho: &ReducedDensityMatrix) -> Result<f64> {
    let p = purity(rho);
    if !(p > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Rényi-2 entropy needs positive purity, got {p}"
        )));
    }
    Ok((-p.log2()).max(0.0))
}

/// Purity from vibrational expansion coefficients:
/// `Σ P_n² + 2 Σ_{m<n} |Σ c*_{m,a} c_{n,b} ⟨χ_{m,a}|χ_{n,b}⟩|²`.
///
/// `overlaps[(m, n)]` must hold the matrix of `⟨χ_{m,a}|χ_{n,b}⟩` for every
/// `m < n`, indexed `[a][b]`. For two normalized channels this is
/// `½ + ½ D² + 2 |…|²`.
pub fn purity_from_coefficients(
    coefficients: &[CoefficientVector],
    overlaps: &dyn Fn(usize, usize) -> Option<DMatrix<C64>>,
) -> Result<f64> {
    for c in coefficients {
        if c.residual.abs() > RESIDUAL_LIMIT {
            return Err(Error::ResidualTooLarge {
                channel: c.channel,
                residual: c.residual,
                limit: RESIDUAL_LIMIT,
            });
        }
    }
    let mut total: f64 = coefficients.iter().map(|c| c.population().powi(2)).sum();
    for m in 0..coefficients.len() {
        for n in (m + 1)..coefficients.len() {
            let f = overlaps(m, n)
                .ok_or_else(|| Error::InvalidInput(format!("missing overlap matrix for channels ({m}, {n})")))?;
            let (cm, cn) = (&coefficients[m].coefficients, &coefficients[n].coefficients);
            if f.nrows() != cm.len() || f.ncols() != cn.len() {
                return Err(Error::InvalidInput(format!(
                    "overlap matrix is {}×{}, coefficients {}×{}",
                    f.nrows(),
                    f.ncols(),
                    cm.len(),
                    cn.len()
                )));
            }
            let mut coherence = C64::new(0.0, 0.0);
            for (a, ca) in cm.iter().enumerate() {
                for (b, cb) in cn.iter().enumerate() {
                    coherence += ca.conj() * cb * f[(a, b)];
                }
            }
            total += 2.0 * coherence.norm_sqr();
        }
    }
    Ok(total)
}

/// Purity when each channel holds a single vibrational level with overlap
/// `f`: `1 - 2 (1 - |F|²) |c_g|² |c_e|²`.
pub fn purity_single_level(c_g: C64, c_e: C64, f: C64) -> f64 {
    1.0 - 2.0 * (1.0 - f.norm_sqr()) * c_g.norm_sqr() * c_e.norm_sqr()
}

/// Closed-form Schmidt eigenvalues of a two-channel reduced matrix.
pub fn two_channel_eigenvalues(p_g: f64, p_e: f64, coherence: C64) -> (f64, f64) {
    let t = p_g + p_e;
    let d = p_g - p_e;
    let root = (d * d + 4.0 * coherence.norm_sqr()).sqrt();
    (0.5 * (t + root), 0.5 * (t - root))
}

/// Every measure at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementRecord {
    pub time: f64,
    pub populations: Vec<f64>,
    /// One population vector per requested cut radius.
    pub partial_populations: Vec<Vec<f64>>,
    /// `(m, n, |⟨ψ_m|ψ_n⟩|²)` for `m < n`.
    pub overlaps_sq: Vec<(usize, usize, f64)>,
    pub schmidt: Vec<f64>,
    pub svn_exact: f64,
    pub svn_pop: f64,
    pub discrepancy: bool,
    pub purity: f64,
    pub linear_entropy: f64,
    pub renyi2: f64,
    /// `P_0 - P_1` for two-channel states.
    pub population_difference: Option<f64>,
}

impl EntanglementRecord {
    pub fn evaluate(state: &ChannelState, r_cuts: &[f64]) -> Result<Self> {
        let rho = reduced_density(state)?;
        let pops = rho.populations();
        let n = rho.dim();
        let mut overlaps_sq = Vec::with_capacity(n * (n - 1) / 2);
        for m in 0..n {
            for k in (m + 1)..n {
                overlaps_sq.push((m, k, rho.matrix[(m, k)].norm_sqr()));
            }
        }
        let schmidt = schmidt_spectrum(&rho)?;
        let svn_exact = von_neumann(&rho)?;
        let svn_pop = von_neumann_population_approx(&pops);
        let purity = purity(&rho);
        Ok(Self {
            time: state.time,
            partial_populations: r_cuts
                .iter()
                .map(|&r| partial_population(state, r))
                .collect::<Result<_>>()?,
            overlaps_sq,
            schmidt,
            svn_exact,
            svn_pop,
            discrepancy: (svn_exact - svn_pop).abs() > DISCREPANCY_THRESHOLD,
            purity,
            linear_entropy: 1.0 - purity,
            renyi2: renyi2(&rho)?,
            population_difference: (n == 2).then(|| pops[0] - pops[1]),
            populations: pops,
        })
    }
}
