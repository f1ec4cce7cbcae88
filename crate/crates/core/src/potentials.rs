//! Potential-energy curves, photon dressing and inter-channel couplings.
//! All energies are hartree and lengths a₀.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::units;

#[derive(Debug, Clone, PartialEq)]
pub enum CurveKind {
    /// `V_asym - D_e + D_e (1 - exp(-a (R - R_e)))²`.
    Morse { d_e: f64, a: f64, r_e: f64, v_asym: f64 },
    /// `V_min + ½ μ ω² (R - R_e)²`, parameterized by the level spacing `ω`.
    Harmonic {
        omega: f64,
        r_e: f64,
        v_min: f64,
        mass: f64,
    },
    /// Natural cubic spline through the samples; no extrapolation.
    Tabulated(CubicSpline),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialCurve {
    kind: CurveKind,
    dressing_shift: f64,
}

impl PotentialCurve {
    pub fn morse(d_e: f64, a: f64, r_e: f64, v_asym: f64) -> Result<Self> {
        check_finite(&[d_e, a, r_e, v_asym])?;
        if !(d_e > 0.0 && a > 0.0 && r_e > 0.0) {
            return Err(Error::InvalidInput(format!(
                "morse requires D_e, a, R_e > 0 (got {d_e}, {a}, {r_e})"
            )));
        }
        Ok(Self::from_kind(CurveKind::Morse { d_e, a, r_e, v_asym }))
    }

    pub fn harmonic(omega: f64, r_e: f64, v_min: f64, mass: f64) -> Result<Self> {
        check_finite(&[omega, r_e, v_min, mass])?;
        if !(omega > 0.0 && mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "harmonic requires ω > 0 and μ > 0 (got {omega}, {mass})"
            )));
        }
        Ok(Self::from_kind(CurveKind::Harmonic {
            omega,
            r_e,
            v_min,
            mass,
        }))
    }

    pub fn tabulated(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        Ok(Self::from_kind(CurveKind::Tabulated(CubicSpline::natural(r, v)?)))
    }

    /// Reads a two-column text table (R in a₀, V in cm⁻¹, `#` comments).
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_table_str(&text).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "line {}: expected 2 columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            v.push(units::energy_to_internal(parse(cols[1])?)?);
        }
        Self::tabulated(r, v)
    }

    fn from_kind(kind: CurveKind) -> Self {
        Self {
            kind,
            dressing_shift: 0.0,
        }
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    pub fn dressing_shift(&self) -> f64 {
        self.dressing_shift
    }

    /// Potential at `r`, including the dressing shift.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        let bare = match &self.kind {
            CurveKind::Morse { d_e, a, r_e, v_asym } => {
                let x = 1.0 - (-a * (r - r_e)).exp();
                v_asym - d_e + d_e * x * x
            }
            CurveKind::Harmonic {
                omega,
                r_e,
                v_min,
                mass,
            } => {
                let x = r - r_e;
                v_min + 0.5 * mass * omega * omega * x * x
            }
            CurveKind::Tabulated(spline) => spline.evaluate(r)?,
        };
        Ok(bare + self.dressing_shift)
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Result<Vec<f64>> {
        grid.points().into_iter().map(|r| self.evaluate(r)).collect()
    }

    /// Copy with the photon energy added to the dressing shift.
    pub fn dress(&self, photon_energy: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            dressing_shift: self.dressing_shift + photon_energy,
        }
    }

    /// Dissociation limit, if the curve has one.
    pub fn asymptote(&self) -> Option<f64> {
        match &self.kind {
            CurveKind::Morse { v_asym, .. } => Some(v_asym + self.dressing_shift),
            CurveKind::Harmonic { .. } => None,
            CurveKind::Tabulated(s) => s.values().last().map(|v| v + self.dressing_shift),
        }
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("curve parameters {values:?}")))
    }
}

/// Natural cubic spline interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidInput(format!(
                "table columns differ in length ({} vs {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "tabulated curve needs at least 4 points, got {}",
                x.len()
            )));
        }
        check_finite(&x)?;
        check_finite(&y)?;
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "tabulated R values must be strictly increasing".into(),
            ));
        }
        let n = x.len();
        // Tridiagonal system for the interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let c = h1;
            let d = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn evaluate(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.range();
        if !(r >= lo && r <= hi) {
            return Err(Error::OutOfRange {
                what: "R (tabulated curve)".into(),
                value: r,
                min: lo,
                max: hi,
            });
        }
        let i = match self.x.binary_search_by(|v| v.total_cmp(&r)) {
            Ok(i) => return Ok(self.y[i]),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - r) / h;
        let b = (r - self.x[i]) / h;
        Ok(a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0)
    }
}

/// Off-diagonal coupling between two channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingCurve {
    Constant { w: f64 },
    Gaussian { amplitude: f64, r_0: f64, sigma: f64 },
}

impl CouplingCurve {
    pub fn constant(w: f64) -> Result<Self> {
        check_finite(&[w])?;
        Ok(Self::Constant { w })
    }

    pub fn gaussian(amplitude: f64, r_0: f64, sigma: f64) -> Result<Self> {
        check_finite(&[amplitude, r_0, sigma])?;
        if !(sigma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "gaussian coupling σ must be positive, got {sigma}"
            )));
        }
        Ok(Self::Gaussian { amplitude, r_0, sigma })
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Self::Constant { w } => w,
            Self::Gaussian { amplitude, r_0, sigma } => {
                let x = (r - r_0) / sigma;
                amplitude * (-0.5 * x * x).exp()
            }
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Vec<f64> {
        grid.points().into_iter().map(|r| self.value(r)).collect()
    }
}

/// Locates `R_c` in `[lo, hi]` where the two curves cross, by bisection to
/// `tol`. The curve difference must change sign over the bracket.
pub fn find_crossing(a: &PotentialCurve, b: &PotentialCurve, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let diff = |r: f64| -> Result<f64> { Ok(a.evaluate(r)? - b.evaluate(r)?) };
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = diff(lo)?;
    let f_hi = diff(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidInput(format!(
            "curves do not cross between {lo} and {hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = diff(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
