//! Arbitrary meter amplitudes `f(p)` sampled on a uniform momentum grid.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::breakdown::{assemble_guarded, ratio, Branch, BranchTerms, FisherBreakdown};
use crate::error::{Error, Result};
use crate::fisher::{Basis, FnStateFamily, Grid, JointFamily, StateFamily};
use crate::qubit::{selection_coefficients, QubitState, SelectionPair};

/// Points in the default grid of a built-in profile.
pub const DEFAULT_GRID_POINTS: usize = 4096;
/// Tolerance of the grid-halving quadrature self-estimate.
pub const GRID_TOLERANCE: f64 = 1e-6;

const NORM_TOLERANCE: f64 = 1e-8;
const EDGE_TOLERANCE: f64 = 1e-6;
const SUPPORT_THRESHOLD: f64 = 1e-9;

/// Built-in analytic meter amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeterProfile {
    /// `(2σ²/π)^{1/4} exp(−σ²p²)`.
    Gaussian { sigma: f64 },
    /// First Hermite mode `∝ p exp(−σ²p²)`; real and odd.
    Hermite { sigma: f64 },
    /// `(2σ²/π)^{1/4} exp(−σ²(p − p0)²) exp(iβp)`.
    Chirped { sigma: f64, beta: f64, p0: f64 },
}

impl MeterProfile {
    pub fn value(&self, p: f64) -> Complex64 {
        match *self {
            MeterProfile::Gaussian { sigma } => {
                Complex64::new(gauss_norm(sigma) * (-sigma * sigma * p * p).exp(), 0.0)
            }
            MeterProfile::Hermite { sigma } => {
                Complex64::new(hermite_norm(sigma) * p * (-sigma * sigma * p * p).exp(), 0.0)
            }
            MeterProfile::Chirped { sigma, beta, p0 } => {
                let x = p - p0;
                Complex64::from_polar(gauss_norm(sigma) * (-sigma * sigma * x * x).exp(), beta * p)
            }
        }
    }

    pub fn derivative(&self, p: f64) -> Complex64 {
        match *self {
            MeterProfile::Gaussian { sigma } => self.value(p) * (-2.0 * sigma * sigma * p),
            MeterProfile::Hermite { sigma } => Complex64::new(
                hermite_norm(sigma) * (1.0 - 2.0 * sigma * sigma * p * p) * (-sigma * sigma * p * p).exp(),
                0.0,
            ),
            MeterProfile::Chirped { sigma, beta, p0 } => {
                self.value(p) * Complex64::new(-2.0 * sigma * sigma * (p - p0), beta)
            }
        }
    }

    /// Half-width of the default grid when the meter is shifted by up to `g_max`.
    pub fn default_half_width(&self, g_max: f64) -> f64 {
        let (sigma, centre) = match *self {
            MeterProfile::Gaussian { sigma } | MeterProfile::Hermite { sigma } => (sigma, 0.0),
            MeterProfile::Chirped { sigma, p0, .. } => (sigma, p0.abs()),
        };
        10.0 / sigma + centre + g_max.abs()
    }

    /// Samples on the default grid, with the analytic derivative attached.
    pub fn sample(&self, g_max: f64) -> Result<SampledWavefunction> {
        self.sample_on(Grid::symmetric(self.default_half_width(g_max), DEFAULT_GRID_POINTS))
    }

    pub fn sample_on(&self, grid: Grid) -> Result<SampledWavefunction> {
        let amplitudes = grid.points().map(|p| self.value(p)).collect();
        let derivative = grid.points().map(|p| self.derivative(p)).collect();
        SampledWavefunction::with_derivative(grid.start, grid.step, amplitudes, derivative)
    }
}

fn gauss_norm(sigma: f64) -> f64 {
    (2.0 * sigma * sigma / PI).powf(0.25)
}

fn hermite_norm(sigma: f64) -> f64 {
    // ∫ p² e^{−2σ²p²} dp = √π / (4√2 σ³)
    (4.0 * 2f64.sqrt() * sigma.powi(3) / PI.sqrt()).sqrt()
}

/// Meter amplitude `f(p)` and its derivative on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledWavefunction {
    grid: Grid,
    amplitudes: Vec<Complex64>,
    derivative: Vec<Complex64>,
    /// Index range outside which `|f|` is negligible.
    support: (usize, usize),
}

impl SampledWavefunction {
    /// Derivative by 4th-order central differences.
    pub fn new(p_min: f64, step: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let derivative = central_derivative(&amplitudes, step);
        Self::with_derivative(p_min, step, amplitudes, derivative)
    }

    pub fn with_derivative(
        p_min: f64,
        step: f64,
        amplitudes: Vec<Complex64>,
        derivative: Vec<Complex64>,
    ) -> Result<Self> {
        if amplitudes.len() < 8 {
            return Err(Error::InvalidWavefunction(format!(
                "need at least 8 grid points, got {}",
                amplitudes.len()
            )));
        }
        if derivative.len() != amplitudes.len() {
            return Err(Error::InvalidWavefunction("derivative length mismatch".into()));
        }
        if !(step > 0.0 && step.is_finite() && p_min.is_finite()) {
            return Err(Error::InvalidWavefunction(format!("bad grid ({p_min}, {step})")));
        }
        if amplitudes.iter().chain(&derivative).any(|z| !z.is_finite()) {
            return Err(Error::InvalidWavefunction("non-finite amplitude".into()));
        }
        let grid = Grid {
            start: p_min,
            step,
            len: amplitudes.len(),
        };
        let basis = Basis::Grid(grid);
        let norm = basis.norm_sqr(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidWavefunction(format!(
                "trapezoid norm {norm} differs from 1 by more than {NORM_TOLERANCE:e}"
            )));
        }
        check_edges(&amplitudes, "|f|")?;
        check_edges(&derivative, "|f'|")?;

        let peak = amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = SUPPORT_THRESHOLD * peak;
        let first = amplitudes.iter().position(|z| z.norm() > cut).unwrap_or(0);
        let last = amplitudes.iter().rposition(|z| z.norm() > cut).unwrap_or(amplitudes.len() - 1);
        Ok(Self {
            grid,
            amplitudes,
            derivative,
            support: (first, last),
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn p_min(&self) -> f64 {
        self.grid.start
    }

    pub fn p_max(&self) -> f64 {
        self.grid.end()
    }

    pub fn step(&self) -> f64 {
        self.grid.step
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn derivative(&self) -> &[Complex64] {
        &self.derivative
    }

    /// `f(x)` by 6-point Lagrange interpolation; zero outside the grid.
    pub fn value_at(&self, x: f64) -> Complex64 {
        interpolate(&self.amplitudes, self.grid, x)
    }

    /// `f′(x)` by 6-point Lagrange interpolation; zero outside the grid.
    pub fn derivative_at(&self, x: f64) -> Complex64 {
        interpolate(&self.derivative, self.grid, x)
    }

    /// `(∫|f′|² dp, ∫ f̄ f′ dp)` by trapezoid quadrature, using every
    /// `stride`-th grid point.
    fn moments(&self, stride: usize) -> (f64, Complex64) {
        let grid = Grid {
            start: self.grid.start,
            step: self.grid.step * stride as f64,
            len: (self.grid.len - 1) / stride + 1,
        };
        let mut kinetic = 0.0;
        let mut drift = Complex64::default();
        for j in 0..grid.len {
            let w = grid.weight(j);
            let f = self.amplitudes[j * stride];
            let d = self.derivative[j * stride];
            kinetic += w * d.norm_sqr();
            drift += w * f.conj() * d;
        }
        (kinetic, drift)
    }

    /// Read `p,re,im` CSV on a uniform grid.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| Error::WavefunctionFormat { row: 1, message: e.to_string() })?
            .clone();
        if header.iter().collect::<Vec<_>>() != ["p", "re", "im"] {
            return Err(Error::WavefunctionFormat {
                row: 1,
                message: format!("header must be `p,re,im`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
            });
        }
        let mut ps = Vec::new();
        let mut amps = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::WavefunctionFormat { row, message: e.to_string() })?;
            if rec.len() != 3 {
                return Err(Error::WavefunctionFormat {
                    row,
                    message: format!("expected 3 fields, found {}", rec.len()),
                });
            }
            let field = |k: usize| -> Result<f64> {
                rec[k].parse::<f64>().map_err(|e| Error::WavefunctionFormat {
                    row,
                    message: format!("field `{}`: {e}", &rec[k]),
                })
            };
            ps.push((row, field(0)?));
            amps.push(Complex64::new(field(1)?, field(2)?));
        }
        if ps.len() < 8 {
            return Err(Error::WavefunctionFormat {
                row: ps.len() + 2,
                message: format!("need at least 8 data rows, found {}", ps.len()),
            });
        }
        let p_min = ps[0].1;
        let step = (ps[ps.len() - 1].1 - p_min) / (ps.len() - 1) as f64;
        if !(step > 0.0) {
            return Err(Error::WavefunctionFormat {
                row: 3,
                message: "grid must be increasing".into(),
            });
        }
        for (k, &(row, p)) in ps.iter().enumerate() {
            let expected = p_min + step * k as f64;
            if (p - expected).abs() > 1e-6 * step {
                return Err(Error::WavefunctionFormat {
                    row,
                    message: format!("non-uniform grid: p = {p}, expected {expected}"),
                });
            }
        }
        Self::new(p_min, step, amps)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::InvalidWavefunction(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "p,re,im")?;
        for (i, z) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", self.grid.point(i), z.re, z.im)?;
        }
        Ok(())
    }
}

fn check_edges(values: &[Complex64], what: &str) -> Result<()> {
    let peak = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let ends = values[0].norm().max(values[values.len() - 1].norm());
    if peak > 0.0 && ends > EDGE_TOLERANCE * peak {
        return Err(Error::InvalidWavefunction(format!(
            "{what} at the grid ends is {:.3e} of its peak; extend the grid",
            ends / peak
        )));
    }
    Ok(())
}

/// 4th-order central differences, lower order at the two outermost points.
fn central_derivative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) / (12.0 * h)
            } else if i >= 1 && i + 1 < n {
                (f[i + 1] - f[i - 1]) / (2.0 * h)
            } else if i == 0 {
                (f[1] - f[0]) / h
            } else {
                (f[n - 1] - f[n - 2]) / h
            }
        })
        .collect()
}

fn interpolate(values: &[Complex64], grid: Grid, x: f64) -> Complex64 {
    let t = (x - grid.start) / grid.step;
    let last = (grid.len - 1) as f64;
    if !(0.0..=last).contains(&t) {
        return Complex64::default();
    }
    let i = t.floor();
    if t == i {
        return values[i as usize];
    }
    let base = (i as isize - 2).clamp(0, grid.len as isize - 6) as usize;
    let u = t - base as f64;
    let mut acc = Complex64::default();
    for j in 0..6 {
        let mut w = 1.0;
        for m in 0..6 {
            if m != j {
                w *= (u - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += values[base + j] * w;
    }
    acc
}

/// `Q_j = 4(∫|f′|² − cos²θ_i |∫ f̄ f′|²)`, independent of `g`.
pub fn sampled_joint_qfi(f: &SampledWavefunction, pre: &QubitState) -> Result<f64> {
    let (kinetic, drift) = f.moments(1);
    let scale = kinetic.sqrt().max(1.0);
    if drift.re.abs() > 1e-8 * scale {
        return Err(Error::InvalidWavefunction(format!(
            "∫ f̄ f′ dp has real part {:e}; the amplitude is not normalisable under shifts",
            drift.re
        )));
    }
    let c2 = pre.cos_theta().powi(2);
    let qj = 4.0 * (kinetic - c2 * drift.norm_sqr());
    let (k2, d2) = f.moments(2);
    let coarse = 4.0 * (k2 - c2 * d2.norm_sqr());
    check_grid(qj, coarse)?;
    Ok(qj)
}

fn check_grid(fine: f64, coarse: f64) -> Result<()> {
    let estimate = (fine - coarse).abs() / fine.abs().max(1e-300);
    if estimate > GRID_TOLERANCE && (fine - coarse).abs() > 1e-12 {
        return Err(Error::GridTooCoarse {
            estimate,
            tolerance: GRID_TOLERANCE,
        });
    }
    Ok(())
}

/// How [`sampled_fisher_breakdown`] evaluates the branch integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Quadrature of the shifted branch amplitudes at the given `g`.
    General,
    /// Closed-form `g → 0` limit.
    Weak,
    /// Closed-form `g → ∞` limit.
    Strong,
}

/// Branch integrals `p_k`, `∫|∂ϑ_k|²`, `∫ ϑ̄_k ∂ϑ_k`.
#[derive(Debug, Clone, Copy)]
struct BranchMoments {
    prob: f64,
    kinetic: f64,
    drift: Complex64,
}

impl BranchMoments {
    /// `p_k Q_k = 4(∫|∂ϑ|² − |∫ϑ̄∂ϑ|²/p_k)` and `(dp_k/dg)²/p_k`.
    fn product_and_fp(&self) -> (f64, f64) {
        let dp = 2.0 * self.drift.re;
        (
            4.0 * (self.kinetic - ratio(self.drift.norm_sqr(), self.prob)),
            ratio(dp * dp, self.prob),
        )
    }
}

fn terms_from_moments(d: BranchMoments, r: BranchMoments) -> BranchTerms {
    let (pd_qd, fd) = d.product_and_fp();
    let (pr_qr, fr) = r.product_and_fp();
    BranchTerms {
        p_d: d.prob,
        p_r: r.prob,
        pd_qd,
        pr_qr,
        f_p: fd + fr,
    }
}

fn quadrature_moments(
    f: &SampledWavefunction,
    pair: &SelectionPair,
    g: f64,
    branch: Branch,
    stride: usize,
) -> BranchMoments {
    let (gm, gp) = selection_coefficients(pair).branch(branch);
    let grid = f.grid;
    let len = (grid.len - 1) / stride + 1;
    let coarse = Grid {
        start: grid.start,
        step: grid.step * stride as f64,
        len,
    };
    let mut out = BranchMoments {
        prob: 0.0,
        kinetic: 0.0,
        drift: Complex64::default(),
    };
    for j in 0..len {
        let p = coarse.point(j);
        let w = coarse.weight(j);
        let theta = gm * f.value_at(p + g) + gp * f.value_at(p - g);
        let dtheta = gm * f.derivative_at(p + g) - gp * f.derivative_at(p - g);
        out.prob += w * theta.norm_sqr();
        out.kinetic += w * dtheta.norm_sqr();
        out.drift += w * theta.conj() * dtheta;
    }
    out
}

fn limit_moments(
    pair: &SelectionPair,
    kinetic: f64,
    drift: Complex64,
    regime: Regime,
) -> (BranchMoments, BranchMoments) {
    let c = selection_coefficients(pair);
    let (ci, cf) = (pair.pre.cos_theta(), pair.post.cos_theta());
    let sinsin = pair.pre.sin_theta() * pair.post.sin_theta();
    let (sin0, cos0) = pair.phi0().sin_cos();
    match regime {
        Regime::Weak => {
            let p_d = pair.overlap_probability();
            let p_r = pair.orthogonal_overlap_probability();
            let cc = ci * cf;
            (
                BranchMoments {
                    prob: p_d,
                    kinetic: 0.5 * (1.0 + cc - sinsin * cos0) * kinetic,
                    drift: Complex64::new(ci + cf, sinsin * sin0) * 0.5 * drift,
                },
                BranchMoments {
                    prob: p_r,
                    kinetic: 0.5 * (1.0 - cc + sinsin * cos0) * kinetic,
                    drift: Complex64::new(ci - cf, -sinsin * sin0) * 0.5 * drift,
                },
            )
        }
        Regime::Strong | Regime::General => {
            let p_d = c.d_minus.norm_sqr() + c.d_plus.norm_sqr();
            let p_r = c.r_minus.norm_sqr() + c.r_plus.norm_sqr();
            (
                BranchMoments {
                    prob: p_d,
                    kinetic: p_d * kinetic,
                    drift: drift * (0.5 * (ci + cf)),
                },
                BranchMoments {
                    prob: p_r,
                    kinetic: p_r * kinetic,
                    drift: drift * (0.5 * (ci - cf)),
                },
            )
        }
    }
}

/// Breakdown for an arbitrary sampled meter.
///
/// `General` integrates the shifted branch amplitudes
/// `ϑ_k(p, g) = γ_k⁻ f(p + g) + γ_k⁺ f(p − g)` on the grid; `Weak` and
/// `Strong` use the limit values of the branch integrals, in which case `g`
/// is only echoed.
pub fn sampled_fisher_breakdown(
    f: &SampledWavefunction,
    pair: &SelectionPair,
    g: f64,
    regime: Regime,
) -> Result<FisherBreakdown> {
    let q_j = sampled_joint_qfi(f, &pair.pre)?;
    match regime {
        Regime::General => {
            let (first, last) = f.support;
            let lo = f.grid.point(first) - g.abs();
            let hi = f.grid.point(last) + g.abs();
            if lo < f.p_min() || hi > f.p_max() {
                return Err(Error::InvalidParameter(format!(
                    "meter shifted by ±{g} leaves the grid [{}, {}]",
                    f.p_min(),
                    f.p_max()
                )));
            }
            let eval = |stride: usize| {
                move |x: f64| {
                    terms_from_moments(
                        quadrature_moments(f, pair, x, Branch::Success, stride),
                        quadrature_moments(f, pair, x, Branch::Failure, stride),
                    )
                }
            };
            let fine = assemble_guarded(g, q_j, false, eval(1));
            let coarse = assemble_guarded(g, q_j, false, eval(2));
            check_grid(fine.f_tot, coarse.f_tot)?;
            Ok(fine)
        }
        Regime::Weak | Regime::Strong => {
            let (kinetic, drift) = f.moments(1);
            let (d, r) = limit_moments(pair, kinetic, drift, regime);
            Ok(assemble_guarded(g, q_j, false, |_| terms_from_moments(d, r)))
        }
    }
}

/// `{p_d, 1 − p_d}` from grid quadrature of the branch amplitudes.
pub fn sampled_postselection_probabilities(f: &SampledWavefunction, pair: &SelectionPair, g: f64) -> [f64; 2] {
    let p_d = quadrature_moments(f, pair, g, Branch::Success, 1).prob;
    [p_d, 1.0 - p_d]
}

/// Normalised post-selected meter state of `profile` on its default grid.
///
/// The branch norm is taken from the grid itself, so this family is an
/// independent numerical reference for the closed forms.
pub fn profile_branch_family(
    profile: MeterProfile,
    pair: SelectionPair,
    branch: Branch,
    g_max: f64,
) -> impl StateFamily {
    let grid = Grid::symmetric(profile.default_half_width(g_max), DEFAULT_GRID_POINTS);
    let (gm, gp) = selection_coefficients(&pair).branch(branch);
    let basis = Basis::Grid(grid);
    FnStateFamily::new(basis.clone(), move |g: f64| {
        let mut v: Vec<Complex64> = grid
            .points()
            .map(|p| gm * profile.value(p + g) + gp * profile.value(p - g))
            .collect();
        let norm = basis.norm_sqr(&v).sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        v
    })
}

/// Joint qubit–meter family `cos(θ_i/2)|−1⟩f(p+g) + sin(θ_i/2)e^{iφ_i}|+1⟩f(p−g)`.
pub fn profile_joint_family(profile: MeterProfile, pre: QubitState, g_max: f64) -> impl StateFamily {
    let grid = Grid::symmetric(profile.default_half_width(g_max), DEFAULT_GRID_POINTS);
    let shifted = |sign: f64| {
        FnStateFamily::new(Basis::Grid(grid), move |g: f64| {
            grid.points().map(|p| profile.value(p + sign * g)).collect()
        })
    };
    JointFamily::new(pre, shifted(1.0), shifted(-1.0)).expect("both blocks share one grid")
}
