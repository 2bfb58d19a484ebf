//! Protocol-independent Fisher-information machinery.
//!
//! Numerical QFI of parameterised pure-state families and classical FI of
//! outcome distributions, both by 4th-order central differences with a
//! step-halving stability check. These are the reference values every closed
//! form in the crate is tested against.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qubit::QubitState;

/// Relative change tolerated between `step` and `step / 2`.
pub const STEP_TOLERANCE: f64 = 1e-4;

/// `1e−4 · max(1, |g|)`.
pub fn default_step(g: f64) -> f64 {
    1e-4 * g.abs().max(1.0)
}

/// Uniform momentum grid; inner products use trapezoid weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Grid {
    /// `points` samples spanning `[−half_width, half_width]`.
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        assert!(points >= 2 && half_width > 0.0);
        Self {
            start: -half_width,
            step: 2.0 * half_width / (points - 1) as f64,
            len: points,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5 * self.step
        } else {
            self.step
        }
    }
}

/// Basis a [`StateFamily`] is expressed in.
#[derive(Debug, Clone, PartialEq)]
pub enum Basis {
    /// Number states `|0⟩ … |dim−1⟩`.
    Fock { dim: usize },
    /// Momentum amplitudes on a grid.
    Grid(Grid),
    /// Qubit ⊗ meter: the `|−1⟩` block followed by the `|+1⟩` block.
    Qubit(Box<Basis>),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Fock { dim } => *dim,
            Basis::Grid(grid) => grid.len,
            Basis::Qubit(inner) => 2 * inner.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weight(&self, i: usize) -> f64 {
        match self {
            Basis::Fock { .. } => 1.0,
            Basis::Grid(grid) => grid.weight(i),
            Basis::Qubit(inner) => inner.weight(i % inner.len()),
        }
    }

    /// `⟨a|b⟩` with the basis measure.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        debug_assert_eq!(a.len(), self.len());
        debug_assert_eq!(b.len(), self.len());
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(i, (x, y))| x.conj() * y * self.weight(i))
            .sum()
    }

    pub fn norm_sqr(&self, a: &[Complex64]) -> f64 {
        a.iter()
            .enumerate()
            .map(|(i, x)| x.norm_sqr() * self.weight(i))
            .sum()
    }
}

/// A pure-state family `g ↦ |ψ(g)⟩` in a fixed basis.
pub trait StateFamily: Sync {
    fn basis(&self) -> Basis;
    /// Normalised amplitudes at `g`.
    fn state(&self, g: f64) -> Vec<Complex64>;
}

/// A finite outcome distribution `g ↦ {p_k(g)}`.
pub trait ProbFamily: Sync {
    fn probabilities(&self, g: f64) -> Vec<f64>;
}

impl<F> ProbFamily for F
where
    F: Fn(f64) -> Vec<f64> + Sync,
{
    fn probabilities(&self, g: f64) -> Vec<f64> {
        self(g)
    }
}

/// [`StateFamily`] backed by a closure.
pub struct FnStateFamily<F> {
    basis: Basis,
    eval: F,
}

impl<F> FnStateFamily<F>
where
    F: Fn(f64) -> Vec<Complex64> + Sync,
{
    pub fn new(basis: Basis, eval: F) -> Self {
        Self { basis, eval }
    }
}

impl<F> StateFamily for FnStateFamily<F>
where
    F: Fn(f64) -> Vec<Complex64> + Sync,
{
    fn basis(&self) -> Basis {
        self.basis.clone()
    }

    fn state(&self, g: f64) -> Vec<Complex64> {
        (self.eval)(g)
    }
}

/// Joint qubit–meter family `c⁻|−1⟩|Φ₋(g)⟩ + c⁺|+1⟩|Φ₊(g)⟩`.
pub struct JointFamily<A, B> {
    pre: QubitState,
    minus: A,
    plus: B,
    basis: Basis,
}

impl<A: StateFamily, B: StateFamily> JointFamily<A, B> {
    pub fn new(pre: QubitState, minus: A, plus: B) -> Result<Self> {
        let (bm, bp) = (minus.basis(), plus.basis());
        if bm != bp {
            return Err(Error::BasisMismatch(format!("{bm:?} vs {bp:?}")));
        }
        Ok(Self {
            pre,
            minus,
            plus,
            basis: Basis::Qubit(Box::new(bm)),
        })
    }
}

impl<A: StateFamily, B: StateFamily> StateFamily for JointFamily<A, B> {
    fn basis(&self) -> Basis {
        self.basis.clone()
    }

    fn state(&self, g: f64) -> Vec<Complex64> {
        let (cm, cp) = self.pre.amplitudes();
        let mut out: Vec<Complex64> = self.minus.state(g).into_iter().map(|x| cm * x).collect();
        out.extend(self.plus.state(g).into_iter().map(|x| cp * x));
        out
    }
}

const STENCIL: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn check_relative(coarse: f64, fine: f64, scale: f64) -> Result<()> {
    let diff = (coarse - fine).abs();
    let relative = diff / fine.abs().max(coarse.abs()).max(f64::MIN_POSITIVE);
    if diff > STEP_TOLERANCE * fine.abs().max(coarse.abs()) && diff > 1e-10 * scale.max(1.0) {
        return Err(Error::StepUnstable {
            coarse,
            fine,
            relative,
        });
    }
    Ok(())
}

fn qfi_at_step<S: StateFamily + ?Sized>(
    family: &S,
    basis: &Basis,
    g: f64,
    center: &[Complex64],
    h: f64,
) -> f64 {
    let mut deriv = vec![Complex64::default(); center.len()];
    for (offset, coeff) in STENCIL {
        let mut v = family.state(g + offset * h);
        // Gauge-fix: make ⟨ψ(g)|ψ(g + δ)⟩ real and non-negative.
        let ov = basis.inner(center, &v);
        if ov.norm() > 0.0 {
            let phase = ov.conj() / ov.norm();
            v.iter_mut().for_each(|x| *x *= phase);
        }
        for (d, x) in deriv.iter_mut().zip(&v) {
            *d += x * coeff;
        }
    }
    let scale = 1.0 / (12.0 * h);
    deriv.iter_mut().for_each(|d| *d *= scale);
    let dd = basis.norm_sqr(&deriv);
    let overlap = basis.inner(center, &deriv);
    (4.0 * (dd - overlap.norm_sqr())).max(0.0)
}

/// Pure-state QFI `4[⟨∂ψ|∂ψ⟩ − |⟨ψ|∂ψ⟩|²]` at `g`.
///
/// The derivative uses a 4th-order central stencil with the given `step`;
/// the result at `step / 2` must agree to [`STEP_TOLERANCE`].
pub fn pure_state_qfi<S: StateFamily + ?Sized>(family: &S, g: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step = {step}")));
    }
    let basis = family.basis();
    let center = family.state(g);
    if center.len() != basis.len() {
        return Err(Error::BasisMismatch(format!(
            "state has {} amplitudes, basis has {}",
            center.len(),
            basis.len()
        )));
    }
    let norm = basis.norm_sqr(&center);
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::StateNotNormalized { g, norm });
    }
    let coarse = qfi_at_step(family, &basis, g, &center, step);
    let fine = qfi_at_step(family, &basis, g, &center, 0.5 * step);
    check_relative(coarse, fine, 0.0)?;
    Ok(coarse)
}

fn validate_distribution(p: &[f64]) -> Result<()> {
    for (index, &value) in p.iter().enumerate() {
        if value < -1e-15 || !value.is_finite() {
            return Err(Error::NegativeProbability { index, value });
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { sum });
    }
    Ok(())
}

fn cfi_at_step<P: ProbFamily + ?Sized>(family: &P, g: f64, center: &[f64], h: f64) -> Result<f64> {
    let mut deriv = vec![0.0; center.len()];
    for (offset, coeff) in STENCIL {
        let p = family.probabilities(g + offset * h);
        if p.len() != center.len() {
            return Err(Error::InvalidParameter(format!(
                "outcome count changed from {} to {}",
                center.len(),
                p.len()
            )));
        }
        validate_distribution(&p)?;
        for (d, x) in deriv.iter_mut().zip(&p) {
            *d += coeff * x;
        }
    }
    let scale = 1.0 / (12.0 * h);
    Ok(center
        .iter()
        .zip(&deriv)
        .map(|(&p, &d)| {
            let d = d * scale;
            if p < 1e-14 && d.abs() < 1e-10 {
                0.0
            } else {
                d * d / p
            }
        })
        .sum())
}

/// Classical FI `Σ (∂p/∂g)² / p` of an outcome distribution at `g`.
pub fn classical_fi<P: ProbFamily + ?Sized>(family: &P, g: f64, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step = {step}")));
    }
    let center = family.probabilities(g);
    validate_distribution(&center)?;
    let coarse = cfi_at_step(family, g, &center, step)?;
    let fine = cfi_at_step(family, g, &center, 0.5 * step)?;
    check_relative(coarse, fine, 0.0)?;
    Ok(coarse)
}

/// Which contributions enter `F_tot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtotMode {
    /// Both conditional meter states and the post-selection statistic.
    Full,
    /// The failed meter state is ignored.
    DiscardFailure,
}

pub fn assemble_ftot(p_d: f64, q_d: f64, q_r: f64, f_p: f64, mode: FtotMode) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_d));
    match mode {
        FtotMode::Full => p_d * q_d + (1.0 - p_d) * q_r + f_p,
        FtotMode::DiscardFailure => p_d * q_d + f_p,
    }
}

/// `⟨α|β⟩ = exp(−(|α|² + |β|²)/2 + ᾱβ)`.
pub fn coherent_overlap(alpha: Complex64, beta: Complex64) -> Complex64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + alpha.conj() * beta).exp()
}

/// Truncation `ceil(n + 10√n + 20)` for a coherent state of mean photon number `n`.
pub fn fock_truncation(n: f64) -> usize {
    (n + 10.0 * n.sqrt() + 20.0).ceil() as usize
}

/// Coherent state `|α⟩` in the first `dim` number states.
pub fn coherent_fock(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let r = alpha.norm();
    let theta = alpha.arg();
    let mut out = Vec::with_capacity(dim);
    if r == 0.0 {
        out.push(Complex64::new(1.0, 0.0));
        out.resize(dim, Complex64::default());
        return out;
    }
    let ln_r = r.ln();
    let mut log_mag = -0.5 * r * r;
    for k in 0..dim {
        if k > 0 {
            log_mag += ln_r - 0.5 * (k as f64).ln();
        }
        out.push(Complex64::from_polar(log_mag.exp(), theta * k as f64));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_shift_family(sigma: f64) -> impl StateFamily {
        let grid = Grid::symmetric(12.0 / sigma, 4096);
        let norm = (2.0 * sigma * sigma / PI).powf(0.25);
        FnStateFamily::new(Basis::Grid(grid), move |g: f64| {
            grid.points()
                .map(|p| Complex64::new(norm * (-sigma * sigma * (p - g).powi(2)).exp(), 0.0))
                .collect()
        })
    }

    #[test]
    fn coherent_phase_family_has_qfi_4n() {
        let alpha = 2.0;
        let dim = fock_truncation(alpha * alpha);
        let fam = FnStateFamily::new(Basis::Fock { dim }, move |g: f64| {
            coherent_fock(Complex64::from_polar(alpha, g), dim)
        });
        let q = pure_state_qfi(&fam, 0.3, default_step(0.3)).unwrap();
        assert!((q - 16.0).abs() < 1e-6 * 16.0, "{q}");
    }

    #[test]
    fn shifted_gaussian_has_qfi_4_sigma_sq() {
        for sigma in [1.0, 0.5, 2.0] {
            let fam = gaussian_shift_family(sigma);
            let q = pure_state_qfi(&fam, 0.1, default_step(0.1)).unwrap();
            let want = 4.0 * sigma * sigma;
            assert!((q - want).abs() < 1e-6 * want, "sigma {sigma}: {q}");
        }
    }

    #[test]
    fn constant_family_has_zero_qfi() {
        let fam = FnStateFamily::new(Basis::Fock { dim: 3 }, |_g: f64| {
            let s = 1.0 / 3f64.sqrt();
            vec![Complex64::new(s, 0.0), Complex64::new(0.0, s), Complex64::new(-s, 0.0)]
        });
        assert!(pure_state_qfi(&fam, 0.7, 1e-4).unwrap().abs() < 1e-10);
    }

    #[test]
    fn global_phase_does_not_leak_into_qfi() {
        // |ψ(g)⟩ = e^{i 37 g}|α⟩ carries no information about g.
        let fam = FnStateFamily::new(Basis::Fock { dim: 40 }, |g: f64| {
            let phase = Complex64::from_polar(1.0, 37.0 * g);
            coherent_fock(Complex64::new(1.5, 0.0), 40)
                .into_iter()
                .map(|x| x * phase)
                .collect()
        });
        assert!(pure_state_qfi(&fam, 0.2, 1e-4).unwrap() < 1e-10);
    }

    #[test]
    fn unnormalized_state_is_rejected() {
        let fam = FnStateFamily::new(Basis::Fock { dim: 1 }, |_g: f64| vec![Complex64::new(2.0, 0.0)]);
        assert!(matches!(
            pure_state_qfi(&fam, 0.0, 1e-4),
            Err(Error::StateNotNormalized { .. })
        ));
    }

    #[test]
    fn bernoulli_fisher_information() {
        let fam = |g: f64| vec![g, 1.0 - g];
        let f = classical_fi(&fam, 0.25, 1e-4).unwrap();
        assert!((f - 1.0 / (0.25 * 0.75)).abs() < 1e-8, "{f}");
    }

    #[test]
    fn deterministic_distribution_has_zero_fi() {
        let fam = |_g: f64| vec![1.0, 0.0];
        assert_eq!(classical_fi(&fam, 0.4, 1e-4).unwrap(), 0.0);
    }

    #[test]
    fn negative_probability_is_an_error() {
        let fam = |g: f64| vec![g - 0.5, 1.5 - g];
        assert!(matches!(
            classical_fi(&fam, 0.1, 1e-4),
            Err(Error::NegativeProbability { index: 0, .. })
        ));
        let fam = |_g: f64| vec![0.5, 0.6];
        assert!(matches!(classical_fi(&fam, 0.1, 1e-4), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn unstable_step_is_reported() {
        // A kink at g = 0 makes the two stencils disagree.
        let fam = |g: f64| {
            let p = 0.5 + 0.3 * g.abs().sqrt().min(0.5);
            vec![p, 1.0 - p]
        };
        assert!(matches!(
            classical_fi(&fam, 1e-5, 1e-4),
            Err(Error::StepUnstable { .. })
        ));
    }

    #[test]
    fn assembly_modes() {
        assert_eq!(assemble_ftot(0.5, 10.0, 6.0, 2.0, FtotMode::Full), 10.0);
        assert_eq!(assemble_ftot(0.5, 10.0, 6.0, 2.0, FtotMode::DiscardFailure), 7.0);
    }

    #[test]
    fn coherent_overlap_values() {
        let a = Complex64::new(0.3, -1.1);
        assert!((coherent_overlap(a, a) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let a = Complex64::new(3f64.sqrt(), 0.0);
        let ov = coherent_overlap(a, -a);
        assert!((ov.norm() - (-6f64).exp()).abs() < 1e-17);
        assert!((ov.norm() - 0.002_478_752_176_666_358).abs() < 1e-15);
    }

    #[test]
    fn coherent_overlap_matches_truncated_series() {
        let a = Complex64::new(2.0, 0.0);
        let b = Complex64::from_polar(2.0, PI);
        let basis = Basis::Fock { dim: 60 };
        let series = basis.inner(&coherent_fock(a, 60), &coherent_fock(b, 60));
        assert!((series - coherent_overlap(a, b)).norm() < 1e-12);
    }

    #[test]
    fn joint_family_rejects_mismatched_bases() {
        let a = FnStateFamily::new(Basis::Fock { dim: 4 }, |_g: f64| vec![Complex64::new(1.0, 0.0); 4]);
        let b = FnStateFamily::new(Basis::Fock { dim: 5 }, |_g: f64| vec![Complex64::new(1.0, 0.0); 5]);
        assert!(matches!(
            JointFamily::new(QubitState::minus(), a, b),
            Err(Error::BasisMismatch(_))
        ));
    }

    #[test]
    fn truncation_size() {
        assert_eq!(fock_truncation(16.0), 76);
        assert_eq!(fock_truncation(0.0), 20);
        let v = coherent_fock(Complex64::new(10.0, 0.0), fock_truncation(100.0));
        let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
