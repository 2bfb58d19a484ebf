//! Phase-space coupling: a coherent meter `|α⟩` picks up a qubit-dependent
//! phase rotation.
//!
//! In the symmetric form the `|∓1⟩` components rotate the meter to
//! `|α e^{∓ig}⟩`; in the asymmetric form `|−1⟩` leaves it alone and `|+1⟩`
//! rotates it to `|α e^{2ig}⟩`. Closed forms cover the symmetric coupling.
//! The asymmetric one goes through Fock-space numerics.
//!
//! With the branch coefficients of [`crate::qubit`], pre-selecting `|−1⟩`
//! (`θ_i = 0`) gives `p_d Q_d = 2n(1 + cos θ_f)` and pre-selecting `|+1⟩`
//! gives `2n(1 − cos θ_f)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::breakdown::{assemble_guarded, ratio, Branch, BranchTerms, FisherBreakdown};
use crate::error::{Error, Result};
use crate::fisher::{
    classical_fi, coherent_fock, coherent_overlap, default_step, fock_truncation, pure_state_qfi,
    Basis, FnStateFamily, JointFamily, StateFamily,
};
use crate::par::Execution;
use crate::qubit::{selection_coefficients, QubitState, SelectionPair};

/// How the qubit rotates the meter phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    /// `|∓1⟩ ↦ |α e^{∓ig}⟩`.
    Symmetric,
    /// `|−1⟩ ↦ |α⟩`, `|+1⟩ ↦ |α e^{2ig}⟩`.
    Asymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentMeter {
    pub alpha: Complex64,
    pub coupling: Coupling,
}

impl CoherentMeter {
    pub fn new(alpha: Complex64, coupling: Coupling) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} is not finite")));
        }
        Ok(Self { alpha, coupling })
    }

    /// Real amplitude `√n`.
    pub fn with_photons(n: f64, coupling: Coupling) -> Result<Self> {
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter(format!("photon number n = {n} must be non-negative")));
        }
        Self::new(Complex64::new(n.sqrt(), 0.0), coupling)
    }

    /// Mean photon number `|α|²`.
    pub fn n(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// Meter states `(|Φ₋(g)⟩, |Φ₊(g)⟩)` as coherent amplitudes.
    fn amplitudes(&self, g: f64) -> (Complex64, Complex64) {
        match self.coupling {
            Coupling::Symmetric => (
                self.alpha * Complex64::from_polar(1.0, -g),
                self.alpha * Complex64::from_polar(1.0, g),
            ),
            Coupling::Asymmetric => (self.alpha, self.alpha * Complex64::from_polar(1.0, 2.0 * g)),
        }
    }
}

/// `a = sinθ_i sinθ_f e^{−2n sin²g}`, `b = n sin2g + 2g + φ_0`, `c = cosθ_i cosθ_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseAux {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn require_symmetric(meter: &CoherentMeter) -> Result<()> {
    match meter.coupling {
        Coupling::Symmetric => Ok(()),
        Coupling::Asymmetric => Err(Error::UnsupportedCoupling),
    }
}

pub fn phase_aux(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> Result<PhaseAux> {
    require_symmetric(meter)?;
    let n = meter.n();
    let sg = g.sin();
    Ok(PhaseAux {
        a: pair.pre.sin_theta() * pair.post.sin_theta() * (-2.0 * n * sg * sg).exp(),
        b: n * (2.0 * g).sin() + 2.0 * g + pair.phi0(),
        c: pair.pre.cos_theta() * pair.post.cos_theta(),
    })
}

/// `(p_d, p_r)` written as the zero-coupling overlaps plus a correction that
/// vanishes with `g`, so neither loses digits when it is small.
fn phase_probabilities(n: f64, pair: &SelectionPair, g: f64) -> (f64, f64) {
    let phi0 = pair.phi0();
    let sg = g.sin();
    let x = 2.0 * n * sg * sg;
    let psi = n * (2.0 * g).sin() + phi0;
    // e^{−x} cos ψ − cos φ_0
    let delta = (-x).exp_m1() * psi.cos() - 2.0 * (0.5 * (psi + phi0)).sin() * (0.5 * (psi - phi0)).sin();
    let shift = 0.5 * pair.pre.sin_theta() * pair.post.sin_theta() * delta;
    let p_d = (pair.overlap_probability() + shift).clamp(0.0, 1.0);
    let p_r = (pair.orthogonal_overlap_probability() - shift).clamp(0.0, 1.0);
    (p_d, p_r)
}

/// `p_d = (1 + a cos(b − 2g) + c) / 2`.
pub fn phase_success_probability(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> Result<f64> {
    require_symmetric(meter)?;
    Ok(phase_probabilities(meter.n(), pair, g).0)
}

fn phase_terms(n: f64, pair: &SelectionPair, g: f64) -> BranchTerms {
    let sg = g.sin();
    let a = pair.pre.sin_theta() * pair.post.sin_theta() * (-2.0 * n * sg * sg).exp();
    let b = n * (2.0 * g).sin() + 2.0 * g + pair.phi0();
    let (ci, cf) = (pair.pre.cos_theta(), pair.post.cos_theta());
    let c = ci * cf;
    let (p_d, p_r) = phase_probabilities(n, pair, g);

    let (sb, cb) = b.sin_cos();
    let cb2 = (b + 2.0 * g).cos();
    let x = ci * ci + cf * cf + a * a * sb * sb;
    let dp = -n * a * sb;
    let n2 = n * n;
    BranchTerms {
        p_d,
        p_r,
        pd_qd: 4.0
            * (0.5 * n * (1.0 + c - a * cb) + 0.5 * n2 * (1.0 + c - a * cb2)
                - 0.25 * n2 * ratio(x + 2.0 * c, p_d)),
        pr_qr: 4.0
            * (0.5 * n * (1.0 - c + a * cb) + 0.5 * n2 * (1.0 - c + a * cb2)
                - 0.25 * n2 * ratio(x - 2.0 * c, p_r)),
        f_p: ratio(dp * dp, p_d) + ratio(dp * dp, p_r),
    }
}

/// Closed-form breakdown for the symmetric coupling.
///
/// `F_p = (∂p_d/∂g)² / (p_d p_r)` with `∂p_d/∂g = −n a sin b`. Near a
/// vanishing branch or an indeterminate `F_p` the affected entries are the
/// mean of the closed forms at `g ± 1e−6` and a diagnostic is attached.
pub fn phase_fisher_breakdown(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> Result<FisherBreakdown> {
    require_symmetric(meter)?;
    let n = meter.n();
    Ok(assemble_guarded(g, joint_qfi(meter, &pair.pre), true, |x| phase_terms(n, pair, x)))
}

/// QFI of the joint qubit–meter state before post-selection.
///
/// Symmetric: `4n² sin²θ_i + 4n`. Asymmetric: `4n² sin²θ_i + 16n sin²(θ_i/2)`.
pub fn joint_qfi(meter: &CoherentMeter, pre: &QubitState) -> f64 {
    let n = meter.n();
    let s = pre.sin_theta();
    match meter.coupling {
        Coupling::Symmetric => 4.0 * n * n * s * s + 4.0 * n,
        Coupling::Asymmetric => {
            let h = (0.5 * pre.theta()).sin();
            4.0 * n * n * s * s + 16.0 * n * h * h
        }
    }
}

/// `p_d Q_d − (1 − p_d) Q_r` at `g = π/2`, `θ_i = θ_f = π/2`, `φ_0 = π`:
/// `4n(n − 1) e^{−2n}`.
pub fn qd_qr_gap(n: f64) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("photon number n = {n} must be positive")));
    }
    Ok(4.0 * n * (n - 1.0) * (-2.0 * n).exp())
}

/// `p_d Q_d − (1 − p_d) Q_r` from the closed forms, with the large common
/// parts cancelled algebraically before evaluation.
pub fn branch_gap(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> Result<f64> {
    let PhaseAux { a, b, c } = phase_aux(meter, pair, g)?;
    let n = meter.n();
    let (p_d, p_r) = phase_probabilities(n, pair, g);
    let (ci, cf) = (pair.pre.cos_theta(), pair.post.cos_theta());
    let sb = b.sin();
    let x = ci * ci + cf * cf + a * a * sb * sb;
    Ok(4.0
        * (n * (c - a * b.cos()) + n * n * (c - a * (b + 2.0 * g).cos())
            - 0.25 * n * n * (ratio(x + 2.0 * c, p_d) - ratio(x - 2.0 * c, p_r))))
}

/// Closed-form breakdowns on a grid of couplings.
pub fn figure_sweep(
    meter: &CoherentMeter,
    pair: &SelectionPair,
    g_grid: &[f64],
    exec: Execution,
) -> Result<Vec<FisherBreakdown>> {
    require_symmetric(meter)?;
    exec.map(g_grid, |&g| phase_fisher_breakdown(meter, pair, g))
        .into_iter()
        .collect()
}

/// `points` couplings evenly spaced over `[0, π/2]`.
pub fn fig1_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..points)
            .map(|i| FRAC_PI_2 * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Breakdowns at `g = π/2` for each photon number, with the pair fixed.
pub fn photon_sweep(
    n_values: &[f64],
    pair: &SelectionPair,
    exec: Execution,
) -> Result<Vec<FisherBreakdown>> {
    exec.map(n_values, |&n| {
        let meter = CoherentMeter::with_photons(n, Coupling::Symmetric)?;
        phase_fisher_breakdown(&meter, pair, FRAC_PI_2)
    })
    .into_iter()
    .collect()
}

/// Branch probabilities from coherent overlaps, valid for either coupling.
fn exact_probabilities(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> (f64, f64) {
    let gam = selection_coefficients(pair);
    let (bm, bp) = meter.amplitudes(g);
    let ov = coherent_overlap(bm, bp);
    let p = |(cm, cp): (Complex64, Complex64)| {
        cm.norm_sqr() + cp.norm_sqr() + 2.0 * (cm.conj() * cp * ov).re
    };
    let p_d = p(gam.branch(Branch::Success)).clamp(0.0, 1.0);
    let p_r = p(gam.branch(Branch::Failure)).clamp(0.0, 1.0);
    (p_d, p_r)
}

fn unnormalized_branch(meter: &CoherentMeter, pair: &SelectionPair, branch: Branch, g: f64, dim: usize) -> Vec<Complex64> {
    let (cm, cp) = selection_coefficients(pair).branch(branch);
    let (bm, bp) = meter.amplitudes(g);
    coherent_fock(bm, dim)
        .into_iter()
        .zip(coherent_fock(bp, dim))
        .map(|(x, y)| cm * x + cp * y)
        .collect()
}

/// Normalised branch state `(γ_k⁻|Φ₋(g)⟩ + γ_k⁺|Φ₊(g)⟩)/√p_k` in a truncated Fock basis.
pub fn coherent_branch_family(meter: CoherentMeter, pair: SelectionPair, branch: Branch) -> impl StateFamily {
    let dim = fock_truncation(meter.n());
    FnStateFamily::new(Basis::Fock { dim }, move |g: f64| {
        let mut v = unnormalized_branch(&meter, &pair, branch, g, dim);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        v
    })
}

/// Joint qubit–meter state before post-selection in a truncated Fock basis.
pub fn coherent_joint_family(meter: CoherentMeter, pre: QubitState) -> Result<impl StateFamily> {
    let dim = fock_truncation(meter.n());
    let minus = FnStateFamily::new(Basis::Fock { dim }, move |g: f64| coherent_fock(meter.amplitudes(g).0, dim));
    let plus = FnStateFamily::new(Basis::Fock { dim }, move |g: f64| coherent_fock(meter.amplitudes(g).1, dim));
    JointFamily::new(pre, minus, plus)
}

/// Breakdown by finite differences on Fock-truncated states; either coupling.
///
/// A branch below [`crate::EPS_PROB`] contributes nothing and is flagged.
pub fn numerical_phase_breakdown(meter: &CoherentMeter, pair: &SelectionPair, g: f64) -> Result<FisherBreakdown> {
    let step = default_step(g);
    let (p_d, p_r) = exact_probabilities(meter, pair, g);
    let mut diagnostics = Vec::new();
    let mut branch_qfi = |branch: Branch, p: f64| -> Result<f64> {
        if p < crate::EPS_PROB {
            diagnostics.push(crate::Diagnostic::DegenerateBranch { branch, probability: p });
            return Ok(0.0);
        }
        pure_state_qfi(&coherent_branch_family(*meter, *pair, branch), g, step)
    };
    let q_d = branch_qfi(Branch::Success, p_d)?;
    let q_r = branch_qfi(Branch::Failure, p_r)?;
    let f_p = classical_fi(
        &|x: f64| {
            let (a, b) = exact_probabilities(meter, pair, x);
            let s = a + b;
            vec![a / s, b / s]
        },
        g,
        step,
    )?;
    let q_j = pure_state_qfi(&coherent_joint_family(*meter, pair.pre)?, g, step)?;
    let (pd_qd, pr_qr) = (p_d * q_d, p_r * q_r);
    Ok(FisherBreakdown {
        g,
        p_d,
        q_d,
        q_r,
        pd_qd,
        pr_qr,
        f_p,
        f_tot: pd_qd + pr_qr + f_p,
        q_j,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Diagnostic;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sym(n: f64) -> CoherentMeter {
        CoherentMeter::with_photons(n, Coupling::Symmetric).unwrap()
    }

    fn pair(ti: f64, tf: f64, p0: f64) -> SelectionPair {
        SelectionPair::from_angles(ti, tf, p0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn aux_examples() {
        let pr = pair(0.7, 1.9, 0.4);
        let aux = phase_aux(&sym(0.0), &pr, 0.3).unwrap();
        assert!((aux.a - 0.7f64.sin() * 1.9f64.sin()).abs() < 1e-15);
        assert!((aux.b - (0.6 + 0.4)).abs() < 1e-15);
        assert!((aux.c - 0.7f64.cos() * 1.9f64.cos()).abs() < 1e-15);

        let aux = phase_aux(&sym(3.0), &pair(FRAC_PI_2, FRAC_PI_2, PI), FRAC_PI_2).unwrap();
        assert!(rel(aux.a, (-6.0f64).exp()) < 1e-14);
        assert!((aux.b - 2.0 * PI).abs() < 1e-14);
        assert_eq!(aux.c, 0.0);

        let aux = phase_aux(&sym(5.0), &pr, 0.0).unwrap();
        assert!((aux.b - 0.4).abs() < 1e-15);

        let asym = CoherentMeter::with_photons(1.0, Coupling::Asymmetric).unwrap();
        assert_eq!(phase_aux(&asym, &pr, 0.1), Err(Error::UnsupportedCoupling));
    }

    #[test]
    fn success_probability_examples() {
        assert_eq!(phase_success_probability(&sym(7.0), &pair(0.0, 0.0, 0.0), 1.1).unwrap(), 1.0);
        let p = phase_success_probability(&sym(3.0), &pair(FRAC_PI_2, FRAC_PI_2, PI), FRAC_PI_2).unwrap();
        assert!((p - 0.5 * (1.0 - (-6.0f64).exp())).abs() < 1e-15);
        assert!((p - 0.498_761).abs() < 1e-6);
        let p = phase_success_probability(&sym(3.0), &pair(FRAC_PI_2, FRAC_PI_2, PI), 0.0).unwrap();
        assert!(p.abs() < 1e-16);
    }

    #[test]
    fn product_state_shares_information_equally() {
        for g in [0.0, 0.2, 1.3] {
            let b = phase_fisher_breakdown(&sym(4.0), &pair(0.0, FRAC_PI_2, 0.0), g).unwrap();
            assert!((b.p_d - 0.5).abs() < 1e-15);
            assert!(rel(b.q_d, 16.0) < 1e-12);
            assert!(rel(b.q_r, 16.0) < 1e-12);
            assert_eq!(b.f_p, 0.0);
            assert!(rel(b.f_tot, 16.0) < 1e-12);
            assert_eq!(b.q_j, 16.0);
        }
    }

    #[test]
    fn heisenberg_scaling_of_post_selection() {
        let b = phase_fisher_breakdown(&sym(100.0), &pair(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2), 1e-6).unwrap();
        assert!(rel(b.f_p, 40_000.0) < 1e-3);
        assert!(rel(b.pd_qd, 200.0) < 5e-3);
        assert!(rel(b.f_tot, b.q_j) < 1e-9);
    }

    #[test]
    fn joint_qfi_examples() {
        let m = sym(5.0);
        assert!(rel(joint_qfi(&m, &QubitState::new(FRAC_PI_2, 0.0).unwrap()), 120.0) < 1e-14);
        assert!(rel(joint_qfi(&m, &QubitState::minus()), 20.0) < 1e-14);
        let a = CoherentMeter::with_photons(5.0, Coupling::Asymmetric).unwrap();
        assert_eq!(joint_qfi(&a, &QubitState::minus()), 0.0);
    }

    #[test]
    fn gap_values() {
        assert_eq!(qd_qr_gap(1.0).unwrap(), 0.0);
        assert!(rel(qd_qr_gap(3.0).unwrap(), 24.0 * (-6.0f64).exp()) < 1e-15);
        let g30 = qd_qr_gap(30.0).unwrap();
        assert!(g30 / (4.0 * 900.0 + 120.0) < 1e-24);
        assert!(qd_qr_gap(0.0).is_err());
    }

    #[test]
    fn gap_matches_breakdown() {
        let pr = pair(FRAC_PI_2, FRAC_PI_2, PI);
        for n in 1..=30 {
            let n = n as f64;
            let m = sym(n);
            let direct = branch_gap(&m, &pr, FRAC_PI_2).unwrap();
            let expected = qd_qr_gap(n).unwrap();
            let scale = expected.abs().max(4.0 * n * (-2.0 * n).exp());
            assert!((direct - expected).abs() <= 1e-9 * scale, "n = {n}: {direct} vs {expected}");
            if n <= 6.0 {
                let b = phase_fisher_breakdown(&m, &pr, FRAC_PI_2).unwrap();
                assert!((b.pd_qd - b.pr_qr - expected).abs() < 1e-12 * b.q_j);
            }
        }
    }

    #[test]
    fn fock_numerics_confirm_gap_sign() {
        let pr = pair(FRAC_PI_2, FRAC_PI_2, PI);
        let b = numerical_phase_breakdown(&sym(3.0), &pr, FRAC_PI_2).unwrap();
        let gap = b.pd_qd - b.pr_qr;
        assert!(rel(gap, qd_qr_gap(3.0).unwrap()) < 1e-4, "{gap}");
    }

    #[test]
    fn figure_one_sum() {
        let m = sym(4.0);
        let pr = pair(FRAC_PI_2, FRAC_PI_2, PI);
        let rows = figure_sweep(&m, &pr, &fig1_grid(200), Execution::Sequential).unwrap();
        assert_eq!(rows.len(), 200);
        for b in &rows {
            assert!(rel(b.f_tot, 80.0) < 1e-6, "g = {}: {}", b.g, b.f_tot);
        }
        assert!(rows[0]
            .diagnostics
            .iter()
            .any(|d| matches!(d, Diagnostic::IndeterminateFp { .. })));
        assert!(rows[1].f_p < rows[0].f_p);
        assert!(rows[2].f_p < rows[1].f_p);
        assert!(rows[2].pd_qd > rows[1].pd_qd);
        assert!(rows[2].pr_qr > rows[1].pr_qr);
    }

    #[test]
    fn sweep_paths_agree() {
        let grid = fig1_grid(33);
        let pr = pair(1.0, 2.0, 0.3);
        let a = figure_sweep(&sym(2.5), &pr, &grid, Execution::Parallel).unwrap();
        let b = figure_sweep(&sym(2.5), &pr, &grid, Execution::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn figure_two_rows() {
        let ns: Vec<f64> = (1..=30).map(f64::from).collect();
        let pr = pair(FRAC_PI_2, FRAC_PI_2, PI);
        let rows = photon_sweep(&ns, &pr, Execution::Parallel).unwrap();
        for (n, b) in ns.iter().zip(&rows) {
            let qj = 4.0 * n * n + 4.0 * n;
            assert!(b.f_p.abs() < 1e-20 * qj);
            assert!(rel(b.pd_qd + b.pr_qr, qj) < 1e-12);
            if *n >= 2.0 {
                assert!(b.pd_qd > 4.0 * n && b.pr_qr > 4.0 * n);
            }
        }
    }

    #[test]
    fn eigenstate_pre_selection() {
        let n = 3.5;
        for ti in [0.0, PI] {
            for tf in [0.3, FRAC_PI_2, 2.8] {
                let b = phase_fisher_breakdown(&sym(n), &pair(ti, tf, 0.7), 0.4).unwrap();
                assert_eq!(b.f_p, 0.0);
                assert!((b.pd_qd + b.pr_qr - 4.0 * n).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenstate_sign_mapping() {
        let n = 2.0;
        let tf = 1.1;
        let minus = phase_fisher_breakdown(&sym(n), &pair(0.0, tf, 0.0), 0.3).unwrap();
        assert!((minus.pd_qd - 2.0 * n * (1.0 + tf.cos())).abs() < 1e-12);
        let plus = phase_fisher_breakdown(&sym(n), &pair(PI, tf, 0.0), 0.3).unwrap();
        assert!((plus.pd_qd - 2.0 * n * (1.0 - tf.cos())).abs() < 1e-12);
    }

    #[test]
    fn closed_forms_match_fock_numerics() {
        let cases = [
            (2.0, pair(0.9, 2.1, 0.4), 0.35),
            (5.0, pair(FRAC_PI_2, FRAC_PI_2, 2.0), 0.8),
            (9.0, pair(2.5, 0.6, -1.2), 0.45),
            (16.0, pair(1.2, 1.7, 3.0), 0.15),
        ];
        for (n, pr, g) in cases {
            let c = phase_fisher_breakdown(&sym(n), &pr, g).unwrap();
            let f = numerical_phase_breakdown(&sym(n), &pr, g).unwrap();
            assert!(rel(f.p_d, c.p_d) < 1e-10);
            assert!(rel(f.q_d, c.q_d) < 1e-6, "Q_d {} vs {}", f.q_d, c.q_d);
            assert!(rel(f.q_r, c.q_r) < 1e-6, "Q_r {} vs {}", f.q_r, c.q_r);
            assert!(rel(f.f_p, c.f_p) < 1e-6, "F_p {} vs {}", f.f_p, c.f_p);
            assert!(rel(f.q_j, c.q_j) < 1e-6);
        }
    }

    #[test]
    fn asymmetric_joint_qfi_matches_numerics() {
        let m = CoherentMeter::with_photons(3.0, Coupling::Asymmetric).unwrap();
        let pr = pair(1.1, 0.7, 0.2);
        let b = numerical_phase_breakdown(&m, &pr, 0.4).unwrap();
        assert!(rel(b.q_j, joint_qfi(&m, &pr.pre)) < 1e-6);
        assert!(b.f_tot <= b.q_j * (1.0 + 1e-6));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn periodic_in_g(n in 0.1f64..20.0, ti in 0.0f64..PI, tf in 0.0f64..PI, p0 in -PI..PI, g in 0.01f64..1.5) {
            let m = sym(n);
            let pr = pair(ti, tf, p0);
            let a = phase_fisher_breakdown(&m, &pr, g).unwrap();
            let b = phase_fisher_breakdown(&m, &pr, g + PI).unwrap();
            let scale = a.q_j;
            prop_assert!((a.p_d - b.p_d).abs() < 1e-9);
            prop_assert!((a.pd_qd - b.pd_qd).abs() < 1e-8 * scale);
            prop_assert!((a.pr_qr - b.pr_qr).abs() < 1e-8 * scale);
            prop_assert!((a.f_p - b.f_p).abs() < 1e-8 * scale);
        }

        #[test]
        fn equatorial_conservation(n in 0.1f64..30.0, p0 in -PI..PI, g in 0.0f64..PI) {
            let m = sym(n);
            let b = phase_fisher_breakdown(&m, &pair(FRAC_PI_2, FRAC_PI_2, p0), g).unwrap();
            prop_assert!(rel(b.f_tot, 4.0 * n * n + 4.0 * n) < 1e-6);
        }

        #[test]
        fn bounded_by_joint_qfi(n in 0.0f64..30.0, ti in 0.0f64..PI, tf in 0.0f64..PI, p0 in -PI..PI, g in 0.0f64..PI) {
            let b = phase_fisher_breakdown(&sym(n), &pair(ti, tf, p0), g).unwrap();
            prop_assert!(b.f_tot <= b.q_j * (1.0 + 1e-9) + 1e-12, "{} > {}", b.f_tot, b.q_j);
        }
    }
}
