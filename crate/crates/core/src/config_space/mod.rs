//! Configuration-space coupling: the meter momentum is shifted by `∓g`
//! depending on the qubit eigenvalue.
//!
//! For the Gaussian meter `f(p) ∝ exp(−σ²p²)` everything is closed form and
//! depends on `(σ, s = gσ)` only through `σ²` and `s`. Arbitrary meters live
//! in [`sampled`].

mod sampled;

pub use sampled::{
    profile_branch_family, profile_joint_family, sampled_fisher_breakdown, sampled_joint_qfi,
    sampled_postselection_probabilities, MeterProfile, Regime, SampledWavefunction,
    DEFAULT_GRID_POINTS, GRID_TOLERANCE,
};

use serde::Serialize;

use crate::breakdown::{assemble_guarded, ratio, Branch, BranchTerms, FisherBreakdown};
use crate::error::{Error, Result};
use crate::fisher::{classical_fi, default_step, pure_state_qfi, Basis, Grid, StateFamily};
use crate::qubit::{selection_coefficients, SelectionPair};
use crate::Diagnostic;

/// Gaussian pointer of position spread `sigma` (momentum spread `1/(2σ)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianMeter {
    sigma: f64,
}

impl GaussianMeter {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Measurement strength `s = gσ`.
    pub fn strength(&self, g: f64) -> f64 {
        g * self.sigma
    }

    /// `4σ²`, the joint-state QFI for every pre-selection and every `g`.
    pub fn joint_qfi(&self) -> f64 {
        4.0 * self.sigma * self.sigma
    }

    pub fn profile(&self) -> MeterProfile {
        MeterProfile::Gaussian { sigma: self.sigma }
    }
}

/// Asymptotic regime of the coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitRegime {
    /// `s → 0`.
    Weak,
    /// `s ≫ 1`.
    Strong,
}

impl LimitRegime {
    /// Strength at which closed forms are evaluated to probe the limit.
    pub fn probe_strength(self) -> f64 {
        match self {
            LimitRegime::Weak => 1e-3,
            LimitRegime::Strong => 5.0,
        }
    }
}

/// `(p_d, p_r)` in a cancellation-free form.
fn gaussian_probabilities(meter: &GaussianMeter, pair: &SelectionPair, g: f64) -> (f64, f64) {
    let s = meter.strength(g);
    let cross = 0.5 * pair.pre.sin_theta() * pair.post.sin_theta() * pair.phi0().cos();
    let shift = cross * (-2.0 * s * s).exp_m1();
    let p_d = (pair.overlap_probability() + shift).clamp(0.0, 1.0);
    let p_r = (pair.orthogonal_overlap_probability() - shift).clamp(0.0, 1.0);
    (p_d, p_r)
}

/// Success probability `(1 + cosθ_i cosθ_f + sinθ_i sinθ_f cosφ_0 e^{−2s²}) / 2`.
pub fn gaussian_success_probability(meter: &GaussianMeter, pair: &SelectionPair, g: f64) -> f64 {
    gaussian_probabilities(meter, pair, g).0
}

fn gaussian_terms(meter: &GaussianMeter, pair: &SelectionPair, g: f64) -> BranchTerms {
    let sigma2 = meter.sigma * meter.sigma;
    let s = meter.strength(g);
    let s2 = s * s;
    let big_s =
        (-2.0 * s2).exp() * pair.pre.sin_theta() * pair.post.sin_theta() * pair.phi0().cos();
    let (p_d, p_r) = gaussian_probabilities(meter, pair, g);
    let ss = big_s * big_s * s2;
    let drift = big_s * (2.0 * s2 - 1.0);
    BranchTerms {
        p_d,
        p_r,
        pd_qd: 4.0 * sigma2 * (p_d + drift - ratio(ss, p_d)),
        pr_qr: 4.0 * sigma2 * (p_r - drift - ratio(ss, p_r)),
        f_p: 4.0 * sigma2 * (ratio(ss, p_d) + ratio(ss, p_r)),
    }
}

/// Closed-form breakdown for the Gaussian meter.
///
/// Products `p_k Q_k` are formed directly; a branch with probability below
/// [`crate::EPS_PROB`] is flagged and its terms taken from the symmetric
/// fallback at `g ± 1e−6`.
pub fn gaussian_fisher_breakdown(meter: &GaussianMeter, pair: &SelectionPair, g: f64) -> FisherBreakdown {
    assemble_guarded(g, meter.joint_qfi(), false, |x| gaussian_terms(meter, pair, x))
}

/// Limit formulas for `p_d Q_d`:
/// weak `2σ²(1 + cosθ_i cosθ_f − sinθ_i sinθ_f cosφ_0)`,
/// strong `2σ²(1 + cosθ_i cosθ_f)`.
pub fn gaussian_limit_pdqd(meter: &GaussianMeter, pair: &SelectionPair, regime: LimitRegime) -> f64 {
    let sigma2 = meter.sigma * meter.sigma;
    let c = pair.pre.cos_theta() * pair.post.cos_theta();
    match regime {
        LimitRegime::Weak => {
            let x = pair.pre.sin_theta() * pair.post.sin_theta() * pair.phi0().cos();
            2.0 * sigma2 * (1.0 + c - x)
        }
        LimitRegime::Strong => 2.0 * sigma2 * (1.0 + c),
    }
}

/// Limit formula next to the closed form evaluated at the probe strength.
///
/// The two disagree at orthogonal selection (`θ_i = θ_f`, `φ_0 = π`), where
/// the direct limit sends `p_d Q_d → 0` and `F_p → 4σ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitReport {
    pub regime: LimitRegime,
    pub formula: f64,
    pub direct: f64,
    pub direct_f_p: f64,
}

pub fn gaussian_limit_report(meter: &GaussianMeter, pair: &SelectionPair, regime: LimitRegime) -> LimitReport {
    let g = regime.probe_strength() / meter.sigma;
    let b = gaussian_fisher_breakdown(meter, pair, g);
    LimitReport {
        regime,
        formula: gaussian_limit_pdqd(meter, pair, regime),
        direct: b.pd_qd,
        direct_f_p: b.f_p,
    }
}

/// `n · fi_single`: `n` independent photons of a coherent meter.
pub fn classical_resource_scaling(fi_single: f64, n: f64) -> Result<f64> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("photon number n = {n} must be positive")));
    }
    Ok(n * fi_single)
}

/// Normalised Gaussian branch state on the default grid, for numerical checks.
pub fn gaussian_branch_family(
    meter: &GaussianMeter,
    pair: &SelectionPair,
    branch: Branch,
    g_max: f64,
) -> impl StateFamily {
    profile_branch_family(meter.profile(), *pair, branch, g_max)
}

/// Breakdown by finite differences on grid-sampled Gaussian states.
///
/// Branch probabilities are grid norms of the unnormalised post-selected
/// amplitudes, so nothing here reuses the closed forms. A branch below
/// [`crate::EPS_PROB`] contributes nothing and is flagged.
pub fn numerical_gaussian_breakdown(meter: &GaussianMeter, pair: &SelectionPair, g: f64) -> Result<FisherBreakdown> {
    let profile = meter.profile();
    let g_max = g.abs() + 1.0;
    let step = default_step(g);
    let grid = Grid::symmetric(profile.default_half_width(g_max), DEFAULT_GRID_POINTS);
    let coeffs = selection_coefficients(pair);
    let probabilities = move |x: f64| -> Vec<f64> {
        let basis = Basis::Grid(grid);
        let mut p: Vec<f64> = [Branch::Success, Branch::Failure]
            .into_iter()
            .map(|branch| {
                let (gm, gp) = coeffs.branch(branch);
                let amps: Vec<_> = grid
                    .points()
                    .map(|q| gm * profile.value(q + x) + gp * profile.value(q - x))
                    .collect();
                basis.norm_sqr(&amps)
            })
            .collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);
        p
    };
    let p = probabilities(g);
    let (p_d, p_r) = (p[0], p[1]);

    let mut diagnostics = Vec::new();
    let mut branch_qfi = |branch: Branch, prob: f64| -> Result<f64> {
        if prob < crate::EPS_PROB {
            diagnostics.push(Diagnostic::DegenerateBranch { branch, probability: prob });
            return Ok(0.0);
        }
        pure_state_qfi(&profile_branch_family(profile, *pair, branch, g_max), g, step)
    };
    let q_d = branch_qfi(Branch::Success, p_d)?;
    let q_r = branch_qfi(Branch::Failure, p_r)?;
    let f_p = classical_fi(&probabilities, g, step)?;
    let q_j = pure_state_qfi(&profile_joint_family(profile, pair.pre, g_max), g, step)?;
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
