//! The `{p_d, Q_d, Q_r, F_p, F_tot}` quintet and its assembly.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::EPS_PROB;

/// Outcome of the post-selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Success,
    Failure,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Success => "success",
            Branch::Failure => "failure",
        })
    }
}

/// Non-fatal conditions met while evaluating a breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Diagnostic {
    /// Branch probability below [`EPS_PROB`]; its terms come from the
    /// symmetric fallback.
    DegenerateBranch { branch: Branch, probability: f64 },
    /// `F_p` closed form is 0/0; `fallback` is the reported value.
    IndeterminateFp { fallback: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherBreakdown {
    pub g: f64,
    pub p_d: f64,
    pub q_d: f64,
    pub q_r: f64,
    /// `p_d · Q_d`, evaluated in product form.
    pub pd_qd: f64,
    /// `(1 − p_d) · Q_r`, evaluated in product form.
    pub pr_qr: f64,
    pub f_p: f64,
    pub f_tot: f64,
    /// Quantum Fisher information of the joint state before post-selection.
    pub q_j: f64,
    pub diagnostics: Vec<Diagnostic>,
}

impl FisherBreakdown {
    pub fn p_r(&self) -> f64 {
        1.0 - self.p_d
    }

    /// `F_tot` when the failed meter state is discarded.
    pub fn f_tot_discard_failure(&self) -> f64 {
        self.pd_qd + self.f_p
    }

    /// `(F_tot − Q_j) / Q_j`; zero for a saturating protocol.
    pub fn relative_deficit(&self) -> f64 {
        if self.q_j == 0.0 {
            self.f_tot
        } else {
            (self.f_tot - self.q_j) / self.q_j
        }
    }

    pub fn is_degenerate(&self) -> bool {
        !self.diagnostics.is_empty()
    }

    /// Promote the first diagnostic to an error.
    pub fn strict(self) -> Result<Self> {
        match self.diagnostics.first() {
            None => Ok(self),
            Some(Diagnostic::DegenerateBranch { branch, probability }) => {
                Err(Error::DegenerateBranch {
                    branch: *branch,
                    probability: *probability,
                })
            }
            Some(Diagnostic::IndeterminateFp { fallback }) => Err(Error::IndeterminateFp {
                g: self.g,
                fallback: *fallback,
            }),
        }
    }
}

/// Raw branch quantities from a closed form at one coupling value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct BranchTerms {
    pub p_d: f64,
    pub p_r: f64,
    pub pd_qd: f64,
    pub pr_qr: f64,
    pub f_p: f64,
}

/// `num / den`, with a vanishing denominator meaning an identically empty branch.
pub(crate) fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Assemble a breakdown from a closed-form evaluator.
///
/// Where a branch probability drops below [`EPS_PROB`] (or, with
/// `fp_guard`, `p_d p_r < 1e−14`) the singular entries are replaced by the
/// mean of the evaluator at `g ± h`, `h = 1e−6 · max(1, |g|)`.
pub(crate) fn assemble_guarded<F>(g: f64, q_j: f64, fp_guard: bool, eval: F) -> FisherBreakdown
where
    F: Fn(f64) -> BranchTerms,
{
    let t = eval(g);
    let mut diagnostics = Vec::new();
    let d_bad = t.p_d < EPS_PROB;
    let r_bad = t.p_r < EPS_PROB;
    let fp_bad = fp_guard && t.p_d * t.p_r < 1e-14;
    if d_bad {
        diagnostics.push(Diagnostic::DegenerateBranch {
            branch: Branch::Success,
            probability: t.p_d,
        });
    }
    if r_bad {
        diagnostics.push(Diagnostic::DegenerateBranch {
            branch: Branch::Failure,
            probability: t.p_r,
        });
    }

    let mut pd_qd = t.pd_qd;
    let mut pr_qr = t.pr_qr;
    let mut f_p = t.f_p;
    let mut q_d = ratio(t.pd_qd, t.p_d);
    let mut q_r = ratio(t.pr_qr, t.p_r);

    if d_bad || r_bad || fp_bad {
        let h = 1e-6 * g.abs().max(1.0);
        let hi = eval(g + h);
        let lo = eval(g - h);
        let mean = |a: f64, b: f64| 0.5 * (a + b);
        if d_bad {
            pd_qd = mean(hi.pd_qd, lo.pd_qd);
            q_d = mean(ratio(hi.pd_qd, hi.p_d), ratio(lo.pd_qd, lo.p_d));
        }
        if r_bad {
            pr_qr = mean(hi.pr_qr, lo.pr_qr);
            q_r = mean(ratio(hi.pr_qr, hi.p_r), ratio(lo.pr_qr, lo.p_r));
        }
        f_p = mean(hi.f_p, lo.f_p);
        if fp_bad {
            diagnostics.push(Diagnostic::IndeterminateFp { fallback: f_p });
        }
    }

    let f_tot = pd_qd + pr_qr + f_p;

    FisherBreakdown {
        g,
        p_d: t.p_d,
        q_d,
        q_r,
        pd_qd,
        pr_qr,
        f_p,
        f_tot,
        q_j,
        diagnostics,
    }
}
