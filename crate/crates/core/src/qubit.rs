//! Pre- and post-selected qubit states in Bloch angles.
//!
//! `|ψ⟩ = cos(θ/2)|−1⟩ + sin(θ/2) e^{iφ}|+1⟩`. Only the relative phase
//! `φ_0 = φ_i − φ_f` enters any downstream formula.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::breakdown::Branch;
use crate::error::{Error, Result};

/// Wrap an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x - 2.0 * PI
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitState {
    theta: f64,
    phi: f64,
}

impl QubitState {
    /// `theta` must lie in `[0, π]`; `phi` is wrapped into `(−π, π]`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "non-finite Bloch angles ({theta}, {phi})"
            )));
        }
        // Allow a few ulps of slack so that e.g. 1.5708 * 2 style inputs do not trip.
        if !(-1e-12..=PI + 1e-12).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} outside [0, pi]"
            )));
        }
        Ok(Self {
            theta: theta.clamp(0.0, PI),
            phi: wrap_angle(phi),
        })
    }

    /// Eigenstate `|−1⟩`.
    pub fn minus() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    /// Eigenstate `|+1⟩`.
    pub fn plus() -> Self {
        Self { theta: PI, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `cos θ`, exactly zero for `θ = π/2` as a floating-point constant.
    pub fn cos_theta(&self) -> f64 {
        (std::f64::consts::FRAC_PI_2 - self.theta).sin()
    }

    /// `sin θ`, exactly zero at both poles.
    pub fn sin_theta(&self) -> f64 {
        if self.theta <= std::f64::consts::FRAC_PI_2 {
            self.theta.sin()
        } else {
            (PI - self.theta).sin()
        }
    }

    /// Amplitudes on `|−1⟩` and `|+1⟩`.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let (s, c) = (0.5 * self.theta).sin_cos();
        (Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionPair {
    pub pre: QubitState,
    pub post: QubitState,
    phi0: f64,
}

impl SelectionPair {
    pub fn new(pre: QubitState, post: QubitState) -> Self {
        Self {
            pre,
            post,
            phi0: wrap_angle(pre.phi - post.phi),
        }
    }

    /// Pair with pre-selected phase `phi0` and post-selected phase 0.
    pub fn from_angles(theta_i: f64, theta_f: f64, phi0: f64) -> Result<Self> {
        Ok(Self::new(
            QubitState::new(theta_i, phi0)?,
            QubitState::new(theta_f, 0.0)?,
        ))
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn theta_i(&self) -> f64 {
        self.pre.theta
    }

    pub fn theta_f(&self) -> f64 {
        self.post.theta
    }

    /// The same pair with pre- and post-selection exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.post, self.pre)
    }

    /// `|⟨ψ_f|ψ_i⟩|²`, the success probability at zero coupling.
    pub fn overlap_probability(&self) -> f64 {
        let c = selection_coefficients(self);
        (c.d_minus + c.d_plus).norm_sqr()
    }

    /// `|⟨ψ_f^⊥|ψ_i⟩|²`, the failure probability at zero coupling.
    pub fn orthogonal_overlap_probability(&self) -> f64 {
        let c = selection_coefficients(self);
        (c.r_minus + c.r_plus).norm_sqr()
    }
}

/// Branch amplitudes `γ_k^∓` multiplying the meter states shifted by `∓g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionCoefficients {
    pub d_minus: Complex64,
    pub d_plus: Complex64,
    pub r_minus: Complex64,
    pub r_plus: Complex64,
}

impl SelectionCoefficients {
    /// `(γ_k^−, γ_k^+)` for one branch.
    pub fn branch(&self, branch: Branch) -> (Complex64, Complex64) {
        match branch {
            Branch::Success => (self.d_minus, self.d_plus),
            Branch::Failure => (self.r_minus, self.r_plus),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.d_minus.norm_sqr()
            + self.d_plus.norm_sqr()
            + self.r_minus.norm_sqr()
            + self.r_plus.norm_sqr()
    }
}

pub fn selection_coefficients(pair: &SelectionPair) -> SelectionCoefficients {
    let (si, ci) = (0.5 * pair.pre.theta).sin_cos();
    let (sf, cf) = (0.5 * pair.post.theta).sin_cos();
    let phase = Complex64::from_polar(1.0, pair.phi0);
    SelectionCoefficients {
        d_minus: Complex64::new(ci * cf, 0.0),
        d_plus: phase * (si * sf),
        r_minus: Complex64::new(ci * sf, 0.0),
        r_plus: phase * (-si * cf),
    }
}
