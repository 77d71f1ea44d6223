//! Chemoattractant solves for the whole operator family, and the transport
//! velocity they induce.
//!
//! The velocity is always computed through the composite symbol applied to u
//! directly (never as a gradient of a stored c), which is exact in spectral
//! space: K_s (I + (-Delta_N)^{1-s})^{-1} has the per-mode factor
//! 1/(lambda_k + lambda_k^s) when sigma = 0.

use crate::domain::{
    gradient, to_grid, to_spectral, EigenBasis, FaceField, GridField, SpectralField,
};
use crate::error::Result;
use crate::fractional::FracParams;
use std::sync::Arc;

/// Which elliptic equation produces c (and the velocity potential).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllipticLaw {
    /// (-Delta_N + sigma I)^{1-s} c + (1 - sigma) c = u, velocity grad K_s c.
    Fractional(FracParams),
    /// (-Delta) S + S = u, velocity grad S. The s -> 0+ reference system.
    Daper,
}

impl EllipticLaw {
    /// Per-mode factor of the solve u |-> c.
    pub fn concentration_symbol(&self, lambda: f64) -> f64 {
        match *self {
            EllipticLaw::Fractional(p) => {
                let shifted = lambda + p.sigma;
                let pow = if shifted == 0.0 {
                    0.0
                } else {
                    shifted.powf(1.0 - p.s)
                };
                1.0 / (pow + (1.0 - p.sigma))
            }
            EllipticLaw::Daper => 1.0 / (1.0 + lambda),
        }
    }

    /// Per-mode factor of the solve u |-> velocity potential (K_s c, or S).
    pub fn potential_symbol(&self, lambda: f64) -> f64 {
        match *self {
            EllipticLaw::Fractional(p) => {
                let shifted = lambda + p.sigma;
                if shifted == 0.0 {
                    // sigma = 0 zero mode: K_s zeroes it; harmless either way,
                    // the gradient kills mode 0.
                    0.0
                } else {
                    shifted.powf(-p.s) * self.concentration_symbol(lambda)
                }
            }
            EllipticLaw::Daper => 1.0 / (1.0 + lambda),
        }
    }

    /// The mean-relation factor: (sigma^{1-s} + 1 - sigma) * int c = int u,
    /// with the convention sigma^{1-s} = 0 at sigma = 0.
    pub fn mean_factor(&self) -> f64 {
        match *self {
            EllipticLaw::Fractional(_) => self.concentration_symbol(0.0).recip(),
            EllipticLaw::Daper => 1.0,
        }
    }
}

/// The solved chemoattractant state: grid and spectral faces of c plus the
/// face-centered transport velocity.
#[derive(Debug, Clone)]
pub struct ChemoSolution {
    pub c: GridField,
    pub c_spec: SpectralField,
    pub velocity: Vec<FaceField>,
    pub law: EllipticLaw,
}

impl ChemoSolution {
    pub fn max_speed(&self, axis: usize) -> f64 {
        self.velocity[axis].max_abs()
    }
}

/// Solves the elliptic equation for c and computes the velocity field.
pub fn solve_elliptic(u: &GridField, basis: &Arc<EigenBasis>, law: EllipticLaw) -> Result<ChemoSolution> {
    let u_spec = to_spectral(u, basis)?;
    solve_elliptic_spectral(&u_spec, law)
}

/// Same as [`solve_elliptic`] starting from spectral coefficients.
pub fn solve_elliptic_spectral(u_spec: &SpectralField, law: EllipticLaw) -> Result<ChemoSolution> {
    let basis = u_spec.basis();
    let mut c_coeffs = Vec::with_capacity(u_spec.coeffs().len());
    let mut pot_coeffs = Vec::with_capacity(u_spec.coeffs().len());
    for (&c, &lam) in u_spec.coeffs().iter().zip(basis.eigenvalues()) {
        c_coeffs.push(law.concentration_symbol(lam) * c);
        pot_coeffs.push(law.potential_symbol(lam) * c);
    }
    let c_spec = SpectralField::new(c_coeffs, basis)?;
    let potential = SpectralField::new(pot_coeffs, basis)?;
    let velocity = gradient(&potential);
    Ok(ChemoSolution {
        c: to_grid(&c_spec),
        c_spec,
        velocity,
        law,
    })
}

/// Convenience wrapper for the fractional family.
pub fn solve_chemo(u: &GridField, basis: &Arc<EigenBasis>, params: FracParams) -> Result<ChemoSolution> {
    solve_elliptic(u, basis, EllipticLaw::Fractional(params))
}

/// |(sigma^{1-s} + 1 - sigma) int c - int u|.
pub fn mass_relation_residual(u: &GridField, sol: &ChemoSolution) -> f64 {
    (sol.law.mean_factor() * sol.c.integral() - u.integral()).abs()
}

/// ||grad L u||^2_{L^2} - lambda_1^{-1} |Omega| ||u||^2_{L_inf}.
/// The contract is that the result is <= 1e-10 for u produced with this basis.
pub fn velocity_bound_check(u: &GridField, basis: &Arc<EigenBasis>, law: EllipticLaw) -> Result<f64> {
    let u_spec = to_spectral(u, basis)?;
    let mut energy = 0.0;
    for (&c, &lam) in u_spec.coeffs().iter().zip(basis.eigenvalues()) {
        let w = law.potential_symbol(lam) * c;
        energy += lam * w * w;
    }
    let sup = u.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(energy - basis.lambda_1().recip() * basis.domain().volume() * sup * sup)
}
