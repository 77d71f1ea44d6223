//! Fractional operators as per-mode spectral multipliers, plus two
//! independent cross-validation oracles: a dense matrix power of the Neumann
//! stencil and a heat-semigroup integral representation.

use crate::domain::{
    inner_product, to_grid, to_spectral, DomainSpec, EigenBasis, GridField, SpectralField,
    SymbolMode,
};
use crate::error::{FhksError, Result};
use std::sync::Arc;

/// Fractional exponent and operator-family selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub sigma: f64,
}

impl FracParams {
    pub fn new(s: f64, sigma: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(FhksError::InvalidParameter {
                name: "s",
                value: s,
                range: "(0, 1)",
            });
        }
        if !(0.0..=1.0).contains(&sigma) {
            return Err(FhksError::InvalidParameter {
                name: "sigma",
                value: sigma,
                range: "[0, 1]",
            });
        }
        Ok(FracParams { s, sigma })
    }
}

/// Which functional-calculus operator a multiplier realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierKind {
    /// lambda_k^s, zero at mode 0.
    PowerS,
    /// lambda_k^{-s} for k >= 1, zero at mode 0. Total operator.
    Ks,
    /// lambda_k^{-s/2} for k >= 1, zero at mode 0 (K_s^{1/2}).
    Hs,
    /// 1/(1 + lambda * lambda_k^s), all modes.
    Resolvent { lambda: f64 },
    /// 1/(lambda_k + lambda_k^s) for k >= 1, zero at mode 0.
    CompositeL,
    /// lambda_k^{-s} restricted to mean-zero fields; errors on violation.
    RestrictedInverse,
    /// exp(-t * epsilon * lambda_k).
    Heat { t: f64, epsilon: f64 },
    /// 1/((lambda_k + sigma)^{1-s} + (1 - sigma)), all modes.
    ChemoResolvent,
}

/// A per-mode real factor encoding one operator of the spectral calculus.
#[derive(Debug, Clone)]
pub struct SpectralMultiplier {
    kind: MultiplierKind,
    factors: Vec<f64>,
    mean_zero_only: bool,
}

// 0^s := 0 for s in (0,1): the mode-0 factor of the fractional power is 0,
// the operator is not injective on its full domain.
fn pow_frac(lambda: f64, s: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda.powf(s)
    }
}

pub fn make_multiplier(
    kind: MultiplierKind,
    basis: &EigenBasis,
    params: FracParams,
) -> Result<SpectralMultiplier> {
    let s = params.s;
    match kind {
        MultiplierKind::Resolvent { lambda } if lambda <= 0.0 => {
            return Err(FhksError::InvalidParameter {
                name: "lambda",
                value: lambda,
                range: "(0, inf)",
            });
        }
        MultiplierKind::Heat { t, epsilon } => {
            if t < 0.0 {
                return Err(FhksError::InvalidParameter {
                    name: "t",
                    value: t,
                    range: "[0, inf)",
                });
            }
            if epsilon <= 0.0 {
                return Err(FhksError::InvalidParameter {
                    name: "epsilon",
                    value: epsilon,
                    range: "(0, inf)",
                });
            }
        }
        _ => {}
    }
    let factors: Vec<f64> = basis
        .eigenvalues()
        .iter()
        .map(|&lam| match kind {
            MultiplierKind::PowerS => pow_frac(lam, s),
            MultiplierKind::Ks | MultiplierKind::RestrictedInverse => {
                if lam == 0.0 {
                    0.0
                } else {
                    lam.powf(-s)
                }
            }
            MultiplierKind::Hs => {
                if lam == 0.0 {
                    0.0
                } else {
                    lam.powf(-s / 2.0)
                }
            }
            MultiplierKind::Resolvent { lambda } => 1.0 / (1.0 + lambda * pow_frac(lam, s)),
            MultiplierKind::CompositeL => {
                if lam == 0.0 {
                    0.0
                } else {
                    1.0 / (lam + lam.powf(s))
                }
            }
            MultiplierKind::Heat { t, epsilon } => (-t * epsilon * lam).exp(),
            MultiplierKind::ChemoResolvent => {
                1.0 / (pow_frac(lam + params.sigma, 1.0 - s) + (1.0 - params.sigma))
            }
        })
        .collect();
    Ok(SpectralMultiplier {
        kind,
        factors,
        mean_zero_only: matches!(kind, MultiplierKind::RestrictedInverse),
    })
}

impl SpectralMultiplier {
    pub fn kind(&self) -> MultiplierKind {
        self.kind
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn mean_zero_only(&self) -> bool {
        self.mean_zero_only
    }
}

/// Diagonal action: coefficientwise product.
pub fn apply(m: &SpectralMultiplier, field: &SpectralField) -> Result<SpectralField> {
    if m.factors.len() != field.coeffs().len() {
        return Err(FhksError::DomainMismatch(
            "multiplier and field built on different bases".into(),
        ));
    }
    if m.mean_zero_only && field.coeffs()[0].abs() > 1e-10 {
        return Err(FhksError::NonzeroMean(field.coeffs()[0].abs()));
    }
    let coeffs = m
        .factors
        .iter()
        .zip(field.coeffs())
        .map(|(f, c)| f * c)
        .collect();
    SpectralField::new(coeffs, field.basis())
}

const ORACLE_CELL_CAP: usize = 4096;

/// Neumann second-difference matrix on cell midpoints (1D or 2D kron sum).
pub fn neumann_stencil_matrix(domain: &DomainSpec) -> Result<nalgebra::DMatrix<f64>> {
    let m = domain.total_cells();
    if m > ORACLE_CELL_CAP {
        return Err(FhksError::OracleSizeCap {
            cells: m,
            cap: ORACLE_CELL_CAP,
        });
    }
    let mut a = nalgebra::DMatrix::<f64>::zeros(m, m);
    match domain.dimension() {
        1 => {
            let n = domain.cells()[0];
            let w = 1.0 / (domain.h(0) * domain.h(0));
            for i in 0..n {
                if i > 0 {
                    a[(i, i - 1)] -= w;
                    a[(i, i)] += w;
                }
                if i + 1 < n {
                    a[(i, i + 1)] -= w;
                    a[(i, i)] += w;
                }
            }
        }
        2 => {
            let (n0, n1) = (domain.cells()[0], domain.cells()[1]);
            let w0 = 1.0 / (domain.h(0) * domain.h(0));
            let w1 = 1.0 / (domain.h(1) * domain.h(1));
            let idx = |i0: usize, i1: usize| i0 * n1 + i1;
            for i0 in 0..n0 {
                for i1 in 0..n1 {
                    let r = idx(i0, i1);
                    if i0 > 0 {
                        a[(r, idx(i0 - 1, i1))] -= w0;
                        a[(r, r)] += w0;
                    }
                    if i0 + 1 < n0 {
                        a[(r, idx(i0 + 1, i1))] -= w0;
                        a[(r, r)] += w0;
                    }
                    if i1 > 0 {
                        a[(r, idx(i0, i1 - 1))] -= w1;
                        a[(r, r)] += w1;
                    }
                    if i1 + 1 < n1 {
                        a[(r, idx(i0, i1 + 1))] -= w1;
                        a[(r, r)] += w1;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(a)
}

/// Independent dense oracle: eigendecompose the Neumann stencil, raise the
/// eigenvalues to the power s, recompose. Requires discrete symbol mode.
pub fn dense_oracle_power(domain: &DomainSpec, s: f64) -> Result<nalgebra::DMatrix<f64>> {
    if domain.symbol_mode() != SymbolMode::Discrete {
        return Err(FhksError::OracleNeedsDiscrete);
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(FhksError::InvalidParameter {
            name: "s",
            value: s,
            range: "(0, 1]",
        });
    }
    let a = neumann_stencil_matrix(domain)?;
    let eig = a.symmetric_eigen();
    let m = eig.eigenvalues.len();
    let mut d = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        // clamp the numerically-zero mode before the fractional power
        let lam = eig.eigenvalues[i].max(0.0);
        d[(i, i)] = pow_frac_threshold(lam, s, domain);
    }
    Ok(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

// The stencil's zero eigenvalue comes out as O(1e-12) noise from the dense
// solver; treat anything below a spectra-scaled cutoff as the kernel mode.
fn pow_frac_threshold(lam: f64, s: f64, domain: &DomainSpec) -> f64 {
    let scale: f64 = (0..domain.dimension())
        .map(|d| 4.0 / (domain.h(d) * domain.h(d)))
        .sum();
    if lam <= scale * 1e-12 {
        0.0
    } else {
        lam.powf(s)
    }
}

/// Quadrature settings for the semigroup integral oracle.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupQuadrature {
    pub t_min: f64,
    pub t_max: f64,
    pub nodes: usize,
}

impl SemigroupQuadrature {
    /// Log-spaced defaults resolving the t -> 0 singularity and the tail.
    pub fn defaults(basis: &EigenBasis) -> Self {
        SemigroupQuadrature {
            t_min: 1e-8 / basis.lambda_max(),
            t_max: 50.0 / basis.lambda_1(),
            nodes: 1600,
        }
    }
}

/// Semigroup integral representation of the fractional power:
///   (-Delta_N)^s f = 1/Gamma(-s) * int_0^inf (e^{t Delta_N} f - f) t^{-1-s} dt.
///
/// Trapezoid rule in tau = log t, with closed-form corrections for the head
/// (linearized semigroup) and the tail (projection onto the mean).
pub fn semigroup_fractional_oracle(
    f: &GridField,
    basis: &Arc<EigenBasis>,
    s: f64,
    quad: SemigroupQuadrature,
) -> Result<GridField> {
    if !(s > 0.0 && s < 1.0) {
        return Err(FhksError::InvalidParameter {
            name: "s",
            value: s,
            range: "(0, 1)",
        });
    }
    if !(quad.t_min > 0.0 && quad.t_max > quad.t_min && quad.nodes >= 2) {
        return Err(FhksError::InvalidParameter {
            name: "quadrature",
            value: quad.t_min,
            range: "0 < t_min < t_max, nodes >= 2",
        });
    }
    let spec = to_spectral(f, basis)?;
    // gamma(-s) = gamma(1-s) / (-s)
    let gamma_neg_s = statrs::function::gamma::gamma(1.0 - s) / (-s);

    let heat_minus_identity = |t: f64, acc: &mut [f64]| {
        for ((a, &c), &lam) in acc
            .iter_mut()
            .zip(spec.coeffs())
            .zip(basis.eigenvalues())
        {
            *a = ((-t * lam).exp() - 1.0) * c;
        }
    };

    let tau_lo = quad.t_min.ln();
    let tau_hi = quad.t_max.ln();
    let dtau = (tau_hi - tau_lo) / (quad.nodes - 1) as f64;
    let mut sum = vec![0.0; spec.coeffs().len()];
    let mut work = vec![0.0; spec.coeffs().len()];
    for j in 0..quad.nodes {
        let tau = tau_lo + j as f64 * dtau;
        let t = tau.exp();
        heat_minus_identity(t, &mut work);
        // d t / t^{1+s} = e^{-s tau} d tau
        let w = if j == 0 || j == quad.nodes - 1 {
            0.5 * dtau
        } else {
            dtau
        } * (-s * tau).exp();
        for (a, &v) in sum.iter_mut().zip(&work) {
            *a += w * v;
        }
    }
    // head: int_0^{t_min} ((e^{-t lam} - 1) c) t^{-1-s} dt ~ -lam c t_min^{1-s}/(1-s)
    // tail: int_{t_max}^inf -> -c_k t_max^{-s}/s for k >= 1, 0 for the mean mode
    let head = quad.t_min.powf(1.0 - s) / (1.0 - s);
    let tail = quad.t_max.powf(-s) / s;
    for ((a, &c), &lam) in sum.iter_mut().zip(spec.coeffs()).zip(basis.eigenvalues()) {
        *a += -lam * c * head;
        if lam > 0.0 {
            *a += -c * tail;
        }
    }
    for a in sum.iter_mut() {
        *a /= gamma_neg_s;
    }
    Ok(to_grid(&SpectralField::new(sum, basis)?))
}

/// Applies a multiplier through the grid representation:
/// to_grid(apply(m, to_spectral(f))).
pub fn apply_on_grid(m: &SpectralMultiplier, f: &GridField, basis: &Arc<EigenBasis>) -> Result<GridField> {
    Ok(to_grid(&apply(m, &to_spectral(f, basis)?)?))
}

/// <apply(m, f), g> computed spectrally; used by the self-adjointness checks.
pub fn bilinear(m: &SpectralMultiplier, f: &GridField, g: &GridField, basis: &Arc<EigenBasis>) -> Result<f64> {
    let out = apply_on_grid(m, f, basis)?;
    inner_product(&out, g)
}
