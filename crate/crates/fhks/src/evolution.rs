//! Time integration of the regularized system: explicit monotone hyperbolic
//! transport plus exact spectral implicit diffusion, with a Duhamel/Picard
//! short-time solver as an independent cross-check and the s -> 0 reference
//! system.

use crate::chemo::{solve_elliptic_spectral, ChemoSolution, EllipticLaw};
use crate::diagnostics::{record_step, DiagnosticsRecord};
use crate::domain::{
    divergence_coeffs, gradient_at_centers, to_grid, to_spectral, EigenBasis, GridField,
    SpectralField,
};
use crate::error::{FhksError, Result};
use crate::fractional::FracParams;
use std::sync::Arc;

/// g(u) = u (1 - u).
pub fn g(u: f64) -> f64 {
    u * (1.0 - u)
}

/// g'(u) = 1 - 2u.
pub fn g_prime(u: f64) -> f64 {
    1.0 - 2.0 * u
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxScheme {
    Godunov,
    LaxFriedrichs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Splitting {
    Lie,
    Strang,
}

/// Run parameters for one simulation.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub frac: FracParams,
    pub epsilon: f64,
    pub t_end: f64,
    pub cfl: f64,
    pub splitting: Splitting,
    pub flux: FluxScheme,
    pub diag_levels: Vec<f64>,
}

impl SimConfig {
    pub fn new(frac: FracParams, epsilon: f64, t_end: f64) -> Result<Self> {
        let cfg = SimConfig {
            frac,
            epsilon,
            t_end,
            cfl: 0.45,
            splitting: Splitting::Lie,
            flux: FluxScheme::Godunov,
            diag_levels: vec![0.25, 0.5, 0.75],
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon <= 0.0 {
            return Err(FhksError::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
                range: "(0, inf)",
            });
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(FhksError::InvalidParameter {
                name: "cfl",
                value: self.cfl,
                range: "(0, 1]",
            });
        }
        if self.t_end <= 0.0 {
            return Err(FhksError::InvalidParameter {
                name: "t_end",
                value: self.t_end,
                range: "(0, inf)",
            });
        }
        let mut prev = f64::NEG_INFINITY;
        for &k in &self.diag_levels {
            if !(0.0..=1.0).contains(&k) || k < prev {
                return Err(FhksError::InvalidParameter {
                    name: "diag_levels",
                    value: k,
                    range: "sorted, within [0, 1]",
                });
            }
            prev = k;
        }
        Ok(())
    }
}

/// The evolving pair (t, u, c): chemo is always the solve of the current u.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub u: GridField,
    pub u_spec: SpectralField,
    pub chemo: ChemoSolution,
}

impl SimState {
    pub fn initial(u0: &GridField, basis: &Arc<EigenBasis>, law: EllipticLaw) -> Result<Self> {
        let u_spec = to_spectral(u0, basis)?;
        let chemo = solve_elliptic_spectral(&u_spec, law)?;
        Ok(SimState {
            t: 0.0,
            u: u0.clone(),
            u_spec,
            chemo,
        })
    }
}

/// Snapshots at requested output times plus per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub diagnostics: Vec<DiagnosticsRecord>,
}

/// Godunov or Lax-Friedrichs flux for f(w) = v_face * g(w).
///
/// g is concave with vertex at 1/2, so for v >= 0 the interval minimum sits
/// at an endpoint and the maximum at the vertex when it is inside; the roles
/// swap for v < 0.
pub fn numerical_flux(u_left: f64, u_right: f64, v_face: f64, scheme: FluxScheme) -> f64 {
    if v_face == 0.0 {
        return 0.0;
    }
    let f = |w: f64| v_face * g(w);
    match scheme {
        FluxScheme::Godunov => {
            if u_left <= u_right {
                if v_face >= 0.0 {
                    f(u_left).min(f(u_right))
                } else if u_left <= 0.5 && 0.5 <= u_right {
                    f(0.5)
                } else {
                    f(u_left).min(f(u_right))
                }
            } else if v_face >= 0.0 {
                if u_right <= 0.5 && 0.5 <= u_left {
                    f(0.5)
                } else {
                    f(u_left).max(f(u_right))
                }
            } else {
                f(u_left).max(f(u_right))
            }
        }
        FluxScheme::LaxFriedrichs => {
            // local speed |v| * max|g'| with max|g'| = 1 on [0,1]
            0.5 * (f(u_left) + f(u_right)) - 0.5 * v_face.abs() * (u_right - u_left)
        }
    }
}

const SPEED_FLOOR: f64 = 1e-14;

/// Explicit-step size: cfl * min_axis h / max|v|, with max|g'| = 1 on [0,1].
/// Returns the full remaining time when the velocity is identically zero.
/// Diffusion is implicit and does not constrain dt.
pub fn cfl_dt(state: &SimState, config: &SimConfig) -> f64 {
    let dom = state.u.domain();
    let remaining = config.t_end - state.t;
    let mut inv_dt = 0.0;
    for axis in 0..dom.dimension() {
        inv_dt += state.chemo.max_speed(axis) / dom.h(axis);
    }
    if inv_dt < SPEED_FLOOR {
        remaining
    } else {
        (config.cfl / inv_dt).min(remaining)
    }
}

/// Conservative explicit transport update with zero flux through boundary
/// faces. Unsplit in 2D. Exactly mass preserving (fluxes telescope).
fn hyperbolic_update(u: &GridField, chemo: &ChemoSolution, dt: f64, scheme: FluxScheme) -> GridField {
    let dom = u.domain();
    let mut out = u.clone();
    match dom.dimension() {
        1 => {
            let n = dom.cells()[0];
            let h = dom.h(0);
            let v = &chemo.velocity[0];
            let mut flux = vec![0.0; n + 1];
            for j in 1..n {
                flux[j] = numerical_flux(
                    u.values()[j - 1],
                    u.values()[j],
                    v.values()[j],
                    scheme,
                );
            }
            for i in 0..n {
                out.values_mut()[i] -= dt / h * (flux[i + 1] - flux[i]);
            }
        }
        2 => {
            let (n0, n1) = (dom.cells()[0], dom.cells()[1]);
            let (h0, h1) = (dom.h(0), dom.h(1));
            let v0 = &chemo.velocity[0];
            let v1 = &chemo.velocity[1];
            // axis 0
            for i1 in 0..n1 {
                let mut flux = vec![0.0; n0 + 1];
                for j in 1..n0 {
                    flux[j] = numerical_flux(
                        u.values()[(j - 1) * n1 + i1],
                        u.values()[j * n1 + i1],
                        v0.values()[v0.index(j, i1)],
                        scheme,
                    );
                }
                for i0 in 0..n0 {
                    out.values_mut()[i0 * n1 + i1] -= dt / h0 * (flux[i0 + 1] - flux[i0]);
                }
            }
            // axis 1
            for i0 in 0..n0 {
                let mut flux = vec![0.0; n1 + 1];
                for j in 1..n1 {
                    flux[j] = numerical_flux(
                        u.values()[i0 * n1 + j - 1],
                        u.values()[i0 * n1 + j],
                        v1.values()[v1.index(j, i0)],
                        scheme,
                    );
                }
                for i1 in 0..n1 {
                    out.values_mut()[i0 * n1 + i1] -= dt / h1 * (flux[i1 + 1] - flux[i1]);
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Exact implicit diffusion: coefficientwise heat factor exp(-dt eps lambda).
/// Mode 0 (total mass) is untouched.
fn diffuse(spec: &SpectralField, dt: f64, epsilon: f64) -> SpectralField {
    let basis = spec.basis();
    let coeffs = spec
        .coeffs()
        .iter()
        .zip(basis.eigenvalues())
        .map(|(&c, &lam)| c * (-dt * epsilon * lam).exp())
        .collect();
    SpectralField::new(coeffs, basis).expect("heat factors are finite")
}

const STEP_BOUND_SLACK: f64 = 1e-6;
const MAX_HALVINGS: u32 = 40;

fn substep(
    state: &SimState,
    basis: &Arc<EigenBasis>,
    config: &SimConfig,
    dt: f64,
) -> Result<(GridField, SpectralField)> {
    let (u_new, spec_new) = match config.splitting {
        Splitting::Lie => {
            let transported = hyperbolic_update(&state.u, &state.chemo, dt, config.flux);
            let spec = diffuse(&to_spectral(&transported, basis)?, dt, config.epsilon);
            (to_grid(&spec), spec)
        }
        Splitting::Strang => {
            let half = diffuse(&state.u_spec, 0.5 * dt, config.epsilon);
            let transported =
                hyperbolic_update(&to_grid(&half), &state.chemo, dt, config.flux);
            let spec = diffuse(&to_spectral(&transported, basis)?, 0.5 * dt, config.epsilon);
            (to_grid(&spec), spec)
        }
    };
    Ok((u_new, spec_new))
}

/// One accepted step of the operator-split scheme. The chemo solve is frozen
/// at the step's start; dt halves on bound violation, up to 40 times.
pub fn step(state: &SimState, basis: &Arc<EigenBasis>, config: &SimConfig, law: EllipticLaw) -> Result<SimState> {
    let mut dt = cfl_dt(state, config);
    let mut halvings = 0;
    loop {
        let (u_new, spec_new) = substep(state, basis, config, dt)?;
        let (lo, hi) = (u_new.min(), u_new.max());
        if lo >= -STEP_BOUND_SLACK && hi <= 1.0 + STEP_BOUND_SLACK {
            let chemo = solve_elliptic_spectral(&spec_new, law)?;
            return Ok(SimState {
                t: state.t + dt,
                u: u_new,
                u_spec: spec_new,
                chemo,
            });
        }
        halvings += 1;
        if halvings > MAX_HALVINGS {
            return Err(FhksError::StepFailure {
                t: state.t,
                halvings,
                u_min: lo,
                u_max: hi,
            });
        }
        dt *= 0.5;
    }
}

fn check_initial_data(u0: &GridField) -> Result<()> {
    if u0.min() < -1e-12 || u0.max() > 1.0 + 1e-12 {
        return Err(FhksError::ConfigValidation(format!(
            "initial data outside [0, 1]: [{}, {}]",
            u0.min(),
            u0.max()
        )));
    }
    Ok(())
}

/// Drives the scheme to t_end, recording diagnostics each accepted step,
/// snapshots at the requested output times, and calling `hook` on every
/// accepted state.
pub fn run_with_hook(
    u0: &GridField,
    basis: &Arc<EigenBasis>,
    config: &SimConfig,
    law: EllipticLaw,
    output_times: &[f64],
    mut hook: impl FnMut(&SimState, f64),
) -> Result<Trajectory> {
    check_initial_data(u0)?;
    config.validate()?;
    let mut targets: Vec<f64> = output_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t <= config.t_end + 1e-15)
        .collect();
    targets.sort_by(f64::total_cmp);
    if targets.last().is_none_or(|&t| t < config.t_end - 1e-15) {
        targets.push(config.t_end);
    }

    let mut state = SimState::initial(u0, basis, law)?;
    let mut snapshots = vec![state.clone()];
    let mut diagnostics = Vec::new();
    let mut viscous_cum = 0.0;
    hook(&state, 0.0);

    for &target in &targets {
        while state.t < target - 1e-14 {
            // hit the output time exactly
            let capped = SimConfig {
                t_end: target,
                ..config.clone()
            };
            let prev = state.clone();
            state = step(&state, basis, &capped, law)?;
            let dt = state.t - prev.t;
            let rec = record_step(&prev, &state, dt, config.epsilon, &config.diag_levels, &mut viscous_cum);
            diagnostics.push(rec);
            hook(&state, dt);
        }
        snapshots.push(state.clone());
    }
    Ok(Trajectory {
        snapshots,
        diagnostics,
    })
}

/// Runs the fractional system.
pub fn run(
    u0: &GridField,
    basis: &Arc<EigenBasis>,
    config: &SimConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    run_with_hook(
        u0,
        basis,
        config,
        EllipticLaw::Fractional(config.frac),
        output_times,
        |_, _| {},
    )
}

/// Runs the s -> 0+ reference system (-Delta) S + S = u with velocity grad S.
pub fn daper_run(
    u0: &GridField,
    basis: &Arc<EigenBasis>,
    config: &SimConfig,
    output_times: &[f64],
) -> Result<Trajectory> {
    run_with_hook(u0, basis, config, EllipticLaw::Daper, output_times, |_, _| {})
}

/// Result of the Duhamel fixed-point iteration.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub fixed_point: GridField,
    /// L-inf distance between successive iterates, one entry per iteration.
    pub iterate_diffs: Vec<f64>,
    pub iterations: usize,
}

const PICARD_NODES: usize = 64;
const PICARD_TOL: f64 = 1e-10;
const PICARD_MAX_ITERS: usize = 100;

/// Short-time mild-solution solver: fixed-point iteration of the Duhamel map
///   u(t) = e^{t eps Delta} u0 - int_0^t e^{(t-tau) eps Delta} div(g(u) grad L u) dtau,
/// evaluated spectrally with midpoint time quadrature on 64 nodes. The
/// divergence is projected by parts onto the basis, so no kernel-gradient
/// singularity is ever sampled.
pub fn duhamel_picard(
    u0: &GridField,
    basis: &Arc<EigenBasis>,
    config: &SimConfig,
    t_horizon: f64,
) -> Result<PicardResult> {
    check_initial_data(u0)?;
    if t_horizon <= 0.0 {
        return Err(FhksError::InvalidParameter {
            name: "t_horizon",
            value: t_horizon,
            range: "(0, inf)",
        });
    }
    let law = EllipticLaw::Fractional(config.frac);
    let eps = config.epsilon;
    let dt = t_horizon / PICARD_NODES as f64;
    let nodes: Vec<f64> = (0..PICARD_NODES)
        .map(|m| (m as f64 + 0.5) * dt)
        .collect();
    let u0_spec = to_spectral(u0, basis)?;

    let heat_to = |spec: &SpectralField, t: f64| diffuse(spec, t, eps);

    // source coefficients of -div(g(u) grad L u) for the iterate at one node
    let source = |spec: &SpectralField| -> Result<SpectralField> {
        let u_grid = to_grid(spec);
        let mut pot = Vec::with_capacity(spec.coeffs().len());
        for (&c, &lam) in spec.coeffs().iter().zip(basis.eigenvalues()) {
            pot.push(law.potential_symbol(lam) * c);
        }
        let pot = SpectralField::new(pot, basis)?;
        let vel = gradient_at_centers(&pot);
        let flux: Vec<GridField> = vel
            .iter()
            .map(|comp| {
                let mut f = comp.clone();
                for (fv, uv) in f.values_mut().iter_mut().zip(u_grid.values()) {
                    *fv *= g(*uv);
                }
                f
            })
            .collect();
        let mut div = divergence_coeffs(&flux, basis)?;
        for c in div.coeffs_mut() {
            *c = -*c;
        }
        Ok(div)
    };

    // initial guess: pure heat propagation
    let mut iterates: Vec<SpectralField> =
        nodes.iter().map(|&tau| heat_to(&u0_spec, tau)).collect();
    let mut diffs = Vec::new();
    let mut grew = 0u32;

    for iter in 0..PICARD_MAX_ITERS {
        let sources: Vec<SpectralField> = iterates
            .iter()
            .map(&source)
            .collect::<Result<_>>()?;
        let mut max_diff = 0.0f64;
        let mut next = Vec::with_capacity(PICARD_NODES);
        for m in 0..PICARD_NODES {
            let tau_m = nodes[m];
            let mut acc = heat_to(&u0_spec, tau_m);
            for mp in 0..m {
                let propagated = heat_to(&sources[mp], tau_m - nodes[mp]);
                acc.axpy(dt, &propagated);
            }
            // half interval up to the midpoint node itself
            acc.axpy(0.5 * dt, &sources[m]);
            let d = to_grid(&acc).linf_distance(&to_grid(&iterates[m]));
            max_diff = max_diff.max(d);
            next.push(acc);
        }
        iterates = next;
        diffs.push(max_diff);
        if max_diff <= PICARD_TOL {
            break;
        }
        if iter > 0 && max_diff > diffs[iter - 1] {
            grew += 1;
            if grew >= 5 {
                return Err(FhksError::NonContraction {
                    horizon: t_horizon,
                    grew,
                });
            }
        } else {
            grew = 0;
        }
    }

    // assemble the endpoint from the converged node values
    let sources: Vec<SpectralField> = iterates
        .iter()
        .map(&source)
        .collect::<Result<_>>()?;
    let mut end = heat_to(&u0_spec, t_horizon);
    for m in 0..PICARD_NODES {
        let propagated = heat_to(&sources[m], t_horizon - nodes[m]);
        end.axpy(dt, &propagated);
    }
    Ok(PicardResult {
        fixed_point: to_grid(&end),
        iterations: diffs.len(),
        iterate_diffs: diffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_basis, DomainSpec, SymbolMode};

    fn setup(n: usize) -> (Arc<EigenBasis>, SimConfig) {
        let dom = DomainSpec::line(1.0, n, SymbolMode::Discrete).unwrap();
        let basis = Arc::new(build_basis(&dom));
        let cfg = SimConfig::new(FracParams::new(0.4, 0.0).unwrap(), 1e-3, 0.5).unwrap();
        (basis, cfg)
    }

    fn bump(basis: &Arc<EigenBasis>) -> GridField {
        GridField::from_fn(basis.domain(), |x| {
            (0.9 * (-((x[0] - 0.5) / 0.125).powi(2)).exp()).clamp(0.0, 1.0)
        })
    }

    #[test]
    fn flux_zero_velocity() {
        assert_eq!(numerical_flux(0.3, 0.8, 0.0, FluxScheme::Godunov), 0.0);
    }

    #[test]
    fn flux_consistency() {
        for scheme in [FluxScheme::Godunov, FluxScheme::LaxFriedrichs] {
            for u in [0.0, 0.2, 0.5, 0.9, 1.0] {
                let f = numerical_flux(u, u, 1.7, scheme);
                assert!((f - 1.7 * g(u)).abs() < 1e-15, "{scheme:?} at {u}");
            }
        }
    }

    #[test]
    fn flux_godunov_endpoint_case() {
        // v = 1, ul = 0.2 <= ur = 0.9: interval minimum of g is at an
        // endpoint, min(g(0.2), g(0.9)) = 0.09
        let f = numerical_flux(0.2, 0.9, 1.0, FluxScheme::Godunov);
        assert!((f - 0.09).abs() < 1e-15);
        // brute-force oracle over a fine grid of [0.2, 0.9]
        let brute = (0..=10_000)
            .map(|i| g(0.2 + 0.7 * i as f64 / 10_000.0))
            .fold(f64::INFINITY, f64::min);
        assert!((f - brute).abs() < 1e-8);
    }

    #[test]
    fn flux_godunov_vertex_case() {
        // decreasing data spanning the vertex: max of g on [0.3, 0.8] is g(0.5)
        let f = numerical_flux(0.8, 0.3, 2.0, FluxScheme::Godunov);
        assert!((f - 2.0 * g(0.5)).abs() < 1e-15);
    }

    #[test]
    fn flux_monotone_in_arguments() {
        let v = 1.3;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=20 {
            let ul = i as f64 / 20.0;
            let f = numerical_flux(ul, 0.6, v, FluxScheme::Godunov);
            assert!(f >= prev - 1e-15, "not nondecreasing in u_left");
            prev = f;
        }
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let ur = i as f64 / 20.0;
            let f = numerical_flux(0.6, ur, v, FluxScheme::Godunov);
            assert!(f <= prev + 1e-15, "not nonincreasing in u_right");
            prev = f;
        }
    }

    #[test]
    fn cfl_formula() {
        let (basis, mut cfg) = setup(64);
        cfg.t_end = 10.0;
        let state = SimState::initial(&bump(&basis), &basis, EllipticLaw::Fractional(cfg.frac)).unwrap();
        let vmax = state.chemo.max_speed(0);
        let dt = cfl_dt(&state, &cfg);
        assert!((dt - 0.45 * (1.0 / 64.0) / vmax).abs() < 1e-12 * dt);
    }

    #[test]
    fn cfl_zero_velocity_gives_remaining() {
        let (basis, cfg) = setup(32);
        let u = GridField::constant(0.5, basis.domain());
        let state = SimState::initial(&u, &basis, EllipticLaw::Fractional(cfg.frac)).unwrap();
        assert_eq!(cfl_dt(&state, &cfg), 0.5);
    }

    #[test]
    fn constant_state_is_steady() {
        let (basis, cfg) = setup(32);
        let u = GridField::constant(0.5, basis.domain());
        let traj = run(&u, &basis, &cfg, &[0.25]).unwrap();
        for snap in &traj.snapshots {
            assert!(snap.u.linf_distance(&u) < 1e-12, "t = {}", snap.t);
        }
    }

    #[test]
    fn zero_stays_zero() {
        let (basis, cfg) = setup(32);
        let u = GridField::constant(0.0, basis.domain());
        let traj = run(&u, &basis, &cfg, &[]).unwrap();
        assert!(traj.snapshots.last().unwrap().u.max().abs() < 1e-13);
    }

    #[test]
    fn mass_conserved_every_step() {
        let (basis, cfg) = setup(64);
        let u0 = bump(&basis);
        let m0 = u0.integral();
        let mut ok = true;
        run_with_hook(
            &u0,
            &basis,
            &cfg,
            EllipticLaw::Fractional(cfg.frac),
            &[],
            |state, _| {
                if (state.u.integral() - m0).abs() > 1e-12 {
                    ok = false;
                }
            },
        )
        .unwrap();
        assert!(ok);
    }

    #[test]
    fn bounds_preserved_on_bump() {
        let (basis, mut cfg) = setup(128);
        cfg.epsilon = 1e-3;
        cfg.t_end = 0.2;
        let traj = run(&bump(&basis), &basis, &cfg, &[]).unwrap();
        for rec in &traj.diagnostics {
            assert!(rec.u_min >= -1e-8 && rec.u_max <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn strang_matches_lie_to_first_order() {
        let (basis, mut cfg) = setup(64);
        cfg.t_end = 0.05;
        let lie = run(&bump(&basis), &basis, &cfg, &[]).unwrap();
        cfg.splitting = Splitting::Strang;
        let strang = run(&bump(&basis), &basis, &cfg, &[]).unwrap();
        let d = lie
            .snapshots
            .last()
            .unwrap()
            .u
            .linf_distance(&strang.snapshots.last().unwrap().u);
        assert!(d < 5e-3, "{d}");
    }

    #[test]
    fn picard_constant_fixed_point() {
        let (basis, cfg) = setup(32);
        let u = GridField::constant(0.4, basis.domain());
        let res = duhamel_picard(&u, &basis, &cfg, 1e-2).unwrap();
        assert!(res.fixed_point.linf_distance(&u) < 1e-12);
        assert!(res.iterations <= 2);
    }

    #[test]
    fn picard_contracts_geometrically() {
        let (basis, mut cfg) = setup(64);
        cfg.epsilon = 1e-2;
        let res = duhamel_picard(&bump(&basis), &basis, &cfg, 1e-2).unwrap();
        // after the burn-in iteration, differences decrease monotonically
        for w in res.iterate_diffs.windows(2).skip(1) {
            assert!(w[1] <= w[0] * 1.000001, "{:?}", res.iterate_diffs);
        }
    }

    #[test]
    fn picard_agrees_with_run() {
        let (basis, mut cfg) = setup(64);
        cfg.epsilon = 1e-2;
        let horizon = 1e-2;
        cfg.t_end = horizon;
        let res = duhamel_picard(&bump(&basis), &basis, &cfg, horizon).unwrap();
        let times: Vec<f64> = (1..=32).map(|i| horizon * i as f64 / 32.0).collect();
        let traj = run(&bump(&basis), &basis, &cfg, &times).unwrap();
        let d = res
            .fixed_point
            .linf_distance(&traj.snapshots.last().unwrap().u);
        assert!(d <= 5e-4, "two-solver gap {d}");
    }

    #[test]
    fn daper_constant_trajectory() {
        let (basis, cfg) = setup(32);
        let u = GridField::constant(0.3, basis.domain());
        let traj = daper_run(&u, &basis, &cfg, &[]).unwrap();
        assert!(traj.snapshots.last().unwrap().u.linf_distance(&u) < 1e-12);
    }

    #[test]
    fn s_sweep_approaches_daper() {
        let (basis, mut cfg) = setup(64);
        cfg.t_end = 0.5;
        let u0 = bump(&basis);
        let reference = daper_run(&u0, &basis, &cfg, &[]).unwrap();
        let ref_u = &reference.snapshots.last().unwrap().u;
        let mut dists = Vec::new();
        for s in [0.45, 0.2, 0.02] {
            cfg.frac = FracParams::new(s, 0.0).unwrap();
            let traj = run(&u0, &basis, &cfg, &[]).unwrap();
            dists.push(traj.snapshots.last().unwrap().u.l1_distance(ref_u));
        }
        assert!(dists[2] < dists[1] && dists[1] < dists[0], "{dists:?}");
    }

    #[test]
    fn rejects_bad_initial_data() {
        let (basis, cfg) = setup(16);
        let u = GridField::constant(1.5, basis.domain());
        assert!(run(&u, &basis, &cfg, &[]).is_err());
    }
}
