use clap::{Parser, Subcommand};
use fhks::chemo::{mass_relation_residual, solve_chemo, EllipticLaw};
use fhks::config::{make_initial_data, parse_config, render, Preset, RunManifest};
use fhks::domain::{build_basis, inner_product, to_grid, to_spectral, DomainSpec, SymbolMode};
use fhks::error::{FhksError, Result};
use fhks::evolution::run;
use fhks::fractional::{apply_on_grid, make_multiplier, FracParams, MultiplierKind};
use fhks::output::{write_series, write_snapshot};
use fhks::sweep::{render_sweep, sweep};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Spectral laboratory for a regularized fractional chemotaxis system.
#[derive(Parser)]
#[command(name = "fhks", version, about)]
struct Cli {
    /// Path to a run manifest; defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (created if missing)
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for sweeps; 0 = rayon default
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    /// Overrides the random_clipped preset seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write series + snapshots
    Run,
    /// Run the manifest's parameter sweep and write the table
    Sweep,
    /// Run the built-in invariant suite
    Check,
}

fn load_manifest(cli: &Cli) -> Result<RunManifest> {
    let mut manifest = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| FhksError::io(path, e))?;
            parse_config(&text)?
        }
        None => RunManifest::default(),
    };
    if let Some(seed) = cli.seed {
        if let Preset::RandomClipped(_) = manifest.preset {
            manifest.preset = Preset::RandomClipped(seed);
        }
    }
    Ok(manifest)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| FhksError::io(dir, e))
}

fn cmd_run(manifest: &RunManifest, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let basis = Arc::new(build_basis(&manifest.domain));
    let u0 = make_initial_data(manifest.preset, &manifest.domain);
    let traj = run(&u0, &basis, &manifest.sim, &manifest.output_times)?;
    std::fs::write(out.join("config.resolved"), render(manifest))
        .map_err(|e| FhksError::io(out.join("config.resolved"), e))?;
    if manifest.write_series {
        write_series(&traj, &manifest.sim.diag_levels, &out.join("series.csv"))?;
    }
    if manifest.write_snapshots {
        for (i, snap) in traj.snapshots.iter().enumerate() {
            write_snapshot(snap, &out.join(format!("snapshot_{i:04}.fhks")))?;
        }
    }
    println!(
        "run complete: t = {:.6}, {} steps, {} snapshots",
        traj.snapshots.last().map_or(0.0, |s| s.t),
        traj.diagnostics.len(),
        traj.snapshots.len()
    );
    Ok(())
}

fn cmd_sweep(manifest: &RunManifest, out: &Path) -> Result<()> {
    ensure_dir(out)?;
    let table = sweep(manifest)?;
    let text = render_sweep(&table);
    std::fs::write(out.join("sweep.csv"), &text)
        .map_err(|e| FhksError::io(out.join("sweep.csv"), e))?;
    std::fs::write(out.join("config.resolved"), render(manifest))
        .map_err(|e| FhksError::io(out.join("config.resolved"), e))?;
    print!("{text}");
    Ok(())
}

struct CheckReport {
    failures: usize,
}

impl CheckReport {
    fn assert(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("ok   {name}");
        } else {
            println!("FAIL {name}: {detail}");
            self.failures += 1;
        }
    }
}

/// A quick in-process invariant battery on a small grid; the full suite
/// lives in the test targets.
fn cmd_check() -> Result<()> {
    let mut report = CheckReport { failures: 0 };
    let dom = DomainSpec::line(1.0, 64, SymbolMode::Discrete)?;
    let basis = Arc::new(build_basis(&dom));
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rand_field = |rng: &mut ChaCha8Rng| {
        fhks::domain::GridField::new((0..64).map(|_| rng.gen::<f64>()).collect(), &dom).unwrap()
    };

    // basis round-trip
    let f = rand_field(&mut rng);
    let rt = to_grid(&to_spectral(&f, &basis)?);
    report.assert(
        "basis round-trip",
        f.linf_distance(&rt) < 1e-12,
        format!("linf {}", f.linf_distance(&rt)),
    );

    // self-adjointness of the fractional power
    let p = make_multiplier(MultiplierKind::PowerS, &basis, FracParams::new(0.4, 0.0)?)?;
    let g1 = rand_field(&mut rng);
    let g2 = rand_field(&mut rng);
    let a = inner_product(&apply_on_grid(&p, &g1, &basis)?, &g2)?;
    let b = inner_product(&g1, &apply_on_grid(&p, &g2, &basis)?)?;
    report.assert(
        "fractional power self-adjoint",
        (a - b).abs() < 1e-10,
        format!("gap {}", (a - b).abs()),
    );

    // mean relation for sigma in {0, 0.5, 1}
    for sigma in [0.0, 0.5, 1.0] {
        let u = rand_field(&mut rng);
        let sol = solve_chemo(&u, &basis, FracParams::new(0.4, sigma)?)?;
        let res = mass_relation_residual(&u, &sol);
        report.assert(
            &format!("mean relation sigma = {sigma}"),
            res < 1e-12,
            format!("residual {res}"),
        );
    }

    // short run: mass conserved, bounds held
    let m = RunManifest::default();
    let dom = DomainSpec::line(1.0, 128, SymbolMode::Discrete)?;
    let basis = Arc::new(build_basis(&dom));
    let u0 = make_initial_data(Preset::Bump, &dom);
    let mut cfg = m.sim.clone();
    cfg.t_end = 0.1;
    let traj = run(&u0, &basis, &cfg, &[])?;
    let m0 = u0.integral();
    let mass_ok = traj
        .diagnostics
        .iter()
        .all(|r| (r.mass - m0).abs() <= 1e-12);
    report.assert("mass conserved", mass_ok, "drift > 1e-12".into());
    let bounds_ok = traj
        .diagnostics
        .iter()
        .all(|r| r.u_min >= -1e-8 && r.u_max <= 1.0 + 1e-8 && r.c_min >= -1e-8);
    report.assert("bounds held", bounds_ok, "u or c left [0, 1]".into());

    // daper law: constant state is steady
    let c0 = fhks::domain::GridField::constant(0.5, &dom);
    let sol = fhks::chemo::solve_elliptic(&c0, &basis, EllipticLaw::Daper)?;
    report.assert(
        "reference law constant solve",
        sol.c.linf_distance(&c0) < 1e-12,
        format!("linf {}", sol.c.linf_distance(&c0)),
    );

    if report.failures > 0 {
        Err(FhksError::ConfigValidation(format!(
            "{} invariant check(s) failed",
            report.failures
        )))
    } else {
        println!("all invariant checks passed");
        Ok(())
    }
}

fn main() {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cli.threads > 0 {
        pool = pool.num_threads(cli.threads);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    };
    let result = pool.install(|| -> Result<()> {
        match cli.command {
            Command::Run => cmd_run(&load_manifest(&cli)?, &cli.out),
            Command::Sweep => cmd_sweep(&load_manifest(&cli)?, &cli.out),
            Command::Check => cmd_check(),
        }
    });
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
