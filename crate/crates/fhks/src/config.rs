//! Run manifests: a small sectioned key-value format, documented defaults,
//! hard errors on unknown keys, and a render that round-trips.
//!
//! Grammar:
//! ```text
//! # comment
//! [domain]
//! dim = 1            # 1 or 2
//! length = 1.0       # per-axis: length_x / length_y override
//! cells = 128        # per-axis: cells_x / cells_y override
//! symbols = discrete # or continuum
//! [sim]
//! s = 0.4
//! sigma = 0.0
//! epsilon = 1e-3
//! t_end = 0.5
//! cfl = 0.45
//! splitting = lie    # or strang
//! flux = godunov     # or lax-friedrichs
//! diag_levels = 0.25, 0.5, 0.75
//! [initial]
//! preset = bump      # constant | bump | two_bumps | riemann_step | random_clipped
//! value = 0.5        # constant only
//! seed = 7           # random_clipped only
//! [output]
//! times = 0.25, 0.5
//! series = true
//! snapshots = true
//! [sweep]
//! axis = s           # s | epsilon | sigma
//! values = 0.45, 0.2, 0.02
//! ```

use crate::domain::{DomainSpec, GridField, SymbolMode};
use crate::error::{FhksError, Result};
use crate::evolution::{FluxScheme, SimConfig, Splitting};
use crate::fractional::FracParams;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Initial-data preset; every preset lands in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    Constant(f64),
    Bump,
    TwoBumps,
    RiemannStep,
    RandomClipped(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    S,
    Epsilon,
    Sigma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::S => "s",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Sigma => "sigma",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// A fully validated run description.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub domain: DomainSpec,
    pub sim: SimConfig,
    pub preset: Preset,
    pub output_times: Vec<f64>,
    pub write_series: bool,
    pub write_snapshots: bool,
    pub sweep: Option<SweepSpec>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            domain: DomainSpec::line(1.0, 128, SymbolMode::Discrete)
                .expect("default domain is valid"),
            sim: SimConfig::new(
                FracParams::new(0.4, 0.0).expect("default s"),
                1e-3,
                0.5,
            )
            .expect("default sim config"),
            preset: Preset::Bump,
            output_times: Vec::new(),
            write_series: true,
            write_snapshots: true,
            sweep: None,
        }
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> FhksError {
    FhksError::ConfigParse {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(v: &str, line: usize, key: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| parse_err(line, format!("{key}: not a number: {v:?}")))
}

fn parse_usize(v: &str, line: usize, key: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| parse_err(line, format!("{key}: not a nonnegative integer: {v:?}")))
}

fn parse_bool(v: &str, line: usize, key: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(line, format!("{key}: expected true or false"))),
    }
}

fn parse_list(v: &str, line: usize, key: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|p| parse_f64(p.trim(), line, key))
        .collect()
}

/// Parses the sectioned key-value text into a validated manifest. Unknown
/// sections or keys are hard errors with the offending line number.
pub fn parse_config(text: &str) -> Result<RunManifest> {
    // raw values first: (section, key) -> (line, value)
    let mut raw: BTreeMap<(String, String), (usize, String)> = BTreeMap::new();
    let mut section = String::new();
    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match full_line.find('#') {
            Some(p) => &full_line[..p],
            None => full_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, "unterminated section header"))?
                .trim();
            match name {
                "domain" | "sim" | "initial" | "output" | "sweep" => {
                    section = name.to_string();
                }
                _ => return Err(parse_err(line_no, format!("unknown section [{name}]"))),
            }
            continue;
        }
        if section.is_empty() {
            return Err(parse_err(line_no, "key before any [section] header"));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected key = value"))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if raw
            .insert((section.clone(), key.clone()), (line_no, value))
            .is_some()
        {
            return Err(parse_err(line_no, format!("duplicate key {key}")));
        }
    }

    let mut take = |sec: &str, key: &str| raw.remove(&(sec.to_string(), key.to_string()));

    // [domain]
    let mut dim = 1usize;
    if let Some((l, v)) = take("domain", "dim") {
        dim = parse_usize(&v, l, "dim")?;
        if !(1..=2).contains(&dim) {
            return Err(parse_err(l, "dim: must be 1 or 2"));
        }
    }
    let mut lengths = vec![1.0; dim];
    let mut cells = vec![128usize; dim];
    if let Some((l, v)) = take("domain", "length") {
        lengths = vec![parse_f64(&v, l, "length")?; dim];
    }
    if let Some((l, v)) = take("domain", "cells") {
        cells = vec![parse_usize(&v, l, "cells")?; dim];
    }
    for (axis, suffix) in ["x", "y"].iter().enumerate() {
        if let Some((l, v)) = take("domain", &format!("length_{suffix}")) {
            if axis >= dim {
                return Err(parse_err(l, format!("length_{suffix}: axis beyond dim")));
            }
            lengths[axis] = parse_f64(&v, l, "length")?;
        }
        if let Some((l, v)) = take("domain", &format!("cells_{suffix}")) {
            if axis >= dim {
                return Err(parse_err(l, format!("cells_{suffix}: axis beyond dim")));
            }
            cells[axis] = parse_usize(&v, l, "cells")?;
        }
    }
    let mut symbol_mode = SymbolMode::Discrete;
    if let Some((l, v)) = take("domain", "symbols") {
        symbol_mode = match v.as_str() {
            "discrete" => SymbolMode::Discrete,
            "continuum" => SymbolMode::Continuum,
            _ => return Err(parse_err(l, "symbols: expected discrete or continuum")),
        };
    }
    let domain = DomainSpec::new(lengths, cells, symbol_mode)?;

    // [sim]
    let mut s = 0.4;
    let mut sigma = 0.0;
    if let Some((l, v)) = take("sim", "s") {
        s = parse_f64(&v, l, "s")?;
    }
    if let Some((l, v)) = take("sim", "sigma") {
        sigma = parse_f64(&v, l, "sigma")?;
    }
    let frac = FracParams::new(s, sigma)?;
    let mut sim = SimConfig::new(frac, 1e-3, 0.5)?;
    if let Some((l, v)) = take("sim", "epsilon") {
        sim.epsilon = parse_f64(&v, l, "epsilon")?;
    }
    if let Some((l, v)) = take("sim", "t_end") {
        sim.t_end = parse_f64(&v, l, "t_end")?;
    }
    if let Some((l, v)) = take("sim", "cfl") {
        sim.cfl = parse_f64(&v, l, "cfl")?;
    }
    if let Some((l, v)) = take("sim", "splitting") {
        sim.splitting = match v.as_str() {
            "lie" => Splitting::Lie,
            "strang" => Splitting::Strang,
            _ => return Err(parse_err(l, "splitting: expected lie or strang")),
        };
    }
    if let Some((l, v)) = take("sim", "flux") {
        sim.flux = match v.as_str() {
            "godunov" => FluxScheme::Godunov,
            "lax-friedrichs" => FluxScheme::LaxFriedrichs,
            _ => return Err(parse_err(l, "flux: expected godunov or lax-friedrichs")),
        };
    }
    if let Some((l, v)) = take("sim", "diag_levels") {
        sim.diag_levels = parse_list(&v, l, "diag_levels")?;
    }
    sim.validate()?;

    // [initial]
    let preset_name = take("initial", "preset");
    let value = take("initial", "value");
    let seed = take("initial", "seed");
    let preset = match preset_name.as_ref().map(|(_, v)| v.as_str()) {
        None | Some("bump") => Preset::Bump,
        Some("constant") => {
            let c = match &value {
                Some((l, v)) => parse_f64(v, *l, "value")?,
                None => 0.5,
            };
            if !(0.0..=1.0).contains(&c) {
                return Err(FhksError::ConfigValidation(format!(
                    "constant preset value {c} outside [0, 1]"
                )));
            }
            Preset::Constant(c)
        }
        Some("two_bumps") => Preset::TwoBumps,
        Some("riemann_step") => Preset::RiemannStep,
        Some("random_clipped") => {
            let sd = match &seed {
                Some((l, v)) => parse_usize(v, *l, "seed")? as u64,
                None => 0,
            };
            Preset::RandomClipped(sd)
        }
        Some(other) => {
            let l = preset_name.as_ref().map(|(l, _)| *l).unwrap_or(0);
            return Err(parse_err(l, format!("unknown preset {other:?}")));
        }
    };
    if let Some((l, _)) = value {
        if !matches!(preset, Preset::Constant(_)) {
            return Err(parse_err(l, "value: only valid with preset = constant"));
        }
    }
    if let Some((l, _)) = seed {
        if !matches!(preset, Preset::RandomClipped(_)) {
            return Err(parse_err(l, "seed: only valid with preset = random_clipped"));
        }
    }

    // [output]
    let mut output_times = Vec::new();
    let mut write_series = true;
    let mut write_snapshots = true;
    if let Some((l, v)) = take("output", "times") {
        output_times = parse_list(&v, l, "times")?;
        if output_times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(parse_err(l, "times: must be finite and nonnegative"));
        }
    }
    if let Some((l, v)) = take("output", "series") {
        write_series = parse_bool(&v, l, "series")?;
    }
    if let Some((l, v)) = take("output", "snapshots") {
        write_snapshots = parse_bool(&v, l, "snapshots")?;
    }

    // [sweep]
    let axis = take("sweep", "axis");
    let values = take("sweep", "values");
    let sweep = match (axis, values) {
        (None, None) => None,
        (Some((l, a)), values) => {
            let axis = match a.as_str() {
                "s" => SweepAxis::S,
                "epsilon" => SweepAxis::Epsilon,
                "sigma" => SweepAxis::Sigma,
                _ => return Err(parse_err(l, "axis: expected s, epsilon or sigma")),
            };
            let (vl, vv) = values.ok_or_else(|| parse_err(l, "sweep axis without values"))?;
            let vals = parse_list(&vv, vl, "values")?;
            if vals.len() < 2 {
                return Err(FhksError::ConfigValidation(
                    "sweep needs at least 2 values".into(),
                ));
            }
            for &v in &vals {
                match axis {
                    SweepAxis::S => {
                        FracParams::new(v, sigma)?;
                    }
                    SweepAxis::Sigma => {
                        FracParams::new(s, v)?;
                    }
                    SweepAxis::Epsilon => {
                        if v <= 0.0 {
                            return Err(FhksError::ConfigValidation(format!(
                                "sweep epsilon {v} must be positive"
                            )));
                        }
                    }
                }
            }
            Some(SweepSpec { axis, values: vals })
        }
        (None, Some((l, _))) => return Err(parse_err(l, "sweep values without axis")),
    };

    if let Some(((sec, key), (l, _))) = raw.into_iter().next() {
        return Err(parse_err(l, format!("unknown key {key} in [{sec}]")));
    }

    Ok(RunManifest {
        domain,
        sim,
        preset,
        output_times,
        write_series,
        write_snapshots,
        sweep,
    })
}

/// Renders the manifest back to config text; parse(render(m)) == m.
pub fn render(m: &RunManifest) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let dim = m.domain.dimension();
    let _ = writeln!(out, "[domain]");
    let _ = writeln!(out, "dim = {dim}");
    for (axis, suffix) in ["x", "y"].iter().enumerate().take(dim) {
        let _ = writeln!(out, "length_{suffix} = {:e}", m.domain.lengths()[axis]);
        let _ = writeln!(out, "cells_{suffix} = {}", m.domain.cells()[axis]);
    }
    let _ = writeln!(
        out,
        "symbols = {}",
        match m.domain.symbol_mode() {
            SymbolMode::Discrete => "discrete",
            SymbolMode::Continuum => "continuum",
        }
    );
    let _ = writeln!(out, "[sim]");
    let _ = writeln!(out, "s = {:e}", m.sim.frac.s);
    let _ = writeln!(out, "sigma = {:e}", m.sim.frac.sigma);
    let _ = writeln!(out, "epsilon = {:e}", m.sim.epsilon);
    let _ = writeln!(out, "t_end = {:e}", m.sim.t_end);
    let _ = writeln!(out, "cfl = {:e}", m.sim.cfl);
    let _ = writeln!(
        out,
        "splitting = {}",
        match m.sim.splitting {
            Splitting::Lie => "lie",
            Splitting::Strang => "strang",
        }
    );
    let _ = writeln!(
        out,
        "flux = {}",
        match m.sim.flux {
            FluxScheme::Godunov => "godunov",
            FluxScheme::LaxFriedrichs => "lax-friedrichs",
        }
    );
    if !m.sim.diag_levels.is_empty() {
        let levels: Vec<String> = m.sim.diag_levels.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "diag_levels = {}", levels.join(", "));
    }
    let _ = writeln!(out, "[initial]");
    match m.preset {
        Preset::Constant(c) => {
            let _ = writeln!(out, "preset = constant");
            let _ = writeln!(out, "value = {c:e}");
        }
        Preset::Bump => {
            let _ = writeln!(out, "preset = bump");
        }
        Preset::TwoBumps => {
            let _ = writeln!(out, "preset = two_bumps");
        }
        Preset::RiemannStep => {
            let _ = writeln!(out, "preset = riemann_step");
        }
        Preset::RandomClipped(seed) => {
            let _ = writeln!(out, "preset = random_clipped");
            let _ = writeln!(out, "seed = {seed}");
        }
    }
    let _ = writeln!(out, "[output]");
    if !m.output_times.is_empty() {
        let times: Vec<String> = m.output_times.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "times = {}", times.join(", "));
    }
    let _ = writeln!(out, "series = {}", m.write_series);
    let _ = writeln!(out, "snapshots = {}", m.write_snapshots);
    if let Some(sweep) = &m.sweep {
        let _ = writeln!(out, "[sweep]");
        let _ = writeln!(out, "axis = {}", sweep.axis.name());
        let vals: Vec<String> = sweep.values.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "values = {}", vals.join(", "));
    }
    out
}

/// Builds the initial field for a preset; always lands in [0, 1].
pub fn make_initial_data(preset: Preset, domain: &DomainSpec) -> GridField {
    match preset {
        Preset::Constant(c) => GridField::constant(c, domain),
        Preset::Bump => {
            let l: Vec<f64> = domain.lengths().to_vec();
            GridField::from_fn(domain, move |x| {
                let r2: f64 = x
                    .iter()
                    .zip(&l)
                    .map(|(xi, li)| {
                        let z = (xi - 0.5 * li) / (li / 8.0);
                        z * z
                    })
                    .sum();
                (0.9 * (-r2).exp()).clamp(0.0, 1.0)
            })
        }
        Preset::TwoBumps => {
            let l: Vec<f64> = domain.lengths().to_vec();
            GridField::from_fn(domain, move |x| {
                let d2 = |center_frac: f64| -> f64 {
                    x.iter()
                        .zip(&l)
                        .map(|(xi, li)| {
                            let z = (xi - center_frac * li) / (li / 10.0);
                            z * z
                        })
                        .sum()
                };
                (0.8 * (-d2(0.3)).exp() + 0.6 * (-d2(0.7)).exp()).clamp(0.0, 1.0)
            })
        }
        Preset::RiemannStep => {
            let half = 0.5 * domain.lengths()[0];
            GridField::from_fn(domain, move |x| if x[0] < half { 0.9 } else { 0.1 })
        }
        Preset::RandomClipped(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..domain.total_cells())
                .map(|_| rng.gen::<f64>())
                .collect();
            GridField::new(values, domain).expect("finite uniform samples")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let m = parse_config("").unwrap();
        assert_eq!(m.domain.dimension(), 1);
        assert_eq!(m.domain.lengths(), &[1.0]);
        assert_eq!(m.domain.cells(), &[128]);
        assert_eq!(m.sim.frac.s, 0.4);
        assert_eq!(m.sim.frac.sigma, 0.0);
        assert_eq!(m.sim.epsilon, 1e-3);
        assert_eq!(m.sim.t_end, 0.5);
        assert_eq!(m.preset, Preset::Bump);
        assert!(m.sweep.is_none());
    }

    #[test]
    fn rejects_s_one_citing_interval() {
        let err = parse_config("[sim]\ns = 1.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(0, 1)"), "{msg}");
    }

    #[test]
    fn rejects_unknown_key_by_name() {
        let err = parse_config("[sim]\nfoo = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn rejects_unknown_section() {
        assert!(parse_config("[nope]\n").is_err());
    }

    #[test]
    fn rejects_duplicate_key() {
        assert!(parse_config("[sim]\ns = 0.3\ns = 0.4\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let m = parse_config("# hello\n\n[sim]\ns = 0.25 # inline\n").unwrap();
        assert_eq!(m.sim.frac.s, 0.25);
    }

    #[test]
    fn two_d_domain_with_overrides() {
        let m = parse_config("[domain]\ndim = 2\ncells = 16\nlength_y = 2.0\n").unwrap();
        assert_eq!(m.domain.lengths(), &[1.0, 2.0]);
        assert_eq!(m.domain.cells(), &[16, 16]);
    }

    #[test]
    fn sweep_requires_two_values() {
        assert!(parse_config("[sweep]\naxis = epsilon\nvalues = 1e-2\n").is_err());
        let m = parse_config("[sweep]\naxis = epsilon\nvalues = 1e-1, 1e-2\n").unwrap();
        assert_eq!(
            m.sweep,
            Some(SweepSpec {
                axis: SweepAxis::Epsilon,
                values: vec![1e-1, 1e-2],
            })
        );
    }

    #[test]
    fn round_trip_default_and_custom() {
        for text in [
            "",
            "[domain]\ndim = 2\ncells = 8\n[sim]\ns = 0.3\nsigma = 0.5\nsplitting = strang\n[initial]\npreset = random_clipped\nseed = 7\n[output]\ntimes = 0.1, 0.2\n[sweep]\naxis = sigma\nvalues = 0, 0.5, 1\n",
        ] {
            let m = parse_config(text).unwrap();
            let m2 = parse_config(&render(&m)).unwrap();
            assert_eq!(render(&m), render(&m2));
            assert_eq!(m.preset, m2.preset);
            assert_eq!(m.sweep, m2.sweep);
            assert_eq!(m.output_times, m2.output_times);
        }
    }

    #[test]
    fn riemann_step_four_cells() {
        let dom = DomainSpec::line(1.0, 4, SymbolMode::Discrete).unwrap();
        let u = make_initial_data(Preset::RiemannStep, &dom);
        assert_eq!(u.values(), &[0.9, 0.9, 0.1, 0.1]);
    }

    #[test]
    fn constant_preset() {
        let dom = DomainSpec::line(1.0, 8, SymbolMode::Discrete).unwrap();
        let u = make_initial_data(Preset::Constant(0.5), &dom);
        assert!(u.values().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn random_clipped_is_deterministic_and_bounded() {
        let dom = DomainSpec::line(1.0, 64, SymbolMode::Discrete).unwrap();
        let a = make_initial_data(Preset::RandomClipped(7), &dom);
        let b = make_initial_data(Preset::RandomClipped(7), &dom);
        assert_eq!(a.values(), b.values());
        assert!(a.min() >= 0.0 && a.max() <= 1.0);
        let c = make_initial_data(Preset::RandomClipped(8), &dom);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn presets_in_unit_interval() {
        let dom = DomainSpec::new(vec![1.0, 2.0], vec![16, 16], SymbolMode::Discrete).unwrap();
        for preset in [Preset::Bump, Preset::TwoBumps, Preset::RiemannStep] {
            let u = make_initial_data(preset, &dom);
            assert!(u.min() >= 0.0 && u.max() <= 1.0, "{preset:?}");
        }
    }
}
