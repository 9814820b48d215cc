use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use cumica::asymptotics::{
    assumption_holds, check_assumptions as verify, optimal_alpha as find_alpha, required_assumption,
};
use cumica::distributions::{moment_profile, parse_sources};
use cumica::estimators::{compound_cumulant, Standardizer};
use cumica::simulation::{
    asv_targets, contour_grid, generate_ic_sample, monte_carlo_experiment, parse_key_values,
    ExperimentConfig, FamilyRange, ShapeFamily, MC_CSV_HEADER,
};
use cumica::{DataMatrix, IcModelSpec, Method, Mixing, MomentProfile, SolverOptions};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::table::{format_matrix, inline_matrix, open_output, read_matrix};
use crate::{AsvArgs, CheckArgs, CliError, ContourArgs, EstimateArgs, OptimalAlphaArgs, SimulateArgs};

/// `fobi` is compound at weight 0 with the FOBI standardizer.
fn parse_method(s: &str) -> Result<(Method, bool), CliError> {
    if s == "fobi" {
        return Ok((Method::CompoundCumulant, true));
    }
    s.parse::<Method>()
        .map(|m| (m, false))
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn header(
    out: &mut dyn Write,
    command: &str,
    method: Option<&str>,
    alpha: Option<f64>,
    seed: Option<u64>,
) -> std::io::Result<()> {
    let show = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    writeln!(
        out,
        "# cumica {command} method={} alpha={} seed={}",
        show(method.map(str::to_string)),
        show(alpha.map(|a| a.to_string())),
        show(seed.map(|s| s.to_string())),
    )
}

fn profiles_of(sources: &str) -> Result<Vec<MomentProfile>, CliError> {
    Ok(parse_sources(sources)?
        .iter()
        .map(moment_profile)
        .collect::<Result<_, _>>()?)
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let (method, fobi) = parse_method(&a.method)?;
    let alpha = if fobi { 0.0 } else { a.alpha };
    let opts = SolverOptions {
        tol: a.tol,
        max_iter: a.max_iter,
        restarts: a.restarts,
        seed: a.seed,
    };
    let x = DataMatrix::new(read_matrix(&a.input)?)?;
    let est = if method == Method::CompoundCumulant {
        let standardizer = match (fobi, a.standardizer.as_str()) {
            (true, "auto" | "fobi") => Standardizer::Fobi,
            (true, _) => {
                return Err(CliError::Usage("the fobi method fixes its own standardizer".into()))
            }
            (false, "auto") => Standardizer::default_for(alpha),
            (false, "symmetric") => Standardizer::SymmetricPP(alpha),
            (false, "fobi") => Standardizer::Fobi,
            (false, path) => Standardizer::Custom(read_matrix(Path::new(path))?),
        };
        compound_cumulant(&x, alpha, &standardizer, &opts)?
    } else {
        if a.standardizer != "auto" {
            return Err(CliError::Usage(
                "--standardizer applies to the compound method only".into(),
            ));
        }
        cumica::estimate(&x, method, alpha, &opts)?
    };

    let mut out = open_output(a.out.as_deref())?;
    header(&mut out, "estimate", Some(&a.method), Some(alpha), Some(a.seed))?;
    writeln!(
        out,
        "# converged={} objective={} iterations={} restarts={}",
        est.converged,
        est.objective,
        est.iterations.iter().map(usize::to_string).collect::<Vec<_>>().join(":"),
        est.restarts_used
    )?;
    for w in &est.warnings {
        writeln!(out, "# warning: {w}")?;
        eprintln!("warning: {w}");
    }
    for line in format_matrix(&est.w) {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut kv = match &a.config {
        Some(p) => parse_key_values(
            &fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?,
        )?,
        None => BTreeMap::new(),
    };
    let overrides = [
        ("sources", a.sources.clone()),
        ("method", a.method.clone()),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("reps", a.reps.map(|v| v.to_string())),
        ("seed", a.seed.map(|v| v.to_string())),
        ("restarts", a.restarts.map(|v| v.to_string())),
        ("tol", a.tol.map(|v| v.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            kv.insert(key.to_string(), v);
        }
    }
    let method_name = kv.get("method").cloned().unwrap_or_else(|| "symmetric".into());
    let (_, fobi) = parse_method(&method_name)?;
    if fobi {
        kv.insert("alpha".into(), "0".into());
    }
    let cfg = ExperimentConfig::from_key_values(&kv)?;
    let mut out = open_output(a.out.as_deref())?;

    if a.emit_data {
        let mixing = match a.mixing.as_str() {
            "identity" => Mixing::Identity,
            "random" => Mixing::RandomFullRank(cfg.seed),
            other => return Err(CliError::Usage(format!("unknown mixing '{other}'"))),
        };
        let p = cfg.sources.len();
        let model = IcModelSpec {
            sources: cfg.sources.clone(),
            mixing,
            shift: DVector::zeros(p),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (x, omega, _) = generate_ic_sample(&model, cfg.n, &mut rng)?;
        header(&mut out, "simulate", Some(&method_name), Some(cfg.alpha), Some(cfg.seed))?;
        writeln!(out, "# omega: {}", inline_matrix(&omega))?;
        for line in format_matrix(x.matrix()) {
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        return Ok(());
    }

    let model = IcModelSpec::new(cfg.sources.clone());
    let res = monte_carlo_experiment(&model, cfg.method, cfg.alpha, cfg.n, cfg.reps, cfg.seed, &cfg.solver)?;
    header(&mut out, "simulate", Some(&method_name), Some(cfg.alpha), Some(cfg.seed))?;
    writeln!(
        out,
        "# failed={} mdi_mean={} mdi_median={}",
        res.failed, res.mdi_mean, res.mdi_median
    )?;
    writeln!(out, "{MC_CSV_HEADER}")?;
    for line in res.csv_rows() {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    eprintln!("{} replications in {:.2?}", res.replications, res.wall_clock);
    Ok(())
}

pub fn asv(a: &AsvArgs) -> Result<(), CliError> {
    let (method, fobi) = parse_method(&a.method)?;
    let alpha = if fobi { 0.0 } else { a.alpha };
    let profiles = profiles_of(&a.sources)?;
    let table = asv_targets(&profiles, method, alpha)?;
    let mut out = open_output(a.out.as_deref())?;
    header(&mut out, "asv", Some(&a.method), Some(alpha), None)?;
    writeln!(out, "k,l,asv")?;
    for k in 0..table.nrows() {
        for l in 0..table.ncols() {
            writeln!(out, "{},{},{}", k + 1, l + 1, table[(k, l)])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn optimal_alpha(a: &OptimalAlphaArgs) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(a.pi.len() * a.mu.len());
    for &pi in &a.pi {
        for &mu in &a.mu {
            let (alpha, f) = find_alpha(pi, mu, a.grid)?;
            rows.push(format!("{pi},{mu},{alpha},{f}"));
        }
    }
    let mut out = open_output(a.out.as_deref())?;
    header(&mut out, "optimal-alpha", None, None, None)?;
    writeln!(out, "pi,mu,alpha_star,f_star")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

fn parse_range(family: &str, range: &str) -> Result<FamilyRange, CliError> {
    let family: ShapeFamily = family.parse()?;
    let (from, to) = range
        .split_once(':')
        .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
        .ok_or_else(|| CliError::Usage(format!("range '{range}' is not from:to")))?;
    Ok(FamilyRange { family, from, to })
}

pub fn contour(a: &ContourArgs) -> Result<(), CliError> {
    let (method, fobi) = parse_method(&a.method)?;
    let alpha = if fobi { 0.0 } else { a.alpha };
    let x = parse_range(&a.family_x, &a.range_x)?;
    let y = parse_range(&a.family_y, &a.range_y)?;
    let grid = contour_grid(x, y, method, alpha, a.steps)?;
    let mut out = open_output(a.out.as_deref())?;
    header(&mut out, "contour", Some(&a.method), Some(alpha), None)?;
    writeln!(out, "{}", grid.csv_header())?;
    for line in grid.csv_rows() {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn check_assumptions(a: &CheckArgs) -> Result<(), CliError> {
    let (method, fobi) = parse_method(&a.method)?;
    let alpha = if fobi { 0.0 } else { a.alpha };
    let profiles = profiles_of(&a.sources)?;
    let mut out = open_output(None)?;
    header(&mut out, "check-assumptions", Some(&a.method), Some(alpha), None)?;
    writeln!(out, "# required={}", required_assumption(method, alpha))?;
    writeln!(out, "assumption,holds")?;
    for number in 3..=8 {
        writeln!(out, "{number},{}", assumption_holds(number, &profiles)?)?;
    }
    out.flush()?;
    verify(&profiles, method, alpha)?;
    Ok(())
}
