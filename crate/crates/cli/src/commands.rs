use std::path::Path;

use nullcert::bounds::{hickel_n, kollar_n, rho_for, Theorem};
use nullcert::certsolver::{certify_module, minimal_rho, verify_certificate, Mode};
use nullcert::quad::{
    self, certify_integral as integrate, regularized_residual_study, QuadConfig, Strategy,
};
use nullcert::{MembershipProblem, Outcome};
use serde_json::{json, Value};

use crate::certfile::{CertificateFile, ProfileJson};
use crate::dump::{dump_point, parse_point};
use crate::error::CliError;
use crate::state::{calibration_hash, StateFile};
use crate::system::{read_system, LoadedSystem};
use crate::{emit, sha256_hex, write_text, DegreeChoice, Status};

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::failed(e)
}

fn parse_theorem(s: &str) -> Result<Theorem, CliError> {
    s.parse()
        .map_err(|e: nullcert::bounds::BoundsError| CliError::Usage(e.to_string()))
}

fn nu_string(sys: &LoadedSystem) -> Option<String> {
    sys.nu_inf.as_ref().map(|v| v.to_string())
}

/// `ρ` from `--rho`, or from the theorem (default: thm12 for ideals, thm14 for modules).
fn choose_rho(
    sys: &LoadedSystem,
    degree: &DegreeChoice,
) -> Result<(i64, Option<Theorem>), CliError> {
    if let Some(rho) = degree.rho {
        return Ok((rho, None));
    }
    let theorem = match &degree.theorem {
        Some(t) => parse_theorem(t)?,
        None if sys.problem.r() == 1 => Theorem::Thm12,
        None => Theorem::Thm14,
    };
    let profile = sys.problem.profile(sys.nu_inf.clone()).map_err(fail)?;
    let report = rho_for(theorem, &profile).map_err(fail)?;
    Ok((report.rho, Some(theorem)))
}

pub fn bounds(
    path: &Path,
    theorem: Option<&str>,
    nu_inf: Option<&str>,
) -> Result<Status, CliError> {
    let sys = read_system(path)?;
    let nu = match nu_inf {
        Some(s) => {
            Some(nullcert::bounds::parse_rational(s).map_err(|e| CliError::Usage(e.to_string()))?)
        }
        None => sys.nu_inf.clone(),
    };
    let profile = sys.problem.profile(nu.clone()).map_err(fail)?;
    let prof_json = ProfileJson::of(&sys.problem, nu.map(|v| v.to_string()));
    let ko = kollar_n(&profile).to_string();
    let hi = hickel_n(&profile).to_string();
    match theorem {
        Some(t) => {
            let report = rho_for(parse_theorem(t)?, &profile).map_err(fail)?;
            eprintln!(
                "{}: rho = {}, N_ko = {ko}, N_hi = {hi}, solvable globally: {}",
                report.theorem, report.rho, report.solvable_globally
            );
            emit(&json!({
                "theorem": report.theorem,
                "rho": report.rho,
                "solvable_globally": report.solvable_globally,
                "N_ko": ko,
                "N_hi": hi,
                "formula_terms": report.formula_terms,
                "profile": prof_json,
            }));
        }
        None => {
            let all: Vec<Value> = [
                Theorem::Thm12,
                Theorem::Thm13,
                Theorem::Thm14,
                Theorem::MacaulayNoether,
            ]
            .into_iter()
            .map(|t| match rho_for(t, &profile) {
                Ok(r) => json!({
                    "theorem": t,
                    "rho": r.rho,
                    "solvable_globally": r.solvable_globally,
                    "formula_terms": r.formula_terms,
                }),
                Err(e) => json!({"theorem": t, "error": e.to_string()}),
            })
            .collect();
            eprintln!("N_ko = {ko}, N_hi = {hi}; {} estimates", all.len());
            emit(&json!({"N_ko": ko, "N_hi": hi, "profile": prof_json, "bounds": all}));
        }
    }
    Ok(Status::Success)
}

pub fn certify(
    path: &Path,
    degree: &DegreeChoice,
    output: Option<&Path>,
) -> Result<Status, CliError> {
    let sys = read_system(path)?;
    let (rho, theorem) = choose_rho(&sys, degree)?;
    match certify_module(&sys.problem, rho).map_err(fail)? {
        Outcome::Feasible(mut cert) => {
            cert.theorem = theorem;
            let config = sha256_hex(
                json!({"command": "certify", "rho": rho, "theorem": theorem})
                    .to_string()
                    .as_bytes(),
            );
            let file = CertificateFile::new(
                &cert,
                &sys.problem,
                ProfileJson::of(&sys.problem, nu_string(&sys)),
                &sys.sha256,
                config,
            );
            let value = serde_json::to_value(&file).expect("certificate serializes");
            if let Some(out) = output {
                write_text(
                    out,
                    &(serde_json::to_string_pretty(&value).expect("JSON") + "\n"),
                )?;
            }
            eprintln!(
                "feasible at rho = {rho}: {} exact cofactors",
                sys.problem.m()
            );
            emit(&value);
            Ok(Status::Success)
        }
        Outcome::Infeasible(report) => {
            eprintln!(
                "infeasible at rho = {rho} (rank {} < augmented rank {})",
                report.rank, report.augmented_rank
            );
            emit(&json!({"status": "infeasible", "theorem": theorem, "report": report}));
            Ok(Status::Infeasible)
        }
    }
}

pub fn verify(system: &Path, certificate: &Path, tolerance: f64) -> Result<Status, CliError> {
    let sys = read_system(system)?;
    let text = crate::read_text(certificate)?;
    let file: CertificateFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(e.to_string()).in_file(certificate))?;
    let cert = file
        .certificate(&sys.problem, &sys.sha256)
        .map_err(|e| e.in_file(certificate))?;
    let report = verify_certificate(&sys.problem, &cert).map_err(fail)?;
    let passed = match report.mode {
        Mode::Exact => report.passed(),
        Mode::Numeric => {
            report.passed()
                && report
                    .residual
                    .as_ref()
                    .is_some_and(|r| r.max_rel <= tolerance)
        }
    };
    eprintln!(
        "{} certificate at rho = {}: {}",
        json!(report.mode).as_str().unwrap_or("?"),
        cert.rho,
        if passed { "verified" } else { "REJECTED" }
    );
    emit(&json!({"passed": passed, "tolerance": tolerance, "report": report}));
    Ok(if passed {
        Status::Success
    } else {
        Status::Rejected
    })
}

pub fn minrho(path: &Path, max: i64) -> Result<Status, CliError> {
    let sys = read_system(path)?;
    let found = minimal_rho(&sys.problem, max).map_err(fail)?;
    emit(&json!({"min_rho": found, "max": max}));
    match found {
        Some(r) => {
            eprintln!("minimal rho = {r}");
            Ok(Status::Success)
        }
        None => {
            eprintln!("no solution with rho <= {max}");
            Ok(Status::Infeasible)
        }
    }
}

pub struct IntegralArgs<'a> {
    pub system: &'a Path,
    pub degree: &'a DegreeChoice,
    pub samples: usize,
    pub seed: u64,
    pub eps: Option<f64>,
    pub eps_sequence: Option<Vec<f64>>,
    pub strategy: Option<&'a str>,
    pub chart: usize,
    pub threads: Option<usize>,
    pub max_std_error: Option<f64>,
    pub tolerance: f64,
    pub output: Option<&'a Path>,
    pub state: &'a Path,
}

pub fn certify_integral(a: IntegralArgs<'_>) -> Result<Status, CliError> {
    let sys = read_system(a.system)?;
    let n = sys.problem.n();
    let strategy = match a.strategy {
        Some(s) => s
            .parse::<Strategy>()
            .map_err(|e| CliError::Usage(e.to_string()))?,
        None if n == 1 => Strategy::ChartGrid,
        None => Strategy::SphereMonteCarlo,
    };
    let (store, cal_hash) = StateFile::load(a.state)?.require(n, strategy)?;
    let (rho, theorem) = choose_rho(&sys, a.degree)?;
    let mut config = QuadConfig::new(strategy, a.samples, a.seed).with_eps(a.eps);
    config.eps_sequence = a.eps_sequence;
    config.chart = a.chart;
    config.threads = a.threads;
    config.max_std_error = a.max_std_error;
    config
        .validate(n)
        .map_err(|e| CliError::Usage(e.to_string()))?;

    if config.eps_sequence.is_some() {
        let rows = regularized_residual_study(&sys.problem, rho, &config, &store).map_err(fail)?;
        for r in &rows {
            eprintln!(
                "eps = {:.3e}: residual {:.3e} (relative {:.3e})",
                r.eps, r.residual_max_abs, r.residual_max_rel
            );
        }
        emit(&json!({"rho": rho, "theorem": theorem, "config": config, "rows": rows}));
        return Ok(Status::Success);
    }

    let cert = integrate(&sys.problem, rho, theorem, &config, &store).map_err(fail)?;
    let config_hash = sha256_hex(
        json!({"command": "certify-integral", "rho": rho, "theorem": theorem, "config": config, "calibration": cal_hash})
            .to_string()
            .as_bytes(),
    );
    let mut file = CertificateFile::new(
        &cert.certificate,
        &sys.problem,
        ProfileJson::of(&sys.problem, nu_string(&sys)),
        &sys.sha256,
        config_hash,
    );
    let cal = store.require(n, strategy).map_err(fail)?;
    let residual = cert.residual().clone();
    let accepted = residual.max_rel <= a.tolerance;
    file.integral = Some(json!({
        "kappa": cert.kappa,
        "eps": cert.eps,
        "eps_auto": cert.eps_auto,
        "zero_set_empty": cert.zero_set_empty,
        "strategy": cert.strategy,
        "samples": cert.samples,
        "seed": cert.seed,
        "chart": config.chart,
        "calibration_constant": [cal.constant.re, cal.constant.im],
        "coefficients": cert.coefficients,
        "residue": cert.residue,
        "residue_norm": cert.residue_norm(),
        "max_std_error": cert.max_std_error,
        "decomposition_defect": cert.decomposition_defect,
        "solution_dimension": cert.solution_dimension,
        "exact_distance": cert.exact_distance,
        "rational_denominator_limit": quad::RATIONAL_DENOMINATOR,
        "accepted": accepted,
        "tolerance": a.tolerance,
    }));
    let value = serde_json::to_value(&file).expect("certificate serializes");
    if let Some(out) = a.output {
        write_text(
            out,
            &(serde_json::to_string_pretty(&value).expect("JSON") + "\n"),
        )?;
    }
    eprintln!(
        "numeric certificate at rho = {rho} ({strategy}, {} samples): relative residual {:.3e}, max std error {:.3e}{}",
        a.samples,
        residual.max_rel,
        cert.max_std_error,
        if accepted { "" } else { " -- above tolerance" }
    );
    emit(&value);
    Ok(if accepted {
        Status::Success
    } else {
        Status::Rejected
    })
}

pub struct CalibrateArgs<'a> {
    pub n: usize,
    pub strategy: &'a str,
    pub samples: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub recalibrate: bool,
    pub state: &'a Path,
}

pub fn calibrate(a: CalibrateArgs<'_>) -> Result<Status, CliError> {
    let strategy = a
        .strategy
        .parse::<Strategy>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut state = StateFile::load(a.state)?;
    let hash = calibration_hash(a.n, strategy, a.samples, a.seed);
    let cached = if a.recalibrate {
        None
    } else {
        state.cached(&hash).cloned()
    };
    let (cal, reused) = match cached {
        Some(c) => (c, true),
        None => {
            let mut config = QuadConfig::new(strategy, a.samples, a.seed);
            config.threads = a.threads;
            let cal = quad::calibrate(a.n, &config).map_err(fail)?;
            state.insert(cal.clone());
            state.save(a.state)?;
            (cal, false)
        }
    };
    eprintln!(
        "n = {}, {strategy}: orientation {:+}, calibrated ∫ α11^n = {:.6} ± {:.1e}{}",
        cal.n,
        cal.orientation,
        cal.calibrated_value.re,
        cal.calibrated_std_error,
        if reused { " (stored)" } else { "" }
    );
    emit(&json!({"reused": reused, "config_sha256": hash, "state": a.state, "calibration": cal}));
    Ok(Status::Success)
}

pub fn dump(
    point: &str,
    z: Option<&str>,
    system: Option<&Path>,
    eps: Option<f64>,
    chart: Option<usize>,
) -> Result<Status, CliError> {
    let zeta = parse_point(point)?;
    let z = z.map(parse_point).transpose()?;
    let sys = system.map(read_system).transpose()?;
    let problem: Option<&MembershipProblem> = sys.as_ref().map(|s| &s.problem);
    let value = dump_point(zeta, z, chart, problem, eps)?;
    eprintln!("kernel values at the requested point");
    emit(&value);
    Ok(Status::Success)
}
