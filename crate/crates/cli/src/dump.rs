//! `calibrate --dump-point`: every kernel value at one point, for debugging.

use nullcert::projkernel::{
    alpha00, alpha11, alpha11_top_density, alpha_eval, cutoff, dbar_sigma_eval, gamma_eval,
    sigma_eval, u_eval, FormValue, KernelPoint, KernelSystem, NumericZ,
};
use nullcert::MembershipProblem;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::CliError;

/// Parses `re,im;re,im;…` (a bare `re` means a real coordinate).
pub fn parse_point(s: &str) -> Result<Vec<Complex64>, CliError> {
    s.split(';')
        .map(|c| {
            let parts: Vec<&str> = c.split(',').map(str::trim).collect();
            let num = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad coordinate `{c}` in `{s}`")))
            };
            match parts.as_slice() {
                [re] => Ok(Complex64::new(num(re)?, 0.0)),
                [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
                _ => Err(CliError::Usage(format!("bad coordinate `{c}` in `{s}`"))),
            }
        })
        .collect()
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::failed(e)
}

fn c(v: Complex64) -> Value {
    json!([v.re, v.im])
}

fn form(f: &FormValue<Complex64>) -> Value {
    let s = f.space();
    Value::Array(
        f.terms()
            .map(|(b, v)| json!({"blade": s.label(b), "coeff": c(*v)}))
            .collect(),
    )
}

pub fn dump_point(
    zeta: Vec<Complex64>,
    z: Option<Vec<Complex64>>,
    chart: Option<usize>,
    problem: Option<&MembershipProblem>,
    eps: Option<f64>,
) -> Result<Value, CliError> {
    let bare = KernelPoint::bare(zeta.clone(), z.clone(), chart).map_err(fail)?;
    let mut out = json!({
        "zeta": zeta.iter().copied().map(c).collect::<Vec<_>>(),
        "chart": chart,
        "norm2": bare.norm2(),
        "alpha11": form(&alpha11(&bare)),
        "gamma": gamma_eval(&bare).iter().map(form).collect::<Vec<_>>(),
    });
    if chart.is_some() {
        out["alpha11_top_density"] = c(alpha11_top_density(&bare).map_err(fail)?);
    }
    if let Some(zz) = &z {
        out["z"] = Value::Array(zz.iter().copied().map(c).collect());
        out["alpha00"] = c(alpha00::<NumericZ>(&bare).map_err(fail)?);
        out["alpha"] = form(&alpha_eval::<NumericZ>(&bare).map_err(fail)?);
    }
    if let Some(problem) = problem {
        if problem.r() != 1 {
            return Err(CliError::Usage(
                "kernel dumps need an ideal (r = 1) system".into(),
            ));
        }
        let gens: Vec<_> = problem
            .homogeneous_columns()
            .map_err(fail)?
            .into_iter()
            .map(|c| c[0].clone())
            .collect();
        let sys = KernelSystem::new(&gens).map_err(fail)?;
        let pt = KernelPoint::new(&sys, zeta, z, chart).map_err(fail)?;
        out["f"] = Value::Array(pt.f_values().iter().copied().map(c).collect());
        out["f_norm2"] = json!(pt.f_norm2());
        if pt.f_norm2() > 0.0 {
            out["sigma"] = form(&sigma_eval(&sys, &pt).map_err(fail)?);
            out["dbar_sigma"] = form(&dbar_sigma_eval(&sys, &pt).map_err(fail)?);
            let u: Vec<Value> = (1..=sys.m().min(sys.n() + 1))
                .map(|k| Ok(json!({"k": k, "form": form(&u_eval(&sys, &pt, k).map_err(fail)?)})))
                .collect::<Result<_, CliError>>()?;
            out["u"] = Value::Array(u);
        }
        if let Some(e) = eps {
            let (chi, dchi) = cutoff(&sys, &pt, e);
            out["eps"] = json!(e);
            out["chi"] = json!(chi);
            out["dbar_chi"] = dchi.map_or(Value::Null, |d| {
                Value::Array(d.into_iter().map(c).collect())
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points() {
        let p = parse_point("1;0.5,-2").unwrap();
        assert_eq!(p, vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -2.0)]);
        assert!(parse_point("1,2,3").is_err());
        assert!(parse_point("a").is_err());
    }

    #[test]
    fn bare_dump_has_alpha() {
        let v = dump_point(
            parse_point("1;0.5,0.5").unwrap(),
            Some(parse_point("1;0").unwrap()),
            Some(0),
            None,
            None,
        )
        .unwrap();
        assert!(v["alpha11"].as_array().is_some_and(|a| !a.is_empty()));
        assert!(v["alpha00"].is_array());
        assert!(v["alpha11_top_density"].is_array());
    }
}
