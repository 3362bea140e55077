//! Certificate files: cofactors plus enough provenance to re-verify them
//! against the system file alone.

use nullcert::bounds::Theorem;
use nullcert::certsolver::{Cofactors, Mode, ResidualStats};
use nullcert::format::{NumPolyJson, PolyJson};
use nullcert::{Certificate, MembershipProblem};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub const TOOL: &str = "nullcert";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileJson {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub degrees: Vec<u32>,
    pub deg_phi: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_inf: Option<String>,
}

impl ProfileJson {
    pub fn of(problem: &MembershipProblem, nu_inf: Option<String>) -> Self {
        ProfileJson {
            n: problem.n(),
            m: problem.m(),
            r: problem.r(),
            degrees: problem.degrees().to_vec(),
            deg_phi: problem.deg_phi(),
            nu_inf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub tool: String,
    pub tool_version: String,
    pub format_version: u32,
    pub system_sha256: String,
    pub config_sha256: String,
    pub mode: Mode,
    pub vars: Vec<String>,
    pub rho: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<Theorem>,
    pub profile: ProfileJson,
    /// One entry per generator; exact (`p/q` strings) or numeric (`[re, im]`).
    pub cofactors: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualStats>,
    /// Quadrature diagnostics for numeric certificates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integral: Option<Value>,
}

impl CertificateFile {
    pub fn new(
        cert: &Certificate,
        problem: &MembershipProblem,
        profile: ProfileJson,
        system_sha256: &str,
        config_sha256: String,
    ) -> Self {
        let cofactors = match &cert.cofactors {
            Cofactors::Exact(q) => {
                serde_json::to_value(q.iter().map(PolyJson::from_poly).collect::<Vec<_>>())
            }
            Cofactors::Numeric(q) => {
                serde_json::to_value(q.iter().map(NumPolyJson::from_poly).collect::<Vec<_>>())
            }
        }
        .expect("cofactors serialize");
        CertificateFile {
            tool: TOOL.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            format_version: FORMAT_VERSION,
            system_sha256: system_sha256.into(),
            config_sha256,
            mode: cert.mode(),
            vars: problem.vars().to_vec(),
            rho: cert.rho,
            theorem: cert.theorem,
            profile,
            cofactors,
            residual: cert.residual.clone(),
            integral: None,
        }
    }

    /// The certificate, checked against the system it claims to belong to.
    pub fn certificate(
        &self,
        problem: &MembershipProblem,
        system_sha256: &str,
    ) -> Result<Certificate, CliError> {
        if self.tool != TOOL || self.format_version != FORMAT_VERSION {
            return Err(CliError::Schema(format!(
                "not a {TOOL} certificate of format {FORMAT_VERSION} (tool {:?}, format {})",
                self.tool, self.format_version
            )));
        }
        if self.system_sha256 != system_sha256 {
            return Err(CliError::Failed(
                "certificate was issued for a different system file".into(),
            ));
        }
        if self.vars != problem.vars() {
            return Err(CliError::Schema(format!(
                "vars {:?} differ from the system's {:?}",
                self.vars,
                problem.vars()
            )));
        }
        let bad = |e: serde_json::Error| CliError::Schema(format!("cofactors: {e}"));
        let cofactors = match self.mode {
            Mode::Exact => {
                let q: Vec<PolyJson> =
                    serde_json::from_value(self.cofactors.clone()).map_err(bad)?;
                Cofactors::Exact(
                    q.iter()
                        .enumerate()
                        .map(|(j, p)| {
                            p.to_poly(&self.vars)
                                .map_err(|e| CliError::Schema(format!("cofactors[{j}]: {e}")))
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
            Mode::Numeric => {
                let q: Vec<NumPolyJson> =
                    serde_json::from_value(self.cofactors.clone()).map_err(bad)?;
                Cofactors::Numeric(
                    q.iter()
                        .enumerate()
                        .map(|(j, p)| {
                            p.to_poly(&self.vars)
                                .map_err(|e| CliError::Schema(format!("cofactors[{j}]: {e}")))
                        })
                        .collect::<Result<_, _>>()?,
                )
            }
        };
        Ok(Certificate {
            rho: self.rho,
            cofactors,
            theorem: self.theorem,
            residual: self.residual.clone(),
        })
    }
}
