use dbarpos::geometry::{CheckOptions, Domain, DomainKind, Expr};
use dbarpos::probes::FiberOptions;
use dbarpos::{Error, Result};
use serde::{Deserialize, Serialize};

/// One batch run. The `command` tag selects the variant; see [`parse`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    CheckPositivity(CheckPositivity),
    Commutator(Commutator),
    SolveDbar(SolveDbar),
    VerifyEstimate(VerifyEstimate),
    ProbeCounterexample(ProbeCounterexample),
    MonotoneLimit(MonotoneLimit),
    Prekopa(Prekopa),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::CheckPositivity(_) => "check-positivity",
            RunConfig::Commutator(_) => "commutator",
            RunConfig::SolveDbar(_) => "solve-dbar",
            RunConfig::VerifyEstimate(_) => "verify-estimate",
            RunConfig::ProbeCounterexample(_) => "probe-counterexample",
            RunConfig::MonotoneLimit(_) => "monotone-limit",
            RunConfig::Prekopa(_) => "prekopa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionChoice {
    QPositive,
    #[default]
    UniformQPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckPositivity {
    pub weight: String,
    /// Defaults to the largest `z` index in `weight`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Defaults to the unit polydisc.
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub criterion: CriterionChoice,
    pub q: usize,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub options: CheckOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commutator {
    /// Hermitian `Θ` as rows of `[re, im]` pairs.
    #[serde(default)]
    pub theta: Option<Vec<Vec<[f64; 2]>>>,
    /// Alternatively the Hessian of `weight` at `point`.
    #[serde(default)]
    pub weight: Option<String>,
    #[serde(default)]
    pub point: Option<Vec<[f64; 2]>>,
    pub q: usize,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

/// A probe right-hand side `f = ∂̄v` supported in `|z − center| < radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRhs {
    pub center: Vec<[f64; 2]>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveDbar {
    /// Weight `w` of the norm `Σ|u|² e^{−w}`.
    pub weight: String,
    pub n: usize,
    #[serde(default)]
    pub domain: Option<Domain>,
    pub points_per_axis: usize,
    pub q: usize,
    pub rhs: ProbeRhs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyEstimate {
    pub phi: String,
    pub psi: String,
    pub n: usize,
    #[serde(default)]
    pub domain: Option<Domain>,
    pub points_per_axis: usize,
    pub q: usize,
    pub c: f64,
    pub rhs: ProbeRhs,
    /// Largest `lhs / rhs` accepted as a pass on the grid.
    #[serde(default = "default_max_ratio")]
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeCounterexample {
    pub weight: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub domain: Option<Domain>,
    pub q: usize,
    #[serde(default)]
    pub c: f64,
    /// Requested probe radius; shrunk to fit and to certify the margin.
    #[serde(default = "default_probe_radius")]
    pub radius: f64,
    /// Skips the sampled search when given.
    #[serde(default)]
    pub witness: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub m_schedule: Option<Vec<f64>>,
    #[serde(default)]
    pub options: CheckOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonotoneLimit {
    pub sequence: Vec<String>,
    pub limit: String,
    pub n: usize,
    #[serde(default)]
    pub domain: Option<Domain>,
    pub q: usize,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub options: CheckOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    #[serde(default)]
    pub inner: Option<Vec<f64>>,
    pub outer: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prekopa {
    /// Expression in base coordinates `z_k` and fiber coordinates `w_k`.
    pub weight: String,
    pub base: Domain,
    pub fiber: FiberSpec,
    #[serde(default = "one")]
    pub q: usize,
    #[serde(default)]
    pub c: f64,
    #[serde(default)]
    pub options: FiberOptions,
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_max_ratio() -> f64 {
    1.10
}

fn default_probe_radius() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

fn body<T: serde::de::DeserializeOwned>(v: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { String::new() } else { format!(" at field `{path}`") };
        Error::Input(format!("config{field}: {}", e.inner()))
    })
}

/// Parses a config. Syntax errors carry their line and column, schema
/// violations the path of the offending field.
pub fn parse(text: &str) -> Result<RunConfig> {
    let mut v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("config: {e}")))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| Error::Input("config: expected a JSON object".into()))?;
    let command = match obj.remove("command") {
        Some(serde_json::Value::String(c)) => c,
        Some(_) => return Err(Error::Input("config at field `command`: expected a string".into())),
        None => return Err(Error::Input("config: missing field `command`".into())),
    };
    let cfg = match command.as_str() {
        "check-positivity" => RunConfig::CheckPositivity(body(v)?),
        "commutator" => RunConfig::Commutator(body(v)?),
        "solve-dbar" => RunConfig::SolveDbar(body(v)?),
        "verify-estimate" => RunConfig::VerifyEstimate(body(v)?),
        "probe-counterexample" => RunConfig::ProbeCounterexample(body(v)?),
        "monotone-limit" => RunConfig::MonotoneLimit(body(v)?),
        "prekopa" => RunConfig::Prekopa(body(v)?),
        other => {
            return Err(Error::Input(format!(
                "config at field `command`: unknown command `{other}`, expected one of check-positivity, \
                 commutator, solve-dbar, verify-estimate, probe-counterexample, monotone-limit, prekopa"
            )))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be finite")))
    }
}

fn finite_pairs(name: &str, p: &[[f64; 2]]) -> Result<()> {
    p.iter().flatten().try_for_each(|x| finite(name, *x))
}

fn check_c(c: f64) -> Result<()> {
    finite("c", c)?;
    if c < 0.0 {
        return Err(Error::Input(format!("c must be non-negative, got {c}")));
    }
    Ok(())
}

fn check_domain(d: &Option<Domain>) -> Result<()> {
    if let Some(d) = d {
        d.validate()?;
    }
    Ok(())
}

fn check_expr(name: &str, src: &str) -> Result<()> {
    Expr::parse(src).map(|_| ()).map_err(|e| Error::Input(format!("{name}: {e}")))
}

impl RunConfig {
    /// Field-level checks beyond the JSON schema.
    pub fn validate(&self) -> Result<()> {
        match self {
            RunConfig::CheckPositivity(c) => {
                check_expr("weight", &c.weight)?;
                check_domain(&c.domain)?;
                check_c(c.c)?;
                c.options.validate()
            }
            RunConfig::Commutator(c) => {
                match (&c.theta, &c.weight, &c.point) {
                    (Some(t), None, None) => t.iter().try_for_each(|row| finite_pairs("theta", row))?,
                    (None, Some(w), Some(p)) => {
                        check_expr("weight", w)?;
                        finite_pairs("point", p)?;
                    }
                    _ => return Err(Error::Input("commutator needs either theta, or weight with point".into())),
                }
                check_c(c.c)?;
                finite("tolerance", c.tolerance)
            }
            RunConfig::SolveDbar(c) => {
                check_expr("weight", &c.weight)?;
                check_domain(&c.domain)?;
                finite_pairs("rhs.center", &c.rhs.center)?;
                finite("rhs.radius", c.rhs.radius)
            }
            RunConfig::VerifyEstimate(c) => {
                check_expr("phi", &c.phi)?;
                check_expr("psi", &c.psi)?;
                check_domain(&c.domain)?;
                check_c(c.c)?;
                finite_pairs("rhs.center", &c.rhs.center)?;
                finite("rhs.radius", c.rhs.radius)?;
                finite("max_ratio", c.max_ratio)
            }
            RunConfig::ProbeCounterexample(c) => {
                check_expr("weight", &c.weight)?;
                check_domain(&c.domain)?;
                check_c(c.c)?;
                finite("radius", c.radius)?;
                if let Some(w) = &c.witness {
                    finite_pairs("witness", w)?;
                }
                if let Some(s) = &c.m_schedule {
                    s.iter().try_for_each(|m| finite("m_schedule", *m))?;
                }
                c.options.validate()
            }
            RunConfig::MonotoneLimit(c) => {
                for (j, s) in c.sequence.iter().enumerate() {
                    check_expr(&format!("sequence[{j}]"), s)?;
                }
                check_expr("limit", &c.limit)?;
                check_domain(&c.domain)?;
                check_c(c.c)?;
                c.options.validate()
            }
            RunConfig::Prekopa(c) => {
                check_expr("weight", &c.weight)?;
                c.base.validate()?;
                check_c(c.c)?;
                c.fiber.inner.iter().flatten().chain(&c.fiber.outer).try_for_each(|x| finite("fiber", *x))?;
                finite("options.h_step", c.options.h_step)?;
                finite("options.tolerance", c.options.tolerance)
            }
        }
    }
}

/// The given domain, or the unit polydisc in `ℂ^n`.
pub fn domain_or_default(d: &Option<Domain>, n: usize) -> Result<Domain> {
    match d {
        Some(d) if d.dim() != n => Err(Error::Input(format!("domain has dimension {}, expected {n}", d.dim()))),
        Some(d) => Ok(d.clone()),
        None => Domain::new(DomainKind::Polydisc, vec![Default::default(); n], vec![1.0; n]),
    }
}
