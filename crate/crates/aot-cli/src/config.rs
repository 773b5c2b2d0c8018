//! Experiment configuration: TOML documents, compact process/policy specs,
//! and flag-over-file merging.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use aot_core::policy::{OracleParams, PolicyKind, QLearnParams};
use aot_core::{Observability, RateDistribution};

use crate::cli::FormatArg;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or argument; names the offending field.
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] aot_core::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// Distinct exit codes per failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(aot_core::Error::IncompatibleObservability { .. }) => 3,
            CliError::Core(aot_core::Error::NoConvergence { .. }) => 4,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 5,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Both => OutputFormat::Both,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

/// One self-describing experiment document. Exactly the fields the
/// experiment kind needs may be present; unknown keys are rejected with the
/// offending key named (serde reports it).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentFile {
    pub kind: Option<String>,
    pub process: Option<String>,
    pub policy: Option<String>,
    pub family: Option<String>,
    pub alpha: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub horizon: Option<u64>,
    pub seed: Option<u64>,
    pub observability: Option<String>,
    pub sensors: Option<u64>,
    pub activity: Option<f64>,
    pub slots: Option<u64>,
    pub trust_slots: Option<u64>,
    pub beta: Option<f64>,
    pub slot_duration: Option<f64>,
    pub frames: Option<u64>,
    pub m_min: Option<u64>,
    pub m_max: Option<u64>,
    #[serde(default)]
    pub qlearn: Option<QLearnParams>,
    #[serde(default)]
    pub oracle: Option<OracleParams>,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
        let file: ExperimentFile = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn load_or_default(path: Option<&PathBuf>, expected_kind: &str) -> Result<Self> {
        match path {
            None => Ok(ExperimentFile::default()),
            Some(p) => {
                let file = Self::load(p)?;
                match file.kind.as_deref() {
                    None => Err(CliError::config(format!(
                        "config {}: missing required field `kind` (expected \"{expected_kind}\")",
                        p.display()
                    ))),
                    Some(k) if k != expected_kind => Err(CliError::config(format!(
                        "config {}: kind is \"{k}\" but this subcommand runs \"{expected_kind}\"",
                        p.display()
                    ))),
                    Some(_) => Ok(file),
                }
            }
        }
    }
}

pub fn require<T>(value: Option<T>, field: &str) -> Result<T> {
    value.ok_or_else(|| CliError::config(format!("missing required field `{field}` (set a flag or config entry)")))
}

/// Parses `constant:7`, `two-point:1,10,0.5`, or
/// `categorical:V1,V2,..@P1,P2,..` into a distribution.
pub fn parse_process(spec: &str) -> Result<RateDistribution> {
    let bad = |msg: &str| CliError::config(format!("process `{spec}`: {msg}"));
    let (kind, rest) = spec.split_once(':').ok_or_else(|| {
        bad("expected constant:RATE, two-point:LOW,HIGH,P_HIGH, or categorical:V..@P..")
    })?;
    let dist = match kind {
        "constant" => RateDistribution::Constant {
            rate: rest.parse().map_err(|_| bad("rate must be a number"))?,
        },
        "two-point" => {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("expected LOW,HIGH,P_HIGH"));
            }
            RateDistribution::TwoPoint {
                low: parts[0].trim().parse().map_err(|_| bad("low must be a number"))?,
                high: parts[1].trim().parse().map_err(|_| bad("high must be a number"))?,
                p_high: parts[2].trim().parse().map_err(|_| bad("p_high must be a number"))?,
            }
        }
        "categorical" => {
            let (vals, probs) = rest
                .split_once('@')
                .ok_or_else(|| bad("expected VALUES@PROBS, e.g. 2,4,6@0.25,0.5,0.25"))?;
            let parse_list = |s: &str, what: &str| -> Result<Vec<f64>> {
                s.split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| bad(&format!("{what} must be numbers"))))
                    .collect()
            };
            RateDistribution::Categorical {
                values: parse_list(vals, "values")?,
                probs: parse_list(probs, "probs")?,
            }
        }
        other => return Err(bad(&format!("unknown process kind `{other}`"))),
    };
    dist.validate()?;
    Ok(dist)
}

/// The policy spec grammar. `auto` periods resolve from the process mean at
/// dispatch time; `qtable:PATH` loads a trained document.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Periodic(Option<u64>),
    Improved(Option<u64>),
    QLearning,
    Oracle,
    Threshold(u64),
    Never,
    QTable(PathBuf),
}

pub fn parse_policy(spec: &str) -> Result<PolicySpec> {
    let bad = |msg: &str| CliError::config(format!("policy `{spec}`: {msg}"));
    let (kind, rest) = match spec.split_once(':') {
        Some((k, r)) => (k, Some(r)),
        None => (spec, None),
    };
    let parse_lambda = |rest: Option<&str>| -> Result<Option<u64>> {
        match rest {
            None | Some("auto") => Ok(None),
            Some(v) => {
                let lambda: u64 = v.parse().map_err(|_| bad("period must be `auto` or a positive integer"))?;
                if lambda == 0 {
                    return Err(bad("period must be >= 1"));
                }
                Ok(Some(lambda))
            }
        }
    };
    Ok(match kind {
        "periodic" => PolicySpec::Periodic(parse_lambda(rest)?),
        "improved" => PolicySpec::Improved(parse_lambda(rest)?),
        "qlearning" => PolicySpec::QLearning,
        "oracle" => PolicySpec::Oracle,
        "threshold" => {
            let n = rest.ok_or_else(|| bad("expected threshold:AGE"))?;
            PolicySpec::Threshold(n.parse().map_err(|_| bad("age must be a nonnegative integer"))?)
        }
        "never" => PolicySpec::Never,
        "qtable" => {
            let p = rest.ok_or_else(|| bad("expected qtable:PATH"))?;
            PolicySpec::QTable(PathBuf::from(p))
        }
        other => return Err(bad(&format!("unknown policy kind `{other}`"))),
    })
}

/// Resolves a policy spec against the process (deriving `auto` periods from
/// the mean rate) into a concrete [`PolicyKind`], or the path of a table to
/// load.
pub fn resolve_policy_spec(
    spec: &PolicySpec,
    process: &RateDistribution,
    alpha: f64,
    qlearn: &QLearnParams,
    oracle: &OracleParams,
) -> Result<ResolvedPolicy> {
    use aot_core::policy::optimal_period_mean;
    Ok(match spec {
        PolicySpec::Periodic(lambda) => {
            let lambda = match lambda {
                Some(l) => *l,
                None => optimal_period_mean(process, alpha)?,
            };
            ResolvedPolicy::Kind(PolicyKind::Periodic { lambda })
        }
        PolicySpec::Improved(lambda) => {
            let lambda = match lambda {
                Some(l) => *l,
                None => optimal_period_mean(process, alpha)?,
            };
            ResolvedPolicy::Kind(PolicyKind::ImprovedPeriodic { lambda, alpha })
        }
        PolicySpec::QLearning => ResolvedPolicy::Kind(PolicyKind::QLearning { params: qlearn.clone() }),
        PolicySpec::Oracle => ResolvedPolicy::Kind(PolicyKind::Oracle { params: oracle.clone() }),
        PolicySpec::Threshold(n) => ResolvedPolicy::Kind(PolicyKind::Threshold { max_age: *n }),
        PolicySpec::Never => ResolvedPolicy::Kind(PolicyKind::NeverVerify),
        PolicySpec::QTable(path) => ResolvedPolicy::Table(path.clone()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedPolicy {
    Kind(PolicyKind),
    Table(PathBuf),
}

pub fn parse_observability(s: &str) -> Result<Observability> {
    match s {
        "instantaneous" => Ok(Observability::Instantaneous),
        "mean-only" => Ok(Observability::MeanOnly),
        other => Err(CliError::config(format!(
            "observability `{other}`: expected `instantaneous` or `mean-only`"
        ))),
    }
}

pub fn parse_alpha_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("alphas: `{x}` is not a number")))
        })
        .collect()
}

/// Numeric range checks shared by every experiment kind, each naming its
/// field.
pub fn check_alpha(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(CliError::config(format!("alpha: must be >= 0, got {alpha}")));
    }
    Ok(alpha)
}

pub fn check_horizon(horizon: u64) -> Result<u64> {
    if horizon == 0 {
        return Err(CliError::config("horizon: must be >= 1".to_string()));
    }
    Ok(horizon)
}

/// Output directory precedence: flag, then environment, then config file,
/// then `./aot-out`.
pub fn resolve_out_dir(flag: Option<PathBuf>, file: &OutputSection) -> PathBuf {
    flag.or_else(|| std::env::var_os("AOT_OUT_DIR").map(PathBuf::from))
        .or_else(|| file.dir.clone())
        .unwrap_or_else(|| PathBuf::from("aot-out"))
}

pub fn resolve_format(flag: Option<FormatArg>, file: &OutputSection) -> OutputFormat {
    flag.map(OutputFormat::from)
        .or(file.format)
        .unwrap_or_default()
}

/// Seed policy: explicit seed, or opt-in entropy seeding (recorded in the
/// manifest); anything else is an error so runs stay reproducible.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, entropy: bool) -> Result<(u64, bool)> {
    match (flag.or(file), entropy) {
        (Some(seed), false) => Ok((seed, false)),
        (None, true) => {
            let seed = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0x5eed)
                ^ std::process::id() as u64;
            Ok((seed, true))
        }
        (Some(_), true) => Err(CliError::config(
            "seed: give either --seed or --entropy-seed, not both".to_string(),
        )),
        (None, false) => Err(CliError::config(
            "seed: no seed supplied; pass --seed N or opt into --entropy-seed".to_string(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn process_specs_parse() {
        assert_eq!(parse_process("constant:7").unwrap(), RateDistribution::Constant { rate: 7.0 });
        assert_eq!(
            parse_process("two-point:1,10,0.5").unwrap(),
            RateDistribution::TwoPoint { low: 1.0, high: 10.0, p_high: 0.5 }
        );
        assert_eq!(
            parse_process("categorical:2,4,6@0.25,0.5,0.25").unwrap(),
            RateDistribution::Categorical { values: vec![2.0, 4.0, 6.0], probs: vec![0.25, 0.5, 0.25] }
        );
        assert!(parse_process("constant:-1").is_err());
        assert!(parse_process("pareto:3").is_err());
    }

    #[test]
    fn policy_specs_parse() {
        assert_eq!(parse_policy("periodic:auto").unwrap(), PolicySpec::Periodic(None));
        assert_eq!(parse_policy("periodic:4").unwrap(), PolicySpec::Periodic(Some(4)));
        assert_eq!(parse_policy("improved").unwrap(), PolicySpec::Improved(None));
        assert_eq!(parse_policy("threshold:3").unwrap(), PolicySpec::Threshold(3));
        assert_eq!(parse_policy("never").unwrap(), PolicySpec::Never);
        assert!(parse_policy("periodic:0").is_err());
        assert!(parse_policy("magic").is_err());
    }

    #[test]
    fn seed_rules() {
        assert_eq!(resolve_seed(Some(42), None, false).unwrap(), (42, false));
        assert_eq!(resolve_seed(None, Some(7), false).unwrap(), (7, false));
        assert!(resolve_seed(None, None, false).is_err());
        assert!(resolve_seed(Some(1), None, true).is_err());
        assert!(resolve_seed(None, None, true).unwrap().1);
    }

    #[test]
    fn unknown_config_keys_are_named() {
        let err = toml::from_str::<ExperimentFile>("kind = \"single-link-run\"\nbanana = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("banana"), "{err}");
    }
}
