use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use mixext_core::domain::Domain;
use mixext_core::lattice::MultiIndex;
use mixext_core::registry::TestFunction;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "mixext", version, about = "Extension operators and mixed moduli: checks and studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Runs the identity and invariant checks; exits 1 if any fails.
    Verify(Flags),
    /// Error of the quasi-interpolant against the level, with observed orders.
    Converge(Flags),
    /// Evaluates the extension (or a derivative) on a grid over its support box.
    Extend(Flags),
    /// Norms of f on the domain and of its extension on the support box, per K.
    Norms(Flags),
    /// Checks the index maps of the domain; exits 1 on a violation.
    #[command(name = "validate-domain")]
    ValidateDomain(Flags),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Converge(_) => "converge",
            Command::Extend(_) => "extend",
            Command::Norms(_) => "norms",
            Command::ValidateDomain(_) => "validate-domain",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Command::Verify(f)
            | Command::Converge(f)
            | Command::Extend(f)
            | Command::Norms(f)
            | Command::ValidateDomain(f) => f,
        }
    }
}

/// Flags shared by every subcommand; each uses the ones it needs.
#[derive(clap::Args, Debug, Clone)]
pub struct Flags {
    /// Built-in domain name or a file of dyadic boxes.
    #[arg(long, default_value = "cube2d")]
    pub domain: String,
    /// Spline order per axis, or one value for all axes.
    #[arg(long, default_value = "2")]
    pub m: String,
    /// Smoothness per axis, or one value for all axes.
    #[arg(long, default_value = "1.5")]
    pub alpha: String,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Number or `inf`.
    #[arg(long, default_value = "2")]
    pub theta: String,
    /// Blocks kappa <= K e are kept.
    #[arg(long = "K", default_value_t = 3)]
    pub k: i64,
    /// Finest modulus step is 2^-kt.
    #[arg(long, default_value_t = 6)]
    pub kt: i64,
    /// Evaluation points per axis for `extend`.
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
    /// Modulus x-grid spacing 2^-x_level on the domain; the support box uses one level coarser.
    #[arg(long = "x-level", default_value_t = 7)]
    pub x_level: u32,
    /// Registry function: const, mono[:a,b], sinpi[:a,b], gauss, rough.
    #[arg(long, default_value = "sinpi")]
    pub f: String,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Levels checked by `verify`.
    #[arg(long, default_value_t = 3)]
    pub levels: i64,
    /// Finest level of `converge`.
    #[arg(long, default_value_t = 6)]
    pub kmax: i64,
    /// Derivative order for `extend`.
    #[arg(long, default_value = "0")]
    pub lambda: String,
    /// Seed of the sample points used by `verify`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Overrides every tolerance of `verify`.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Also writes the extension in text form (for `extend`).
    #[arg(long = "expansion-out")]
    pub expansion_out: Option<PathBuf>,
}

/// Fully resolved configuration, echoed as JSON in the CSV header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub domain: String,
    pub dim: usize,
    pub m: Vec<i64>,
    pub alpha: Vec<f64>,
    pub p: f64,
    /// `"inf"` or a decimal number.
    pub theta: String,
    #[serde(rename = "K")]
    pub k: i64,
    pub kt: i64,
    pub grid: usize,
    pub x_level: u32,
    pub f: String,
    pub out: Option<String>,
    pub levels: i64,
    pub kmax: i64,
    pub lambda: Vec<i64>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub expansion_out: Option<String>,
}

/// Resolved objects the commands work with.
pub struct Context {
    pub config: RunConfig,
    pub domain: Arc<Domain>,
    pub m: MultiIndex,
    pub lambda: MultiIndex,
    pub theta: f64,
    pub function: TestFunction,
}

fn broadcast_ints(s: &str, d: usize, what: &str) -> Result<Vec<i64>, CliError> {
    let v: MultiIndex = s
        .parse()
        .map_err(|e| CliError::Usage(format!("--{what}: {e}")))?;
    match v.dim() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v.as_slice().to_vec()),
        n => Err(CliError::Usage(format!("--{what} has {n} entries, the domain has dimension {d}"))),
    }
}

fn broadcast_floats(s: &str, d: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("--{what} `{s}`: {e}")))?;
    match v.len() {
        1 => Ok(vec![v[0]; d]),
        n if n == d => Ok(v),
        n => Err(CliError::Usage(format!("--{what} has {n} entries, the domain has dimension {d}"))),
    }
}

pub fn parse_theta(s: &str) -> Result<f64, CliError> {
    let t = s.trim();
    let v = if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        f64::INFINITY
    } else {
        t.parse::<f64>()
            .map_err(|e| CliError::Usage(format!("--theta `{s}`: {e}")))?
    };
    if !(v >= 1.0) {
        return Err(CliError::Usage(format!("--theta must be at least 1, got {s}")));
    }
    Ok(v)
}

impl Context {
    pub fn resolve(command: &Command) -> Result<Self, CliError> {
        let fl = command.flags();
        let domain = Domain::resolve(&fl.domain).map_err(|e| CliError::Usage(e.to_string()))?;
        let d = domain.dim();
        let m = broadcast_ints(&fl.m, d, "m")?;
        if m.iter().any(|&x| x < 1) {
            return Err(CliError::Usage(format!("--m entries must be at least 1, got {}", fl.m)));
        }
        let alpha = broadcast_floats(&fl.alpha, d, "alpha")?;
        if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(CliError::Usage(format!("--alpha entries must be positive, got {}", fl.alpha)));
        }
        if !(fl.p >= 1.0 && fl.p.is_finite()) {
            return Err(CliError::Usage(format!("--p must lie in [1, inf), got {}", fl.p)));
        }
        let theta = parse_theta(&fl.theta)?;
        let lambda = broadcast_ints(&fl.lambda, d, "lambda")?;
        if lambda.iter().any(|&x| x < 0) {
            return Err(CliError::Usage(format!("--lambda must be nonnegative, got {}", fl.lambda)));
        }
        let function = TestFunction::parse(&fl.f, d).map_err(|e| CliError::Usage(e.to_string()))?;
        if fl.k < 0 || fl.levels < 0 || fl.kmax < 0 {
            return Err(CliError::Usage("--K, --levels and --kmax must be nonnegative".into()));
        }
        if fl.grid == 0 {
            return Err(CliError::Usage("--grid must be positive".into()));
        }
        let config = RunConfig {
            command: command.name().to_string(),
            domain: fl.domain.clone(),
            dim: d,
            m: m.clone(),
            alpha,
            p: fl.p,
            theta: if theta.is_infinite() { "inf".into() } else { theta.to_string() },
            k: fl.k,
            kt: fl.kt,
            grid: fl.grid,
            x_level: fl.x_level,
            f: fl.f.clone(),
            out: fl.out.as_ref().map(|p| p.display().to_string()),
            levels: fl.levels,
            kmax: fl.kmax,
            lambda: lambda.clone(),
            seed: fl.seed,
            tol: fl.tol,
            expansion_out: fl.expansion_out.as_ref().map(|p| p.display().to_string()),
        };
        Ok(Self {
            config,
            domain: Arc::new(domain),
            m: MultiIndex::new(&m).map_err(|e| CliError::Usage(e.to_string()))?,
            lambda: MultiIndex::new(&lambda).map_err(|e| CliError::Usage(e.to_string()))?,
            theta,
            function,
        })
    }

    pub fn header(&self) -> String {
        format!(
            "# config: {}",
            serde_json::to_string(&self.config).expect("config serializes")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(args: &[&str]) -> Result<Context, CliError> {
        let cli = Cli::try_parse_from(args).unwrap();
        Context::resolve(&cli.command)
    }

    #[test]
    fn broadcasts_and_echoes() {
        let c = ctx(&["mixext", "norms", "--domain", "lshape2d", "--alpha", "0.5,1.25", "--theta", "inf"]).unwrap();
        assert_eq!(c.config.m, vec![2, 2]);
        assert_eq!(c.config.alpha, vec![0.5, 1.25]);
        assert!(c.theta.is_infinite());
        let json = c.header().strip_prefix("# config: ").unwrap().to_string();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c.config);
    }

    #[test]
    fn usage_errors() {
        for args in [
            &["mixext", "verify", "--domain", "disk"][..],
            &["mixext", "verify", "--m", "2,2,2"],
            &["mixext", "norms", "--theta", "0.5"],
            &["mixext", "norms", "--f", "bessel"],
            &["mixext", "norms", "--p", "0.5"],
        ] {
            assert!(matches!(ctx(args), Err(CliError::Usage(_))), "{args:?}");
        }
    }
}
