use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use supgnet::problems::ProblemId;

#[derive(Debug, Parser)]
#[command(name = "supgnet", version, about = "SUPG stabilization parameters: solve, optimize, learn")]
pub struct Cli {
    /// Output directory for every artifact of this run.
    #[arg(long, global = true, env = "SUPGNET_OUT", default_value = "supgnet-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and report its errors.
    Solve(SolveArgs),
    /// Find the error-minimizing stabilization parameter.
    Tauopt(TauoptArgs),
    /// Generate the training dataset of optimal parameters.
    Generate(GenerateArgs),
    /// Train the network on a generated dataset.
    Train(TrainArgs),
    /// Predict parameters with a trained network.
    Predict(PredictArgs),
    /// Run one of the benchmark comparison suites.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Tauopt(_) => "tauopt",
            Command::Generate(_) => "generate",
            Command::Train(_) => "train",
            Command::Predict(_) => "predict",
            Command::Evaluate(_) => "evaluate",
        }
    }
}

/// Exactly one way of fixing the diffusion coefficient.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct Diffusion {
    #[arg(long)]
    pub mu: Option<f64>,
    /// Local Péclet number |β|h/(2μ).
    #[arg(long = "pe-h")]
    pub pe_h: Option<f64>,
    /// Global Péclet number |β|L/(2μ).
    #[arg(long = "pe-g")]
    pub pe_g: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Discretization {
    /// Subdivisions per side.
    #[arg(long)]
    pub n: usize,
    /// Polynomial degree.
    #[arg(long)]
    pub r: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SearchArgs {
    /// Search bracket in τ, `lo:hi`.
    #[arg(long, default_value = "1e-8:1e2", value_parser = parse_pair)]
    pub bracket: (f64, f64),
    /// Bracket width tolerance in log10 τ.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Maximum objective evaluations.
    #[arg(long, default_value_t = 200)]
    pub budget: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[arg(value_parser = parse_problem)]
    pub problem: ProblemId,
    #[command(flatten)]
    pub disc: Discretization,
    #[command(flatten)]
    pub diffusion: Diffusion,
    /// Advection angle in radians (forced2d only).
    #[arg(long)]
    pub theta: Option<f64>,
    /// theory | fixed:<value> | ann:<model file> | none
    #[arg(long = "tau-mode", default_value = "theory")]
    pub tau_mode: TauMode,
    /// Line to sample, `x=<v>` or `y=<v>`.
    #[arg(long)]
    pub line: Option<LineSpec>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TauoptArgs {
    #[arg(value_parser = parse_problem)]
    pub problem: ProblemId,
    #[command(flatten)]
    pub disc: Discretization,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "pe-h")]
    pub pe_h: Option<f64>,
    #[arg(long = "pe-g")]
    pub pe_g: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Péclet sweep, e.g. `pe_h=1:250:log:30`.
    #[arg(long, conflicts_with = "theta_sweep")]
    pub sweep: Option<SweepSpec>,
    /// Advection-angle sweep on forced2d, `lo:hi:count` in radians
    /// (default π/12..π/2 in six steps).
    #[arg(long = "theta-sweep", num_args = 0..=1, default_missing_value = "default")]
    pub theta_sweep: Option<ThetaGrid>,
    /// Network used for the τ_ANN columns of the angle sweep.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 900)]
    pub m: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// uniform | log-uniform
    #[arg(long, default_value = "log-uniform")]
    pub sampling: String,
    #[arg(long = "pe-range", default_value = "7:70710", value_parser = parse_pair)]
    pub pe_range: (f64, f64),
    #[arg(long = "r-set", default_value = "1,2,3", value_delimiter = ',')]
    pub r_set: Vec<usize>,
    #[arg(long = "n-set", default_value = "10,20,40", value_delimiter = ',')]
    pub n_set: Vec<usize>,
    /// Dataset file name inside the output directory.
    #[arg(long, default_value = "dataset.csv")]
    pub output: String,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset produced by `generate` (default `<out>/dataset.csv`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Early-stopping patience in epochs; 0 disables it.
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    #[arg(long = "learning-rate", default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long = "batch-size", default_value_t = 32)]
    pub batch_size: usize,
    /// Fraction of records used for training.
    #[arg(long, default_value_t = 0.8)]
    pub split: f64,
    /// Hidden layer widths.
    #[arg(long, default_value = "64,64,64", value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Use a linear output unit instead of ReLU.
    #[arg(long = "linear-output")]
    pub linear_output: bool,
    #[arg(long, default_value = "model.txt")]
    pub model: String,
    #[arg(long, default_value = "history.csv")]
    pub history: String,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    /// Model produced by `train` (default `<out>/model.txt`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub r: Vec<usize>,
    /// Mesh sizes; mutually exclusive with `--n`.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    pub h: Vec<f64>,
    /// Subdivisions, converted to h = √2/n.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Global Péclet numbers.
    #[arg(long = "pe-g", value_delimiter = ',', conflicts_with = "pe_grid")]
    pub pe_g: Vec<f64>,
    /// Log-spaced Péclet grid `lo:hi:count`.
    #[arg(long = "pe-grid")]
    pub pe_grid: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Suite number 1-4.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub test: u8,
    /// Model produced by `train` (default `<out>/model.txt`).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Degrees to evaluate.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub r: Vec<usize>,
    /// Subdivisions; defaults per suite.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Points of the Péclet sweeps.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    /// Also compute τ* at every sweep point.
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[command(flatten)]
    pub search: SearchArgs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TauMode {
    Theory,
    Fixed(f64),
    Ann(PathBuf),
    None,
}

impl FromStr for TauMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "theory" => Ok(TauMode::Theory),
            "none" => Ok(TauMode::None),
            _ => {
                if let Some(v) = s.strip_prefix("fixed:") {
                    let tau: f64 = v.parse().map_err(|_| format!("bad τ value {v:?}"))?;
                    if !(tau.is_finite() && tau >= 0.0) {
                        return Err(format!("τ must be finite and nonnegative, got {tau}"));
                    }
                    Ok(TauMode::Fixed(tau))
                } else if let Some(path) = s.strip_prefix("ann:") {
                    Ok(TauMode::Ann(PathBuf::from(path)))
                } else {
                    Err(format!(
                        "unknown tau mode {s:?} (theory | fixed:<value> | ann:<model> | none)"
                    ))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LineSpec {
    X(f64),
    Y(f64),
}

impl FromStr for LineSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (axis, v) = s.split_once('=').ok_or("expected x=<v> or y=<v>")?;
        let v: f64 = v.trim().parse().map_err(|_| format!("bad coordinate {v:?}"))?;
        match axis.trim() {
            "x" => Ok(LineSpec::X(v)),
            "y" => Ok(LineSpec::Y(v)),
            other => Err(format!("unknown axis {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PecletKind {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSpec {
    pub kind: PecletKind,
    pub lo: f64,
    pub hi: f64,
    pub log: bool,
    pub count: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                if self.log {
                    10f64.powf(self.lo.log10() + t * (self.hi.log10() - self.lo.log10()))
                } else {
                    self.lo + t * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (key, rest) = s.split_once('=').ok_or("expected pe_h=lo:hi:log|lin:count")?;
        let kind = match key.trim() {
            "pe_h" => PecletKind::Local,
            "pe_g" => PecletKind::Global,
            other => return Err(format!("unknown sweep variable {other:?} (pe_h or pe_g)")),
        };
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, scale, count] = parts[..] else {
            return Err("expected lo:hi:log|lin:count".into());
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
        let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
        let log = match scale {
            "log" => true,
            "lin" => false,
            other => return Err(format!("unknown scale {other:?} (log or lin)")),
        };
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) || count == 0 {
            return Err("sweep needs 0 < lo <= hi and count >= 1".into());
        }
        Ok(SweepSpec { kind, lo, hi, log, count })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaGrid(pub Vec<f64>);

impl FromStr for ThetaGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "default" {
            return Ok(ThetaGrid(supgnet::evaluation::default_theta_grid()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err("expected lo:hi:count".into());
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad angle {lo:?}"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad angle {hi:?}"))?;
        let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
        if count == 0 || hi < lo {
            return Err("angle grid needs lo <= hi and count >= 1".into());
        }
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        Ok(ThetaGrid((0..count).map(|i| lo + i as f64 * step).collect()))
    }
}

pub fn parse_problem(s: &str) -> Result<ProblemId, String> {
    s.parse().map_err(|e: supgnet::Error| e.to_string())
}

pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let a: f64 = a.parse().map_err(|_| format!("bad number {a:?}"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad number {b:?}"))?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_round_trip() {
        let s: SweepSpec = "pe_h=1:250:log:30".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 30);
        assert!((v[0] - 1.0).abs() < 1e-12 && (v[29] - 250.0).abs() < 1e-9);
        assert!("pe_x=1:2:log:3".parse::<SweepSpec>().is_err());
        assert!("pe_g=1:2:cubic:3".parse::<SweepSpec>().is_err());
    }

    #[test]
    fn tau_modes() {
        assert_eq!("theory".parse::<TauMode>().unwrap(), TauMode::Theory);
        assert_eq!("fixed:0.5".parse::<TauMode>().unwrap(), TauMode::Fixed(0.5));
        assert!("fixed:-1".parse::<TauMode>().is_err());
        assert_eq!("ann:m.txt".parse::<TauMode>().unwrap(), TauMode::Ann("m.txt".into()));
    }

    #[test]
    fn line_spec() {
        assert_eq!("x=0.5".parse::<LineSpec>().unwrap(), LineSpec::X(0.5));
        assert!("z=1".parse::<LineSpec>().is_err());
    }
}
