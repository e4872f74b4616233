use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "theta", version, about = "Lattice theta functions: evaluation, certificates, minimizers")]
pub struct Cli {
    /// Flat key=value file with defaults for any flag; the command line wins.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Relative tolerance for series evaluation, in (0, 1e-3].
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for sweeps; output order never depends on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Jacobi theta functions θ₂, θ₃, θ₄ at x (nome e^{−πx}) and their x-derivatives.
    Jacobi(JacobiArgs),
    #[command(subcommand)]
    Theta(ThetaCommand),
    #[command(subcommand)]
    Layered(LayeredCommand),
    #[command(subcommand)]
    Bco(BcoCommand),
    /// Asymptotic (α → 0) minimizers of the translated theta function of a planar lattice.
    Classify2d(LatticeArg),
    /// Grid minimizers of u ↦ θ_{Λ+u}(α) over the fundamental cell.
    ArgminShift(ArgminArgs),
    /// θ_{Λ+u}(α) over a log-spaced α range.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct JacobiArgs {
    #[arg(long, value_parser = ["2", "3", "4"])]
    pub kind: String,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 0)]
    pub order: usize,
}

#[derive(Debug, Args)]
pub struct LatticeArg {
    /// `preset:NAME[:p1,p2]` or `{"basis": [[..], [..]]}`, one generator per inner array.
    #[arg(long)]
    pub lattice: String,
    /// Rescale to unit covolume first.
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Direct,
    Poisson,
}

#[derive(Debug, Subcommand)]
pub enum ThetaCommand {
    /// θ_{Λ+u}(α) with a certified error bound.
    Eval {
        #[command(flatten)]
        lattice: LatticeArg,
        #[arg(long)]
        alpha: f64,
        /// Cartesian shift u.
        #[arg(long)]
        shift: Option<String>,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// E_δ(Λ, u) = θ_Λ(α) + δ·θ_{Λ+u}(α).
    HoMueller {
        #[command(flatten)]
        lattice: LatticeArg,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        shift: String,
        #[arg(long)]
        delta: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum LayeredCommand {
    /// Two layered presets at unit density, e.g. `fcc-hcp`.
    Compare {
        #[arg(long, default_value = "fcc-hcp")]
        preset: String,
        #[arg(long, default_value = "0.25,0.5,1,2,4,8")]
        alphas: String,
    },
    /// The period-3 bijection stacking against random periodic sequences over A₂.
    Random {
        #[arg(long)]
        alpha: f64,
        /// Layer spacing; defaults to the unit-density FCC value.
        #[arg(long)]
        t: Option<f64>,
        /// Number of random sequences.
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 12)]
        max_period: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum BcoCommand {
    /// Taylor-step certificate that y ↦ Ẽ_t(y; α) increases on (1, √3].
    Certify {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        t: f64,
    },
    /// The curve α ↦ t₀(α) on a log-spaced grid.
    T0 {
        #[arg(long, default_value = "0.1,10")]
        range: String,
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// The root α₁ of 1 − h_α(1) = elliptic complement.
    Alpha1,
    /// Ẽ_t(y; α) and its first two y-derivatives on a linear y grid.
    Scan {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "1,3")]
        range: String,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
}

#[derive(Debug, Args)]
pub struct ArgminArgs {
    #[command(flatten)]
    pub lattice: LatticeArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Rounds of ×4 refinement around the coarse minimizers.
    #[arg(long, default_value_t = 2)]
    pub refine: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub lattice: LatticeArg,
    #[arg(long, default_value = "0.1,10")]
    pub range: String,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    pub shift: Option<String>,
}

/// Parses argv, filling flags the leaf subcommand accepts from `--config` when
/// they are absent on the command line.
pub fn parse(argv: Vec<String>) -> Result<Cli, clap::Error> {
    let mut cmd = Cli::command();
    cmd.build();
    let matches = cmd.clone().try_get_matches_from(&argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let Some(path) = cli.config.as_ref() else {
        return Ok(cli);
    };
    let text = std::fs::read_to_string(path).map_err(|e| {
        cmd.error(clap::error::ErrorKind::Io, format!("cannot read config {}: {e}", path.display()))
    })?;
    let mut leaf = &cmd;
    let mut m = &matches;
    while let Some((name, sub)) = m.subcommand() {
        leaf = leaf.find_subcommand(name).expect("matched subcommand exists");
        m = sub;
    }
    let mut argv = argv;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(cmd.error(
                clap::error::ErrorKind::InvalidValue,
                format!("{}:{}: expected key=value", path.display(), lineno + 1),
            ));
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "config" {
            continue;
        }
        let Some(arg) = leaf.get_arguments().find(|a| a.get_long() == Some(key)) else {
            return Err(cmd.error(
                clap::error::ErrorKind::UnknownArgument,
                format!("{}:{}: '{key}' is not a flag of this subcommand", path.display(), lineno + 1),
            ));
        };
        let flag = format!("--{key}");
        let prefix = format!("--{key}=");
        if argv.iter().any(|a| *a == flag || a.starts_with(&prefix)) {
            continue;
        }
        if arg.get_action().takes_values() {
            argv.push(format!("--{key}={value}"));
        } else if matches!(value, "true" | "1" | "yes") {
            argv.push(flag);
        }
    }
    Cli::try_parse_from(argv)
}
