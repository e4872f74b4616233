mod args;
mod output;
mod spec;

use std::process::ExitCode;

use lattice_theta::{
    alpha1, argmin_shift_grid, certify_increasing, classify_asymptotic_2d, e_tilde_with_error, ho_mueller_energy,
    jacobi_theta, layered_theta, layered_theta_difference, preset_layered, t0, theta, theta_direct, theta_poisson,
    BcoPoint, JacobiKind, LayeredConfig, LayeredPreset, ShiftSequence, Theta, ThetaError, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use args::{BcoCommand, Cli, Command, Format, LayeredCommand, MethodArg, ThetaCommand};
use output::{num, Csv};
use spec::{parse_lattice, parse_list, parse_range, parse_shift};

type Result<T> = std::result::Result<T, ThetaError>;

const EXIT_PARAM: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

/// What a command produced, and whether it amounts to a negative verdict.
struct Outcome {
    text: String,
    inconclusive: bool,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Outcome { text, inconclusive: false }
    }
}

fn main() -> ExitCode {
    let cli = match args::parse(std::env::args().collect()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if !(cli.rtol > 0.0 && cli.rtol <= 1e-3) {
        eprintln!("error: rtol must lie in (0, 1e-3], got {}", cli.rtol);
        return ExitCode::from(EXIT_PARAM);
    }
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(EXIT_PARAM);
    }
    match run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            if out.inconclusive {
                ExitCode::from(EXIT_INCONCLUSIVE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                ThetaError::Parameter(_) | ThetaError::Domain(_) | ThetaError::Refused(_) | ThetaError::SearchSpace(_) => {
                    EXIT_PARAM
                }
                _ => 1,
            })
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Jacobi(a) => jacobi(cli, a),
        Command::Theta(t) => theta_cmd(cli, t),
        Command::Layered(l) => layered(cli, l),
        Command::Bco(b) => bco(cli, b),
        Command::Classify2d(a) => classify(cli, a),
        Command::ArgminShift(a) => argmin(cli, a),
        Command::Sweep(a) => sweep(cli, a),
    }
}

/// Runs `f` over `items` on `jobs` threads, results in input order.
fn par_map<I: Sync, O: Send>(jobs: usize, items: &[I], f: impl Fn(&I) -> O + Sync + Send) -> Vec<O> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    pool.install(|| items.par_iter().map(f).collect())
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if lo <= 0.0 || n < 2 {
        return Err(ThetaError::Parameter("log grid needs a positive range and at least 2 points".into()));
    }
    let step = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (step * i as f64).exp()).collect())
}

fn lin_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(ThetaError::Parameter("grid needs at least 2 points".into()));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn theta_json(r: &Theta) -> serde_json::Value {
    json!({
        "value": r.value,
        "abs_error": r.abs_error,
        "method": r.method.as_str(),
        "points_summed": r.points_summed,
    })
}

fn jacobi(cli: &Cli, a: &args::JacobiArgs) -> Result<Outcome> {
    let kind = match a.kind.as_str() {
        "2" => JacobiKind::Two,
        "3" => JacobiKind::Three,
        _ => JacobiKind::Four,
    };
    let r = jacobi_theta(kind, a.x, a.order, cli.rtol)?;
    Ok(match cli.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let mut csv = Csv::new(cli.seed, cli.rtol, &["kind", "x", "order", "value", "abs_error"]);
            csv.row(&[a.kind.clone(), num(a.x), a.order.to_string(), num(r.value), num(r.abs_error)]);
            csv.finish()
        }
        _ => output::json(&json!({
            "kind": a.kind.parse::<u8>().expect("validated"),
            "x": a.x,
            "order": a.order,
            "value": r.value,
            "abs_error": r.abs_error,
            "terms_used": r.terms_used,
        })),
    }
    .into())
}

fn theta_cmd(cli: &Cli, t: &ThetaCommand) -> Result<Outcome> {
    match t {
        ThetaCommand::Eval { lattice, alpha, shift, method } => {
            let l = parse_lattice(&lattice.lattice, lattice.normalize)?;
            let u = parse_shift(shift.as_deref(), l.dim())?;
            let r = match method {
                MethodArg::Auto => theta(&l, &u, *alpha, cli.rtol)?,
                MethodArg::Direct => theta_direct(&l, &u, *alpha, cli.rtol)?,
                MethodArg::Poisson => theta_poisson(&l, &u, *alpha, cli.rtol)?,
            };
            Ok(match cli.format.unwrap_or(Format::Json) {
                Format::Csv => {
                    let mut csv = Csv::new(cli.seed, cli.rtol, &["alpha", "value", "abs_error", "method", "points_summed"]);
                    csv.row(&[num(*alpha), num(r.value), num(r.abs_error), r.method.as_str().into(), r.points_summed.to_string()]);
                    csv.finish()
                }
                _ => output::json(&theta_json(&r)),
            }
            .into())
        }
        ThetaCommand::HoMueller { lattice, alpha, shift, delta } => {
            let l = parse_lattice(&lattice.lattice, lattice.normalize)?;
            let u = parse_shift(Some(shift), l.dim())?;
            let r = ho_mueller_energy(&l, &u, *delta, *alpha, cli.rtol)?;
            Ok(output::json(&json!({"delta": delta, "alpha": alpha, "value": r.value, "abs_error": r.abs_error})).into())
        }
    }
}

fn layered_pair(name: &str) -> Result<(LayeredPreset, LayeredPreset)> {
    let Some((a, b)) = name.split_once('-') else {
        return Err(ThetaError::Parameter(format!("preset pair must look like 'fcc-hcp', got '{name}'")));
    };
    Ok((a.parse()?, b.parse()?))
}

fn compatible(a: &LayeredConfig<f64>, b: &LayeredConfig<f64>) -> bool {
    a.base == b.base && a.alphabet == b.alphabet && a.spacing_t == b.spacing_t && a.scale_l == b.scale_l
}

/// θ_b − θ_a, through the cancellation-free difference when the stackings share
/// their base, alphabet and geometry.
fn layered_gap(a: &LayeredConfig<f64>, b: &LayeredConfig<f64>, alpha: f64, rtol: f64) -> Result<(f64, f64)> {
    if compatible(a, b) {
        let d = layered_theta_difference(a, b, alpha, rtol)?;
        return Ok((d.value, d.abs_error));
    }
    let ta = layered_theta(a, alpha, rtol)?;
    let tb = layered_theta(b, alpha, rtol)?;
    Ok((tb.value - ta.value, ta.abs_error + tb.abs_error))
}

fn layered(cli: &Cli, cmd: &LayeredCommand) -> Result<Outcome> {
    match cmd {
        LayeredCommand::Compare { preset, alphas } => {
            let (pa, pb) = layered_pair(preset)?;
            let (na, nb) = preset.split_once('-').expect("checked");
            let (na, nb) = (na.to_ascii_lowercase(), nb.to_ascii_lowercase());
            let a = preset_layered::<f64>(pa, true);
            let b = preset_layered::<f64>(pb, true);
            let alphas = parse_list(alphas)?;
            let rows = par_map(cli.jobs, &alphas, |&alpha| -> Result<[f64; 6]> {
                let ta = layered_theta(&a, alpha, cli.rtol)?;
                let tb = layered_theta(&b, alpha, cli.rtol)?;
                let (gap, gap_err) = layered_gap(&a, &b, alpha, cli.rtol)?;
                Ok([ta.value, tb.value, gap, ta.abs_error, tb.abs_error, gap_err])
            });
            let cols = [
                "alpha".to_string(),
                format!("theta_{na}"),
                format!("theta_{nb}"),
                "gap".into(),
                format!("abs_error_{na}"),
                format!("abs_error_{nb}"),
                "gap_abs_error".into(),
            ];
            let mut csv = Csv::new(cli.seed, cli.rtol, &cols.iter().map(String::as_str).collect::<Vec<_>>());
            for (alpha, r) in alphas.iter().zip(rows) {
                let r = r?;
                let mut cells = vec![num(*alpha)];
                cells.extend(r.iter().map(|&x| num(x)));
                csv.row(&cells);
            }
            Ok(csv.finish().into())
        }
        LayeredCommand::Random { alpha, t, points, max_period } => {
            if *max_period == 0 {
                return Err(ThetaError::Parameter("max_period must be at least 1".into()));
            }
            let mut bij = preset_layered::<f64>(LayeredPreset::Fcc, true);
            if let Some(t) = t {
                bij.spacing_t = *t;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let seqs: Vec<Vec<usize>> = (0..*points)
                .map(|_| {
                    let p = rng.gen_range(1..=*max_period);
                    (0..p).map(|_| rng.gen_range(0..3)).collect()
                })
                .collect();
            let rows = par_map(cli.jobs, &seqs, |s| -> Result<(f64, f64, f64)> {
                let mut c = bij.clone();
                c.sequence = ShiftSequence::new(s.clone())?;
                let th = layered_theta(&c, *alpha, cli.rtol)?;
                let (gap, err) = layered_gap(&bij, &c, *alpha, cli.rtol)?;
                Ok((th.value, gap, err))
            });
            let mut csv = Csv::new(cli.seed, cli.rtol, &["sequence", "theta", "gap", "gap_abs_error", "bijection_wins"]);
            for (s, r) in seqs.iter().zip(rows) {
                let (th, gap, err) = r?;
                let seq = s.iter().map(|&i| ["a", "b", "c"][i]).collect::<String>();
                csv.row(&[seq, num(th), num(gap), num(err), (gap > err).to_string()]);
            }
            Ok(csv.finish().into())
        }
    }
}

fn bco(cli: &Cli, cmd: &BcoCommand) -> Result<Outcome> {
    match cmd {
        BcoCommand::Certify { alpha, t } => {
            let c = certify_increasing(*alpha, *t)?;
            let inconclusive = c.verdict == Verdict::Inconclusive;
            let text = match cli.format.unwrap_or(Format::Table) {
                Format::Json => output::json(&json!({
                    "alpha": c.alpha,
                    "t": c.t,
                    "k_alpha": c.k_alpha,
                    "steps": c.steps.iter().map(|s| json!({"y": s.y, "a": s.a, "b": s.b})).collect::<Vec<_>>(),
                    "final_y": c.final_y,
                    "verdict": c.verdict.to_string(),
                    "reason": c.reason,
                })),
                Format::Csv => {
                    let mut csv = Csv::new(cli.seed, cli.rtol, &["step", "y", "a", "b"]);
                    for (i, s) in c.steps.iter().enumerate() {
                        csv.row(&[i.to_string(), num(s.y), num(s.a), num(s.b)]);
                    }
                    csv.finish()
                }
                Format::Table => {
                    let mut s = format!("{:>5} {:>10} {:>10} {:>10}\n", "i", "y", "a", "b");
                    for (i, st) in c.steps.iter().enumerate() {
                        s += &format!("{i:>5} {:>10.4} {:>10.4} {:>10.4}\n", st.y, st.a, st.b);
                    }
                    s += &format!("final y = {:.4}, K = {:.4}, steps = {}\n", c.final_y, c.k_alpha, c.steps.len());
                    match (&c.verdict, &c.reason) {
                        (Verdict::CertifiedIncreasing, _) => s += "certified\n",
                        (Verdict::Inconclusive, Some(r)) => s += &format!("inconclusive: {r}\n"),
                        (Verdict::Inconclusive, None) => s += "inconclusive\n",
                    }
                    s
                }
            };
            Ok(Outcome { text, inconclusive })
        }
        BcoCommand::T0 { range, points } => {
            let (lo, hi) = parse_range(range)?;
            let alphas = log_grid(lo, hi, *points)?;
            let vals = par_map(cli.jobs, &alphas, |&a| t0(a, cli.rtol.max(1e-14)));
            let mut csv = Csv::new(cli.seed, cli.rtol, &["alpha", "t0"]);
            for (a, v) in alphas.iter().zip(vals) {
                csv.row(&[num(*a), num(v?)]);
            }
            Ok(csv.finish().into())
        }
        BcoCommand::Alpha1 => {
            let a = alpha1(1e-12)?;
            Ok(match cli.format.unwrap_or(Format::Table) {
                Format::Json => output::json(&json!({"alpha1": a, "inverse": 1.0 / a})),
                Format::Csv => {
                    let mut csv = Csv::new(cli.seed, cli.rtol, &["alpha1", "inverse"]);
                    csv.row(&[num(a), num(1.0 / a)]);
                    csv.finish()
                }
                Format::Table => format!("{a:.12}\n"),
            }
            .into())
        }
        BcoCommand::Scan { alpha, t, range, points } => {
            let (lo, hi) = parse_range(range)?;
            let ys = lin_grid(lo, hi, *points)?;
            let rows = par_map(cli.jobs, &ys, |&y| -> Result<Vec<String>> {
                let p = BcoPoint::new(y, *t, *alpha)?;
                let mut cells = vec![num(y)];
                for k in 0..3 {
                    let v = e_tilde_with_error(&p, k)?;
                    cells.push(num(v.value));
                    cells.push(num(v.abs_error));
                }
                Ok(cells)
            });
            let mut csv = Csv::new(
                cli.seed,
                cli.rtol,
                &["y", "e_tilde", "e_tilde_abs_error", "d1", "d1_abs_error", "d2", "d2_abs_error"],
            );
            for r in rows {
                csv.row(&r?);
            }
            Ok(csv.finish().into())
        }
    }
}

fn coords_json(points: &[Vec<f64>]) -> serde_json::Value {
    json!(points)
}

fn classify(cli: &Cli, a: &args::LatticeArg) -> Result<Outcome> {
    let l = parse_lattice(&a.lattice, a.normalize)?;
    let c = classify_asymptotic_2d(&l)?;
    Ok(match cli.format.unwrap_or(Format::Table) {
        Format::Json => output::json(&json!({
            "case_label": c.case_label.to_string(),
            "c": coords_json(&c.c),
            "deciding_shell": c.deciding_shell,
            "c1_size": c.c1_size,
            "c2_size": c.c2_size,
        })),
        _ => {
            let pts: Vec<String> = c.c.iter().map(|p| format!("({}, {})", p[0], p[1])).collect();
            format!(
                "case: {}\nC: {}\ndeciding shell: {}\n|C1| = {}, |C2| = {}\n",
                c.case_label,
                pts.join(" "),
                c.deciding_shell,
                c.c1_size,
                c.c2_size
            )
        }
    }
    .into())
}

fn argmin(_cli: &Cli, a: &args::ArgminArgs) -> Result<Outcome> {
    let l = parse_lattice(&a.lattice.lattice, a.lattice.normalize)?;
    let r = argmin_shift_grid(&l, a.alpha, a.grid, a.refine)?;
    Ok(output::json(&json!({
        "minimizers": coords_json(&r.minimizers),
        "value": r.value,
        "alpha": r.alpha,
        "resolution": r.resolution,
    }))
    .into())
}

fn sweep(cli: &Cli, a: &args::SweepArgs) -> Result<Outcome> {
    let l = parse_lattice(&a.lattice.lattice, a.lattice.normalize)?;
    let u = parse_shift(a.shift.as_deref(), l.dim())?;
    let (lo, hi) = parse_range(&a.range)?;
    let alphas = log_grid(lo, hi, a.points)?;
    let rows = par_map(cli.jobs, &alphas, |&alpha| theta(&l, &u, alpha, cli.rtol));
    let mut csv = Csv::new(cli.seed, cli.rtol, &["alpha", "value", "abs_error", "method", "points_summed"]);
    for (alpha, r) in alphas.iter().zip(rows) {
        let r = r?;
        csv.row(&[num(*alpha), num(r.value), num(r.abs_error), r.method.as_str().into(), r.points_summed.to_string()]);
    }
    Ok(csv.finish().into())
}
