mod config;
mod output;

use clap::{Parser, Subcommand};
use config::{Overrides, RunConfig};
use output::Outputs;
use renorm_core::arclab::{
    arc_points, average_jacobian, boundary_from_arc, boundary_invariance, degenerate_arc, holder_empirical,
    jacobian_scaling_check, universality_report, HenonDynamics, UniversalAlpha,
};
use renorm_core::artifact::{
    read_json, FixedPointArtifact, HolderArtifact, JacobianArtifact, SpectrumArtifact, TraceArtifact,
    UniversalityArtifact,
};
use renorm_core::goldenrot::{
    count_words, equidist_average, fibonacci_q, partition, refine_check, short_length, theta, WordKind,
};
use renorm_core::renorm1d::{differential_spectrum, solve_fixed_point, NewtonConfig};
use renorm_core::renorm2d::{renormalize2d_traced, Frames2, HenonMap, HenonTower, Point};
use renorm_core::{Error, C64};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "renorm", version, about = "Renormalization experiments for golden-mean Siegel Hénon maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve the 1D renormalization fixed point and write fixedpoint.json.
    FixedPoint,
    /// Leading eigenvalues of the 1D differential at the stored fixed point.
    Spectrum,
    /// Hénon renormalization tower: y-norms and the 2D operator trace.
    Henon,
    /// Renormalization arc, Siegel boundary and average Jacobian.
    Arc,
    /// Universality of the y-derivatives against the stored fixed point.
    Universality,
    /// Empirical Hölder exponent between the arcs of two Hénon maps.
    Holder,
    /// Word counts, partition refinement and equidistribution.
    Rotation,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::FixedPoint => "fixed-point",
            Command::Spectrum => "spectrum",
            Command::Henon => "henon",
            Command::Arc => "arc",
            Command::Universality => "universality",
            Command::Holder => "holder",
            Command::Rotation => "rotation",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(e) if e.is_validation() => 2,
            Failure::Core(_) => 3,
        }
    }

    fn json(&self) -> serde_json::Value {
        let (kind, msg) = match self {
            Failure::Config(m) => ("Config", m.clone()),
            Failure::Core(e) => (e.kind(), e.to_string()),
        };
        serde_json::json!({ "error": kind, "message": msg })
    }
}

type Run<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.json());
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Run<()> {
    let cfg = RunConfig::resolve(&cli.flags)?;
    if let Ok(n) = std::env::var("RENORM_THREADS") {
        let n: usize = n.parse().map_err(|_| Failure::Config(format!("RENORM_THREADS must be a count, got {n:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let start = Instant::now();
    let mut out = Outputs::new(&cfg.out);
    match cli.command {
        Command::FixedPoint => fixed_point(&cfg, &mut out)?,
        Command::Spectrum => spectrum(&cfg, &mut out)?,
        Command::Henon => henon(&cfg, &mut out)?,
        Command::Arc => arc(&cfg, &mut out)?,
        Command::Universality => universality(&cfg, &mut out)?,
        Command::Holder => holder(&cfg, &mut out)?,
        Command::Rotation => rotation(&cfg, &mut out)?,
    }
    out.manifest(cli.command.name(), &cfg, start.elapsed().as_secs_f64())?;
    Ok(())
}

fn newton_config(cfg: &RunConfig) -> NewtonConfig {
    NewtonConfig { tol: cfg.tolerances.newton_tol, ..NewtonConfig::default() }
}

fn load_fixed_point(cfg: &RunConfig) -> Run<FixedPointArtifact> {
    Ok(read_json(&cfg.fp_path())?)
}

fn fixed_point(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let fp = solve_fixed_point(cfg.degree_1d, &newton_config(cfg))?;
    let art = FixedPointArtifact::from_fixed_point(&fp);
    out.json("fixedpoint.json", &art)?;
    println!("lambda = {:.15} {:+.15}i  residual = {:.3e}", fp.lambda.re, fp.lambda.im, fp.residual);
    Ok(())
}

fn spectrum(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let art = load_fixed_point(cfg)?;
    let z = art.to_pair()?;
    let r = differential_spectrum(&z, cfg.spectrum_dim)?;
    out.json("spectrum.json", &SpectrumArtifact::new(art.degree, cfg.spectrum_dim, &r))?;
    for (i, e) in r.eigenvalues.iter().take(5).enumerate() {
        println!("#{i}: {:.10} {:+.10}i  |.| = {:.10}", e.re, e.im, e.norm());
    }
    Ok(())
}

fn henon(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let hm = HenonMap::golden(cfg.nu)?;
    let tower = HenonTower::new(hm, cfg.level)?;
    let frames = Frames2::tower();
    let mut y_norms = Vec::new();
    let mut precisions = Vec::new();
    let mut levels = Vec::new();
    for m in 0..=cfg.level {
        let (p, prec) = tower.pair_auto(m, &frames, cfg.precision)?;
        y_norms.push(p.y_norm());
        precisions.push(format!("{prec:?}").to_lowercase());
        // one step of the series operator from the tower pair
        if let Ok((_, tr)) = renormalize2d_traced(&p) {
            levels.push(tr);
        }
        println!("level {m}: ||S||_y = {:.6e} ({})", y_norms[m], precisions[m]);
    }
    let art = TraceArtifact { schema_version: renorm_core::artifact::SCHEMA_VERSION, nu: cfg.nu, y_norms, precisions, levels };
    out.json("trace.json", &art)?;
    Ok(())
}

fn arc(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let hm = HenonMap::golden(cfg.nu)?;
    let d = HenonDynamics::new(hm, cfg.level)?;
    let samples = arc_points(&d, cfg.level)?;
    out.arc_csv("arc.csv", &samples)?;
    let pts: Vec<Point> = samples.iter().map(|s| s.point).collect();
    let cloud = boundary_from_arc(&hm, &pts);
    out.points_csv("boundary.csv", &cloud)?;
    let (defect, gap) = boundary_invariance(&hm, &cloud);
    println!("{} samples; boundary invariance defect {defect:.3e}, max gap {gap:.3e}", samples.len());
    if cfg.nu == 0.0 {
        let deg = degenerate_arc(cfg.level)?;
        let err = samples
            .iter()
            .zip(&deg)
            .map(|(a, b)| (a.point.0 - b.point.0).norm().max((a.point.1 - b.point.1).norm()))
            .fold(0.0, f64::max);
        println!("distance to the degenerate 1D arc: {err:.3e}");
    } else {
        let mut prof = average_jacobian(&d, cfg.level)?;
        jacobian_scaling_check(&d, &mut prof, 1..=cfg.level)?;
        let closed = hm.b.powf(1.0 + theta());
        println!(
            "b_sigma = {:.15} {:+.15}i (closed form {:.15} {:+.15}i)",
            prof.avg_jacobian.re, prof.avg_jacobian.im, closed.re, closed.im
        );
        out.json("jacobian.json", &JacobianArtifact::new(cfg.nu, cfg.level, closed, &prof))?;
    }
    Ok(())
}

fn universality(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let art = load_fixed_point(cfg)?;
    let alpha = UniversalAlpha::new(&art.to_pair()?)?;
    let hm = HenonMap::golden(cfg.nu)?;
    let d = HenonDynamics::new(hm, cfg.level)?;
    let b = average_jacobian(&d, cfg.level.min(6))?.avg_jacobian;
    let r = universality_report(&d, 1..=cfg.level, b, &alpha)?;
    println!("slope {:.6} vs log|b| {:.6}", r.slope, r.log_b_sigma);
    for l in &r.levels {
        println!("n = {}: sup |alpha_n - alpha| = {:.3e}", l.n, l.alpha_dev);
    }
    out.json("universality.json", &UniversalityArtifact::new(cfg.nu, &r))?;
    Ok(())
}

fn holder(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let (h1, h2) = (HenonMap::golden(cfg.nu1)?, HenonMap::golden(cfg.nu2)?);
    let (d1, d2) = (HenonDynamics::new(h1, cfg.level)?, HenonDynamics::new(h2, cfg.level)?);
    let b1 = average_jacobian(&d1, cfg.level)?.avg_jacobian;
    let b2 = average_jacobian(&d2, cfg.level)?.avg_jacobian;
    let r = holder_empirical(&d1, &d2, b1, b2, cfg.level)?;
    println!("alpha_hat = {:.6}, bound = {:.6} ({})", r.alpha_hat, r.bound, if r.binding { "binding" } else { "not binding" });
    out.json("holder.json", &HolderArtifact::new(cfg.nu1, cfg.nu2, cfg.level, &r))?;
    Ok(())
}

fn rotation(cfg: &RunConfig, out: &mut Outputs) -> Run<()> {
    let mut rows = Vec::new();
    for n in 0..=cfg.level {
        let (j, i) = (count_words(n, WordKind::J), count_words(n, WordKind::I));
        let refine = refine_check(n)?;
        let (e_lin, e_sin, bound) = if n >= 1 {
            let a = equidist_average(|x| C64::new(x, 0.0), 1.0, n)?;
            let b = equidist_average(|x| C64::new((5.0 * x).sin(), 0.0), 5.0, n)?;
            ((a.qavg - a.favg).norm(), (b.qavg - b.favg).norm(), a.bound)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        rows.push(output::RotationRow {
            n,
            j_count: j,
            q_2n1: fibonacci_q(2 * n + 1)?,
            i_count: i,
            q_2n: fibonacci_q(2 * n)?,
            refine_ok: refine,
            short_length: short_length(n),
            equidist_err_x: e_lin,
            equidist_err_sin5x: e_sin,
            equidist_bound_m1: bound,
        });
    }
    out.rows_csv("rotation.csv", &rows)?;
    out.partition_csv("partition.csv", &partition(cfg.level)?)?;
    let ok = rows.iter().all(|r| r.j_count == r.q_2n1 && r.i_count == r.q_2n);
    println!("levels 0..={}: counts match Fibonacci: {ok}", cfg.level);
    Ok(())
}
