//! Command-line interface to the exact kernel, the shape estimates, and the
//! ratio-envelope certification harness.
//!
//! Subcommands: `kernel` (exact n-step tables), `ratio` (exact-vs-shape
//! comparison with an envelope verdict), `identities` (exact symbolic and
//! spectral identity suite), `saddle` (convex saddle-point diagnostics),
//! `spectral` (spectral radii with closed-form checks), `green` (exact
//! Green-function tables with certified truncation).
//!
//! Exit codes: `0` pass, `1` envelope or identity violation, `2` input
//! error, `3` resource ceiling. Tables go to stdout (CSV or JSON); the
//! human-readable summary goes to stderr. All output is deterministic for
//! fixed inputs and config, ordered lexicographically in `(n, m)`.

use std::cmp::Ordering;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde_json::json;

use building_walk::estimates::F0Cache;
use building_walk::exact_kernel::{
    default_step_ceiling, green_exact_batch, run_kernel_full, simple_rho_tilde_closed_form,
    GreenEvaluation, KernelError, WalkSpec,
};
use building_walk::geometry::{self, e_vec};
use building_walk::report::{
    boundary_report, green_critical_report, green_report, interior_report, kernel_points,
    points_to_csv, Config, PointRecord, ReportError,
};
use building_walk::root_system::{RootSystem, Weight};
use building_walk::saddle::{solve_saddle, SaddleError, StepGeometry};
use building_walk::scalar::QExt;
use building_walk::spectral::{
    b_function, c_function, delta_function, macdonald_p, pair_weight,
};
use building_walk::weight_laurent::identity_suite;

#[derive(Parser)]
#[command(
    name = "building-walk",
    version,
    about = "Exact transition kernels, Green functions, and certified shape \
             estimates for nearest-neighbor random walks on affine buildings \
             of type A~r"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Emit the exact n-step transition table p^n(0, ·) over dominant weights
    Kernel(KernelArgs),
    /// Compare exact values against a closed-form shape on a regime grid and
    /// judge the ratio spread against an envelope
    Ratio(RatioArgs),
    /// Run the exact symbolic identity suite and the spectral
    /// function identities at deterministic sample points
    Identities(IdentArgs),
    /// Solve the strictly convex saddle-point problem for one drift or a
    /// deterministic grid of drifts
    Saddle(SaddleArgs),
    /// Print the one-step normalizer and the spectral radius, exact and
    /// decimal, and check the rank <= 3 closed forms
    Spectral(SpectralArgs),
    /// Emit an exact Green-function table G(x; z) with certified truncation
    Green(GreenArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Coxeter rank r of the A~r building (1..=4)
    #[arg(long)]
    rank: usize,

    /// Thickness parameter: every panel lies in q + 1 chambers (q >= 2)
    #[arg(long)]
    q: u32,

    /// Rank-2 isotropic walk variant: one-step probabilities to each vertex
    /// of the two fundamental spheres, as exact rationals (e.g. 3/28 1/28);
    /// they must satisfy p1*N1 + p2*N2 = 1
    #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
    variant: Option<Vec<String>>,

    /// Output format for the stdout table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Config file overriding built-in defaults (flat `key = value` lines)
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Step count n
    #[arg(long)]
    n: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    /// Local limit: p^n(0, λ) vs the heat shape, all dominant λ with
    /// length <= n - 1
    Interior,
    /// Near the light cone (rank 2): depths d = n - length in a fixed window
    Boundary,
    /// Subcritical Green function along rays vs the saddle shape
    Green,
    /// Green function at z = 1/spectral-radius vs the critical shape
    #[value(alias = "green_critical")]
    GreenCritical,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Comparison regime
    #[arg(long, value_enum)]
    regime: RegimeArg,

    /// Interior: clip the default step grid and include this top n.
    /// Boundary: largest step count (default 40).
    /// Green-critical: truncation horizon for the partial sums (default 48)
    #[arg(long)]
    n_max: Option<u32>,

    /// Ratio-spread envelope E (default: the calibrated per-regime,
    /// per-rank config value)
    #[arg(long)]
    envelope: Option<f64>,

    /// Green regime: z as an exact rational a/b
    #[arg(long, conflicts_with = "z_frac")]
    z: Option<String>,

    /// Green regime: z as an exact fraction of the critical value
    /// 1/spectral-radius (default 1/2)
    #[arg(long)]
    z_frac: Option<String>,
}

#[derive(Args)]
struct IdentArgs {
    /// Coxeter rank r of the A~r building (1..=4)
    #[arg(long)]
    rank: usize,

    /// Thickness parameter (q >= 2), used by the spectral identities
    #[arg(long)]
    q: u32,

    /// Exponent bound for the polynomial derivative identities (default 6)
    #[arg(long)]
    n_max: Option<u32>,

    /// Output format for the stdout check table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SaddleArgs {
    /// Coxeter rank r of the A~r building (1..=4)
    #[arg(long)]
    rank: usize,

    /// Thickness parameter (q >= 2); shapes the step polynomial
    #[arg(long)]
    q: u32,

    /// Rank-2 isotropic walk variant probabilities (exact rationals)
    #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
    variant: Option<Vec<String>>,

    /// Drift as comma-separated fundamental-weight coordinates (e.g.
    /// 0.2,0.1 or 1/5,1/10); must be dominant with length < 1. Without
    /// this flag a deterministic 100-drift grid is solved instead
    #[arg(long)]
    delta: Option<String>,

    /// Output format for the stdout table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct SpectralArgs {
    /// Coxeter rank r of the A~r building (1..=4)
    #[arg(long)]
    rank: usize,

    /// Thickness parameter (q >= 2)
    #[arg(long)]
    q: u32,

    /// Rank-2 isotropic walk variant probabilities (exact rationals)
    #[arg(long, num_args = 2, value_names = ["P1", "P2"])]
    variant: Option<Vec<String>>,

    /// Output format for the stdout table
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// z as an exact rational a/b
    #[arg(long, conflicts_with = "z_frac")]
    z: Option<String>,

    /// z as an exact fraction of the critical value 1/spectral-radius
    /// (default 1/2); 1/1 selects the critical point itself
    #[arg(long)]
    z_frac: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// A terminal failure: message plus process exit code (2 = input error,
/// 3 = resource ceiling).
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        let code = match e {
            KernelError::ResourceCeiling { .. } | KernelError::TailNotCertifiable(_) => 3,
            _ => 2,
        };
        fail(code, e.to_string())
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Kernel(k) => k.into(),
            other => fail(2, other.to_string()),
        }
    }
}

impl From<SaddleError> for Failure {
    fn from(e: SaddleError) -> Self {
        fail(2, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.cmd {
        Cmd::Kernel(a) => cmd_kernel(a),
        Cmd::Ratio(a) => cmd_ratio(a),
        Cmd::Identities(a) => cmd_identities(a),
        Cmd::Saddle(a) => cmd_saddle(a),
        Cmd::Spectral(a) => cmd_spectral(a),
        Cmd::Green(a) => cmd_green(a),
    }
}

// ---------------------------------------------------------------- helpers

fn check_rank_q(rank: usize, q: u32) -> Result<RootSystem, Failure> {
    if !(1..=4).contains(&rank) {
        return Err(fail(2, format!("rank {rank} unsupported: this build handles ranks 1..=4")));
    }
    if q < 2 {
        return Err(fail(2, format!("q = {q} invalid: thick buildings require q >= 2")));
    }
    Ok(RootSystem::new(rank))
}

fn parse_ratio_arg(s: &str, what: &str) -> Result<BigRational, Failure> {
    let parse_int = |t: &str| {
        BigInt::from_str(t.trim())
            .map_err(|_| fail(2, format!("{what}: `{t}` is not an integer")))
    };
    match s.split_once('/') {
        Some((num, den)) => {
            let num = parse_int(num)?;
            let den = parse_int(den)?;
            if den == BigInt::from(0) {
                return Err(fail(2, format!("{what}: zero denominator in `{s}`")));
            }
            Ok(BigRational::new(num, den))
        }
        None => Ok(BigRational::from(parse_int(s)?)),
    }
}

fn build_walk(
    rs: &RootSystem,
    q: u32,
    variant: &Option<Vec<String>>,
) -> Result<WalkSpec, Failure> {
    let walk = match variant {
        None => WalkSpec::Simple,
        Some(ps) => {
            let p1 = parse_ratio_arg(&ps[0], "--variant p1")?;
            let p2 = parse_ratio_arg(&ps[1], "--variant p2")?;
            WalkSpec::Isotropic2 { p1, p2 }
        }
    };
    walk.validate(rs, q)?;
    Ok(walk)
}

fn walk_label(walk: &WalkSpec) -> String {
    match walk {
        WalkSpec::Simple => "simple".into(),
        WalkSpec::Isotropic2 { p1, p2 } => format!("isotropic2({p1}, {p2})"),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<Config, Failure> {
    match path {
        None => Ok(Config::default_config()),
        Some(p) => Config::from_file(p).map_err(Failure::from),
    }
}

/// Envelope precedence: the `--envelope` flag, then the calibrated
/// per-rank config key.
fn resolve_envelope(
    flag: Option<f64>,
    cfg: &Config,
    stem: &str,
    rank: usize,
) -> Result<f64, Failure> {
    if let Some(e) = flag {
        if !(e.is_finite() && e >= 1.0) {
            return Err(fail(2, format!("--envelope {e} invalid: spreads are >= 1")));
        }
        return Ok(e);
    }
    cfg.per_rank_f64(stem, rank).map_err(|_| {
        fail(
            2,
            format!("no calibrated envelope `{stem}_r{rank}` in the config; pass --envelope"),
        )
    })
}

fn step_ceiling(cfg: &Config, rank: usize) -> u32 {
    cfg.per_rank_u32("step_ceiling", rank)
        .unwrap_or_else(|_| default_step_ceiling(rank))
}

/// Exact `z` from `--z a/b` or `--z-frac f` (a fraction of the critical
/// value `1/spectral-radius`, exact in `Q(sqrt q)`); default `z-frac = 1/2`.
fn resolve_z(
    rs: &RootSystem,
    q: u32,
    walk: &WalkSpec,
    z: &Option<String>,
    z_frac: &Option<String>,
) -> Result<QExt, Failure> {
    if let Some(s) = z {
        return Ok(QExt::from_ratio(parse_ratio_arg(s, "--z")?, q));
    }
    let frac = match z_frac {
        Some(s) => parse_ratio_arg(s, "--z-frac")?,
        None => BigRational::new(BigInt::from(1), BigInt::from(2)),
    };
    Ok(walk.spectral_radius(rs, q).inv().mul_ratio(&frac))
}

fn qext_display(v: &QExt) -> String {
    let (a_num, a_den, b_num, b_den) = v.quadruple_strings();
    let rat = |n: &str, d: &str| {
        if d == "1" {
            n.to_string()
        } else {
            format!("{n}/{d}")
        }
    };
    if b_num == "0" {
        rat(&a_num, &a_den)
    } else if a_num == "0" {
        format!("{}*sqrt({})", rat(&b_num, &b_den), v.q())
    } else {
        format!("{} + {}*sqrt({})", rat(&a_num, &a_den), rat(&b_num, &b_den), v.q())
    }
}

/// Deterministic low-discrepancy sequence: coordinate `j` of point `i` is
/// the fractional part of `1/2 + i*frac(sqrt(p_j))` over the first primes.
fn kronecker_unit(i: u64, j: usize) -> f64 {
    const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let alpha = (PRIMES[j % PRIMES.len()] as f64).sqrt().fract();
    (0.5 + i as f64 * alpha).fract()
}

/// Distance of a spectral point from the singular set of the `c`-function
/// (where some `e^{±(z_a − z_b)}` hits 1).
fn regularity_gap(rs: &RootSystem, z: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for &(a, b) in rs.positive_roots() {
        let p = z[a] - z[b];
        gap = gap.min((1.0 - (-p).exp()).norm());
        gap = gap.min((1.0 - p.exp()).norm());
    }
    gap
}

/// `count` deterministic regular spectral points, bounded away from the
/// singular set by `1e-2`.
fn regular_points(rs: &RootSystem, count: usize) -> Vec<Vec<Complex64>> {
    let mut pts = Vec::with_capacity(count);
    let mut i = 1u64;
    while pts.len() < count {
        let z: Vec<Complex64> = (0..rs.dim_ambient())
            .map(|a| {
                let re = 2.0 * kronecker_unit(i, 2 * a) - 1.0;
                let im = std::f64::consts::PI * (2.0 * kronecker_unit(i, 2 * a + 1) - 1.0);
                Complex64::new(re, im)
            })
            .collect();
        if regularity_gap(rs, &z) > 1e-2 {
            pts.push(z);
        }
        i += 1;
    }
    pts
}

// ------------------------------------------------------------------ kernel

fn cmd_kernel(a: KernelArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.common.rank, a.common.q)?;
    let q = a.common.q;
    let walk = build_walk(&rs, q, &a.common.variant)?;
    let cfg = load_config(&a.common.config)?;
    let run = run_kernel_full(&rs, q, &walk, a.n, step_ceiling(&cfg, rs.rank()))?;
    let table = run.table(a.n)?;
    let points = kernel_points(&table);

    match a.common.format {
        Format::Csv => print!("{}", points_to_csv(&points)),
        Format::Json => {
            let doc = json!({
                "rank": rs.rank(),
                "q": q,
                "walk": walk_label(&walk),
                "n": a.n,
                "points": points,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("table serializes"));
        }
    }

    let defect = run.mass_defect(&rs, a.n)?;
    let zero_rows = points.iter().filter(|p| p.exact_float == 0.0).count();
    eprintln!(
        "kernel table: rank {}, q {q}, {} walk, n = {}",
        rs.rank(),
        walk_label(&walk),
        a.n
    );
    eprintln!(
        "rows: {} dominant weights ({} with zero probability)",
        points.len(),
        zero_rows
    );
    if defect.is_zero() {
        eprintln!("total mass check: sum over the building = 1 exactly");
        Ok(true)
    } else {
        eprintln!(
            "total mass check: FAILED, defect = {} (exact arithmetic violation)",
            qext_display(&defect)
        );
        Ok(false)
    }
}

// ------------------------------------------------------------------- ratio

fn interior_default_grid(rank: usize, isotropic: bool) -> Vec<u32> {
    if isotropic {
        vec![12, 16, 20, 24]
    } else if rank >= 3 {
        vec![6, 8, 10, 12]
    } else {
        vec![16, 24, 32, 40]
    }
}

fn default_rays(rank: usize) -> Vec<Weight> {
    match rank {
        1 => vec![Weight::new(vec![1])],
        2 => vec![Weight::new(vec![1, 1]), Weight::new(vec![2, 1])],
        r => vec![Weight::new(vec![1; r])],
    }
}

fn default_norm_range(rank: usize) -> (f64, f64) {
    if rank >= 3 {
        (4.0, 10.0)
    } else {
        (4.0, 24.0)
    }
}

fn cmd_ratio(a: RatioArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.common.rank, a.common.q)?;
    let q = a.common.q;
    let walk = build_walk(&rs, q, &a.common.variant)?;
    let isotropic = !matches!(walk, WalkSpec::Simple);
    let cfg = load_config(&a.common.config)?;
    let mut cache = F0Cache::new();

    if a.regime != RegimeArg::Green && (a.z.is_some() || a.z_frac.is_some()) {
        return Err(fail(
            2,
            "--z/--z-frac apply to the green regime only (green-critical pins z = 1/spectral-radius)",
        ));
    }

    let report = match a.regime {
        RegimeArg::Interior => {
            let mut ns = interior_default_grid(rs.rank(), isotropic);
            if let Some(top) = a.n_max {
                ns.retain(|&n| n <= top);
                ns.push(top);
                ns.sort_unstable();
                ns.dedup();
            }
            let stem = if isotropic {
                "envelope_isotropic"
            } else {
                "envelope_interior"
            };
            let envelope = resolve_envelope(a.envelope, &cfg, stem, rs.rank())?;
            interior_report(
                &rs,
                q,
                &walk,
                &ns,
                envelope,
                step_ceiling(&cfg, rs.rank()),
                &mut cache,
            )?
        }
        RegimeArg::Boundary => {
            if rs.rank() != 2 {
                return Err(fail(2, "the boundary regime is calibrated for rank 2 only"));
            }
            if isotropic {
                return Err(fail(2, "the boundary regime supports the simple walk only"));
            }
            let n_max = a.n_max.unwrap_or(40);
            let d_max = cfg.u32("k_cfg")? as i64 - 1;
            let kprime = cfg.i64("kprime_cfg")?;
            let envelope = resolve_envelope(a.envelope, &cfg, "envelope_boundary", rs.rank())?;
            boundary_report(
                &rs,
                q,
                &walk,
                n_max,
                d_max,
                kprime,
                envelope,
                step_ceiling(&cfg, rs.rank()),
            )?
        }
        RegimeArg::Green => {
            let z = resolve_z(&rs, q, &walk, &a.z, &a.z_frac)?;
            let gap = QExt::one(q).sub(&z.mul(&walk.spectral_radius(&rs, q)));
            match gap.sign() {
                Ordering::Less => {
                    return Err(fail(2, "z exceeds the radius of convergence 1/spectral-radius"))
                }
                Ordering::Equal => {
                    return Err(fail(
                        2,
                        "z equals 1/spectral-radius exactly; use --regime green-critical",
                    ))
                }
                Ordering::Greater => {}
            }
            let envelope = resolve_envelope(a.envelope, &cfg, "envelope_green", rs.rank())?;
            let ceiling = cfg.per_rank_u32("green_ceiling", rs.rank()).map_err(|_| {
                fail(2, format!("no `green_ceiling_r{}` in the config", rs.rank()))
            })?;
            green_report(
                &rs,
                q,
                &walk,
                &z,
                &default_rays(rs.rank()),
                default_norm_range(rs.rank()),
                cfg.f64("green_rel_tol")?,
                ceiling,
                envelope,
                &mut cache,
            )?
        }
        RegimeArg::GreenCritical => {
            let envelope =
                resolve_envelope(a.envelope, &cfg, "envelope_green_critical", rs.rank())?;
            let trunc = a.n_max.unwrap_or(48);
            green_critical_report(&rs, q, &walk, (4.0, 16.0), trunc, envelope, &mut cache)?
        }
    };

    match a.common.format {
        Format::Csv => print!("{}", report.to_csv()),
        Format::Json => print!("{}", report.to_json()),
    }
    eprint!("{}", report.summary());
    Ok(report.pass)
}

// -------------------------------------------------------------- identities

fn cmd_identities(a: IdentArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.rank, a.q)?;
    let q = a.q;
    let n_max = a.n_max.unwrap_or(6) as usize;

    let mut checks: Vec<(String, bool)> = identity_suite(&rs, n_max).checks;

    // c-function product identity 1/c = Δ·b·e^{-⟨ρ,z⟩} at 100 deterministic
    // regular points, relative error <= 1e-12
    let pts = regular_points(&rs, 100);
    let mut worst = 0.0f64;
    for z in &pts {
        let lhs = 1.0 / c_function(&rs, q, z);
        let rhs = delta_function(&rs, z)
            * b_function(&rs, q, z)
            * (-pair_weight(&rs, &rs.rho(), z)).exp();
        worst = worst.max((lhs - rhs).norm() / lhs.norm().max(1.0));
    }
    checks.push((
        format!(
            "c-function product identity at {} regular points (worst rel err {worst:.2e})",
            pts.len()
        ),
        worst <= 1e-12,
    ));

    // Macdonald spherical functions against the orbit sums at the
    // fundamental weights, 20 points each, relative error <= 1e-12
    let mpts = regular_points(&rs, 20);
    let mut worst_m = 0.0f64;
    for k in 1..=rs.rank() {
        let lam = rs.fundamental(k);
        let pref = QExt::q_half_pow(q, rs.q_exponent(&lam)).to_f64()
            / rs.n_lambda(&lam).eval_sqrt_q(q).to_f64();
        for z in &mpts {
            let got = macdonald_p(&rs, q, &lam, z).map_err(|e| fail(2, e.to_string()))?;
            let orbit_sum: Complex64 = rs
                .orbit(&lam)
                .iter()
                .map(|mu| pair_weight(&rs, mu, z).exp())
                .sum();
            let want = orbit_sum * pref;
            worst_m = worst_m.max((got - want).norm() / want.norm().max(1.0));
        }
    }
    checks.push((
        format!(
            "Macdonald functions vs fundamental orbit sums at {} points (worst rel err {worst_m:.2e})",
            mpts.len()
        ),
        worst_m <= 1e-12,
    ));

    // P_0 ≡ 1, i.e. Σ_w c(w·z) equals the Poincaré normalizer W₀(q⁻¹)
    let mut worst_one = 0.0f64;
    for z in &mpts {
        let one = macdonald_p(&rs, q, &Weight::zero(rs.rank()), z)
            .map_err(|e| fail(2, e.to_string()))?;
        worst_one = worst_one.max((one - 1.0).norm());
    }
    checks.push((
        format!("spherical normalization P_0 = 1 (worst abs err {worst_one:.2e})"),
        worst_one <= 1e-12,
    ));

    let all = checks.iter().all(|(_, ok)| *ok);
    match a.format {
        Format::Csv => {
            println!("check,pass");
            for (name, ok) in &checks {
                println!("\"{}\",{}", name.replace('"', "\"\""), ok);
            }
        }
        Format::Json => {
            let doc = json!({
                "rank": rs.rank(),
                "q": q,
                "n_max": n_max,
                "checks": checks.iter().map(|(name, ok)| json!({"name": name, "pass": ok})).collect::<Vec<_>>(),
                "pass": all,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
        }
    }
    for (name, ok) in &checks {
        eprintln!("{} — {}", if *ok { "ok  " } else { "FAIL" }, name);
    }
    eprintln!(
        "identities: rank {}, q {q}: {}",
        rs.rank(),
        if all { "all pass" } else { "FAILURES above" }
    );
    Ok(all)
}

// ------------------------------------------------------------------ saddle

fn parse_delta(rs: &RootSystem, s: &str) -> Result<Vec<f64>, Failure> {
    let coords: Vec<f64> = s
        .split(',')
        .map(|t| {
            let t = t.trim();
            if t.contains('/') {
                parse_ratio_arg(t, "--delta").map(|r| {
                    let num: f64 = r.numer().to_string().parse().unwrap_or(f64::NAN);
                    let den: f64 = r.denom().to_string().parse().unwrap_or(f64::NAN);
                    num / den
                })
            } else {
                t.parse::<f64>()
                    .map_err(|_| fail(2, format!("--delta: `{t}` is not a number")))
            }
        })
        .collect::<Result<_, _>>()?;
    if coords.len() != rs.rank() {
        return Err(fail(
            2,
            format!(
                "--delta needs {} comma-separated fundamental coordinates, got {}",
                rs.rank(),
                coords.len()
            ),
        ));
    }
    Ok(coords)
}

/// `Σ d_k · e(λ_k)` in the ambient sum-zero chart.
fn delta_ambient(rs: &RootSystem, coords: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; rs.dim_ambient()];
    for (k, &c) in coords.iter().enumerate() {
        let ek = e_vec(rs, &rs.fundamental(k + 1));
        for (vi, ei) in v.iter_mut().zip(&ek) {
            *vi += c * ei;
        }
    }
    v
}

fn min_eigenvalue(h: &nalgebra::DMatrix<f64>) -> f64 {
    h.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn cmd_saddle(a: SaddleArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.rank, a.q)?;
    let walk = build_walk(&rs, a.q, &a.variant)?;
    let geom = StepGeometry::new(&rs, &walk.step_coeffs_f64(&rs, a.q));

    if let Some(spec) = &a.delta {
        let coords = parse_delta(&rs, spec)?;
        let delta = delta_ambient(&rs, &coords);
        let sol = solve_saddle(&geom, &delta)?;
        let min_eig = min_eigenvalue(&sol.hessian);
        let spd = min_eig > 0.0;
        match a.format {
            Format::Csv => {
                let dim = rs.dim_ambient();
                let mut header = String::from("ell,phi,residual,min_hessian_eig");
                for i in 1..=dim {
                    header.push_str(&format!(",s_{i}"));
                }
                println!("{header}");
                let s_cells = sol.s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
                println!(
                    "{},{},{},{},{}",
                    geom.ell(&sol.delta),
                    sol.phi,
                    sol.residual,
                    min_eig,
                    s_cells
                );
            }
            Format::Json => {
                let doc = json!({
                    "rank": rs.rank(),
                    "q": a.q,
                    "walk": walk_label(&walk),
                    "delta_fundamental": coords,
                    "delta_ambient": sol.delta,
                    "s": sol.s,
                    "phi": sol.phi,
                    "residual": sol.residual,
                    "min_hessian_eig": min_eig,
                    "spd": spd,
                });
                println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
            }
        }
        let s_norm = geometry::norm(&sol.s);
        eprintln!(
            "saddle for drift {coords:?}: phi = {:.12}, |s| = {:.3e}, residual {:.3e}, \
             min Hessian eigenvalue {:.3e} ({})",
            sol.phi,
            s_norm,
            sol.residual,
            min_eig,
            if spd { "SPD" } else { "NOT positive definite" }
        );
        if geometry::norm(&sol.delta) == 0.0 {
            eprintln!("drift 0 maps to s = 0 (up to solver tolerance {:.1e})", s_norm);
        }
        return Ok(sol.residual <= 1e-10 && spd);
    }

    // deterministic grid: 100 drifts spread over the dominant chamber with
    // lengths up to 0.95
    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut max_res = 0.0f64;
    for i in 0..100u64 {
        let mix: Vec<f64> = (0..rs.rank()).map(|j| kronecker_unit(i + 1, j)).collect();
        let raw = delta_ambient(&rs, &mix);
        let ell = geom.ell(&raw);
        let target = 0.95 * (i as f64 + 0.5) / 100.0;
        let delta = if ell > 0.0 {
            geometry::scale(&raw, target / ell)
        } else {
            raw
        };
        match solve_saddle(&geom, &delta) {
            Ok(sol) => {
                let min_eig = min_eigenvalue(&sol.hessian);
                let ok = sol.residual <= 1e-10 && min_eig > 0.0;
                all_ok &= ok;
                max_res = max_res.max(sol.residual);
                rows.push((i, target, sol.phi, sol.residual, min_eig, ok));
            }
            Err(e) => {
                all_ok = false;
                eprintln!("FAIL — drift #{i} (length {target:.3}): {e}");
                rows.push((i, target, f64::NAN, f64::NAN, f64::NAN, false));
            }
        }
    }
    match a.format {
        Format::Csv => {
            println!("index,ell,phi,residual,min_hessian_eig,pass");
            for (i, ell, phi, res, eig, ok) in &rows {
                println!("{i},{ell},{phi},{res},{eig},{ok}");
            }
        }
        Format::Json => {
            let doc = json!({
                "rank": rs.rank(),
                "q": a.q,
                "walk": walk_label(&walk),
                "drifts": rows.iter().map(|(i, ell, phi, res, eig, ok)| json!({
                    "index": i, "ell": ell, "phi": phi, "residual": res,
                    "min_hessian_eig": eig, "pass": ok,
                })).collect::<Vec<_>>(),
                "max_residual": max_res,
                "pass": all_ok,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
        }
    }
    eprintln!(
        "saddle grid: rank {}, q {}, {} walk: 100 drifts with length <= 0.95, \
         max residual {max_res:.3e}, Hessians SPD: {} -> {}",
        rs.rank(),
        a.q,
        walk_label(&walk),
        all_ok,
        if all_ok { "PASS" } else { "FAIL" }
    );
    Ok(all_ok)
}

// ---------------------------------------------------------------- spectral

fn cmd_spectral(a: SpectralArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.rank, a.q)?;
    let q = a.q;
    let walk = build_walk(&rs, q, &a.variant)?;
    let rho_v = walk.rho_v(&rs, q);
    let rho_tilde = walk.spectral_radius(&rs, q);

    let closed = if matches!(walk, WalkSpec::Simple) {
        simple_rho_tilde_closed_form(rs.rank(), q)
    } else {
        None
    };
    let (check_label, check_pass) = match &closed {
        Some(cf) => {
            if rho_tilde.sub(cf).is_zero() {
                ("exact match".to_string(), true)
            } else {
                (format!("MISMATCH: closed form {}", qext_display(cf)), false)
            }
        }
        None => ("n/a".to_string(), true),
    };

    match a.format {
        Format::Csv => {
            println!("quantity,exact,exact_num,exact_den,exact_sqrt_num,exact_sqrt_den,decimal");
            for (name, v) in [("rho_v", &rho_v), ("rho_tilde", &rho_tilde)] {
                let (an, ad, bn, bd) = v.quadruple_strings();
                println!("{name},{},{an},{ad},{bn},{bd},{}", qext_display(v), v.to_f64());
            }
        }
        Format::Json => {
            let quad = |v: &QExt| {
                let (an, ad, bn, bd) = v.quadruple_strings();
                json!({
                    "exact": qext_display(v),
                    "num": an, "den": ad, "sqrt_num": bn, "sqrt_den": bd,
                    "decimal": v.to_f64(),
                })
            };
            let doc = json!({
                "rank": rs.rank(),
                "q": q,
                "walk": walk_label(&walk),
                "rho_v": quad(&rho_v),
                "rho_tilde": quad(&rho_tilde),
                "closed_form_check": check_label,
                "pass": check_pass,
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
        }
    }

    eprintln!(
        "rank {}, q {q}, {} walk",
        rs.rank(),
        walk_label(&walk)
    );
    eprintln!(
        "rho_v (one-step sphere normalizer) = {} = {}",
        qext_display(&rho_v),
        rho_v.to_f64()
    );
    eprintln!(
        "rho_tilde (spectral radius) = {} = {}",
        qext_display(&rho_tilde),
        rho_tilde.to_f64()
    );
    let formula = match rs.rank() {
        1 => Some("2*sqrt(q)/(q+1)"),
        2 => Some("3q/(q^2+q+1)"),
        3 => Some("14q^2/((1+q^2)*((q^2+q+1) + 2*(q+1)*sqrt(q)))"),
        _ => None,
    };
    match (&closed, formula) {
        (Some(_), Some(f)) => eprintln!("closed form {f}: {check_label}"),
        _ => eprintln!("closed form: {check_label}"),
    }
    Ok(check_pass)
}

// ------------------------------------------------------------------- green

fn green_point(g: &GreenEvaluation) -> PointRecord {
    let (a_num, a_den, b_num, b_den) = g.partial.quadruple_strings();
    PointRecord {
        n: g.steps_used,
        m: g.x.coords().to_vec(),
        exact_num: a_num,
        exact_den: a_den,
        exact_sqrt_num: b_num,
        exact_sqrt_den: b_den,
        exact_float: g.partial.to_f64(),
        shape: None,
        ratio: None,
    }
}

fn cmd_green(a: GreenArgs) -> Result<bool, Failure> {
    let rs = check_rank_q(a.common.rank, a.common.q)?;
    let q = a.common.q;
    if rs.rank() > 3 {
        return Err(fail(2, "green tables are calibrated for ranks 1..=3"));
    }
    let walk = build_walk(&rs, q, &a.common.variant)?;
    let cfg = load_config(&a.common.config)?;
    let z = resolve_z(&rs, q, &walk, &a.z, &a.z_frac)?;
    let rel_tol = cfg.f64("green_rel_tol")?;
    let ceiling = cfg
        .per_rank_u32("green_ceiling", rs.rank())
        .map_err(|_| fail(2, format!("no `green_ceiling_r{}` in the config", rs.rank())))?;

    let (lo, hi) = default_norm_range(rs.rank());
    let mut xs = Vec::new();
    for dir in default_rays(rs.rank()) {
        let step = geometry::norm(&e_vec(&rs, &dir));
        for k in 1..=((hi / step).floor() as i64) {
            if step * k as f64 >= lo {
                xs.push(Weight::new(dir.coords().iter().map(|c| c * k).collect()));
            }
        }
    }
    xs.sort_by(|x, y| x.coords().cmp(y.coords()));
    xs.dedup();

    let evals = green_exact_batch(&rs, q, &walk, &xs, &z, rel_tol, ceiling)?;
    let mut points: Vec<PointRecord> = evals.iter().map(green_point).collect();
    points.sort_by(|p, r| (p.n, &p.m).cmp(&(r.n, &r.m)));

    match a.common.format {
        Format::Csv => print!("{}", points_to_csv(&points)),
        Format::Json => {
            let (an, ad, bn, bd) = z.quadruple_strings();
            let doc = json!({
                "rank": rs.rank(),
                "q": q,
                "walk": walk_label(&walk),
                "z": {"exact": qext_display(&z), "num": an, "den": ad,
                      "sqrt_num": bn, "sqrt_den": bd, "decimal": z.to_f64()},
                "points": points,
                "certified": evals.iter().all(|g| g.certified),
            });
            println!("{}", serde_json::to_string_pretty(&doc).expect("table serializes"));
        }
    }

    let certified = evals.iter().all(|g| g.certified);
    let max_steps = evals.iter().map(|g| g.steps_used).max().unwrap_or(0);
    let max_tail_rel = evals
        .iter()
        .map(|g| g.tail_bound.to_f64() / g.value_f64().max(f64::MIN_POSITIVE))
        .fold(0.0f64, f64::max);
    eprintln!(
        "green table: rank {}, q {q}, {} walk, z = {} = {}",
        rs.rank(),
        walk_label(&walk),
        qext_display(&z),
        z.to_f64()
    );
    eprintln!(
        "{} points along rays {:?}, |x| in [{lo}, {hi}]; the n column holds the \
         truncation horizon (max {max_steps})",
        points.len(),
        default_rays(rs.rank())
            .iter()
            .map(|r| r.coords().to_vec())
            .collect::<Vec<_>>()
    );
    if certified {
        eprintln!(
            "tails certified <= {rel_tol:.1e} relative (exact geometric bound, \
             worst {max_tail_rel:.2e})"
        );
    } else {
        eprintln!(
            "tails NOT certified (critical z: power-law tail model, worst {max_tail_rel:.2e} \
             relative); the lossless columns hold the exact partial sums"
        );
    }
    Ok(true)
}
