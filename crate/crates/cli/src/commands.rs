//! Subcommand implementations.

use crate::output::{self, config_hash, fmt_real};
use billiard_spectra::billiard::{self, PhasePoint};
use billiard_spectra::geometry::Domain;
use billiard_spectra::rotation::{self, ClosedModel, RotationProfile, TraversalMode};
use billiard_spectra::seeley::{self, ZoneSpec};
use billiard_spectra::spectra::{self, BoundaryCondition};
use billiard_spectra::weyl::{self, PhaseWindow};
use billiard_spectra::{Error as CoreError, Vec2};
use clap::{Args, ValueEnum};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Command failure with its process exit code (2 config, 3 numeric range).
pub struct CmdError {
    pub code: u8,
    pub message: String,
}

pub type CmdResult = Result<String, CmdError>;

fn config_err(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 2,
        message: message.into(),
    }
}

fn numeric_err(message: impl Into<String>) -> CmdError {
    CmdError {
        code: 3,
        message: message.into(),
    }
}

fn from_core(e: CoreError) -> CmdError {
    match e {
        CoreError::InvalidDomain(_) | CoreError::WrongDomain(_) => config_err(e.to_string()),
        _ => numeric_err(e.to_string()),
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CmdError {
    config_err(format!("{}: {e}", path.display()))
}

fn load_domain(path: &Path) -> Result<Domain, CmdError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Domain::from_json(&text).map_err(from_core)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Dirichlet,
    Neumann,
}

impl From<BcArg> for BoundaryCondition {
    fn from(v: BcArg) -> Self {
        match v {
            BcArg::Dirichlet => BoundaryCondition::Dirichlet,
            BcArg::Neumann => BoundaryCondition::Neumann,
        }
    }
}

fn parse_pair(text: &str) -> Result<Vec2, CmdError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(config_err(format!("expected \"x,y\", got {text:?}")));
    }
    let x: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| config_err(format!("bad number in {text:?}")))?;
    let y: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| config_err(format!("bad number in {text:?}")))?;
    Ok(Vec2::new(x, y))
}

// ---------------------------------------------------------------- trace

#[derive(Args)]
pub struct TraceArgs {
    /// Domain description (JSON file).
    #[arg(long)]
    domain: PathBuf,
    /// Start point "x,y"; drawn from the seed when omitted.
    #[arg(long)]
    start: Option<String>,
    /// Start direction "dx,dy" (normalized); drawn from the seed when omitted.
    #[arg(long)]
    dir: Option<String>,
    /// Bounce cap.
    #[arg(long, default_value_t = 100)]
    bounces: usize,
    /// Flight-time cap.
    #[arg(long, default_value_t = f64::INFINITY)]
    max_time: f64,
    /// Seed for the random start.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

pub fn trace(args: TraceArgs) -> CmdResult {
    let domain = load_domain(&args.domain)?;
    let canonical = format!(
        "trace|{}|{:?}|{:?}|{}|{}|{}",
        serde_json::to_string(&domain).unwrap(),
        args.start,
        args.dir,
        args.bounces,
        args.max_time,
        args.seed
    );
    let hash = config_hash(&canonical);
    let z0 = match (&args.start, &args.dir) {
        (Some(s), Some(d)) => PhasePoint::new(parse_pair(s)?, parse_pair(d)?),
        (None, None) => random_interior_start(&domain, args.seed),
        _ => return Err(config_err("--start and --dir must be given together")),
    };
    if domain.signed_distance(z0.x) <= 0.0 {
        return Err(numeric_err(format!(
            "start point ({}, {}) is not inside the domain",
            z0.x.x, z0.x.y
        )));
    }
    let record = billiard::orbit(&domain, &z0, args.bounces, args.max_time);
    match args.format {
        Format::Csv => {
            let mut rows = Vec::with_capacity(record.segments.len());
            let mut t_cum = 0.0;
            for (i, seg) in record.segments.iter().enumerate() {
                let chord = seg.end - seg.start;
                t_cum += chord.norm();
                // outgoing direction after this bounce = next segment's heading
                // (the final hit reflects the incoming chord)
                let xi_out = record
                    .segments
                    .get(i + 1)
                    .map(|n| (n.end - n.start).normalized())
                    .unwrap_or_else(|| {
                        let incoming = chord.normalized();
                        domain
                            .boundary_normal(seg.end)
                            .map(|n| billiard::reflect(incoming, n))
                            .unwrap_or(incoming)
                    });
                let beta = billiard::conic_invariant(&domain, seg.end, xi_out)
                    .map(|inv| inv.beta)
                    .unwrap_or(f64::NAN);
                rows.push(format!(
                    "{},{},{},{},{},{},{},{}",
                    i + 1,
                    fmt_real(seg.end.x),
                    fmt_real(seg.end.y),
                    fmt_real(xi_out.x),
                    fmt_real(xi_out.y),
                    fmt_real(t_cum),
                    seg.layer,
                    fmt_real(beta)
                ));
            }
            output::write_csv(
                &args.output,
                hash,
                Some(args.seed),
                "bounce,x,y,xi_x,xi_y,t,layer,beta",
                &rows,
            )
            .map_err(|e| io_err(&args.output, e))?;
        }
        Format::Json => {
            let payload = serde_json::to_value(&record).map_err(|e| config_err(e.to_string()))?;
            output::write_json(&args.output, hash, Some(args.seed), payload)
                .map_err(|e| io_err(&args.output, e))?;
        }
    }
    Ok(format!(
        "trace: {} bounces, time {:.6}, termination {:?} -> {}",
        record.bounces,
        record.total_time,
        record.termination,
        args.output.display()
    ))
}

fn random_interior_start(domain: &Domain, seed: u64) -> PhasePoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diam = domain.diameter();
    loop {
        let p = Vec2::new(
            rng.gen_range(-0.5 * diam..0.5 * diam),
            rng.gen_range(-0.5 * diam..0.5 * diam),
        );
        if domain.signed_distance(p) > 1e-3 * diam {
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            return PhasePoint::new(p, Vec2::from_angle(angle));
        }
    }
}

// ------------------------------------------------------------- rotation

#[derive(Args)]
pub struct RotationArgs {
    /// Closed-form model: flat_disk | spherical_cut | cylinder.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Opening angle for spherical_cut.
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// Radial profile JSON with piecewise-linear mu(r), V(r) tables.
    #[arg(long)]
    profile_json: Option<PathBuf>,
    /// Grid as "start:stop:count"; overrides the individual eta flags.
    #[arg(long)]
    eta_grid: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    eta_min: f64,
    #[arg(long, default_value_t = 0.9)]
    eta_max: f64,
    #[arg(long, default_value_t = 101)]
    eta_points: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Deserialize)]
struct ProfileJson {
    /// Sample radii (increasing, in (0, 1]).
    r: Vec<f64>,
    mu: Vec<f64>,
    v: Vec<f64>,
    #[serde(default)]
    mode: Option<String>,
}

pub fn rotation(args: RotationArgs) -> CmdResult {
    let mut args = args;
    if let Some(grid) = &args.eta_grid {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(config_err(format!(
                "--eta-grid wants \"start:stop:count\", got {grid:?}"
            )));
        }
        args.eta_min = parts[0]
            .parse()
            .map_err(|_| config_err(format!("bad start in {grid:?}")))?;
        args.eta_max = parts[1]
            .parse()
            .map_err(|_| config_err(format!("bad stop in {grid:?}")))?;
        args.eta_points = parts[2]
            .parse()
            .map_err(|_| config_err(format!("bad count in {grid:?}")))?;
    }
    let canonical = format!(
        "rotation|{:?}|{}|{}|{}|{:?}|{}|{}|{}",
        args.model,
        args.mu,
        args.alpha,
        args.beta,
        args.profile_json,
        args.eta_min,
        args.eta_max,
        args.eta_points
    );
    let hash = config_hash(&canonical);
    if args.eta_points < 2 || args.eta_max <= args.eta_min {
        return Err(config_err("need eta_max > eta_min and at least 2 points"));
    }
    let f: Box<dyn Fn(f64) -> Result<f64, CoreError>> = if let Some(model) = &args.model {
        let model = match model.as_str() {
            "flat_disk" => ClosedModel::FlatDisk {
                mu: args.mu,
                alpha: args.alpha,
            },
            "spherical_cut" => ClosedModel::SphericalCut {
                alpha: args.alpha,
                beta: args.beta,
            },
            "cylinder" => ClosedModel::Cylinder {
                mu: args.mu,
                alpha: args.alpha,
            },
            other => return Err(config_err(format!("unknown model {other:?}"))),
        };
        Box::new(move |eta| rotation::f_closed(&model, eta))
    } else if let Some(path) = &args.profile_json {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let parsed: ProfileJson =
            serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
        if parsed.r.len() != parsed.mu.len() || parsed.r.len() != parsed.v.len() {
            return Err(config_err("r, mu, v tables must share one length"));
        }
        let mode = match parsed.mode.as_deref() {
            None | Some("turns") => TraversalMode::Turns,
            Some("hits_inner") => TraversalMode::HitsInner,
            Some(other) => return Err(config_err(format!("unknown mode {other:?}"))),
        };
        let mu_tab = table_fn(parsed.r.clone(), parsed.mu);
        let v_tab = table_fn(parsed.r, parsed.v);
        let profile = rotation::RadialProfile::new(|_| 1.0, mu_tab, v_tab);
        Box::new(move |eta| rotation::f_numeric(&profile, eta, mode))
    } else {
        return Err(config_err("give either --model or --profile-json"));
    };
    let n = args.eta_points;
    let grid: Vec<f64> = (0..n)
        .map(|i| args.eta_min + (args.eta_max - args.eta_min) * i as f64 / (n - 1) as f64)
        .collect();
    let mut values = Vec::with_capacity(n);
    for &eta in &grid {
        values.push(f(eta).map_err(from_core)?);
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let fprime = (values[b] - values[a]) / (grid[b] - grid[a]);
        rows.push(format!(
            "{},{},{}",
            fmt_real(grid[i]),
            fmt_real(values[i]),
            fmt_real(fprime)
        ));
    }
    output::write_csv(&args.output, hash, None, "eta,f,fprime", &rows)
        .map_err(|e| io_err(&args.output, e))?;
    Ok(format!(
        "rotation: {} eta values -> {}",
        n,
        args.output.display()
    ))
}

/// Piecewise-linear interpolant of a sampled radial coefficient.
fn table_fn(r: Vec<f64>, vals: Vec<f64>) -> impl Fn(f64) -> f64 + Send + Sync + 'static {
    move |x: f64| {
        if x <= r[0] {
            return vals[0];
        }
        if x >= r[r.len() - 1] {
            return vals[vals.len() - 1];
        }
        let mut lo = 0;
        let mut hi = r.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if r[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (x - r[lo]) / (r[hi] - r[lo]);
        vals[lo] + t * (vals[hi] - vals[lo])
    }
}

// ------------------------------------------------------------- periodic

#[derive(Args)]
pub struct PeriodicArgs {
    /// Phase-space mode: domain JSON for the near-return measure.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// 1-D mode: closed-form model name (flat_disk | spherical_cut | cylinder).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.9)]
    beta: f64,
    /// Denominator cap for rotation levels 2 pi k / l (1-D mode).
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Time horizon (phase mode).
    #[arg(long, default_value_t = 10.0)]
    t: f64,
    /// Short-return exclusion (phase mode).
    #[arg(long, default_value_t = 0.2)]
    eps0: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn periodic(args: PeriodicArgs) -> CmdResult {
    let canonical = format!(
        "periodic|{:?}|{:?}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
        args.domain,
        args.model,
        args.mu,
        args.alpha,
        args.beta,
        args.n,
        args.eps,
        args.t,
        args.eps0,
        args.samples,
        args.seed
    );
    let hash = config_hash(&canonical);
    match (&args.domain, &args.model) {
        (Some(path), None) => {
            let domain = load_domain(path)?;
            let report = rotation::near_periodic_phase_measure(
                &domain,
                args.t,
                args.eps,
                args.eps0,
                args.samples,
                args.seed,
            );
            let payload =
                serde_json::to_value(&report).map_err(|e| config_err(e.to_string()))?;
            output::write_json(&args.output, hash, Some(args.seed), payload)
                .map_err(|e| io_err(&args.output, e))?;
            Ok(format!(
                "periodic(phase): estimate {:.6e} +- {:.2e} -> {}",
                report.estimate,
                report.stderr,
                args.output.display()
            ))
        }
        (None, Some(model)) => {
            let model = match model.as_str() {
                "flat_disk" => ClosedModel::FlatDisk {
                    mu: args.mu,
                    alpha: args.alpha,
                },
                "spherical_cut" => ClosedModel::SphericalCut {
                    alpha: args.alpha,
                    beta: args.beta,
                },
                "cylinder" => ClosedModel::Cylinder {
                    mu: args.mu,
                    alpha: args.alpha,
                },
                other => return Err(config_err(format!("unknown model {other:?}"))),
            };
            let lim = model.eta_max();
            let safe = lim * (1.0 - 1e-9); // cylinder f diverges at the edge
            let prof = RotationProfile::sample(
                move |e| rotation::f_closed(&model, e.clamp(-safe, safe)).unwrap(),
                -lim,
                lim,
                120_001,
            );
            let measure = rotation::periodic_measure_1d(&prof, args.n, args.eps);
            let payload = serde_json::json!({
                "measure": measure,
                "n": args.n,
                "eps": args.eps,
                "min_abs_slope": prof.derivative_bounds.0,
                "max_abs_slope": prof.derivative_bounds.1,
            });
            output::write_json(&args.output, hash, None, payload)
                .map_err(|e| io_err(&args.output, e))?;
            Ok(format!(
                "periodic(1d): measure {:.6e} -> {}",
                measure,
                args.output.display()
            ))
        }
        _ => Err(config_err("give exactly one of --domain or --model")),
    }
}

// ----------------------------------------------------------------- weyl

#[derive(Args)]
pub struct WeylArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, value_enum, default_value_t = BcArg::Dirichlet)]
    bc: BcArg,
    #[arg(long, default_value_t = 100.0)]
    lmin: f64,
    #[arg(long)]
    lmax: f64,
    /// Grid points (geometric spacing).
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn weyl(args: WeylArgs) -> CmdResult {
    let domain = load_domain(&args.domain)?;
    let canonical = format!(
        "weyl|{}|{:?}|{}|{}|{}",
        serde_json::to_string(&domain).unwrap(),
        args.bc,
        args.lmin,
        args.lmax,
        args.points
    );
    let hash = config_hash(&canonical);
    if !(args.lmax > args.lmin && args.lmin > 0.0 && args.points >= 2) {
        return Err(config_err("need 0 < lmin < lmax and at least 2 points"));
    }
    let bc: BoundaryCondition = args.bc.into();
    let spectrum = exact_spectrum(&domain, bc, args.lmax)?;
    let ratio = (args.lmax / args.lmin).powf(1.0 / (args.points - 1) as f64);
    let mut lambdas: Vec<f64> = (0..args.points)
        .map(|i| args.lmin * ratio.powi(i as i32))
        .collect();
    *lambdas.last_mut().unwrap() = args.lmax; // rounding must not pass lmax
    let table = weyl::residual_series(&domain, &spectrum, &lambdas).map_err(from_core)?;
    let rows: Vec<String> = table
        .rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                fmt_real(r.lambda),
                r.count,
                fmt_real(r.weyl),
                fmt_real(r.residual),
                fmt_real(r.residual_normalized)
            )
        })
        .collect();
    output::write_csv(&args.output, hash, None, "lambda,N,NW,R,Rnorm", &rows)
        .map_err(|e| io_err(&args.output, e))?;
    let sup = table
        .rows
        .iter()
        .map(|r| r.residual_normalized.abs())
        .fold(0.0f64, f64::max);
    Ok(format!(
        "weyl: {} grid points, sup |R|/sqrt(lambda) = {:.4} -> {}",
        table.rows.len(),
        sup,
        args.output.display()
    ))
}

/// Exact oracle for the reference domains; rectangles are detected from
/// axis-aligned 4-gons.
fn exact_spectrum(
    domain: &Domain,
    bc: BoundaryCondition,
    lambda_max: f64,
) -> Result<spectra::Spectrum, CmdError> {
    match domain {
        Domain::Disk { r } => Ok(spectra::disk_spectrum_covering(*r, lambda_max, bc)),
        Domain::CircularAnnulus { r_outer, r_inner } => {
            if bc != BoundaryCondition::Dirichlet {
                return Err(config_err("annulus oracle supports Dirichlet only"));
            }
            Ok(spectra::annulus_spectrum_covering(*r_outer, *r_inner, lambda_max))
        }
        Domain::Polygon { vertices } => {
            let (lx, ly) = rectangle_sides(vertices)
                .ok_or_else(|| config_err("spectral oracle needs an axis-aligned rectangle"))?;
            Ok(spectra::rect_spectrum(lx, ly, lambda_max, bc))
        }
        _ => Err(config_err(
            "no exact spectrum for this domain (disk, rectangle, circular annulus only)",
        )),
    }
}

fn rectangle_sides(vertices: &[Vec2]) -> Option<(f64, f64)> {
    if vertices.len() != 4 {
        return None;
    }
    let e0 = vertices[1] - vertices[0];
    let e1 = vertices[2] - vertices[1];
    let e2 = vertices[3] - vertices[2];
    let e3 = vertices[0] - vertices[3];
    let axis = |v: Vec2| v.x == 0.0 || v.y == 0.0;
    if axis(e0) && axis(e1) && axis(e2) && axis(e3) && e0.dot(e1).abs() < 1e-12 {
        Some((e0.norm(), e1.norm()))
    } else {
        None
    }
}

// ---------------------------------------------------------------- robin

#[derive(Args)]
pub struct RobinArgs {
    /// Field definitions (JSON file).
    #[arg(long)]
    config: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

/// Scalar field over the boundary phase space:
/// value(x, xi) = base + amp cos(kx x + kxi xi).
#[derive(Clone, Copy, Deserialize)]
struct FieldJson {
    base: f64,
    #[serde(default)]
    amp: f64,
    #[serde(default)]
    kx: f64,
    #[serde(default)]
    kxi: f64,
}

impl FieldJson {
    fn eval(&self, x: f64, xi: f64) -> f64 {
        self.base + self.amp * (self.kx * x + self.kxi * xi).cos()
    }
}

fn const_field(base: f64) -> FieldJson {
    FieldJson {
        base,
        amp: 0.0,
        kx: 0.0,
        kxi: 0.0,
    }
}

#[derive(Deserialize)]
struct RobinJson {
    a_prime: FieldJson,
    beta: FieldJson,
    #[serde(default)]
    q1: Option<FieldJson>,
    #[serde(default)]
    q2: Option<FieldJson>,
    /// Lower spectral bound; null or missing means -infinity.
    #[serde(default)]
    tau1: Option<f64>,
    tau2: f64,
    window: PhaseWindow,
    /// Optional pointwise surface-density evaluation.
    #[serde(default)]
    surface: Option<SurfaceJson>,
}

#[derive(Deserialize)]
struct SurfaceJson {
    beta: f64,
    a_prime: f64,
    tau: f64,
    x1: f64,
    y1: f64,
}

pub fn robin(args: RobinArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let cfg: RobinJson = serde_json::from_str(&text).map_err(|e| config_err(e.to_string()))?;
    let hash = config_hash(&format!("robin|{text}"));
    let q1 = cfg.q1.unwrap_or(const_field(1.0));
    let q2 = cfg.q2.unwrap_or(const_field(1.0));
    let tau1 = cfg.tau1.unwrap_or(f64::NEG_INFINITY);
    let kappa1 = weyl::robin_kappa1(
        |x, xi| cfg.a_prime.eval(x, xi),
        |x, xi| cfg.beta.eval(x, xi),
        |x, xi| q1.eval(x, xi),
        |x, xi| q2.eval(x, xi),
        tau1,
        cfg.tau2,
        &cfg.window,
    );
    let surface = match &cfg.surface {
        Some(s) => {
            let layer = weyl::RobinLayer {
                beta: s.beta,
                a_prime: s.a_prime,
                tau: s.tau,
            };
            Some(
                weyl::robin_surface_density(&layer, s.x1, s.y1)
                    .map_err(from_core)?,
            )
        }
        None => None,
    };
    let payload = serde_json::json!({
        "kappa1": kappa1,
        "tau1": cfg.tau1,
        "tau2": cfg.tau2,
        "surface_density": surface,
    });
    output::write_json(&args.output, hash, None, payload)
        .map_err(|e| io_err(&args.output, e))?;
    Ok(format!(
        "robin: kappa1 = {:.9e} -> {}",
        kappa1,
        args.output.display()
    ))
}

// ------------------------------------------------------------- spectrum

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long, value_enum, default_value_t = BcArg::Dirichlet)]
    bc: BcArg,
    #[arg(long)]
    lmax: f64,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn spectrum(args: SpectrumArgs) -> CmdResult {
    let domain = load_domain(&args.domain)?;
    let canonical = format!(
        "spectrum|{}|{:?}|{}",
        serde_json::to_string(&domain).unwrap(),
        args.bc,
        args.lmax
    );
    let hash = config_hash(&canonical);
    if !(args.lmax > 0.0) {
        return Err(config_err("lmax must be positive"));
    }
    let spec = exact_spectrum(&domain, args.bc.into(), args.lmax)?;
    let mut rows = Vec::new();
    let mut index = 0usize;
    for e in spec.entries.iter().filter(|e| e.lambda <= args.lmax) {
        index += 1;
        rows.push(format!(
            "{},{},{},{},{}",
            index,
            fmt_real(e.lambda),
            e.multiplicity,
            e.m,
            e.k
        ));
    }
    output::write_csv(
        &args.output,
        hash,
        None,
        "index,lambda,multiplicity,m,k",
        &rows,
    )
    .map_err(|e| io_err(&args.output, e))?;
    Ok(format!(
        "spectrum: {} distinct eigenvalues below {} -> {}",
        index,
        args.lmax,
        args.output.display()
    ))
}

// ------------------------------------------------------------ remainder

#[derive(Args)]
pub struct RemainderArgs {
    #[arg(long)]
    domain: PathBuf,
    /// Zone specification (JSON file with gamma_min, gamma_max, zeta_rule,
    /// delta1).
    #[arg(long)]
    zone: PathBuf,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

pub fn remainder(args: RemainderArgs) -> CmdResult {
    let domain = load_domain(&args.domain)?;
    let zone_text = std::fs::read_to_string(&args.zone).map_err(|e| io_err(&args.zone, e))?;
    let zone: ZoneSpec =
        serde_json::from_str(&zone_text).map_err(|e| config_err(e.to_string()))?;
    if !(zone.gamma_min >= 0.0 && zone.gamma_max >= zone.gamma_min) {
        return Err(config_err("need 0 <= gamma_min <= gamma_max"));
    }
    let canonical = format!(
        "remainder|{}|{}|{}|{}",
        serde_json::to_string(&domain).unwrap(),
        serde_json::to_string(&zone).unwrap(),
        args.samples,
        args.seed
    );
    let hash = config_hash(&canonical);
    let report = seeley::remainder_integral(&domain, &zone, args.samples, args.seed);
    let payload = serde_json::to_value(&report).map_err(|e| config_err(e.to_string()))?;
    output::write_json(&args.output, hash, Some(args.seed), payload)
        .map_err(|e| io_err(&args.output, e))?;
    Ok(format!(
        "remainder: estimate {:.6e} +- {:.2e} ({} samples) -> {}",
        report.estimate,
        report.stderr,
        report.samples,
        args.output.display()
    ))
}

