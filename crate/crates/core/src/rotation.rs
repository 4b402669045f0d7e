//! Rotation-number functions f(eta) for radially symmetric media, the
//! multi-annulus angle increment F, empirical estimators, and measure
//! estimates of near-periodic sets.

use crate::billiard::{self, BoundaryState, BranchPolicy, LayerHit, LayerRay};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::quad;
use crate::roots::{self, Bracket};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::sync::Arc;

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial medium on the unit disk: coefficients mu(r), V(r) (and lambda(r),
/// which only reparametrizes time and never enters the rotation number).
#[derive(Clone)]
pub struct RadialProfile {
    pub lambda: RadialFn,
    pub mu: RadialFn,
    pub v: RadialFn,
}

impl RadialProfile {
    pub fn new(
        lambda: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mu: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            lambda: Arc::new(lambda),
            mu: Arc::new(mu),
            v: Arc::new(v),
        }
    }

    /// Constant coefficients: the flat disk.
    pub fn flat_disk(mu: f64, alpha: f64) -> Self {
        Self::new(|_| 1.0, move |_| mu, move |_| alpha * alpha)
    }

    /// Spherical cap of opening `beta`: mu(r) = beta r / sin(beta r).
    pub fn spherical_cut(alpha: f64, beta: f64) -> Self {
        Self::new(
            |_| 1.0,
            move |r| beta * r / (beta * r).sin(),
            move |_| alpha * alpha,
        )
    }

    /// Cylinder reduced to radial form: the axial-coordinate integrand has no
    /// 1/r^2 weight, which the radial integrand reproduces with mu(r) = mu r.
    pub fn cylinder(mu: f64, alpha: f64) -> Self {
        Self::new(|_| 1.0, move |r| mu * r, move |_| alpha * alpha)
    }

    /// Turning threshold: the eta solving V(1) - mu(1)^2 eta^2 = 0. Beyond it
    /// the trajectory never reaches the boundary r = 1.
    pub fn eta0(&self) -> f64 {
        (self.v)(1.0).sqrt() / (self.mu)(1.0)
    }

    /// Radial "potential" W(r) = V(r) - mu(r)^2 eta^2 / r^2; the trajectory
    /// lives where W > 0.
    fn w(&self, r: f64, eta: f64) -> f64 {
        (self.v)(r) - ((self.mu)(r) * eta / r).powi(2)
    }
}

/// Closed-form rotation-number models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ClosedModel {
    FlatDisk { mu: f64, alpha: f64 },
    SphericalCut { alpha: f64, beta: f64 },
    Cylinder { mu: f64, alpha: f64 },
}

impl ClosedModel {
    /// Matching numeric profile for cross-checks.
    pub fn profile(&self) -> RadialProfile {
        match *self {
            ClosedModel::FlatDisk { mu, alpha } => RadialProfile::flat_disk(mu, alpha),
            ClosedModel::SphericalCut { alpha, beta } => RadialProfile::spherical_cut(alpha, beta),
            ClosedModel::Cylinder { mu, alpha } => RadialProfile::cylinder(mu, alpha),
        }
    }

    /// Largest |eta| the model admits.
    pub fn eta_max(&self) -> f64 {
        match *self {
            ClosedModel::FlatDisk { mu, alpha } => alpha / mu,
            ClosedModel::SphericalCut { alpha, beta } => alpha * beta.sin() / beta,
            ClosedModel::Cylinder { mu, alpha } => alpha / mu,
        }
    }

    /// Integration mode that reproduces this model numerically.
    pub fn traversal(&self) -> TraversalMode {
        match self {
            ClosedModel::Cylinder { .. } => TraversalMode::HitsInner,
            _ => TraversalMode::Turns,
        }
    }
}

/// Closed-form rotation number f(eta) (principal arcsin branch).
pub fn f_closed(model: &ClosedModel, eta: f64) -> Result<f64> {
    match *model {
        ClosedModel::FlatDisk { mu, alpha } => {
            let s = mu * eta / alpha;
            if s.abs() > 1.0 {
                return Err(Error::OutOfRange(format!(
                    "flat disk needs |mu eta / alpha| <= 1, got {s}"
                )));
            }
            Ok(mu * PI - 2.0 * mu * s.asin())
        }
        ClosedModel::SphericalCut { alpha, beta } => {
            let denom = alpha * alpha - beta * beta * eta * eta;
            if denom <= 0.0 {
                return Err(Error::OutOfRange(format!(
                    "spherical cut needs |beta eta| < alpha, got beta eta = {}",
                    beta * eta
                )));
            }
            let arg = beta * eta / denom.sqrt() / beta.tan();
            if arg.abs() > 1.0 {
                return Err(Error::OutOfRange(format!(
                    "spherical cut arcsin argument {arg} leaves [-1, 1]"
                )));
            }
            Ok(PI - 2.0 * arg.asin())
        }
        ClosedModel::Cylinder { mu, alpha } => {
            let denom = alpha * alpha - mu * mu * eta * eta;
            if denom <= 0.0 {
                return Err(Error::OutOfRange(format!(
                    "cylinder needs |mu eta| < alpha, got mu eta = {}",
                    mu * eta
                )));
            }
            Ok(2.0 * mu * mu * eta / denom.sqrt())
        }
    }
}

/// How the radial trajectory closes one period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraversalMode {
    /// Full crossing of (0, 1] (cylinder-type geometry).
    HitsInner,
    /// Reflection at the turning radius r1(eta), the largest root of
    /// V - mu^2 eta^2 / r^2 in (0, 1).
    Turns,
}

/// Angle increment between consecutive boundary hits by adaptive quadrature
/// of the radial integrand; the inverse-square-root singularity at the
/// turning radius is removed by the substitution s = sqrt(r - r1).
///
/// The integral is odd in eta. For eta < 0 it differs from the closed-form
/// branch (which stays in (0, 2 pi)) by one full turn; both describe the
/// same circle rotation.
pub fn f_numeric(profile: &RadialProfile, eta: f64, mode: TraversalMode) -> Result<f64> {
    if eta == 0.0 {
        return Ok(match mode {
            TraversalMode::HitsInner => 0.0,
            TraversalMode::Turns => PI, // radial chord straight through
        });
    }
    match mode {
        TraversalMode::HitsInner => {
            // the integrand must stay regular down to the center
            for i in 1..=64 {
                let r = i as f64 / 64.0;
                if profile.w(r, eta) <= 0.0 {
                    return Err(Error::OutOfRange(format!(
                        "trajectory turns before reaching the center (W({r}) <= 0); \
                         use the Turns mode"
                    )));
                }
            }
            let g = |r: f64| {
                let mu = (profile.mu)(r);
                let w = profile.w(r, eta);
                if w <= 0.0 {
                    return 0.0;
                }
                mu * mu * eta / (r * r * w.sqrt())
            };
            Ok(2.0 * quad::integrate(g, 0.0, 1.0, 1e-10, 1e-14).value)
        }
        TraversalMode::Turns => {
            let r1 = turning_radius(profile, eta)?;
            let span = 1.0 - r1;
            let integrand = |s: f64| {
                let r = r1 + s * s;
                let mu = (profile.mu)(r);
                let w = profile.w(r, eta);
                if w <= 0.0 {
                    return 0.0;
                }
                2.0 * s * mu * mu * eta / (r * r * w.sqrt())
            };
            Ok(2.0 * quad::integrate(integrand, 0.0, span.sqrt(), 1e-10, 1e-14).value)
        }
    }
}

/// Largest root of V(r) - mu(r)^2 eta^2 / r^2 in (0, 1): bracketed bisection
/// plus a Newton polish (numeric derivative) to 1e-13.
pub fn turning_radius(profile: &RadialProfile, eta: f64) -> Result<f64> {
    if profile.w(1.0, eta) <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "eta = {eta} at or beyond the turning threshold eta0 = {}",
            profile.eta0()
        )));
    }
    let w = |r: f64| profile.w(r, eta);
    let brackets = roots::scan_sign_changes(&w, 1e-6, 1.0, 400);
    let bracket: Bracket = *brackets.last().ok_or(Error::RootNotBracketed)?;
    let h = 1e-7;
    let dw = |r: f64| (w(r + h) - w(r - h)) / (2.0 * h);
    Ok(roots::bisect_newton(&w, &dw, bracket, 1e-13))
}

/// Total central-angle increment of a multi-annulus billiard with `n[k]`
/// segments in layer k: layers reached through their inner radius contribute
/// n_k (arcsin(eta/(r_k c_k)) - arcsin(eta/(R_k c_k))), chord layers
/// n_k (pi - 2 arcsin(eta/(R_k c_k))); odd in eta.
pub fn f_multi_annulus(layers: &Domain, eta: f64, n: &[usize]) -> Result<f64> {
    let Domain::RadialLayers { radii, speeds } = layers else {
        return Err(Error::WrongDomain("needs radial_layers"));
    };
    if n.len() != speeds.len() {
        return Err(Error::OutOfRange(format!(
            "need one segment count per layer: {} counts for {} layers",
            n.len(),
            speeds.len()
        )));
    }
    if eta < 0.0 {
        return Ok(-f_multi_annulus(layers, -eta, n)?);
    }
    let mut total = 0.0;
    for (k, (&nk, &ck)) in n.iter().zip(speeds.iter()).enumerate() {
        if nk == 0 {
            continue;
        }
        let outer = radii[k];
        let inner = radii[k + 1];
        if inner > 0.0 && eta <= ck * inner {
            total += nk as f64 * ((eta / (inner * ck)).asin() - (eta / (outer * ck)).asin());
        } else if eta <= ck * outer {
            total += nk as f64 * (PI - 2.0 * (eta / (outer * ck)).asin());
        } else {
            return Err(Error::InaccessibleLayer { layer: k, eta });
        }
    }
    Ok(total)
}

/// Mean central-angle increment per boundary-map application, measured on a
/// circularly symmetric table. The sign follows the sense of rotation.
pub fn rotation_empirical(domain: &Domain, s0: &BoundaryState, bounces: usize) -> Result<f64> {
    match domain {
        Domain::Disk { .. } | Domain::CircularAnnulus { .. } => {
            let mut s = *s0;
            let sense = s.point.cross(s.xi);
            let mut total = 0.0;
            for _ in 0..bounces {
                let (next, _) = billiard::boundary_map(domain, &s)?;
                total += angle_increment(s.u, next.u, sense);
                s = next;
            }
            Ok(total / bounces as f64)
        }
        Domain::RadialLayers { radii, .. } => {
            let mut ray = LayerRay {
                point: s0.point,
                xi: s0.xi,
                layer: 0,
            };
            let sense = s0.point.cross(s0.xi);
            let mut total = 0.0;
            let mut returns = 0usize;
            let mut guard = 0usize;
            while returns < bounces {
                guard += 1;
                if guard > bounces.saturating_mul(64) + 1024 {
                    return Err(Error::OutOfRange(
                        "orbit failed to return to the outer boundary".into(),
                    ));
                }
                let (arrived, hit, _) = billiard::layer_flight(domain, &ray)?;
                // accumulate per flight segment: each stays strictly below a
                // half turn, so the unwrap is unambiguous even when a single
                // outer return winds more than once
                total += angle_increment(ray.point.angle(), arrived.point.angle(), sense);
                let succ = billiard::branch_step(domain, &arrived, hit, BranchPolicy::Refract)?;
                ray = succ[0].ray;
                if hit == LayerHit::Wall
                    && (arrived.point.norm() - radii[0]).abs() < 1e-9 * radii[0]
                {
                    returns += 1;
                }
            }
            Ok(total / bounces as f64)
        }
        _ => Err(Error::WrongDomain(
            "rotation estimator needs a circularly symmetric table",
        )),
    }
}

/// Increment u -> u' unwrapped by the sense of rotation: nonnegative for
/// counterclockwise motion, nonpositive for clockwise, and pi for a diameter.
fn angle_increment(u: f64, u_next: f64, sense: f64) -> f64 {
    let raw = (u_next - u).rem_euclid(TAU);
    if sense > 0.0 {
        raw
    } else if sense < 0.0 {
        raw - TAU
    } else {
        PI
    }
}

/// Sampled rotation-number function on an eta grid.
#[derive(Clone)]
pub struct RotationProfile {
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    /// (min |f'|, max |f'|) over interior grid cells.
    pub derivative_bounds: (f64, f64),
    resample: Option<RadialFn>,
}

impl RotationProfile {
    /// Sample `f` on `points` uniform nodes of [lo, hi], keeping the callable
    /// for local refinement near level crossings.
    pub fn sample(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Self {
        assert!(points >= 2 && hi > lo);
        let eta: Vec<f64> = (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect();
        let values: Vec<f64> = eta.iter().map(|&e| f(e)).collect();
        let mut profile = Self {
            eta,
            f: values,
            derivative_bounds: (0.0, 0.0),
            resample: Some(Arc::new(f)),
        };
        profile.derivative_bounds = profile.compute_derivative_bounds();
        profile
    }

    /// Wrap already-tabulated values (no refinement possible).
    pub fn from_table(eta: Vec<f64>, f: Vec<f64>) -> Self {
        assert_eq!(eta.len(), f.len());
        assert!(eta.windows(2).all(|w| w[1] > w[0]), "grid must increase");
        let mut profile = Self {
            eta,
            f,
            derivative_bounds: (0.0, 0.0),
            resample: None,
        };
        profile.derivative_bounds = profile.compute_derivative_bounds();
        profile
    }

    fn compute_derivative_bounds(&self) -> (f64, f64) {
        let mut min_d = f64::INFINITY;
        let mut max_d = 0.0f64;
        for (es, fs) in self.eta.windows(2).zip(self.f.windows(2)) {
            let d = ((fs[1] - fs[0]) / (es[1] - es[0])).abs();
            min_d = min_d.min(d);
            max_d = max_d.max(d);
        }
        (min_d, max_d)
    }

    /// Finite-difference slopes at the grid nodes (one-sided at the ends).
    pub fn slopes(&self) -> Vec<f64> {
        let n = self.eta.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            out[i] = (self.f[b] - self.f[a]) / (self.eta[b] - self.eta[a]);
        }
        out
    }
}

/// Lebesgue measure of { eta : |f(eta) - 2 pi k / l| <= eps for some
/// k, l <= n }, by scanning the sampled profile with linear interpolation.
/// Cells containing a window edge are locally resampled when the profile
/// carries its generating callable.
pub fn periodic_measure_1d(profile: &RotationProfile, n: usize, eps: f64) -> f64 {
    if eps < 0.0 {
        return 0.0;
    }
    let f_lo = profile.f.iter().cloned().fold(f64::INFINITY, f64::min) - eps;
    let f_hi = profile.f.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + eps;
    // reduced fractions k/l with k, l <= n, levels 2 pi k / l inside range
    let mut levels: Vec<f64> = Vec::new();
    for l in 1..=n {
        for k in 1..=n {
            if gcd(k, l) != 1 {
                continue;
            }
            let level = TAU * k as f64 / l as f64;
            if level >= f_lo && level <= f_hi {
                levels.push(level);
            }
        }
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    if levels.is_empty() {
        return 0.0;
    }
    // merge the level windows [L - eps, L + eps]
    let mut windows: Vec<(f64, f64)> = Vec::new();
    for level in levels {
        let (lo, hi) = (level - eps, level + eps);
        match windows.last_mut() {
            Some(w) if lo <= w.1 => w.1 = hi.max(w.1),
            _ => windows.push((lo, hi)),
        }
    }
    let mut measure = 0.0;
    for (i, cell) in profile.eta.windows(2).enumerate() {
        let (e0, e1) = (cell[0], cell[1]);
        let (fa, fb) = (profile.f[i], profile.f[i + 1]);
        let (lo_f, hi_f) = if fa <= fb { (fa, fb) } else { (fb, fa) };
        let crosses_edge = windows
            .iter()
            .any(|&(lo, hi)| (lo_f < lo && hi_f > lo) || (lo_f < hi && hi_f > hi));
        if crosses_edge {
            if let Some(f) = &profile.resample {
                measure += cell_measure_refined(f, e0, e1, &windows, 6);
                continue;
            }
        }
        measure += cell_measure_linear(e0, e1, fa, fb, &windows);
    }
    measure
}

fn cell_measure_linear(e0: f64, e1: f64, f0: f64, f1: f64, windows: &[(f64, f64)]) -> f64 {
    let width = e1 - e0;
    let (lo_f, hi_f) = if f0 <= f1 { (f0, f1) } else { (f1, f0) };
    let slope = (f1 - f0).abs() / width;
    let mut acc = 0.0;
    for &(lo, hi) in windows {
        let overlap = (hi.min(hi_f) - lo.max(lo_f)).max(0.0);
        if overlap <= 0.0 {
            continue;
        }
        acc += if slope < 1e-300 {
            width
        } else {
            (overlap / slope).min(width)
        };
    }
    acc.min(width)
}

fn cell_measure_refined(
    f: &RadialFn,
    e0: f64,
    e1: f64,
    windows: &[(f64, f64)],
    depth: usize,
) -> f64 {
    let mid = 0.5 * (e0 + e1);
    if depth == 0 || mid <= e0 || mid >= e1 {
        return cell_measure_linear(e0, e1, f(e0), f(e1), windows);
    }
    cell_measure_refined(f, e0, mid, windows, depth - 1)
        + cell_measure_refined(f, mid, e1, windows, depth - 1)
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Monte-Carlo estimate of the fraction of boundary states whose orbit
/// returns within `eps` (phase-space distance) of the start at some bounce
/// time in (eps0, t_max].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhaseMeasureReport {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    /// Orbits hitting the exceptional set; excluded from the estimate.
    pub exceptional: u64,
}

/// Near-periodic phase-space measure on the unit cotangent shell. Sampling
/// is uniform in (boundary arc, incidence angle) weighted by the normal
/// momentum, matching the invariant boundary measure; each batch derives its
/// own seed stream, so results reproduce for a fixed seed at any thread
/// count.
pub fn near_periodic_phase_measure(
    domain: &Domain,
    t_max: f64,
    eps: f64,
    eps0: f64,
    samples: u64,
    seed: u64,
) -> PhaseMeasureReport {
    const BATCH: u64 = 2048;
    let batches = samples.div_ceil(BATCH);
    let period = match domain {
        Domain::Polygon { .. } => domain.metrics().1,
        _ => TAU,
    };
    let results: Vec<(u64, u64)> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(samples - b * BATCH);
            let mut hits = 0u64;
            let mut exceptional = 0u64;
            'sample: for _ in 0..count {
                let u = rng.gen_range(0.0..period);
                // density proportional to cos(phi): sin(phi) drawn uniformly
                let phi = rng.gen_range(-1.0f64..1.0).asin();
                let Ok(s0) = BoundaryState::from_incidence(domain, u, phi) else {
                    exceptional += 1;
                    continue;
                };
                let mut s = s0;
                let mut t = 0.0;
                for _ in 0..100_000 {
                    match billiard::boundary_map(domain, &s) {
                        Ok((next, dt)) => {
                            t += dt;
                            if t > t_max {
                                continue 'sample;
                            }
                            let dist2 = (next.point - s0.point).norm_squared()
                                + (next.xi - s0.xi).norm_squared();
                            if t > eps0 && dist2 <= eps * eps {
                                hits += 1;
                                continue 'sample;
                            }
                            s = next;
                        }
                        Err(_) => {
                            exceptional += 1;
                            continue 'sample;
                        }
                    }
                }
            }
            (hits, exceptional)
        })
        .collect();
    let hits: u64 = results.iter().map(|r| r.0).sum();
    let exceptional: u64 = results.iter().map(|r| r.1).sum();
    let valid = samples - exceptional;
    let p = if valid > 0 {
        hits as f64 / valid as f64
    } else {
        0.0
    };
    let stderr = if valid > 0 {
        (p * (1.0 - p) / valid as f64).sqrt()
    } else {
        0.0
    };
    PhaseMeasureReport {
        estimate: p,
        stderr,
        samples,
        seed,
        exceptional,
    }
}

/// Shared-monotonicity / small-denominator diagnostics for a family of
/// rotation-number functions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiophantineReport {
    /// Monotonicity sign per profile: -1 decreasing, +1 increasing, 0 mixed.
    pub monotone_signs: Vec<i8>,
    /// All profiles share one strict monotonicity sign.
    pub shared_sign: bool,
    /// Minimum over scanned (n, q, eta) of
    /// |sum_j n_j f_j(eta) - 2 pi q| + sum of derivative magnitudes.
    pub scan_minimum: f64,
    /// Arguments attaining the minimum: (n, q, eta).
    pub attained: (Vec<usize>, usize, f64),
    pub verdict: String,
}

/// Inspect shared monotonicity and scan the small-denominator combinations
/// n . f(eta) - 2 pi q for n_j <= n_max, q <= q_max, adding `k_derivatives`
/// finite-difference derivative magnitudes. The measured minimum is
/// reported, never asserted against a q^{-K} threshold.
pub fn diophantine_check(
    profiles: &[RotationProfile],
    n_max: usize,
    q_max: usize,
    k_derivatives: usize,
) -> DiophantineReport {
    let monotone_signs: Vec<i8> = profiles
        .iter()
        .map(|p| {
            let mut increasing = true;
            let mut decreasing = true;
            for w in p.f.windows(2) {
                if w[1] <= w[0] {
                    increasing = false;
                }
                if w[1] >= w[0] {
                    decreasing = false;
                }
            }
            match (increasing, decreasing) {
                (true, false) => 1,
                (false, true) => -1,
                _ => 0,
            }
        })
        .collect();
    let shared_sign = monotone_signs.iter().all(|s| *s == 1)
        || monotone_signs.iter().all(|s| *s == -1);

    // common eta range, coarsest resolution
    let lo = profiles
        .iter()
        .map(|p| p.eta[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = profiles
        .iter()
        .map(|p| *p.eta.last().unwrap())
        .fold(f64::INFINITY, f64::min);
    let grid_n = profiles.iter().map(|p| p.eta.len()).min().unwrap_or(2);
    let mut scan_minimum = f64::INFINITY;
    let mut attained = (vec![0; profiles.len()], 0usize, f64::NAN);
    if hi > lo {
        let combos = enumerate_combos(profiles.len(), n_max);
        let h = (hi - lo) / (grid_n - 1).max(1) as f64;
        for combo in &combos {
            for q in 1..=q_max {
                for i in 0..grid_n {
                    let eta = lo + h * i as f64;
                    let value = |e: f64| -> f64 {
                        combo
                            .iter()
                            .zip(profiles.iter())
                            .map(|(&nj, p)| nj as f64 * interp(p, e))
                            .sum()
                    };
                    let mut s = (value(eta) - TAU * q as f64).abs();
                    let mut step = h.max(1e-6);
                    for _ in 1..k_derivatives {
                        let e_lo = (eta - step).max(lo);
                        let e_hi = (eta + step).min(hi);
                        if e_hi <= e_lo {
                            break;
                        }
                        s += ((value(e_hi) - value(e_lo)) / (e_hi - e_lo)).abs();
                        step *= 2.0;
                    }
                    if s < scan_minimum {
                        scan_minimum = s;
                        attained = (combo.clone(), q, eta);
                    }
                }
            }
        }
    }
    let verdict = if shared_sign {
        let sign = if monotone_signs[0] > 0 {
            "increasing"
        } else {
            "decreasing"
        };
        format!("shared strict monotonicity ({sign}): non-periodicity criterion satisfied")
    } else {
        format!(
            "mixed monotonicity; small-denominator scan minimum {scan_minimum:.6e} \
             at n = {:?}, q = {}",
            attained.0, attained.1
        )
    };
    DiophantineReport {
        monotone_signs,
        shared_sign,
        scan_minimum,
        attained,
        verdict,
    }
}

fn interp(p: &RotationProfile, eta: f64) -> f64 {
    let n = p.eta.len();
    if eta <= p.eta[0] {
        return p.f[0];
    }
    if eta >= p.eta[n - 1] {
        return p.f[n - 1];
    }
    let mut lo = 0;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if p.eta[mid] <= eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = (eta - p.eta[lo]) / (p.eta[hi] - p.eta[lo]);
    p.f[lo] + t * (p.f[hi] - p.f[lo])
}

fn enumerate_combos(m: usize, n_max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; m];
    loop {
        if current.iter().any(|&c| c > 0) {
            out.push(current.clone());
        }
        let mut i = 0;
        loop {
            if i == m {
                return out;
            }
            current[i] += 1;
            if current[i] <= n_max {
                break;
            }
            current[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_6;

    #[test]
    fn flat_disk_closed_form() {
        let m = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        assert_relative_eq!(f_closed(&m, 0.0).unwrap(), PI, epsilon = 1e-15);
        // inscribed-triangle chord oracle: eta = sin(pi/6) = 0.5 gives the
        // equilateral triangle, central angle 2 pi / 3
        assert_relative_eq!(f_closed(&m, 0.5).unwrap(), 2.0 * PI / 3.0, epsilon = 1e-14);
        // continuous vanishing at the turning threshold
        assert_relative_eq!(f_closed(&m, 1.0).unwrap(), 0.0, epsilon = 1e-12);
        assert!(f_closed(&m, 1.01).is_err());
    }

    #[test]
    fn cylinder_closed_form() {
        let m = ClosedModel::Cylinder { mu: 1.0, alpha: 1.0 };
        let eta = 1.0 / 2f64.sqrt();
        assert_relative_eq!(f_closed(&m, eta).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn numeric_matches_closed_flat_disk() {
        let model = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        let profile = model.profile();
        for i in 1..=20 {
            let eta = i as f64 * 0.0475;
            let closed = f_closed(&model, eta).unwrap();
            let numeric = f_numeric(&profile, eta, TraversalMode::Turns).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-9,
                "eta = {eta}: closed {closed} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn numeric_matches_closed_spherical_cut() {
        let model = ClosedModel::SphericalCut { alpha: 1.0, beta: 0.9 };
        let profile = model.profile();
        let eta_max = model.eta_max();
        for i in 1..=10 {
            let eta = eta_max * i as f64 / 12.0;
            let closed = f_closed(&model, eta).unwrap();
            let numeric = f_numeric(&profile, eta, TraversalMode::Turns).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-9,
                "eta = {eta}: closed {closed} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn numeric_matches_closed_cylinder() {
        let model = ClosedModel::Cylinder { mu: 1.0, alpha: 1.0 };
        let profile = model.profile();
        for i in 1..=10 {
            let eta = 0.9 * i as f64 / 10.0;
            let closed = f_closed(&model, eta).unwrap();
            let numeric = f_numeric(&profile, eta, TraversalMode::HitsInner).unwrap();
            assert!(
                (closed - numeric).abs() < 1e-9,
                "eta = {eta}: closed {closed} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn numeric_vanishes_continuously_at_the_turning_threshold() {
        // flat disk: f -> 0 as eta -> eta0 from below (arcsin -> pi/2)
        let profile = RadialProfile::flat_disk(1.0, 1.0);
        let mut prev = f64::INFINITY;
        for &eta in &[0.9, 0.99, 0.999, 0.9999] {
            let f = f_numeric(&profile, eta, TraversalMode::Turns).unwrap();
            assert!(f < prev && f > 0.0, "f({eta}) = {f} not decreasing to 0");
            prev = f;
        }
        assert!(prev < 0.06, "f(0.9999) = {prev} too far from 0");
    }

    #[test]
    fn negative_eta_lifts_differ_by_full_turn() {
        let model = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        let profile = model.profile();
        let eta = -0.81;
        let closed = f_closed(&model, eta).unwrap();
        let numeric = f_numeric(&profile, eta, TraversalMode::Turns).unwrap();
        assert_relative_eq!(closed - numeric, TAU, epsilon = 1e-9);
    }

    #[test]
    fn turning_radius_flat_disk() {
        // r1 = mu eta / alpha for the flat disk
        let profile = RadialProfile::flat_disk(1.0, 1.0);
        let r1 = turning_radius(&profile, 0.37).unwrap();
        assert_relative_eq!(r1, 0.37, epsilon = 1e-12);
        assert!(turning_radius(&profile, 1.2).is_err());
    }

    #[test]
    fn multi_annulus_degenerations() {
        // single layer, chord regime: flat-disk formula recovered
        let one = Domain::radial_layers(vec![1.0, 0.5], vec![1.0]).unwrap();
        let eta = 0.7; // > c r = 0.5: misses the inner boundary
        let f = f_multi_annulus(&one, eta, &[1]).unwrap();
        assert_relative_eq!(f, PI - 2.0 * eta.asin(), epsilon = 1e-14);

        // eta = 0: every chord layer contributes pi per segment
        let disk = Domain::radial_layers(vec![1.0, 0.0], vec![2.0]).unwrap();
        assert_relative_eq!(
            f_multi_annulus(&disk, 0.0, &[3]).unwrap(),
            3.0 * PI,
            epsilon = 1e-14
        );

        // term-by-term hand evaluation for two layers at eta = 0.3:
        // layer 0 reaches its inner radius (0.3 <= 1 * 0.5), layer 1 is a
        // chord layer (inner radius 0, R c = 1)
        let two = Domain::radial_layers(vec![1.0, 0.5, 0.0], vec![1.0, 2.0]).unwrap();
        let eta = 0.3;
        let expect =
            ((0.3f64 / 0.5).asin() - 0.3f64.asin()) + (PI - 2.0 * (0.3f64 / 1.0).asin());
        assert_relative_eq!(
            f_multi_annulus(&two, eta, &[1, 1]).unwrap(),
            expect,
            epsilon = 1e-14
        );

        // inaccessible layer with a positive count errors
        assert!(matches!(
            f_multi_annulus(&two, 1.2, &[1, 0]),
            Err(Error::InaccessibleLayer { layer: 0, .. })
        ));

        // additivity in n
        let f12 = f_multi_annulus(&two, eta, &[1, 2]).unwrap();
        let f34 = f_multi_annulus(&two, eta, &[3, 4]).unwrap();
        let f46 = f_multi_annulus(&two, eta, &[4, 6]).unwrap();
        assert_relative_eq!(f12 + f34, f46, epsilon = 1e-12);

        // odd in eta
        let fp = f_multi_annulus(&two, 0.4, &[2, 1]).unwrap();
        let fm = f_multi_annulus(&two, -0.4, &[2, 1]).unwrap();
        assert_relative_eq!(fp, -fm, epsilon = 1e-15);
    }

    #[test]
    fn empirical_matches_closed_form_on_disk() {
        let disk = Domain::disk(1.0).unwrap();
        let s0 = BoundaryState::from_incidence(&disk, 0.2, FRAC_PI_6).unwrap();
        let mean = rotation_empirical(&disk, &s0, 1000).unwrap().abs();
        assert_relative_eq!(mean, 2.0 * PI / 3.0, epsilon = 1e-9);

        // diameter orbit advances by exactly pi
        let s0 = BoundaryState::from_incidence(&disk, 1.0, 0.0).unwrap();
        let mean = rotation_empirical(&disk, &s0, 10).unwrap().abs();
        assert_relative_eq!(mean, PI, epsilon = 1e-12);
    }

    #[test]
    fn empirical_on_annulus_chord_matches_flat_disk() {
        // chord missing the inner disk behaves like the flat disk
        let ann = Domain::circular_annulus(1.0, 0.3).unwrap();
        let phi = 0.6f64; // sin(0.6) = 0.56 > 0.3: misses the hole
        let s0 = BoundaryState::from_incidence(&ann, 0.9, phi).unwrap();
        let mean = rotation_empirical(&ann, &s0, 500).unwrap().abs();
        let model = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        assert_relative_eq!(mean, f_closed(&model, phi.sin()).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn empirical_on_layers_matches_multi_annulus_formula() {
        // two layers, no inner hole: one outer return crosses the interface
        // twice and takes one chord through the fast core, so the mean
        // increment per return is F(eta, (2, 1))
        let dom = Domain::radial_layers(vec![1.0, 0.5, 0.0], vec![1.0, 2.0]).unwrap();
        let phi: f64 = 0.25; // sin phi = 0.247 < 0.5: the interface is reached
        let s0 = BoundaryState::from_incidence(&dom, 0.4, phi).unwrap();
        let eta = s0.point.cross(s0.xi) * 1.0; // rho c sin at the outer wall
        let mean = rotation_empirical(&dom, &s0, 400).unwrap().abs();
        let expect = f_multi_annulus(&dom, eta.abs(), &[2, 1]).unwrap();
        assert_relative_eq!(mean, expect, epsilon = 1e-9);
    }

    #[test]
    fn flat_disk_profile_is_strictly_decreasing() {
        let model = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        let prof =
            RotationProfile::sample(move |e| f_closed(&model, e).unwrap(), -0.999, 0.999, 4001);
        assert!(prof.f.windows(2).all(|w| w[1] < w[0]));
        // |f'| >= 2 everywhere on the sampled range
        assert!(prof.derivative_bounds.0 >= 2.0 - 1e-6);
    }

    #[test]
    fn periodic_measure_flat_disk() {
        let model = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        let prof = RotationProfile::sample(
            move |e| f_closed(&model, e.clamp(-1.0, 1.0)).unwrap(),
            -1.0,
            1.0,
            120_001,
        );
        // only the level 2 pi / 2 = pi is interior; its window maps to eta
        // measure 2 sin(eps/2), plus endpoint slivers of order 1e-5
        let est = periodic_measure_1d(&prof, 2, 0.01);
        let expect = 2.0 * (0.005f64).sin();
        assert!(
            (est - expect).abs() < 5e-5,
            "measure {est} vs chord value {expect}"
        );
        // eps = 0 gives measure zero for a strictly monotone profile
        assert_eq!(periodic_measure_1d(&prof, 2, 0.0), 0.0);
        // monotone in eps and in n
        let e1 = periodic_measure_1d(&prof, 4, 0.001);
        let e2 = periodic_measure_1d(&prof, 4, 0.01);
        let e3 = periodic_measure_1d(&prof, 7, 0.01);
        assert!(e1 <= e2 && e2 <= e3);
    }

    #[test]
    fn near_periodic_measure_monotone_in_eps() {
        let disk = Domain::disk(1.0).unwrap();
        let r1 = near_periodic_phase_measure(&disk, 10.0, 1e-1, 0.2, 4000, 11);
        let r2 = near_periodic_phase_measure(&disk, 10.0, 1e-2, 0.2, 4000, 11);
        let r3 = near_periodic_phase_measure(&disk, 10.0, 1e-3, 0.2, 4000, 11);
        assert!(r1.estimate >= r2.estimate && r2.estimate >= r3.estimate);
        // trivially full when eps exceeds the phase-space diameter
        let all = near_periodic_phase_measure(&disk, 10.0, 10.0, 0.2, 500, 3);
        assert_relative_eq!(all.estimate, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn near_periodic_measure_on_square_is_small_positive() {
        // low-period channels (near-normal bouncing) dominate at tight eps
        let square = Domain::unit_square();
        let rep = near_periodic_phase_measure(&square, 10.0, 1e-3, 0.2, 40_000, 5);
        assert!(rep.estimate > 0.0, "expected a small positive estimate");
        assert!(rep.estimate < 0.05, "estimate {} suspiciously large", rep.estimate);
        let again = near_periodic_phase_measure(&square, 10.0, 1e-3, 0.2, 40_000, 5);
        assert_eq!(rep.estimate, again.estimate);
    }

    #[test]
    fn near_periodic_measure_deterministic_per_seed() {
        let disk = Domain::disk(1.0).unwrap();
        let a = near_periodic_phase_measure(&disk, 8.0, 1e-2, 0.2, 3000, 42);
        let b = near_periodic_phase_measure(&disk, 8.0, 1e-2, 0.2, 3000, 42);
        assert_eq!(a.estimate, b.estimate);
        assert_eq!(a.exceptional, b.exceptional);
    }

    #[test]
    fn diophantine_verdicts() {
        let flat = ClosedModel::FlatDisk { mu: 1.0, alpha: 1.0 };
        let cyl = ClosedModel::Cylinder { mu: 1.0, alpha: 1.0 };
        let f1 = RotationProfile::sample(move |e| f_closed(&flat, e).unwrap(), 0.01, 0.95, 512);
        let f2 = RotationProfile::sample(move |e| f_closed(&flat, e).unwrap(), 0.01, 0.9, 512);
        let rep = diophantine_check(&[f1.clone(), f2], 3, 4, 3);
        assert!(rep.shared_sign);
        assert_eq!(rep.monotone_signs, vec![-1, -1]);

        let g = RotationProfile::sample(move |e| f_closed(&cyl, e).unwrap(), 0.01, 0.9, 512);
        assert_eq!(diophantine_check(&[g.clone()], 2, 2, 3).monotone_signs, vec![1]);

        let mixed = diophantine_check(&[f1, g], 2, 2, 3);
        assert!(!mixed.shared_sign);
        assert!(mixed.verdict.contains("scan minimum"));
        assert!(mixed.scan_minimum.is_finite());
    }
}
