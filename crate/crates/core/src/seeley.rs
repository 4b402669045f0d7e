//! Boundary-rescaling quantities: the scaling function gamma, capped escape
//! times from interior zones, Monte-Carlo remainder integrals, boundary-layer
//! volumes, and the boundary-regularity modulus integrals.

use crate::billiard::PhasePoint;
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::quad;
use crate::vec2::Vec2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Scaling function gamma(x) = dist(x, boundary) / 2.
pub fn gamma(domain: &Domain, x: Vec2) -> f64 {
    0.5 * domain.signed_distance(x)
}

/// Rule assigning the inner-zone margin zeta to a local scale gamma.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ZetaRule {
    /// zeta(gamma) = gamma^(2 - delta).
    PowerRule { delta: f64 },
    Fixed { zeta: f64 },
}

impl ZetaRule {
    pub fn zeta(&self, g: f64) -> f64 {
        match *self {
            ZetaRule::PowerRule { delta } => g.powf(2.0 - delta),
            ZetaRule::Fixed { zeta } => zeta,
        }
    }
}

/// Rule assigning the propagation-time cap T0 to a local scale gamma.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum T0Rule {
    /// T0(gamma) = gamma^(1 - delta1).
    Power { delta1: f64 },
    /// Smooth-boundary rule T0(gamma) = min(gamma^(1/2), h^(-delta) gamma);
    /// as h shrinks it relaxes toward the tangential scale gamma^(1/2).
    SeeleyCap { h: f64, delta: f64 },
}

impl T0Rule {
    pub fn t0(&self, g: f64) -> f64 {
        match *self {
            T0Rule::Power { delta1 } => g.powf(1.0 - delta1),
            T0Rule::SeeleyCap { h, delta } => g.sqrt().min(h.powf(-delta) * g),
        }
    }
}

/// What T* means for a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeModel {
    /// T* = min(T+ + T-, 2 T0): straight-chord escape capped by the rule.
    #[default]
    CappedEscape,
    /// T* = 2 T0(gamma): the positional rule alone (the smooth-boundary
    /// heuristic, where incoming rays are time-reversed instead of followed
    /// to the boundary).
    RuleOnly,
}

/// Zone of the boundary-distance stratification together with its scaling
/// rules: gamma ranges over [gamma_min, gamma_max], the escape margin comes
/// from `zeta_rule` and the time cap from `t0_rule`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub zeta_rule: ZetaRule,
    pub t0_rule: T0Rule,
    #[serde(default)]
    pub time_model: TimeModel,
}

impl ZoneSpec {
    /// Zone with the power-law cap T0 = gamma^(1 - delta1).
    pub fn power(gamma_min: f64, gamma_max: f64, zeta_rule: ZetaRule, delta1: f64) -> Self {
        Self {
            gamma_min,
            gamma_max,
            zeta_rule,
            t0_rule: T0Rule::Power { delta1 },
            time_model: TimeModel::CappedEscape,
        }
    }

    pub fn t0(&self, g: f64) -> f64 {
        self.t0_rule.t0(g)
    }
}

/// Escape times of the straight chord from the zone X_zeta = { gamma >= zeta }.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EscapeTimes {
    pub t_plus: f64,
    pub t_minus: f64,
    /// min(t_plus + t_minus, 2 T0).
    pub t_star: f64,
}

/// Forward/backward escape times of the straight-line trajectory from
/// X_zeta, and their sum capped by 2 T0. Straight chords suffice: the
/// trajectory leaves the interior zone strictly before any boundary contact.
pub fn capped_escape_time(
    domain: &Domain,
    z: &PhasePoint,
    zeta: f64,
    t0: f64,
) -> Result<EscapeTimes> {
    if gamma(domain, z.x) < zeta {
        return Err(Error::OutsideZone);
    }
    let t_plus = exit_time(domain, z.x, z.xi, zeta);
    let t_minus = exit_time(domain, z.x, -z.xi, zeta);
    Ok(EscapeTimes {
        t_plus,
        t_minus,
        t_star: (t_plus + t_minus).min(2.0 * t0),
    })
}

/// First time the ray leaves { gamma >= zeta }.
fn exit_time(domain: &Domain, x: Vec2, xi: Vec2, zeta: f64) -> f64 {
    match domain {
        Domain::Disk { r } => {
            circle_exit(x, xi, r - 2.0 * zeta).unwrap_or(0.0)
        }
        Domain::CircularAnnulus { r_outer, r_inner } => {
            radial_band_exit(x, xi, r_inner + 2.0 * zeta, r_outer - 2.0 * zeta)
        }
        Domain::RadialLayers { radii, .. } => {
            let inner = radii[radii.len() - 1];
            if inner > 0.0 {
                radial_band_exit(x, xi, inner + 2.0 * zeta, radii[0] - 2.0 * zeta)
            } else {
                circle_exit(x, xi, radii[0] - 2.0 * zeta).unwrap_or(0.0)
            }
        }
        _ => march_exit(domain, x, xi, zeta),
    }
}

/// Geometric march along the ray using the 1/2-Lipschitz bound on gamma:
/// from gamma = g > zeta the first crossing is at least 2 (g - zeta) away.
fn march_exit(domain: &Domain, x: Vec2, xi: Vec2, zeta: f64) -> f64 {
    let tol = 1e-13 * domain.diameter().max(1.0);
    let mut t = 0.0;
    for _ in 0..256 {
        let g = gamma(domain, x + xi * t);
        let slack = g - zeta;
        if slack <= tol {
            return t;
        }
        t += 2.0 * slack;
    }
    t
}

fn circle_exit(x: Vec2, xi: Vec2, r: f64) -> Option<f64> {
    if r <= 0.0 {
        return None;
    }
    let b = 2.0 * x.dot(xi);
    let c = x.norm_squared() - r * r;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r0, r1) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
    let hi = r0.max(r1);
    if hi > 0.0 {
        Some(hi)
    } else {
        None
    }
}

fn circle_entry(x: Vec2, xi: Vec2, r: f64) -> Option<f64> {
    if r <= 0.0 {
        return None;
    }
    let b = 2.0 * x.dot(xi);
    let c = x.norm_squared() - r * r;
    let disc = b * b - 4.0 * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let (r0, r1) = if q == 0.0 { (0.0, 0.0) } else { (q, c / q) };
    let lo = r0.min(r1);
    if lo > 0.0 {
        Some(lo)
    } else {
        None
    }
}

/// Exit from the radial band r_lo <= |x| <= r_hi (first crossing of either
/// offset circle).
fn radial_band_exit(x: Vec2, xi: Vec2, r_lo: f64, r_hi: f64) -> f64 {
    let out = circle_exit(x, xi, r_hi);
    let inn = circle_entry(x, xi, r_lo);
    match (out, inn) {
        (Some(o), Some(i)) => o.min(i),
        (Some(o), None) => o,
        (None, Some(i)) => i,
        (None, None) => 0.0,
    }
}

/// Area of { x : beta <= gamma(x) <= 2 beta } (the dyadic boundary layer).
pub fn layer_volume(domain: &Domain, beta: f64) -> f64 {
    band_area(domain, beta, 2.0 * beta)
}

/// Area of { x : lo <= gamma(x) <= hi }. Exact for circle-family domains and
/// convex polygons; smooth convex domains use the inner-parallel formula on
/// its validity range with a grid fallback beyond it.
pub fn band_area(domain: &Domain, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    area_gamma_above(domain, lo) - area_gamma_above(domain, hi)
}

/// Area of { gamma >= c }.
fn area_gamma_above(domain: &Domain, c: f64) -> f64 {
    let d = 2.0 * c; // boundary distance
    if c <= 0.0 {
        return domain.metrics().0;
    }
    match domain {
        Domain::Disk { r } => {
            let rr = r - d;
            if rr <= 0.0 {
                0.0
            } else {
                PI * rr * rr
            }
        }
        Domain::CircularAnnulus { r_outer, r_inner } => {
            let hi = r_outer - d;
            let lo = r_inner + d;
            if hi <= lo {
                0.0
            } else {
                PI * (hi * hi - lo * lo)
            }
        }
        Domain::RadialLayers { radii, .. } => {
            let inner = radii[radii.len() - 1];
            let hi = radii[0] - d;
            if inner > 0.0 {
                let lo = inner + d;
                if hi <= lo {
                    0.0
                } else {
                    PI * (hi * hi - lo * lo)
                }
            } else if hi <= 0.0 {
                0.0
            } else {
                PI * hi * hi
            }
        }
        Domain::Polygon { vertices } => {
            if let Some(shrunk) = shrink_convex_polygon(vertices, d) {
                crate::geometry::polygon_area(&shrunk)
            } else {
                grid_area_gamma_above(domain, c)
            }
        }
        Domain::Ellipse { a, b } => {
            // inner-parallel (Steiner) formula, exact while the offset stays
            // below the minimal curvature radius b^2/a
            if d < b * b / a {
                let (area, per) = domain.metrics();
                area - per * d + PI * d * d
            } else {
                grid_area_gamma_above(domain, c)
            }
        }
        Domain::ConfocalAnnulus { .. } => grid_area_gamma_above(domain, c),
    }
}

/// Indicator quadrature on a fine grid; resolution picked for ~1e-3 relative
/// accuracy, which only backs non-closed-form domains.
fn grid_area_gamma_above(domain: &Domain, c: f64) -> f64 {
    let diam = domain.diameter();
    let n = 1200usize;
    let h = diam / n as f64;
    let (x0, y0) = (-0.5 * diam, -0.5 * diam);
    let mut count = 0usize;
    for i in 0..n {
        for j in 0..n {
            let p = Vec2::new(x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h);
            if gamma(domain, p) >= c {
                count += 1;
            }
        }
    }
    count as f64 * h * h
}

/// Inward offset of a convex CCW polygon by `d` via halfplane clipping;
/// `None` when the polygon is not convex or the offset swallows it.
fn shrink_convex_polygon(vertices: &[Vec2], d: f64) -> Option<Vec<Vec2>> {
    let n = vertices.len();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        if (b - a).cross(c - b) < 0.0 {
            return None; // reflex corner
        }
    }
    let mut poly: Vec<Vec2> = vertices.to_vec();
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let inward = (b - a).normalized().perp();
        let anchor = a + inward * d;
        poly = clip_halfplane(&poly, anchor, inward);
        if poly.len() < 3 {
            return Some(Vec::new());
        }
    }
    Some(poly)
}

/// Keep the side of the line through `anchor` with normal `n` where
/// n . (p - anchor) >= 0.
fn clip_halfplane(poly: &[Vec2], anchor: Vec2, n: Vec2) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 2);
    let m = poly.len();
    for i in 0..m {
        let cur = poly[i];
        let next = poly[(i + 1) % m];
        let dc = n.dot(cur - anchor);
        let dn = n.dot(next - anchor);
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push(cur + (next - cur) * t);
        }
    }
    out
}

/// Monte-Carlo estimate of the zone remainder integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemainderReport {
    /// Estimate of the integral of 1/T* over the zone (times the uniform
    /// phase measure dx dtheta, normalization 2 pi x area).
    pub estimate: f64,
    /// Stratified standard error.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub zone: ZoneSpec,
    /// Rays discarded on the exceptional set (outside-zone roundoff).
    pub discarded: u64,
    /// Per-stratum diagnostics: (gamma_lo, gamma_hi, area, mean 1/T*).
    pub strata: Vec<(f64, f64, f64, f64)>,
}

/// Integral of 1/T*(x, xi) over { gamma_min <= gamma(x) <= gamma_max } x S^1
/// with the uniform measure, by stratified Monte Carlo over dyadic
/// gamma-layers. zeta and T0 follow the zone rules at each sample's gamma.
/// Results are bit-reproducible for a fixed seed at any thread count.
pub fn remainder_integral(
    domain: &Domain,
    zone: &ZoneSpec,
    samples: u64,
    seed: u64,
) -> RemainderReport {
    let strata = dyadic_strata(zone);
    if strata.is_empty() || samples == 0 {
        return RemainderReport {
            estimate: 0.0,
            stderr: 0.0,
            samples,
            seed,
            zone: *zone,
            discarded: 0,
            strata: Vec::new(),
        };
    }
    // allocate samples by layer area weighted toward the boundary
    let weights: Vec<f64> = strata
        .iter()
        .map(|&(lo, hi)| band_area(domain, lo, hi) / lo.sqrt())
        .collect();
    let total_w: f64 = weights.iter().sum();
    let alloc: Vec<u64> = weights
        .iter()
        .map(|w| ((samples as f64 * w / total_w) as u64).max(256))
        .collect();

    const BATCH: u64 = 4096;
    let mut tasks = Vec::new();
    for (idx, (&(lo, hi), &n)) in strata.iter().zip(alloc.iter()).enumerate() {
        let batches = n.div_ceil(BATCH);
        for b in 0..batches {
            let count = BATCH.min(n - b * BATCH);
            tasks.push((idx, lo, hi, b, count));
        }
    }
    let results: Vec<(usize, f64, f64, u64, u64)> = tasks
        .par_iter()
        .map(|&(idx, lo, hi, b, count)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((idx as u64) << 32) | b);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            let mut used = 0u64;
            let mut discarded = 0u64;
            for _ in 0..count {
                let Some(x) = sample_in_band(domain, lo, hi, &mut rng) else {
                    discarded += 1;
                    continue;
                };
                let xi = Vec2::from_angle(rng.gen_range(0.0..TAU));
                let g = gamma(domain, x);
                let t0 = zone.t0(g);
                let t_star = match zone.time_model {
                    TimeModel::RuleOnly => Some(2.0 * t0),
                    TimeModel::CappedEscape => {
                        let zeta = zone.zeta_rule.zeta(g).min(g);
                        capped_escape_time(domain, &PhasePoint { x, xi }, zeta, t0)
                            .ok()
                            .map(|times| times.t_star)
                    }
                };
                match t_star {
                    Some(t) if t > 0.0 => {
                        let v = 1.0 / t;
                        sum += v;
                        sumsq += v * v;
                        used += 1;
                    }
                    _ => discarded += 1,
                }
            }
            (idx, sum, sumsq, used, discarded)
        })
        .collect();

    let mut per_stratum = vec![(0.0f64, 0.0f64, 0u64, 0u64); strata.len()];
    for (idx, sum, sumsq, used, discarded) in results {
        per_stratum[idx].0 += sum;
        per_stratum[idx].1 += sumsq;
        per_stratum[idx].2 += used;
        per_stratum[idx].3 += discarded;
    }
    let mut estimate = 0.0;
    let mut variance = 0.0;
    let mut discarded = 0;
    let mut strata_report = Vec::new();
    for (&(lo, hi), &(sum, sumsq, used, disc)) in strata.iter().zip(per_stratum.iter()) {
        discarded += disc;
        let area = band_area(domain, lo, hi);
        let w = TAU * area;
        if used == 0 {
            strata_report.push((lo, hi, area, 0.0));
            continue;
        }
        let mean = sum / used as f64;
        estimate += w * mean;
        let var_sample = (sumsq / used as f64 - mean * mean).max(0.0);
        variance += w * w * var_sample / used as f64;
        strata_report.push((lo, hi, area, mean));
    }
    RemainderReport {
        estimate,
        stderr: variance.sqrt(),
        samples,
        seed,
        zone: *zone,
        discarded,
        strata: strata_report,
    }
}

fn dyadic_strata(zone: &ZoneSpec) -> Vec<(f64, f64)> {
    if !(zone.gamma_min < zone.gamma_max) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut hi = zone.gamma_max;
    while hi > zone.gamma_min {
        let lo = (0.5 * hi).max(zone.gamma_min);
        out.push((lo, hi));
        hi = lo;
    }
    out
}

/// Uniform draw from { lo <= gamma <= hi }: direct radial inversion for
/// circle-family domains, rejection in the bounding box otherwise.
fn sample_in_band(domain: &Domain, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Option<Vec2> {
    match domain {
        Domain::Disk { r } => {
            let rho_hi = r - 2.0 * lo;
            let rho_lo = (r - 2.0 * hi).max(0.0);
            if rho_hi <= rho_lo {
                return None;
            }
            let u: f64 = rng.gen_range(0.0..1.0);
            let rho = (rho_lo * rho_lo + u * (rho_hi * rho_hi - rho_lo * rho_lo)).sqrt();
            Some(Vec2::from_angle(rng.gen_range(0.0..TAU)) * rho)
        }
        Domain::CircularAnnulus { r_outer, r_inner } => {
            // two radial bands: near the outer wall and near the inner wall
            let bands = annulus_gamma_bands(*r_outer, *r_inner, lo, hi);
            let areas: Vec<f64> = bands
                .iter()
                .map(|&(a, b)| PI * (b * b - a * a).max(0.0))
                .collect();
            let total: f64 = areas.iter().sum();
            if total <= 0.0 {
                return None;
            }
            let mut pick = rng.gen_range(0.0..total);
            for (band, area) in bands.iter().zip(areas.iter()) {
                if pick <= *area {
                    let u: f64 = rng.gen_range(0.0..1.0);
                    let rho =
                        (band.0 * band.0 + u * (band.1 * band.1 - band.0 * band.0)).sqrt();
                    return Some(Vec2::from_angle(rng.gen_range(0.0..TAU)) * rho);
                }
                pick -= area;
            }
            None
        }
        _ => {
            let diam = domain.diameter();
            for _ in 0..4096 {
                let p = Vec2::new(
                    rng.gen_range(-0.5 * diam..0.5 * diam),
                    rng.gen_range(-0.5 * diam..0.5 * diam),
                );
                let g = gamma(domain, p);
                if g >= lo && g <= hi {
                    return Some(p);
                }
            }
            None
        }
    }
}

/// Radial intervals where the annulus gamma = min(R - rho, rho - r)/2 lies
/// in [lo, hi].
fn annulus_gamma_bands(r_outer: f64, r_inner: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mid = 0.5 * (r_outer + r_inner);
    // outer side: gamma = (R - rho)/2 for rho >= mid
    let o_lo = (r_outer - 2.0 * hi).max(mid);
    let o_hi = (r_outer - 2.0 * lo).max(mid);
    // inner side: gamma = (rho - r)/2 for rho <= mid
    let i_lo = (r_inner + 2.0 * lo).min(mid);
    let i_hi = (r_inner + 2.0 * hi).min(mid);
    let mut out = Vec::new();
    if o_hi > o_lo {
        out.push((o_lo, o_hi));
    }
    if i_hi > i_lo {
        out.push((i_lo, i_hi));
    }
    out
}

/// Boundary-regularity modulus integrals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulusKind {
    /// integrand nu1(t) / t^2.
    General,
    /// integrand nu1(t)^2 / t^3 (Schrodinger-type improvement).
    Schrodinger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusReport {
    /// Integral over J = [h, h^(1-delta)] union [h^delta, 1].
    pub integral_on_j: f64,
    /// Whether the integral converges numerically at the lower endpoint.
    pub converges: bool,
    /// Extrapolated value of the full (0, 1/2] tail when convergent.
    pub unit_integral_estimate: Option<f64>,
    /// Fitted decay exponent of the dyadic increments.
    pub decay_exponent: f64,
}

/// Evaluate the remainder-criterion integral over
/// J = [h, h^(1-delta)] u [h^delta, 1] and probe convergence of the full
/// integral by dyadic shrinking of the lower endpoint.
pub fn modulus_integrals(
    nu1: impl Fn(f64) -> f64,
    h: f64,
    delta: f64,
    kind: ModulusKind,
) -> ModulusReport {
    assert!(h > 0.0 && h < 1.0 && delta > 0.0 && delta < 0.5);
    let integrand = |t: f64| -> f64 {
        let v = nu1(t);
        match kind {
            ModulusKind::General => v / (t * t),
            ModulusKind::Schrodinger => v * v / (t * t * t),
        }
    };
    let lower = quad::integrate(&integrand, h, h.powf(1.0 - delta), 1e-10, 1e-14).value;
    let upper = quad::integrate(&integrand, h.powf(delta), 1.0, 1e-10, 1e-14).value;

    // dyadic increments toward the lower endpoint on (0, 1/2]
    let k_max = 40;
    let mut increments = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let hi = 0.5f64.powi(k as i32);
        let lo = 0.5 * hi;
        increments.push(quad::integrate(&integrand, lo, hi, 1e-9, 1e-14).value);
    }
    // fit d_k ~ c k^(-p) on the tail: p > 1 means the increments sum
    let tail = &increments[k_max - 12..];
    let mut p_est = 0.0;
    let mut count = 0;
    for i in 1..tail.len() {
        let k0 = (k_max - 12 + i) as f64;
        let (d0, d1) = (tail[i - 1], tail[i]);
        if d0 > 1e-300 && d1 > 1e-300 {
            p_est += (d0 / d1).ln() / ((k0 + 1.0) / k0).ln();
            count += 1;
        }
    }
    let decay_exponent = if count > 0 { p_est / count as f64 } else { f64::INFINITY };
    let total_tail: f64 = increments.iter().sum();
    let converges = decay_exponent > 1.05 || increments[k_max - 1] < 1e-12 * total_tail.max(1e-300);
    let unit_integral_estimate = if converges {
        let base = quad::integrate(&integrand, 0.5f64.powi(k_max as i32 + 1), 0.5, 1e-9, 1e-14)
            .value;
        // geometric-ish tail correction from the fitted decay
        let tail_correction = if decay_exponent.is_finite() && decay_exponent > 1.0 {
            increments[k_max - 1] * (k_max as f64) / (decay_exponent - 1.0)
        } else {
            0.0
        };
        Some(base + tail_correction)
    } else {
        None
    };
    ModulusReport {
        integral_on_j: lower + upper,
        converges,
        unit_integral_estimate,
        decay_exponent,
    }
}
