//! Billiard flow, first-return boundary map, conserved quantities and
//! branching (refracting) ray dynamics in radially layered media.
//!
//! The flow runs on the unit-energy shell (|xi| = 1) with arc-length time:
//! only the geometry of orbits enters any quantity computed here, so the
//! Hamiltonian time scale is normalized once and for all. Orbits reaching a
//! polygon corner or a tangential boundary contact terminate with a tagged
//! status; those sets carry zero measure.

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

/// Unit-energy phase-space point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec2,
    /// Unit momentum direction.
    pub xi: Vec2,
}

impl PhasePoint {
    pub fn new(x: Vec2, xi: Vec2) -> Self {
        Self {
            x,
            xi: xi.normalized(),
        }
    }
}

/// State of the first-return map on the outer boundary: boundary point,
/// its parameter `u`, the outgoing unit momentum and the normal-momentum
/// coordinate `eta`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BoundaryState {
    pub point: Vec2,
    /// Boundary parameter (radians for conic boundaries, arclength for polygons).
    pub u: f64,
    /// Outgoing (inward-pointing) unit momentum.
    pub xi: Vec2,
    /// Normal-momentum coordinate; for a conic outer boundary this is
    /// x1 xi1 / a^2 + x2 xi2 / b^2, for polygons the inward normal component.
    pub eta: f64,
}

impl BoundaryState {
    /// Build a boundary state from a boundary point and an inward direction.
    pub fn new(domain: &Domain, point: Vec2, xi: Vec2) -> Result<Self> {
        let tol = domain.tolerances();
        let n = domain.boundary_normal(point)?;
        let xi = xi.normalized();
        if xi.dot(n) <= tol.eps_tan {
            return Err(Error::GrazingHit);
        }
        Ok(Self {
            point,
            u: domain.outer_boundary_param(point),
            xi,
            eta: eta_coordinate(domain, point, xi),
        })
    }

    /// Boundary state at outer-boundary parameter `u` with direction angle `v`.
    pub fn from_params(domain: &Domain, u: f64, v: f64) -> Result<Self> {
        Self::new(domain, domain.outer_boundary_point(u), Vec2::from_angle(v))
    }

    /// State at incidence angle `phi` (measured from the inward normal,
    /// positive toward the counterclockwise tangent) at parameter `u`.
    pub fn from_incidence(domain: &Domain, u: f64, phi: f64) -> Result<Self> {
        let p = domain.outer_boundary_point(u);
        let n = domain.boundary_normal(p)?;
        let t = n.perp();
        let xi = n * phi.cos() + t * phi.sin();
        Self::new(domain, p, xi)
    }

    /// Incidence angle in `(-pi/2, pi/2)` between `xi` and the inward normal.
    pub fn incidence_angle(&self, domain: &Domain) -> Result<f64> {
        let n = domain.boundary_normal(self.point)?;
        Ok(n.perp().dot(self.xi).atan2(n.dot(self.xi)))
    }
}

/// The normal-momentum coordinate eta of a state on the outer boundary.
pub fn eta_coordinate(domain: &Domain, point: Vec2, xi: Vec2) -> f64 {
    match domain {
        Domain::Ellipse { a, b } => point.x * xi.x / (a * a) + point.y * xi.y / (b * b),
        Domain::ConfocalAnnulus { a2, b2, .. } => {
            point.x * xi.x / (a2 * a2) + point.y * xi.y / (b2 * b2)
        }
        Domain::Disk { r } => point.dot(xi) / (r * r),
        Domain::CircularAnnulus { r_outer, .. } => point.dot(xi) / (r_outer * r_outer),
        Domain::RadialLayers { radii, .. } => point.dot(xi) / (radii[0] * radii[0]),
        Domain::Polygon { .. } => match domain.boundary_normal(point) {
            Ok(n) => xi.dot(n),
            Err(_) => f64::NAN,
        },
    }
}

/// Why an orbit stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    /// Ran to the bounce or time cap.
    Completed,
    /// Entered the corner-exclusion radius of a polygon vertex.
    Corner,
    /// Tangential boundary contact.
    Grazing,
    /// Invalid (exterior) start.
    Escaped,
}

/// One straight flight segment.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Segment {
    pub start: Vec2,
    pub end: Vec2,
    /// Radial-layer index; 0 for single-medium domains.
    pub layer: usize,
}

/// Recorded billiard orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub segments: Vec<Segment>,
    pub bounces: usize,
    pub total_time: f64,
    pub termination: Termination,
}

/// Caustic family selected by the sign of the confocal invariant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CausticClass {
    ConfocalEllipse,
    ConfocalHyperbola,
    ThroughFoci,
}

/// Conserved quantity of elliptical tables,
/// beta = (x1 xi2 - x2 xi1)^2 - c^2 xi2^2.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ConicInvariant {
    pub beta: f64,
    pub class: CausticClass,
}

/// Specular reflection: tangential component kept, normal component negated.
#[inline]
pub fn reflect(xi: Vec2, n: Vec2) -> Vec2 {
    xi - 2.0 * xi.dot(n) * n
}

/// Advance an interior phase point to its first boundary hit and reflect.
/// Returns the outgoing boundary state and the flight time.
pub fn step(domain: &Domain, z: &PhasePoint) -> Result<(BoundaryState, f64)> {
    let hit = domain.intersect_ray(z.x, z.xi)?;
    let out = reflect(z.xi, hit.normal);
    Ok((
        BoundaryState {
            point: hit.point,
            u: domain.outer_boundary_param(hit.point),
            xi: out,
            eta: eta_coordinate(domain, hit.point, out),
        },
        hit.t,
    ))
}

/// Iterate the flow until a bounce/time cap or an exceptional termination,
/// recording every flight segment.
///
/// Radially layered media follow the refract-else-reflect branch policy
/// along a single transmitted path.
pub fn orbit(domain: &Domain, z0: &PhasePoint, max_bounces: usize, max_time: f64) -> OrbitRecord {
    if let Domain::RadialLayers { .. } = domain {
        return layered_orbit_from_phase(domain, z0, max_bounces, max_time);
    }
    let mut segments = Vec::new();
    let mut x = z0.x;
    let mut xi = z0.xi.normalized();
    let mut total_time = 0.0;
    let mut termination = Termination::Completed;
    for _ in 0..max_bounces {
        match domain.intersect_ray(x, xi) {
            Ok(hit) => {
                segments.push(Segment {
                    start: x,
                    end: hit.point,
                    layer: 0,
                });
                total_time += hit.t;
                x = hit.point;
                xi = reflect(xi, hit.normal);
                if total_time >= max_time {
                    break;
                }
            }
            Err(e) => {
                termination = match e {
                    Error::VertexSingular => Termination::Corner,
                    Error::GrazingHit => Termination::Grazing,
                    _ => Termination::Escaped,
                };
                break;
            }
        }
    }
    OrbitRecord {
        bounces: segments.len(),
        segments,
        total_time,
        termination,
    }
}

fn is_annulus(domain: &Domain) -> bool {
    matches!(
        domain,
        Domain::CircularAnnulus { .. } | Domain::ConfocalAnnulus { .. }
    ) || matches!(domain, Domain::RadialLayers { radii, .. } if radii[radii.len()-1] > 0.0)
}

fn hit_is_on_inner(domain: &Domain, p: Vec2) -> bool {
    match domain {
        Domain::CircularAnnulus { r_outer, r_inner } => {
            (p.norm() - r_inner).abs() < (p.norm() - r_outer).abs()
        }
        Domain::RadialLayers { radii, .. } => {
            let inner = radii[radii.len() - 1];
            inner > 0.0 && (p.norm() - inner).abs() < (p.norm() - radii[0]).abs()
        }
        Domain::ConfocalAnnulus { a2, b2, a1, b1 } => {
            let q_outer = (p.x / a2).powi(2) + (p.y / b2).powi(2);
            let q_inner = (p.x / a1).powi(2) + (p.y / b1).powi(2);
            (q_inner - 1.0).abs() < (q_outer - 1.0).abs()
        }
        _ => false,
    }
}

/// First-return map on the outer boundary. In an annulus the ray composes at
/// most one inner-boundary reflection before returning to the outer boundary;
/// the returned time covers the whole excursion. Multi-layer media follow
/// the refract-else-reflect policy until the ray reaches the outer wall.
pub fn boundary_map(domain: &Domain, s: &BoundaryState) -> Result<(BoundaryState, f64)> {
    if let Domain::RadialLayers { radii, speeds } = domain {
        if speeds.len() > 1 {
            return layered_outer_return(domain, s, radii[0]);
        }
    }
    let hit = domain.intersect_ray(s.point, s.xi)?;
    if is_annulus(domain) && hit_is_on_inner(domain, hit.point) {
        let xi_mid = reflect(s.xi, hit.normal);
        // a ray leaving the convex inner obstacle reaches the outer boundary
        let hit2 = domain.intersect_ray(hit.point, xi_mid)?;
        debug_assert!(!hit_is_on_inner(domain, hit2.point));
        let out = reflect(xi_mid, hit2.normal);
        return Ok((
            BoundaryState {
                point: hit2.point,
                u: domain.outer_boundary_param(hit2.point),
                xi: out,
                eta: eta_coordinate(domain, hit2.point, out),
            },
            hit.t + hit2.t,
        ));
    }
    let out = reflect(s.xi, hit.normal);
    Ok((
        BoundaryState {
            point: hit.point,
            u: domain.outer_boundary_param(hit.point),
            xi: out,
            eta: eta_coordinate(domain, hit.point, out),
        },
        hit.t,
    ))
}

/// Confocal invariant beta = (x1 xi2 - x2 xi1)^2 - c^2 xi2^2 with c^2 taken
/// from the outer ellipse; circles are the c = 0 case (squared angular
/// momentum). The sign chooses the caustic family.
pub fn conic_invariant(domain: &Domain, x: Vec2, xi: Vec2) -> Result<ConicInvariant> {
    let (c2, scale) = match domain {
        Domain::Ellipse { a, b } => (a * a - b * b, a * a),
        Domain::ConfocalAnnulus { a2, b2, .. } => (a2 * a2 - b2 * b2, a2 * a2),
        Domain::Disk { r } => (0.0, r * r),
        Domain::CircularAnnulus { r_outer, .. } => (0.0, r_outer * r_outer),
        Domain::Polygon { .. } => return Err(Error::WrongDomain("polygon")),
        Domain::RadialLayers { .. } => return Err(Error::WrongDomain("radial_layers")),
    };
    let beta = x.cross(xi).powi(2) - c2 * xi.y * xi.y;
    let eps_beta = 1e-12 * scale;
    let class = if beta.abs() <= eps_beta {
        CausticClass::ThroughFoci
    } else if beta > 0.0 {
        CausticClass::ConfocalEllipse
    } else {
        CausticClass::ConfocalHyperbola
    };
    Ok(ConicInvariant { beta, class })
}

/// Density |eta| of the measure preserved by the boundary map, in the
/// (u, v) coordinates of the outer boundary. The overall normalization
/// constant is left out (it cancels in every determinant ratio).
pub fn measure_density(s: &BoundaryState) -> f64 {
    s.eta.abs()
}

/// Finite-difference Jacobian of the boundary map at `s`.
#[derive(Clone, Copy, Debug)]
pub struct JacobianReport {
    /// dPhi in the (u, v) boundary coordinates.
    pub d_phi: [[f64; 2]; 2],
    /// Determinant expressed in the measure-weighted coordinates; 1 for an
    /// exact map.
    pub det_nu_weighted: f64,
    /// Set for nearly circular ellipses ((a - b)/a < 1e-3), where the
    /// gradient control of the (u, v) chart degenerates and the finite
    /// differences deserve caution.
    pub near_circular_warning: bool,
}

fn wrap_period(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

fn boundary_period(domain: &Domain) -> f64 {
    match domain {
        Domain::Polygon { .. } => domain.metrics().1,
        _ => std::f64::consts::TAU,
    }
}

/// Central-difference Jacobian of the boundary map in (u, v), together with
/// its determinant in the measure-weighted coordinates.
pub fn jacobian_boundary_map(
    domain: &Domain,
    s: &BoundaryState,
    fd_step: f64,
) -> Result<JacobianReport> {
    let period = boundary_period(domain);
    let v = s.xi.angle();
    let h = fd_step;
    let center_branch = probe_branch(domain, s)?;
    let mut images = [[0.0f64; 2]; 4]; // u+, u-, v+, v-
    let probes = [
        (s.u + h, v),
        (s.u - h, v),
        (s.u, v + h),
        (s.u, v - h),
    ];
    for (k, (pu, pv)) in probes.iter().enumerate() {
        let state =
            BoundaryState::from_params(domain, *pu, *pv).map_err(|_| Error::ExceptionalSet)?;
        if probe_branch(domain, &state)? != center_branch {
            // the stencil straddles a non-smooth branch boundary (inner
            // tangency or a polygon edge transition)
            return Err(Error::ExceptionalSet);
        }
        let (image, _) = boundary_map(domain, &state).map_err(|_| Error::ExceptionalSet)?;
        images[k] = [image.u, image.xi.angle()];
    }
    let du_u = wrap_period(images[0][0] - images[1][0], period) / (2.0 * h);
    let dv_u = wrap_period(images[0][1] - images[1][1], std::f64::consts::TAU) / (2.0 * h);
    let du_v = wrap_period(images[2][0] - images[3][0], period) / (2.0 * h);
    let dv_v = wrap_period(images[2][1] - images[3][1], std::f64::consts::TAU) / (2.0 * h);
    let det = du_u * dv_v - du_v * dv_u;
    let (image, _) = boundary_map(domain, s)?;
    let det_nu = det * measure_density(&image) / measure_density(s);
    let near_circular_warning = match domain {
        Domain::Ellipse { a, b } => (a - b) / a < 1e-3,
        Domain::ConfocalAnnulus { a2, b2, .. } => (a2 - b2) / a2 < 1e-3,
        _ => false,
    };
    Ok(JacobianReport {
        d_phi: [[du_u, du_v], [dv_u, dv_v]],
        det_nu_weighted: det_nu,
        near_circular_warning,
    })
}

/// Smoothness-branch fingerprint of one boundary-map application: the number
/// of inner reflections (annuli) or the start/landing edge pair (polygons).
/// Finite-difference stencils must stay on a single branch.
fn probe_branch(domain: &Domain, s: &BoundaryState) -> Result<(usize, usize)> {
    match domain {
        Domain::Polygon { .. } => {
            let hit = domain
                .intersect_ray(s.point, s.xi)
                .map_err(|_| Error::ExceptionalSet)?;
            Ok((
                polygon_edge_index(domain, s.point),
                polygon_edge_index(domain, hit.point),
            ))
        }
        _ if is_annulus(domain) => {
            let hit = domain
                .intersect_ray(s.point, s.xi)
                .map_err(|_| Error::ExceptionalSet)?;
            Ok((if hit_is_on_inner(domain, hit.point) { 1 } else { 0 }, 0))
        }
        _ => Ok((0, 0)),
    }
}

fn polygon_edge_index(domain: &Domain, p: Vec2) -> usize {
    let Domain::Polygon { vertices } = domain else {
        return 0;
    };
    let n = vertices.len();
    let mut best = (f64::INFINITY, 0usize);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let e = b - a;
        let t = ((p - a).dot(e) / e.norm_squared()).clamp(0.0, 1.0);
        let d = (p - (a + e * t)).norm_squared();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Snell refraction across an interface: sin(phi_out) = (c_in/c_out) sin(phi_in)
/// with the tangential orientation kept. `None` encodes total internal
/// reflection. Precondition: `xi . n < 0` (incoming against the normal).
pub fn snell_refract(c_in: f64, c_out: f64, xi: Vec2, n: Vec2) -> Option<Vec2> {
    let cos_in = -xi.dot(n);
    debug_assert!(cos_in > 0.0, "refraction needs an incoming direction");
    let tangential = xi + n * cos_in;
    let sin_in = tangential.norm();
    if sin_in == 0.0 {
        return Some(xi); // normal incidence: direction unchanged
    }
    let sin_out = sin_in * c_in / c_out;
    if sin_out > 1.0 {
        return None;
    }
    let cos_out = (1.0 - sin_out * sin_out).sqrt();
    Some((tangential / sin_in) * sin_out - n * cos_out)
}

/// Ray inside one layer of a radially layered medium.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LayerRay {
    pub point: Vec2,
    pub xi: Vec2,
    /// Index of the layer the ray is about to travel through.
    pub layer: usize,
}

impl LayerRay {
    /// Conserved quantity rho * c * sin(phi), signed by the sense of rotation.
    pub fn eta(&self, domain: &Domain) -> Result<f64> {
        let Domain::RadialLayers { speeds, .. } = domain else {
            return Err(Error::WrongDomain("needs radial_layers"));
        };
        Ok(speeds[self.layer] * self.point.cross(self.xi))
    }
}

/// What to do where two layers meet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchPolicy {
    Reflect,
    /// Transmit; falls back to reflection at total internal reflection.
    Refract,
    /// Keep both successors (the refracted one only where it exists).
    Both,
}

/// Successor produced by [`branch_step`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub ray: LayerRay,
    /// True when a Refract policy had to fall back to reflection.
    pub tir_fallback: bool,
    /// True for the transmitted successor.
    pub refracted: bool,
}

/// Where a layered flight ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerHit {
    /// Hard outer or innermost wall.
    Wall,
    /// Interface shared with the neighbouring layer of the given index.
    Interface(usize),
}

/// Fly an in-layer ray to its next circle (wall or interface). Returns the
/// arrived incoming ray (direction unchanged) and the hit classification.
pub fn layer_flight(domain: &Domain, ray: &LayerRay) -> Result<(LayerRay, LayerHit, f64)> {
    let Domain::RadialLayers { radii, .. } = domain else {
        return Err(Error::WrongDomain("needs radial_layers"));
    };
    let k = ray.layer;
    if k + 1 >= radii.len() {
        return Err(Error::OutOfRange(format!("layer index {k} out of range")));
    }
    let eps = domain.tolerances().eps_bd;
    let r_out = radii[k];
    let r_in = radii[k + 1];
    let t_out = circle_exit(ray.point, ray.xi, r_out);
    let t_in = if r_in > 0.0 {
        circle_entry(ray.point, ray.xi, r_in, eps)
    } else {
        None
    };
    let (t, inner) = match (t_out, t_in) {
        (Some(o), Some(i)) if i < o => (i, true),
        (Some(o), _) => (o, false),
        (None, Some(i)) => (i, true),
        (None, None) => return Err(Error::NoIntersection),
    };
    let point = ray.point + ray.xi * t;
    let hit = if inner {
        if k + 2 == radii.len() {
            LayerHit::Wall // innermost radius is true boundary
        } else {
            LayerHit::Interface(k + 1)
        }
    } else if k == 0 {
        LayerHit::Wall
    } else {
        LayerHit::Interface(k)
    };
    Ok((
        LayerRay {
            point,
            xi: ray.xi,
            layer: k,
        },
        hit,
        t,
    ))
}

/// Branch an incoming ray sitting on an interface (or wall) into its
/// successors. Walls always reflect; interfaces follow `policy`, and each
/// successor carries the conserved rho c sin(phi) unchanged.
pub fn branch_step(
    domain: &Domain,
    incoming: &LayerRay,
    hit: LayerHit,
    policy: BranchPolicy,
) -> Result<Vec<BranchOutcome>> {
    let Domain::RadialLayers { radii, speeds } = domain else {
        return Err(Error::WrongDomain("needs radial_layers"));
    };
    let rho = incoming.point.norm();
    // normal against the incoming ray (radial, pointing to the incoming side)
    let radial = incoming.point / rho;
    let n = if incoming.xi.dot(radial) > 0.0 {
        -radial
    } else {
        radial
    };
    let tol = domain.tolerances();
    if incoming.xi.dot(n).abs() < tol.eps_tan {
        return Err(Error::GrazingHit);
    }
    let reflected = BranchOutcome {
        ray: LayerRay {
            point: incoming.point,
            xi: reflect(incoming.xi, n),
            layer: incoming.layer,
        },
        tir_fallback: false,
        refracted: false,
    };
    let interface = match hit {
        LayerHit::Wall => return Ok(vec![reflected]),
        LayerHit::Interface(j) => j,
    };
    // interface radius radii[j] separates layer j-1 (outside) and layer j
    let other = if incoming.layer == interface {
        interface - 1
    } else {
        interface
    };
    debug_assert!((radii[interface] - rho).abs() <= 1e-6 * radii[0]);
    let transmitted = snell_refract(speeds[incoming.layer], speeds[other], incoming.xi, n).map(
        |xi| BranchOutcome {
            ray: LayerRay {
                point: incoming.point,
                xi,
                layer: other,
            },
            tir_fallback: false,
            refracted: true,
        },
    );
    Ok(match (policy, transmitted) {
        (BranchPolicy::Reflect, _) => vec![reflected],
        (BranchPolicy::Refract, Some(t)) => vec![t],
        (BranchPolicy::Refract, None) => vec![BranchOutcome {
            tir_fallback: true,
            ..reflected
        }],
        (BranchPolicy::Both, Some(t)) => vec![reflected, t],
        (BranchPolicy::Both, None) => vec![reflected],
    })
}

/// Follow the single refract-else-reflect path from an outer-boundary state
/// back to the outer wall.
fn layered_outer_return(
    domain: &Domain,
    s: &BoundaryState,
    r_outer: f64,
) -> Result<(BoundaryState, f64)> {
    let mut ray = LayerRay {
        point: s.point,
        xi: s.xi,
        layer: 0,
    };
    let mut time = 0.0;
    for _ in 0..100_000 {
        let (arrived, hit, t) = layer_flight(domain, &ray)?;
        time += t;
        let succ = branch_step(domain, &arrived, hit, BranchPolicy::Refract)?;
        ray = succ[0].ray;
        if hit == LayerHit::Wall && (arrived.point.norm() - r_outer).abs() < 1e-9 * r_outer {
            return Ok((
                BoundaryState {
                    point: ray.point,
                    u: domain.outer_boundary_param(ray.point),
                    xi: ray.xi,
                    eta: eta_coordinate(domain, ray.point, ray.xi),
                },
                time,
            ));
        }
    }
    Err(Error::NoIntersection)
}

/// Single-path orbit in a layered medium under the refract-else-reflect
/// policy, recording per-layer segments.
fn layered_orbit_from_phase(
    domain: &Domain,
    z0: &PhasePoint,
    max_segments: usize,
    max_time: f64,
) -> OrbitRecord {
    let Domain::RadialLayers { radii, .. } = domain else {
        unreachable!()
    };
    let rho0 = z0.x.norm();
    let layer = radii
        .windows(2)
        .position(|w| rho0 <= w[0] && rho0 >= w[1])
        .unwrap_or(0);
    let mut ray = LayerRay {
        point: z0.x,
        xi: z0.xi.normalized(),
        layer,
    };
    let mut segments = Vec::new();
    let mut total_time = 0.0;
    let mut termination = Termination::Completed;
    for _ in 0..max_segments {
        match layer_flight(domain, &ray) {
            Ok((arrived, hit, t)) => {
                segments.push(Segment {
                    start: ray.point,
                    end: arrived.point,
                    layer: ray.layer,
                });
                total_time += t;
                match branch_step(domain, &arrived, hit, BranchPolicy::Refract) {
                    Ok(succ) => ray = succ[0].ray,
                    Err(e) => {
                        termination = match e {
                            Error::GrazingHit => Termination::Grazing,
                            _ => Termination::Escaped,
                        };
                        break;
                    }
                }
                if total_time >= max_time {
                    break;
                }
            }
            Err(e) => {
                termination = match e {
                    Error::GrazingHit => Termination::Grazing,
                    _ => Termination::Escaped,
                };
                break;
            }
        }
    }
    OrbitRecord {
        bounces: segments.len(),
        segments,
        total_time,
        termination,
    }
}

fn circle_exit(x: Vec2, xi: Vec2, r: f64) -> Option<f64> {
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
    let lo = r0.min(r1);
    if hi > 0.0 {
        Some(hi)
    } else if lo > 0.0 {
        Some(lo)
    } else {
        None
    }
}

fn circle_entry(x: Vec2, xi: Vec2, r: f64, eps: f64) -> Option<f64> {
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
    let hi = r0.max(r1);
    if lo > eps {
        Some(lo)
    } else if hi > eps {
        Some(hi)
    } else {
        None
    }
}
