//! Unfolding oracle for the unit-square boundary map: the billiard orbit is
//! the folded image of a straight line, so the first-return map and its
//! finite-difference Jacobian can be computed independently of the generic
//! ray-segment machinery.

use billiard_spectra::billiard::{boundary_map, jacobian_boundary_map, BoundaryState};
use billiard_spectra::geometry::Domain;
use billiard_spectra::vec2::Vec2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fold a line coordinate into [0, 1] with mirror reflections, returning the
/// folded value and the local orientation.
fn fold(w: f64) -> (f64, f64) {
    let m = w.rem_euclid(2.0);
    if m <= 1.0 {
        (m, 1.0)
    } else {
        (2.0 - m, -1.0)
    }
}

/// One application of the square's boundary map by unfolding: advance the
/// straight line p + t d to its next integer crossing in x or y.
fn unfolded_map(p: Vec2, d: Vec2) -> (Vec2, Vec2) {
    let next_crossing = |w: f64, dw: f64| -> f64 {
        if dw > 0.0 {
            let c = w.floor() + 1.0;
            (c - w) / dw
        } else if dw < 0.0 {
            let c = w.ceil() - 1.0;
            (c - w) / dw
        } else {
            f64::INFINITY
        }
    };
    // nudge off the current wall so the same crossing is not found again
    let eps = 1e-13;
    let p = p + d * eps;
    let tx = next_crossing(p.x, d.x);
    let ty = next_crossing(p.y, d.y);
    let t = tx.min(ty);
    let q = p + d * t;
    let (fx, _) = fold(q.x);
    let (fy, _) = fold(q.y);
    // outgoing orientation: sample the fold just past the crossing
    let probe = q + d * 1e-9;
    let (_, ox) = fold(probe.x);
    let (_, oy) = fold(probe.y);
    (Vec2::new(fx, fy), Vec2::new(d.x * ox, d.y * oy))
}

/// Boundary parameter (arclength, counterclockwise from the origin) of a
/// point on the unit-square boundary.
fn square_param(p: Vec2) -> f64 {
    let eps = 1e-9;
    if p.y.abs() < eps {
        p.x
    } else if (p.x - 1.0).abs() < eps {
        1.0 + p.y
    } else if (p.y - 1.0).abs() < eps {
        3.0 - p.x
    } else {
        4.0 - p.y
    }
}

fn oracle_map(square: &Domain, s: &BoundaryState) -> (f64, f64) {
    let (q, d) = unfolded_map(s.point, s.xi);
    let _ = square;
    (square_param(q), d.angle())
}

fn wrap(x: f64, period: f64) -> f64 {
    x - period * (x / period).round()
}

#[test]
fn boundary_map_matches_unfolding_oracle() {
    let square = Domain::unit_square();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 200 {
        let u = rng.gen_range(0.0..4.0);
        let phi = rng.gen_range(-1.35f64..1.35);
        let Ok(s) = BoundaryState::from_incidence(&square, u, phi) else {
            continue;
        };
        let Ok((next, _)) = boundary_map(&square, &s) else {
            continue;
        };
        let (u_oracle, v_oracle) = oracle_map(&square, &s);
        checked += 1;
        assert!(
            wrap(next.u - u_oracle, 4.0).abs() < 1e-9,
            "u mismatch: {} vs oracle {}",
            next.u,
            u_oracle
        );
        assert!(
            wrap(next.xi.angle() - v_oracle, std::f64::consts::TAU).abs() < 1e-9,
            "v mismatch at u={u}, phi={phi}"
        );
    }
}

#[test]
fn fd_jacobian_matches_unfolding_oracle() {
    let square = Domain::unit_square();
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let mut checked = 0;
    while checked < 40 {
        let u = rng.gen_range(0.1..0.9); // bottom edge, away from corners
        let phi = rng.gen_range(-0.9f64..0.9);
        let Ok(s) = BoundaryState::from_incidence(&square, u, phi) else {
            continue;
        };
        let Ok(rep) = jacobian_boundary_map(&square, &s, h) else {
            continue;
        };
        checked += 1;
        // independent central differences through the unfolding oracle
        let v = s.xi.angle();
        let probe = |uu: f64, vv: f64| -> (f64, f64) {
            let state = BoundaryState::from_params(&square, uu, vv).unwrap();
            oracle_map(&square, &state)
        };
        let (u_pu, v_pu) = probe(u + h, v);
        let (u_mu, v_mu) = probe(u - h, v);
        let (u_pv, v_pv) = probe(u, v + h);
        let (u_mv, v_mv) = probe(u, v - h);
        let oracle = [
            [wrap(u_pu - u_mu, 4.0) / (2.0 * h), wrap(u_pv - u_mv, 4.0) / (2.0 * h)],
            [
                wrap(v_pu - v_mu, std::f64::consts::TAU) / (2.0 * h),
                wrap(v_pv - v_mv, std::f64::consts::TAU) / (2.0 * h),
            ],
        ];
        for r in 0..2 {
            for col in 0..2 {
                assert!(
                    (rep.d_phi[r][col] - oracle[r][col]).abs() < 1e-5,
                    "entry ({r},{col}): {} vs oracle {}",
                    rep.d_phi[r][col],
                    oracle[r][col]
                );
            }
        }
        // one-step norm stays bounded (entries scale like flight / cos^2 phi,
        // at most ~sqrt(2)/cos^2(0.9) per variable here) and the map is
        // exactly measure preserving
        assert!(mat_inf(rep.d_phi) <= 50.0);
        assert!((rep.det_nu_weighted - 1.0).abs() <= 1e-6);
    }
}

fn mat_inf(a: [[f64; 2]; 2]) -> f64 {
    (a[0][0].abs() + a[0][1].abs()).max(a[1][0].abs() + a[1][1].abs())
}
