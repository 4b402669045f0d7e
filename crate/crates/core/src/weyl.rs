//! Two-term Weyl counting predictions, residual analysis against exact
//! spectra, and the surface-state density of the Robin boundary layer.

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::spectra::{BoundaryCondition, Spectrum};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Two-term counting prediction
/// N^W(lambda) = Area lambda / (4 pi) -/+ Perimeter sqrt(lambda) / (4 pi),
/// the sign set by the boundary condition (minus Dirichlet, plus Neumann).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WeylEstimate {
    /// Area lambda / (4 pi), always nonnegative.
    pub kappa0_term: f64,
    /// Signed boundary term: -/+ Perimeter sqrt(lambda) / (4 pi).
    pub kappa1_term: f64,
    pub bc: BoundaryCondition,
    pub lambda: f64,
}

impl WeylEstimate {
    /// The two-term prediction itself.
    pub fn prediction(&self) -> f64 {
        self.kappa0_term + self.kappa1_term
    }
}

pub fn weyl_two_term(domain: &Domain, lambda: f64, bc: BoundaryCondition) -> WeylEstimate {
    let (area, perimeter) = domain.metrics();
    let kappa0_term = area * lambda / (4.0 * PI);
    let magnitude = perimeter * lambda.max(0.0).sqrt() / (4.0 * PI);
    let kappa1_term = match bc {
        BoundaryCondition::Dirichlet => -magnitude,
        BoundaryCondition::Neumann => magnitude,
    };
    WeylEstimate {
        kappa0_term,
        kappa1_term,
        bc,
        lambda,
    }
}

/// One row of the residual table.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidualRow {
    pub lambda: f64,
    pub count: usize,
    pub weyl: f64,
    /// N(lambda) - N^W(lambda).
    pub residual: f64,
    /// Residual divided by sqrt(lambda).
    pub residual_normalized: f64,
}

/// Residual table plus dyadic block statistics for trend testing.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    /// Per dyadic block [lo, hi): median of |residual| / sqrt(lambda) and
    /// mean of the signed one-term residual N - kappa0-term.
    pub blocks: Vec<ResidualBlock>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ResidualBlock {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub median_abs_normalized: f64,
    pub mean_one_term_residual: f64,
    pub rows: usize,
}

/// Evaluate counts against the two-term prediction on a lambda grid. The
/// spectrum must be complete up to the top of the grid.
pub fn residual_series(
    domain: &Domain,
    spectrum: &Spectrum,
    lambdas: &[f64],
) -> Result<ResidualTable> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let n = spectrum.counting(lambda)?;
        let est = weyl_two_term(domain, lambda, spectrum.bc);
        let weyl = est.prediction();
        let residual = n as f64 - weyl;
        rows.push(ResidualRow {
            lambda,
            count: n,
            weyl,
            residual,
            residual_normalized: residual / lambda.sqrt(),
        });
    }
    // dyadic blocks over the grid range
    let mut blocks = Vec::new();
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        let mut lo = first.lambda;
        while lo < last.lambda {
            let hi = 2.0 * lo;
            let members: Vec<&ResidualRow> = rows
                .iter()
                .filter(|r| r.lambda >= lo && r.lambda < hi)
                .collect();
            if !members.is_empty() {
                let mut abs_norm: Vec<f64> = members
                    .iter()
                    .map(|r| r.residual_normalized.abs())
                    .collect();
                abs_norm.sort_by(f64::total_cmp);
                let median = abs_norm[abs_norm.len() / 2];
                let mean_one_term = members
                    .iter()
                    .map(|r| r.count as f64 - weyl_two_term(domain, r.lambda, spectrum.bc).kappa0_term)
                    .sum::<f64>()
                    / members.len() as f64;
                blocks.push(ResidualBlock {
                    lambda_lo: lo,
                    lambda_hi: hi,
                    median_abs_normalized: median,
                    mean_one_term_residual: mean_one_term,
                    rows: members.len(),
                });
            }
            lo = hi;
        }
    }
    Ok(ResidualTable { rows, blocks })
}

/// Median of |residual|/sqrt(lambda) over the rows with lambda in [lo, hi].
pub fn median_normalized_residual(table: &ResidualTable, lo: f64, hi: f64) -> Option<f64> {
    let mut vals: Vec<f64> = table
        .rows
        .iter()
        .filter(|r| r.lambda >= lo && r.lambda <= hi)
        .map(|r| r.residual_normalized.abs())
        .collect();
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(f64::total_cmp);
    Some(vals[vals.len() / 2])
}

/// Robin boundary-layer data: the half-line model operator D^2 + a' with
/// boundary condition (D - i beta) u(0) = 0 at tangential energy a'.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RobinLayer {
    /// Boundary-symbol value; a surface state exists only for beta > 0.
    pub beta: f64,
    /// Tangential symbol value a'(x', xi').
    pub a_prime: f64,
    /// Energy level; the boundary layer is elliptic for tau < a_prime.
    pub tau: f64,
}

/// Surface-state contribution to the spectral-projector kernel of the
/// half-line model operator: the normalized bound state
/// u_b(x) = sqrt(2 beta) exp(-beta x) at eigenvalue a' - beta^2, giving
/// u_b(x1) u_b(y1) once tau reaches that level and zero below it.
///
/// The bound state normalizes to 2 beta exp(-beta (x1+y1)); the analogous
/// display in the source regime carries beta^(1/2) in place of beta, a
/// scaling-convention difference resolved here in favor of the directly
/// normalized one-dimensional model.
pub fn robin_surface_density(layer: &RobinLayer, x1: f64, y1: f64) -> Result<f64> {
    if layer.beta <= 0.0 {
        return Err(Error::NoSurfaceState(layer.beta));
    }
    let level = layer.a_prime - layer.beta * layer.beta;
    if layer.tau < level {
        return Ok(0.0);
    }
    Ok(2.0 * layer.beta * (-layer.beta * (x1 + y1)).exp())
}

/// Rectangular sampling window in the boundary phase space (x', xi').
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PhaseWindow {
    pub x_min: f64,
    pub x_max: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nx: usize,
    pub nxi: usize,
}

impl PhaseWindow {
    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.xi_max - self.xi_min)
    }
}

/// Boundary-layer counting coefficient
/// kappa_1 = (2 pi)^(1-d) iint [theta(tau - a' + beta^2)]_{tau1}^{tau2}
///           theta(beta) q1 q2 dx' dxi'          (d = 2)
/// by tensor trapezoidal quadrature with one Richardson refinement step.
pub fn robin_kappa1(
    a_prime: impl Fn(f64, f64) -> f64,
    beta: impl Fn(f64, f64) -> f64,
    q1: impl Fn(f64, f64) -> f64,
    q2: impl Fn(f64, f64) -> f64,
    tau1: f64,
    tau2: f64,
    window: &PhaseWindow,
) -> f64 {
    let integrand = |x: f64, xi: f64| -> f64 {
        let b = beta(x, xi);
        if b <= 0.0 {
            return 0.0;
        }
        let level = a_prime(x, xi) - b * b;
        let above = |tau: f64| if tau >= level { 1.0 } else { 0.0 };
        let jump = above(tau2) - above(tau1);
        if jump == 0.0 {
            return 0.0;
        }
        jump * q1(x, xi) * q2(x, xi)
    };
    let coarse = trapezoid_2d(&integrand, window, 1);
    let fine = trapezoid_2d(&integrand, window, 2);
    let richardson = (4.0 * fine - coarse) / 3.0;
    richardson / (2.0 * PI)
}

fn trapezoid_2d(
    f: &impl Fn(f64, f64) -> f64,
    window: &PhaseWindow,
    refine: usize,
) -> f64 {
    let nx = window.nx * refine;
    let nxi = window.nxi * refine;
    let hx = (window.x_max - window.x_min) / nx as f64;
    let hxi = (window.xi_max - window.xi_min) / nxi as f64;
    let mut acc = 0.0;
    for i in 0..=nx {
        let wx = if i == 0 || i == nx { 0.5 } else { 1.0 };
        let x = window.x_min + hx * i as f64;
        for j in 0..=nxi {
            let wxi = if j == 0 || j == nxi { 0.5 } else { 1.0 };
            let xi = window.xi_min + hxi * j as f64;
            acc += wx * wxi * f(x, xi);
        }
    }
    acc * hx * hxi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra;
    use approx::assert_relative_eq;

    #[test]
    fn disk_two_term_values() {
        // Area λ/(4π) = 25, boundary term 5 at λ = 100 on the unit disk
        let disk = Domain::disk(1.0).unwrap();
        let est = weyl_two_term(&disk, 100.0, BoundaryCondition::Dirichlet);
        assert_relative_eq!(est.kappa0_term, 25.0, epsilon = 1e-12);
        assert_relative_eq!(est.kappa1_term, -5.0, epsilon = 1e-12);
        assert_relative_eq!(est.prediction(), 20.0, epsilon = 1e-12);

        let neu = weyl_two_term(&disk, 100.0, BoundaryCondition::Neumann);
        assert_relative_eq!(neu.prediction(), 30.0, epsilon = 1e-12);

        // both terms vanish as lambda -> 0+
        let zero = weyl_two_term(&disk, 0.0, BoundaryCondition::Dirichlet);
        assert_eq!(zero.kappa0_term, 0.0);
        assert_eq!(zero.kappa1_term, 0.0);
    }

    #[test]
    fn square_two_term_value() {
        // (0, pi)^2: area pi^2, perimeter 4 pi; at lambda = 10 the
        // prediction is (pi/4) 10 - sqrt(10), about 4.69; the lattice count
        // N(10) = 6
        let square = Domain::polygon(vec![
            crate::vec2::Vec2::new(0.0, 0.0),
            crate::vec2::Vec2::new(PI, 0.0),
            crate::vec2::Vec2::new(PI, PI),
            crate::vec2::Vec2::new(0.0, PI),
        ])
        .unwrap();
        let est = weyl_two_term(&square, 10.0, BoundaryCondition::Dirichlet);
        assert_relative_eq!(est.prediction(), 2.5 * PI - 10f64.sqrt(), epsilon = 1e-12);
        assert!((est.prediction() - 4.69).abs() < 0.01);
    }

    #[test]
    fn residual_series_disk() {
        let disk = Domain::disk(1.0).unwrap();
        let spec = spectra::disk_spectrum_covering(1.0, 600.0, BoundaryCondition::Dirichlet);
        let lambdas: Vec<f64> = (1..=60).map(|i| 10.0 * i as f64).collect();
        let table = residual_series(&disk, &spec, &lambdas).unwrap();
        for row in &table.rows {
            assert!(
                row.residual_normalized.abs() <= 0.5,
                "normalized residual {} at lambda {}",
                row.residual_normalized,
                row.lambda
            );
        }
        // one-term residual (count minus area term) is negative on average
        for block in &table.blocks {
            assert!(
                block.mean_one_term_residual < 0.0,
                "Dirichlet one-term residual should be negative, got {} on [{}, {})",
                block.mean_one_term_residual,
                block.lambda_lo,
                block.lambda_hi
            );
        }
    }

    #[test]
    fn residual_below_first_eigenvalue() {
        let disk = Domain::disk(1.0).unwrap();
        let spec = spectra::disk_spectrum(1.0, 100.0, BoundaryCondition::Dirichlet);
        let table = residual_series(&disk, &spec, &[2.0]).unwrap();
        assert_eq!(table.rows[0].count, 0);
        assert_relative_eq!(
            table.rows[0].residual,
            -table.rows[0].weyl,
            epsilon = 1e-12
        );
    }

    #[test]
    fn spectrum_truncation_propagates() {
        let disk = Domain::disk(1.0).unwrap();
        let spec = spectra::disk_spectrum(1.0, 50.0, BoundaryCondition::Dirichlet);
        assert!(matches!(
            residual_series(&disk, &spec, &[60.0]),
            Err(Error::SpectrumTruncated { .. })
        ));
    }

    #[test]
    fn counting_ratio_approaches_area_law() {
        let disk = Domain::disk(1.0).unwrap();
        let spec = spectra::disk_spectrum_covering(1.0, 800.0, BoundaryCondition::Dirichlet);
        for lambda in [400.0, 600.0, 800.0] {
            let n = spec.counting(lambda).unwrap() as f64;
            let k0 = weyl_two_term(&disk, lambda, BoundaryCondition::Dirichlet).kappa0_term;
            let ratio = n / k0;
            assert!(
                (0.9..=1.1).contains(&ratio),
                "disk ratio {ratio} at lambda {lambda}"
            );
        }

        let rect = Domain::polygon(vec![
            crate::vec2::Vec2::new(0.0, 0.0),
            crate::vec2::Vec2::new(PI, 0.0),
            crate::vec2::Vec2::new(PI, PI),
            crate::vec2::Vec2::new(0.0, PI),
        ])
        .unwrap();
        let spec = spectra::rect_spectrum(PI, PI, 800.0, BoundaryCondition::Dirichlet);
        for lambda in [400.0, 600.0, 800.0] {
            let n = spec.counting(lambda).unwrap() as f64;
            let k0 = weyl_two_term(&rect, lambda, BoundaryCondition::Dirichlet).kappa0_term;
            let ratio = n / k0;
            assert!(
                (0.9..=1.1).contains(&ratio),
                "square ratio {ratio} at lambda {lambda}"
            );
        }
    }

    #[test]
    fn annulus_counts_follow_two_term_law() {
        // Area pi (1 - 0.25), perimeter 2 pi (1.5): the two-term prediction
        // tracks the cross-product-root counts within the usual band
        let dom = Domain::circular_annulus(1.0, 0.5).unwrap();
        let (area, per) = dom.metrics();
        assert_relative_eq!(area, 0.75 * PI, epsilon = 1e-12);
        assert_relative_eq!(per, 3.0 * PI, epsilon = 1e-12);
        let spec = spectra::annulus_spectrum_covering(1.0, 0.5, 3200.0);
        let grid: Vec<f64> = (0..160)
            .map(|i| 100.0 * (3200.0f64 / 100.0).powf(i as f64 / 159.0))
            .collect();
        let table = residual_series(&dom, &spec, &grid).unwrap();
        let sup = table
            .rows
            .iter()
            .map(|r| r.residual_normalized.abs())
            .fold(0.0f64, f64::max);
        assert!(sup <= 0.5, "sup |R|/sqrt(lambda) = {sup}");
        let low = median_normalized_residual(&table, 100.0, 400.0).unwrap();
        let high = median_normalized_residual(&table, 800.0, 3200.0).unwrap();
        assert!(high < low, "medians do not decay: {high} !< {low}");
    }

    #[test]
    fn robin_density_values() {
        // 1-D model-operator oracle: normalized bound state gives 2 beta on
        // the diagonal at the origin
        let layer = RobinLayer { beta: 0.7, a_prime: 1.0, tau: 0.9 };
        assert_relative_eq!(
            robin_surface_density(&layer, 0.0, 0.0).unwrap(),
            1.4,
            epsilon = 1e-14
        );
        // below the surface-state level the contribution vanishes
        let below = RobinLayer { beta: 0.7, a_prime: 1.0, tau: 0.4 };
        assert_eq!(robin_surface_density(&below, 0.0, 0.0).unwrap(), 0.0);
        // beta <= 0 has no surface state at all
        let none = RobinLayer { beta: -0.1, a_prime: 1.0, tau: 0.9 };
        assert!(matches!(
            robin_surface_density(&none, 0.0, 0.0),
            Err(Error::NoSurfaceState(_))
        ));
    }

    #[test]
    fn robin_density_normalization_and_symmetry() {
        let layer = RobinLayer { beta: 0.7, a_prime: 1.0, tau: 0.9 };
        // diagonal integrates to the bound-state norm, 1
        let norm = crate::quad::integrate(
            |x| robin_surface_density(&layer, x, x).unwrap(),
            0.0,
            60.0,
            1e-12,
            1e-14,
        )
        .value;
        assert_relative_eq!(norm, 1.0, epsilon = 1e-11);
        // symmetric rank-one kernel
        let a = robin_surface_density(&layer, 0.3, 1.1).unwrap();
        let b = robin_surface_density(&layer, 1.1, 0.3).unwrap();
        assert_eq!(a, b);
        let diag1 = robin_surface_density(&layer, 0.3, 0.3).unwrap();
        let diag2 = robin_surface_density(&layer, 1.1, 1.1).unwrap();
        assert!(a * a <= diag1 * diag2 * (1.0 + 1e-12));
    }

    #[test]
    fn robin_kappa1_indicator_cases() {
        let window = PhaseWindow {
            x_min: 0.0,
            x_max: 2.0,
            xi_min: -1.0,
            xi_max: 1.0,
            nx: 64,
            nxi: 64,
        };
        // beta <= 0 kills the integrand
        let zero = robin_kappa1(
            |_, _| 1.0,
            |_, _| -0.5,
            |_, _| 1.0,
            |_, _| 1.0,
            f64::NEG_INFINITY,
            0.9,
            &window,
        );
        assert_eq!(zero, 0.0);
        // constant fields, level a' - beta^2 = 0.75 crossed by [0.74, 0.76]:
        // kappa1 = area / (2 pi)
        let crossed = robin_kappa1(
            |_, _| 1.0,
            |_, _| 0.5,
            |_, _| 1.0,
            |_, _| 1.0,
            0.74,
            0.76,
            &window,
        );
        assert_relative_eq!(crossed, window.area() / (2.0 * PI), epsilon = 1e-12);
        // monotone nondecreasing in tau2 and additive over disjoint tau bins
        let a = robin_kappa1(|_, _| 1.0, |_, _| 0.5, |_, _| 1.0, |_, _| 1.0, 0.0, 0.74, &window);
        let b = robin_kappa1(|_, _| 1.0, |_, _| 0.5, |_, _| 1.0, |_, _| 1.0, 0.74, 0.9, &window);
        let ab = robin_kappa1(|_, _| 1.0, |_, _| 0.5, |_, _| 1.0, |_, _| 1.0, 0.0, 0.9, &window);
        assert_relative_eq!(a + b, ab, epsilon = 1e-12);
        assert!(b >= 0.0 && ab >= b);
    }

    #[test]
    fn robin_kappa1_smooth_fields_converge() {
        // smooth cutoffs, full tau window: refinement changes the estimate
        // below 1e-6
        let window = PhaseWindow {
            x_min: 0.0,
            x_max: 1.0,
            xi_min: 0.0,
            xi_max: 1.0,
            nx: 48,
            nxi: 48,
        };
        let q = |x: f64, xi: f64| (PI * x).sin().powi(2) * (PI * xi).sin().powi(2);
        let run = |w: &PhaseWindow| {
            robin_kappa1(
                |x, xi| 1.0 + 0.1 * (x + xi),
                |_, _| 0.5,
                q,
                q,
                f64::NEG_INFINITY,
                10.0,
                w,
            )
        };
        let coarse = run(&window);
        let fine = run(&PhaseWindow { nx: 96, nxi: 96, ..window });
        assert!(
            (coarse - fine).abs() < 1e-6,
            "refinement moved the estimate by {}",
            (coarse - fine).abs()
        );
    }
}
