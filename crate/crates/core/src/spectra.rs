//! Exact eigenvalue generators for reference domains: disk and circular
//! annulus through Bessel zeros, rectangles through lattice enumeration.

pub mod bessel;

use crate::error::{Error, Result};
use crate::roots::{bisect_newton, scan_sign_changes, Bracket};
use bessel::{bessel_j, bessel_j_all, bessel_j_prime, bessel_y};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// One eigenvalue with its multiplicity and mode labels. For separable
/// domains `m` is the angular order (or first lattice index) and `k` the
/// radial zero index (or second lattice index).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EigvalEntry {
    pub lambda: f64,
    pub multiplicity: usize,
    pub m: usize,
    pub k: usize,
}

/// Sorted spectrum, complete below `guaranteed_up_to`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub entries: Vec<EigvalEntry>,
    pub guaranteed_up_to: f64,
    pub bc: BoundaryCondition,
}

impl Spectrum {
    fn finish(mut entries: Vec<EigvalEntry>, guaranteed_up_to: f64, bc: BoundaryCondition) -> Self {
        entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
        Spectrum {
            entries,
            guaranteed_up_to,
            bc,
        }
    }

    /// Counting function N(lambda) = #{lambda_j <= lambda} with multiplicity
    /// (closed convention: an exact eigenvalue is counted).
    pub fn counting(&self, lambda: f64) -> Result<usize> {
        if lambda > self.guaranteed_up_to {
            return Err(Error::SpectrumTruncated {
                guaranteed: self.guaranteed_up_to,
                requested: lambda,
            });
        }
        let mut lo = 0usize;
        let mut hi = self.entries.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.entries[mid].lambda <= lambda {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(self.entries[..lo].iter().map(|e| e.multiplicity).sum())
    }

    /// Eigenvalues repeated by multiplicity.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for e in &self.entries {
            for _ in 0..e.multiplicity {
                out.push(e.lambda);
            }
        }
        out
    }
}

/// All positive zeros of J_m up to `x_max`, certified by sign change and
/// polished by Newton to ~1e-13.
pub fn bessel_j_zeros(m: u32, x_max: f64) -> Vec<f64> {
    // first zero exceeds the order; zero spacing is > pi/2 everywhere
    let lo = (m as f64).max(1e-3);
    if x_max <= lo {
        return Vec::new();
    }
    let cells = ((x_max - lo) / (PI / 2.0)).ceil() as usize + 1;
    let f = |x: f64| bessel_j(m, x);
    let df = |x: f64| bessel_j_prime(m, x);
    scan_sign_changes(&f, lo, x_max, cells)
        .into_iter()
        .map(|b| bisect_newton(&f, &df, b, 1e-13))
        .filter(|z| *z <= x_max)
        .collect()
}

/// All positive zeros of J'_m up to `x_max` (the zero at x = 0 for m = 0 is
/// excluded; the constant Neumann mode is added separately).
pub fn bessel_j_prime_zeros(m: u32, x_max: f64) -> Vec<f64> {
    let lo = (m as f64).max(1e-3);
    if x_max <= lo {
        return Vec::new();
    }
    let cells = ((x_max - lo) / (PI / 2.0)).ceil() as usize + 1;
    let f = |x: f64| bessel_j_prime(m, x);
    // J''_m from the Bessel equation
    let df = |x: f64| {
        ((m as f64 * m as f64) / (x * x) - 1.0) * bessel_j(m, x) - bessel_j_prime(m, x) / x
    };
    scan_sign_changes(&f, lo, x_max, cells)
        .into_iter()
        .map(|b| bisect_newton(&f, &df, b, 1e-13))
        .filter(|z| *z <= x_max)
        .collect()
}

/// Exact Laplace spectrum of the disk of radius `R`: eigenvalues
/// (j_{m,k}/R)^2 for Dirichlet, (j'_{m,k}/R)^2 plus the zero mode for
/// Neumann; multiplicity 2 for m >= 1.
pub fn disk_spectrum(radius: f64, lambda_max: f64, bc: BoundaryCondition) -> Spectrum {
    let k_max = lambda_max.sqrt() * radius;
    let mut entries = Vec::new();
    if bc == BoundaryCondition::Neumann {
        entries.push(EigvalEntry {
            lambda: 0.0,
            multiplicity: 1,
            m: 0,
            k: 0,
        });
    }
    let mut last_gap: f64 = 0.0;
    let mut m = 0u32;
    loop {
        let zeros = match bc {
            BoundaryCondition::Dirichlet => bessel_j_zeros(m, k_max),
            BoundaryCondition::Neumann => bessel_j_prime_zeros(m, k_max),
        };
        if zeros.is_empty() {
            if m as f64 > k_max {
                break;
            }
            m += 1;
            continue;
        }
        for (k, z) in zeros.iter().enumerate() {
            entries.push(EigvalEntry {
                lambda: (z / radius) * (z / radius),
                multiplicity: if m == 0 { 1 } else { 2 },
                m: m as usize,
                k: k + 1,
            });
        }
        if zeros.len() >= 2 {
            let gap = (zeros[zeros.len() - 1] - zeros[zeros.len() - 2]) / radius;
            let top = zeros[zeros.len() - 1] / radius;
            last_gap = last_gap.max((top + gap).powi(2) - top.powi(2));
        }
        m += 1;
    }
    // conservative guarantee: stay one inter-zero gap below the search edge
    let guaranteed = lambda_max - last_gap.max(0.0);
    Spectrum::finish(entries, guaranteed, bc)
}

/// Exact rectangle spectrum on (0, Lx) x (0, Ly): Dirichlet modes
/// (m pi/Lx)^2 + (n pi/Ly)^2 with m, n >= 1; Neumann with m, n >= 0.
pub fn rect_spectrum(lx: f64, ly: f64, lambda_max: f64, bc: BoundaryCondition) -> Spectrum {
    let base = match bc {
        BoundaryCondition::Dirichlet => 1usize,
        BoundaryCondition::Neumann => 0usize,
    };
    let mut raw: Vec<(f64, usize, usize)> = Vec::new();
    let mut m = base;
    loop {
        let wx = (m as f64 * PI / lx).powi(2);
        if wx > lambda_max {
            break;
        }
        let mut n = base;
        loop {
            let lam = wx + (n as f64 * PI / ly).powi(2);
            if lam > lambda_max {
                break;
            }
            raw.push((lam, m, n));
            n += 1;
        }
        m += 1;
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    // merge numerically coincident eigenvalues into multiplicities
    let mut entries: Vec<EigvalEntry> = Vec::new();
    for (lam, m, n) in raw {
        match entries.last_mut() {
            Some(e) if (e.lambda - lam).abs() <= 1e-9 * lam.max(1.0) => e.multiplicity += 1,
            _ => entries.push(EigvalEntry {
                lambda: lam,
                multiplicity: 1,
                m,
                k: n,
            }),
        }
    }
    Spectrum::finish(entries, lambda_max, bc)
}

/// Dirichlet spectrum of the circular annulus r < |x| < R: eigenvalues k^2
/// where k solves the cross-product equation
/// J_m(k r) Y_m(k R) - J_m(k R) Y_m(k r) = 0; multiplicity 2 for m >= 1.
pub fn annulus_spectrum(r_outer: f64, r_inner: f64, lambda_max: f64) -> Spectrum {
    let k_max = lambda_max.sqrt();
    let mut entries = Vec::new();
    let mut last_gap: f64 = 0.0;
    let mut m = 0u32;
    loop {
        let f = |k: f64| {
            bessel_j(m, k * r_inner) * bessel_y(m, k * r_outer)
                - bessel_j(m, k * r_outer) * bessel_y(m, k * r_inner)
        };
        // no roots below the disk bound: the first root exceeds j_{m,1}/R > m/R
        let lo = (0.8 * m as f64 / r_outer).max(1e-2 / r_outer);
        if lo >= k_max {
            break;
        }
        // scan at a quarter of the asymptotic root spacing pi / (R - r);
        // the scan splits any cell whose midpoint betrays a double crossing
        let step = PI / (4.0 * (r_outer - r_inner));
        let cells = ((k_max - lo) / step).ceil() as usize + 1;
        let df = |k: f64| {
            r_inner * bessel_j_prime(m, k * r_inner) * bessel_y(m, k * r_outer)
                + r_outer * bessel_j(m, k * r_inner) * bessel::bessel_y_prime(m, k * r_outer)
                - r_outer * bessel_j_prime(m, k * r_outer) * bessel_y(m, k * r_inner)
                - r_inner * bessel_j(m, k * r_outer) * bessel::bessel_y_prime(m, k * r_inner)
        };
        let roots: Vec<f64> = scan_sign_changes(&f, lo, k_max, cells)
            .into_iter()
            .map(|b: Bracket| bisect_newton(&f, &df, b, 1e-13))
            .filter(|k| *k <= k_max)
            .collect();
        if roots.is_empty() {
            if m as f64 / r_outer > k_max {
                break;
            }
            m += 1;
            continue;
        }
        for (idx, k) in roots.iter().enumerate() {
            entries.push(EigvalEntry {
                lambda: k * k,
                multiplicity: if m == 0 { 1 } else { 2 },
                m: m as usize,
                k: idx + 1,
            });
        }
        if roots.len() >= 2 {
            let gap = roots[roots.len() - 1] - roots[roots.len() - 2];
            let top = roots[roots.len() - 1];
            last_gap = last_gap.max((top + gap).powi(2) - top * top);
        }
        m += 1;
    }
    let guaranteed = lambda_max - last_gap.max(0.0);
    Spectrum::finish(entries, guaranteed, BoundaryCondition::Dirichlet)
}

/// J_m values for orders 0..=m_max from one downward-recurrence pass.
pub fn bessel_j_batch(m_max: usize, x: f64) -> Vec<f64> {
    bessel_j_all(m_max, x)
}

/// Disk spectrum whose conservative guarantee covers `lambda` (the
/// enumeration edge is pushed past the inter-zero safety gap).
pub fn disk_spectrum_covering(radius: f64, lambda: f64, bc: BoundaryCondition) -> Spectrum {
    let mut edge = lambda * 1.02 + 30.0;
    loop {
        let spec = disk_spectrum(radius, edge, bc);
        if spec.guaranteed_up_to >= lambda {
            return spec;
        }
        edge = edge * 1.2 + 30.0;
    }
}

/// Annulus spectrum whose conservative guarantee covers `lambda`.
pub fn annulus_spectrum_covering(r_outer: f64, r_inner: f64, lambda: f64) -> Spectrum {
    let mut edge = lambda * 1.02 + 30.0;
    loop {
        let spec = annulus_spectrum(r_outer, r_inner, edge);
        if spec.guaranteed_up_to >= lambda {
            return spec;
        }
        edge = edge * 1.2 + 30.0;
    }
}
