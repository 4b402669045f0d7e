//! Bracketed root finding: sign scans, bisection and Newton polish.

/// Root bracket with a certified sign change.
#[derive(Clone, Copy, Debug)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Scan `[lo, hi]` at `n` uniform cells and return every cell with a sign
/// change. Cells whose midpoint disagrees in sign with both endpoints are
/// split recursively so double crossings inside one cell are not lost.
pub fn scan_sign_changes<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, n: usize) -> Vec<Bracket> {
    let mut out = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..=n {
        let b = if i == n { hi } else { lo + step * i as f64 };
        let fb = f(b);
        collect_cell(f, a, fa, b, fb, 0, &mut out);
        a = b;
        fa = fb;
    }
    out
}

fn collect_cell<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    depth: usize,
    out: &mut Vec<Bracket>,
) {
    let m = 0.5 * (a + b);
    if depth >= 4 || m <= a || m >= b {
        if fa == 0.0 {
            out.push(Bracket { lo: a, hi: a });
        } else if fa * fb < 0.0 {
            out.push(Bracket { lo: a, hi: b });
        }
        return;
    }
    let fm = f(m);
    if fa * fm < 0.0 || fm * fb < 0.0 || fm == 0.0 || fa == 0.0 {
        // Possible multiple crossings: look inside both halves.
        collect_cell(f, a, fa, m, fm, depth + 1, out);
        collect_cell(f, m, fm, b, fb, depth + 1, out);
    } else if fa * fb < 0.0 {
        out.push(Bracket { lo: a, hi: b });
    }
}

/// Bisection to absolute tolerance `tol` on a certified bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, bracket: Bracket, tol: f64) -> f64 {
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    if a == b {
        return a;
    }
    let mut fa = f(a);
    if fa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol || m <= a || m >= b {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Bisect part of the way, then polish with Newton steps confined to the
/// bracket (falling back to bisection when a step escapes).
pub fn bisect_newton<F, D>(f: &F, df: &D, bracket: Bracket, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let coarse = (bracket.hi - bracket.lo).abs().max(tol) * 1e-3;
    let mut x = bisect(f, bracket, coarse.max(tol));
    let (lo, hi) = (bracket.lo.min(bracket.hi), bracket.lo.max(bracket.hi));
    for _ in 0..60 {
        let fx = f(x);
        let dfx = df(x);
        if dfx == 0.0 || !dfx.is_finite() {
            break;
        }
        let step = fx / dfx;
        let next = x - step;
        if !next.is_finite() || next < lo || next > hi {
            break;
        }
        x = next;
        if step.abs() <= tol.min(x.abs() * 1e-15 + tol * 1e-3) {
            break;
        }
    }
    x
}
