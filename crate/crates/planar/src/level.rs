//! Averaged quantities on the level curves `C_i(z) = {x in G_i : H(x) = z}`.
//!
//! For lobes `G1..G3` a horizontal line meets `C_i(z)` in at most two points,
//! found in closed form: with `t = x^2`, `H = z` is the quadratic
//! `t^2 - 2Bt + B^2 - D = 0`, `B = 1 + a^2 - y^2`, `D = 4a^2(1 - y^2) + z`,
//! so `t = B +- sqrt(D)` and `|H_x| = 4|x| sqrt(D)`. Line integrals become
//! `dy` integrals with weight `1/|H_x|`; region integrals become iterated
//! `dx dy` integrals between the two crossings. `G4` curves are star-shaped
//! about the origin and use polar coordinates instead.
//!
//! Every integrand used here is even in `y`, so only `y >= 0` is integrated.

use serde::Serialize;

use crate::quad::{integrate, integrate_sqrt_ends, QuadConfig};
use crate::system::{Lobe, Point, TwoDiskSystem};
use crate::PlanarError;

/// Tolerances for one-dimensional (line) integrals and for the inner and
/// outer parts of region integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    pub line: QuadConfig,
    pub inner: QuadConfig,
    pub outer: QuadConfig,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            line: QuadConfig { rel_tol: 1e-11, abs_tol: 1e-14, ..Default::default() },
            inner: QuadConfig { rel_tol: 1e-12, abs_tol: 1e-15, ..Default::default() },
            outer: QuadConfig { rel_tol: 1e-10, abs_tol: 1e-13, ..Default::default() },
        }
    }
}

impl Precision {
    /// Same tolerances, with every range cut into `panels` pieces up front.
    pub fn with_panels(self, panels: usize) -> Self {
        Self {
            line: self.line.with_panels(panels),
            inner: self.inner.with_panels(panels),
            outer: self.outer.with_panels(panels),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelQuantities {
    pub lobe: Lobe,
    pub z: f64,
    /// `T_i(z)`: the period, the line integral of `1/|grad H|`.
    pub period: f64,
    /// `a_hat_i(z)`: region integral of `div(a grad H)`, oriented positive.
    pub a_hat: f64,
    /// `beta_hat_i(z)`: region integral of `div beta`, oriented along
    /// increasing `z`.
    pub beta_hat: f64,
    pub a: f64,
    pub beta: f64,
}

/// Closed range of `z` over which `C_i(z)` bounds a (possibly degenerate)
/// region.
pub fn level_range(sys: &TwoDiskSystem, lobe: Lobe) -> (f64, f64) {
    match lobe {
        Lobe::G1 | Lobe::G3 => (sys.extremum_level(lobe), 0.0),
        Lobe::G2 => (0.0, sys.extremum_level(lobe)),
        Lobe::G4 => (0.0, f64::INFINITY),
    }
}

fn check_level(sys: &TwoDiskSystem, lobe: Lobe, z: f64, closed: bool) -> Result<(), PlanarError> {
    let (lo, hi) = level_range(sys, lobe);
    let inside = if closed { z >= lo && z <= hi } else { z > lo && z < hi };
    if !inside || !z.is_finite() {
        return Err(PlanarError::EmptyLevel { lobe: lobe.index(), z });
    }
    if lobe == Lobe::G4 && sys.a > std::f64::consts::FRAC_1_SQRT_2 {
        return Err(PlanarError::UnsupportedGeometry(
            "exterior level curves need a <= 1/sqrt(2) to be star-shaped".into(),
        ));
    }
    Ok(())
}

struct Crossing {
    x_lo: f64,
    x_hi: f64,
    sqrt_d: f64,
}

fn crossing(sys: &TwoDiskSystem, lobe: Lobe, z: f64, y: f64) -> Crossing {
    let a2 = sys.a * sys.a;
    let w = 1.0 - y * y;
    let b = w + a2;
    // D and B^2 - D = (w - a^2)^2 - z both vanish at the top of the curve;
    // write them through (y_top - y) to keep their relative accuracy there
    let (d, b2_minus_d) = if z < 0.0 {
        let top = (1.0 + z / (4.0 * a2)).max(0.0).sqrt();
        (4.0 * a2 * (top - y) * (top + y), (w - a2).powi(2) - z)
    } else {
        let rz = z.sqrt();
        let gap = 1.0 - a2 - rz - y * y;
        (4.0 * a2 * w + z, gap * (gap + 2.0 * rz))
    };
    let sqrt_d = d.max(0.0).sqrt();
    let t_plus = b + sqrt_d;
    let t_minus = (b2_minus_d / t_plus).max(0.0);
    let (xp, xm) = (t_plus.sqrt(), t_minus.sqrt());
    let (x_lo, x_hi) = match lobe {
        Lobe::G1 => (-xp, -xm),
        Lobe::G2 => (-xm, xm),
        Lobe::G3 => (xm, xp),
        Lobe::G4 => unreachable!("exterior curves use polar coordinates"),
    };
    Crossing { x_lo, x_hi, sqrt_d }
}

fn y_top(sys: &TwoDiskSystem, lobe: Lobe, z: f64) -> f64 {
    let a2 = sys.a * sys.a;
    match lobe {
        Lobe::G1 | Lobe::G3 => (1.0 + z / (4.0 * a2)).max(0.0).sqrt(),
        Lobe::G2 => (1.0 - a2 - z.max(0.0).sqrt()).max(0.0).sqrt(),
        Lobe::G4 => unreachable!(),
    }
}

/// `(lo, hi, sqrt singularity at hi)` pieces of `[0, y_top]`, split at the
/// saddle height where the crossing switches circle.
fn y_pieces(sys: &TwoDiskSystem, lobe: Lobe, z: f64) -> Vec<(f64, f64, bool)> {
    let top = y_top(sys, lobe, z);
    let ys = (1.0 - sys.a * sys.a).sqrt();
    // the split only helps near z = 0, where the curve passes the saddle
    // at height ys; close to top = ys it would leave a near-singular end
    if lobe != Lobe::G2 && top > ys * 1.05 {
        vec![(0.0, ys, false), (ys, top, true)]
    } else {
        vec![(0.0, top, true)]
    }
}

/// Radius at angle `theta` of the exterior level curve `H = z > 0`.
pub fn outer_radius(sys: &TwoDiskSystem, z: f64, theta: f64) -> f64 {
    let (c, s) = (theta.cos(), theta.sin());
    let a = sys.a;
    // boundary of the union of the disks along this ray
    let rb = (a * c).abs() + (a * a * c * c + 1.0 - a * a).sqrt();
    let h = |r: f64| sys.h([r * c, r * s]);
    let (mut lo, mut hi) = (rb, rb + 1.0);
    while h(hi) < z {
        lo = hi;
        hi *= 2.0;
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = sys.grad_h([r * c, r * s]);
        let hr = g[0] * c + g[1] * s;
        let f = h(r) - z;
        if f > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let newton = r - f / hr;
        r = if hr > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (hi - lo) < 1e-15 * hi || f == 0.0 {
            break;
        }
    }
    r
}

/// `oint_{C_i(z)} g(x, |grad H(x)|) dl`, for `g` even in `y`.
pub fn line_integral<G: Fn(Point, f64) -> f64>(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    z: f64,
    g: G,
    prec: &Precision,
) -> Result<f64, PlanarError> {
    check_level(sys, lobe, z, false)?;
    if lobe == Lobe::G4 {
        let f = |theta: f64| {
            let r = outer_radius(sys, z, theta);
            let p = [r * theta.cos(), r * theta.sin()];
            let grad = sys.grad_h(p);
            let n = grad[0].hypot(grad[1]);
            let hr = grad[0] * theta.cos() + grad[1] * theta.sin();
            g(p, n) * n * r / hr.abs()
        };
        return Ok(2.0 * integrate(f, 0.0, std::f64::consts::PI, &prec.line)?.value);
    }
    let per_y = |y: f64| {
        let c = crossing(sys, lobe, z, y);
        let mut acc = 0.0;
        for x in [c.x_lo, c.x_hi] {
            let p = [x, y];
            let grad = sys.grad_h(p);
            let n = grad[0].hypot(grad[1]);
            let hx = 4.0 * x.abs() * c.sqrt_d;
            // hx = 0 only exactly at a turning point, a null set
            if hx > 0.0 {
                acc += g(p, n) * n / hx;
            }
        }
        acc
    };
    let mut total = 0.0;
    for (lo, hi, sing) in y_pieces(sys, lobe, z) {
        total += integrate_sqrt_ends(per_y, lo, hi, false, sing, &prec.line)?.value;
    }
    Ok(2.0 * total)
}

/// `int_{G_i(z)} f dx`, for `f` even in `y`. `z` may sit on the ends of the
/// level range; at `z = 0` the region is the whole lobe (for `G4`, the
/// region inside the outer separatrix).
pub fn region_integral<F: Fn(Point) -> f64>(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    z: f64,
    f: F,
    prec: &Precision,
) -> Result<f64, PlanarError> {
    check_level(sys, lobe, z, true)?;
    if lobe == Lobe::G4 {
        let mut err = None;
        let per_theta = |theta: f64| {
            let r_out = outer_radius(sys, z, theta);
            let (c, s) = (theta.cos(), theta.sin());
            match integrate(|r| f([r * c, r * s]) * r, 0.0, r_out, &prec.inner) {
                Ok(e) => e.value,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            }
        };
        let v = integrate(per_theta, 0.0, std::f64::consts::PI, &prec.outer)?.value;
        return match err {
            Some(e) => Err(e),
            None => Ok(2.0 * v),
        };
    }
    let err = std::cell::RefCell::new(None);
    let per_y = |y: f64| {
        let c = crossing(sys, lobe, z, y);
        match integrate(|x| f([x, y]), c.x_lo, c.x_hi, &prec.inner) {
            Ok(e) => e.value,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let mut total = 0.0;
    for (lo, hi, sing) in y_pieces(sys, lobe, z) {
        total += integrate_sqrt_ends(&per_y, lo, hi, false, sing, &prec.outer)?.value;
    }
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(2.0 * total),
    }
}

pub fn period(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    line_integral(sys, lobe, z, |_, n| 1.0 / n, prec)
}

/// `a_hat_i(z)` as a region integral.
pub fn a_hat(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    Ok(lobe.orientation() * region_integral(sys, lobe, z, |p| sys.div_a_grad_h(p), prec)?)
}

/// `beta_hat_i(z)` as a region integral.
pub fn beta_hat(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    Ok(lobe.orientation() * region_integral(sys, lobe, z, |p| sys.div_beta(p), prec)?)
}

/// `a_hat_i(z)` by the divergence theorem: `oint s |grad H| dl`.
pub fn a_hat_line(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    line_integral(sys, lobe, z, |p, n| sys.s(p) * n, prec)
}

/// `beta_hat_i(z)` by the divergence theorem: `c_beta z oint m |grad H| dl`.
pub fn beta_hat_line(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    Ok(sys.c_beta * z * line_integral(sys, lobe, z, |p, n| sys.m(p) * n, prec)?)
}

pub fn level_quantities(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    z: f64,
    prec: &Precision,
) -> Result<LevelQuantities, PlanarError> {
    check_level(sys, lobe, z, false)?;
    let period = period(sys, lobe, z, prec)?;
    let a_hat = a_hat(sys, lobe, z, prec)?;
    let beta_hat = beta_hat(sys, lobe, z, prec)?;
    Ok(LevelQuantities { lobe, z, period, a_hat, beta_hat, a: a_hat / period, beta: beta_hat / period })
}

/// Density of the invariant measure of the Hamiltonian flow on `C_i(z)` at
/// `p`, `1 / (T_i(z) |grad H(p)|)`.
pub fn invariant_density(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    z: f64,
    p: Point,
    prec: &Precision,
) -> Result<f64, PlanarError> {
    let off = (sys.h(p) - z).abs() > 1e-8 * z.abs().max(1.0);
    if off || sys.lobe_of(p).ok() != Some(lobe) {
        return Err(PlanarError::OffLevel { x: p[0], y: p[1], z });
    }
    let t = period(sys, lobe, z, prec)?;
    let g = sys.grad_h(p);
    Ok(1.0 / (t * g[0].hypot(g[1])))
}

/// A point of `C_i(z)` on the `x` axis: the rightmost crossing.
pub fn axis_point(sys: &TwoDiskSystem, lobe: Lobe, z: f64) -> Result<Point, PlanarError> {
    check_level(sys, lobe, z, false)?;
    Ok(match lobe {
        Lobe::G4 => [outer_radius(sys, z, 0.0), 0.0],
        _ => [crossing(sys, lobe, z, 0.0).x_hi, 0.0],
    })
}
