//! Limits as `delta -> 0` then `kappa -> 0`: barrier heights `alpha_i`,
//! boundary fluxes `gamma_i` and the `sqrt(a_hat_i gamma_i)` branching
//! weights.

use serde::Serialize;

use crate::level::{line_integral, Precision};
use crate::quad::integrate;
use crate::system::{Lobe, Point, TwoDiskSystem};
use crate::PlanarError;

/// Unit-circle arc `centre + (cos t, sin t)`, `t` in `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub centre_x: f64,
    pub lo: f64,
    pub hi: f64,
}

/// The circle arcs making up the boundary of `G_i`.
pub fn boundary_arcs(sys: &TwoDiskSystem, lobe: Lobe) -> Vec<Arc> {
    use std::f64::consts::PI;
    let a = sys.a;
    let ta = a.acos();
    // left circle: outer arc has cos t < a, inner arc cos t > a
    let left_outer = Arc { centre_x: -a, lo: ta, hi: 2.0 * PI - ta };
    let left_inner = Arc { centre_x: -a, lo: -ta, hi: ta };
    // right circle: outer arc has cos t > -a, inner arc cos t < -a
    let right_outer = Arc { centre_x: a, lo: -(PI - ta), hi: PI - ta };
    let right_inner = Arc { centre_x: a, lo: PI - ta, hi: PI + ta };
    match lobe {
        Lobe::G1 => vec![left_outer, right_inner],
        Lobe::G2 => vec![left_inner, right_inner],
        Lobe::G3 => vec![right_outer, left_inner],
        Lobe::G4 => vec![left_outer, right_outer],
    }
}

/// `oint_{C_i} g dl` over the zero-level boundary of `G_i`.
pub fn boundary_integral<G: Fn(Point, f64) -> f64>(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    g: G,
    prec: &Precision,
) -> Result<f64, PlanarError> {
    let mut total = 0.0;
    for arc in boundary_arcs(sys, lobe) {
        let f = |t: f64| {
            let p = [arc.centre_x + t.cos(), t.sin()];
            let grad = sys.grad_h(p);
            g(p, grad[0].hypot(grad[1]))
        };
        total += integrate(f, arc.lo, arc.hi, &prec.line)?.value;
    }
    Ok(total)
}

/// `gamma_i = oint_{C_i} div beta / |grad H| dl`. On `H = 0` this is
/// `c_beta oint m |grad H| dl`, and `m` vanishes on the outer arcs.
pub fn gamma(sys: &TwoDiskSystem, lobe: Lobe, prec: &Precision) -> Result<f64, PlanarError> {
    if lobe == Lobe::G4 {
        return Err(PlanarError::BadTargets("gamma is defined for lobes 1 to 3".into()));
    }
    Ok(sys.c_beta * boundary_integral(sys, lobe, |p, n| sys.m(p) * n, prec)?)
}

/// Closed form of `gamma_1`: on the inner arc `m |grad H| = 4 f1^2` with
/// `f1 = -4a(a + cos t)`, integrated over `cos t < -a`.
pub fn gamma1_closed_form(sys: &TwoDiskSystem) -> f64 {
    let a = sys.a;
    let t0 = (-a).acos();
    let l = 2.0 * std::f64::consts::PI - 2.0 * t0;
    64.0 * sys.c_beta * a * a * (a * a * l - 4.0 * a * t0.sin() + 0.5 * l - 0.5 * (2.0 * t0).sin())
}

/// `a_hat_i = a_hat_i(0) = oint_{C_i} s |grad H| dl`.
pub fn a_hat_boundary(sys: &TwoDiskSystem, lobe: Lobe, prec: &Precision) -> Result<f64, PlanarError> {
    boundary_integral(sys, lobe, |p, n| sys.s(p) * n, prec)
}

/// `beta_hat_i(z) / a_hat_i(z)`, from the line forms of both.
pub fn drift_ratio(sys: &TwoDiskSystem, lobe: Lobe, z: f64, prec: &Precision) -> Result<f64, PlanarError> {
    let mass = line_integral(sys, lobe, z, |p, n| sys.m(p) * n, prec)?;
    let diff = line_integral(sys, lobe, z, |p, n| sys.s(p) * n, prec)?;
    Ok(sys.c_beta * z * mass / diff)
}

/// `|int_{H(O_i)}^0 beta_hat_i / a_hat_i dz|`, reading the printed
/// denominator as `a_hat_i`. The quasipotential of the edge diffusion
/// `(kappa/2) a_i u'' + beta_i u'` is twice this; see [`crate::edge`].
pub fn alpha_limit(sys: &TwoDiskSystem, lobe: Lobe, prec: &Precision) -> Result<f64, PlanarError> {
    if lobe == Lobe::G4 {
        return Err(PlanarError::BadTargets("alpha is defined for lobes 1 to 3".into()));
    }
    let ze = sys.extremum_level(lobe);
    let mut err = None;
    let f = |z: f64| match drift_ratio(sys, lobe, z, prec) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    };
    let cfg = prec.outer.with_rel_tol(prec.outer.rel_tol.max(1e-9));
    let v = integrate(f, ze, 0.0, &cfg)?.value;
    match err {
        Some(e) => Err(e),
        None => Ok(v.abs()),
    }
}

/// `w_i = sqrt(a_hat_i gamma_i) / sum_j sqrt(a_hat_j gamma_j)` over `targets`.
pub fn metastable_weights(
    sys: &TwoDiskSystem,
    targets: &[Lobe],
    prec: &Precision,
) -> Result<Vec<f64>, PlanarError> {
    let mut sorted = targets.to_vec();
    sorted.sort_by_key(|l| l.index());
    sorted.dedup();
    if !(2..=3).contains(&sorted.len()) || sorted.len() != targets.len() || targets.contains(&Lobe::G4) {
        return Err(PlanarError::BadTargets("need 2 or 3 distinct targets among lobes 1 to 3".into()));
    }
    let mut roots = Vec::with_capacity(targets.len());
    for &lobe in targets {
        let prod = a_hat_boundary(sys, lobe, prec)? * gamma(sys, lobe, prec)?;
        if !(prod > 0.0) {
            return Err(PlanarError::DegenerateWeight { lobe: lobe.index(), product: prod });
        }
        roots.push(prod.sqrt());
    }
    let total: f64 = roots.iter().sum();
    Ok(roots.into_iter().map(|r| r / total).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub system: TwoDiskSystem,
    /// Indexed by lobe `1..=3`.
    pub alphas: Vec<f64>,
    /// `2 alpha_i`: the edge-diffusion quasipotential.
    pub alphas_doubled: Vec<f64>,
    pub gammas: Vec<f64>,
    pub a_hats: Vec<f64>,
    pub weights_three: Vec<f64>,
    /// Split between lobes 2 and 3 after leaving lobe 1.
    pub weights_from_1: Vec<f64>,
}

pub fn theory_report(sys: &TwoDiskSystem, prec: &Precision) -> Result<TheoryReport, PlanarError> {
    let lobes = [Lobe::G1, Lobe::G2, Lobe::G3];
    let mut alphas = Vec::new();
    let mut gammas = Vec::new();
    let mut a_hats = Vec::new();
    for l in lobes {
        alphas.push(alpha_limit(sys, l, prec)?);
        gammas.push(gamma(sys, l, prec)?);
        a_hats.push(a_hat_boundary(sys, l, prec)?);
    }
    Ok(TheoryReport {
        system: *sys,
        alphas_doubled: alphas.iter().map(|a| 2.0 * a).collect(),
        alphas,
        gammas,
        a_hats,
        weights_three: metastable_weights(sys, &lobes, prec)?,
        weights_from_1: metastable_weights(sys, &[Lobe::G2, Lobe::G3], prec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcs_lie_on_the_separatrix_of_the_right_lobe() {
        let s = TwoDiskSystem::default();
        for lobe in Lobe::ALL {
            for arc in boundary_arcs(&s, lobe) {
                for k in 1..20 {
                    let t = arc.lo + (arc.hi - arc.lo) * k as f64 / 20.0;
                    let p = [arc.centre_x + t.cos(), t.sin()];
                    assert!(s.h(p).abs() < 1e-14);
                    // nudge along the inward normal of the domain
                    let g = s.grad_h(p);
                    let n = g[0].hypot(g[1]);
                    let step = 1e-6 * lobe.orientation() * if lobe == Lobe::G4 { -1.0 } else { 1.0 };
                    let q = [p[0] - step * g[0] / n, p[1] - step * g[1] / n];
                    let inside = s.lobe_of(q).unwrap();
                    assert_eq!(inside, lobe, "{lobe:?} at t = {t}");
                }
            }
        }
    }

    #[test]
    fn gamma1_matches_closed_form() {
        let s = TwoDiskSystem::default();
        let g = gamma(&s, Lobe::G1, &Precision::default()).unwrap();
        assert!((g / gamma1_closed_form(&s) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn weights_need_valid_targets() {
        let s = TwoDiskSystem::default();
        let p = Precision::default();
        assert!(metastable_weights(&s, &[Lobe::G1], &p).is_err());
        assert!(metastable_weights(&s, &[Lobe::G1, Lobe::G1], &p).is_err());
        assert!(metastable_weights(&s, &[Lobe::G1, Lobe::G4], &p).is_err());
        let w = metastable_weights(&s, &[Lobe::G2, Lobe::G3], &p).unwrap();
        assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
    }
}
