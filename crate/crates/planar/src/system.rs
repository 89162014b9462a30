//! The two-disk system: `H = f1 f2` with `f1`, `f2` the defining functions
//! of two unit disks centred at `(-a, 0)` and `(a, 0)`.
//!
//! Domains: `G1` is the left disk minus the right one, `G2` their
//! intersection, `G3` the right disk minus the left one and `G4` the
//! exterior. `H < 0` in `G1`, `G3` and `H > 0` in `G2`, `G4`; the zero set is
//! the separatrix `Pi`, made of the four circle arcs joining the saddles.

use serde::Serialize;

use crate::PlanarError;

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Lobe {
    G1,
    G2,
    G3,
    G4,
}

impl Lobe {
    pub const ALL: [Lobe; 4] = [Lobe::G1, Lobe::G2, Lobe::G3, Lobe::G4];

    /// 1-based index as used in labels.
    pub fn index(self) -> usize {
        match self {
            Lobe::G1 => 1,
            Lobe::G2 => 2,
            Lobe::G3 => 3,
            Lobe::G4 => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Lobe> {
        Lobe::ALL.get(i.checked_sub(1)?).copied()
    }

    /// `+1` where `G_i(z) = {H < z}` near its boundary, `-1` where it is
    /// `{H > z}`. Multiplying region integrals by this makes the averaged
    /// coefficients positive and orients `beta_hat` along increasing `z`.
    pub fn orientation(self) -> f64 {
        match self {
            Lobe::G2 => -1.0,
            _ => 1.0,
        }
    }
}

/// Drift and noise of the rescaled equation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Field {
    pub drift: Point,
    /// Scalar noise coefficient `sqrt(kappa s(x))`; the noise matrix is this
    /// times the identity.
    pub noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoDiskSystem {
    pub a: f64,
    pub c_beta: f64,
    pub c_a: f64,
    pub r_max: f64,
}

impl Default for TwoDiskSystem {
    fn default() -> Self {
        Self { a: 0.6, c_beta: 0.5, c_a: 0.4, r_max: 3.0 }
    }
}

/// Offset `a*` at which the three branching weights coincide for isotropic
/// diffusion: the root of `pi a / 2 + a acos(a) = sqrt(1 - a^2)` on `(0, 1)`.
pub fn symmetric_offset() -> f64 {
    let g = |a: f64| std::f64::consts::FRAC_PI_2 * a + a * a.acos() - (1.0 - a * a).sqrt();
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl TwoDiskSystem {
    pub fn new(a: f64, c_beta: f64, c_a: f64, r_max: f64) -> Result<Self, PlanarError> {
        let bad = |what: &str| Err(PlanarError::InvalidParameter(what.to_string()));
        if !(a > 0.0 && a < 1.0) {
            return bad("offset a must lie in (0, 1)");
        }
        if !(c_beta > 0.0 && c_beta.is_finite()) {
            return bad("c_beta must be positive");
        }
        if !(c_a.abs() < 1.0) {
            return bad("|c_a| must be below 1 for ellipticity");
        }
        if !(r_max > 2.0 && r_max.is_finite()) {
            return bad("r_max must exceed 2");
        }
        Ok(Self { a, c_beta, c_a, r_max })
    }

    /// Isotropic diffusion at `a = a*`, where all three weights are `1/3`.
    pub fn symmetric() -> Self {
        Self { a: symmetric_offset(), c_beta: 0.5, c_a: 0.0, r_max: 3.0 }
    }

    pub fn f1(&self, p: Point) -> f64 {
        1.0 - (p[0] + self.a).powi(2) - p[1] * p[1]
    }

    pub fn f2(&self, p: Point) -> f64 {
        1.0 - (p[0] - self.a).powi(2) - p[1] * p[1]
    }

    pub fn h(&self, p: Point) -> f64 {
        self.f1(p) * self.f2(p)
    }

    pub fn grad_h(&self, p: Point) -> Point {
        let (f1, f2) = (self.f1(p), self.f2(p));
        let [x, y] = p;
        [
            -2.0 * (x + self.a) * f2 - 2.0 * (x - self.a) * f1,
            -2.0 * y * (f1 + f2),
        ]
    }

    /// `[[h_xx, h_xy], [h_xy, h_yy]]`.
    pub fn hess_h(&self, p: Point) -> [[f64; 2]; 2] {
        let (f1, f2) = (self.f1(p), self.f2(p));
        let [x, y] = p;
        let g1 = [-2.0 * (x + self.a), -2.0 * y];
        let g2 = [-2.0 * (x - self.a), -2.0 * y];
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let diag = if i == j { -2.0 * (f1 + f2) } else { 0.0 };
                out[i][j] = diag + g1[i] * g2[j] + g2[i] * g1[j];
            }
        }
        out
    }

    pub fn laplacian_h(&self, p: Point) -> f64 {
        16.0 * (p[0] * p[0] + p[1] * p[1]) - 8.0
    }

    /// Rotation field `(-h_y, h_x)`.
    pub fn skew_grad_h(&self, p: Point) -> Point {
        let g = self.grad_h(p);
        [-g[1], g[0]]
    }

    /// `m = f1 + f2 + sqrt(f1^2 + f2^2)`: positive inside the union of the
    /// disks, negative outside, zero on the outer arcs.
    pub fn m(&self, p: Point) -> f64 {
        let (f1, f2) = (self.f1(p), self.f2(p));
        f1 + f2 + f1.hypot(f2)
    }

    pub fn grad_m(&self, p: Point) -> Point {
        let (f1, f2) = (self.f1(p), self.f2(p));
        let [x, y] = p;
        let g1 = [-2.0 * (x + self.a), -2.0 * y];
        let g2 = [-2.0 * (x - self.a), -2.0 * y];
        let r = f1.hypot(f2);
        // at the saddles r = 0 and the gradient has no limit; use the
        // smooth part there
        let (w1, w2) = if r > 0.0 { (f1 / r, f2 / r) } else { (0.0, 0.0) };
        [
            g1[0] * (1.0 + w1) + g2[0] * (1.0 + w2),
            g1[1] * (1.0 + w1) + g2[1] * (1.0 + w2),
        ]
    }

    pub fn beta(&self, p: Point) -> Point {
        let k = self.c_beta * self.h(p) * self.m(p);
        let g = self.grad_h(p);
        [k * g[0], k * g[1]]
    }

    pub fn div_beta(&self, p: Point) -> f64 {
        let h = self.h(p);
        let m = self.m(p);
        let g = self.grad_h(p);
        let gm = self.grad_m(p);
        let g2 = g[0] * g[0] + g[1] * g[1];
        self.c_beta * (m * g2 + h * (gm[0] * g[0] + gm[1] * g[1]) + h * m * self.laplacian_h(p))
    }

    /// Diffusion scale `s(x) = 1 + c_a tanh(x)`; the tensor is `s I`.
    pub fn s(&self, p: Point) -> f64 {
        1.0 + self.c_a * p[0].tanh()
    }

    pub fn ds_dx(&self, p: Point) -> f64 {
        let c = p[0].cosh();
        self.c_a / (c * c)
    }

    /// `div(s grad H)`.
    pub fn div_a_grad_h(&self, p: Point) -> f64 {
        self.s(p) * self.laplacian_h(p) + self.ds_dx(p) * self.grad_h(p)[0]
    }

    /// `O1 .. O5`: the minima, the maximum and the two saddles.
    pub fn critical_points(&self) -> [Point; 5] {
        let c = (1.0 + self.a * self.a).sqrt();
        let s = (1.0 - self.a * self.a).sqrt();
        [[-c, 0.0], [0.0, 0.0], [c, 0.0], [0.0, s], [0.0, -s]]
    }

    /// `H` at `O_i`, `i` in `1..=3`.
    pub fn extremum_level(&self, lobe: Lobe) -> f64 {
        match lobe {
            Lobe::G1 | Lobe::G3 => -4.0 * self.a * self.a,
            Lobe::G2 => (1.0 - self.a * self.a).powi(2),
            Lobe::G4 => f64::INFINITY,
        }
    }

    pub fn equilibrium(&self, lobe: Lobe) -> Option<Point> {
        let o = self.critical_points();
        match lobe {
            Lobe::G1 => Some(o[0]),
            Lobe::G2 => Some(o[1]),
            Lobe::G3 => Some(o[2]),
            Lobe::G4 => None,
        }
    }

    /// Domain containing `p`, from the signs of `f1`, `f2`.
    pub fn lobe_of(&self, p: Point) -> Result<Lobe, PlanarError> {
        let (f1, f2) = (self.f1(p), self.f2(p));
        if f1.abs() < 1e-12 || f2.abs() < 1e-12 {
            return Err(PlanarError::OnSeparatrix { x: p[0], y: p[1] });
        }
        Ok(match (f1 > 0.0, f2 > 0.0) {
            (true, true) => Lobe::G2,
            (true, false) => Lobe::G1,
            (false, true) => Lobe::G3,
            (false, false) => Lobe::G4,
        })
    }

    /// Coordinates `(i, z)` of the point's level curve on the graph.
    pub fn project_to_graph(&self, p: Point) -> Result<(Lobe, f64), PlanarError> {
        Ok((self.lobe_of(p)?, self.h(p)))
    }

    /// Drift `(1/delta) skew grad H + beta` and the noise coefficient. Outside
    /// `r_max` the drift is frozen at its value on the radius through `p`,
    /// which points inward there.
    pub fn eval_field(&self, p: Point, delta: f64, kappa: f64) -> Field {
        let r = p[0].hypot(p[1]);
        let q = if r > self.r_max { [p[0] * self.r_max / r, p[1] * self.r_max / r] } else { p };
        let rot = self.skew_grad_h(q);
        let b = self.beta(q);
        Field {
            drift: [rot[0] / delta + b[0], rot[1] / delta + b[1]],
            noise: (kappa * self.s(p)).sqrt(),
        }
    }

    /// Newton iteration for `grad H = 0` started at `p`.
    pub fn newton_critical(&self, mut p: Point) -> Option<Point> {
        for _ in 0..100 {
            let g = self.grad_h(p);
            let h = self.hess_h(p);
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if det.abs() < 1e-14 {
                return None;
            }
            let dx = (h[1][1] * g[0] - h[0][1] * g[1]) / det;
            let dy = (h[0][0] * g[1] - h[1][0] * g[0]) / det;
            p = [p[0] - dx, p[1] - dy];
            if !p[0].is_finite() || p[0].hypot(p[1]) > 10.0 {
                return None;
            }
            if dx.hypot(dy) < 1e-15 {
                break;
            }
        }
        let g = self.grad_h(p);
        (g[0].hypot(g[1]) < 1e-12).then_some(p)
    }
}
