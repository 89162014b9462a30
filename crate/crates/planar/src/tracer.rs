//! Predictor-corrector marching along a level curve: an independent check
//! on the closed-form crossings used by [`crate::level`].

use crate::level::axis_point;
use crate::system::{Lobe, Point, TwoDiskSystem};
use crate::PlanarError;

#[derive(Debug, Clone, PartialEq)]
pub struct TracedCurve {
    pub points: Vec<Point>,
    pub length: f64,
}

fn project(sys: &TwoDiskSystem, mut p: Point, z: f64) -> Point {
    for _ in 0..8 {
        let g = sys.grad_h(p);
        let n2 = g[0] * g[0] + g[1] * g[1];
        let d = (sys.h(p) - z) / n2;
        p = [p[0] - d * g[0], p[1] - d * g[1]];
        if d.abs() * n2.sqrt() < 1e-15 {
            break;
        }
    }
    p
}

fn tangent(sys: &TwoDiskSystem, p: Point) -> Point {
    let t = sys.skew_grad_h(p);
    let n = t[0].hypot(t[1]);
    [t[0] / n, t[1] / n]
}

/// Marches once around `C_i(z)` with arc step `h`, starting and ending on
/// the positive side of the `x` axis crossing.
pub fn trace(sys: &TwoDiskSystem, lobe: Lobe, z: f64, h: f64) -> Result<TracedCurve, PlanarError> {
    let start = axis_point(sys, lobe, z)?;
    let mut points = vec![start];
    let mut p = start;
    let mut length = 0.0;
    let mut crossings = 0;
    let max_steps = (1e3 / h) as usize;
    for _ in 0..max_steps {
        // midpoint predictor along the unit tangent, then Newton back onto
        // the level
        let t0 = tangent(sys, p);
        let mid = project(sys, [p[0] + 0.5 * h * t0[0], p[1] + 0.5 * h * t0[1]], z);
        let t1 = tangent(sys, mid);
        let q = project(sys, [p[0] + h * t1[0], p[1] + h * t1[1]], z);
        if p[1] != 0.0 && q[1] != 0.0 && (p[1] > 0.0) != (q[1] > 0.0) || (q[1] == 0.0 && p[1] != 0.0) {
            crossings += 1;
            if crossings == 2 {
                // close the loop at the starting point
                length += (start[0] - p[0]).hypot(start[1] - p[1]);
                points.push(start);
                return Ok(TracedCurve { points, length });
            }
        }
        length += (q[0] - p[0]).hypot(q[1] - p[1]);
        points.push(q);
        p = q;
    }
    Err(PlanarError::QuadratureFail(format!("level curve of lobe {} at z = {z} did not close", lobe.index())))
}

impl TracedCurve {
    /// `oint g dl` by the trapezoid rule on the chords.
    pub fn integrate<G: Fn(Point) -> f64>(&self, g: G) -> f64 {
        self.points
            .windows(2)
            .map(|w| 0.5 * (g(w[0]) + g(w[1])) * (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

/// `oint g dl` with Richardson extrapolation over steps `h` and `h/2`.
pub fn traced_integral<G: Fn(Point) -> f64 + Copy>(
    sys: &TwoDiskSystem,
    lobe: Lobe,
    z: f64,
    h: f64,
    g: G,
) -> Result<f64, PlanarError> {
    let coarse = trace(sys, lobe, z, h)?.integrate(g);
    let fine = trace(sys, lobe, z, 0.5 * h)?.integrate(g);
    Ok((4.0 * fine - coarse) / 3.0)
}
