//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature.

use std::collections::BinaryHeap;

use crate::PlanarError;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_067_774_000,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    /// Equal panels the range is cut into before adapting; doubling it is
    /// the mesh-halving convergence check.
    pub initial_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: 4000, initial_panels: 1 }
    }
}

impl QuadConfig {
    pub fn with_panels(self, initial_panels: usize) -> Self {
        Self { initial_panels, ..self }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    /// Integral of `|f|`, for the roundoff floor.
    magnitude: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 21-point rule with the error estimate of QUADPACK's `qk21`.
fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = WGK[10] * fc;
    let mut g = 0.0;
    let mut abs = WGK[10] * fc.abs();
    let mut vals = [(0.0, 0.0); 10];
    for j in 0..10 {
        let dx = h * XGK[j];
        let (a, b) = (f(c - dx), f(c + dx));
        vals[j] = (a, b);
        k += WGK[j] * (a + b);
        abs += WGK[j] * (a.abs() + b.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * (a + b);
        }
    }
    let mean = 0.5 * k;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((vals[j].0 - mean).abs() + (vals[j].1 - mean).abs());
    }
    let (k, abs, asc) = (k * h, abs * h.abs(), asc * h.abs());
    let mut err = ((k - g * h)).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs);
    }
    (k, err, abs)
}

/// Integral of `f` over `[lo, hi]`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadConfig,
) -> Result<Estimate, PlanarError> {
    if lo == hi {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let panels = cfg.initial_panels.max(1);
    let mut heap = BinaryHeap::new();
    let (mut total, mut error, mut magnitude) = (0.0, 0.0, 0.0);
    for p in 0..panels {
        let a = lo + (hi - lo) * p as f64 / panels as f64;
        let b = if p + 1 == panels { hi } else { lo + (hi - lo) * (p + 1) as f64 / panels as f64 };
        let (value, err, mag) = kronrod(&mut f, a, b);
        total += value;
        error += err;
        magnitude += mag;
        heap.push(Piece { lo: a, hi: b, value, error: err, magnitude: mag });
    }
    let mut evaluations = 21 * panels;
    // below 100 eps int |f| the estimate is roundoff, not truncation
    while error > cfg.abs_tol.max(cfg.rel_tol * total.abs()).max(100.0 * f64::EPSILON * magnitude) {
        if !total.is_finite() {
            return Err(PlanarError::QuadratureFail(format!("non-finite integrand on [{lo}, {hi}]")));
        }
        if heap.len() >= cfg.max_intervals {
            return Err(PlanarError::QuadratureFail(format!(
                "error {error:.3e} after {} intervals on [{lo}, {hi}]",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("at least one piece");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // cannot split further; accept what we have
            heap.push(worst);
            break;
        }
        let (v1, e1, m1) = kronrod(&mut f, worst.lo, mid);
        let (v2, e2, m2) = kronrod(&mut f, mid, worst.hi);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        magnitude += m1 + m2 - worst.magnitude;
        heap.push(Piece { lo: worst.lo, hi: mid, value: v1, error: e1, magnitude: m1 });
        heap.push(Piece { lo: mid, hi: worst.hi, value: v2, error: e2, magnitude: m2 });
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    if !value.is_finite() {
        return Err(PlanarError::QuadratureFail(format!("non-finite integrand on [{lo}, {hi}]")));
    }
    Ok(Estimate { value, error, evaluations })
}

/// Integral over `[lo, hi]` of an integrand with `1/sqrt` endpoint behaviour
/// (or `sqrt` behaviour, which is harmless) at the flagged ends. The
/// substitution `y = end -+ (hi - lo) u^2` makes it smooth.
pub fn integrate_sqrt_ends<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    sing_lo: bool,
    sing_hi: bool,
    cfg: &QuadConfig,
) -> Result<Estimate, PlanarError> {
    let w = hi - lo;
    match (sing_lo, sing_hi) {
        (false, false) => integrate(f, lo, hi, cfg),
        (true, false) => integrate(|u| 2.0 * w * u * f(lo + w * u * u), 0.0, 1.0, cfg),
        (false, true) => integrate(|u| 2.0 * w * u * f(hi - w * u * u), 0.0, 1.0, cfg),
        (true, true) => {
            let half = 0.5 * w;
            let a = integrate(|u| 2.0 * half * u * f(lo + half * u * u), 0.0, 1.0, cfg)?;
            let b = integrate(|u| 2.0 * half * u * f(hi - half * u * u), 0.0, 1.0, cfg)?;
            Ok(Estimate {
                value: a.value + b.value,
                error: a.error + b.error,
                evaluations: a.evaluations + b.evaluations,
            })
        }
    }
}
