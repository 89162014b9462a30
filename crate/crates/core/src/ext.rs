//! Extended-real helpers. `f64::INFINITY` stands for "no finite-cost
//! transition" everywhere in the crate.

/// Relative tolerance under which two exponents count as the same value.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// True when `a` and `b` are equal up to [`TIE_TOLERANCE`] (both infinite counts
/// as equal).
pub fn ties(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    let scale = 1f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= TIE_TOLERANCE * scale
}

/// Minimum of an iterator of extended reals together with all positions that
/// achieve it (within tie tolerance). Returns `(INFINITY, [])` when every value
/// is infinite.
pub(crate) fn argmin_all<T: Clone>(items: impl IntoIterator<Item = (T, f64)>) -> (f64, Vec<T>) {
    let items: Vec<(T, f64)> = items.into_iter().collect();
    let best = items.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    if best.is_infinite() {
        return (f64::INFINITY, Vec::new());
    }
    let winners = items
        .into_iter()
        .filter(|(_, v)| ties(*v, best))
        .map(|(t, _)| t)
        .collect();
    (best, winners)
}

/// `None` for +inf, for JSON output.
pub(crate) fn to_json_ext(v: f64) -> Option<f64> {
    if v.is_finite() {
        Some(v)
    } else {
        None
    }
}

/// Human formatting with `inf` for unbounded values.
pub fn fmt_ext(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        // `+ 0.0` turns -0 into 0
        format!("{}", v + 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_are_relative() {
        assert!(ties(1.0, 1.0 + 1e-12));
        assert!(ties(1e6, 1e6 + 1e-4));
        assert!(!ties(1.0, 1.001));
        assert!(ties(f64::INFINITY, f64::INFINITY));
        assert!(!ties(f64::INFINITY, 1e300));
    }

    #[test]
    fn argmin_keeps_all_achievers() {
        let (m, w) = argmin_all(vec![(0, 3.0), (1, 1.0), (2, 1.0), (3, f64::INFINITY)]);
        assert_eq!(m, 1.0);
        assert_eq!(w, vec![1, 2]);
        let (m, w) = argmin_all(vec![(0usize, f64::INFINITY)]);
        assert!(m.is_infinite());
        assert!(w.is_empty());
    }
}
