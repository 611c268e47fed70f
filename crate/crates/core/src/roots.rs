//! Grid scanning and bisection for real residual functions of energy.

/// Uniform grid of `n ≥ 2` points covering `[lo, hi]` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

/// Pairs `(a, b, f(a), f(b))` of consecutive samples whose values have
/// strictly opposite signs, or where a sample is exactly zero. Samples that
/// are `None` (residual undefined there) break brackets.
pub fn sign_change_brackets(xs: &[f64], values: &[Option<f64>]) -> Vec<(f64, f64, f64, f64)> {
    let mut out = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        if let (Some(fa), Some(fb)) = (values[i], values[i + 1]) {
            let exact_left = fa == 0.0 && (i == 0 || values[i - 1].is_none_or(|p| p != 0.0));
            if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) || exact_left {
                out.push((xs[i], xs[i + 1], fa, fb));
            }
        }
    }
    out
}

/// Bisects a sign change of `f` on `[a, b]` until the bracket is narrower
/// than `tol`. Evaluation failures inside the bracket end the search at the
/// current midpoint.
pub fn bisect<F>(mut f: F, mut a: f64, mut b: f64, mut fa: f64, fb: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> Option<f64>,
{
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol || mid == a || mid == b {
            return mid;
        }
        let Some(fm) = f(mid) else {
            return mid;
        };
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Scans `f` on `grid` points over `[lo, hi]` and bisects every sign change.
pub fn find_roots<F>(f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> Option<f64>,
{
    let xs = linspace(lo, hi, grid);
    let values: Vec<_> = xs.iter().map(|&x| f(x)).collect();
    sign_change_brackets(&xs, &values)
        .into_iter()
        .map(|(a, b, fa, fb)| bisect(&f, a, b, fa, fb, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let xs = linspace(-1.0, 2.0, 7);
        assert_eq!(xs.len(), 7);
        assert_eq!(xs[0], -1.0);
        assert_eq!(xs[6], 2.0);
    }

    #[test]
    fn finds_cosine_roots() {
        let roots = find_roots(|x| Some(x.cos()), 0.0, 10.0, 100, 1e-13);
        let expected = [1.0, 3.0, 5.0].map(|n| n * std::f64::consts::FRAC_PI_2);
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip(expected) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn undefined_samples_break_brackets() {
        let xs = [0.0, 1.0, 2.0];
        let vals = [Some(-1.0), None, Some(1.0)];
        assert!(sign_change_brackets(&xs, &vals).is_empty());
    }

    #[test]
    fn exact_zero_on_grid_counts_once() {
        let roots = find_roots(|x| Some(x - 1.0), 0.0, 2.0, 3, 1e-12);
        assert_eq!(roots, vec![1.0]);
    }
}
