//! Small statistics helpers for summaries and acceptance checks.

/// Median of the finite values, `NaN` when there are none.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of the finite values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        return v[lo];
    }
    let w = pos - lo as f64;
    v[lo] * (1.0 - w) + v[hi] * w
}

/// Least-squares slope of `y` against `x`. `None` with fewer than two
/// distinct abscissae.
pub fn slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let sxy: f64 = x[..n].iter().zip(&y[..n]).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x[..n].iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `log y` against `log x` over pairs with both positive.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .unzip();
    slope(&lx, &ly)
}

/// Errors below this sit at double-precision round-off and carry no rate
/// information.
pub const ROUND_OFF_FLOOR: f64 = 1e-14;

/// Convergence order: slope of `log e_{t+1}` against `log e_t` over the
/// iterations whose error `e_t` lies in `[lo, hi]`. A successor that already
/// hit [`ROUND_OFF_FLOOR`] is dropped. `None` with fewer than two pairs.
pub fn convergence_order(errors: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = errors
        .windows(2)
        .filter(|w| w[0] >= lo && w[0] <= hi && w[1] >= ROUND_OFF_FLOOR)
        .map(|w| (w[0], w[1]))
        .unzip();
    loglog_slope(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), 2.0);
    }

    #[test]
    fn slopes() {
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(slope(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        let x = [1e-4, 1e-3, 1e-2];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert!((loglog_slope(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn order_of_a_squaring_sequence() {
        let e = [1e-1, 1e-2, 1e-4, 1e-8, 1e-16];
        // The last step lands on round-off and is ignored.
        assert!((convergence_order(&e, 1e-12, 1e-2).unwrap() - 2.0).abs() < 1e-12);
        assert!(convergence_order(&[1e-3, 1e-6], 1e-12, 1e-2).is_none());
    }

    #[test]
    fn quadratic_sequence_has_order_two() {
        let mut e = vec![1e-1];
        for _ in 0..4 {
            let last = *e.last().unwrap();
            e.push(0.5 * last * last);
        }
        let order = convergence_order(&e, 1e-12, 1e-1).unwrap();
        assert!((order - 2.0).abs() < 0.05, "{order}");
    }
}
