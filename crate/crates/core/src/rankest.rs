//! Rank estimation from the spectral gaps of `X̂ = P_AB(P_Ω*(Y)) / p`.
//!
//! `ĝ_i = σ̂_i / (σ̂_{i+1} + D σ̂₁ √i)` for `i = 1 … min(d1,d2) − 1`; the estimate
//! is the (1-based) index of the largest gap. The singular values come from
//! the `d1 x d2` matrix `Aᵀ P_Ω*(Y) B / p`, which has the same spectrum as `X̂`.
//! Singular values below `ε · max(d1,d2) · σ̂₁` are treated as exact zeros.

use serde::Serialize;

use crate::error::{mismatch, Error, Result};
use crate::linops::singular_values;
use crate::problem::{SampleSet, SideInfo};
use crate::sensing::SensingOp;

#[derive(Debug, Clone, Serialize)]
pub struct RankEstimate {
    /// 1-based index of the largest gap.
    pub r_hat: usize,
    /// `gaps[i-1] = ĝ_i`.
    pub gaps: Vec<f64>,
    pub d_const: f64,
    pub sigma_hat: Vec<f64>,
}

/// `(√(d1 d2) / |Ω|)^½`.
pub fn default_d_const(d1: usize, d2: usize, num_samples: usize) -> f64 {
    ((d1 as f64 * d2 as f64).sqrt() / num_samples as f64).sqrt()
}

/// `σ_i / (σ_{i+1} + D σ₁ √i)` for consecutive pairs of `spectrum`.
///
/// A zero denominator gives `+∞` (or NaN when the numerator is zero too).
pub fn gaps(spectrum: &[f64], d_const: f64) -> Vec<f64> {
    let top = spectrum.first().copied().unwrap_or(0.0);
    spectrum
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let i = (k + 1) as f64;
            let denom = w[1] + d_const * top * i.sqrt();
            if denom == 0.0 {
                if w[0] > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NAN
                }
            } else {
                w[0] / denom
            }
        })
        .collect()
}

/// Gaps of the exact spectrum, for comparison with estimated ones.
pub fn true_gaps(spectrum: &[f64], d_const: f64) -> Vec<f64> {
    gaps(spectrum, d_const)
}

/// 1-based argmax, ignoring NaN; ties go to the smallest index.
fn argmax(gaps: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &g) in gaps.iter().enumerate() {
        if g.is_nan() {
            continue;
        }
        if best.is_none_or(|(_, b)| g > b) {
            best = Some((k + 1, g));
        }
    }
    best.map(|(k, _)| k)
}

pub fn estimate_rank(
    side: &SideInfo,
    samples: &SampleSet,
    y: &[f64],
    d_const: Option<f64>,
) -> Result<RankEstimate> {
    if y.len() != samples.len() {
        return Err(mismatch(samples.len(), y.len()));
    }
    if samples.n1() != side.n1() || samples.n2() != side.n2() {
        return Err(mismatch(
            format!("{}x{} grid", side.n1(), side.n2()),
            format!("{}x{}", samples.n1(), samples.n2()),
        ));
    }
    if side.d1().min(side.d2()) < 2 {
        return Err(Error::BadDims("rank estimation needs min(d1, d2) >= 2".into()));
    }
    let d_const = match d_const {
        Some(d) if (0.0..1.0).contains(&d) => d,
        Some(d) => return Err(Error::Config(format!("D must lie in [0, 1), got {d}"))),
        None => default_d_const(side.d1(), side.d2(), samples.len()),
    };
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroObservation);
    }
    let op = SensingOp::new(side, samples);
    let mut xhat = op.adjoint_unscaled(y);
    xhat.scale_mut(1.0 / samples.p());
    let mut sigma_hat = singular_values(&xhat);
    // Values at round-off level are numerically zero; without this floor an
    // exactly low-rank X̂ shows spurious ratios of noise in the tail.
    let floor = f64::EPSILON * side.d1().max(side.d2()) as f64 * sigma_hat[0];
    sigma_hat.iter_mut().filter(|s| **s <= floor).for_each(|s| *s = 0.0);
    let gaps = gaps(&sigma_hat, d_const);
    let r_hat = argmax(&gaps).ok_or(Error::ZeroObservation)?;
    Ok(RankEstimate {
        r_hat,
        gaps,
        d_const,
        sigma_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{generate, generate_with_spectrum, observe, Dims, SampleSet};

    const FIG4: [f64; 10] = [5.0, 4.0, 3.0, 2.0, 1.0, 0.2, 0.1, 0.08, 0.06, 0.03];

    #[test]
    fn true_gap_arithmetic() {
        assert_eq!(true_gaps(&[2.0, 1.0], 0.0), vec![2.0]);
        let g = true_gaps(&FIG4, 0.0);
        assert!((g[4] - 5.0).abs() < 1e-15);
        assert_eq!(argmax(&g), Some(5));
        assert!(true_gaps(&FIG4, 1.0).iter().all(|&g| g < 1.0));
    }

    #[test]
    fn ties_and_degenerate_gaps() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), Some(2));
        assert_eq!(argmax(&[f64::NAN, 2.0, f64::INFINITY, f64::INFINITY]), Some(3));
        let g = gaps(&[1.0, 0.0, 0.0], 0.0);
        assert!(g[0].is_infinite() && g[1].is_nan());
    }

    #[test]
    fn exact_rank_full_sampling() {
        let dims = Dims {
            n1: 30,
            n2: 25,
            d1: 8,
            d2: 6,
            r: 3,
        };
        let t = generate(dims, 1.5, 1).unwrap();
        let p = observe(&t, SampleSet::full(30, 25), 0.0, 2).unwrap();
        let est = estimate_rank(p.side(), p.samples(), p.y(), Some(0.0)).unwrap();
        assert_eq!(est.r_hat, 3);
        assert!(est.gaps[2].is_infinite());
        // Default D on the spectrum (1.5, 1.25, 1): evaluate every gap directly.
        let est = estimate_rank(p.side(), p.samples(), p.y(), None).unwrap();
        let d = default_d_const(8, 6, 750);
        let s = [1.5, 1.25, 1.0, 0.0, 0.0, 0.0];
        for i in 1..6 {
            let want = if s[i - 1] == 0.0 {
                0.0
            } else {
                s[i - 1] / (s[i] + d * 1.5 * (i as f64).sqrt())
            };
            assert!((est.gaps[i - 1] - want).abs() < 1e-9 * want.max(1.0));
        }
        assert_eq!(est.r_hat, 3);
    }

    #[test]
    fn fig4_spectrum_under_sampling() {
        let dims = Dims {
            n1: 600,
            n2: 400,
            d1: 30,
            d2: 20,
            r: 10,
        };
        let t = generate_with_spectrum(dims, &FIG4, 3).unwrap();
        let omega = crate::problem::sample_omega(600, 400, 96_000, 4).unwrap();
        let p = observe(&t, omega, 0.0, 5).unwrap();
        for d in [Some(0.0), None] {
            let est = estimate_rank(p.side(), p.samples(), p.y(), d).unwrap();
            assert_eq!(est.r_hat, 5, "D = {d:?}: {:?}", est.gaps);
        }
    }

    #[test]
    fn scale_invariance_and_errors() {
        let dims = Dims {
            n1: 30,
            n2: 25,
            d1: 8,
            d2: 6,
            r: 2,
        };
        let t = generate(dims, 2.0, 5).unwrap();
        let p = observe(&t, SampleSet::full(30, 25), 0.01, 6).unwrap();
        let a = estimate_rank(p.side(), p.samples(), p.y(), None).unwrap();
        let scaled: Vec<f64> = p.y().iter().map(|v| 7.5 * v).collect();
        let b = estimate_rank(p.side(), p.samples(), &scaled, None).unwrap();
        assert_eq!(a.r_hat, b.r_hat);
        for (x, y) in a.gaps.iter().zip(&b.gaps) {
            assert!((x - y).abs() <= 1e-12 * x.abs());
        }
        let zeros = vec![0.0; p.y().len()];
        assert!(matches!(
            estimate_rank(p.side(), p.samples(), &zeros, None),
            Err(Error::ZeroObservation)
        ));
        assert!(estimate_rank(p.side(), p.samples(), p.y(), Some(1.0)).is_err());
    }
}
