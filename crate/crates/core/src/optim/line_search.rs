//! Strong-Wolfe line search with cubic interpolation.

use crate::error::Result;
use ndarray::Array1;

pub(crate) struct LinePoint {
    pub t: f64,
    pub f: f64,
    pub grad: Array1<f64>,
    pub slope: f64,
}

pub(crate) struct SearchOutcome {
    pub point: LinePoint,
    /// Whether both strong-Wolfe conditions hold at the returned point.
    #[allow(dead_code)]
    pub wolfe: bool,
    #[allow(dead_code)]
    pub evals: usize,
}

/// Minimizer of the cubic through (x1, f1, g1) and (x2, f2, g2), clamped
/// to `bounds`; falls back to bisection when the cubic is degenerate.
pub(crate) fn cubic_interpolate(
    x1: f64,
    f1: f64,
    g1: f64,
    x2: f64,
    f2: f64,
    g2: f64,
    bounds: (f64, f64),
) -> f64 {
    let (lo, hi) = bounds;
    let d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    let d2_sq = d1 * d1 - g1 * g2;
    if d2_sq >= 0.0 && (x1 - x2).abs() > 0.0 {
        let d2 = d2_sq.sqrt() * (x2 - x1).signum();
        let min_pos = x2 - (x2 - x1) * (g2 + d2 - d1) / (g2 - g1 + 2.0 * d2);
        if min_pos.is_finite() {
            return min_pos.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

/// Find a step along `p` from `x` satisfying the strong Wolfe conditions
/// (Armijo with `c1`, curvature with `c2`), spending at most `max_evals`
/// objective evaluations. Returns the best sufficient-decrease point seen
/// when the conditions cannot be met within the budget, or None when not
/// even simple decrease was found.
pub(crate) fn strong_wolfe<F>(
    obj: &mut F,
    x: &Array1<f64>,
    p: &Array1<f64>,
    f0: f64,
    slope0: f64,
    c1: f64,
    c2: f64,
    max_evals: usize,
) -> Result<Option<SearchOutcome>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    debug_assert!(slope0 < 0.0, "search direction must be a descent direction");
    let mut evals = 0;
    let mut eval = |t: f64, evals: &mut usize| -> Result<LinePoint> {
        *evals += 1;
        let xt = x + &(t * p);
        let (f, g) = obj(xt.as_slice().expect("owned array is contiguous"))?;
        let grad = Array1::from(g);
        let slope = grad.dot(p);
        Ok(LinePoint { t, f, grad, slope })
    };

    let armijo = |pt: &LinePoint| pt.f <= f0 + c1 * pt.t * slope0;
    let curvature = |pt: &LinePoint| pt.slope.abs() <= c2 * slope0.abs();

    let mut best: Option<LinePoint> = None;
    let record = |pt: &LinePoint, best: &mut Option<LinePoint>| {
        if pt.f < f0 && best.as_ref().map_or(true, |b| pt.f < b.f) {
            *best = Some(LinePoint {
                t: pt.t,
                f: pt.f,
                grad: pt.grad.clone(),
                slope: pt.slope,
            });
        }
    };

    // Bracketing phase: expand until the minimum is straddled.
    let mut prev = LinePoint { t: 0.0, f: f0, grad: Array1::zeros(0), slope: slope0 };
    let mut t = 1.0;
    let mut bracket: Option<(LinePoint, LinePoint)> = None;
    while evals < max_evals {
        let cand = eval(t, &mut evals)?;
        record(&cand, &mut best);
        if !cand.f.is_finite() || !armijo(&cand) || (prev.t > 0.0 && cand.f >= prev.f) {
            bracket = Some((prev, cand));
            break;
        }
        if curvature(&cand) {
            return Ok(Some(SearchOutcome { point: cand, wolfe: true, evals }));
        }
        if cand.slope >= 0.0 {
            bracket = Some((cand, prev));
            break;
        }
        t = (2.0 * cand.t).min(1e8);
        prev = cand;
    }

    let Some((mut lo, mut hi)) = bracket else {
        // Budget exhausted while still expanding.
        return Ok(best.map(|point| SearchOutcome { point, wolfe: false, evals }));
    };

    // Zoom phase: `lo` always satisfies Armijo with f(lo) minimal so far.
    while evals < max_evals {
        let width = (hi.t - lo.t).abs();
        let guard = 0.1 * width;
        let (b_lo, b_hi) = if lo.t < hi.t {
            (lo.t + guard, hi.t - guard)
        } else {
            (hi.t + guard, lo.t - guard)
        };
        let t = cubic_interpolate(lo.t, lo.f, lo.slope, hi.t, hi.f, hi.slope, (b_lo, b_hi));
        let cand = eval(t, &mut evals)?;
        record(&cand, &mut best);
        if !cand.f.is_finite() || !armijo(&cand) || cand.f >= lo.f {
            hi = cand;
        } else {
            if curvature(&cand) {
                return Ok(Some(SearchOutcome { point: cand, wolfe: true, evals }));
            }
            if cand.slope * (hi.t - lo.t) >= 0.0 {
                hi = LinePoint {
                    t: lo.t,
                    f: lo.f,
                    grad: lo.grad.clone(),
                    slope: lo.slope,
                };
            }
            lo = cand;
        }
        if width < 1e-14 {
            break;
        }
    }
    Ok(best.map(|point| SearchOutcome { point, wolfe: false, evals }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_recovers_quadratic_minimum() {
        // f(t) = (t - 2)^2 sampled at t = 0 and t = 3.
        let t = cubic_interpolate(0.0, 4.0, -4.0, 3.0, 1.0, 2.0, (0.0, 3.0));
        assert!((t - 2.0).abs() < 1e-12, "got {t}");
    }

    #[test]
    fn wolfe_accepts_unit_step_on_isotropic_bowl() {
        let x = Array1::from(vec![1.0, -2.0]);
        let p = -&x;
        let mut obj = |v: &[f64]| {
            let f = 0.5 * v.iter().map(|a| a * a).sum::<f64>();
            Ok((f, v.to_vec()))
        };
        let f0 = 2.5;
        let slope0 = p.dot(&p) * -1.0;
        let out = strong_wolfe(&mut obj, &x, &p, f0, slope0, 1e-4, 0.9, 40)
            .unwrap()
            .unwrap();
        assert!(out.wolfe);
        assert_eq!(out.point.t, 1.0);
        assert_eq!(out.evals, 1);
    }

    #[test]
    fn wolfe_finds_interior_minimum() {
        // f(t) along p from 4 with slope sign flip inside (0, 1).
        let x = Array1::from(vec![4.0]);
        let p = Array1::from(vec![-8.0]);
        let mut obj = |v: &[f64]| {
            let f = 0.5 * v[0] * v[0];
            Ok((f, vec![v[0]]))
        };
        let out = strong_wolfe(&mut obj, &x, &p, 8.0, -32.0, 1e-4, 0.9, 40)
            .unwrap()
            .unwrap();
        assert!(out.wolfe);
        let landing = 4.0 - 8.0 * out.point.t;
        assert!(landing.abs() < 4.0 * 0.9, "landing {landing}");
    }
}
