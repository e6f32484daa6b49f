//! Smoothed ReLU activation with a quadratic blend on `[-eps, eps]`.

/// C1 smoothing of max(0, x): identity above `eps`, zero below `-eps`,
/// quadratic `x^2/(4 eps) + x/2 + eps/4` in between.
pub fn smooth_relu(x: f64, eps: f64) -> f64 {
    if x > eps {
        x
    } else if x < -eps {
        0.0
    } else {
        x * x / (4.0 * eps) + 0.5 * x + 0.25 * eps
    }
}

/// First derivative of [`smooth_relu`]; continuous everywhere.
pub fn smooth_relu_deriv(x: f64, eps: f64) -> f64 {
    if x > eps {
        1.0
    } else if x < -eps {
        0.0
    } else {
        x / (2.0 * eps) + 0.5
    }
}

/// Piecewise second derivative, taken from the quadratic middle branch on
/// the closed interval and zero outside.
pub fn smooth_relu_second(x: f64, eps: f64) -> f64 {
    if x.abs() <= eps {
        1.0 / (2.0 * eps)
    } else {
        0.0
    }
}

/// Max over `ts` and derivative orders k = 0, 1, 2 of
/// `|nu^(k)(t)| * (1 + |t|)^1.5 / 20`, where
/// `nu(t) = sigma(t + 1) + sigma(t - 1) - 2 sigma(t)`.
///
/// A return value <= 1 certifies the polynomial-decay envelope on the grid.
pub fn nu_decay_check(eps: f64, ts: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for &t in ts {
        let bound = 20.0 * (1.0 + t.abs()).powf(-1.5);
        let nu0 = smooth_relu(t + 1.0, eps) + smooth_relu(t - 1.0, eps) - 2.0 * smooth_relu(t, eps);
        let nu1 = smooth_relu_deriv(t + 1.0, eps) + smooth_relu_deriv(t - 1.0, eps)
            - 2.0 * smooth_relu_deriv(t, eps);
        let nu2 = smooth_relu_second(t + 1.0, eps) + smooth_relu_second(t - 1.0, eps)
            - 2.0 * smooth_relu_second(t, eps);
        for nu in [nu0, nu1, nu2] {
            worst = worst.max(nu.abs() / bound);
        }
    }
    worst
}
