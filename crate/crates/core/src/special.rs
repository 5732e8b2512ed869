//! Standard normal and Cauchy helpers shared by the transform layer and the
//! truncated-normal proposal.

use statrs::function::erf::{erf, erfc, erfc_inv};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

/// `ln(1/sqrt(2π))`.
pub const LN_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_8;

pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    norm_logpdf(z).exp()
}

pub fn norm_logpdf(z: f64) -> f64 {
    LN_INV_SQRT_2PI - 0.5 * z * z
}

/// `Φ(b) - Φ(a)` for `a <= b`, evaluated on whichever side keeps precision.
pub fn norm_interval_mass(a: f64, b: f64) -> f64 {
    debug_assert!(a <= b);
    if a >= 0.0 {
        0.5 * (erfc(a * FRAC_1_SQRT_2) - erfc(b * FRAC_1_SQRT_2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b * FRAC_1_SQRT_2) - erfc(-a * FRAC_1_SQRT_2))
    } else {
        0.5 * (erf(b * FRAC_1_SQRT_2) - erf(a * FRAC_1_SQRT_2))
    }
}

/// Standard normal quantile. Returns `±∞` at the endpoints.
///
/// The `erfc_inv` estimate is only good to about `1e-10`, so one Newton step
/// on the tail probability polishes it to full precision.
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // Work in the lower tail: q = min(p, 1-p), z <= 0.
    let q = p.min(1.0 - p);
    let mut z = -SQRT_2 * erfc_inv(2.0 * q);
    let pdf = norm_pdf(z);
    if pdf > 0.0 {
        z -= (0.5 * erfc(-z * FRAC_1_SQRT_2) - q) / pdf;
    }
    if p < 0.5 {
        z
    } else {
        -z
    }
}

pub fn cauchy_cdf(z: f64) -> f64 {
    0.5 + z.atan() / PI
}

pub fn cauchy_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    (PI * (p - 0.5)).tan()
}

pub fn cauchy_logpdf(z: f64) -> f64 {
    -PI.ln() - (z * z).ln_1p()
}

/// Log of `∫_0^1 exp(s w) dw`, the normalizer of the exponentially tilted
/// uniform distribution that appears as the Gibbs full conditional.
pub fn tilted_uniform_log_partition(s: f64) -> f64 {
    if s.abs() < 1e-6 {
        s / 2.0 + s * s / 24.0
    } else if s > 0.0 {
        s + (-(-s).exp_m1()).ln() - s.ln()
    } else {
        (-s.exp_m1()).ln() - (-s).ln()
    }
}

/// Mean of the tilted uniform (derivative of the log partition).
pub fn tilted_uniform_mean(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        0.5 + s / 12.0 - s * s * s / 720.0
    } else {
        -1.0 / (-s).exp_m1() - 1.0 / s
    }
}

/// Variance of the tilted uniform (second derivative of the log partition).
pub fn tilted_uniform_variance(s: f64) -> f64 {
    if s.abs() < 0.05 {
        let s2 = s * s;
        1.0 / 12.0 - s2 / 240.0 + s2 * s2 / 6048.0
    } else {
        let sh = (0.5 * s).sinh();
        1.0 / (s * s) - 1.0 / (4.0 * sh * sh)
    }
}
