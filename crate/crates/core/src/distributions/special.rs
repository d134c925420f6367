//! Special functions needed by the Gamma head: log-gamma, digamma, the
//! regularized incomplete gamma pair, and normal-distribution helpers built
//! on top of them.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const MAX_ITER: usize = 10_000;
/// Below this, lgamma/digamma are shifted up by recurrence before the asymptotic series.
const ASYMPTOTIC_FROM: f64 = 15.0;
const FPMIN: f64 = 1e-300;

fn check_positive(func: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(
            func,
            format!("argument must be positive and finite, got {x}"),
        ));
    }
    Ok(())
}

/// `ln Γ(x)` for `x > 0`.
pub fn lgamma(x: f64) -> Result<f64> {
    check_positive("lgamma", x)?;
    let mut z = x;
    let mut shift = 0.0;
    if z < ASYMPTOTIC_FROM {
        let mut prod = 1.0;
        while z < ASYMPTOTIC_FROM {
            prod *= z;
            z += 1.0;
        }
        shift = prod.ln();
    }
    Ok(stirling_lgamma(z) - shift)
}

fn stirling_lgamma(z: f64) -> f64 {
    // Bernoulli terms B_{2n} / (2n (2n-1) z^{2n-1})
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    (z - 0.5) * z.ln() - z + LN_SQRT_2PI + series * inv
}

/// `ψ(x) = d/dx ln Γ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive("digamma", x)?;
    let mut z = x;
    let mut acc = 0.0;
    while z < ASYMPTOTIC_FROM {
        acc -= 1.0 / z;
        z += 1.0;
    }
    // B_{2n} / (2n z^{2n})
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 120.0,
        1.0 / 252.0,
        -1.0 / 240.0,
        1.0 / 132.0,
        -691.0 / 32_760.0,
        1.0 / 12.0,
    ];
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    Ok(acc + z.ln() - 0.5 / z - series * inv2)
}

/// Regularized lower incomplete gamma `P(a, x)`, `a > 0`, `x ≥ 0`.
pub fn reg_lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(incomplete_gamma_pair(a, x)?.0)
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn reg_upper_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    Ok(incomplete_gamma_pair(a, x)?.1)
}

/// `(P, Q)` computed from whichever expansion converges without cancellation.
fn incomplete_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    check_positive("reg_lower_incomplete_gamma", a)?;
    if !(x >= 0.0) {
        return Err(Error::domain(
            "reg_lower_incomplete_gamma",
            format!("x must be non-negative, got {x}"),
        ));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = a * x.ln() - x - lgamma(a)?;
    if x < a + 1.0 {
        let p = lower_series(a, x, log_prefactor)?;
        Ok((p, 1.0 - p))
    } else {
        let q = upper_continued_fraction(a, x, log_prefactor)?;
        Ok((1.0 - q, q))
    }
}

fn lower_series(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON * 0.5 {
            return Ok((sum.ln() + log_prefactor).exp().min(1.0));
        }
    }
    Err(Error::NoConvergence {
        func: "incomplete gamma series",
        a,
        x,
    })
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn upper_continued_fraction(a: f64, x: f64, log_prefactor: f64) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok((h.ln() + log_prefactor).exp().min(1.0));
        }
    }
    Err(Error::NoConvergence {
        func: "incomplete gamma continued fraction",
        a,
        x,
    })
}

/// `erf(x)` via `P(½, x²)`.
pub fn erf(x: f64) -> f64 {
    let p = reg_lower_incomplete_gamma(0.5, x * x).unwrap_or(1.0);
    if x < 0.0 {
        -p
    } else {
        p
    }
}

/// `erfc(x)` via `Q(½, x²)`, accurate in the upper tail.
pub fn erfc(x: f64) -> f64 {
    let q = reg_upper_incomplete_gamma(0.5, x * x).unwrap_or(0.0);
    if x < 0.0 {
        2.0 - q
    } else {
        q
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Newton step against [`normal_cdf`].
pub fn probit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("probit", format!("p must lie in (0, 1), got {p}")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    // Newton refinement; the upper tail is evaluated through the complement.
    let err = if x > 0.0 {
        (1.0 - p) - 0.5 * erfc(x / SQRT_2)
    } else {
        normal_cdf(x) - p
    };
    Ok(x - err / normal_pdf(x))
}

/// Inverse error function on `(-1, 1)`.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::domain(
            "erf_inv",
            format!("y must lie in (-1, 1), got {y}"),
        ));
    }
    Ok(probit(0.5 * (y + 1.0))? / SQRT_2)
}

/// Quantile of the unit-scale Gamma(k) distribution: bisection on
/// `P(k, x) = p`, bracketed around the Wilson–Hilferty approximation.
pub fn gamma_quantile_unit(k: f64, p: f64) -> Result<f64> {
    check_positive("gamma_quantile", k)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(
            "gamma_quantile",
            format!("p must lie in (0, 1), got {p}"),
        ));
    }
    let z = probit(p)?;
    let c = 1.0 / (9.0 * k);
    let wh = k * (1.0 - c + z * c.sqrt()).powi(3);
    let seed = if wh > 0.0 && wh.is_finite() {
        wh
    } else {
        // small-x behaviour P(k, x) ≈ x^k / Γ(k + 1)
        ((p.ln() + lgamma(k + 1.0)?) / k).exp().max(f64::MIN_POSITIVE)
    };

    let cdf = |x: f64| reg_lower_incomplete_gamma(k, x);
    let (mut lo, mut hi) = (seed, seed);
    while cdf(lo)? > p {
        lo *= 0.5;
        if lo < f64::MIN_POSITIVE {
            return Ok(0.0);
        }
    }
    while cdf(hi)? < p {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NoConvergence {
                func: "gamma_quantile bracket",
                a: k,
                x: p,
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let pm = cdf(mid)?;
        if (pm - p).abs() <= 1e-13 || hi - lo <= 4.0 * f64::EPSILON * mid {
            return Ok(mid);
        }
        if pm < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
