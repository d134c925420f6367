/// `ln(1 + e^z)` without overflow for large `z` or underflow for very negative `z`.
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Derivative of [`softplus`]: the logistic sigmoid.
pub fn softplus_grad(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_reference_values() {
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softplus(40.0) - 40.0).abs() < 1e-12);
        // log1p(exp(-20)) evaluated at high precision
        assert!((softplus(-20.0) - 2.061_153_620_314_380_7e-9).abs() < 1e-22);
        assert!(softplus(800.0).is_finite());
        assert!(softplus(-800.0) >= 0.0);
    }

    #[test]
    fn softplus_grad_is_sigmoid_in_unit_interval() {
        for &z in &[-30.0, -1.0, 0.0, 1.0, 30.0] {
            let g = softplus_grad(z);
            assert!(g > 0.0 && g < 1.0 || (z.abs() >= 30.0 && (0.0..=1.0).contains(&g)));
            let h = 1e-6;
            let fd = (softplus(z + h) - softplus(z - h)) / (2.0 * h);
            assert!((fd - g).abs() < 1e-8, "z={z}");
        }
        assert_eq!(softplus_grad(0.0), 0.5);
    }

    #[test]
    fn softplus_inverse_round_trips() {
        for &y in &[1e-4, 0.3, 1.0, 5.0, 29.0, 31.0, 100.0] {
            assert!(
                (softplus(softplus_inv(y)) - y).abs() < 1e-12 * y.max(1.0),
                "y={y}"
            );
        }
    }
}
