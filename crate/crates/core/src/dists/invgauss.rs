use rand::Rng;

use super::rng::{std_normal, uniform_open};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inverse-Gaussian draw (Michael, Schucany and Haas transformation with
/// one rejection step).
pub fn sample_inverse_gaussian<T: Real, R: Rng + ?Sized>(mean: T, shape: T, rng: &mut R) -> Result<T> {
    if !(mean > T::zero()) || !(shape > T::zero()) || !mean.is_finite() || !shape.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse-Gaussian needs positive mean and shape, got ({mean}, {shape})"
        )));
    }
    let v: T = std_normal(rng);
    // r = mean * v^2 / shape; the smaller root is mean * 4r / (r + sqrt(r^2 + 4r))^2,
    // a form without cancellation for large r
    let r = mean * v * v / shape;
    let x = if r > T::zero() {
        let s = (r * r + T::lit(4.0) * r).sqrt() + r;
        mean * T::lit(4.0) * r / (s * s)
    } else {
        mean
    };
    let u: T = uniform_open(rng);
    if u <= mean / (mean + x) { Ok(x) } else { Ok(mean * mean / x) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::RngStream;

    #[test]
    fn draws_are_positive() {
        let mut rng = RngStream::new(11, 0);
        for &(m, s) in &[(1.0, 1.0), (1e8, 2.0), (1e-6, 5.0), (2.0, 1e-4)] {
            for _ in 0..2000 {
                let x: f64 = sample_inverse_gaussian(m, s, &mut rng).unwrap();
                assert!(x > 0.0 && x.is_finite(), "draw {x} for ({m}, {s})");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = RngStream::new(0, 0);
        assert!(sample_inverse_gaussian(0.0, 1.0, &mut rng).is_err());
        assert!(sample_inverse_gaussian(1.0, -1.0, &mut rng).is_err());
        assert!(sample_inverse_gaussian(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn concentrated_when_shape_dominates() {
        let mut rng = RngStream::new(5, 0);
        let mean = 3.0;
        let xs: Vec<f64> = (0..20_000)
            .map(|_| sample_inverse_gaussian(mean, 1e6 * mean, &mut rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!(sd < 0.01 * mean);
    }
}
