use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::ReflectivityCurve;
use crate::error::{Error, Result};

/// Replaces each R by Poisson(R·I0)/I0 and attaches σ_R = √(R·I0)/I0.
///
/// The generator is ChaCha8 seeded from `seed`, so output is reproducible
/// across platforms.
pub fn add_counting_noise(curve: &ReflectivityCurve, i0: f64, seed: u64) -> Result<ReflectivityCurve> {
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::Domain(format!("incident counts must be > 0, got {i0}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Vec::with_capacity(curve.len());
    let mut sigma = Vec::with_capacity(curve.len());
    for &clean in &curve.r {
        let lambda = clean * i0;
        if lambda > 0.0 {
            let dist = Poisson::new(lambda)
                .map_err(|e| Error::Domain(format!("poisson rate {lambda}: {e}")))?;
            let counts: f64 = dist.sample(&mut rng);
            r.push(counts / i0);
            sigma.push(lambda.sqrt() / i0);
        } else {
            r.push(0.0);
            sigma.push(0.0);
        }
    }
    let mut out = curve.clone();
    out.r = r;
    out.sigma_r = Some(sigma);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve() -> ReflectivityCurve {
        ReflectivityCurve::new(vec![1.0, 2.0, 3.0], vec![1e-3, 1e-5, 0.0], 1300.0).unwrap()
    }

    #[test]
    fn rejects_non_positive_flux() {
        assert!(add_counting_noise(&curve(), 0.0, 1).is_err());
        assert!(add_counting_noise(&curve(), -5.0, 1).is_err());
    }

    #[test]
    fn deterministic_for_seed() {
        let a = add_counting_noise(&curve(), 1e6, 42).unwrap();
        let b = add_counting_noise(&curve(), 1e6, 42).unwrap();
        assert_eq!(a, b);
        let c = add_counting_noise(&curve(), 1e6, 43).unwrap();
        assert_ne!(a.r, c.r);
    }

    #[test]
    fn vanishing_noise_at_high_flux() {
        let c = curve();
        let n = add_counting_noise(&c, 1e12, 7).unwrap();
        for (a, b) in c.r.iter().zip(&n.r) {
            if *a > 0.0 {
                assert!((a - b).abs() < 6.0 * (a / 1e12).sqrt());
            } else {
                assert_eq!(*b, 0.0);
            }
        }
    }

    #[test]
    fn mean_within_three_standard_errors() {
        let c = ReflectivityCurve::new(vec![1.0], vec![2.5e-4], 1300.0).unwrap();
        let i0 = 1e5;
        let n = 10_000;
        let mean: f64 = (0..n)
            .map(|s| add_counting_noise(&c, i0, s).unwrap().r[0])
            .sum::<f64>()
            / n as f64;
        let se = (c.r[0] * i0).sqrt() / i0 / (n as f64).sqrt();
        assert!((mean - c.r[0]).abs() < 3.0 * se, "{mean} vs {}", c.r[0]);
    }
}
