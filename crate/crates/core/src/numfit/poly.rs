use nalgebra::{DMatrix, DVector};

/// Least-squares polynomial coefficients, lowest order first.
///
/// The abscissa is centred and scaled internally for conditioning; the
/// returned coefficients refer to the original x.
pub fn poly_fit(x: &[f64], y: &[f64], degree: usize) -> Vec<f64> {
    let n = x.len();
    let (lo, hi) = (x[0], x[n - 1]);
    let mid = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(f64::MIN_POSITIVE);
    let m = DMatrix::from_fn(n, degree + 1, |i, k| ((x[i] - mid) / half).powi(k as i32));
    let b = DVector::from_column_slice(y);
    let c = m
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("svd with both factors computed");
    // expand Σ c_k ((x − mid)/half)^k into powers of x
    let mut out = vec![0.0; degree + 1];
    for (k, ck) in c.iter().enumerate() {
        let scale = ck / half.powi(k as i32);
        for j in 0..=k {
            out[j] += scale * binomial(k, j) as f64 * (-mid).powi((k - j) as i32);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let x: Vec<f64> = (0..50).map(|i| 1.5 + 0.07 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 - 1.2 * v + 0.25 * v * v).collect();
        let c = poly_fit(&x, &y, 2);
        assert!((c[0] - 0.3).abs() < 1e-10);
        assert!((c[1] + 1.2).abs() < 1e-10);
        assert!((c[2] - 0.25).abs() < 1e-10);
        assert!((poly_eval(&c, 2.0) - (0.3 - 2.4 + 1.0)).abs() < 1e-10);
    }
}
