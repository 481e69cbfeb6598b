//! Block statistics for Monte Carlo estimators.

/// Jackknife over block means: returns (mean, standard error).
pub fn jackknife_blocks(means: &[f64]) -> (f64, f64) {
    let b = means.len();
    let total: f64 = means.iter().sum();
    let mean = total / b as f64;
    if b < 2 {
        return (mean, 0.0);
    }
    let loo: Vec<f64> = means.iter().map(|m| (total - m) / (b - 1) as f64).collect();
    let bar = loo.iter().sum::<f64>() / b as f64;
    let var = (b - 1) as f64 / b as f64 * loo.iter().map(|t| (t - bar).powi(2)).sum::<f64>();
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let (m, se) = jackknife_blocks(&x);
        assert_eq!(m, 2.5);
        // sample sd / sqrt(n)
        let sd = (x.iter().map(|v| (v - 2.5f64).powi(2)).sum::<f64>() / 3.0).sqrt();
        assert!((se - sd / 2.0).abs() < 1e-14);
    }
}
