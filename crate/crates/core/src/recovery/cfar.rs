use num_complex::Complex64;

use crate::error::{Error, Result};

/// CFAR stopping level δ = ln|Ω_s| − ln(−ln(1 − p_fa)).
///
/// Compared against the noise-normalised peak |c|²/(σ̂²‖a‖²); for white
/// Gaussian noise each such statistic is unit-mean exponential.
pub fn cfar_threshold(n_resources: usize, p_fa: f64) -> Result<f64> {
    if n_resources == 0 {
        return Err(Error::invalid("CFAR threshold needs at least one resource"));
    }
    if !(p_fa > 0.0 && p_fa < 1.0) {
        return Err(Error::invalid(format!("false-alarm probability {p_fa} outside (0, 1)")));
    }
    Ok((n_resources as f64).ln() - (-(-p_fa).ln_1p()).ln())
}

/// Per-element noise power from the median of |r|². For circular Gaussian
/// noise |r|²/σ² is Exp(1), whose median is ln 2.
pub fn noise_floor_estimate(residual: &[Complex64]) -> f64 {
    if residual.is_empty() {
        return 0.0;
    }
    let mut p: Vec<f64> = residual.iter().map(|v| v.norm_sqr()).collect();
    let mid = p.len() / 2;
    let (_, median, _) = p.select_nth_unstable_by(mid, f64::total_cmp);
    let mut median = *median;
    if p.len().is_multiple_of(2) {
        let lower = p[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        median = 0.5 * (median + lower);
    }
    median / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    #[test]
    fn table_one_threshold() {
        // ln(4368) - ln(-ln(0.99)) = 8.38206 + 4.60015
        let d = cfar_threshold(4368, 0.01).unwrap();
        assert!((d - 12.982).abs() < 1e-3, "{d}");
    }

    #[test]
    fn logs_cancel_for_single_resource() {
        let p = 1.0 - (-1.0f64).exp();
        assert!(cfar_threshold(1, p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn decreasing_in_false_alarm_probability() {
        let vals: Vec<f64> = (1..=10).map(|k| cfar_threshold(500, k as f64 * 0.09).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn rejects_bad_probability() {
        assert!(cfar_threshold(10, 0.0).is_err());
        assert!(cfar_threshold(10, 1.0).is_err());
        assert!(cfar_threshold(0, 0.1).is_err());
    }

    #[test]
    fn median_estimate_is_unbiased_for_gaussian_noise() {
        let mut r = rng::from_seed(5);
        let s = (3.0f64 / 2.0).sqrt();
        let v: Vec<Complex64> = (0..20000)
            .map(|_| {
                let a: f64 = r.sample(StandardNormal);
                let b: f64 = r.sample(StandardNormal);
                Complex64::new(s * a, s * b)
            })
            .collect();
        let est = noise_floor_estimate(&v);
        assert!((est - 3.0).abs() < 0.1, "{est}");
        assert_eq!(noise_floor_estimate(&[]), 0.0);
    }
}
