//! Descriptive statistics and the pooled-variance two-sample t-test.

use serde::Serialize;

use super::special::t_sf;
use super::AnalyticsError;

/// Summary of a sample. `sd` uses the n−1 denominator and is `None` for a
/// single observation; quartiles interpolate linearly between order
/// statistics (type 7); whiskers are the 1.5·IQR fences clamped to the data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: Option<f64>,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
}

/// Type-7 quantile of an ascending, non-empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

/// Sample variance (n−1); `None` when n < 2.
pub fn sample_variance(sample: &[f64]) -> Option<f64> {
    if sample.len() < 2 {
        return None;
    }
    let m = mean(sample);
    Some(sample.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (sample.len() - 1) as f64)
}

pub fn describe(sample: &[f64]) -> Result<DescriptiveStats, AnalyticsError> {
    if sample.is_empty() {
        return Err(AnalyticsError::EmptyInput("describe needs at least one value"));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(AnalyticsError::Degenerate("sample contains a non-finite value".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    Ok(DescriptiveStats {
        n: sample.len(),
        mean: mean(sample),
        median,
        sd: sample_variance(sample).map(f64::sqrt),
        q1,
        q3,
        iqr,
        whisker_low: (q1 - 1.5 * iqr).max(min),
        whisker_high: (q3 + 1.5 * iqr).min(max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u64,
    pub p: f64,
}

/// Student's unpaired t-test with pooled variance, df = n1 + n2 − 2, and a
/// two-sided p-value.
pub fn t_test_unpaired(a: &[f64], b: &[f64]) -> Result<TTestResult, AnalyticsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(AnalyticsError::InsufficientSample { needed: 2, got: a.len().min(b.len()) });
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (v1, v2) = (sample_variance(a).unwrap(), sample_variance(b).unwrap());
    let df = (a.len() + b.len() - 2) as u64;
    let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / df as f64;
    if pooled <= 0.0 || !pooled.is_finite() {
        return Err(AnalyticsError::Degenerate("pooled variance is zero; t is undefined".into()));
    }
    let t = (mean(a) - mean(b)) / (pooled * (1.0 / n1 + 1.0 / n2)).sqrt();
    // Floor keeps p inside (0, 1] when the tail underflows.
    let p = (2.0 * t_sf(t.abs(), df)?).clamp(f64::MIN_POSITIVE, 1.0);
    Ok(TTestResult { t, df, p })
}

/// Four significant digits in scientific notation with a two-digit exponent,
/// e.g. `1.151e-07`.
pub fn format_p_value(p: f64) -> String {
    let raw = format!("{p:.3e}");
    let (mantissa, exponent) = raw.split_once('e').expect("scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let sign = if exponent < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exponent.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let d = describe(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((d.mean, d.median, d.sd), (1.0, 1.0, Some(0.0)));
        assert_eq!((d.whisker_low, d.whisker_high), (1.0, 1.0));
    }

    #[test]
    fn four_point_sample() {
        let d = describe(&[0.40, 0.50, 0.60, 0.70]).unwrap();
        assert!((d.mean - 0.55).abs() < 1e-12);
        assert!((d.median - 0.55).abs() < 1e-12);
        assert!((d.sd.unwrap() - (0.05f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((d.sd.unwrap() - 0.1291).abs() < 1e-4);
    }

    #[test]
    fn type_seven_quartiles() {
        let d = describe(&[0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        assert!((d.q1 - 0.4).abs() < 1e-12);
        assert!((d.median - 0.6).abs() < 1e-12);
        assert!((d.q3 - 0.8).abs() < 1e-12);
        assert!((d.iqr - 0.4).abs() < 1e-12);
        // Fences at -0.2 and 1.4 clamp to the data range.
        assert_eq!((d.whisker_low, d.whisker_high), (0.2, 1.0));
    }

    #[test]
    fn whiskers_inside_fences() {
        let d = describe(&[0.0, 0.9, 0.95, 1.0, 1.0, 1.0]).unwrap();
        assert!(d.whisker_low > 0.0 && d.whisker_low <= d.q1);
        assert_eq!(d.whisker_high, 1.0);
    }

    #[test]
    fn single_value_has_no_sd() {
        let d = describe(&[0.3]).unwrap();
        assert_eq!((d.n, d.sd, d.median), (1, None, 0.3));
        assert!(describe(&[]).is_err());
    }

    #[test]
    fn shifted_groups() {
        let r = t_test_unpaired(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.t + 1.0).abs() < 1e-12);
        assert_eq!(r.df, 8);
        assert!((r.p - 0.346_593_507_087_334_16).abs() < 1e-9);
        let swapped = t_test_unpaired(&[2.0, 3.0, 4.0, 5.0, 6.0], &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((swapped.t - 1.0).abs() < 1e-12);
        assert_eq!(swapped.p, r.p);
    }

    #[test]
    fn identical_groups() {
        let r = t_test_unpaired(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(t_test_unpaired(&[1.0, 1.0], &[1.0, 1.0]), Err(AnalyticsError::Degenerate(_))));
        assert!(matches!(t_test_unpaired(&[1.0], &[1.0, 2.0]), Err(AnalyticsError::InsufficientSample { .. })));
    }

    #[test]
    fn p_value_formatting() {
        assert_eq!(format_p_value(1.151e-07), "1.151e-07");
        assert_eq!(format_p_value(1.015_544_46e-7), "1.016e-07");
        assert_eq!(format_p_value(1.0), "1.000e+00");
        assert_eq!(format_p_value(0.346_593_5), "3.466e-01");
        assert_eq!(format_p_value(2.2e-300), "2.200e-300");
    }
}
