//! Small numeric helpers shared across the crate: compensated summation and
//! fixed significant-digit formatting.

/// Kahan compensated accumulator.
///
/// Keeps a running error term so that long sums of small fractional weights
/// stay accurate to within a couple of ulps of the true sum regardless of
/// input order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(values: I) -> f64 {
        let mut acc = Self::new();
        for v in values {
            acc.add(v);
        }
        acc.value()
    }
}

/// Formats a value with the given number of significant digits, trimming
/// trailing zeros. `format_sig(0.123456789, 6)` yields `"0.123457"`.
pub fn format_sig(value: f64, digits: usize) -> String {
    assert!(digits >= 1, "significant digits must be at least 1");
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exp = value.abs().log10().floor() as i32;
    let decimals = digits as i32 - 1 - exp;
    let rendered = if decimals <= 0 {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (value / scale).round() * scale)
    } else {
        format!("{:.*}", decimals as usize, value)
    };
    if rendered.contains('.') {
        rendered
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    } else {
        rendered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_matches_exact_sum_on_representable_values() {
        let mut acc = KahanSum::new();
        for _ in 0..1000 {
            acc.add(0.25);
        }
        assert_eq!(acc.value(), 250.0);
    }

    #[test]
    fn kahan_recovers_small_terms_lost_by_naive_summation() {
        // 1.0 followed by many tiny terms: naive summation loses them all,
        // the compensated sum keeps their contribution.
        let tiny = 1e-16;
        let n = 10_000;
        let mut naive = 1.0f64;
        let mut kahan = KahanSum::new();
        kahan.add(1.0);
        for _ in 0..n {
            naive += tiny;
            kahan.add(tiny);
        }
        let exact = 1.0 + tiny * n as f64;
        assert_eq!(naive, 1.0);
        assert!((kahan.value() - exact).abs() < 1e-18);
    }

    #[test]
    fn kahan_order_stability() {
        let forward: Vec<f64> = (1..=2000).map(|i| 1.0 / i as f64).collect();
        let mut backward = forward.clone();
        backward.reverse();
        let a = KahanSum::sum_iter(forward);
        let b = KahanSum::sum_iter(backward);
        assert!((a - b).abs() <= 1e-15);
    }

    #[test]
    fn format_sig_basics() {
        assert_eq!(format_sig(0.0, 6), "0");
        assert_eq!(format_sig(0.25, 6), "0.25");
        assert_eq!(format_sig(1.0, 6), "1");
        assert_eq!(format_sig(1.15, 6), "1.15");
        assert_eq!(format_sig(1.0 / 3.0, 6), "0.333333");
        assert_eq!(format_sig(2.0 / 3.0, 6), "0.666667");
        assert_eq!(format_sig(-0.25, 6), "-0.25");
    }

    #[test]
    fn format_sig_rounds_large_and_small_magnitudes() {
        assert_eq!(format_sig(123456789.0, 6), "123457000");
        assert_eq!(format_sig(0.000012345678, 6), "0.0000123457");
        assert_eq!(format_sig(999999.9, 6), "1000000");
        assert_eq!(format_sig(1000.0, 6), "1000");
    }
}
