//! Small formatting helpers shared by the CSV emitters.

/// Formats a float with 9 significant digits in scientific notation, the
/// convention for every CSV this project writes.
pub fn fmt_sig9(v: f64) -> String {
    format!("{v:.8e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(1.0), "1.00000000e0");
        assert_eq!(fmt_sig9(-0.125), "-1.25000000e-1");
        assert_eq!(fmt_sig9(12345.6789), "1.23456789e4");
    }

    #[test]
    fn stable_formatting_round_trips() {
        for &v in &[3.141592653589793, -2.5e-7, 1e9] {
            let s = fmt_sig9(v);
            let back: f64 = s.parse().unwrap();
            assert!((back - v).abs() <= v.abs() * 1e-8);
        }
    }
}
