/// Fixed-point rendering with trailing zeros dropped: `3.000 → "3"`,
/// `24.60 → "24.6"`, `2.2222 → "2.22"` (for two decimals).
pub fn trimmed(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return "n/a".to_string();
    }
    let mut s = format!("{value:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

/// `"mean (sd)"` as printed in result tables.
pub fn mean_sd(mean: f64, sd: f64, mean_decimals: usize, sd_decimals: usize) -> String {
    format!("{} ({})", trimmed(mean, mean_decimals), trimmed(sd, sd_decimals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trimming() {
        assert_eq!(trimmed(3.0, 2), "3");
        assert_eq!(trimmed(20.0 / 9.0, 2), "2.22");
        assert_eq!(trimmed(24.0 / 9.0, 2), "2.67");
        assert_eq!(trimmed(24.6, 2), "24.6");
        assert_eq!(trimmed(6.107, 3), "6.107");
        assert_eq!(trimmed(6.05, 3), "6.05");
        assert_eq!(trimmed(-0.001, 2), "0");
        assert_eq!(trimmed(f64::NAN, 2), "n/a");
        assert_eq!(mean_sd(665.01, 94.52, 2, 2), "665.01 (94.52)");
        assert_eq!(mean_sd(78.33, 13.0, 2, 2), "78.33 (13)");
    }
}
