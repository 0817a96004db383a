//! Number formatting shared by every text artifact.

/// Scientific notation with 12 significant digits. Deterministic across
/// platforms since it only relies on Rust's shortest-exact float printing.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    format!("{x:.11e}")
}

/// Joins values into one CSV row.
pub fn csv_row(values: &[f64]) -> String {
    values.iter().map(|v| sig12(*v)).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(1.0), "1.00000000000e0");
        assert_eq!(sig12(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(12345.0).parse::<f64>().unwrap(), 12345.0);
    }
}
