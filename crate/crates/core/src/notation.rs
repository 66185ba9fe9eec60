//! Concise uncertainty notation, e.g. `0.00081(9)` for 0.00081 ± 0.00009.
//!
//! The uncertainty is rounded to one significant digit and the value to the
//! same decimal place.

use crate::error::{Error, Result};

/// Render `value ± err` as `value(digit)`.
pub fn format_uncertainty(value: f64, err: f64) -> String {
    if !(err.is_finite() && err > 0.0) {
        return format!("{value}(0)");
    }
    let mut exp = err.log10().floor() as i32;
    let mut digit = (err / 10f64.powi(exp)).round() as u64;
    if digit >= 10 {
        exp += 1;
        digit = 1;
    }
    if exp >= 0 {
        let scale = 10f64.powi(exp);
        let v = (value / scale).round() * scale;
        return format!("{v:.0}({})", digit * 10u64.pow(exp as u32));
    }
    let decimals = (-exp) as usize;
    let mut s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s.remove(0);
    }
    format!("{s}({digit})")
}

/// Parse `value(digits)` back into `(value, err)`.
pub fn parse_uncertainty(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::Config(format!("malformed uncertainty {text:?}"));
    let text = text.trim();
    let open = text.find('(').ok_or_else(bad)?;
    if !text.ends_with(')') {
        return Err(bad());
    }
    let value_text = &text[..open];
    let digits = &text[open + 1..text.len() - 1];
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let value: f64 = value_text.parse().map_err(|_| bad())?;
    let decimals = value_text.find('.').map_or(0, |p| value_text.len() - p - 1);
    let err = digits.parse::<u64>().map_err(|_| bad())? as f64 / 10f64.powi(decimals as i32);
    Ok((value, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_table_entries() {
        assert_eq!(format_uncertainty(0.00081, 0.00009), "0.00081(9)");
        assert_eq!(format_uncertainty(0.0019, 0.00012), "0.0019(1)");
        assert_eq!(format_uncertainty(0.99712, 0.0041), "0.997(4)");
        assert_eq!(format_uncertainty(0.0, 0.002), "0.000(2)");
        assert_eq!(format_uncertainty(1.0, 0.0008), "1.0000(8)");
    }

    #[test]
    fn rounding_carries_into_next_decade() {
        assert_eq!(format_uncertainty(0.0123, 0.00096), "0.012(1)");
        assert_eq!(format_uncertainty(1234.0, 37.0), "1230(40)");
        assert_eq!(format_uncertainty(-0.00001, 0.0001), "0.0000(1)");
    }

    #[test]
    fn parses_back() {
        let (v, e) = parse_uncertainty("0.00081(9)").unwrap();
        assert_eq!(v, 0.00081);
        assert!((e - 0.00009).abs() < 1e-18);
        let (v, e) = parse_uncertainty("1.00(2)").unwrap();
        assert_eq!(v, 1.0);
        assert!((e - 0.02).abs() < 1e-15);
        for bad in ["0.1", "0.1()", "0.1(x)", "(3)", "0.1(3"] {
            assert!(parse_uncertainty(bad).is_err(), "{bad}");
        }
    }
}
