//! Compact decimal formatting for CSV artifacts.
//!
//! [`format_sig`] renders a finite f64 with a fixed number of significant
//! digits the way C's `%g` does: trailing zeros dropped, scientific notation
//! only when the exponent makes plain decimal unwieldy. Artifact files use 9
//! significant digits, which is coarse enough to be readable and fine enough
//! that independent implementations agree byte-for-byte.

use alloc::format;
use alloc::string::{String, ToString};

/// Formats `value` with `digits` significant digits, `%g`-style.
///
/// # Panics
/// If `digits` is zero or `value` is not finite; artifact writers validate
/// their numbers before formatting.
pub fn format_sig(value: f64, digits: usize) -> String {
    assert!(digits > 0, "need at least one significant digit");
    assert!(value.is_finite(), "cannot format {value}");
    if value == 0.0 {
        // Covers -0.0 as well: artifacts should not distinguish signed zero.
        return "0".to_string();
    }
    // Round to `digits` significant digits via scientific notation, then
    // choose presentation from the rounded exponent like %g: plain decimal
    // for exponents in [-4, digits), scientific otherwise.
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific formatting always contains an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_trailing_zeros(mantissa);
        return format!("{mantissa}e{exp}");
    }
    let rounded: f64 = sci.parse().expect("scientific form parses back");
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let fixed = format!("{rounded:.decimals$}");
    trim_trailing_zeros(&fixed).to_string()
}

/// Drops trailing zeros after a decimal point, and the point itself if
/// nothing follows it ("1.2300" → "1.23", "5.000" → "5", "120" → "120").
fn trim_trailing_zeros(s: &str) -> &str {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.')
}
