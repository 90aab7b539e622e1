//! Deterministic number formatting for reports.

use serde_json::Value;

/// `%.12g`-style formatting; non-finite values print as `inf`, `-inf`, `nan`.
pub fn fmt_g12(x: f64) -> String {
    fmt_g(x, 12)
}

/// `%.{digits}g`-style formatting.
pub fn fmt_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

/// JSON value for a report number: rounded to 12 significant digits, with
/// non-finite values written as strings.
pub fn json_number(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
    } else {
        Value::String(fmt_g12(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_matches_printf() {
        assert_eq!(fmt_g12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(-2.5), "-2.5");
        assert_eq!(fmt_g12(1e-5), "1e-05");
        assert_eq!(fmt_g12(1.5e-4), "0.00015");
        assert_eq!(fmt_g12(1e12), "1e+12");
        assert_eq!(fmt_g12(123456789012.0), "123456789012");
        assert_eq!(fmt_g12(0.1 + 0.2), "0.3");
        assert_eq!(fmt_g12(f64::INFINITY), "inf");
        assert_eq!(fmt_g12(0.0), "0");
    }

    #[test]
    fn json_numbers() {
        assert_eq!(json_number(0.1 + 0.2).to_string(), "0.3");
        assert_eq!(json_number(f64::NEG_INFINITY), Value::String("-inf".into()));
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
    }
}
