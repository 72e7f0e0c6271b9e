//! Number formatting shared by every CSV writer.
//!
//! Values are printed with 17 significant digits (enough to round-trip any
//! `f64`), trailing zeros removed, `.` as decimal separator. Magnitudes in
//! `[1e-5, 1e17)` are written positionally, everything else in scientific
//! notation (`1.5e-7`).

/// Formats `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };

    if (-5..17).contains(&exp) {
        let body = if exp >= 0 {
            let point = (exp + 1) as usize;
            format!("{}.{}", &digits[..point], &digits[point..])
        } else {
            format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
        };
        format!("{sign}{}", trim_fraction(&body))
    } else {
        let body = format!("{}.{}", &digits[..1], &digits[1..]);
        format!("{sign}{}e{exp}", trim_fraction(&body))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Formats an optional value, using the empty string for `None` or NaN.
pub fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) if !x.is_nan() => fmt_f64(x),
        _ => String::new(),
    }
}
