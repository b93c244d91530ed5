//! Byte-stable number formatting for CSV and text reports.
//!
//! Numbers are written like C's `%.9g`: nine significant digits, trailing
//! zeros stripped, scientific notation (`1.5e-05`) when the decimal exponent
//! is below -4 or at least 9. Rows end with `\n`.

pub const SIG_DIGITS: usize = 9;
pub const LINE_END: &str = "\n";

pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // rounding to the target precision first fixes the exponent (9.9999999999 -> 1e1)
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    } else {
        let decimals = (SIG_DIGITS as i32 - 1 - exp) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_owned()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt_g;

    #[test]
    fn matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1.0 / 3.0, "0.333333333"),
            (0.227272727272, "0.227272727"),
            (40.0 / 3.0, "13.3333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (1.5e-5, "1.5e-05"),
            (0.0001, "0.0001"),
            (9.9999999999, "10"),
            (1e300, "1e+300"),
            (f64::INFINITY, "inf"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g(x), want, "{x}");
        }
    }
}
