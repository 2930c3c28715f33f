//! Number formatting and CSV assembly.

use anyhow::Result;

pub const SIGNIFICANT: usize = 12;

/// Formats `v` with 12 significant digits in the style of C's `%.12g`.
pub fn sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIGNIFICANT as i32).contains(&exp) {
        let decimals = (SIGNIFICANT as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

/// Renders a header and rows of numbers as RFC 4180 CSV with LF endings.
pub fn csv_table(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(0.745_775_173_729_266_8), "0.745775173729");
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(-2.5), "-2.5");
        assert_eq!(sig(123_456_789_012_345.0), "1.23456789012e+14");
        assert_eq!(sig(1.5e-7), "1.5e-07");
        assert_eq!(sig(0.000_123_456_789_012_34), "0.000123456789012");
        assert_eq!(sig(f64::NAN), "NaN");
        assert_eq!(sig(0.0), "0");
        assert_eq!(sig(10.0), "10");
    }

    #[test]
    fn csv_uses_lf() {
        let t = csv_table(&["x".into(), "a,b".into()], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(t, "x,\"a,b\"\n1,2\n");
    }
}
