//! Number formatting for CSV output.

use num_rational::Ratio;

/// `x` with at most ten significant digits, in the style of C's `%.10g`.
pub fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".to_owned() } else { x.to_string() };
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        trim(format!("{x:.*}", (9 - exp).max(0) as usize))
    } else {
        format!("{}e{exp}", trim(mantissa.to_owned()))
    }
}

pub fn ratio(q: Ratio<i64>) -> String {
    sig10(*q.numer() as f64 / *q.denom() as f64)
}

fn trim(mut s: String) -> String {
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    s
}
