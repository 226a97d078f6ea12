//! Exact score arithmetic. Scores stay rational until they are reported.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Score = Ratio<i128>;

pub fn ratio(numer: i128, denom: i128) -> Score {
    Ratio::new(numer, denom)
}

pub fn int(n: usize) -> Score {
    Ratio::from_integer(n as i128)
}

pub fn to_f64(s: &Score) -> f64 {
    // i128 -> f64 on both halves loses nothing for the magnitudes used here
    s.numer().to_f64().unwrap_or(f64::NAN) / s.denom().to_f64().unwrap_or(f64::NAN)
}

/// Parses `3`, `-0.25`, `.5` or `7/3` without going through floating point.
pub fn parse_exact(text: &str) -> Option<Score> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i128 = n.trim().parse().ok()?;
        let d: i128 = d.trim().parse().ok()?;
        return (d != 0).then(|| Ratio::new(n, d));
    }
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 30 {
        return None;
    }
    let whole: i128 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let scale = 10i128.checked_pow(frac.len() as u32)?;
    let frac_val: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    let value = Ratio::new(whole.checked_mul(scale)?.checked_add(frac_val)?, scale);
    Some(if negative { -value } else { value })
}

/// Renders exact values as `n` or `n/d`.
pub fn exact_string(s: &Score) -> String {
    if s.denom() == &1 {
        s.numer().to_string()
    } else {
        format!("{}/{}", s.numer(), s.denom())
    }
}

pub fn max_zero(s: Score) -> Score {
    if s < Score::zero() {
        Score::zero()
    } else {
        s
    }
}
