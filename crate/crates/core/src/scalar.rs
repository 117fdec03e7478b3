//! Numeric types usable as interval endpoints.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_rational::Ratio;
use num_traits::Num;
use ordered_float::OrderedFloat;

/// An ordered numeric type for interval endpoints.
///
/// The exact rational implementation is the default used throughout the
/// crate; the float implementations exist for callers that only need
/// approximate interval domains.
pub trait Scalar: Num + Clone + Ord + Hash + Debug + Display + Send + Sync + 'static {
    /// Parses an endpoint written as an integer, a decimal or `p/q`.
    fn parse_scalar(text: &str) -> Option<Self>;
}

impl Scalar for Ratio<i64> {
    fn parse_scalar(text: &str) -> Option<Self> {
        let text = text.trim();
        if let Some((num, den)) = text.split_once('/') {
            let num: i64 = num.trim().parse().ok()?;
            let den: i64 = den.trim().parse().ok()?;
            if den == 0 {
                return None;
            }
            return Some(Ratio::new(num, den));
        }
        if let Some((int, frac)) = text.split_once('.') {
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
                return None;
            }
            let negative = int.trim_start().starts_with('-');
            let int: i64 = match int.trim() {
                "" | "-" | "+" => 0,
                s => s.parse().ok()?,
            };
            let scale = 10i64.checked_pow(frac.len() as u32)?;
            let frac: i64 = frac.parse().ok()?;
            let magnitude = int.abs().checked_mul(scale)?.checked_add(frac)?;
            let numer = if negative { -magnitude } else { magnitude };
            return Some(Ratio::new(numer, scale));
        }
        text.parse::<i64>().ok().map(Ratio::from_integer)
    }
}

impl Scalar for OrderedFloat<f64> {
    fn parse_scalar(text: &str) -> Option<Self> {
        parse_float(text).map(OrderedFloat)
    }
}

impl Scalar for OrderedFloat<f32> {
    fn parse_scalar(text: &str) -> Option<Self> {
        parse_float(text).map(|v| OrderedFloat(v as f32))
    }
}

fn parse_float(text: &str) -> Option<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => num.trim().parse::<f64>().ok()? / den.trim().parse::<f64>().ok()?,
        None => text.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}
