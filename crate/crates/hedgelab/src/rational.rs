//! Exact rational scalars and their extension by the two infinities.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;

use crate::{Error, Result};

/// The scalar type used everywhere: arbitrary-precision rationals.
pub type Rat = num_rational::BigRational;

/// Shorthand for `n/d` used heavily in tests and builders.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Shorthand for an integer rational.
pub fn rint(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"num/den"` or `"num"`. Rejects zero denominators and empty input.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::input(format!("not a rational: {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::input(format!("not a rational: {s:?}")))?;
    if den.is_zero() {
        return Err(Error::input(format!("zero denominator in {s:?}")));
    }
    Ok(Rat::new(num, den))
}

/// Renders a rational in lowest terms, `"num/den"` or `"num"` when integral.
pub fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A rational extended by the two infinities; the order is the obvious one.
///
/// Used for super-hedging prices (`-inf` below a failing node, `+inf` for the
/// empty menu) and for declared limits of monotone payoff sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ext {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl Ext {
    pub fn fin(r: Rat) -> Self {
        Ext::Fin(r)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Fin(_))
    }

    pub fn as_rat(&self) -> Option<&Rat> {
        match self {
            Ext::Fin(r) => Some(r),
            _ => None,
        }
    }

    /// `max(self - other, 0)` with the conventions needed for price gaps:
    /// any finite (or `-inf`) value minus `+inf` is clamped to zero.
    pub fn pos_gap_over(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::PosInf, Ext::PosInf) => Ext::Fin(Rat::zero()),
            (Ext::PosInf, _) => Ext::PosInf,
            (Ext::NegInf, _) | (_, Ext::PosInf) => Ext::Fin(Rat::zero()),
            (Ext::Fin(_), Ext::NegInf) => Ext::PosInf,
            (Ext::Fin(a), Ext::Fin(b)) => {
                let d = a - b;
                Ext::Fin(if d.is_negative() { Rat::zero() } else { d })
            }
        }
    }

    pub fn parse(s: &str) -> Result<Ext> {
        match s.trim() {
            "-inf" => Ok(Ext::NegInf),
            "inf" | "+inf" => Ok(Ext::PosInf),
            other => Ok(Ext::Fin(parse_rat(other)?)),
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ext {
    fn cmp(&self, other: &Self) -> Ordering {
        use Ext::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::PosInf => write!(f, "inf"),
            Ext::Fin(r) => write!(f, "{}", format_rat(r)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "7", "-3", "1/2", "-5/8", "22/7"] {
            let r = parse_rat(s).unwrap();
            assert_eq!(format_rat(&r), s);
        }
        assert_eq!(format_rat(&parse_rat("2/4").unwrap()), "1/2");
        assert_eq!(format_rat(&parse_rat("-2/-4").unwrap()), "1/2");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("a/b").is_err());
    }

    #[test]
    fn ext_order_and_parse() {
        assert!(Ext::NegInf < Ext::Fin(rint(-1000)));
        assert!(Ext::Fin(rint(1000)) < Ext::PosInf);
        assert_eq!(Ext::parse("-inf").unwrap(), Ext::NegInf);
        assert_eq!(Ext::parse("3/4").unwrap(), Ext::Fin(rat(3, 4)));
        assert_eq!(Ext::Fin(rint(3)).to_string(), "3");
    }

    #[test]
    fn pos_gap_clamps() {
        let g = Ext::Fin(rint(2)).pos_gap_over(&Ext::Fin(rint(5)));
        assert_eq!(g, Ext::Fin(Rat::zero()));
        let g = Ext::Fin(rint(5)).pos_gap_over(&Ext::Fin(rint(2)));
        assert_eq!(g, Ext::Fin(rint(3)));
        assert_eq!(Ext::Fin(rint(0)).pos_gap_over(&Ext::PosInf), Ext::Fin(Rat::zero()));
        assert_eq!(Ext::Fin(rint(0)).pos_gap_over(&Ext::NegInf), Ext::PosInf);
    }
}
