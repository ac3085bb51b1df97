//! Scalar-or-range flag values and complex scalars.

use std::fmt;
use std::str::FromStr;

use hetsys_core::C64;

/// `v` or `min:max:count`, with `count` evenly spaced points including both ends.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Scalar(f64),
    Range { min: f64, max: f64, count: usize },
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Grid::Scalar(v) => vec![v],
            Grid::Range { min, max, count } => {
                if count == 1 {
                    return vec![min];
                }
                let step = (max - min) / (count - 1) as f64;
                (0..count)
                    .map(|k| if k + 1 == count { max } else { min + k as f64 * step })
                    .collect()
            }
        }
    }

    pub fn scalar(&self) -> Option<f64> {
        match *self {
            Grid::Scalar(v) => Some(v),
            Grid::Range { .. } => None,
        }
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| p.parse::<f64>().map_err(|_| format!("`{}` is not a number", p));
        match parts.as_slice() {
            [v] => Ok(Grid::Scalar(num(v)?)),
            [a, b, n] => {
                let count: usize = n.parse().map_err(|_| format!("`{}` is not a count", n))?;
                let (min, max) = (num(a)?, num(b)?);
                if count == 0 {
                    return Err(String::from("a range needs at least one point"));
                }
                if !(min.is_finite() && max.is_finite()) || (count > 1 && max <= min) {
                    return Err(format!("bad range {}..{}", min, max));
                }
                Ok(Grid::Range { min, max, count })
            }
            _ => Err(format!("expected `v` or `min:max:count`, got `{}`", s)),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grid::Scalar(v) => write!(f, "{}", v),
            Grid::Range { min, max, count } => write!(f, "{}:{}:{}", min, max, count),
        }
    }
}

/// A real number, optionally a fraction `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let (p, q) = (parse_real(p)?, parse_real(q)?);
        if q == 0.0 {
            return Err(format!("zero denominator in `{}`", s));
        }
        return Ok(p / q);
    }
    s.parse::<f64>().map_err(|_| format!("`{}` is not a number", s))
}

/// `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`, optionally in parentheses.
pub fn parse_complex(s: &str) -> Result<C64, String> {
    let mut s = s.trim();
    if s.starts_with('(') && s.ends_with(')') {
        s = s[1..s.len() - 1].trim();
    }
    if s.is_empty() {
        return Err(String::from("empty number"));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(C64::new(parse_real(s)?, 0.0));
    };
    // split between real and imaginary parts, skipping exponent signs
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (parse_real(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im.trim() {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => parse_real(v)?,
    };
    Ok(C64::new(re, im))
}
