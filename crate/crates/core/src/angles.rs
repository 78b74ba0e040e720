//! Exact angle expressions for model definitions.
//!
//! Atom angles in a model file are affine expressions of the two analyzer
//! angles with rational coefficients,
//!
//! ```text
//! expr := term (('+' | '-') term)*
//! term := rational | rational? 'pi' | rational? 'phi1' | rational? 'phi2'
//! rational := ['-'] digits ['/' digits]
//! ```
//!
//! e.g. `phi1 + pi`, `1/2 pi`, `-3/4 pi + phi2`, `2 phi1 - 1/3 pi`. A bare
//! rational is a constant in radians; `1/2 pi` means π/2. Keeping the
//! coefficients rational keeps atom positions exact, so equality checks on
//! densities do not depend on how an angle was written.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;

use crate::error::{Error, Result};

/// Wrap an angle to [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % TAU;
    if t < 0.0 {
        t += TAU;
    }
    // `-1e-17 % TAU` rounds to TAU itself; fold that back to 0.
    if t >= TAU {
        t -= TAU;
    }
    t
}

/// Signed angular distance in (-π, π].
pub fn angle_difference(a: f64, b: f64) -> f64 {
    let mut d = (a - b) % TAU;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    d
}

/// `c0 + c1·φ1 + c2·φ2 + k·π` with rational coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleExpr {
    pub c0: Rational64,
    pub c1: Rational64,
    pub c2: Rational64,
    pub k: Rational64,
}

impl AngleExpr {
    pub const ZERO: AngleExpr = AngleExpr {
        c0: Rational64::new_raw(0, 1),
        c1: Rational64::new_raw(0, 1),
        c2: Rational64::new_raw(0, 1),
        k: Rational64::new_raw(0, 1),
    };

    /// θ = φ1 + k·π
    pub fn phi1_plus_pi(k: i64) -> Self {
        AngleExpr {
            c1: Rational64::from_integer(1),
            k: Rational64::from_integer(k),
            ..Self::ZERO
        }
    }

    /// θ = φ2 + k·π
    pub fn phi2_plus_pi(k: i64) -> Self {
        AngleExpr {
            c2: Rational64::from_integer(1),
            k: Rational64::from_integer(k),
            ..Self::ZERO
        }
    }

    /// Evaluate at concrete analyzer angles, wrapped to [0, 2π).
    pub fn eval(&self, phi1: f64, phi2: f64) -> f64 {
        let c0 = rational_to_f64(self.c0);
        let c1 = rational_to_f64(self.c1);
        let c2 = rational_to_f64(self.c2);
        let k = rational_to_f64(self.k);
        wrap_angle(c0 + c1 * phi1 + c2 * phi2 + k * PI)
    }

    /// True when the expression does not reference either analyzer angle.
    pub fn is_setting_free(&self) -> bool {
        self.c1 == Rational64::from_integer(0) && self.c2 == Rational64::from_integer(0)
    }
}

impl fmt::Display for AngleExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let zero = Rational64::from_integer(0);
        if self.c0 != zero {
            parts.push(format!("{}", self.c0));
        }
        for (coeff, sym) in [(self.c1, "phi1"), (self.c2, "phi2"), (self.k, "pi")] {
            if coeff == zero {
                continue;
            }
            if coeff == Rational64::from_integer(1) {
                parts.push(sym.to_string());
            } else {
                parts.push(format!("{coeff} {sym}"));
            }
        }
        if parts.is_empty() {
            return write!(f, "0");
        }
        let mut out = parts[0].clone();
        for p in &parts[1..] {
            if let Some(rest) = p.strip_prefix('-') {
                out.push_str(" - ");
                out.push_str(rest);
            } else {
                out.push_str(" + ");
                out.push_str(p);
            }
        }
        write!(f, "{out}")
    }
}

impl FromStr for AngleExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut expr = AngleExpr::ZERO;
        for (sign, term) in split_terms(s)? {
            let (mut coeff, symbol) = parse_term(term)?;
            if sign < 0 {
                coeff = -coeff;
            }
            match symbol {
                Some("pi") => expr.k += coeff,
                Some("phi1") => expr.c1 += coeff,
                Some("phi2") => expr.c2 += coeff,
                Some(other) => {
                    return Err(Error::Parse(format!("unknown symbol `{other}` in `{s}`")))
                }
                None => expr.c0 += coeff,
            }
        }
        Ok(expr)
    }
}

/// Split `a + b - c` into signed terms.
fn split_terms(s: &str) -> Result<Vec<(i64, &str)>> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty angle expression".into()));
    }
    let mut terms = Vec::new();
    let mut start = 0usize;
    let mut sign = 1i64;
    let bytes = s.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && i > start {
            // A '-' directly after '/' or at a term start belongs to the number.
            let prev = s[start..i].trim();
            if !prev.is_empty() {
                terms.push((sign, prev));
                sign = if c == '-' { -1 } else { 1 };
                start = i + 1;
            }
        } else if (c == '+' || c == '-') && i == start {
            if c == '-' {
                sign = -sign;
            }
            start = i + 1;
        }
        i += 1;
    }
    let last = s[start..].trim();
    if last.is_empty() {
        return Err(Error::Parse(format!("dangling operator in `{s}`")));
    }
    terms.push((sign, last));
    Ok(terms)
}

/// Parse one term into (rational coefficient, optional symbol).
fn parse_term(term: &str) -> Result<(Rational64, Option<&str>)> {
    let term = term.trim();
    for sym in ["phi1", "phi2", "pi"] {
        if let Some(prefix) = term.strip_suffix(sym) {
            let prefix = prefix.trim().trim_end_matches('*').trim();
            let coeff = if prefix.is_empty() {
                Rational64::from_integer(1)
            } else {
                parse_rational(prefix)?
            };
            return Ok((coeff, Some(sym)));
        }
    }
    Ok((parse_rational(term)?, None))
}

/// Parse `p` or `p/q` into a rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: i64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational `{s}`")))?;
    let d: i64 = den
        .parse()
        .map_err(|_| Error::Parse(format!("invalid rational `{s}`")))?;
    if d == 0 {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rational64::new(n, d))
}

fn rational_to_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parse a CLI angle literal: decimal radians (`0.785398`) or an exact
/// `p/q pi` multiple (`1/4 pi`, `pi`, `-3/4pi`).
pub fn parse_angle_literal(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some(prefix) = s.strip_suffix("pi") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let coeff = if prefix.is_empty() {
            Rational64::from_integer(1)
        } else if prefix == "-" {
            Rational64::from_integer(-1)
        } else {
            parse_rational(prefix)?
        };
        return Ok(rational_to_f64(coeff) * PI);
    }
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("invalid angle literal `{s}`")))
}
