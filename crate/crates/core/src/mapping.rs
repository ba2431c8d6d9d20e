//! The logarithmic value mapping `f(x) = c ln(x + gamma^k) + d` and its
//! inverse `f^-1(y) = exp((y - d) / c) - gamma^k`.
//!
//! Internally the mapping is stored relative to its anchor `f^-1(0)`, so both
//! directions can be evaluated with `ln_1p`/`exp_m1`. This keeps
//! `f^-1(0) == q_init` exact when `d` comes from [`d_for_init`].

use crate::error::{Error, Result};

/// Smallest argument of the logarithm; `x + gamma^k` is clamped here.
pub const DEFAULT_FLOOR: f64 = 1e-300;

/// `gamma^k`, evaluated as `exp(k ln gamma)`.
pub fn gamma_pow(gamma: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if gamma == 0.0 {
        0.0
    } else {
        (k * gamma.ln()).exp()
    }
}

/// The shift `d = -c ln(q_init + gamma^k)` that makes `f^-1(0) = q_init`.
pub fn d_for_init(c: f64, gamma: f64, k: f64, q_init: f64) -> Result<f64> {
    let arg = q_init + gamma_pow(gamma, k);
    if !(arg > 0.0) || !arg.is_finite() {
        return Err(Error::MappingDomain(format!(
            "q_init + gamma^k = {arg} must be positive"
        )));
    }
    Ok(-c * arg.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMapping {
    c: f64,
    d: f64,
    k: f64,
    gamma: f64,
    floor: f64,
    gamma_k: f64,
    // exp(-d / c), i.e. f^-1(0) + gamma^k
    scale: f64,
    // f^-1(0)
    anchor: f64,
}

impl LogMapping {
    pub fn new(c: f64, k: f64, gamma: f64, d: f64) -> Result<Self> {
        Self::validate(c, k, gamma)?;
        if !d.is_finite() {
            return Err(Error::param("d", "must be finite"));
        }
        let gamma_k = gamma_pow(gamma, k);
        let scale = (-d / c).exp();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::MappingDomain(format!("exp(-d/c) not representable for d = {d}, c = {c}")));
        }
        Ok(LogMapping {
            c,
            d,
            k,
            gamma,
            floor: DEFAULT_FLOOR,
            gamma_k,
            scale,
            anchor: scale - gamma_k,
        })
    }

    /// Mapping whose `d` is chosen so that `f^-1(0) = q_init`.
    pub fn with_init(c: f64, k: f64, gamma: f64, q_init: f64) -> Result<Self> {
        Self::validate(c, k, gamma)?;
        let d = d_for_init(c, gamma, k, q_init)?;
        let gamma_k = gamma_pow(gamma, k);
        Ok(LogMapping {
            c,
            d,
            k,
            gamma,
            floor: DEFAULT_FLOOR,
            gamma_k,
            scale: q_init + gamma_k,
            anchor: q_init,
        })
    }

    fn validate(c: f64, k: f64, gamma: f64) -> Result<()> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::param("c", "must be positive"));
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::param("k", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::param("gamma", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_k(&self) -> f64 {
        self.gamma_k
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `f(x)`; also reports whether `x + gamma^k` had to be clamped.
    #[inline]
    pub fn forward_flagged(&self, x: f64) -> Result<(f64, bool)> {
        if x.is_nan() {
            return Err(Error::MappingDomain("f(NaN)".into()));
        }
        let arg = x + self.gamma_k;
        if arg <= self.floor {
            return Ok((self.c * (self.floor.ln() - self.scale.ln()), true));
        }
        let t = (x - self.anchor) / self.scale;
        let y = if t.abs() < 0.5 {
            self.c * t.ln_1p()
        } else {
            let ratio = arg / self.scale;
            if ratio.is_finite() && ratio > 0.0 {
                self.c * ratio.ln()
            } else {
                self.c * (arg.ln() - self.scale.ln())
            }
        };
        Ok((y, false))
    }

    #[inline]
    pub fn forward(&self, x: f64) -> Result<f64> {
        self.forward_flagged(x).map(|(y, _)| y)
    }

    /// `f(hi) - f(lo)` evaluated from the difference `hi - lo`, which stays
    /// accurate when both mapped values are large and nearly equal.
    pub fn difference(&self, hi: f64, lo: f64) -> Result<f64> {
        self.shifted_difference(hi, lo, 0.0)
    }

    /// `f(hi + shift) - f(lo + shift)` without forming `hi + shift`, so gaps
    /// far below the precision of `shift` survive.
    pub fn shifted_difference(&self, hi: f64, lo: f64, shift: f64) -> Result<f64> {
        let base = lo + shift + self.gamma_k;
        if !(base > 0.0) || !(hi + shift + self.gamma_k > 0.0) {
            return Err(Error::MappingDomain(format!("f({hi} + {shift}) - f({lo} + {shift}) below -gamma^k")));
        }
        Ok(self.c * ((hi - lo) / base).ln_1p())
    }

    /// `f^-1(y)`; always greater than `-gamma^k`.
    #[inline]
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::MappingDomain(format!("f^-1({y})")));
        }
        let e = y / self.c;
        let x = if e < 700.0 {
            self.anchor + self.scale * e.exp_m1()
        } else {
            (e + self.scale.ln()).exp() - self.gamma_k
        };
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::MappingOverflow { input: y, d: self.d, c: self.c })
        }
    }
}

/// Error of averaging in mapped space instead of regular space, and its
/// analytic bound.
///
/// `a` is the current regular-space estimate and `b` the raw update target;
/// the target is first interpolated, `u = a + beta2 (b - a)`, then
///
/// * `error = f^-1((1 - beta1) f(a) + beta1 f(u)) - ((1 - beta1) a + beta1 u)`
/// * `bound = beta1 beta2 (a - b) ln(beta2 (a - b) / (u + gamma^k) + 1)`
///
/// Concavity of `f` gives `error <= 0` and `|error| <= bound`.
pub fn averaging_error_bound(
    m: &LogMapping,
    a: f64,
    b: f64,
    beta1: f64,
    beta2: f64,
) -> Result<(f64, f64)> {
    let g = m.gamma_k();
    if !(a + g > 0.0) || !(b + g > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::MappingDomain(format!(
            "a = {a}, b = {b} must exceed -gamma^k = {}",
            -g
        )));
    }
    for (name, beta) in [("beta1", beta1), ("beta2", beta2)] {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::param(name, format!("{beta} outside (0, 1]")));
        }
    }
    let u = (1.0 - beta2) * a + beta2 * b;
    let big_a = a + g;
    // f^-1 of the mapped average is the weighted geometric mean of
    // (a + g, u + g); the regular-space average is the arithmetic mean.
    // error = A (rho^beta1 - 1 - beta1 (rho - 1)) with rho = (u + g) / (a + g).
    let rho_m1 = (u - a) / big_a;
    let l = rho_m1.ln_1p();
    let h = if l.abs() <= 1.0 {
        gm_am_series(beta1, l)
    } else {
        (beta1 * l).exp_m1() - beta1 * rho_m1
    };
    let error = big_a * h;
    let gap = a - b;
    let bound = beta1 * beta2 * gap * (beta2 * gap / (u + g)).ln_1p();
    Ok((error, bound))
}

// sum_{n>=2} (beta^n - beta) l^n / n!, every coefficient <= 0
fn gm_am_series(beta: f64, l: f64) -> f64 {
    let mut sum = 0.0;
    let mut l_pow = l;
    let mut beta_pow = beta;
    let mut fact = 1.0;
    for n in 2..=40 {
        l_pow *= l;
        beta_pow *= beta;
        fact *= n as f64;
        let term = (beta_pow - beta) * l_pow / fact;
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LogMapping {
        LogMapping::with_init(1.0, 2.0, 0.5, 0.0).unwrap()
    }

    #[test]
    fn d_example_values() {
        let d = d_for_init(1.0, 0.5, 2.0, 0.0).unwrap();
        assert!((d - 1.386_294_361_119_890_6).abs() < 1e-15);
        assert!((d_for_init(2.0, 0.5, 2.0, 0.0).unwrap() - 2.0 * d).abs() < 1e-15);
        assert!(d_for_init(3.0, 0.99, 2000.0, 1.0).unwrap().abs() < 1e-8);
        assert!(d_for_init(1.0, 0.5, 2.0, -0.3).is_err());
    }

    #[test]
    fn forward_examples() {
        let m = small();
        assert_eq!(m.forward(0.0).unwrap(), 0.0);
        // ln(1.25) + ln(4), high-precision reference
        assert!((m.forward(1.0).unwrap() - 1.609_437_912_434_100_4).abs() < 1e-14);
        assert!((m.inverse(1.609_437_912_434_100_4).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn scale_c_doubles_mapped_offset() {
        let m1 = LogMapping::new(1.0, 2.0, 0.5, 0.3).unwrap();
        let m2 = LogMapping::new(2.0, 2.0, 0.5, 0.3).unwrap();
        for x in [0.0, 0.5, 3.0, 100.0] {
            let a = m1.forward(x).unwrap() - 0.3;
            let b = m2.forward(x).unwrap() - 0.3;
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn nan_is_an_error_and_clamp_is_flagged() {
        let m = small();
        assert!(m.forward(f64::NAN).is_err());
        let (y, clamped) = m.forward_flagged(-0.25).unwrap();
        assert!(clamped);
        assert!(y.is_finite());
        assert!(!m.forward_flagged(0.0).unwrap().1);
    }

    #[test]
    fn difference_matches_forward() {
        let m = small();
        let d = m.difference(3.0, 0.5).unwrap();
        assert!((d - (m.forward(3.0).unwrap() - m.forward(0.5).unwrap())).abs() < 1e-14);
        // 1e-15 apart near 1: forward loses it, difference does not
        let d = m.difference(1.0 + 2f64.powi(-50), 1.0).unwrap();
        assert!((d - 2f64.powi(-50) / 1.25).abs() < 1e-28);
    }

    #[test]
    fn inverse_overflow_is_reported() {
        let m = small();
        assert!(matches!(m.inverse(1e6), Err(Error::MappingOverflow { .. })));
        assert!(m.inverse(f64::INFINITY).is_err());
    }

    #[test]
    fn inverse_stays_above_minus_gamma_k() {
        let m = small();
        for y in [-1e3, -50.0, -1.0, 0.0, 3.0] {
            assert!(m.inverse(y).unwrap() >= -m.gamma_k());
        }
    }

    #[test]
    fn bound_examples() {
        let m = small();
        let (e, b) = averaging_error_bound(&m, 2.0, 2.0, 0.3, 0.7).unwrap();
        assert_eq!((e, b), (0.0, 0.0));
        let (e, _) = averaging_error_bound(&m, 2.0, 0.5, 1.0, 0.6).unwrap();
        assert!(e.abs() < 1e-15);
        // direct evaluation: sqrt(2.25 * 0.75) - 0.25 - 1.25 and 0.75 ln 3
        let (e, b) = averaging_error_bound(&m, 2.0, 0.5, 0.5, 1.0).unwrap();
        assert!((e - -0.200_961_894_323_342).abs() < 1e-14);
        assert!((b - 0.823_959_216_501_082_3).abs() < 1e-14);
        assert!(e <= 0.0 && e.abs() <= b);
    }

    #[test]
    fn bound_domain_errors() {
        let m = small();
        assert!(averaging_error_bound(&m, -1.0, 0.5, 0.5, 0.5).is_err());
        assert!(averaging_error_bound(&m, 1.0, 0.5, 0.0, 0.5).is_err());
        assert!(averaging_error_bound(&m, 1.0, 0.5, 0.5, 1.5).is_err());
    }
}
