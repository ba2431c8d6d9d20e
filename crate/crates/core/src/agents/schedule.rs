use crate::error::{Error, Result};
use std::fmt;

/// A step-size sequence `scale * (1 + t)^(-exponent)`; exponent 0 is a
/// constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub scale: f64,
    pub exponent: f64,
}

impl Rate {
    pub const fn constant(value: f64) -> Self {
        Rate { scale: value, exponent: 0.0 }
    }

    pub const fn polynomial(exponent: f64) -> Self {
        Rate { scale: 1.0, exponent }
    }

    #[inline]
    pub fn at(&self, t: u64) -> f64 {
        if self.exponent == 0.0 {
            self.scale
        } else {
            self.scale * (1.0 + t as f64).powf(-self.exponent)
        }
    }

    pub fn is_constant(&self) -> bool {
        self.exponent == 0.0
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_constant() {
            write!(f, "{}", self.scale)
        } else if self.scale == 1.0 {
            write!(f, "(1+t)^-{}", self.exponent)
        } else {
            write!(f, "{}*(1+t)^-{}", self.scale, self.exponent)
        }
    }
}

impl std::str::FromStr for Rate {
    type Err = String;

    /// Accepts the forms produced by `Display`: `0.5`, `(1+t)^-0.4` and
    /// `0.5*(1+t)^-0.4`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad rate `{s}`: {e}"));
        let (scale, rest) = match s.split_once('*') {
            Some((a, b)) => (num(a)?, b.trim()),
            None => (1.0, s.trim()),
        };
        match rest.strip_prefix("(1+t)^-") {
            Some(exp) => Ok(Rate { scale, exponent: num(exp)? }),
            None if s.contains('*') => Err(format!("bad rate `{s}`")),
            None => Ok(Rate::constant(num(rest)?)),
        }
    }
}

/// Step sizes of the learners.
///
/// Log variants use `beta_log` (averaging in mapped space) and `beta_reg`
/// (averaging of stochastic targets in regular space). The regular variant
/// steps with their product, which is what [`StepSchedule::alpha`] sets up.
/// `t` is the number of earlier updates of the same state-action pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule {
    pub beta_log: Rate,
    pub beta_reg: Rate,
}

impl StepSchedule {
    /// Any pair of rates with scales in `[0, 1]` and non-negative exponents.
    /// No convergence conditions are enforced; see [`StepSchedule::validate`].
    pub fn new(beta_log: Rate, beta_reg: Rate) -> Result<Self> {
        for (name, r) in [("beta_log", beta_log), ("beta_reg", beta_reg)] {
            if !(0.0..=1.0).contains(&r.scale) {
                return Err(Error::param(name, format!("scale {} outside [0, 1]", r.scale)));
            }
            if !(r.exponent >= 0.0) || !r.exponent.is_finite() {
                return Err(Error::param(name, format!("exponent {} must be >= 0", r.exponent)));
            }
        }
        Ok(StepSchedule { beta_log, beta_reg })
    }

    pub fn constant(beta_log: f64, beta_reg: f64) -> Result<Self> {
        Self::new(Rate::constant(beta_log), Rate::constant(beta_reg))
    }

    /// Constant step size for the regular variant.
    pub fn alpha(alpha: f64) -> Result<Self> {
        Self::new(Rate::constant(alpha), Rate::constant(1.0))
            .map_err(|_| Error::param("alpha", format!("{alpha} outside [0, 1]")))
    }

    /// `beta_reg = (1+t)^-reg_exp`, `beta_log = (1+t)^-log_exp`. Rejects
    /// exponent pairs that break a convergence condition, naming it.
    pub fn polynomial(reg_exp: f64, log_exp: f64) -> Result<Self> {
        if !(log_exp >= 0.0) {
            return Err(Error::Schedule {
                condition: 1,
                reason: format!("beta_log exponent {log_exp} is negative, so steps exceed 1"),
            });
        }
        if !(reg_exp > 0.0) {
            return Err(Error::Schedule {
                condition: 4,
                reason: format!("beta_reg exponent {reg_exp} must be > 0 for beta_reg -> 0"),
            });
        }
        let sum = reg_exp + log_exp;
        if sum > 1.0 {
            return Err(Error::Schedule {
                condition: 2,
                reason: format!("product exponent {sum} > 1 makes the step sizes summable"),
            });
        }
        if sum <= 0.5 {
            return Err(Error::Schedule {
                condition: 3,
                reason: format!("product exponent {sum} <= 0.5 makes squared steps diverge"),
            });
        }
        Self::new(Rate::polynomial(log_exp), Rate::polynomial(reg_exp))
    }

    #[inline]
    pub fn rates(&self, t: u64) -> (f64, f64) {
        (self.beta_log.at(t), self.beta_reg.at(t))
    }

    pub fn is_constant(&self) -> bool {
        self.beta_log.is_constant() && self.beta_reg.is_constant()
    }

    /// Checks the four convergence conditions analytically:
    ///
    /// 1. `0 <= beta_log_t beta_reg_t <= 1`
    /// 2. `sum_t beta_log_t beta_reg_t = inf`
    /// 3. `sum_t (beta_log_t beta_reg_t)^2 < inf`
    /// 4. `beta_reg_t -> 0`
    pub fn validate(&self) -> ScheduleReport {
        let scale = self.beta_log.scale * self.beta_reg.scale;
        let exp = self.beta_log.exponent + self.beta_reg.exponent;
        let c1 = (0.0..=1.0).contains(&scale) && exp >= 0.0;
        let c2 = scale > 0.0 && exp <= 1.0;
        let c3 = scale == 0.0 || exp > 0.5;
        let c4 = self.beta_reg.scale == 0.0 || self.beta_reg.exponent > 0.0;
        ScheduleReport {
            holds: [c1, c2, c3, c4],
            details: [
                format!("product starts at {scale} and never grows"),
                if scale == 0.0 {
                    "product is identically zero".to_string()
                } else {
                    format!("product decays as t^-{exp}; diverges iff exponent <= 1")
                },
                format!("squared product decays as t^-{}; converges iff exponent > 1/2", 2.0 * exp),
                if self.beta_reg.is_constant() {
                    format!("beta_reg is constant at {}", self.beta_reg.scale)
                } else {
                    format!("beta_reg decays as t^-{}", self.beta_reg.exponent)
                },
            ],
        }
    }
}

/// Outcome of [`StepSchedule::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub holds: [bool; 4],
    pub details: [String; 4],
}

impl ScheduleReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }

    /// Condition numbers (1-based) that fail.
    pub fn violations(&self) -> Vec<u8> {
        (1..=4u8).filter(|&i| !self.holds[i as usize - 1]).collect()
    }
}

impl fmt::Display for ScheduleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (ok, detail)) in self.holds.iter().zip(&self.details).enumerate() {
            writeln!(f, "condition {}: {} ({detail})", i + 1, if *ok { "holds" } else { "VIOLATED" })?;
        }
        write!(f, "theorem conditions: {}", if self.all_hold() { "pass" } else { "fail" })
    }
}
