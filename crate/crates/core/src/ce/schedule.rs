use crate::{Error, Result};

/// Step-size sequence indexed from `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// `scale · t^{-exponent}`
    Power { scale: f64, exponent: f64 },
    Constant(f64),
}

impl StepSchedule {
    pub fn evaluate(&self, t: u64) -> f64 {
        match *self {
            Self::Power { scale, exponent } => scale * (t.max(1) as f64).powf(-exponent),
            Self::Constant(v) => v,
        }
    }

    /// Accepts `0.05`, `1/t`, `t^-0.6`, `2*t^-0.6` and `0.5/t`.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot parse step schedule '{text}'"));
        let num = |x: &str| x.parse::<f64>().map_err(|_| bad());
        let sched = if let Ok(v) = s.parse::<f64>() {
            Self::Constant(v)
        } else if let Some(head) = s.strip_suffix("/t") {
            Self::Power { scale: num(head)?, exponent: 1.0 }
        } else if let Some(pos) = s.find("t^") {
            let head = s[..pos].trim_end_matches('*');
            let scale = if head.is_empty() { 1.0 } else { num(head)? };
            Self::Power { scale, exponent: -num(&s[pos + 2..])? }
        } else {
            return Err(bad());
        };
        sched.validate()?;
        Ok(sched)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Power { scale, exponent } => scale > 0.0 && exponent >= 0.0 && scale.is_finite(),
            Self::Constant(v) => v > 0.0 && v.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("step schedule {self:?} must be positive and non-increasing")))
        }
    }
}

impl std::fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Self::Power { scale, exponent } if scale == 1.0 => write!(f, "t^-{exponent}"),
            Self::Power { scale, exponent } => write!(f, "{scale}*t^-{exponent}"),
            Self::Constant(v) => write!(f, "{v}"),
        }
    }
}

/// Which convergence regime a pair of schedules falls into.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleRegime {
    /// `Σα = Σβ = ∞`, `Σ(α²+β²) < ∞`, `α/β → 0`.
    Theoretical,
    /// At least one constant step; the diminishing-step conditions are waived.
    ConstantStep,
    Violated(String),
}

pub fn check_schedules(alpha: &StepSchedule, beta: &StepSchedule) -> ScheduleRegime {
    use StepSchedule::*;
    match (alpha, beta) {
        (Power { exponent: a, .. }, Power { exponent: b, .. }) => {
            for (name, e) in [("alpha", a), ("beta", b)] {
                if *e > 1.0 {
                    return ScheduleRegime::Violated(format!("{name} is summable"));
                }
                if *e <= 0.5 {
                    return ScheduleRegime::Violated(format!("{name} is not square summable"));
                }
            }
            if a <= b {
                return ScheduleRegime::Violated("alpha/beta does not vanish".into());
            }
            ScheduleRegime::Theoretical
        }
        _ => ScheduleRegime::ConstantStep,
    }
}
