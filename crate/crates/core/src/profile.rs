//! Bounded time profiles for coefficient fields.
//!
//! A profile is a bounded function on [0, T]: smooth, piecewise constant
//! (measurable with listed jump times) or an arbitrary sampler. Piecewise
//! constant profiles keep their jump list explicit so that almost-everywhere
//! assertions can exclude the jump frames.

use std::fmt;
use std::sync::Arc;

#[derive(Clone)]
pub enum TimeProfile {
    Constant(f64),
    /// `values.len() == jumps.len() + 1`; jumps strictly increasing in (0, T).
    PiecewiseConstant { jumps: Vec<f64>, values: Vec<f64> },
    /// offset + amplitude * sin(omega * t + phase)
    Harmonic { offset: f64, amplitude: f64, omega: f64, phase: f64 },
    /// Uniform samples on [t0, t0 + dt*(len-1)], linear interpolation, clamped.
    Tabulated { t0: f64, dt: f64, values: Arc<Vec<f64>> },
    Sampler(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant(v) => write!(f, "Constant({v})"),
            TimeProfile::PiecewiseConstant { jumps, values } => {
                write!(f, "PiecewiseConstant(jumps={jumps:?}, values={values:?})")
            }
            TimeProfile::Harmonic { offset, amplitude, omega, phase } => {
                write!(f, "Harmonic({offset} + {amplitude} sin({omega} t + {phase}))")
            }
            TimeProfile::Tabulated { t0, dt, values } => {
                write!(f, "Tabulated(t0={t0}, dt={dt}, len={})", values.len())
            }
            TimeProfile::Sampler(_) => write!(f, "Sampler(..)"),
        }
    }
}

impl TimeProfile {
    pub fn pc(jumps: Vec<f64>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), jumps.len() + 1, "one value per segment");
        assert!(jumps.windows(2).all(|w| w[0] < w[1]), "jumps strictly increasing");
        TimeProfile::PiecewiseConstant { jumps, values }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(v) => *v,
            TimeProfile::PiecewiseConstant { jumps, values } => {
                // Right-continuous: value k on [jump_{k-1}, jump_k).
                let seg = jumps.partition_point(|&j| j <= t);
                values[seg]
            }
            TimeProfile::Harmonic { offset, amplitude, omega, phase } => {
                offset + amplitude * (omega * t + phase).sin()
            }
            TimeProfile::Tabulated { t0, dt, values } => {
                let n = values.len();
                if n == 1 {
                    return values[0];
                }
                let s = ((t - t0) / dt).clamp(0.0, (n - 1) as f64);
                let i = (s.floor() as usize).min(n - 2);
                let w = s - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
            TimeProfile::Sampler(f) => f(t),
        }
    }

    /// Jump times carried by the representation (empty for smooth profiles).
    pub fn jump_times(&self) -> Vec<f64> {
        match self {
            TimeProfile::PiecewiseConstant { jumps, .. } => jumps.clone(),
            _ => Vec::new(),
        }
    }

    /// Supremum over [0, horizon]; exact for closed forms, sampled otherwise.
    pub fn sup(&self, horizon: f64) -> f64 {
        match self {
            TimeProfile::Constant(v) => *v,
            TimeProfile::PiecewiseConstant { values, .. } => {
                values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            TimeProfile::Harmonic { offset, amplitude, .. } => offset + amplitude.abs(),
            _ => self.sampled_extremum(horizon, true),
        }
    }

    /// Infimum over [0, horizon].
    pub fn inf(&self, horizon: f64) -> f64 {
        match self {
            TimeProfile::Constant(v) => *v,
            TimeProfile::PiecewiseConstant { values, .. } => {
                values.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            TimeProfile::Harmonic { offset, amplitude, .. } => offset - amplitude.abs(),
            _ => -self.negated().sampled_extremum(horizon, true),
        }
    }

    fn negated(&self) -> TimeProfile {
        let p = self.clone();
        TimeProfile::Sampler(Arc::new(move |t| -p.eval(t)))
    }

    fn sampled_extremum(&self, horizon: f64, _max: bool) -> f64 {
        let n = 4096;
        (0..=n)
            .map(|i| self.eval(horizon * i as f64 / n as f64))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-constant segment view over [0, horizon]: (a, b, value).
    pub fn segments(&self, horizon: f64) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            TimeProfile::Constant(v) => Some(vec![(0.0, horizon, *v)]),
            TimeProfile::PiecewiseConstant { jumps, values } => {
                let mut out = Vec::with_capacity(values.len());
                let mut a = 0.0;
                for (k, &j) in jumps.iter().enumerate() {
                    out.push((a, j, values[k]));
                    a = j;
                }
                out.push((a, horizon, values[values.len() - 1]));
                Some(out)
            }
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pc_eval_right_continuous() {
        let p = TimeProfile::pc(vec![0.5], vec![1.0, 2.0]);
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.49), 1.0);
        assert_eq!(p.eval(0.5), 2.0);
        assert_eq!(p.eval(0.9), 2.0);
        assert_eq!(p.sup(1.0), 2.0);
        assert_eq!(p.inf(1.0), 1.0);
    }

    #[test]
    fn segments_cover_horizon() {
        let p = TimeProfile::pc(vec![0.3, 0.7], vec![1.0, -1.0, 0.5]);
        let segs = p.segments(1.0).unwrap();
        assert_eq!(segs, vec![(0.0, 0.3, 1.0), (0.3, 0.7, -1.0), (0.7, 1.0, 0.5)]);
    }

    #[test]
    fn harmonic_bounds() {
        let p = TimeProfile::Harmonic { offset: 1.0, amplitude: 0.25, omega: 7.0, phase: 0.3 };
        assert_eq!(p.sup(2.0), 1.25);
        assert_eq!(p.inf(2.0), 0.75);
    }
}
