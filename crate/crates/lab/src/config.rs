//! Experiment configuration: JSON in, validated structures out.
//!
//! A config names an experiment kind, an operator (inline, file or preset),
//! the numerical parameters and a seed. Configs round-trip exactly through
//! JSON, and a fixed seed makes every CSV byte-identical across runs.

use crate::LabError;
use schauder_core::mollify::{MeasurableCoefficient, MeasurableOperator};
use schauder_core::operator::{
    CoeffRef, LyapunovSpec, OperatorSpec, SeparableCoeff, SumCoeff, TabulatedCoeff1D,
};
use schauder_core::poly::Poly;
use schauder_core::poly_example::{build_poly_example, build_poly_example_unchecked, PolyExampleSpec};
use schauder_core::profile::TimeProfile;
use schauder_core::solver::{Scheme, SolveParams, SpaceTimeFn, StorePlan};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CheckHypotheses,
    Solve,
    Smoothing,
    Schauder,
    MollifyStudy,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::CheckHypotheses => "check-hypotheses",
            ExperimentKind::Solve => "solve",
            ExperimentKind::Smoothing => "smoothing",
            ExperimentKind::Schauder => "schauder",
            ExperimentKind::MollifyStudy => "mollify-study",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorRef {
    Preset { preset: String },
    Path { path: String },
    Inline(OperatorJson),
}

/// Bounded time profile, JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant { value: f64 },
    PiecewiseConstant { jumps: Vec<f64>, values: Vec<f64> },
    Harmonic {
        offset: f64,
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    /// named bounded sampler rendered as a piecewise-constant profile at the
    /// given resolution
    Sampler { samples_per_unit: usize, name: String },
}

impl ProfileSpec {
    pub fn build(&self, horizon: f64) -> Result<TimeProfile, LabError> {
        Ok(match self {
            ProfileSpec::Constant { value } => TimeProfile::Constant(*value),
            ProfileSpec::PiecewiseConstant { jumps, values } => {
                if values.len() != jumps.len() + 1 {
                    return Err(LabError::Config(
                        "piecewise profile needs one value per segment".into(),
                    ));
                }
                if jumps.windows(2).any(|w| w[0] >= w[1])
                    || jumps.iter().any(|&j| j <= 0.0 || j >= horizon)
                {
                    return Err(LabError::Config(
                        "jumps must be strictly increasing inside (0, T)".into(),
                    ));
                }
                TimeProfile::pc(jumps.clone(), values.clone())
            }
            ProfileSpec::Harmonic { offset, amplitude, omega, phase } => TimeProfile::Harmonic {
                offset: *offset,
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
            },
            ProfileSpec::Sampler { samples_per_unit, name } => {
                let segs = ((*samples_per_unit as f64) * horizon).ceil() as usize;
                if segs < 2 {
                    return Err(LabError::Config("sampler needs at least 2 samples".into()));
                }
                let f: Box<dyn Fn(f64) -> f64> = match name.as_str() {
                    "square_wave" => Box::new(|t: f64| if (4.0 * t).fract() < 0.5 { 1.0 } else { -1.0 }),
                    "sawtooth" => Box::new(|t: f64| 2.0 * (2.0 * t).fract() - 1.0),
                    other => {
                        return Err(LabError::Config(format!("unknown sampler '{other}'")))
                    }
                };
                let jumps: Vec<f64> = (1..segs).map(|i| horizon * i as f64 / segs as f64).collect();
                let values: Vec<f64> = (0..segs)
                    .map(|i| f(horizon * (i as f64 + 0.5) / segs as f64))
                    .collect();
                TimeProfile::pc(jumps, values)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TabulatedField {
    pub t_samples: Vec<f64>,
    pub x_samples: Vec<f64>,
    /// values[time index][space index]
    pub values: Vec<Vec<f64>>,
}

impl TabulatedField {
    fn build(&self, order: usize) -> Result<CoeffRef, LabError> {
        if self.t_samples.len() < 2 || self.x_samples.len() < 4 {
            return Err(LabError::Config("tabulated field needs >= 2 time and >= 4 space samples".into()));
        }
        if self.values.len() != self.t_samples.len()
            || self.values.iter().any(|r| r.len() != self.x_samples.len())
        {
            return Err(LabError::Config("tabulated value shape mismatch".into()));
        }
        Ok(Arc::new(TabulatedCoeff1D {
            t0: self.t_samples[0],
            dt: self.t_samples[1] - self.t_samples[0],
            x0: self.x_samples[0],
            dx: self.x_samples[1] - self.x_samples[0],
            values: self.values.clone(),
            order,
        }))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorJson {
    Heat {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "T")]
        horizon: f64,
    },
    PolyExample {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "T")]
        horizon: f64,
        p: u32,
        q: u32,
        r: u32,
        #[serde(rename = "Q0")]
        q0: Vec<Vec<ProfileSpec>>,
        b0: ProfileSpec,
        c0: ProfileSpec,
        nu0: f64,
        #[serde(default)]
        measurable: bool,
        /// skip validation (deliberately broken study operators)
        #[serde(default)]
        unchecked: bool,
    },
    CustomTabulated {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "T")]
        horizon: f64,
        interpolation_order: usize,
        q: Vec<Vec<TabulatedField>>,
        b: Vec<TabulatedField>,
        c: TabulatedField,
        nu0: f64,
        c0: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
    TwoStageHeat {
        #[serde(rename = "N")]
        dim: usize,
        #[serde(rename = "T")]
        horizon: f64,
        q_before: f64,
        q_after: f64,
    },
}

impl OperatorJson {
    pub fn horizon(&self) -> f64 {
        match self {
            OperatorJson::Heat { horizon, .. }
            | OperatorJson::PolyExample { horizon, .. }
            | OperatorJson::CustomTabulated { horizon, .. }
            | OperatorJson::TwoStageHeat { horizon, .. } => *horizon,
        }
    }

    pub fn build(&self) -> Result<OperatorSpec, LabError> {
        match self {
            OperatorJson::Heat { dim, horizon } => Ok(OperatorSpec::heat(*dim, *horizon)),
            OperatorJson::PolyExample { .. } => {
                let spec = self.poly_spec()?;
                if matches!(self, OperatorJson::PolyExample { unchecked: true, .. }) {
                    Ok(build_poly_example_unchecked(&spec))
                } else {
                    build_poly_example(&spec).map_err(|e| LabError::Config(e.to_string()))
                }
            }
            OperatorJson::CustomTabulated {
                dim,
                horizon,
                interpolation_order,
                q,
                b,
                c,
                nu0,
                c0,
                lambda,
            } => {
                if *dim != 1 {
                    return Err(LabError::Config("tabulated operators are 1D".into()));
                }
                if !(*interpolation_order == 1 || *interpolation_order == 3) {
                    return Err(LabError::Config("interpolation order must be 1 or 3".into()));
                }
                let qq: Vec<Vec<CoeffRef>> = q
                    .iter()
                    .map(|row| row.iter().map(|f| f.build(*interpolation_order)).collect::<Result<_, _>>())
                    .collect::<Result<_, _>>()?;
                Ok(OperatorSpec {
                    dim: 1,
                    horizon: *horizon,
                    q: qq,
                    b: b.iter().map(|f| f.build(*interpolation_order)).collect::<Result<_, _>>()?,
                    c: c.build(*interpolation_order)?,
                    nu0: *nu0,
                    c0: *c0,
                    lyapunov: lambda.map(|l| LyapunovSpec { phi: Poly::weight(1, 1), lambda: l }),
                    poly_meta: None,
                    label: "custom_tabulated".into(),
                })
            }
            OperatorJson::TwoStageHeat { dim, horizon, q_before, q_after } => {
                if *dim != 1 {
                    return Err(LabError::Config("the two-stage heat preset is 1D".into()));
                }
                Ok(MeasurableOperator::two_stage_heat(*horizon, *q_before, *q_after)
                    .sharp_operator())
            }
        }
    }

    fn poly_spec(&self) -> Result<PolyExampleSpec, LabError> {
        let OperatorJson::PolyExample {
            dim,
            horizon,
            p,
            q,
            r,
            q0,
            b0,
            c0,
            nu0,
            measurable,
            ..
        } = self
        else {
            return Err(LabError::Config("not a polynomial-growth operator".into()));
        };
        if q0.len() != *dim || q0.iter().any(|row| row.len() != *dim) {
            return Err(LabError::Config("Q0 must be an N x N profile matrix".into()));
        }
        let q0_profiles: Vec<Vec<TimeProfile>> = q0
            .iter()
            .map(|row| row.iter().map(|s| s.build(*horizon)).collect::<Result<_, _>>())
            .collect::<Result<_, _>>()?;
        Ok(PolyExampleSpec {
            dim: *dim,
            horizon: *horizon,
            p: *p,
            q: *q,
            r: *r,
            q0: q0_profiles,
            b0: b0.build(*horizon)?,
            c0: c0.build(*horizon)?,
            nu0: *nu0,
            measurable: *measurable,
        })
    }

    /// Measurable view: profiles + polynomial spatial parts, for the
    /// mollification study. Available for the two-stage and polynomial
    /// families.
    pub fn build_measurable(&self) -> Result<MeasurableOperator, LabError> {
        match self {
            OperatorJson::TwoStageHeat { horizon, q_before, q_after, .. } => {
                Ok(MeasurableOperator::two_stage_heat(*horizon, *q_before, *q_after))
            }
            OperatorJson::PolyExample { .. } => {
                let spec = self.poly_spec()?;
                let op = if matches!(self, OperatorJson::PolyExample { unchecked: true, .. }) {
                    build_poly_example_unchecked(&spec)
                } else {
                    build_poly_example(&spec).map_err(|e| LabError::Config(e.to_string()))?
                };
                let dim = spec.dim;
                let wp = Poly::weight(dim, spec.p);
                let wq = Poly::weight(dim, spec.q);
                let q = (0..dim)
                    .map(|i| {
                        (0..dim)
                            .map(|j| {
                                MeasurableCoefficient::separable(spec.q0[i][j].clone(), wp.clone())
                            })
                            .collect()
                    })
                    .collect();
                let b = (0..dim)
                    .map(|j| {
                        MeasurableCoefficient::separable(
                            spec.b0.clone(),
                            Poly::var(dim, j).mul(&wq),
                        )
                    })
                    .collect();
                let c = MeasurableCoefficient {
                    terms: vec![
                        (spec.c0.clone(), Poly::constant(dim, 1.0)),
                        (TimeProfile::Constant(-1.0), Poly::radial_even(dim, spec.r)),
                    ],
                };
                Ok(MeasurableOperator {
                    dim,
                    horizon: spec.horizon,
                    q,
                    b,
                    c,
                    nu0: op.nu0,
                    c0: op.c0,
                    lyapunov: op.lyapunov.clone(),
                    label: op.label.clone(),
                })
            }
            _ => Err(LabError::Config(
                "mollification studies need a measurable operator family".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatumSpec {
    Zero,
    Constant { value: f64 },
    /// exp(-|x|^2)
    Gaussian,
    NegativeGaussian,
    Tanh { k: f64 },
    Sin { freq: f64 },
    /// compactly supported bump (1 - |x|^2)^3 on the unit ball
    Bump,
    /// integral of tanh(m sin(k x)) / k: a bounded function whose derivative
    /// is step-like (the C^1 representative)
    StepWaveIntegral { k: f64, m: f64 },
}

impl DatumSpec {
    pub fn build(&self) -> Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> {
        match self {
            DatumSpec::Zero => Arc::new(|_x: &[f64]| 0.0),
            DatumSpec::Constant { value } => {
                let v = *value;
                Arc::new(move |_x: &[f64]| v)
            }
            DatumSpec::Gaussian => Arc::new(|x: &[f64]| {
                (-x.iter().map(|v| v * v).sum::<f64>()).exp()
            }),
            DatumSpec::NegativeGaussian => Arc::new(|x: &[f64]| {
                -(-x.iter().map(|v| v * v).sum::<f64>()).exp()
            }),
            DatumSpec::Tanh { k } => {
                let k = *k;
                Arc::new(move |x: &[f64]| (k * x[0]).tanh())
            }
            DatumSpec::Sin { freq } => {
                let w = *freq;
                Arc::new(move |x: &[f64]| (w * x[0]).sin())
            }
            DatumSpec::Bump => Arc::new(|x: &[f64]| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                if r2 < 1.0 {
                    (1.0 - r2).powi(3)
                } else {
                    0.0
                }
            }),
            DatumSpec::StepWaveIntegral { k, m } => {
                let (k, m) = (*k, *m);
                Arc::new(move |x: &[f64]| {
                    // Simpson for int_0^{kx} tanh(m sin s) ds, scaled by 1/k
                    let y = k * x[0];
                    let n = ((y.abs() * 200.0).ceil() as usize).max(2);
                    let n = n + n % 2;
                    let h = y / n as f64;
                    let g = |s: f64| (m * s.sin()).tanh();
                    let mut acc = g(0.0) + g(y);
                    for i in 1..n {
                        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
                    }
                    acc * h / 3.0 / k
                })
            }
        }
    }

    /// Nonnegative everywhere (enables the monotonicity defect check).
    pub fn nonnegative(&self) -> bool {
        matches!(
            self,
            DatumSpec::Zero | DatumSpec::Gaussian | DatumSpec::Bump
        ) || matches!(self, DatumSpec::Constant { value } if *value >= 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    None,
    Constant { value: f64 },
    /// sin(x) e^{-t}
    SinDecay,
    /// measurable source: profile(t) * exp(-|x|^2)
    ProfileGaussian { profile: ProfileSpec },
}

impl SourceSpec {
    pub fn build(&self, horizon: f64) -> Result<Option<SpaceTimeFn>, LabError> {
        Ok(match self {
            SourceSpec::None => None,
            SourceSpec::Constant { value } => {
                let v = *value;
                Some(Arc::new(move |_t: f64, _x: &[f64]| v))
            }
            SourceSpec::SinDecay => {
                Some(Arc::new(|t: f64, x: &[f64]| x[0].sin() * (-t).exp()))
            }
            SourceSpec::ProfileGaussian { profile } => {
                let p = profile.build(horizon)?;
                Some(Arc::new(move |t: f64, x: &[f64]| {
                    p.eval(t) * (-x.iter().map(|v| v * v).sum::<f64>()).exp()
                }))
            }
        })
    }

    /// Measurable view for mollification studies.
    pub fn build_measurable(&self, horizon: f64) -> Result<Option<MeasurableCoefficient>, LabError> {
        Ok(match self {
            SourceSpec::None => None,
            SourceSpec::Constant { value } => {
                Some(MeasurableCoefficient::constant(1, *value))
            }
            SourceSpec::ProfileGaussian { profile } => {
                let _ = profile.build(horizon)?;
                return Err(LabError::Config(
                    "gaussian-profile sources are not polynomial; use constant sources in mollify studies".into(),
                ));
            }
            SourceSpec::SinDecay => {
                return Err(LabError::Config(
                    "sin-decay sources are not measurable-separable; use constant sources".into(),
                ))
            }
        })
    }
}

fn default_pairs() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub h: f64,
    pub tau: f64,
    pub scheme: String,
    pub radius_ladder: Vec<f64>,
    pub tol: f64,
    pub theta: f64,
    /// (alpha, beta) pairs for smoothing runs
    pub pairs: Vec<(f64, f64)>,
    /// t - s offsets; empty means the geometric default ladder
    pub time_ladder: Vec<f64>,
    pub ladder_lo: u32,
    pub ladder_hi: u32,
    pub n_ladder: Vec<f64>,
    pub r_eval: f64,
    pub pair_cap: usize,
    pub datum: DatumSpec,
    pub source: SourceSpec,
    pub quad_nodes: usize,
    pub solve_budget: usize,
    pub box_radius: f64,
    pub t_samples: usize,
    pub x_samples: usize,
    pub refine_check: bool,
    pub exponent_tol: f64,
    pub exponent_tol_top: f64,
    pub store_every: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            h: 1.0 / 64.0,
            tau: 1e-3,
            scheme: "backward_euler".into(),
            radius_ladder: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            tol: 1e-4,
            theta: 0.5,
            pairs: default_pairs(),
            time_ladder: Vec::new(),
            ladder_lo: 5,
            ladder_hi: 11,
            n_ladder: vec![4.0, 16.0, 64.0, 256.0],
            r_eval: 2.0,
            pair_cap: 30_000,
            datum: DatumSpec::Gaussian,
            source: SourceSpec::None,
            quad_nodes: 16,
            solve_budget: 256,
            box_radius: 8.0,
            t_samples: 17,
            x_samples: 65,
            refine_check: false,
            exponent_tol: 0.15,
            exponent_tol_top: 0.25,
            store_every: 0,
        }
    }
}

impl Params {
    pub fn scheme(&self) -> Result<Scheme, LabError> {
        match self.scheme.as_str() {
            "backward_euler" => Ok(Scheme::BackwardEuler),
            "crank_nicolson" => Ok(Scheme::CrankNicolson),
            other => Err(LabError::Config(format!("unknown scheme '{other}'"))),
        }
    }

    pub fn solve_params(&self) -> Result<SolveParams, LabError> {
        let mut sp = SolveParams::new(self.h, self.tau).with_scheme(self.scheme()?);
        if self.store_every > 0 {
            sp = sp.with_store(StorePlan::Every(self.store_every));
        }
        Ok(sp)
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.h <= 0.0 || self.tau <= 0.0 {
            return Err(LabError::Config("h and tau must be positive".into()));
        }
        if self.radius_ladder.is_empty()
            || self.radius_ladder.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(LabError::Config("radius ladder must be strictly increasing".into()));
        }
        if !(0.0 < self.theta && self.theta < 1.0) {
            return Err(LabError::Config("theta must lie in (0, 1)".into()));
        }
        self.scheme().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub operator: OperatorRef,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<ExperimentConfig, LabError> {
        let config: ExperimentConfig =
            serde_json::from_str(s).map_err(|e| LabError::Config(e.to_string()))?;
        config.params.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve the operator reference to its inline JSON form.
    pub fn operator_json(&self) -> Result<OperatorJson, LabError> {
        match &self.operator {
            OperatorRef::Inline(op) => Ok(op.clone()),
            OperatorRef::Preset { preset } => crate::presets::operator(preset),
            OperatorRef::Path { path } => {
                let s = std::fs::read_to_string(path)
                    .map_err(|e| LabError::Config(format!("operator file {path}: {e}")))?;
                serde_json::from_str(&s).map_err(|e| LabError::Config(e.to_string()))
            }
        }
    }
}

/// Sum-of-separable coefficients as a plain operator coefficient (used when a
/// measurable operator is stepped directly).
pub fn separable_sum(terms: Vec<(TimeProfile, Poly)>) -> CoeffRef {
    Arc::new(SumCoeff(
        terms.into_iter().map(|(p, s)| SeparableCoeff::new(p, s)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_roundtrip() {
        let json = r#"{
            "kind": "smoothing",
            "operator": {"preset": "heat-1d"},
            "params": {"pairs": [[0.0, 1.0], [0.0, 2.0]], "h": 0.0078125, "refine_check": true},
            "seed": 42
        }"#;
        let c = ExperimentConfig::from_json(json).unwrap();
        let c2 = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn rejects_unknown_fields() {
        let json = r#"{"kind": "solve", "operator": {"preset": "heat-1d"}, "bogus": 1}"#;
        assert!(ExperimentConfig::from_json(json).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        let json = r#"{"kind": "solve", "operator": {"preset": "heat-1d"}, "params": {"theta": 1.5}}"#;
        assert!(ExperimentConfig::from_json(json).is_err());
    }

    #[test]
    fn inline_operator_builds() {
        let json = r#"{
            "kind": "check-hypotheses",
            "operator": {
                "family": "poly_example", "N": 1, "T": 1.0,
                "p": 0, "q": 0, "r": 0,
                "Q0": [[{"profile": "constant", "value": 1.0}]],
                "b0": {"profile": "constant", "value": -1.0},
                "c0": {"profile": "constant", "value": 0.0},
                "nu0": 1.0
            }
        }"#;
        let c = ExperimentConfig::from_json(json).unwrap();
        let op = c.operator_json().unwrap().build().unwrap();
        assert_eq!(op.dim, 1);
        assert!((op.b[0].eval(0.0, &[2.0]) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn tabulated_operator_interpolates() {
        // q(t, x) = 1 + x^2 / 100 tabulated; cubic interpolation reproduces it
        let xs: Vec<f64> = (0..81).map(|i| -4.0 + 0.1 * i as f64).collect();
        let ts = vec![0.0, 0.5, 1.0];
        let values: Vec<Vec<f64>> = ts
            .iter()
            .map(|_| xs.iter().map(|x| 1.0 + x * x / 100.0).collect())
            .collect();
        let field = TabulatedField { t_samples: ts.clone(), x_samples: xs.clone(), values };
        let op = OperatorJson::CustomTabulated {
            dim: 1,
            horizon: 1.0,
            interpolation_order: 3,
            q: vec![vec![field.clone()]],
            b: vec![TabulatedField {
                t_samples: ts.clone(),
                x_samples: xs.clone(),
                values: ts.iter().map(|_| xs.iter().map(|_| 0.0).collect()).collect(),
            }],
            c: TabulatedField {
                t_samples: ts.clone(),
                x_samples: xs.clone(),
                values: ts.iter().map(|_| xs.iter().map(|_| 0.0).collect()).collect(),
            },
            nu0: 1.0,
            c0: 0.0,
            lambda: Some(1.0),
        };
        let spec = op.build().unwrap();
        let v = spec.q[0][0].eval(0.25, &[0.33]);
        assert!((v - (1.0 + 0.33 * 0.33 / 100.0)).abs() < 1e-6, "{v}");
    }

    #[test]
    fn sampler_profile_renders_piecewise() {
        let spec = ProfileSpec::Sampler { samples_per_unit: 16, name: "square_wave".into() };
        let p = spec.build(1.0).unwrap();
        assert_eq!(p.jump_times().len(), 15);
        assert!(p.sup(1.0) <= 1.0 && p.inf(1.0) >= -1.0);
    }
}
