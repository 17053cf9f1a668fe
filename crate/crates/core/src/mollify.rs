//! Gaussian time-mollification of measurable coefficients:
//!   h^(n)(t) = (n / 4 pi)^{1/2} int_0^T h(tau) exp(-n |t - tau|^2 / 4) d tau.
//! Piecewise-constant profiles get exact error-function antiderivatives
//! (bit-stable); everything else composite Simpson with at least ten nodes
//! per kernel width. The mollified ellipticity function keeps the uniform
//! floor (nu_0 / (2 sqrt pi)) int_0^{T/2} e^{-s^2/4} ds = (nu_0/2) erf(T/4),
//! and the whole hypothesis system survives with the same constants.

use crate::error::{Error, Result};

use crate::operator::{CoeffRef, LyapunovSpec, OperatorSpec, SeparableCoeff, SumCoeff};
use crate::par;
use crate::poly::Poly;
use crate::profile::TimeProfile;
use crate::forced::{integral_identity_residual, solve_forced, ForcedProblem, SpatialFn};
use crate::solver::{SolveParams, Trajectory};
use crate::stencil::derivative;
use crate::util::{erf, multi_indices};
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Mass of the truncated kernel at time t: 1/2 (erf((T-t) k) + erf(t k)),
/// k = sqrt(n)/2. At most 1; about 1/2 at the endpoints.
pub fn kernel_mass(horizon: f64, n: f64, t: f64) -> f64 {
    let k = n.sqrt() / 2.0;
    0.5 * (erf((horizon - t) * k) + erf(t * k))
}

/// Uniform lower bound for the mollified ellipticity function:
/// (nu0 / (2 sqrt pi)) int_0^{T/2} e^{-s^2/4} ds = (nu0 / 2) erf(T / 4).
pub fn nu_floor(nu0: f64, horizon: f64) -> f64 {
    0.5 * nu0 * erf(horizon / 4.0)
}

/// Mollified value of a bounded time profile at time t.
pub fn mollify_value(p: &TimeProfile, horizon: f64, n: f64, t: f64) -> f64 {
    debug_assert!(n >= 1.0);
    match p.segments(horizon) {
        Some(segs) => {
            let k = n.sqrt() / 2.0;
            let mut acc = 0.0;
            for (a, b, v) in segs {
                acc += v * 0.5 * (erf((b - t) * k) - erf((a - t) * k));
            }
            acc
        }
        None => {
            // composite Simpson, step at most (4/n)^{1/2} / 10
            let step_cap = (4.0 / n).sqrt() / 10.0;
            let m = ((horizon / step_cap).ceil() as usize).max(64);
            let m = m + m % 2;
            let h = horizon / m as f64;
            let kern = |tau: f64| p.eval(tau) * (-n * (t - tau) * (t - tau) / 4.0).exp();
            let mut acc = kern(0.0) + kern(horizon);
            for i in 1..m {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * kern(i as f64 * h);
            }
            acc * h / 3.0 * (n / (4.0 * PI)).sqrt()
        }
    }
}

/// Tabulated mollified profile for fast repeated evaluation by the stepper;
/// 4096 exact samples, linear interpolation (error well below 1e-5).
pub fn mollify_profile(p: &TimeProfile, horizon: f64, n: f64) -> TimeProfile {
    let m = 4096usize;
    let dt = horizon / m as f64;
    let values: Vec<f64> = par::map_collect(m + 1, |i| {
        mollify_value(p, horizon, n, i as f64 * dt)
    });
    TimeProfile::Tabulated { t0: 0.0, dt, values: Arc::new(values) }
}

/// int_0^t h^(n)(sigma) d sigma for piecewise-constant h, in closed form via
/// E(z) = z erf(z) + e^{-z^2} / sqrt(pi).
pub fn integral_of_mollified(p: &TimeProfile, horizon: f64, n: f64, t: f64) -> Result<f64> {
    let segs = p
        .segments(horizon)
        .ok_or_else(|| Error::InvalidParameter("closed-form integral needs a piecewise-constant profile".into()))?;
    let k = n.sqrt() / 2.0;
    let e = |z: f64| z * erf(z) + (-z * z).exp() / PI.sqrt();
    let mut acc = 0.0;
    for (a, b, v) in segs {
        acc += v * 0.5 / k * (e(k * b) - e(k * (b - t)) - (e(k * a) - e(k * (a - t))));
    }
    Ok(acc)
}

/// One measurable coefficient: a sum of (time profile) x (polynomial) terms.
#[derive(Clone, Debug)]
pub struct MeasurableCoefficient {
    pub terms: Vec<(TimeProfile, Poly)>,
}

impl MeasurableCoefficient {
    pub fn separable(profile: TimeProfile, space: Poly) -> Self {
        MeasurableCoefficient { terms: vec![(profile, space)] }
    }

    pub fn constant(dim: usize, v: f64) -> Self {
        Self::separable(TimeProfile::Constant(v), Poly::constant(dim, 1.0))
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.terms.iter().map(|(p, s)| p.eval(t) * s.eval(x)).sum()
    }

    pub fn jump_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.terms.iter().flat_map(|(p, _)| p.jump_times()).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    fn sharp(&self) -> CoeffRef {
        Arc::new(SumCoeff(
            self.terms
                .iter()
                .map(|(p, s)| SeparableCoeff::new(p.clone(), s.clone()))
                .collect(),
        ))
    }

    fn mollified(&self, horizon: f64, n: f64) -> CoeffRef {
        Arc::new(SumCoeff(
            self.terms
                .iter()
                .map(|(p, s)| SeparableCoeff::new(mollify_profile(p, horizon, n), s.clone()))
                .collect(),
        ))
    }
}

/// Operator with time-measurable coefficients: the negligible-set bookkeeping
/// is the explicit jump-time list.
#[derive(Clone, Debug)]
pub struct MeasurableOperator {
    pub dim: usize,
    pub horizon: f64,
    pub q: Vec<Vec<MeasurableCoefficient>>,
    pub b: Vec<MeasurableCoefficient>,
    pub c: MeasurableCoefficient,
    pub nu0: f64,
    pub c0: f64,
    pub lyapunov: Option<LyapunovSpec>,
    pub label: String,
}

impl MeasurableOperator {
    /// 1D heat flow whose diffusion jumps from `q_before` to `q_after` at T/2.
    pub fn two_stage_heat(horizon: f64, q_before: f64, q_after: f64) -> MeasurableOperator {
        let profile = TimeProfile::pc(vec![horizon / 2.0], vec![q_before, q_after]);
        MeasurableOperator {
            dim: 1,
            horizon,
            q: vec![vec![MeasurableCoefficient::separable(profile, Poly::constant(1, 1.0))]],
            b: vec![MeasurableCoefficient::constant(1, 0.0)],
            c: MeasurableCoefficient::constant(1, 0.0),
            nu0: q_before.min(q_after),
            c0: 0.0,
            lyapunov: Some(LyapunovSpec { phi: Poly::weight(1, 1), lambda: 1.0 }),
            label: "two-stage-heat".into(),
        }
    }

    pub fn jump_times(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for row in &self.q {
            for c in row {
                out.extend(c.jump_times());
            }
        }
        for b in &self.b {
            out.extend(b.jump_times());
        }
        out.extend(self.c.jump_times());
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        out
    }

    /// Step the measurable coefficients directly (sampled at step times).
    pub fn sharp_operator(&self) -> OperatorSpec {
        OperatorSpec {
            dim: self.dim,
            horizon: self.horizon,
            q: self
                .q
                .iter()
                .map(|row| row.iter().map(|c| c.sharp()).collect())
                .collect(),
            b: self.b.iter().map(|c| c.sharp()).collect(),
            c: self.c.sharp(),
            nu0: self.nu0,
            c0: self.c0,
            lyapunov: self.lyapunov.clone(),
            poly_meta: None,
            label: format!("{} (sharp)", self.label),
        }
    }

    /// The tight ellipticity profile t -> lambda_min Q(t, x) at fixed x, as a
    /// piecewise-constant profile when every diffusion profile is one.
    fn pointwise_profile(&self, field: ProfileField, x: &[f64]) -> TimeProfile {
        let jumps = self.jump_times();
        let sharp = self.sharp_operator();
        let evals: Vec<f64> = {
            // one value per segment, sampled at the midpoint
            let mut bounds = vec![0.0];
            bounds.extend(jumps.iter().cloned());
            bounds.push(self.horizon);
            bounds
                .windows(2)
                .map(|w| {
                    let t = 0.5 * (w[0] + w[1]);
                    field.eval(&sharp, t, x)
                })
                .collect()
        };
        let smooth_in_t = self.q.iter().flatten().chain(self.b.iter()).chain(std::iter::once(&self.c)).all(
            |c| {
                c.terms.iter().all(|(p, _)| {
                    matches!(p, TimeProfile::Constant(_) | TimeProfile::PiecewiseConstant { .. })
                })
            },
        );
        if smooth_in_t {
            if jumps.is_empty() {
                TimeProfile::Constant(evals[0])
            } else {
                TimeProfile::pc(jumps, evals)
            }
        } else {
            let sharp = Arc::new(sharp);
            let x = x.to_vec();
            TimeProfile::Sampler(Arc::new(move |t| field.eval(&sharp, t, &x)))
        }
    }
}

#[derive(Clone, Copy)]
enum ProfileField {
    Nu,
    Dissipativity,
    DriftDerivs,
    PotentialDerivs,
    PotentialDerivsSquared,
}

impl ProfileField {
    fn eval(self, op: &OperatorSpec, t: f64, x: &[f64]) -> f64 {
        match self {
            ProfileField::Nu => op.nu(t, x),
            ProfileField::Dissipativity => op.dissipativity_bound(t, x),
            ProfileField::DriftDerivs => op.tight_r(t, x),
            ProfileField::PotentialDerivs => op.tight_rho(t, x),
            ProfileField::PotentialDerivsSquared => op.tight_rho(t, x).powi(2),
        }
    }
}

/// The derived time-smooth operator together with the mollified structural
/// functions nu_n, d_n, r_n, rho_n.
pub struct MollifiedOperator {
    pub n: f64,
    pub op: Arc<OperatorSpec>,
    pub quadrature: String,
    source: MeasurableOperator,
}

impl MollifiedOperator {
    pub fn nu_n(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.source.pointwise_profile(ProfileField::Nu, x);
        mollify_value(&p, self.source.horizon, self.n, t)
    }
    pub fn d_n(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.source.pointwise_profile(ProfileField::Dissipativity, x);
        mollify_value(&p, self.source.horizon, self.n, t)
    }
    pub fn r_n(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.source.pointwise_profile(ProfileField::DriftDerivs, x);
        mollify_value(&p, self.source.horizon, self.n, t)
    }
    pub fn rho_n(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.source.pointwise_profile(ProfileField::PotentialDerivs, x);
        mollify_value(&p, self.source.horizon, self.n, t)
    }
    pub fn rho_sq_mollified(&self, t: f64, x: &[f64]) -> f64 {
        let p = self.source.pointwise_profile(ProfileField::PotentialDerivsSquared, x);
        mollify_value(&p, self.source.horizon, self.n, t)
    }
    pub fn nu_floor(&self) -> f64 {
        nu_floor(self.source.nu0, self.source.horizon)
    }
}

/// Mollify every coefficient with the same time kernel (mollification
/// commutes with spatial differentiation since the kernel is time-only).
pub fn build_mollified_operator(mop: &MeasurableOperator, n: f64) -> Result<MollifiedOperator> {
    if n < 1.0 {
        return Err(Error::InvalidParameter("mollification index must be >= 1".into()));
    }
    let horizon = mop.horizon;
    let q = mop
        .q
        .iter()
        .map(|row| row.iter().map(|c| c.mollified(horizon, n)).collect())
        .collect();
    let b = mop.b.iter().map(|c| c.mollified(horizon, n)).collect();
    let c = mop.c.mollified(horizon, n);
    let min_mass = 0.5 * erf(horizon * n.sqrt() / 2.0);
    let c0_hat = if mop.c0 >= 0.0 { mop.c0 } else { mop.c0 * min_mass };
    let op = OperatorSpec {
        dim: mop.dim,
        horizon,
        q,
        b,
        c,
        nu0: nu_floor(mop.nu0, horizon),
        c0: c0_hat,
        lyapunov: mop.lyapunov.clone(),
        poly_meta: None,
        label: format!("{} (mollified n={n})", mop.label),
    };
    Ok(MollifiedOperator {
        n,
        op: Arc::new(op),
        quadrature: "erf antiderivatives for piecewise-constant profiles, Simpson otherwise".into(),
        source: mop.clone(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationRecord {
    pub n: f64,
    /// worst violation of d_n + L1 r_n + L2 mollify(rho^2) <= L3 nu_n
    pub compat_margin: f64,
    /// worst violation of (rho^(n))^2 <= mollify(rho^2)
    pub jensen_margin: f64,
    pub witness: Option<(f64, Vec<f64>)>,
    pub pass: bool,
}

/// Verify that the compatibility inequality survives mollification with the
/// same constants, and the squared-mollification direction of the Holder
/// inequality, on a sample grid.
pub fn hypothesis_preservation_check(
    mop: &MeasurableOperator,
    n_ladder: &[f64],
    l: (f64, f64, f64),
    box_radius: f64,
    samples: usize,
) -> Result<Vec<PreservationRecord>> {
    let (l1, l2, l3) = l;
    let mut out = Vec::new();
    for &n in n_ladder {
        let m = build_mollified_operator(mop, n)?;
        let mut compat = f64::NEG_INFINITY;
        let mut jensen = f64::NEG_INFINITY;
        let mut witness = None;
        for it in 0..samples {
            let t = mop.horizon * it as f64 / (samples - 1) as f64;
            for ix in 0..samples {
                let x = vec![-box_radius + 2.0 * box_radius * ix as f64 / (samples - 1) as f64];
                let lhs = m.d_n(t, &x) + l1 * m.r_n(t, &x) + l2 * m.rho_sq_mollified(t, &x);
                let slack = lhs - l3 * m.nu_n(t, &x);
                if slack > compat {
                    compat = slack;
                    witness = Some((t, x.clone()));
                }
                let j = m.rho_n(t, &x).powi(2) - m.rho_sq_mollified(t, &x);
                jensen = jensen.max(j);
            }
        }
        out.push(PreservationRecord {
            n,
            compat_margin: compat,
            jensen_margin: jensen,
            witness,
            pass: compat <= 1e-9 && jensen <= 1e-10,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderIncrement {
    pub n_from: f64,
    pub n_to: f64,
    pub sup: f64,
    pub grad: f64,
    pub hess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscontinuousReport {
    pub ladder: Vec<f64>,
    pub increments: Vec<LadderIncrement>,
    pub residual: f64,
    pub converged: bool,
    pub final_n: f64,
}

pub struct DiscontinuousParams {
    pub theta: f64,
    pub radii: Vec<f64>,
    pub ladder_tol: f64,
    pub r_eval: f64,
    pub solve: SolveParams,
    pub pair_cap: usize,
    pub seed: u64,
}

/// Approximation scheme for time-measurable coefficients: solve the smooth
/// problem for each mollification index, track the C^0/C^1/C^2 Cauchy
/// increments on the metering region, and check the integral identity of the
/// final trajectory against its own (smooth) operator, excluding frames at
/// the source jump times. `tol > 0` stops the ladder once the increments
/// fall below it.
pub fn solve_discontinuous(
    mop: &MeasurableOperator,
    f: SpatialFn,
    g: Option<MeasurableCoefficient>,
    n_ladder: &[f64],
    tol: f64,
    params: &DiscontinuousParams,
) -> Result<(Trajectory, DiscontinuousReport)> {
    if n_ladder.is_empty() {
        return Err(Error::InvalidParameter("mollification ladder empty".into()));
    }
    let mut prev: Option<(f64, Trajectory)> = None;
    let mut increments = Vec::new();
    let mut last: Option<(f64, Trajectory, Arc<OperatorSpec>, Option<crate::solver::SpaceTimeFn>)> =
        None;
    for (i, &n) in n_ladder.iter().enumerate() {
        let m = build_mollified_operator(mop, n)?;
        let g_n: Option<crate::solver::SpaceTimeFn> = g.as_ref().map(|gc| {
            let mollified: Vec<(TimeProfile, Poly)> = gc
                .terms
                .iter()
                .map(|(p, s)| (mollify_profile(p, mop.horizon, n), s.clone()))
                .collect();
            let f: crate::solver::SpaceTimeFn = Arc::new(move |t: f64, x: &[f64]| {
                mollified.iter().map(|(p, s)| p.eval(t) * s.eval(x)).sum()
            });
            f
        });
        let fp = ForcedProblem::new(
            m.op.clone(),
            f.clone(),
            g_n.clone(),
            params.theta,
            params.radii.clone(),
            params.ladder_tol,
            params.r_eval,
            params.solve.clone(),
            params.pair_cap,
            params.seed,
        )?;
        let (traj, _) = solve_forced(&fp)?;
        if let Some((pn, ptraj)) = &prev {
            let inc = trajectory_increment(ptraj, &traj, params.r_eval)?;
            increments.push(LadderIncrement {
                n_from: *pn,
                n_to: n,
                sup: inc.0,
                grad: inc.1,
                hess: inc.2,
            });
        }
        let done = tol > 0.0
            && increments
                .last()
                .is_some_and(|inc: &LadderIncrement| inc.sup.max(inc.grad).max(inc.hess) <= tol);
        last = Some((n, traj, m.op.clone(), g_n));
        if done || i == n_ladder.len() - 1 {
            break;
        }
        let (_, t, _, _) = last.as_ref().unwrap();
        prev = Some((n, t.clone()));
    }
    let (final_n, traj, op_n, g_n) = last.unwrap();
    let residual = integral_identity_residual(
        &traj,
        &op_n,
        g_n.as_ref(),
        params.r_eval,
        &mop.jump_times(),
    )?
    .residual;
    let converged = tol <= 0.0
        || increments
            .last()
            .is_some_and(|inc| inc.sup.max(inc.grad).max(inc.hess) <= tol);
    Ok((
        traj,
        DiscontinuousReport {
            ladder: n_ladder.to_vec(),
            increments,
            residual,
            converged,
            final_n,
        },
    ))
}

/// sup of value, gradient and Hessian differences on the metering region,
/// over common frames.
fn trajectory_increment(a: &Trajectory, b: &Trajectory, r_eval: f64) -> Result<(f64, f64, f64)> {
    if a.frames.len() != b.frames.len() {
        return Err(Error::DimensionMismatch("trajectories store different frames".into()));
    }
    let dim = a.mesh.dim;
    let mut sup = 0.0f64;
    let mut grad = 0.0f64;
    let mut hess = 0.0f64;
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        let diff = fa.axpy(-1.0, fb);
        for flat in diff.mesh.indices_within(r_eval) {
            sup = sup.max(diff.values[flat].abs());
        }
        for beta in multi_indices(dim, 1) {
            let d = derivative(&diff, &beta)?;
            for flat in d.mesh.indices_within(r_eval.min(d.usable_radius())) {
                grad = grad.max(d.values[flat].abs());
            }
        }
        for beta in multi_indices(dim, 2) {
            let d = derivative(&diff, &beta)?;
            for flat in d.mesh.indices_within(r_eval.min(d.usable_radius())) {
                hess = hess.max(d.values[flat].abs());
            }
        }
    }
    Ok((sup, grad, hess))
}

/// Exact solution of the 1D heat flow with time-dependent scalar diffusion
/// q(t) started from exp(-x^2): Gaussian with width w(t) = 1/4 + int_0^t q.
pub fn gaussian_through_profile(w_added: f64, x: f64) -> f64 {
    crate::oracle::gaussian_with_variance(0.25, w_added, x)
}
