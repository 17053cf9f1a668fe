//! Smoothing measurements: C^beta norms of G(t, s) f along a time ladder with
//! a power-law fit of the blow-up rate, and the weighted derivative functional
//!   v = |u|^2 + a dt eta^2 |Du|^2 + a^2 dt^2 eta^4 |D^2 u|^2 + a^3 dt^3 eta^6 |D^3 u|^2
//! monitored against its exponential bound with rate 2 c0 + T (1 + T + T^2).

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Mesh};
use crate::holder::fractional_norm;
use crate::operator::OperatorSpec;
use crate::par;
use crate::solver::{
    expanding_ball_solve, solve_dirichlet, DirichletProblem, SolveParams, StorePlan,
};
use crate::stencil::derivative;
use crate::util::{linear_fit, multi_indices, multiplicity, norm2};
use serde::Serialize;
use std::sync::Arc;

/// Radial cutoff eta(x) = psi(|x| / n): one inside B(0, n/2), zero outside
/// B(0, n), a seventh-order smoothstep in between so derivatives through
/// third order exist and are continuous. Derivatives are computed through
/// the composition with u = |x|^2, which is smooth across the origin.
#[derive(Clone, Copy, Debug)]
pub struct Cutoff {
    pub n: f64,
}

fn smoothstep7(t: f64) -> (f64, f64, f64, f64) {
    // s with s(0)=0, s(1)=1 and three vanishing derivatives at both ends
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let s = 35.0 * t4 - 84.0 * t4 * t + 70.0 * t4 * t2 - 20.0 * t4 * t3;
    let s1 = 140.0 * t3 - 420.0 * t4 + 420.0 * t4 * t - 140.0 * t4 * t2;
    let s2 = 420.0 * t2 - 1680.0 * t3 + 2100.0 * t4 - 840.0 * t4 * t;
    let s3 = 840.0 * t - 5040.0 * t2 + 8400.0 * t3 - 4200.0 * t4;
    (s, s1, s2, s3)
}

impl Cutoff {
    /// psi and derivatives in the radial variable rho = |x| / n.
    fn psi(self, rho: f64) -> (f64, f64, f64, f64) {
        if rho <= 0.5 {
            (1.0, 0.0, 0.0, 0.0)
        } else if rho >= 1.0 {
            (0.0, 0.0, 0.0, 0.0)
        } else {
            let t = 2.0 * rho - 1.0;
            let (s, s1, s2, s3) = smoothstep7(t);
            (1.0 - s, -2.0 * s1, -4.0 * s2, -8.0 * s3)
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.psi(norm2(x) / self.n).0
    }

    /// Psi(u) = psi(sqrt(u)/n) and derivatives in u = |x|^2.
    fn cap_psi(self, u: f64) -> (f64, f64, f64, f64) {
        let rho = u.sqrt() / self.n;
        let (p0, p1, p2, p3) = self.psi(rho);
        if p1 == 0.0 && p2 == 0.0 && p3 == 0.0 {
            return (p0, 0.0, 0.0, 0.0);
        }
        let su = u.sqrt();
        let g1 = 1.0 / (2.0 * self.n * su);
        let g2 = -1.0 / (4.0 * self.n * su * u);
        let g3 = 3.0 / (8.0 * self.n * su * u * u);
        let c1 = p1 * g1;
        let c2 = p2 * g1 * g1 + p1 * g2;
        let c3 = p3 * g1 * g1 * g1 + 3.0 * p2 * g1 * g2 + p1 * g3;
        (p0, c1, c2, c3)
    }

    /// D^beta eta via the chain rule on eta = Psi(|x|^2).
    pub fn deriv(&self, x: &[f64], beta: &[usize]) -> f64 {
        let order: usize = beta.iter().sum();
        let u: f64 = x.iter().map(|v| v * v).sum();
        let (p0, c1, c2, c3) = self.cap_psi(u);
        // axis list of the multi-index, e.g. [2,1] -> [0,0,1]
        let mut axes = Vec::with_capacity(order);
        for (axis, &k) in beta.iter().enumerate() {
            for _ in 0..k {
                axes.push(axis);
            }
        }
        let d = |a: usize, b: usize| -> f64 { if a == b { 1.0 } else { 0.0 } };
        match order {
            0 => p0,
            1 => c1 * 2.0 * x[axes[0]],
            2 => {
                let (i, j) = (axes[0], axes[1]);
                c2 * 4.0 * x[i] * x[j] + 2.0 * c1 * d(i, j)
            }
            3 => {
                let (i, j, k) = (axes[0], axes[1], axes[2]);
                c3 * 8.0 * x[i] * x[j] * x[k]
                    + 4.0 * c2 * (d(i, j) * x[k] + d(i, k) * x[j] + d(j, k) * x[i])
            }
            _ => panic!("cutoff derivatives available to order 3"),
        }
    }

    pub fn sample(&self, mesh: Mesh) -> GridFunction {
        GridFunction::sample(mesh, |x| self.value(x))
    }
}

/// Cutoff eta for the ball of radius index n, sampled on the mesh.
pub fn cutoff_eta(n: f64, mesh: Mesh) -> GridFunction {
    Cutoff { n }.sample(mesh)
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothingFit {
    pub alpha: f64,
    pub beta: f64,
    /// (t - s, measured norm)
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub constant: f64,
    pub residual: f64,
    pub predicted_exponent: f64,
    pub datum_alpha_norm: f64,
}

#[derive(Clone, Debug)]
pub struct SmoothingParams {
    pub alpha: f64,
    pub beta: f64,
    /// t - s offsets to meter
    pub ladder: Vec<f64>,
    pub r_eval: f64,
    pub radii: Vec<f64>,
    pub ladder_tol: f64,
    pub solve: SolveParams,
    pub pair_cap: usize,
    pub seed: u64,
    /// re-measure at h/2 and flag >10% disagreement per ladder point
    pub refine_check: bool,
    pub s: f64,
}

impl SmoothingParams {
    /// Geometric default ladder T 2^{-i}, i in the given range.
    pub fn geometric_ladder(horizon: f64, lo: u32, hi: u32) -> Vec<f64> {
        (lo..=hi).map(|i| horizon * 0.5f64.powi(i as i32)).collect()
    }
}

/// Meter || u(t_i) ||_{C^beta} along the ladder and fit the power law
/// log norm = log C - e log(t - s). The predicted exponent is (beta-alpha)/2.
pub fn measure_smoothing(
    op: Arc<OperatorSpec>,
    f: &dyn Fn(&[f64]) -> f64,
    params: &SmoothingParams,
) -> Result<SmoothingFit> {
    if params.beta > 3.0 || params.alpha < 0.0 || params.alpha > params.beta {
        return Err(Error::InvalidParameter("need 0 <= alpha <= beta <= 3".into()));
    }
    if params.ladder.len() < 5 {
        return Err(Error::InvalidParameter("ladder needs at least 5 points".into()));
    }
    let (lo, hi) = params
        .ladder
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if hi / lo < 10f64.powf(1.5) {
        return Err(Error::InvalidParameter("ladder must span at least 1.5 decades".into()));
    }
    if lo < 20.0 * params.solve.tau {
        return Err(Error::InvalidParameter(format!(
            "shortest ladder offset {lo} under-resolved by tau {} (need >= 20 tau)",
            params.solve.tau
        )));
    }

    let norms = meter_ladder(&op, f, params, params.solve.step)?;
    if params.refine_check {
        let fine = meter_ladder(&op, f, params, params.solve.step / 2.0)?;
        for ((dt, a), (_, b)) in norms.iter().zip(&fine) {
            let rel = (a - b).abs() / a.abs().max(1e-300);
            if rel > 0.10 {
                return Err(Error::DerivativeNoise(format!(
                    "norm at t-s={dt:.3e} moves {:.1}% under mesh refinement",
                    rel * 100.0
                )));
            }
        }
    }

    let datum_mesh = Mesh::new(op.dim, *params.radii.last().unwrap(), params.solve.step)?;
    let datum = GridFunction::sample(datum_mesh, f);
    let datum_alpha_norm =
        fractional_norm(&datum, params.alpha, params.r_eval, params.pair_cap, params.seed)?.value;

    let ln_t: Vec<f64> = norms.iter().map(|(dt, _)| dt.ln()).collect();
    let ln_n: Vec<f64> = norms.iter().map(|(_, v)| v.ln()).collect();
    let (slope, intercept, residual) = linear_fit(&ln_t, &ln_n);
    Ok(SmoothingFit {
        alpha: params.alpha,
        beta: params.beta,
        points: norms,
        exponent: -slope,
        constant: intercept.exp(),
        residual,
        predicted_exponent: 0.5 * (params.beta - params.alpha),
        datum_alpha_norm,
    })
}

fn meter_ladder(
    op: &Arc<OperatorSpec>,
    f: &dyn Fn(&[f64]) -> f64,
    params: &SmoothingParams,
    step: f64,
) -> Result<Vec<(f64, f64)>> {
    let times: Vec<f64> = params.ladder.iter().map(|dt| params.s + dt).collect();
    let horizon = times.iter().cloned().fold(params.s, f64::max);
    let mut solve = params.solve.clone();
    solve.step = step;
    solve.store = StorePlan::Times(times.clone());
    let (traj, _) = expanding_ball_solve(
        op.clone(),
        f,
        params.s,
        horizon,
        &params.radii,
        params.ladder_tol,
        params.r_eval.max(params.radii[0] / 2.0),
        &solve,
    )?;
    let metered = par::map_collect(params.ladder.len(), |i| {
        let (frame, t_actual) = traj.frame_at(params.s + params.ladder[i]);
        let norm = fractional_norm(frame, params.beta, params.r_eval, params.pair_cap, params.seed)
            .map(|e| e.value);
        (t_actual - params.s, norm)
    });
    let mut out = Vec::with_capacity(metered.len());
    for (dt, norm) in metered {
        out.push((dt, norm?));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct BernsteinFrame {
    pub t_minus_s: f64,
    pub sup_v: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BernsteinMonitor {
    pub a: f64,
    pub c1: f64,
    pub eta_datum_sup_sq: f64,
    pub frames: Vec<BernsteinFrame>,
    pub max_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct BernsteinParams {
    pub a: f64,
    pub radius: f64,
    pub s: f64,
    pub ladder: Vec<f64>,
    pub r_eval: f64,
    pub solve: SolveParams,
}

/// Weight default: the proofs only need "a sufficiently small".
pub fn default_bernstein_weight(op: &OperatorSpec) -> f64 {
    0.01 * op.nu0.min(1.0) / (1.0 + op.horizon.powi(3))
}

/// Solve the cutoff problem on B(0, radius) with datum eta f and monitor the
/// weighted derivative functional against e^{c1 (t-s)} ||eta f||_inf^2.
pub fn bernstein_monitor(
    op: Arc<OperatorSpec>,
    f: &dyn Fn(&[f64]) -> f64,
    params: &BernsteinParams,
) -> Result<BernsteinMonitor> {
    if params.a < 0.0 {
        return Err(Error::InvalidParameter("weight must be nonnegative".into()));
    }
    let horizon = op.horizon;
    let c1 = 2.0 * op.c0 + horizon * (1.0 + horizon + horizon * horizon);
    let cutoff = Cutoff { n: params.radius };
    let mesh = Mesh::new(op.dim, params.radius, params.solve.step)?;
    let datum = GridFunction::sample(mesh, |x| cutoff.value(x) * f(x));
    let eta_datum_sup_sq = datum
        .values
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .powi(2);
    let t_end = params.ladder.iter().cloned().fold(params.s, f64::max) + params.s;
    let mut solve = params.solve.clone();
    solve.store = StorePlan::Times(params.ladder.iter().map(|dt| params.s + dt).collect());
    let problem = DirichletProblem {
        op: op.clone(),
        radius: params.radius,
        t_start: params.s,
        t_end: t_end.max(params.s + params.ladder.iter().cloned().fold(0.0, f64::max)),
        initial: datum,
        source: None,
        params: solve,
    };
    let traj = solve_dirichlet(&problem)?;
    let frames = par::map_collect(params.ladder.len(), |i| {
        let dt = params.ladder[i];
        let (frame, t_actual) = traj.frame_at(params.s + dt);
        bernstein_frame(&cutoff, frame, t_actual - params.s, params.a, params.r_eval)
            .map(|(sup_v, _)| {
                let bound = (c1 * (t_actual - params.s)).exp() * eta_datum_sup_sq;
                BernsteinFrame {
                    t_minus_s: t_actual - params.s,
                    sup_v,
                    bound,
                    ratio: if eta_datum_sup_sq == 0.0 { 0.0 } else { sup_v / bound },
                }
            })
    });
    let mut out = Vec::with_capacity(frames.len());
    for f in frames {
        out.push(f?);
    }
    let max_ratio = out.iter().fold(0.0f64, |a, fr| a.max(fr.ratio));
    Ok(BernsteinMonitor { a: params.a, c1, eta_datum_sup_sq, frames: out, max_ratio })
}

/// sup over B(0, r_eval) of the functional, plus the pointwise field.
pub fn bernstein_frame(
    cutoff: &Cutoff,
    u: &GridFunction,
    dt: f64,
    a: f64,
    r_eval: f64,
) -> Result<(f64, GridFunction)> {
    let dim = u.mesh.dim;
    let mut v = GridFunction {
        mesh: u.mesh,
        values: u.values.iter().map(|w| w * w).collect(),
        margin: u.margin,
    };
    let mut x = [0.0f64; 2];
    for order in 1..=3usize {
        let weight = a.powi(order as i32) * dt.powi(order as i32);
        if weight == 0.0 {
            continue;
        }
        let mut mag_sq = vec![0.0f64; u.values.len()];
        let mut margin = v.margin;
        for beta in multi_indices(dim, order) {
            let mult = multiplicity(&beta);
            let d = derivative(u, &beta)?;
            margin = margin.max(d.margin);
            for (m, dv) in mag_sq.iter_mut().zip(&d.values) {
                *m += mult * dv * dv;
            }
        }
        for flat in 0..v.values.len() {
            u.mesh.point(flat, &mut x[..dim]);
            let eta_pow = cutoff.value(&x[..dim]).powi(2 * order as i32);
            v.values[flat] += weight * eta_pow * mag_sq[flat];
        }
        v.margin = margin;
    }
    v.check_region(r_eval)?;
    let sup = v
        .mesh
        .indices_within(r_eval)
        .into_iter()
        .fold(0.0f64, |acc, flat| acc.max(v.values[flat]));
    Ok((sup, v))
}
