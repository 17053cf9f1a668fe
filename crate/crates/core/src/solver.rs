//! Implicit finite-difference solver for Cauchy-Dirichlet problems on balls
//! and the expanding-ball realization of the evolution family G(t, s).
//!
//! Space: second-order central diffusion; advection is centered where the
//! cell-Peclet condition b h / (2 nu) <= 1 holds at the point and first-order
//! upwind otherwise, which keeps the implicit matrix an M-matrix under
//! backward Euler. Cross-derivative terms (2D) use the standard four-point
//! stencil; monotonicity is then only approximate and the provenance records
//! it. Time: theta-scheme with theta = 1 (backward Euler, default) or 1/2
//! (Crank-Nicolson, opt-in for accuracy studies).

use crate::banded::{solve_tridiag, Banded};
use crate::error::{Error, Result};
use crate::grid::{GridFunction, Mesh, BALL_EPS};
use crate::operator::OperatorSpec;
use crate::util::norm2;
use serde::Serialize;
use std::sync::Arc;

pub type SpaceTimeFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    BackwardEuler,
    CrankNicolson,
}

impl Scheme {
    fn theta(self) -> f64 {
        match self {
            Scheme::BackwardEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub enum StorePlan {
    All,
    Every(usize),
    /// keep ~200 frames
    Auto,
    /// keep frames nearest to these times (plus first and last)
    Times(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct SolveParams {
    pub step: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub store: StorePlan,
}

impl SolveParams {
    pub fn new(step: f64, tau: f64) -> SolveParams {
        SolveParams { step, tau, scheme: Scheme::BackwardEuler, store: StorePlan::Auto }
    }

    pub fn with_scheme(mut self, s: Scheme) -> SolveParams {
        self.scheme = s;
        self
    }

    pub fn with_store(mut self, st: StorePlan) -> SolveParams {
        self.store = st;
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub operator: String,
    pub scheme: Scheme,
    pub radius: f64,
    pub step: f64,
    pub tau: f64,
    /// number of (step, point) advection evaluations that fell back to upwind
    pub upwind_points: usize,
    /// worst sampled cell-Peclet number b h / (2 nu)
    pub cell_peclet_max: f64,
    /// 2D cross-derivative stencil present (monotonicity only approximate)
    pub cross_terms: bool,
    /// achieved expanding-ball tolerance, when produced by the ladder
    pub ladder_tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub mesh: Mesh,
    pub t_start: f64,
    pub times: Vec<f64>,
    pub frames: Vec<GridFunction>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn last(&self) -> &GridFunction {
        self.frames.last().expect("trajectory has frames")
    }

    /// Frame nearest to time t.
    pub fn frame_at(&self, t: f64) -> (&GridFunction, f64) {
        let mut best = 0usize;
        let mut dist = f64::INFINITY;
        for (k, &tk) in self.times.iter().enumerate() {
            if (tk - t).abs() < dist {
                dist = (tk - t).abs();
                best = k;
            }
        }
        (&self.frames[best], self.times[best])
    }
}

pub struct DirichletProblem {
    pub op: Arc<OperatorSpec>,
    pub radius: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub initial: GridFunction,
    pub source: Option<SpaceTimeFn>,
    pub params: SolveParams,
}

impl DirichletProblem {
    pub fn homogeneous(
        op: Arc<OperatorSpec>,
        radius: f64,
        t_start: f64,
        t_end: f64,
        f: &dyn Fn(&[f64]) -> f64,
        params: SolveParams,
    ) -> Result<DirichletProblem> {
        let mesh = Mesh::new(op.dim, radius, params.step)?;
        Ok(DirichletProblem {
            op,
            radius,
            t_start,
            t_end,
            initial: GridFunction::sample(mesh, f),
            source: None,
            params,
        })
    }
}

struct Discretization {
    mesh: Mesh,
    /// flat indices strictly inside the ball
    interior: Vec<usize>,
    /// full-grid -> unknown position
    unknown_of: Vec<Option<usize>>,
    coords: Vec<[f64; 2]>,
}

impl Discretization {
    fn build(mesh: Mesh) -> Discretization {
        let mut interior = Vec::new();
        let mut unknown_of = vec![None; mesh.len()];
        let mut coords = vec![[0.0f64; 2]; mesh.len()];
        let mut x = [0.0f64; 2];
        for flat in 0..mesh.len() {
            mesh.point(flat, &mut x[..mesh.dim]);
            coords[flat] = x;
            if norm2(&x[..mesh.dim]) < mesh.radius - BALL_EPS {
                unknown_of[flat] = Some(interior.len());
                interior.push(flat);
            }
        }
        Discretization { mesh, interior, unknown_of, coords }
    }
}

/// Row of the discrete operator A_h at one interior point.
struct ARow {
    diag: f64,
    /// (neighbor flat index, coefficient); boundary neighbors multiply zero
    neigh: Vec<(usize, f64)>,
}

fn build_rows(op: &OperatorSpec, disc: &Discretization, t: f64, upwind_count: &mut usize) -> Vec<ARow> {
    let mesh = disc.mesh;
    let h = mesh.step;
    let p = mesh.pts_per_axis;
    let dim = mesh.dim;
    let mut rows = Vec::with_capacity(disc.interior.len());
    let mut qm = [0.0f64; 4];
    for &flat in &disc.interior {
        let x = &disc.coords[flat][..dim];
        op.q_matrix(t, x, &mut qm[..dim * dim]);
        let cv = op.c.eval(t, x);
        let mut diag = cv;
        let mut neigh: Vec<(usize, f64)> = Vec::with_capacity(2 * dim + 4);
        for axis in 0..dim {
            let stride = if dim == 1 {
                1isize
            } else if axis == 0 {
                p as isize
            } else {
                1isize
            };
            let qa = qm[axis * dim + axis];
            let bv = op.b[axis].eval(t, x);
            // diffusion
            let w = qa / (h * h);
            diag -= 2.0 * w;
            neigh.push(((flat as isize - stride) as usize, w));
            neigh.push(((flat as isize + stride) as usize, w));
            // advection: centered when the cell-Peclet condition holds
            if bv.abs() * h <= 2.0 * qa {
                let c = bv / (2.0 * h);
                neigh.push(((flat as isize - stride) as usize, -c));
                neigh.push(((flat as isize + stride) as usize, c));
            } else {
                *upwind_count += 1;
                if bv > 0.0 {
                    diag -= bv / h;
                    neigh.push(((flat as isize + stride) as usize, bv / h));
                } else {
                    diag += bv / h;
                    neigh.push(((flat as isize - stride) as usize, -bv / h));
                }
            }
        }
        if dim == 2 {
            let q12 = qm[1];
            if q12 != 0.0 {
                // 2 q12 D_xy with the four-point centered stencil
                let w = 2.0 * q12 / (4.0 * h * h);
                let ps = p as isize;
                let f = flat as isize;
                neigh.push(((f + ps + 1) as usize, w));
                neigh.push(((f - ps - 1) as usize, w));
                neigh.push(((f + ps - 1) as usize, -w));
                neigh.push(((f - ps + 1) as usize, -w));
            }
        }
        rows.push(ARow { diag, neigh });
    }
    rows
}

fn apply_rows(rows: &[ARow], disc: &Discretization, u: &[f64], out: &mut [f64]) {
    for (k, row) in rows.iter().enumerate() {
        let mut acc = row.diag * u[disc.interior[k]];
        for &(nf, c) in &row.neigh {
            acc += c * u[nf];
        }
        out[k] = acc;
    }
}

/// Solve the Cauchy-Dirichlet problem by theta-scheme stepping.
pub fn solve_dirichlet(problem: &DirichletProblem) -> Result<Trajectory> {
    let op = &problem.op;
    let mesh = problem.initial.mesh;
    if (mesh.radius - problem.radius).abs() > 1e-12 || mesh.dim != op.dim {
        return Err(Error::DimensionMismatch("initial datum mesh does not match problem".into()));
    }
    problem.initial.assert_finite()?;
    let span = problem.t_end - problem.t_start;
    if span <= 0.0 || problem.params.tau <= 0.0 {
        return Err(Error::InvalidParameter("need t_end > t_start and tau > 0".into()));
    }
    let steps = (span / problem.params.tau).round().max(1.0) as usize;
    let tau = span / steps as f64;
    let theta = problem.params.scheme.theta();
    let disc = Discretization::build(mesh);
    let n = disc.interior.len();

    // stored step indices
    let keep: Vec<usize> = match &problem.params.store {
        StorePlan::All => (0..=steps).collect(),
        StorePlan::Every(k) => {
            let k = (*k).max(1);
            let mut v: Vec<usize> = (0..=steps).step_by(k).collect();
            if *v.last().unwrap() != steps {
                v.push(steps);
            }
            v
        }
        StorePlan::Auto => {
            let k = steps.div_ceil(200).max(1);
            let mut v: Vec<usize> = (0..=steps).step_by(k).collect();
            if *v.last().unwrap() != steps {
                v.push(steps);
            }
            v
        }
        StorePlan::Times(ts) => {
            let mut v: Vec<usize> = vec![0, steps];
            for &t in ts {
                let k = ((t - problem.t_start) / tau).round();
                if k.is_finite() && k >= 0.0 && k <= steps as f64 {
                    v.push(k as usize);
                }
            }
            v.sort_unstable();
            v.dedup();
            v
        }
    };

    let mut upwind_count = 0usize;
    let mut peclet = 0.0f64;
    {
        // sampled mesh-condition diagnostic
        let mut qm = [0.0f64; 4];
        for &flat in disc.interior.iter().step_by((n / 64).max(1)) {
            let x = &disc.coords[flat][..mesh.dim];
            for &t in &[problem.t_start, problem.t_start + 0.5 * span, problem.t_end] {
                op.q_matrix(t, x, &mut qm[..mesh.dim * mesh.dim]);
                for axis in 0..mesh.dim {
                    let pe = op.b[axis].eval(t, x).abs() * mesh.step
                        / (2.0 * qm[axis * mesh.dim + axis]);
                    peclet = peclet.max(pe);
                }
            }
        }
    }

    let mut u = problem.initial.values.clone();
    // enforce the boundary condition on the initial frame interior complement
    for (flat, unk) in disc.unknown_of.iter().enumerate() {
        if unk.is_none() {
            u[flat] = 0.0;
        }
    }
    let mut times = Vec::with_capacity(keep.len());
    let mut frames = Vec::with_capacity(keep.len());
    let cross = mesh.dim == 2;
    let mut store_initial = problem.initial.clone();
    store_initial.values = u.clone();
    if keep.contains(&0) {
        times.push(problem.t_start);
        frames.push(store_initial);
    }

    let mut rhs = vec![0.0f64; n];
    let mut expl = vec![0.0f64; n];
    let mut rows_next;
    for k in 0..steps {
        let t0 = problem.t_start + k as f64 * tau;
        let t1 = problem.t_start + (k + 1) as f64 * tau;
        // explicit part
        if theta < 1.0 {
            let rows_now = build_rows(op, &disc, t0, &mut upwind_count);
            apply_rows(&rows_now, &disc, &u, &mut expl);
            for (i, &flat) in disc.interior.iter().enumerate() {
                rhs[i] = u[flat] + tau * (1.0 - theta) * expl[i];
            }
        } else {
            for (i, &flat) in disc.interior.iter().enumerate() {
                rhs[i] = u[flat];
            }
        }
        if let Some(g) = &problem.source {
            for (i, &flat) in disc.interior.iter().enumerate() {
                let x = &disc.coords[flat][..mesh.dim];
                let gv = if theta < 1.0 {
                    0.5 * (g(t0, x) + g(t1, x))
                } else {
                    g(t1, x)
                };
                rhs[i] += tau * gv;
            }
        }
        rows_next = build_rows(op, &disc, t1, &mut upwind_count);
        let fac = tau * theta;
        let sol = match mesh.dim {
            1 => {
                let mut sub = vec![0.0f64; n];
                let mut diag = vec![0.0f64; n];
                let mut sup = vec![0.0f64; n];
                for (i, row) in rows_next.iter().enumerate() {
                    diag[i] = 1.0 - fac * row.diag;
                    let flat = disc.interior[i];
                    for &(nf, c) in &row.neigh {
                        if let Some(j) = disc.unknown_of[nf] {
                            if nf + 1 == flat {
                                sub[i] -= fac * c;
                                debug_assert_eq!(j, i - 1);
                            } else {
                                sup[i] -= fac * c;
                                debug_assert_eq!(j, i + 1);
                            }
                        }
                    }
                }
                solve_tridiag(&sub, &diag, &sup, &rhs).map_err(|e| {
                    Error::SingularSystem(format!(
                        "{e} at t={t1:.6} (tau c0 = {:.3e})",
                        tau * op.c0
                    ))
                })?
            }
            2 => {
                let band = mesh.pts_per_axis + 1;
                let mut a = Banded::zeros(n, band, band);
                for (i, row) in rows_next.iter().enumerate() {
                    a.set(i, i, 1.0 - fac * row.diag);
                    for &(nf, c) in &row.neigh {
                        if let Some(j) = disc.unknown_of[nf] {
                            a.add(i, j, -fac * c);
                        }
                    }
                }
                let piv = a.factor().map_err(|e| {
                    Error::SingularSystem(format!("{e} at t={t1:.6}"))
                })?;
                a.solve_factored(&piv, &rhs)
            }
            _ => unreachable!(),
        };
        for (i, &flat) in disc.interior.iter().enumerate() {
            u[flat] = sol[i];
        }
        if keep.binary_search(&(k + 1)).is_ok() {
            let mut frame = GridFunction::zeros(mesh);
            frame.values.copy_from_slice(&u);
            frame.assert_finite()?;
            times.push(t1);
            frames.push(frame);
        }
    }

    Ok(Trajectory {
        mesh,
        t_start: problem.t_start,
        times,
        frames,
        provenance: Provenance {
            operator: op.label.clone(),
            scheme: problem.params.scheme,
            radius: problem.radius,
            step: mesh.step,
            tau,
            upwind_points: upwind_count,
            cell_peclet_max: peclet,
            cross_terms: cross,
            ladder_tol: None,
        },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    pub radii: Vec<f64>,
    /// sup difference of consecutive ladder members on the metering region
    pub diffs: Vec<f64>,
    /// positive part of u_smaller - u_larger for nonnegative data
    pub monotonicity_defect: f64,
    pub converged: bool,
    pub achieved_tol: Option<f64>,
}

/// Expanding-ball construction of G(t, s) f: solve on successive balls until
/// two consecutive solutions agree within `tol` (sup over B(0, meter_radius)
/// across stored frames). `tol <= 0` runs the whole ladder without failing.
pub fn expanding_ball_solve(
    op: Arc<OperatorSpec>,
    f: &dyn Fn(&[f64]) -> f64,
    t_start: f64,
    t_end: f64,
    radii: &[f64],
    tol: f64,
    meter_radius: f64,
    params: &SolveParams,
) -> Result<(Trajectory, LadderReport)> {
    expanding_ball_solve_forced(op, f, None, t_start, t_end, radii, tol, meter_radius, params)
}

/// Expanding-ball construction with an optional source term.
#[allow(clippy::too_many_arguments)]
pub fn expanding_ball_solve_forced(
    op: Arc<OperatorSpec>,
    f: &dyn Fn(&[f64]) -> f64,
    source: Option<SpaceTimeFn>,
    t_start: f64,
    t_end: f64,
    radii: &[f64],
    tol: f64,
    meter_radius: f64,
    params: &SolveParams,
) -> Result<(Trajectory, LadderReport)> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("radius ladder must be strictly increasing".into()));
    }
    let mut prev: Option<Trajectory> = None;
    let mut diffs = Vec::new();
    let mut defect = 0.0f64;
    let mut used = Vec::new();
    let nonnegative = {
        let mesh = Mesh::new(op.dim, radii[0], params.step)?;
        GridFunction::sample(mesh, f).values.iter().all(|&v| v >= -1e-14)
    };
    for (i, &radius) in radii.iter().enumerate() {
        let mut problem =
            DirichletProblem::homogeneous(op.clone(), radius, t_start, t_end, f, params.clone())?;
        problem.source = source.clone();
        let traj = solve_dirichlet(&problem)?;
        used.push(radius);
        if let Some(p) = &prev {
            let mut worst = 0.0f64;
            for (frame_small, frame_big) in p.frames.iter().zip(&traj.frames) {
                let big_on_small = frame_big.restrict_to(frame_small.mesh)?;
                worst = worst.max(frame_small.sup_diff_within(&big_on_small, meter_radius));
                if nonnegative {
                    for flat in frame_small.mesh.indices_within(meter_radius) {
                        defect = defect.max(frame_small.values[flat] - big_on_small.values[flat]);
                    }
                }
            }
            diffs.push(worst);
            if tol > 0.0 && worst <= tol {
                let mut out = traj;
                out.provenance.ladder_tol = Some(worst);
                return Ok((
                    out,
                    LadderReport {
                        radii: used,
                        diffs,
                        monotonicity_defect: defect.max(0.0),
                        converged: true,
                        achieved_tol: Some(worst),
                    },
                ));
            }
        }
        if i == radii.len() - 1 {
            let converged = tol <= 0.0 || diffs.last().is_some_and(|&d| d <= tol);
            if tol > 0.0 && !converged {
                return Err(Error::NonConvergence(format!(
                    "ladder exhausted at R={radius}; diffs {diffs:?}"
                )));
            }
            let mut out = traj;
            out.provenance.ladder_tol = diffs.last().copied();
            return Ok((
                out,
                LadderReport {
                    radii: used,
                    diffs: diffs.clone(),
                    monotonicity_defect: defect.max(0.0),
                    converged,
                    achieved_tol: diffs.last().copied(),
                },
            ));
        }
        prev = Some(traj);
    }
    unreachable!()
}

/// max over frames of ||u(t)||_inf / (e^{c0 (t-s)} ||f||_inf); 0 for the zero
/// trajectory from zero data, +inf when data vanish but the trajectory does not.
pub fn verify_sup_bound(traj: &Trajectory, op: &OperatorSpec) -> f64 {
    let f_norm = traj.frames[0]
        .values
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    if f_norm == 0.0 {
        let all_zero = traj
            .frames
            .iter()
            .all(|fr| fr.values.iter().all(|&v| v == 0.0));
        return if all_zero { 0.0 } else { f64::INFINITY };
    }
    let mut worst = 0.0f64;
    for (t, frame) in traj.times.iter().zip(&traj.frames) {
        let sup = frame.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        let bound = (op.c0 * (t - traj.t_start)).exp() * f_norm;
        worst = worst.max(sup / bound);
    }
    worst
}

/// Worst positive excursion of the solution for nonpositive data f, g.
pub fn sign_preservation_check(
    op: Arc<OperatorSpec>,
    radius: f64,
    t_start: f64,
    t_end: f64,
    f: &dyn Fn(&[f64]) -> f64,
    g: Option<SpaceTimeFn>,
    params: &SolveParams,
) -> Result<f64> {
    let mesh = Mesh::new(op.dim, radius, params.step)?;
    let initial = GridFunction::sample(mesh, f);
    if initial.values.iter().any(|&v| v > 1e-12) {
        return Err(Error::InvalidParameter("datum must be nonpositive".into()));
    }
    if let Some(gf) = &g {
        let mut x = [0.0f64; 2];
        for flat in (0..mesh.len()).step_by((mesh.len() / 256).max(1)) {
            mesh.point(flat, &mut x[..mesh.dim]);
            if gf(t_start, &x[..mesh.dim]) > 1e-12 || gf(t_end, &x[..mesh.dim]) > 1e-12 {
                return Err(Error::InvalidParameter("source must be nonpositive".into()));
            }
        }
    }
    let problem = DirichletProblem {
        op,
        radius,
        t_start,
        t_end,
        initial,
        source: g,
        params: params.clone(),
    };
    let traj = solve_dirichlet(&problem)?;
    let mut excursion = 0.0f64;
    for frame in &traj.frames {
        for flat in frame.mesh.indices_within(radius) {
            excursion = excursion.max(frame.values[flat]);
        }
    }
    Ok(excursion)
}

/// Solve for f, eta f and (1 - eta) f separately and return the worst
/// linearity defect max_t || u_f - u_{eta f} - u_{(1-eta) f} ||_inf.
pub fn localization_split_check(
    op: Arc<OperatorSpec>,
    radius: f64,
    t_start: f64,
    t_end: f64,
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    params: &SolveParams,
) -> Result<f64> {
    let x0 = x0.to_vec();
    let eta = move |x: &[f64]| -> f64 {
        let d: f64 = x
            .iter()
            .zip(&x0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d <= 1.0 {
            1.0
        } else if d >= 2.0 {
            0.0
        } else {
            // smooth monotone ramp between the indicator functions
            let s = d - 1.0;
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    };
    let solve = |datum: Box<dyn Fn(&[f64]) -> f64>| -> Result<Trajectory> {
        let problem =
            DirichletProblem::homogeneous(op.clone(), radius, t_start, t_end, &*datum, params.clone())?;
        solve_dirichlet(&problem)
    };
    let f1: Box<dyn Fn(&[f64]) -> f64> = Box::new(f);
    let whole = solve(f1)?;
    let eta_c = eta.clone();
    let cut = solve(Box::new(move |x: &[f64]| f(x) * eta_c(x)))?;
    let rest = solve(Box::new(move |x: &[f64]| f(x) * (1.0 - eta(x))))?;
    let mut worst = 0.0f64;
    for ((a, b), c) in whole.frames.iter().zip(&cut.frames).zip(&rest.frames) {
        let sum = b.axpy(1.0, c);
        worst = worst.max(a.sup_diff_within(&sum, radius));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use crate::poly_example::{build_poly_example, PolyExampleSpec};

    fn heat_op() -> Arc<OperatorSpec> {
        Arc::new(OperatorSpec::heat(1, 1.0))
    }

    #[test]
    fn zero_data_zero_trajectory() {
        let p = DirichletProblem::homogeneous(
            heat_op(),
            4.0,
            0.0,
            0.5,
            &|_x| 0.0,
            SolveParams::new(0.125, 0.01),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        assert!(traj.frames.iter().all(|f| f.values.iter().all(|&v| v == 0.0)));
        assert_eq!(verify_sup_bound(&traj, &heat_op()), 0.0);
    }

    #[test]
    fn heat_gaussian_matches_kernel_convolution() {
        // reduced-size variant of the full acceptance run
        let p = DirichletProblem::homogeneous(
            heat_op(),
            8.0,
            0.0,
            0.5,
            &|x| (-x[0] * x[0]).exp(),
            SolveParams::new(1.0 / 64.0, 1e-3)
                .with_scheme(Scheme::CrankNicolson)
                .with_store(StorePlan::Times(vec![0.25, 0.5])),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        for (frame, t) in traj.frames.iter().zip(&traj.times).skip(1).map(|(f, t)| (f, *t)) {
            let mut x = [0.0f64];
            let mut worst = 0.0f64;
            for flat in frame.mesh.indices_within(2.0) {
                frame.mesh.point(flat, &mut x);
                let exact = oracle::heat_gaussian(t, x[0]);
                worst = worst.max((frame.values[flat] - exact).abs());
            }
            assert!(worst < 1e-3, "t={t}: sup error {worst}");
        }
    }

    #[test]
    fn constant_potential_decay() {
        // Q=I, b=0, c = -0.7: interior solution follows u' = c u
        let mut op = OperatorSpec::heat(1, 1.0);
        op.c = crate::operator::SeparableCoeff::constant(1, -0.7);
        op.c0 = -0.7;
        op.label = "const-potential".into();
        let p = DirichletProblem::homogeneous(
            Arc::new(op),
            12.0,
            0.0,
            1.0,
            &|_x| 1.0,
            SolveParams::new(0.125, 1e-3).with_scheme(Scheme::CrankNicolson),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        let last = traj.last();
        for flat in last.mesh.indices_within(2.0) {
            assert!((last.values[flat] - (-0.7f64).exp()).abs() < 1e-3);
        }
    }

    #[test]
    fn sup_bound_with_positive_potential() {
        // c = +0.5: interior solution e^{0.5 t}, ratio stays at 1
        let mut op = OperatorSpec::heat(1, 1.0);
        op.c = crate::operator::SeparableCoeff::constant(1, 0.5);
        op.c0 = 0.5;
        let p = DirichletProblem::homogeneous(
            Arc::new(op.clone()),
            12.0,
            0.0,
            1.0,
            &|_x| 1.0,
            SolveParams::new(0.125, 1e-3),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        let ratio = verify_sup_bound(&traj, &op);
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn backward_euler_sup_nonincreasing() {
        let p = DirichletProblem::homogeneous(
            heat_op(),
            4.0,
            0.0,
            0.5,
            &|x| (3.0 * x[0]).sin() * (-x[0] * x[0]).exp(),
            SolveParams::new(1.0 / 32.0, 1e-3).with_store(StorePlan::Every(50)),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        let sups: Vec<f64> = traj
            .frames
            .iter()
            .map(|f| f.values.iter().fold(0.0f64, |a, &v| a.max(v.abs())))
            .collect();
        assert!(sups.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{sups:?}");
    }

    #[test]
    fn linearity_exact() {
        let op = heat_op();
        let params = SolveParams::new(1.0 / 32.0, 1e-2);
        let solve = |f: Box<dyn Fn(&[f64]) -> f64>| {
            let p = DirichletProblem::homogeneous(op.clone(), 4.0, 0.0, 0.3, &*f, params.clone())
                .unwrap();
            solve_dirichlet(&p).unwrap()
        };
        let a = solve(Box::new(|x: &[f64]| (-x[0] * x[0]).exp()));
        let b = solve(Box::new(|x: &[f64]| x[0].sin()));
        let combo = solve(Box::new(|x: &[f64]| {
            2.0 * (-x[0] * x[0]).exp() - 0.5 * x[0].sin()
        }));
        for ((fa, fb), fc) in a.frames.iter().zip(&b.frames).zip(&combo.frames) {
            let lin = fa.scale(2.0).axpy(-0.5, fb);
            assert!(fc.sup_diff_within(&lin, 4.0) < 1e-12);
        }
    }

    #[test]
    fn expanding_ball_monotone_for_nonnegative_data() {
        let params = SolveParams::new(1.0 / 32.0, 1e-3);
        let (_, report) = expanding_ball_solve(
            heat_op(),
            &|x| (-x[0] * x[0]).exp(),
            0.0,
            0.5,
            &[4.0, 8.0, 16.0],
            0.0,
            2.0,
            &params,
        )
        .unwrap();
        let h = params.step;
        assert!(report.monotonicity_defect <= 10.0 * h * h, "defect {}", report.monotonicity_defect);
        assert!(report.diffs.windows(2).all(|w| w[1] < w[0]), "{:?}", report.diffs);
    }

    #[test]
    fn expanding_ball_converges_fast_for_compact_data() {
        // datum supported in B(0, 1): first doubling already within 1e-4
        let params = SolveParams::new(1.0 / 32.0, 1e-3);
        let (traj, report) = expanding_ball_solve(
            heat_op(),
            &|x| if x[0].abs() < 1.0 { (1.0 - x[0] * x[0]).powi(3) } else { 0.0 },
            0.0,
            0.25,
            &[4.0, 8.0, 16.0],
            1e-4,
            2.0,
            &params,
        )
        .unwrap();
        assert!(report.converged);
        assert_eq!(report.radii.len(), 2);
        assert!(traj.provenance.ladder_tol.unwrap() <= 1e-4);
    }

    #[test]
    fn expanding_ball_constants_are_stable() {
        // f == 1, c == 0: the limit is 1 in the metering region
        let params = SolveParams::new(1.0 / 16.0, 1e-2);
        let (traj, _) = expanding_ball_solve(
            heat_op(),
            &|_x| 1.0,
            0.0,
            0.5,
            &[4.0, 8.0, 16.0],
            0.0,
            2.0,
            &params,
        )
        .unwrap();
        let last = traj.last();
        for flat in last.mesh.indices_within(2.0) {
            assert!((last.values[flat] - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn ladder_start_independence() {
        let params = SolveParams::new(1.0 / 32.0, 1e-3);
        let f = |x: &[f64]| (-x[0] * x[0]).exp();
        let (a, _) =
            expanding_ball_solve(heat_op(), &f, 0.0, 0.5, &[4.0, 8.0, 16.0], 1e-4, 2.0, &params)
                .unwrap();
        let (b, _) =
            expanding_ball_solve(heat_op(), &f, 0.0, 0.5, &[8.0, 16.0], 1e-4, 2.0, &params)
                .unwrap();
        let (fa, _) = a.frame_at(0.5);
        let (fb, _) = b.frame_at(0.5);
        let small = if fa.mesh.radius <= fb.mesh.radius { fa.mesh } else { fb.mesh };
        let ra = fa.restrict_to(small).unwrap();
        let rb = fb.restrict_to(small).unwrap();
        assert!(ra.sup_diff_within(&rb, 2.0) <= 2e-4);
    }

    #[test]
    fn sign_preservation_ou() {
        let op = build_poly_example(&PolyExampleSpec::ornstein_uhlenbeck(1, 1.0)).unwrap();
        let params = SolveParams::new(1.0 / 32.0, 1e-3);
        let exc = sign_preservation_check(
            Arc::new(op),
            8.0,
            0.0,
            1.0,
            &|x| -(-x[0] * x[0]).exp(),
            None,
            &params,
        )
        .unwrap();
        let h: f64 = 1.0 / 32.0;
        assert!(exc <= 10.0 * h * h + 10.0 * 1e-3, "excursion {exc}");
    }

    #[test]
    fn sign_preservation_with_negative_source() {
        // f == -1, g == -1, c == 0: spatially constant comparison solution
        // solves u' = -1 from -1, so u(t) = -1 - t <= -1 interiorly.
        let params = SolveParams::new(1.0 / 16.0, 1e-3);
        let op = heat_op();
        let mesh = Mesh::new(1, 16.0, params.step).unwrap();
        let problem = DirichletProblem {
            op: op.clone(),
            radius: 16.0,
            t_start: 0.0,
            t_end: 1.0,
            initial: GridFunction::constant(mesh, -1.0),
            source: Some(Arc::new(|_t: f64, _x: &[f64]| -1.0)),
            params: params.clone(),
        };
        let traj = solve_dirichlet(&problem).unwrap();
        let last = traj.last();
        for flat in last.mesh.indices_within(2.0) {
            assert!(last.values[flat] <= -1.0 + 1e-6);
        }
        let exc = sign_preservation_check(
            op,
            16.0,
            0.0,
            1.0,
            &|_x| -1.0,
            Some(Arc::new(|_t: f64, _x: &[f64]| -1.0)),
            &params,
        )
        .unwrap();
        assert!(exc <= 0.0 + 1e-12);
    }

    #[test]
    fn localization_split_is_linear() {
        let params = SolveParams::new(1.0 / 16.0, 1e-2);
        let defect = localization_split_check(
            heat_op(),
            8.0,
            0.0,
            0.3,
            &|x: &[f64]| (-x[0] * x[0]).exp(),
            &[0.0],
            &params,
        )
        .unwrap();
        assert!(defect <= 1e-12, "defect {defect}");
        let zero = localization_split_check(
            heat_op(),
            8.0,
            0.0,
            0.3,
            &|_x: &[f64]| 0.0,
            &[0.0],
            &params,
        )
        .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn scheme_orders_on_heat_oracle() {
        // temporal convergence slopes: CN >= 1.8, BE >= 0.9. Errors are taken
        // against a same-mesh tiny-step reference so the spatial component
        // cancels and the pure temporal order shows.
        let run = |scheme: Scheme, tau: f64| -> GridFunction {
            let p = DirichletProblem::homogeneous(
                heat_op(),
                8.0,
                0.0,
                0.5,
                &|x| (-x[0] * x[0]).exp(),
                SolveParams::new(1.0 / 64.0, tau)
                    .with_scheme(scheme)
                    .with_store(StorePlan::Times(vec![0.5])),
            )
            .unwrap();
            solve_dirichlet(&p).unwrap().last().clone()
        };
        let reference = run(Scheme::CrankNicolson, 2.5e-5);
        // the reference itself tracks the analytic oracle
        {
            let mut x = [0.0f64];
            let mut worst = 0.0f64;
            for flat in reference.mesh.indices_within(2.0) {
                reference.mesh.point(flat, &mut x);
                worst = worst.max((reference.values[flat] - oracle::heat_gaussian(0.5, x[0])).abs());
            }
            assert!(worst < 5e-4, "reference drifted from oracle: {worst}");
        }
        let taus = [4e-3f64, 2e-3, 1e-3];
        let ln_taus: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
        for (scheme, min_slope) in [(Scheme::BackwardEuler, 0.9), (Scheme::CrankNicolson, 1.8)] {
            let errs: Vec<f64> = taus
                .iter()
                .map(|&tau| run(scheme, tau).sup_diff_within(&reference, 2.0).ln())
                .collect();
            let (slope, _, _) = crate::util::linear_fit(&ln_taus, &errs);
            assert!(slope >= min_slope, "{scheme:?} slope {slope}");
        }
    }

    #[test]
    fn heat_2d_decay_against_product_oracle() {
        // 2D check: product Gaussian under the heat flow
        let op = Arc::new(OperatorSpec::heat(2, 1.0));
        let p = DirichletProblem::homogeneous(
            op,
            4.0,
            0.0,
            0.1,
            &|x| (-(x[0] * x[0] + x[1] * x[1])).exp(),
            SolveParams::new(1.0 / 8.0, 2.5e-3).with_scheme(Scheme::CrankNicolson),
        )
        .unwrap();
        let traj = solve_dirichlet(&p).unwrap();
        let frame = traj.last();
        let mut x = [0.0f64; 2];
        let mut worst = 0.0f64;
        for flat in frame.mesh.indices_within(1.0) {
            frame.mesh.point(flat, &mut x);
            let exact = oracle::heat_gaussian(0.1, x[0]) * oracle::heat_gaussian(0.1, x[1]);
            worst = worst.max((frame.values[flat] - exact).abs());
        }
        assert!(worst < 8e-3, "2D sup error {worst}");
    }
}
