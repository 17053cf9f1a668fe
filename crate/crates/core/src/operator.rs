//! Coefficient fields and the nonautonomous elliptic operator
//! A u = sum q_ij D_ij u + sum b_j D_j u + c u.
//!
//! Coefficient evaluators are pure and immutable, so an operator can be shared
//! freely across parallel workers. Spatial derivatives up to third order are
//! part of the coefficient contract: exact for polynomial-weighted fields,
//! fourth-order finite differences as a fallback for black-box samplers.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::poly::Poly;
use crate::profile::TimeProfile;
use crate::stencil;
use crate::util::{multi_indices, sym_max_eig, sym_min_eig};
use std::sync::Arc;

pub trait Coefficient: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64]) -> f64;
    /// Spatial derivative D^beta, |beta| <= 3.
    fn deriv(&self, t: f64, x: &[f64], beta: &[usize]) -> f64;
    /// True when `deriv` is exact (no finite-difference noise floor).
    fn analytic_derivatives(&self) -> bool {
        true
    }
}

pub type CoeffRef = Arc<dyn Coefficient>;

/// profile(t) * poly(x); derivatives are exact.
pub struct SeparableCoeff {
    pub profile: TimeProfile,
    pub space: Poly,
}

impl SeparableCoeff {
    pub fn new(profile: TimeProfile, space: Poly) -> CoeffRef {
        Arc::new(SeparableCoeff { profile, space })
    }

    pub fn constant(dim: usize, v: f64) -> CoeffRef {
        Arc::new(SeparableCoeff {
            profile: TimeProfile::Constant(v),
            space: Poly::constant(dim, 1.0),
        })
    }
}

impl Coefficient for SeparableCoeff {
    fn dim(&self) -> usize {
        self.space.dim()
    }
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.profile.eval(t) * self.space.eval(x)
    }
    fn deriv(&self, t: f64, x: &[f64], beta: &[usize]) -> f64 {
        self.profile.eval(t) * self.space.deriv(beta).eval(x)
    }
}

/// Sum of coefficient fields.
pub struct SumCoeff(pub Vec<CoeffRef>);

impl Coefficient for SumCoeff {
    fn dim(&self) -> usize {
        self.0[0].dim()
    }
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.0.iter().map(|c| c.eval(t, x)).sum()
    }
    fn deriv(&self, t: f64, x: &[f64], beta: &[usize]) -> f64 {
        self.0.iter().map(|c| c.deriv(t, x, beta)).sum()
    }
    fn analytic_derivatives(&self) -> bool {
        self.0.iter().all(|c| c.analytic_derivatives())
    }
}

/// Black-box coefficient; spatial derivatives by nested fourth-order central
/// differences with step 1e-3 (1 + |x|). Documented noise floor ~1e-8 relative.
pub struct FnCoeff {
    pub dim: usize,
    pub f: Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>,
}

impl FnCoeff {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static) -> CoeffRef {
        Arc::new(FnCoeff { dim, f: Arc::new(f) })
    }
}

pub fn fd_derivative(
    eval: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    beta: &[usize],
) -> f64 {
    let order: usize = beta.iter().sum();
    if order == 0 {
        return eval(x);
    }
    let axis = beta.iter().position(|&k| k > 0).unwrap();
    let mut lower = beta.to_vec();
    lower[axis] -= 1;
    let h = 1e-3 * (1.0 + crate::util::norm2(x));
    let probe = |s: f64| {
        let mut y = x.to_vec();
        y[axis] += s;
        fd_derivative(eval, &y, &lower)
    };
    (probe(-2.0 * h) - 8.0 * probe(-h) + 8.0 * probe(h) - probe(2.0 * h)) / (12.0 * h)
}

impl Coefficient for FnCoeff {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        (self.f)(t, x)
    }
    fn deriv(&self, t: f64, x: &[f64], beta: &[usize]) -> f64 {
        let f = &self.f;
        fd_derivative(&|y: &[f64]| f(t, y), x, beta)
    }
    fn analytic_derivatives(&self) -> bool {
        false
    }
}

/// 1D coefficient given by samples on a uniform (t, x) grid: Lagrange
/// interpolation of the chosen order in x (1 or 3), linear in t, clamped at
/// the table edges. Spatial derivatives fall back to finite differences.
pub struct TabulatedCoeff1D {
    pub t0: f64,
    pub dt: f64,
    pub x0: f64,
    pub dx: f64,
    /// values[time index][space index]
    pub values: Vec<Vec<f64>>,
    pub order: usize,
}

impl TabulatedCoeff1D {
    fn interp_x(&self, row: &[f64], x: f64) -> f64 {
        let n = row.len();
        let s = ((x - self.x0) / self.dx).clamp(0.0, (n - 1) as f64);
        match self.order {
            1 => {
                let i = (s.floor() as usize).min(n - 2);
                let w = s - i as f64;
                row[i] * (1.0 - w) + row[i + 1] * w
            }
            3 => {
                let i = (s.floor() as usize).clamp(1, n.saturating_sub(3).max(1));
                let u = s - i as f64;
                // 4-point Lagrange on nodes -1, 0, 1, 2
                let (a, b, c, d) = (row[i - 1], row[i], row[i + 1], row[(i + 2).min(n - 1)]);
                let w0 = -u * (u - 1.0) * (u - 2.0) / 6.0;
                let w1 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
                let w2 = -(u + 1.0) * u * (u - 2.0) / 2.0;
                let w3 = (u + 1.0) * u * (u - 1.0) / 6.0;
                a * w0 + b * w1 + c * w2 + d * w3
            }
            o => panic!("unsupported interpolation order {o}"),
        }
    }
}

impl Coefficient for TabulatedCoeff1D {
    fn dim(&self) -> usize {
        1
    }
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let m = self.values.len();
        let s = ((t - self.t0) / self.dt).clamp(0.0, (m - 1) as f64);
        let i = (s.floor() as usize).min(m.saturating_sub(2));
        if m == 1 {
            return self.interp_x(&self.values[0], x[0]);
        }
        let w = s - i as f64;
        self.interp_x(&self.values[i], x[0]) * (1.0 - w)
            + self.interp_x(&self.values[i + 1], x[0]) * w
    }
    fn deriv(&self, t: f64, x: &[f64], beta: &[usize]) -> f64 {
        fd_derivative(&|y: &[f64]| self.eval(t, y), x, beta)
    }
    fn analytic_derivatives(&self) -> bool {
        false
    }
}

/// Declared Lyapunov pair: a polynomial phi blowing up at infinity and a rate
/// lambda such that A phi - lambda phi should be bounded above.
#[derive(Clone, Debug)]
pub struct LyapunovSpec {
    pub phi: Poly,
    pub lambda: f64,
}

/// Asymptotic data carried by operators built from the polynomial-growth
/// family; lets the hypothesis checker compare exponents exactly instead of
/// sampling blindly.
#[derive(Clone, Debug)]
pub struct PolyMeta {
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub nu0: f64,
    /// sup_t b0(t) (negative for valid specs)
    pub b0_sup: f64,
    /// sup of |q0_ij| over time
    pub q0_sup: f64,
    pub c0_sup_abs: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
}

impl std::fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "OperatorSpec({}, dim={}, T={})", self.label, self.dim, self.horizon)
    }
}

#[derive(Clone)]
pub struct OperatorSpec {
    pub dim: usize,
    pub horizon: f64,
    /// symmetric dim x dim diffusion matrix
    pub q: Vec<Vec<CoeffRef>>,
    pub b: Vec<CoeffRef>,
    pub c: CoeffRef,
    /// declared ellipticity floor
    pub nu0: f64,
    /// declared potential ceiling
    pub c0: f64,
    pub lyapunov: Option<LyapunovSpec>,
    pub poly_meta: Option<PolyMeta>,
    pub label: String,
}

impl OperatorSpec {
    /// Heat operator: Q = I, b = 0, c = 0, with the default Lyapunov pair.
    pub fn heat(dim: usize, horizon: f64) -> OperatorSpec {
        let one = SeparableCoeff::constant(dim, 1.0);
        let zero = SeparableCoeff::constant(dim, 0.0);
        let q = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { one.clone() } else { zero.clone() })
                    .collect()
            })
            .collect();
        OperatorSpec {
            dim,
            horizon,
            q,
            b: vec![zero.clone(); dim],
            c: zero,
            nu0: 1.0,
            c0: 0.0,
            lyapunov: Some(LyapunovSpec { phi: Poly::weight(dim, 1), lambda: 1.0 }),
            poly_meta: None,
            label: "heat".into(),
        }
    }

    pub fn q_matrix(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i * self.dim + j] = self.q[i][j].eval(t, x);
            }
        }
    }

    /// Tight ellipticity function: smallest eigenvalue of Q(t, x).
    pub fn nu(&self, t: f64, x: &[f64]) -> f64 {
        let mut m = [0.0f64; 4];
        self.q_matrix(t, x, &mut m[..self.dim * self.dim]);
        sym_min_eig(self.dim, &m)
    }

    /// Drift Jacobian (D_j b_i), row-major.
    pub fn drift_jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (i, bi) in self.b.iter().enumerate() {
            for j in 0..self.dim {
                let mut beta = vec![0usize; self.dim];
                beta[j] = 1;
                out[i * self.dim + j] = bi.deriv(t, x, &beta);
            }
        }
    }

    /// Largest eigenvalue of the symmetrized drift Jacobian: the tight
    /// pointwise dissipativity bound d(t, x).
    pub fn dissipativity_bound(&self, t: f64, x: &[f64]) -> f64 {
        let mut j = [0.0f64; 4];
        self.drift_jacobian(t, x, &mut j[..self.dim * self.dim]);
        let mut s = [0.0f64; 4];
        for a in 0..self.dim {
            for b in 0..self.dim {
                s[a * self.dim + b] = 0.5 * (j[a * self.dim + b] + j[b * self.dim + a]);
            }
        }
        sym_max_eig(self.dim, &s)
    }

    /// Tight drift-derivative majorant: max over |beta| in {2,3} and j of
    /// |D^beta b_j(t,x)|.
    pub fn tight_r(&self, t: f64, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for order in 2..=3 {
            for beta in multi_indices(self.dim, order) {
                for bj in &self.b {
                    worst = worst.max(bj.deriv(t, x, &beta).abs());
                }
            }
        }
        worst
    }

    /// Tight potential-derivative majorant: max over 1 <= |gamma| <= 3 of
    /// |D^gamma c(t,x)|, floored away from zero so that rho >= rho_0 > 0.
    pub fn tight_rho(&self, t: f64, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for order in 1..=3 {
            for gamma in multi_indices(self.dim, order) {
                worst = worst.max(self.c.deriv(t, x, &gamma).abs());
            }
        }
        worst.max(RHO_FLOOR)
    }

    /// A phi for a polynomial phi (exact: polynomial derivatives).
    pub fn apply_to_poly(&self, t: f64, x: &[f64], phi: &Poly) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut beta = vec![0usize; self.dim];
                beta[i] += 1;
                beta[j] += 1;
                acc += self.q[i][j].eval(t, x) * phi.deriv(&beta).eval(x);
            }
        }
        for (j, bj) in self.b.iter().enumerate() {
            let mut beta = vec![0usize; self.dim];
            beta[j] = 1;
            acc += bj.eval(t, x) * phi.deriv(&beta).eval(x);
        }
        acc + self.c.eval(t, x) * phi.eval(x)
    }

    pub fn all_coefficients(&self) -> Vec<&CoeffRef> {
        let mut out: Vec<&CoeffRef> = Vec::new();
        for row in &self.q {
            out.extend(row.iter());
        }
        out.extend(self.b.iter());
        out.push(&self.c);
        out
    }

    pub fn analytic_derivatives(&self) -> bool {
        self.all_coefficients().iter().all(|c| c.analytic_derivatives())
    }
}

/// Floor for the tight potential-derivative majorant; any positive constant is
/// admissible as rho_0 and this one keeps L2 * rho^2 negligible for operators
/// with constant potential.
pub const RHO_FLOOR: f64 = 1e-6;

/// Pointwise A u on the mesh interior, with D_ij u and D_j u reconstructed by
/// fourth-order stencils. The result's margin grows by the stencil width.
pub fn apply_operator(op: &OperatorSpec, t: f64, u: &GridFunction) -> Result<GridFunction> {
    if op.dim != u.mesh.dim {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} vs mesh dim {}",
            op.dim, u.mesh.dim
        )));
    }
    let dim = op.dim;
    let mut acc = GridFunction {
        mesh: u.mesh,
        values: vec![0.0; u.values.len()],
        margin: u.margin,
    };
    let mut x = [0.0f64; 2];
    // second-order terms
    for i in 0..dim {
        for j in 0..dim {
            let mut beta = vec![0usize; dim];
            beta[i] += 1;
            beta[j] += 1;
            let d = stencil::derivative(u, &beta)?;
            acc.margin = acc.margin.max(d.margin);
            for flat in 0..acc.values.len() {
                u.mesh.point(flat, &mut x[..dim]);
                acc.values[flat] += op.q[i][j].eval(t, &x[..dim]) * d.values[flat];
            }
        }
    }
    // drift terms
    for (j, bj) in op.b.iter().enumerate() {
        let mut beta = vec![0usize; dim];
        beta[j] = 1;
        let d = stencil::derivative(u, &beta)?;
        acc.margin = acc.margin.max(d.margin);
        for flat in 0..acc.values.len() {
            u.mesh.point(flat, &mut x[..dim]);
            acc.values[flat] += bj.eval(t, &x[..dim]) * d.values[flat];
        }
    }
    // potential
    for flat in 0..acc.values.len() {
        u.mesh.point(flat, &mut x[..dim]);
        acc.values[flat] += op.c.eval(t, &x[..dim]) * u.values[flat];
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mesh;
    use approx::assert_relative_eq;

    #[test]
    fn heat_operator_nu_is_one() {
        let op = OperatorSpec::heat(2, 1.0);
        assert_relative_eq!(op.nu(0.3, &[1.0, -2.0]), 1.0);
    }

    #[test]
    fn apply_operator_linearity_basics() {
        let op = OperatorSpec::heat(1, 1.0);
        let m = Mesh::new(1, 2.0, 0.05).unwrap();
        let zero = GridFunction::zeros(m);
        let a = apply_operator(&op, 0.0, &zero).unwrap();
        assert!(a.values.iter().all(|v| *v == 0.0));
        // u == 1: A u = c = 0 for heat
        let one = GridFunction::constant(m, 1.0);
        let a = apply_operator(&op, 0.0, &one).unwrap();
        for i in m.indices_within(a.usable_radius()) {
            assert!(a.values[i].abs() < 1e-12);
        }
    }

    #[test]
    fn fd_fallback_accuracy() {
        // d^2/dx^2 of sin at 0.3
        let c = FnCoeff::new(1, |_t, x: &[f64]| x[0].sin());
        let d2 = c.deriv(0.0, &[0.3], &[2]);
        assert!((d2 + 0.3f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn dissipativity_of_rotation_is_zero() {
        // b = (y, -x): skew-symmetric Jacobian
        let bx = FnCoeff::new(2, |_t, x: &[f64]| x[1]);
        let by = FnCoeff::new(2, |_t, x: &[f64]| -x[0]);
        let mut op = OperatorSpec::heat(2, 1.0);
        op.b = vec![bx, by];
        let d = op.dissipativity_bound(0.0, &[0.7, -1.1]);
        assert!(d.abs() < 1e-7, "d = {d}");
    }

    #[test]
    fn dissipativity_of_contraction() {
        let bx = FnCoeff::new(1, |_t, x: &[f64]| -x[0]);
        let mut op = OperatorSpec::heat(1, 1.0);
        op.b = vec![bx];
        assert!((op.dissipativity_bound(0.0, &[2.0]) + 1.0).abs() < 1e-7);
    }
}
