//! The polynomial-growth operator family
//!   q_ij = (1+|x|^2)^p q0_ij(t),  b_j = b0(t) x_j (1+|x|^2)^q,
//!   c = c0(t) - |x|^{2r},
//! with bounded elliptic base diffusion, negative drift profile and p <= q.
//! All spatial derivatives come out of the polynomial weights exactly.

use crate::error::{Error, Result};
use crate::operator::{CoeffRef, LyapunovSpec, OperatorSpec, PolyMeta, SeparableCoeff, SumCoeff};
use crate::poly::Poly;
use crate::profile::TimeProfile;
use crate::util::multi_indices;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct PolyExampleSpec {
    pub dim: usize,
    pub horizon: f64,
    pub p: u32,
    pub q: u32,
    pub r: u32,
    /// symmetric base diffusion profiles
    pub q0: Vec<Vec<TimeProfile>>,
    /// drift profile, negative on [0, T] (continuous regime) or a.e. (measurable)
    pub b0: TimeProfile,
    /// bounded base potential profile
    pub c0: TimeProfile,
    /// ellipticity floor of the base diffusion
    pub nu0: f64,
    /// measurable-in-time regime flag
    pub measurable: bool,
}

impl PolyExampleSpec {
    /// Ornstein-Uhlenbeck-type instance: p = q = r = 0, Q0 = I, b0 = -1, c0 = 0.
    pub fn ornstein_uhlenbeck(dim: usize, horizon: f64) -> PolyExampleSpec {
        let q0 = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| TimeProfile::Constant(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        PolyExampleSpec {
            dim,
            horizon,
            p: 0,
            q: 0,
            r: 0,
            q0,
            b0: TimeProfile::Constant(-1.0),
            c0: TimeProfile::Constant(0.0),
            nu0: 1.0,
            measurable: false,
        }
    }
}

pub fn build_poly_example(spec: &PolyExampleSpec) -> Result<OperatorSpec> {
    if spec.p > spec.q {
        return Err(Error::SpecRejected(format!(
            "p <= q violated (p = {}, q = {})",
            spec.p, spec.q
        )));
    }
    let samples = 512;
    let b0_sup = (0..=samples)
        .map(|i| spec.b0.eval(spec.horizon * i as f64 / samples as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    if b0_sup >= 0.0 {
        return Err(Error::SpecRejected(format!(
            "drift profile must be negative (sampled sup {b0_sup})"
        )));
    }
    for i in 0..spec.dim {
        for j in 0..i {
            for k in 0..=16 {
                let t = spec.horizon * k as f64 / 16.0;
                if (spec.q0[i][j].eval(t) - spec.q0[j][i].eval(t)).abs() > 1e-12 {
                    return Err(Error::SpecRejected("base diffusion must be symmetric".into()));
                }
            }
        }
    }
    if spec.nu0 <= 0.0 {
        return Err(Error::SpecRejected("ellipticity floor must be positive".into()));
    }
    Ok(assemble(spec))
}

/// Assemble without validation; used for deliberately broken study operators.
pub fn build_poly_example_unchecked(spec: &PolyExampleSpec) -> OperatorSpec {
    assemble(spec)
}

fn assemble(spec: &PolyExampleSpec) -> OperatorSpec {
    let dim = spec.dim;
    let wp = Poly::weight(dim, spec.p);
    let wq = Poly::weight(dim, spec.q);
    let radial = Poly::radial_even(dim, spec.r);

    let q: Vec<Vec<CoeffRef>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| SeparableCoeff::new(spec.q0[i][j].clone(), wp.clone()))
                .collect()
        })
        .collect();
    let b: Vec<CoeffRef> = (0..dim)
        .map(|j| SeparableCoeff::new(spec.b0.clone(), Poly::var(dim, j).mul(&wq)))
        .collect();
    let c: CoeffRef = Arc::new(SumCoeff(vec![
        SeparableCoeff::new(spec.c0.clone(), Poly::constant(dim, 1.0)),
        SeparableCoeff::new(TimeProfile::Constant(-1.0), radial.clone()),
    ]));

    let t_grid: Vec<f64> = (0..=64).map(|i| spec.horizon * i as f64 / 64.0).collect();
    let b0_sup = t_grid.iter().map(|&t| spec.b0.eval(t)).fold(f64::NEG_INFINITY, f64::max);
    let c0_sup = t_grid.iter().map(|&t| spec.c0.eval(t)).fold(f64::NEG_INFINITY, f64::max);
    let c0_sup_abs = t_grid.iter().map(|&t| spec.c0.eval(t).abs()).fold(0.0, f64::max);
    let q0_sup = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .flat_map(|(i, j)| t_grid.iter().map(move |&t| spec.q0[i][j].eval(t).abs()))
        .fold(0.0, f64::max);
    let tr_q0_sup = t_grid
        .iter()
        .map(|&t| (0..dim).map(|i| spec.q0[i][i].eval(t)).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);

    let kappa1 = b0_abs_sup(spec, &t_grid) * drift_shape_ratio(dim, spec.q, &wq);
    let kappa2 = potential_shape_ratio(dim, spec.r, &radial);
    let kappa3 = kappa3_scan(spec, tr_q0_sup, b0_sup);
    let lambda = c0_sup_abs + kappa3;

    let ceiling = c0_sup - if spec.r == 0 { 1.0 } else { 0.0 };

    OperatorSpec {
        dim,
        horizon: spec.horizon,
        q,
        b,
        c,
        nu0: spec.nu0,
        c0: ceiling,
        lyapunov: Some(LyapunovSpec { phi: Poly::weight(dim, 1), lambda }),
        poly_meta: Some(PolyMeta {
            p: spec.p,
            q: spec.q,
            r: spec.r,
            nu0: spec.nu0,
            b0_sup,
            q0_sup,
            c0_sup_abs,
            kappa1,
            kappa2,
            kappa3,
        }),
        label: format!("poly(p={},q={},r={})", spec.p, spec.q, spec.r),
    }
}

fn b0_abs_sup(spec: &PolyExampleSpec, t_grid: &[f64]) -> f64 {
    t_grid.iter().map(|&t| spec.b0.eval(t).abs()).fold(0.0, f64::max)
}

/// Deterministic scan positions: dense near the origin, logarithmic out to
/// large radii (ratios of the polynomial-growth family stabilize well before).
fn scan_radii() -> Vec<f64> {
    let mut rs: Vec<f64> = (0..=1024).map(|i| i as f64 / 128.0).collect();
    let mut r = 8.0f64;
    while r < 1.0e4 {
        r *= 1.07;
        rs.push(r);
    }
    rs
}

fn scan_points(dim: usize) -> Vec<Vec<f64>> {
    let radii = scan_radii();
    match dim {
        1 => radii.iter().map(|&r| vec![r]).collect(),
        2 => {
            let dirs = 16;
            radii
                .iter()
                .flat_map(|&r| {
                    (0..dirs).map(move |k| {
                        let th = std::f64::consts::PI * k as f64 / dirs as f64;
                        vec![r * th.cos(), r * th.sin()]
                    })
                })
                .collect()
        }
        _ => unreachable!(),
    }
}

/// sup_x max_{|beta| in {2,3}, j} |D^beta (x_j w_q)| / w_q
fn drift_shape_ratio(dim: usize, _q: u32, wq: &Poly) -> f64 {
    let mut worst = 0.0f64;
    let shapes: Vec<Poly> = (0..dim).map(|j| Poly::var(dim, j).mul(wq)).collect();
    for x in scan_points(dim) {
        let w = wq.eval(&x);
        for shape in &shapes {
            for order in 2..=3 {
                for beta in multi_indices(dim, order) {
                    worst = worst.max(shape.deriv(&beta).eval(&x).abs() / w);
                }
            }
        }
    }
    worst
}

/// sup_x max_{1 <= |gamma| <= 3} |D^gamma |x|^{2r}| / (1+|x|^2)^r
fn potential_shape_ratio(dim: usize, r: u32, radial: &Poly) -> f64 {
    let wr = Poly::weight(dim, r);
    let mut worst = 0.0f64;
    for x in scan_points(dim) {
        let w = wr.eval(&x);
        for order in 1..=3 {
            for gamma in multi_indices(dim, order) {
                worst = worst.max(radial.deriv(&gamma).eval(&x).abs() / w);
            }
        }
    }
    worst
}

/// sup_x [ 2 Tr(Q0)_sup w^p + 2 b0_sup |x|^2 w^q - |x|^{2r} w ], the constant
/// absorbed into the Lyapunov rate lambda = ||c0|| + kappa3.
fn kappa3_scan(spec: &PolyExampleSpec, tr_q0_sup: f64, b0_sup: f64) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for rad in scan_radii() {
        let s = rad * rad; // |x|^2
        let w = 1.0 + s;
        let v = 2.0 * tr_q0_sup * w.powi(spec.p as i32)
            + 2.0 * b0_sup * s * w.powi(spec.q as i32)
            - s.powi(spec.r as i32) * w;
        worst = worst.max(v);
    }
    worst
}

/// Envelope of A phi - lambda phi for phi = 1 + |x|^2 as a polynomial in
/// w = 1 + |x|^2 >= 1; exact asymptotics for the family.
pub fn lyapunov_envelope(meta: &PolyMeta, tr_q0_sup_bound: f64, lambda: f64) -> Poly {
    let w = Poly::var(1, 0);
    let one = Poly::constant(1, 1.0);
    let s = w.sub(&one); // |x|^2 = w - 1
    let mut e = w.pow(meta.p).scale(2.0 * tr_q0_sup_bound);
    e = e.add(&s.mul(&w.pow(meta.q)).scale(2.0 * meta.b0_sup));
    e = e.sub(&s.pow(meta.r).mul(&w));
    e = e.add(&w.scale(meta.c0_sup_abs - lambda));
    e
}

/// Bounded above on [1, infinity)?
pub fn poly_bounded_above(p: &Poly) -> bool {
    if p.is_zero() || p.degree() == 0 {
        return true;
    }
    // leading coefficient in the single variable
    let d = p.degree();
    let lead = {
        let mut probe = p.clone();
        for _ in 0..d {
            probe = probe.partial(0);
        }
        probe.eval(&[0.0]) / (1..=d).product::<usize>() as f64
    };
    lead < 0.0
}
