//! Discrete sup norms, Hölder seminorms and C^{k+α} norms of grid functions.
//!
//! Seminorms are taken over point pairs at distance at most 1 (an equivalent
//! norm; pairs further apart are controlled by twice the sup norm). When the
//! full pair set is too large, a seeded stratified sample biased toward small
//! distances is drawn once per mesh, so that shrinking the evaluation region
//! only ever filters a fixed pair set and estimates stay monotone in the
//! region.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, Mesh, BALL_EPS};
use crate::par;
use crate::stencil::derivative;
use crate::util::{multi_indices_up_to, norm2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Max |f| over mesh points in B(0, r_eval).
pub fn sup_norm(f: &GridFunction, r_eval: f64) -> Result<f64> {
    f.check_region(r_eval)?;
    let idx = f.mesh.indices_within(r_eval);
    if idx.is_empty() {
        return Err(Error::EmptyRegion { requested: r_eval, usable: f.usable_radius() });
    }
    Ok(par::max_over(idx.len(), |k| f.values[idx[k]].abs()))
}

#[derive(Clone, Debug)]
pub struct Pair {
    pub a: usize,
    pub b: usize,
    pub dist: f64,
    /// max of the two point radii, for region filtering
    pub radius: f64,
}

/// Point pairs with 0 < |x - y| <= 1 over the usable region of a mesh.
///
/// All pairs are enumerated when their number is at most `cap`; otherwise a
/// deterministic stratified sample (dyadic distance classes, `cap` pairs in
/// total) is drawn with the given seed.
pub struct PairSet {
    pub pairs: Vec<Pair>,
    pub exhaustive: bool,
}

impl PairSet {
    pub fn build(mesh: &Mesh, margin: usize, cap: usize, seed: u64) -> PairSet {
        let usable = mesh.radius - margin as f64 * mesh.step;
        let max_offset = (1.0 / mesh.step + BALL_EPS).floor() as isize;
        let idx = mesh.indices_within(usable);
        let radius_of = |flat: usize| -> f64 {
            let mut x = [0.0f64; 2];
            mesh.point(flat, &mut x[..mesh.dim]);
            norm2(&x[..mesh.dim])
        };
        match mesh.dim {
            1 => {
                let n = idx.len();
                let offmax = (max_offset as usize).min(n.saturating_sub(1));
                let total: usize = (1..=offmax).map(|k| n - k).sum();
                if total <= cap {
                    let mut pairs = Vec::with_capacity(total);
                    for k in 1..=offmax {
                        let d = k as f64 * mesh.step;
                        for i in 0..n - k {
                            let (a, b) = (idx[i], idx[i + k]);
                            pairs.push(Pair { a, b, dist: d, radius: radius_of(a).max(radius_of(b)) });
                        }
                    }
                    return PairSet { pairs, exhaustive: true };
                }
                // Dyadic strata over the index offset.
                let mut bins: Vec<(usize, usize)> = Vec::new();
                let mut lo = 1usize;
                while lo <= offmax {
                    let hi = (2 * lo - 1).min(offmax);
                    bins.push((lo, hi));
                    lo = 2 * lo;
                }
                let per_bin = cap / bins.len().max(1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pairs = Vec::with_capacity(cap);
                for (lo, hi) in bins {
                    let bin_total: usize = (lo..=hi).map(|k| n - k).sum();
                    if bin_total <= per_bin {
                        for k in lo..=hi {
                            let d = k as f64 * mesh.step;
                            for i in 0..n - k {
                                let (a, b) = (idx[i], idx[i + k]);
                                pairs.push(Pair {
                                    a,
                                    b,
                                    dist: d,
                                    radius: radius_of(a).max(radius_of(b)),
                                });
                            }
                        }
                    } else {
                        for _ in 0..per_bin {
                            let k = rng.gen_range(lo..=hi);
                            let i = rng.gen_range(0..n - k);
                            let (a, b) = (idx[i], idx[i + k]);
                            pairs.push(Pair {
                                a,
                                b,
                                dist: k as f64 * mesh.step,
                                radius: radius_of(a).max(radius_of(b)),
                            });
                        }
                    }
                }
                PairSet { pairs, exhaustive: false }
            }
            2 => {
                // Lexicographically positive offsets with |o| h <= 1.
                let mut offsets: Vec<(isize, isize, f64)> = Vec::new();
                for dx in 0..=max_offset {
                    for dy in -max_offset..=max_offset {
                        if dx == 0 && dy <= 0 {
                            continue;
                        }
                        let d = mesh.step * ((dx * dx + dy * dy) as f64).sqrt();
                        if d <= 1.0 + BALL_EPS {
                            offsets.push((dx, dy, d));
                        }
                    }
                }
                let p = mesh.pts_per_axis as isize;
                let in_region = |flat: usize| radius_of(flat) <= usable + BALL_EPS;
                let approx_total = idx.len().saturating_mul(offsets.len());
                if approx_total <= cap {
                    let mut pairs = Vec::new();
                    for &a in &idx {
                        let (ix, iy) = ((a as isize) / p, (a as isize) % p);
                        for &(dx, dy, d) in &offsets {
                            let (jx, jy) = (ix + dx, iy + dy);
                            if jx < 0 || jy < 0 || jx >= p || jy >= p {
                                continue;
                            }
                            let b = (jx * p + jy) as usize;
                            if in_region(b) {
                                pairs.push(Pair {
                                    a,
                                    b,
                                    dist: d,
                                    radius: radius_of(a).max(radius_of(b)),
                                });
                            }
                        }
                    }
                    return PairSet { pairs, exhaustive: true };
                }
                let mut bins: Vec<Vec<usize>> = Vec::new();
                let mut lo = 1.0f64;
                loop {
                    let hi = 2.0 * lo;
                    let members: Vec<usize> = offsets
                        .iter()
                        .enumerate()
                        .filter(|(_, o)| {
                            let k = o.2 / mesh.step;
                            k >= lo - 1e-12 && k < hi
                        })
                        .map(|(i, _)| i)
                        .collect();
                    if !members.is_empty() {
                        bins.push(members);
                    }
                    lo = hi;
                    if lo > max_offset as f64 + 1.0 {
                        break;
                    }
                }
                let per_bin = cap / bins.len().max(1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pairs = Vec::with_capacity(cap);
                for members in bins {
                    let mut taken = 0usize;
                    let mut attempts = 0usize;
                    while taken < per_bin && attempts < 50 * per_bin {
                        attempts += 1;
                        let (dx, dy, d) = offsets[members[rng.gen_range(0..members.len())]];
                        let a = idx[rng.gen_range(0..idx.len())];
                        let (ix, iy) = ((a as isize) / p, (a as isize) % p);
                        let (jx, jy) = (ix + dx, iy + dy);
                        if jx < 0 || jy < 0 || jx >= p || jy >= p {
                            continue;
                        }
                        let b = (jx * p + jy) as usize;
                        if !in_region(b) {
                            continue;
                        }
                        pairs.push(Pair { a, b, dist: d, radius: radius_of(a).max(radius_of(b)) });
                        taken += 1;
                    }
                }
                PairSet { pairs, exhaustive: false }
            }
            _ => unreachable!(),
        }
    }
}

/// sup |f(x)-f(y)| / |x-y|^alpha over sampled pairs with both ends in B(0, r_eval).
pub fn holder_seminorm(
    f: &GridFunction,
    alpha: f64,
    r_eval: f64,
    pair_cap: usize,
    seed: u64,
) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("holder exponent {alpha} not in (0,1)")));
    }
    f.check_region(r_eval)?;
    let set = PairSet::build(&f.mesh, f.margin, pair_cap, seed);
    let pairs: Vec<&Pair> = set
        .pairs
        .iter()
        .filter(|p| p.radius <= r_eval + BALL_EPS)
        .collect();
    if pairs.is_empty() {
        return Ok(0.0);
    }
    Ok(par::max_over(pairs.len(), |k| {
        let p = pairs[k];
        (f.values[p.a] - f.values[p.b]).abs() / p.dist.powf(alpha)
    }))
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderNormEstimate {
    pub k: usize,
    pub alpha: f64,
    pub r_eval: f64,
    pub value: f64,
    /// (multi-index, sup norm of that derivative)
    pub sup_terms: Vec<(Vec<usize>, f64)>,
    /// combined top-order seminorm (0 when alpha = 0)
    pub seminorm: f64,
}

/// C^{k+alpha} norm: sum of derivative sup norms up to order k plus the
/// alpha-seminorms of the order-k derivatives. `alpha = 0` gives the plain
/// C^k norm with no seminorm term.
pub fn ck_alpha_norm(
    f: &GridFunction,
    k: usize,
    alpha: f64,
    r_eval: f64,
    pair_cap: usize,
    seed: u64,
) -> Result<HolderNormEstimate> {
    if k > 3 {
        return Err(Error::InvalidParameter(format!("derivative order {k} > 3")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("exponent {alpha} not in [0,1)")));
    }
    let mut sup_terms = Vec::new();
    let mut seminorm = 0.0f64;
    let mut top_derivs: Vec<GridFunction> = Vec::new();
    for beta in multi_indices_up_to(f.mesh.dim, k) {
        let order: usize = beta.iter().sum();
        let d = if order == 0 { f.clone() } else { derivative(f, &beta)? };
        d.check_region(r_eval)?;
        let s = sup_norm(&d, r_eval)?;
        sup_terms.push((beta.clone(), s));
        if order == k {
            top_derivs.push(d);
        }
    }
    if alpha > 0.0 {
        for d in &top_derivs {
            seminorm += holder_seminorm(d, alpha, r_eval, pair_cap, seed)?;
        }
    }
    let value = sup_terms.iter().map(|(_, s)| s).sum::<f64>() + seminorm;
    Ok(HolderNormEstimate { k, alpha, r_eval, value, sup_terms, seminorm })
}

/// C^beta norm for fractional or integer beta in [0, 3+1): splits into integer
/// order and fractional exponent.
pub fn fractional_norm(
    f: &GridFunction,
    beta: f64,
    r_eval: f64,
    pair_cap: usize,
    seed: u64,
) -> Result<HolderNormEstimate> {
    let k = beta.floor() as usize;
    let alpha = beta - k as f64;
    ck_alpha_norm(f, k, alpha, r_eval, pair_cap, seed)
}

/// Larger of the two interpolation ratios
///   ||f||_{C^1} / (||f||^{(1+t)/(2+t)} ||f||_{C^{2+t}}^{1/(2+t)})
///   ||f||_{C^2} / (||f||^{t/(2+t)}     ||f||_{C^{2+t}}^{2/(2+t)})
/// with t = theta; zero for f == 0 by convention.
pub fn interpolation_ratio(
    f: &GridFunction,
    theta: f64,
    r_eval: f64,
    pair_cap: usize,
    seed: u64,
) -> Result<f64> {
    let n0 = sup_norm(f, r_eval)?;
    if n0 == 0.0 {
        return Ok(0.0);
    }
    let n1 = ck_alpha_norm(f, 1, 0.0, r_eval, pair_cap, seed)?.value;
    let n2 = ck_alpha_norm(f, 2, 0.0, r_eval, pair_cap, seed)?.value;
    let n2t = ck_alpha_norm(f, 2, theta, r_eval, pair_cap, seed)?.value;
    let e = 2.0 + theta;
    let r1 = n1 / (n0.powf((1.0 + theta) / e) * n2t.powf(1.0 / e));
    let r2 = n2 / (n0.powf(theta / e) * n2t.powf(2.0 / e));
    Ok(r1.max(r2))
}
