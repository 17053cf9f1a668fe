//! Fourth-order central finite-difference stencils on grid functions.
//!
//! Derivatives near the ball boundary are never produced: each application
//! widens the margin by the stencil half-width, and evaluation regions must
//! stay inside the trimmed mesh.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// (offsets, weights, half-width) for d^k/dx^k, fourth-order accurate.
fn stencil(order: usize) -> (&'static [isize], &'static [f64], usize) {
    match order {
        1 => (
            &[-2, -1, 1, 2],
            &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0],
            2,
        ),
        2 => (
            &[-2, -1, 0, 1, 2],
            &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
            2,
        ),
        3 => (
            &[-3, -2, -1, 1, 2, 3],
            &[1.0 / 8.0, -8.0 / 8.0, 13.0 / 8.0, -13.0 / 8.0, 8.0 / 8.0, -1.0 / 8.0],
            3,
        ),
        _ => panic!("stencils cover derivative orders 1..=3"),
    }
}

/// Single-axis derivative of the given order.
pub fn derivative_axis(f: &GridFunction, axis: usize, order: usize) -> Result<GridFunction> {
    if order == 0 {
        return Ok(f.clone());
    }
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!("derivative order {order} > 3")));
    }
    let mesh = f.mesh;
    if axis >= mesh.dim {
        return Err(Error::DimensionMismatch(format!("axis {axis} on {}D mesh", mesh.dim)));
    }
    let (offsets, weights, hw) = stencil(order);
    let p = mesh.pts_per_axis;
    let new_margin = f.margin + hw;
    if 2 * new_margin >= p {
        return Err(Error::InsufficientMargin(format!(
            "margin {new_margin} exceeds mesh half-width ({p} points per axis)"
        )));
    }
    let scale = 1.0 / mesh.step.powi(order as i32);
    let mut out = vec![0.0; f.values.len()];
    match mesh.dim {
        1 => {
            for i in hw..p - hw {
                let mut acc = 0.0;
                for (o, w) in offsets.iter().zip(weights) {
                    acc += w * f.values[(i as isize + o) as usize];
                }
                out[i] = acc * scale;
            }
        }
        2 => {
            let stride = if axis == 0 { p as isize } else { 1 };
            for ix in 0..p {
                for iy in 0..p {
                    let (a, b) = if axis == 0 { (ix, iy) } else { (iy, ix) };
                    if a < hw || a >= p - hw {
                        continue;
                    }
                    let _ = b;
                    let flat = mesh.flat(ix, iy) as isize;
                    let mut acc = 0.0;
                    for (o, w) in offsets.iter().zip(weights) {
                        acc += w * f.values[(flat + o * stride) as usize];
                    }
                    out[mesh.flat(ix, iy)] = acc * scale;
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(GridFunction { mesh, values: out, margin: new_margin })
}

/// D^beta via successive single-axis applications; margin grows per axis.
pub fn derivative(f: &GridFunction, beta: &[usize]) -> Result<GridFunction> {
    if beta.len() != f.mesh.dim {
        return Err(Error::DimensionMismatch("multi-index length != mesh dim".into()));
    }
    let total: usize = beta.iter().sum();
    if total > 3 {
        return Err(Error::InvalidParameter(format!("derivative order {total} > 3")));
    }
    let mut g = f.clone();
    for (axis, &k) in beta.iter().enumerate() {
        if k > 0 {
            g = derivative_axis(&g, axis, k)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridFunction, Mesh};

    #[test]
    fn second_derivative_exact_on_quadratics() {
        let m = Mesh::new(1, 4.0, 0.25).unwrap();
        let f = GridFunction::sample(m, |x| x[0] * x[0]);
        let d2 = derivative(&f, &[2]).unwrap();
        for i in m.indices_within(d2.usable_radius()) {
            assert!((d2.values[i] - 2.0).abs() < 1e-11, "at {i}: {}", d2.values[i]);
        }
    }

    #[test]
    fn third_derivative_of_exponential() {
        let m = Mesh::new(1, 2.0, 0.01).unwrap();
        let f = GridFunction::sample(m, |x| x[0].exp());
        let d3 = derivative(&f, &[3]).unwrap();
        let mut x = [0.0];
        for i in m.indices_within(1.0) {
            m.point(i, &mut x);
            let rel = (d3.values[i] - x[0].exp()).abs() / x[0].exp();
            assert!(rel < 1e-6, "rel error {rel} at x={}", x[0]);
        }
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let m = Mesh::new(1, 2.0, 0.1).unwrap();
        let f = GridFunction::constant(m, 42.0);
        for k in 1..=3 {
            let d = derivative(&f, &[k]).unwrap();
            assert!(d.values.iter().all(|v| v.abs() < 1e-10));
        }
    }

    #[test]
    fn mixed_derivative_2d() {
        // D_xy of x^2 y equals 2x
        let m = Mesh::new(2, 2.0, 0.125).unwrap();
        let f = GridFunction::sample(m, |x| x[0] * x[0] * x[1]);
        let d = derivative(&f, &[1, 1]).unwrap();
        let mut x = [0.0, 0.0];
        for i in m.indices_within(d.usable_radius()) {
            m.point(i, &mut x);
            assert!((d.values[i] - 2.0 * x[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn margin_accumulates() {
        let m = Mesh::new(1, 2.0, 0.1).unwrap();
        let f = GridFunction::sample(m, |x| x[0].sin());
        let d3 = derivative(&f, &[3]).unwrap();
        assert_eq!(d3.margin, 3);
        let dd = derivative_axis(&d3, 0, 2).unwrap();
        assert_eq!(dd.margin, 5);
    }

    #[test]
    fn refuses_tiny_mesh() {
        let m = Mesh::new(1, 1.0, 0.25).unwrap(); // 9 points per axis
        let f = GridFunction::sample(m, |x| x[0]);
        let d = derivative(&f, &[3]).unwrap(); // margin 3 of 4 usable: ok
        assert!(derivative_axis(&d, 0, 3).is_err()); // margin 6 of 4: fails
    }
}
