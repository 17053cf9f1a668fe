//! Uniform tensor meshes over truncated balls and functions sampled on them.
//!
//! A mesh covers the box [-R, R]^N with step h (R/h integral). In 2D the ball
//! B(0, R) is carved out of the box by a mask; values outside the ball are
//! stored (zero for solver output) but excluded from every norm. The `margin`
//! of a grid function counts mesh layers near the ball boundary that are not
//! trusted, e.g. because a derivative stencil reached into them.

use crate::error::{Error, Result};
use crate::util::norm2;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

pub const BALL_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: usize,
    pub radius: f64,
    pub step: f64,
    pub pts_per_axis: usize,
}

impl Mesh {
    pub fn new(dim: usize, radius: f64, step: f64) -> Result<Mesh> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::DimensionMismatch(format!("dim {dim} not supported")));
        }
        if radius <= 0.0 || step <= 0.0 {
            return Err(Error::InvalidParameter("radius and step must be positive".into()));
        }
        let n = radius / step;
        if (n - n.round()).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "radius {radius} must be an integer multiple of step {step}"
            )));
        }
        let half = n.round() as usize;
        Ok(Mesh { dim, radius, step, pts_per_axis: 2 * half + 1 })
    }

    pub fn len(&self) -> usize {
        self.pts_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + self.step * i as f64
    }

    /// Grid point for a flat index, written into `out[..dim]`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        match self.dim {
            1 => out[0] = self.coord(flat),
            2 => {
                let p = self.pts_per_axis;
                out[0] = self.coord(flat / p);
                out[1] = self.coord(flat % p);
            }
            _ => unreachable!(),
        }
    }

    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        debug_assert_eq!(self.dim, 2);
        ix * self.pts_per_axis + iy
    }

    pub fn in_ball(&self, x: &[f64]) -> bool {
        norm2(x) <= self.radius + BALL_EPS
    }

    /// Flat indices of points with |x| <= r (and inside the ball).
    pub fn indices_within(&self, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = [0.0f64; 2];
        for flat in 0..self.len() {
            self.point(flat, &mut x[..self.dim]);
            if norm2(&x[..self.dim]) <= r + BALL_EPS {
                out.push(flat);
            }
        }
        out
    }

    /// Same mesh geometry (used when combining frames).
    pub fn same_geometry(&self, other: &Mesh) -> bool {
        self.dim == other.dim
            && self.pts_per_axis == other.pts_per_axis
            && (self.radius - other.radius).abs() < 1e-12
            && (self.step - other.step).abs() < 1e-12
    }
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    pub margin: usize,
}

impl GridFunction {
    pub fn zeros(mesh: Mesh) -> GridFunction {
        GridFunction { mesh, values: vec![0.0; mesh.len()], margin: 0 }
    }

    pub fn constant(mesh: Mesh, c: f64) -> GridFunction {
        GridFunction { mesh, values: vec![c; mesh.len()], margin: 0 }
    }

    /// Sample a function over the whole box (including outside the ball in 2D).
    pub fn sample<F: Fn(&[f64]) -> f64>(mesh: Mesh, f: F) -> GridFunction {
        let mut values = vec![0.0; mesh.len()];
        let mut x = [0.0f64; 2];
        for (flat, v) in values.iter_mut().enumerate() {
            mesh.point(flat, &mut x[..mesh.dim]);
            *v = f(&x[..mesh.dim]);
        }
        GridFunction { mesh, values, margin: 0 }
    }

    /// Largest radius on which values are trusted.
    pub fn usable_radius(&self) -> f64 {
        self.mesh.radius - self.margin as f64 * self.mesh.step
    }

    pub fn check_region(&self, r_eval: f64) -> Result<()> {
        if r_eval > self.usable_radius() + BALL_EPS {
            return Err(Error::EmptyRegion { requested: r_eval, usable: self.usable_radius() });
        }
        Ok(())
    }

    pub fn assert_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("grid function contains NaN/Inf".into()))
        }
    }

    /// self + s * other, pointwise, on identical meshes.
    pub fn axpy(&self, s: f64, other: &GridFunction) -> GridFunction {
        assert!(self.mesh.same_geometry(&other.mesh));
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + s * b)
            .collect();
        GridFunction { mesh: self.mesh, values, margin: self.margin.max(other.margin) }
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        GridFunction {
            mesh: self.mesh,
            values: self.values.iter().map(|v| v * s).collect(),
            margin: self.margin,
        }
    }

    /// Max |self - other| over common points with |x| <= r.
    pub fn sup_diff_within(&self, other: &GridFunction, r: f64) -> f64 {
        assert!(self.mesh.same_geometry(&other.mesh));
        let mut worst = 0.0f64;
        for flat in self.mesh.indices_within(r) {
            worst = worst.max((self.values[flat] - other.values[flat]).abs());
        }
        worst
    }

    /// Restrict a function living on a larger concentric mesh to `target`
    /// (same step, smaller radius). Mesh points coincide by construction.
    pub fn restrict_to(&self, target: Mesh) -> Result<GridFunction> {
        if (self.mesh.step - target.step).abs() > 1e-12 || target.radius > self.mesh.radius + BALL_EPS
        {
            return Err(Error::DimensionMismatch("restriction needs a nested finer-radius mesh".into()));
        }
        let offset = ((self.mesh.radius - target.radius) / self.mesh.step).round() as usize;
        let mut out = GridFunction::zeros(target);
        match target.dim {
            1 => {
                for i in 0..target.pts_per_axis {
                    out.values[i] = self.values[i + offset];
                }
            }
            2 => {
                for ix in 0..target.pts_per_axis {
                    for iy in 0..target.pts_per_axis {
                        out.values[target.flat(ix, iy)] =
                            self.values[self.mesh.flat(ix + offset, iy + offset)];
                    }
                }
            }
            _ => unreachable!(),
        }
        out.margin = self.margin;
        Ok(out)
    }

    /// Write values as a CSV block next to a JSON sidecar with the mesh data.
    pub fn save(&self, base: &Path) -> std::io::Result<()> {
        let sidecar = Sidecar {
            dim: self.mesh.dim,
            radius: self.mesh.radius,
            step: self.mesh.step,
            margin: self.margin,
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        std::fs::write(base.with_extension("json"), json)?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(base.with_extension("csv"))?);
        for v in &self.values {
            writeln!(w, "{v:.17e}")?;
        }
        Ok(())
    }

    pub fn load(base: &Path) -> std::io::Result<GridFunction> {
        let sidecar: Sidecar =
            serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let mesh = Mesh::new(sidecar.dim, sidecar.radius, sidecar.step)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))?;
        let file = std::fs::File::open(base.with_extension("csv"))?;
        let mut values = Vec::with_capacity(mesh.len());
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            values.push(line.trim().parse::<f64>().map_err(|e| {
                std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())
            })?);
        }
        if values.len() != mesh.len() {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "value count does not match mesh",
            ));
        }
        Ok(GridFunction { mesh, values, margin: sidecar.margin })
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    dim: usize,
    radius: f64,
    step: f64,
    margin: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_spans_exactly() {
        let m = Mesh::new(1, 4.0, 0.5).unwrap();
        assert_eq!(m.pts_per_axis, 17);
        // h * (points per axis - 1) spans exactly 2R
        assert_relative_eq!(m.step * (m.pts_per_axis - 1) as f64, 2.0 * m.radius);
        assert_relative_eq!(m.coord(0), -4.0);
        assert_relative_eq!(m.coord(16), 4.0);
    }

    #[test]
    fn rejects_non_divisible_radius() {
        assert!(Mesh::new(1, 4.0, 0.3).is_err());
    }

    #[test]
    fn restriction_matches_sampling() {
        let big = Mesh::new(1, 8.0, 0.25).unwrap();
        let small = Mesh::new(1, 4.0, 0.25).unwrap();
        let f = GridFunction::sample(big, |x| x[0].sin());
        let g = f.restrict_to(small).unwrap();
        let direct = GridFunction::sample(small, |x| x[0].sin());
        assert!(g.sup_diff_within(&direct, 4.0) < 1e-15);
    }

    #[test]
    fn ball_mask_2d() {
        let m = Mesh::new(2, 2.0, 1.0).unwrap();
        // corner (2, 2) is outside the ball, axis point (2, 0) is on it
        assert!(!m.in_ball(&[2.0, 2.0]));
        assert!(m.in_ball(&[2.0, 0.0]));
        let inside = m.indices_within(2.0);
        assert_eq!(inside.len(), 13);
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = std::env::temp_dir().join("schauder_grid_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let m = Mesh::new(1, 2.0, 0.5).unwrap();
        let mut f = GridFunction::sample(m, |x| x[0] * x[0]);
        f.margin = 2;
        let base = dir.join("frame");
        f.save(&base).unwrap();
        let g = GridFunction::load(&base).unwrap();
        assert_eq!(g.margin, 2);
        assert!(f.sup_diff_within(&g, 2.0) == 0.0);
    }
}
