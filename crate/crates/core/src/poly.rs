//! Multivariate polynomials with exact differentiation.
//!
//! Coefficient fields of the polynomial-growth operator family are products of
//! bounded time profiles and polynomial weights in x; keeping the weights as
//! explicit polynomials makes every spatial derivative exact.

use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    dim: usize,
    /// Sorted exponent vector -> coefficient, zero coefficients dropped.
    terms: BTreeMap<Vec<usize>, f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly { dim, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Poly::zero(dim);
        if c != 0.0 {
            p.terms.insert(vec![0; dim], c);
        }
        p
    }

    /// The coordinate monomial x_axis.
    pub fn var(dim: usize, axis: usize) -> Self {
        let mut e = vec![0; dim];
        e[axis] = 1;
        let mut p = Poly::zero(dim);
        p.terms.insert(e, 1.0);
        p
    }

    /// |x|^2 = sum x_i^2.
    pub fn radius_sq(dim: usize) -> Self {
        let mut p = Poly::zero(dim);
        for axis in 0..dim {
            let mut e = vec![0; dim];
            e[axis] = 2;
            p.terms.insert(e, 1.0);
        }
        p
    }

    /// (1 + |x|^2)^p.
    pub fn weight(dim: usize, p: u32) -> Self {
        let base = Poly::constant(dim, 1.0).add(&Poly::radius_sq(dim));
        base.pow(p)
    }

    /// (|x|^2)^r; the constant 1 for r = 0.
    pub fn radial_even(dim: usize, r: u32) -> Self {
        Poly::radius_sq(dim).pow(r)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            let v = out.terms.entry(e.clone()).or_insert(0.0);
            *v += c;
            if *v == 0.0 {
                out.terms.remove(e);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Poly {
        if s == 0.0 {
            return Poly::zero(self.dim);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<usize> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                let v = out.terms.entry(e.clone()).or_insert(0.0);
                *v += ca * cb;
                if *v == 0.0 {
                    out.terms.remove(&e);
                }
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut out = Poly::constant(self.dim, 1.0);
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    pub fn partial(&self, axis: usize) -> Poly {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[axis] == 0 {
                continue;
            }
            let mut en = e.clone();
            en[axis] -= 1;
            let v = out.terms.entry(en.clone()).or_insert(0.0);
            *v += c * e[axis] as f64;
            if *v == 0.0 {
                out.terms.remove(&en);
            }
        }
        out
    }

    /// D^beta applied as repeated partials.
    pub fn deriv(&self, beta: &[usize]) -> Poly {
        assert_eq!(beta.len(), self.dim);
        let mut out = self.clone();
        for (axis, &k) in beta.iter().enumerate() {
            for _ in 0..k {
                out = out.partial(axis);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for (e, c) in &self.terms {
            let mut m = *c;
            for (axis, &k) in e.iter().enumerate() {
                m *= x[axis].powi(k as i32);
            }
            acc += m;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_eval_1d() {
        // (1+x^2)^2 at x=2 -> 25
        let w = Poly::weight(1, 2);
        assert_relative_eq!(w.eval(&[2.0]), 25.0);
        assert_eq!(w.degree(), 4);
    }

    #[test]
    fn deriv_matches_hand_computation() {
        // d/dx [x (1+x^2)] = 1 + 3x^2
        let p = Poly::var(1, 0).mul(&Poly::weight(1, 1));
        let d = p.deriv(&[1]);
        assert_relative_eq!(d.eval(&[2.0]), 13.0);
    }

    #[test]
    fn mixed_partials_2d() {
        // p = x^2 y, D_xy p = 2x
        let p = Poly::var(2, 0).pow(2).mul(&Poly::var(2, 1));
        let d = p.deriv(&[1, 1]);
        assert_relative_eq!(d.eval(&[3.0, 7.0]), 6.0);
    }

    #[test]
    fn radial_even_r0_is_one() {
        let p = Poly::radial_even(1, 0);
        assert_relative_eq!(p.eval(&[0.0]), 1.0);
        assert_relative_eq!(p.eval(&[5.0]), 1.0);
    }
}
