//! Reference solutions for verification: closed forms and quadrature routes
//! that never touch the finite-difference solver. Test suites compare solver
//! output against these.

/// Heat evolution of exp(-x^2) in 1D with unit diffusion:
/// a Gaussian stays Gaussian with accumulated width w(t) = 1/4 + t,
/// u(t, x) = sqrt(w0 / w) exp(-x^2 / (4 w)).
pub fn heat_gaussian(t: f64, x: f64) -> f64 {
    gaussian_with_variance(0.25, t, x)
}

/// Gaussian sqrt(w0/w) exp(-x^2/(4w)) with w = w0 + added; the evolution of
/// exp(-x^2/(4 w0)) under u_t = q(t) u_xx with added = integral of q.
pub fn gaussian_with_variance(w0: f64, added: f64, x: f64) -> f64 {
    let w = w0 + added;
    (w0 / w).sqrt() * (-x * x / (4.0 * w)).exp()
}

/// Heat-kernel convolution (4 pi t)^{-1/2} int exp(-(x-y)^2/4t) f(y) dy by
/// composite Simpson quadrature; the independent route for arbitrary data.
pub fn heat_kernel_convolution(f: &dyn Fn(f64) -> f64, t: f64, x: f64) -> f64 {
    assert!(t > 0.0);
    let sigma = (2.0 * t).sqrt();
    let l = (8.0 * sigma).max(1.0);
    let n = 4000usize; // even
    let a = x - l;
    let h = 2.0 * l / n as f64;
    let kernel = |y: f64| (-(x - y) * (x - y) / (4.0 * t)).exp() * f(y);
    let mut acc = kernel(a) + kernel(a + 2.0 * l);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * kernel(a + i as f64 * h);
    }
    acc * h / 3.0 / (4.0 * std::f64::consts::PI * t).sqrt()
}

/// Ornstein-Uhlenbeck evolution (generator u'' - x u' + c u) of exp(-x^2):
/// mean e^{-t} x, squared width sigma^2 = 1 - e^{-2t}, and the potential
/// contributes the factor e^{c t}.
pub fn ou_gaussian(t: f64, x: f64, c: f64) -> f64 {
    let m = (-t).exp() * x;
    let s2 = 1.0 - (-2.0 * t).exp();
    (c * t).exp() / (1.0 + 2.0 * s2).sqrt() * (-m * m / (1.0 + 2.0 * s2)).exp()
}

/// Spatially constant comparison solution of u' = c u + g, u(0) = u0.
pub fn constant_ode(c: f64, g: f64, t: f64, u0: f64) -> f64 {
    if c == 0.0 {
        u0 + g * t
    } else {
        (c * t).exp() * u0 + g * ((c * t).exp() - 1.0) / c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn convolution_agrees_with_closed_form() {
        for &t in &[0.1, 0.5, 1.0] {
            for &x in &[0.0, 0.7, -1.3] {
                let quad = heat_kernel_convolution(&|y| (-y * y).exp(), t, x);
                assert_relative_eq!(quad, heat_gaussian(t, x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn ou_at_time_zero_is_datum() {
        assert_relative_eq!(ou_gaussian(0.0, 0.8, -1.0), (-0.64f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn ode_limits() {
        assert_relative_eq!(constant_ode(0.0, 1.0, 0.3, 0.0), 0.3);
        assert_relative_eq!(constant_ode(-1.0, 1.0, 5.0, 1.0), 1.0, epsilon = 1e-12);
    }
}
