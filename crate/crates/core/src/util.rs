//! Small numeric utilities shared across modules.

/// Error function (double precision).
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// All multi-indices over `dim` axes with total order exactly `order`.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    match dim {
        1 => vec![vec![order]],
        2 => (0..=order).map(|j| vec![order - j, j]).collect(),
        _ => {
            let mut out = Vec::new();
            let mut idx = vec![0usize; dim];
            fill(dim, order, 0, &mut idx, &mut out);
            out
        }
    }
}

fn fill(dim: usize, left: usize, axis: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if axis == dim - 1 {
        idx[axis] = left;
        out.push(idx.clone());
        return;
    }
    for k in 0..=left {
        idx[axis] = k;
        fill(dim, left - k, axis + 1, idx, out);
    }
    idx[axis] = 0;
}

/// All multi-indices with total order `<= k`, ordered by total order.
pub fn multi_indices_up_to(dim: usize, k: usize) -> Vec<Vec<usize>> {
    (0..=k).flat_map(|o| multi_indices(dim, o)).collect()
}

/// Number of ordered derivative sequences collapsing to the multi-index
/// (the multinomial coefficient |beta|! / prod beta_i!).
pub fn multiplicity(beta: &[usize]) -> f64 {
    let total: usize = beta.iter().sum();
    let mut m = factorial(total);
    for &b in beta {
        m /= factorial(b);
    }
    m as f64
}

fn factorial(n: usize) -> usize {
    (1..=n).product::<usize>().max(1)
}

/// Least-squares line through (x_i, y_i): returns (slope, intercept, rms residual).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum::<f64>()
        / n;
    (slope, intercept, res.sqrt())
}

/// Euclidean norm of a short vector.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Smallest eigenvalue of a symmetric 1x1 or 2x2 matrix given row-major.
pub fn sym_min_eig(dim: usize, m: &[f64]) -> f64 {
    match dim {
        1 => m[0],
        2 => {
            let (a, b, c) = (m[0], m[1], m[3]);
            let t = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            t - d
        }
        _ => unreachable!("meshes are 1D or 2D"),
    }
}

/// Largest eigenvalue of a symmetric 1x1 or 2x2 matrix given row-major.
pub fn sym_max_eig(dim: usize, m: &[f64]) -> f64 {
    match dim {
        1 => m[0],
        2 => {
            let (a, b, c) = (m[0], m[1], m[3]);
            let t = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            t + d
        }
        _ => unreachable!("meshes are 1D or 2D"),
    }
}
