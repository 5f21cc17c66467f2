//! Composite Gauss–Legendre and midpoint rules.

use std::f64::consts::PI;

/// Nodes and weights of the `order`-point Gauss–Legendre rule on `[-1,1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { x } else { p1 };
            let pm1 = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[order - 1 - i] = -x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate `f` over `[a,b]` splitting at the given breakpoints, with
/// `panels` Gauss–Legendre panels of `order` points on every smooth piece.
pub fn integrate_piecewise(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    panels: usize,
    order: usize,
) -> f64 {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(breaks.iter().copied().filter(|&t| t > a && t < b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (xs, ws) = gauss_legendre(order);
    let mut total = 0.0;
    for seg in cuts.windows(2) {
        let h = (seg[1] - seg[0]) / panels as f64;
        for k in 0..panels {
            let lo = seg[0] + k as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            total += xs
                .iter()
                .zip(&ws)
                .map(|(x, w)| w * f(mid + half * x))
                .sum::<f64>()
                * half;
        }
    }
    total
}

/// Composite midpoint rule on `[0,1]` with `nodes` cells.
pub fn midpoint_unit(f: impl Fn(f64) -> f64, nodes: usize) -> f64 {
    let h = 1.0 / nodes as f64;
    (0..nodes).map(|k| f((k as f64 + 0.5) * h)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (xs, ws) = gauss_legendre(8);
        // degree 15 is the highest exact degree for 8 points
        let exact = 2.0 / 15.0; // ∫ x^14
        let approx: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(14)).sum();
        assert!((approx - exact).abs() < 1e-14);
        assert!((ws.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn piecewise_handles_jumps() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 2.0 };
        let v = integrate_piecewise(f, 0.0, 1.0, &[0.3], 1, 4);
        assert!((v - (0.3 + 1.4)).abs() < 1e-14);
    }
}
