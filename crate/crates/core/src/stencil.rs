//! Central differences with one level of Richardson extrapolation.
//!
//! Used where a quantity is not jet-friendly (eigen-projectors) and as an
//! independent cross-check of jet derivatives in tests.

/// Default step for the covariant stencil.
pub const STENCIL_STEP: f64 = 1e-3;

/// `∂_axis f(x)` for a vector-valued `f`, error `O(step⁴)`.
pub fn first_derivative(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], axis: usize, step: f64) -> Vec<f64> {
    let central = |h: f64| {
        let mut y = x.to_vec();
        y[axis] = x[axis] + h;
        let plus = f(&y);
        y[axis] = x[axis] - h;
        let minus = f(&y);
        plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<f64>>()
    };
    let coarse = central(step);
    let fine = central(step / 2.0);
    fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect()
}

/// All first partials: `out[axis][component]`.
pub fn gradient(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], step: f64) -> Vec<Vec<f64>> {
    (0..x.len()).map(|a| first_derivative(f, x, a, step)).collect()
}

/// `∂_i ∂_j u(x)` for a scalar `u`, error `O(step⁴)`.
pub fn second_derivative(u: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, j: usize, step: f64) -> f64 {
    let d = |h: f64| {
        if i == j {
            let mut y = x.to_vec();
            y[i] = x[i] + h;
            let p = u(&y);
            y[i] = x[i] - h;
            let m = u(&y);
            (p - 2.0 * u(x) + m) / (h * h)
        } else {
            let at = |si: f64, sj: f64| {
                let mut y = x.to_vec();
                y[i] += si * h;
                y[j] += sj * h;
                u(&y)
            };
            (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
        }
    };
    (4.0 * d(step / 2.0) - d(step)) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_is_fourth_order() {
        let f = |x: &[f64]| vec![x[0].sin() * x[1].exp()];
        let g = first_derivative(&f, &[0.3, 0.2], 0, 1e-2);
        assert!((g[0] - 0.3f64.cos() * 0.2f64.exp()).abs() < 1e-9);
        let u = |x: &[f64]| x[0].sin() * x[1].exp();
        let h = second_derivative(&u, &[0.3, 0.2], 0, 1, 1e-2);
        assert!((h - 0.3f64.cos() * 0.2f64.exp()).abs() < 1e-8);
        let hh = second_derivative(&u, &[0.3, 0.2], 0, 0, 1e-2);
        assert!((hh + 0.3f64.sin() * 0.2f64.exp()).abs() < 1e-8);
    }
}
