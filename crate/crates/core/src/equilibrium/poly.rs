//! Real polynomial roots via companion-matrix eigenvalues and Newton polishing.

use nalgebra::DMatrix;

/// Coefficients in descending powers.
pub fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    for &c in coeffs {
        df = df * x + f;
        f = f * x + c;
    }
    (f, df)
}

pub fn scale(coeffs: &[f64]) -> f64 {
    coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
}

/// Newton iterations from `x0`, returning the iterate with the smallest residual.
pub fn polish(coeffs: &[f64], x0: f64) -> (f64, f64) {
    let mut x = x0;
    let (mut f, mut df) = horner(coeffs, x);
    let mut best = (x, f.abs());
    for _ in 0..60 {
        if df == 0.0 || f == 0.0 {
            break;
        }
        let step = f / df;
        x -= step;
        (f, df) = horner(coeffs, x);
        if f.abs() < best.1 {
            best = (x, f.abs());
        }
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            break;
        }
    }
    best
}

/// All real roots, ascending, with near-coincident roots merged.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let lead = coeffs.iter().position(|c| *c != 0.0);
    let Some(lead) = lead else { return Vec::new() };
    let c = &coeffs[lead..];
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let mut comp = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        comp[(0, k)] = -c[k + 1] / c[0];
    }
    for k in 1..n {
        comp[(k, k - 1)] = 1.0;
    }
    let eig = comp.complex_eigenvalues();
    let tol = scale(c) * 1e-9;
    let mut roots: Vec<f64> = Vec::new();
    for z in eig.iter() {
        if z.im.abs() > 1e-6 * z.re.abs().max(1.0) {
            continue;
        }
        let (x, res) = polish(c, z.re);
        if res > tol * x.abs().max(1.0).powi(n as i32) {
            continue;
        }
        roots.push(x);
    }
    roots.sort_by(f64::total_cmp);
    // Multiple roots only polish to ~sqrt(eps), so merge at that scale.
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-6 * a.abs().max(1.0));
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_linear_factors() {
        let r = real_roots(&[1.0, -6.0, 11.0, -6.0]);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_real_root_by_bisection_oracle() {
        // x³ + x + 1 is strictly increasing; bisect it independently.
        let f = |x: f64| x * x * x + x + 1.0;
        let (mut lo, mut hi) = (-1.0, 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = real_roots(&[1.0, 0.0, 1.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - lo).abs() < 1e-13);
        assert!((r[0] + 0.6823).abs() < 1e-4);
    }

    #[test]
    fn no_real_roots() {
        assert!(real_roots(&[1.0, 0.0, 1.0]).is_empty());
    }

    #[test]
    fn double_root_is_reported_once() {
        let r = real_roots(&[1.0, -2.0, 1.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-7);
    }
}
