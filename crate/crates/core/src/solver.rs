//! Scalar root finding and maximisation.

use crate::error::{Error, Result};

/// Root of a nondecreasing `g` on `[lo, hi]` with `g(lo) <= 0 <= g(hi)`.
///
/// Stops once the bracket is narrower than `tol` or after `max_iter` halvings.
pub fn bisect<G>(mut g: G, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    G: FnMut(f64) -> Result<f64>,
{
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = g(mid)?;
        if v.is_nan() {
            return Err(Error::numeric("bisection", format!("NaN at {mid}")));
        }
        if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
pub fn golden_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// Uniform grid scan followed by golden-section refinement around the best
/// grid point.  Returns the best `(x, f(x))` seen, grid points included.
pub fn grid_then_golden<F>(mut f: F, a: f64, b: f64, points: usize, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    assert!(points >= 2);
    let step = (b - a) / (points - 1) as f64;
    let mut best = (a, f64::NEG_INFINITY);
    let mut best_idx = 0;
    for i in 0..points {
        let x = if i + 1 == points { b } else { a + step * i as f64 };
        let v = f(x)?;
        if v > best.1 {
            best = (x, v);
            best_idx = i;
        }
    }
    let lo = a + step * best_idx.saturating_sub(1) as f64;
    let hi = (a + step * (best_idx + 1) as f64).min(b);
    if hi - lo > tol {
        let refined = golden_max(&mut f, lo, hi, tol)?;
        if refined.1 > best.1 {
            best = refined;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_a_square_root() {
        let r = bisect(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn bisect_respects_the_iteration_cap() {
        let r = bisect(|x| Ok(x - 0.3), 0.0, 1.0, 0.0, 3).unwrap();
        assert!((r - 0.3).abs() <= 1.0 / 16.0);
    }

    #[test]
    fn golden_finds_a_parabola_peak() {
        let (x, v) = golden_max(|x| Ok(-(x - 0.7) * (x - 0.7) + 2.0), 0.0, 3.0, 1e-10).unwrap();
        assert!((x - 0.7).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn grid_escapes_a_local_maximum() {
        // Local peak at 0.2 (height 1), global peak at 0.8 (height 2).
        let f =
            |x: f64| Ok((-(x - 0.2f64).powi(2) * 400.0).exp() + 2.0 * (-(x - 0.8f64).powi(2) * 400.0).exp());
        let (x, v) = grid_then_golden(f, 0.0, 1.0, 101, 1e-9).unwrap();
        assert!((x - 0.8).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-9);
    }

    #[test]
    fn grid_handles_a_boundary_maximum() {
        let (x, v) = grid_then_golden(Ok, 0.0, 1.0, 11, 1e-9).unwrap();
        assert_eq!(x, 1.0);
        assert_eq!(v, 1.0);
    }
}
