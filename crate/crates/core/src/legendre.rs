//! Legendre polynomials by the three-term recurrence.

/// P_0(x), ..., P_lmax(x).
pub fn legendre_all(lmax: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(1.0);
    if lmax >= 1 {
        p.push(x);
    }
    for l in 2..=lmax {
        let lf = l as f64;
        let next = ((2.0 * lf - 1.0) * x * p[l - 1] - (lf - 1.0) * p[l - 2]) / lf;
        p.push(next);
    }
    p
}

pub fn legendre(l: usize, x: f64) -> f64 {
    legendre_all(l, x)[l]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_orders() {
        let x = 0.3;
        assert!((legendre(2, x) - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((legendre(3, x) - 0.5 * (5.0 * x * x * x - 3.0 * x)).abs() < 1e-15);
        for l in 0..50 {
            assert!((legendre(l, 1.0) - 1.0).abs() < 1e-12);
        }
    }
}
