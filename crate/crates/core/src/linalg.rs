//! Small dense linear-algebra helpers: the matrix exponential, polar
//! re-projection onto the unitary group, and finite-difference stencils.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

// Diagonal Padé [6/6] coefficients for exp: b_k = (12-k)! 6! / (12! k! (6-k)!).
const PADE6: [f64; 7] = [
    1.0,
    1.0 / 2.0,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring around a Padé [6/6] core.
///
/// The argument is scaled so its 1-norm is at most 1/2, where the rational
/// approximant is accurate far below 1e-14.
pub fn expm(a: &CMatrix) -> CMatrix {
    let m = a.nrows();
    assert_eq!(m, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.scale(0.5_f64.powi(squarings));
    let id = CMatrix::identity(m, m);

    let mut power = id.clone();
    let mut even = id.scale(PADE6[0]);
    let mut odd = CMatrix::zeros(m, m);
    for (k, &b) in PADE6.iter().enumerate().skip(1) {
        power = &power * &scaled;
        if k % 2 == 0 {
            even += power.scale(b);
        } else {
            odd += power.scale(b);
        }
    }
    let numer = &even + &odd;
    let denom = &even - &odd;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is well conditioned after scaling");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Max-entry distance of `u* u` from the identity.
pub fn unitary_defect(u: &CMatrix) -> f64 {
    let m = u.nrows();
    let prod = u.adjoint() * u;
    let mut worst = 0.0_f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((prod[(i, j)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Nearest unitary matrix (polar factor) computed from the SVD.
pub fn polar_unitary(u: &CMatrix) -> Result<CMatrix> {
    let svd = u.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(left), Some(right)) => Ok(left * right),
        _ => Err(Error::Numerical("SVD failed in polar projection".into())),
    }
}

pub fn inverse(u: &CMatrix) -> Result<CMatrix> {
    u.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("group element is not invertible".into()))
}

/// Fourth-order central difference of a vector-valued function of one variable
/// at zero: `(-f(2h) + 8 f(h) - 8 f(-h) + f(-2h)) / 12h`.
pub fn central_diff4<F>(mut f: F, h: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let p2 = f(2.0 * h)?;
    let p1 = f(h)?;
    let m1 = f(-h)?;
    let m2 = f(-2.0 * h)?;
    Ok((0..p1.len())
        .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
        .collect())
}

/// Step policy shared by every finite-difference fallback: `base * (1 + |z|)`.
pub fn fd_step(base: f64, z: &DVector<f64>) -> f64 {
    base * (1.0 + z.norm())
}

/// Ratio of extreme singular values; infinite for a singular matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Pack a complex matrix as interleaved (re, im) pairs in column-major order.
pub fn pack_complex(m: &CMatrix, out: &mut [f64]) {
    for (i, z) in m.iter().enumerate() {
        out[2 * i] = z.re;
        out[2 * i + 1] = z.im;
    }
}

pub fn unpack_complex(data: &[f64], size: usize) -> CMatrix {
    CMatrix::from_iterator(
        size,
        size,
        (0..size * size).map(|i| C64::new(data[2 * i], data[2 * i + 1])),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp_of_scalar_imaginary_is_phase() {
        let a = CMatrix::from_element(1, 1, c(0.0, 2.7));
        let e = expm(&a);
        assert!((e[(0, 0)] - c(2.7_f64.cos(), 2.7_f64.sin())).norm() < 1e-14);
    }

    #[test]
    fn exp_of_rotation_generator_matches_rodrigues() {
        // [[0, -θ], [θ, 0]] exponentiates to the rotation by θ.
        let theta = 3.9;
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-theta, 0.0), c(theta, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.0),
                c(-theta.sin(), 0.0),
                c(theta.sin(), 0.0),
                c(theta.cos(), 0.0),
            ],
        );
        assert!((e - expected).iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn exp_of_nilpotent_is_truncated_series() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(5.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let e = expm(&a);
        assert!((e[(0, 1)] - c(5.0, 0.0)).norm() < 1e-13);
        assert!((e[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn polar_projection_restores_unitarity() {
        let a = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.3), c(0.4, 0.1), c(-0.4, 0.1), c(0.0, -0.3)]);
        let u = expm(&a);
        let noisy = &u + CMatrix::from_element(2, 2, c(1e-6, -2e-6));
        assert!(unitary_defect(&noisy) > 1e-7);
        let fixed = polar_unitary(&noisy).unwrap();
        assert!(unitary_defect(&fixed) < 1e-14);
        assert!((fixed - u).iter().all(|z| z.norm() < 1e-5));
    }

    #[test]
    fn central_difference_is_fourth_order() {
        let f = |x: f64| Ok(vec![(1.3 + x).sin()]);
        let exact = 1.3_f64.cos();
        let e1 = (central_diff4(f, 0.1).unwrap()[0] - exact).abs();
        let e2 = (central_diff4(f, 0.05).unwrap()[0] - exact).abs();
        assert!(e1 / e2 > 12.0, "ratio {}", e1 / e2);
    }
}
