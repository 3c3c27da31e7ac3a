use nalgebra::DMatrix;

use crate::{Error, Result};

/// Orthogonal alignment of one embedding onto another.
#[derive(Debug, Clone)]
pub struct Alignment {
    /// Orthogonal `K x K` matrix minimizing `||u_hat - u_ref h||_F`.
    pub h: DMatrix<f64>,
    /// The minimized Frobenius norm.
    pub residual: f64,
}

/// Orthogonal Procrustes: with `u_ref' u_hat = A S B'`, the minimizer is
/// `h = A B'`.
pub fn procrustes_align(u_hat: &DMatrix<f64>, u_ref: &DMatrix<f64>) -> Result<Alignment> {
    if u_hat.shape() != u_ref.shape() {
        return Err(Error::ShapeMismatch(format!(
            "u_hat is {:?}, u_ref is {:?}",
            u_hat.shape(),
            u_ref.shape()
        )));
    }
    let cross = u_ref.transpose() * u_hat;
    let svd = cross.svd(true, true);
    let (a, bt) = match (svd.u, svd.v_t) {
        (Some(a), Some(bt)) => (a, bt),
        _ => return Err(Error::EigConvergenceFailure { iterations: 0 }),
    };
    let h = a * bt;
    let residual = (u_hat - u_ref * &h).norm();
    Ok(Alignment { h, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_orthonormal(n: usize, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>() - 0.5);
        m.qr().q()
    }

    fn rotation(angle: f64) -> DMatrix<f64> {
        let (s, c) = angle.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    #[test]
    fn identical_inputs_give_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_orthonormal(20, 3, &mut rng);
        let al = procrustes_align(&u, &u).unwrap();
        assert!((al.h - DMatrix::identity(3, 3)).amax() < 1e-10);
        assert!(al.residual < 1e-10);
    }

    #[test]
    fn recovers_known_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_orthonormal(15, 2, &mut rng);
        let r = rotation(0.7);
        let al = procrustes_align(&(&u * &r), &u).unwrap();
        assert!((al.h - r).amax() < 1e-10);
        assert!(al.residual < 1e-10);
    }

    #[test]
    fn noisy_residual_bounded_by_candidate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_orthonormal(40, 3, &mut rng);
        let r = random_orthonormal(3, 3, &mut rng);
        let noise = DMatrix::from_fn(40, 3, |_, _| rng.random::<f64>() - 0.5) * 0.01;
        let al = procrustes_align(&(&u * &r + &noise), &u).unwrap();
        assert!(al.residual <= noise.norm() + 1e-8);
        let hh = al.h.transpose() * &al.h;
        assert!((hh - DMatrix::identity(3, 3)).amax() < 1e-10);
    }

    #[test]
    fn shape_mismatch() {
        let a = DMatrix::zeros(4, 2);
        let b = DMatrix::zeros(4, 3);
        assert!(matches!(procrustes_align(&a, &b), Err(Error::ShapeMismatch(_))));
    }
}
