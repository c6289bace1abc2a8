//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `lower[i]` multiplies `x[i]` in row `i + 1`; `upper[i]` multiplies `x[i + 1]`
/// in row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem<T> {
    pub lower: Vec<T>,
    pub diag: Vec<T>,
    pub upper: Vec<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> TridiagonalSystem<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 || self.rhs.len() != n || self.lower.len() + 1 != n || self.upper.len() + 1 != n {
            return Err(Error::Dimension(format!(
                "tridiagonal system with diag {}, lower {}, upper {}, rhs {}",
                n,
                self.lower.len(),
                self.upper.len(),
                self.rhs.len()
            )));
        }
        Ok(())
    }

    /// `A x` for the matrix part of the system.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s = s + self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s = s + self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }
}

pub fn thomas_solve<T: Scalar>(sys: &TridiagonalSystem<T>) -> Result<Vec<T>> {
    sys.check()?;
    let mut x = sys.rhs.clone();
    let mut scratch = vec![T::zero(); sys.dim()];
    thomas_solve_in_place(&sys.lower, &sys.diag, &sys.upper, &mut x, &mut scratch)?;
    Ok(x)
}

/// Solves in place: `rhs` is overwritten by the solution. `scratch` must hold
/// at least `diag.len()` entries. No pivoting.
pub fn thomas_solve_in_place<T: Scalar>(
    lower: &[T],
    diag: &[T],
    upper: &[T],
    rhs: &mut [T],
    scratch: &mut [T],
) -> Result<()> {
    let n = diag.len();
    debug_assert!(rhs.len() == n && lower.len() + 1 == n && upper.len() + 1 == n);
    debug_assert!(scratch.len() >= n);

    let mut pivot = diag[0];
    if pivot == T::zero() || !pivot.is_finite() {
        return Err(Error::SingularSystem { row: 0 });
    }
    let mut prev_c = if n > 1 { upper[0] / pivot } else { T::zero() };
    scratch[0] = prev_c;
    let mut prev_d = rhs[0] / pivot;
    rhs[0] = prev_d;
    for i in 1..n {
        let l = lower[i - 1];
        pivot = diag[i] - l * prev_c;
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::SingularSystem { row: i });
        }
        let inv = T::one() / pivot;
        prev_c = if i + 1 < n { upper[i] * inv } else { T::zero() };
        scratch[i] = prev_c;
        prev_d = (rhs[i] - l * prev_d) * inv;
        rhs[i] = prev_d;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - scratch[i] * rhs[i + 1];
    }
    Ok(())
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let sys = TridiagonalSystem {
            lower: vec![0.0; 4],
            diag: vec![1.0; 5],
            upper: vec![0.0; 4],
            rhs: vec![1.0, -2.0, 3.5, 0.0, 7.0],
        };
        assert_eq!(thomas_solve(&sys).unwrap(), sys.rhs);
    }

    #[test]
    fn three_by_three_matches_hand_inverse() {
        // [[4,-1,0],[2,5,1],[0,-3,6]] x = [1,2,3]  =>  x = [7/24, 1/6, 7/12]
        let sys = TridiagonalSystem {
            lower: vec![2.0f64, -3.0],
            diag: vec![4.0, 5.0, 6.0],
            upper: vec![-1.0, 1.0],
            rhs: vec![1.0, 2.0, 3.0],
        };
        let x = thomas_solve(&sys).unwrap();
        for (got, want) in x.iter().zip([7.0 / 24.0, 1.0 / 6.0, 7.0 / 12.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn large_dominant_system_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(250);
        let n = 250;
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.5..4.0)).collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let sys = TridiagonalSystem {
            lower,
            diag,
            upper,
            rhs,
        };
        let x = thomas_solve(&sys).unwrap();
        let oracle = dense::solve(dense::from_tridiagonal(&sys), sys.rhs.clone());
        for (a, b) in x.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let sys = TridiagonalSystem {
            lower: vec![1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0],
            rhs: vec![1.0, 1.0],
        };
        assert!(matches!(
            thomas_solve(&sys),
            Err(Error::SingularSystem { row: 1 })
        ));
        let bad = TridiagonalSystem {
            lower: vec![],
            diag: vec![1.0, 1.0],
            upper: vec![1.0],
            rhs: vec![1.0, 1.0],
        };
        assert!(matches!(thomas_solve(&bad), Err(Error::Dimension(_))));
    }

    proptest! {
        #[test]
        fn residual_is_small(
            seed in any::<u64>(),
            n in 1usize..60,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lower: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let upper: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(2.1..5.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
            let sys = TridiagonalSystem { lower, diag, upper, rhs };
            let x = thomas_solve(&sys).unwrap();
            let ax = sys.apply(&x);
            let scale = 1.0 + sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in ax.iter().zip(&sys.rhs) {
                prop_assert!((a - b).abs() < 1e-10 * scale);
            }
        }
    }
}
