use nalgebra::{DMatrix, DVector, Matrix4, Vector4};

use super::Linearized;

/// Block-tridiagonal Gauss–Newton system: `H = JᵀJ` stored as its diagonal
/// blocks and the blocks `H[i][i+1]`, with gradient `g = Jᵀe`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalEquations {
    diagonal: Vec<Matrix4<f64>>,
    upper: Vec<Matrix4<f64>>,
    gradient: Vec<Vector4<f64>>,
}

impl NormalEquations {
    pub fn zeros(variables: usize) -> Self {
        Self {
            diagonal: vec![Matrix4::zeros(); variables],
            upper: vec![Matrix4::zeros(); variables.saturating_sub(1)],
            gradient: vec![Vector4::zeros(); variables],
        }
    }

    pub(crate) fn accumulate(&mut self, lin: &Linearized) {
        let (i, ji) = lin.first;
        self.diagonal[i] += ji.transpose() * ji;
        self.gradient[i] += ji.transpose() * lin.error;
        if let Some((j, jj)) = lin.second {
            self.diagonal[j] += jj.transpose() * jj;
            self.gradient[j] += jj.transpose() * lin.error;
            // GP factors always link consecutive supports
            debug_assert_eq!(j, i + 1);
            self.upper[i] += ji.transpose() * jj;
        }
    }

    pub fn variables(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[Matrix4<f64>] {
        &self.diagonal
    }

    pub fn upper(&self) -> &[Matrix4<f64>] {
        &self.upper
    }

    pub fn gradient(&self) -> &[Vector4<f64>] {
        &self.gradient
    }

    pub fn dense_hessian(&self) -> DMatrix<f64> {
        let n = self.variables();
        let mut h = DMatrix::zeros(4 * n, 4 * n);
        for (i, d) in self.diagonal.iter().enumerate() {
            h.fixed_view_mut::<4, 4>(4 * i, 4 * i).copy_from(d);
        }
        for (i, u) in self.upper.iter().enumerate() {
            h.fixed_view_mut::<4, 4>(4 * i, 4 * (i + 1)).copy_from(u);
            h.fixed_view_mut::<4, 4>(4 * (i + 1), 4 * i).copy_from(&u.transpose());
        }
        h
    }

    pub fn dense_gradient(&self) -> DVector<f64> {
        DVector::from_iterator(4 * self.variables(), self.gradient.iter().flat_map(|g| g.iter().copied()))
    }

    /// Solves `(H + λI)·δ = −g` by block forward elimination and back
    /// substitution. `None` if a pivot block is not positive definite.
    pub fn solve(&self, damping: f64) -> Option<Vec<Vector4<f64>>> {
        let n = self.variables();
        if n == 0 {
            return Some(Vec::new());
        }
        let damp = Matrix4::identity() * damping;
        // c[i] = S_i⁻¹ U_i, y[i] = S_i⁻¹ (−g_i − U_{i−1}ᵀ y_{i−1})
        let mut c: Vec<Matrix4<f64>> = Vec::with_capacity(n.saturating_sub(1));
        let mut y: Vec<Vector4<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = self.diagonal[i] + damp;
            let mut rhs = -self.gradient[i];
            if i > 0 {
                let ut = self.upper[i - 1].transpose();
                s -= ut * c[i - 1];
                rhs -= ut * y[i - 1];
            }
            let chol = s.cholesky()?;
            if i + 1 < n {
                c.push(chol.solve(&self.upper[i]));
            }
            y.push(chol.solve(&rhs));
        }
        for i in (0..n - 1).rev() {
            let next = y[i + 1];
            y[i] -= c[i] * next;
        }
        y.iter().all(|v| v.iter().all(|x| x.is_finite())).then_some(y)
    }
}
