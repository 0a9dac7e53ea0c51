//! Real Schur form `M = U T Uᵀ` and Bartels–Stewart back-substitution for the
//! continuous Lyapunov equations `M X + X Mᵀ = -W` and `Mᵀ X + X M = -W`.
//!
//! One decomposition serves both equations: the transposed equation is mapped
//! back to upper quasi-triangular form by reversing the index order.

use nalgebra::{DMatrix, SMatrix, SVector};

use crate::error::{Error, Result};

/// Diagonal block of a quasi-triangular matrix: `(start, size)` with size 1 or 2.
type Block = (usize, usize);

#[derive(Debug, Clone)]
pub struct RealSchur {
    u: DMatrix<f64>,
    t: DMatrix<f64>,
    blocks: Vec<Block>,
    /// `J Tᵀ J` with `J` the reversal permutation; upper quasi-triangular.
    t_rev: DMatrix<f64>,
    blocks_rev: Vec<Block>,
    abscissa: f64,
}

fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<Block> {
    let n = t.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

fn block_abscissa(t: &DMatrix<f64>, (s, size): Block) -> f64 {
    if size == 1 {
        return t[(s, s)];
    }
    let (a, b, c, d) = (t[(s, s)], t[(s, s + 1)], t[(s + 1, s)], t[(s + 1, s + 1)]);
    let half_trace = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc < 0.0 {
        half_trace
    } else {
        half_trace + disc.sqrt()
    }
}

/// `J C J`: reverses both the row and the column order.
fn reverse(c: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, k) = c.shape();
    DMatrix::from_fn(r, k, |i, j| c[(r - 1 - i, k - 1 - j)])
}

impl RealSchur {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty matrix".into()));
        }
        let max_iter = 200 * n.max(10);
        let schur = m
            .try_schur(f64::EPSILON, max_iter)
            .ok_or(Error::EigenNoConvergence)?;
        let (u, mut t) = schur.unpack();
        for j in 0..n {
            for i in (j + 2)..n {
                t[(i, j)] = 0.0;
            }
        }
        if t.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenNoConvergence);
        }
        let blocks = diagonal_blocks(&t);
        let abscissa = blocks
            .iter()
            .map(|b| block_abscissa(&t, *b))
            .fold(f64::NEG_INFINITY, f64::max);
        let t_rev = reverse(&t.transpose());
        let blocks_rev = blocks.iter().rev().map(|&(s, b)| (n - s - b, b)).collect();
        Ok(RealSchur { u, t, blocks, t_rev, blocks_rev, abscissa })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    pub fn orthogonal(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn quasi_triangular(&self) -> &DMatrix<f64> {
        &self.t
    }

    /// Solves `M X + X Mᵀ = -W` for symmetric `W`.
    pub fn lyapunov(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let rhs = -(self.u.transpose() * w * &self.u);
        let y = solve_quasi_triangular(&self.t, &self.blocks, &rhs)?;
        Ok(symmetrize(&self.u * y * self.u.transpose()))
    }

    /// Solves `Mᵀ X + X M = -W` for symmetric `W`.
    pub fn lyapunov_transposed(&self, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let rhs = reverse(&-(self.u.transpose() * w * &self.u));
        let y = solve_quasi_triangular(&self.t_rev, &self.blocks_rev, &rhs)?;
        Ok(symmetrize(&self.u * reverse(&y) * self.u.transpose()))
    }
}

pub(crate) fn symmetrize(x: DMatrix<f64>) -> DMatrix<f64> {
    let xt = x.transpose();
    (x + xt) * 0.5
}

/// Solves `A X + X Bᵀ = R` for blocks of size at most 2 through the
/// Kronecker form, padding unused coordinates with the identity.
fn small_sylvester(
    a: &DMatrix<f64>,
    ab: Block,
    b: &DMatrix<f64>,
    bb: Block,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (as_, na) = ab;
    let (bs, nb) = bb;
    if na == 1 && nb == 1 {
        let pivot = a[(as_, as_)] + b[(bs, bs)];
        if pivot.abs() <= f64::MIN_POSITIVE.sqrt() {
            return Err(Error::SolverBreakdown(format!(
                "eigenvalues sum to {pivot:.3e} in Lyapunov back-substitution"
            )));
        }
        return Ok(DMatrix::from_element(1, 1, r[(0, 0)] / pivot));
    }
    let mut kron = SMatrix::<f64, 4, 4>::identity();
    let mut rhs = SVector::<f64, 4>::zeros();
    for j in 0..nb {
        for i in 0..na {
            let row = i + na * j;
            kron[(row, row)] = 0.0;
            rhs[row] = r[(i, j)];
        }
    }
    for j in 0..nb {
        for i in 0..na {
            let row = i + na * j;
            for k in 0..na {
                kron[(row, k + na * j)] += a[(as_ + i, as_ + k)];
            }
            for l in 0..nb {
                kron[(row, i + na * l)] += b[(bs + j, bs + l)];
            }
        }
    }
    let sol = kron
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SolverBreakdown("singular 2x2 block in Lyapunov back-substitution".into()))?;
    Ok(DMatrix::from_fn(na, nb, |i, j| sol[i + na * j]))
}

/// Back-substitution for `T X + X Tᵀ = C` with `T` upper quasi-triangular and
/// `C` symmetric. Only the upper block triangle is solved; the rest follows by
/// symmetry.
fn solve_quasi_triangular(
    t: &DMatrix<f64>,
    blocks: &[Block],
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let mut x = DMatrix::<f64>::zeros(n, n);
    let mut rhs = c.clone();
    for (jdx, &(js, bj)) in blocks.iter().enumerate().rev() {
        let je = js + bj;
        let tail = n - je;
        if tail > 0 {
            // columns to the right are complete
            let known = x.columns(je, tail).clone_owned();
            let t_row = t.view((js, je), (bj, tail)).transpose();
            rhs.columns_mut(js, bj).gemm(-1.0, &known, &t_row, 1.0);
            for jj in 0..bj {
                for i in je..n {
                    x[(i, js + jj)] = x[(js + jj, i)];
                }
            }
            let below = x.view((je, js), (tail, bj)).clone_owned();
            rhs.view_mut((0, js), (je, bj))
                .gemm(-1.0, &t.view((0, je), (je, tail)), &below, 1.0);
        }
        for &(is, bi) in blocks[..=jdx].iter().rev() {
            let r = rhs.view((is, js), (bi, bj)).clone_owned();
            let xij = small_sylvester(t, (is, bi), t, (js, bj), &r)?;
            x.view_mut((is, js), (bi, bj)).copy_from(&xij);
            if is > 0 {
                rhs.view_mut((0, js), (is, bj))
                    .gemm(-1.0, &t.view((0, is), (is, bi)), &xij, 1.0);
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn lyap_residual(m: &DMatrix<f64>, x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
        (m * x + x * m.transpose() + w).norm()
    }

    #[test]
    fn complex_pair_blocks() {
        let m = dmatrix![-1.0, 2.0, 0.3; -2.0, -1.0, 0.1; 0.5, 0.0, -3.0];
        let s = RealSchur::new(m.clone()).unwrap();
        assert!(s.blocks.iter().any(|b| b.1 == 2));
        let w = DMatrix::identity(3, 3);
        let x = s.lyapunov(&w).unwrap();
        assert!(lyap_residual(&m, &x, &w) < 1e-12);
        let p = s.lyapunov_transposed(&w).unwrap();
        assert!(lyap_residual(&m.transpose(), &p, &w) < 1e-12);
    }

    #[test]
    fn unstable_coefficient_still_solvable_off_axis() {
        let m = dmatrix![1.0, 0.0; 0.0, -2.0];
        let s = RealSchur::new(m.clone()).unwrap();
        assert_eq!(s.spectral_abscissa(), 1.0);
        let w = DMatrix::identity(2, 2);
        let x = s.lyapunov(&w).unwrap();
        assert!(lyap_residual(&m, &x, &w) < 1e-12);
    }

    #[test]
    fn axis_symmetric_spectrum_breaks_down() {
        let m = dmatrix![1.0, 0.0; 0.0, -1.0];
        let s = RealSchur::new(m).unwrap();
        assert!(s.lyapunov(&DMatrix::identity(2, 2)).is_err());
    }
}
