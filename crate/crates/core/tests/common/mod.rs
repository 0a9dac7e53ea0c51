//! Reference implementations used as test oracles. Each one is deliberately
//! naive (dense Kronecker systems, enumeration, quadrature) and shares no
//! code with the library solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_codesign::Plant;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let x = random_matrix(rng, n, n);
    &x * x.transpose() + DMatrix::identity(n, n) * 0.5
}

/// Random Hurwitz matrix with entries of order one.
pub fn random_stable(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let x = random_matrix(rng, n, n);
        let shift = rng.random_range(0.2..1.0);
        let bound = x.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        let m = &x - DMatrix::identity(n, n) * (bound + shift) * 0.5;
        let max_re = m
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_re < -0.05 {
            return m;
        }
    }
}

fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Solves `M X + X Mᵀ = -W` through `(I ⊗ M + M ⊗ I) vec X = -vec W`.
pub fn kron_lyapunov(m: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let eye = DMatrix::identity(n, n);
    let op = eye.kronecker(m) + m.kronecker(&eye);
    let x = op.lu().solve(&(-vec_of(w))).expect("singular Kronecker operator");
    unvec(&x, n, n)
}

/// Solves `Mᵀ X + X M = -W`.
pub fn kron_lyapunov_transposed(m: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    kron_lyapunov(&m.transpose(), w)
}

/// Solves `2(R F - G) L + c (F - Z) = 0` through
/// `(2 Lᵀ ⊗ R + c I) vec F = vec(2 G L + c Z)`.
pub fn kron_feedback(
    r: &DMatrix<f64>,
    l: &DMatrix<f64>,
    g: &DMatrix<f64>,
    c: f64,
    z: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (m, n) = (r.nrows(), l.nrows());
    let op = l.transpose().kronecker(r) * 2.0 + DMatrix::identity(m * n, m * n) * c;
    let rhs = vec_of(&(g * l * 2.0 + z * c));
    unvec(&op.lu().solve(&rhs).expect("singular feedback operator"), m, n)
}

/// Closed-loop H2 cost via Kronecker Gramians, `None` if not Hurwitz.
pub fn oracle_cost(plant: &Plant, f: &DMatrix<f64>) -> Option<f64> {
    let m = &plant.a - &plant.b2 * f;
    let stable = m.complex_eigenvalues().iter().all(|z| z.re < 0.0);
    if !stable {
        return None;
    }
    let w = &plant.q + f.transpose() * &plant.r * f;
    let p = kron_lyapunov_transposed(&m, &w);
    Some((plant.b1.transpose() * p * &plant.b1).trace())
}

/// Same cost by composite Simpson quadrature of the impulse-response energy
/// `∫ trace(B1ᵀ e^{Mᵀt} W e^{Mt} B1) dt` on `[0, horizon]`.
pub fn quadrature_cost(plant: &Plant, f: &DMatrix<f64>, horizon: f64, steps: usize) -> f64 {
    assert!(steps % 2 == 0);
    let m = &plant.a - &plant.b2 * f;
    let w = &plant.q + f.transpose() * &plant.r * f;
    let h = horizon / steps as f64;
    let step = (&m * h).exp();
    let mut phi = plant.b1.clone();
    let integrand = |x: &DMatrix<f64>| (x.transpose() * &w * x).trace();
    let mut total = integrand(&phi);
    for i in 1..=steps {
        phi = &step * phi;
        let weight = if i == steps {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += weight * integrand(&phi);
    }
    total * h / 3.0
}

/// Central differences of the oracle cost, one entry at a time.
pub fn finite_difference_gradient(plant: &Plant, f: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    DMatrix::from_fn(f.nrows(), f.ncols(), |i, j| {
        let mut fp = f.clone();
        let mut fm = f.clone();
        fp[(i, j)] += h;
        fm[(i, j)] -= h;
        (oracle_cost(plant, &fp).unwrap() - oracle_cost(plant, &fm).unwrap()) / (2.0 * h)
    })
}

/// Newton–Kleinman iteration from a stabilizing gain, with Kronecker
/// Lyapunov solves. Returns the LQR gain `R⁻¹ B2ᵀ X`.
pub fn kleinman_lqr(plant: &Plant, f0: &DMatrix<f64>, iterations: usize) -> DMatrix<f64> {
    let r_inv = plant.r.clone().try_inverse().unwrap();
    let mut f = f0.clone();
    for _ in 0..iterations {
        let m = &plant.a - &plant.b2 * &f;
        let w = &plant.q + f.transpose() * &plant.r * &f;
        let x = kron_lyapunov_transposed(&m, &w);
        let next = &r_inv * plant.b2.transpose() * x;
        let change = (&next - &f).norm();
        f = next;
        if change <= 1e-14 * (1.0 + f.norm()) {
            break;
        }
    }
    f
}

/// `table[k]` is the smallest squared distance from `x` to any matrix with at
/// most `k` nonzero entries, found by enumerating every support.
pub fn brute_entry_distances(x: &DMatrix<f64>) -> Vec<f64> {
    let squares: Vec<f64> = x.iter().map(|v| v * v).collect();
    brute_group_distances(&squares)
}

/// Same for row supports.
pub fn brute_row_distances(y: &DMatrix<f64>) -> Vec<f64> {
    let squares: Vec<f64> = y.row_iter().map(|row| row.norm_squared()).collect();
    brute_group_distances(&squares)
}

/// Same for column supports.
pub fn brute_column_distances(y: &DMatrix<f64>) -> Vec<f64> {
    let squares: Vec<f64> = y.column_iter().map(|col| col.norm_squared()).collect();
    brute_group_distances(&squares)
}

fn brute_group_distances(squares: &[f64]) -> Vec<f64> {
    let total: f64 = squares.iter().sum();
    let len = squares.len();
    let mut best = vec![f64::INFINITY; len + 1];
    for mask in 0u32..(1u32 << len) {
        let size = mask.count_ones() as usize;
        let kept: f64 = (0..len).filter(|i| mask & (1 << i) != 0).map(|i| squares[i]).sum();
        best[size] = best[size].min(total - kept);
    }
    for k in 1..=len {
        best[k] = best[k].min(best[k - 1]);
    }
    best
}

/// Scalar plant `ẋ = a x + b1 w + b2 u` with weights `q`, `r`.
pub fn scalar_plant(a: f64, b1: f64, b2: f64, q: f64, r: f64) -> Plant {
    let s = |v: f64| DMatrix::from_element(1, 1, v);
    Plant::new(s(a), s(b1), s(b2), s(q), s(r), 1)
}

/// Closed form of the scalar cost `b1² (q + r f²) / (2 (b2 f - a))`.
pub fn scalar_cost(a: f64, b1: f64, b2: f64, q: f64, r: f64, f: f64) -> f64 {
    let decay = b2 * f - a;
    if decay <= 0.0 {
        f64::INFINITY
    } else {
        b1 * b1 * (q + r * f * f) / (2.0 * decay)
    }
}

/// Minimizer of a scalar function on `[lo, hi]` by successive grid refinement.
pub fn grid_minimize(mut lo: f64, mut hi: f64, obj: impl Fn(f64) -> f64) -> f64 {
    let points = 2001;
    let mut best = lo;
    for _ in 0..8 {
        let h = (hi - lo) / (points - 1) as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..points {
            let x = lo + h * i as f64;
            let v = obj(x);
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    best
}

/// `max |a - b|` over all entries.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
