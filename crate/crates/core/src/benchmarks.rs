//! Benchmark plants: a chain of masses connected by springs, and a planar
//! network of identical unstable second-order systems coupled by distance.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::plant::Plant;

/// Positions of the distributed subsystems, in block order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedLayout {
    pub positions: Vec<[f64; 2]>,
    pub side: f64,
    pub seed: u64,
}

impl DistributedLayout {
    /// Random positions, uniform on `[0, side]²`.
    pub fn random(count: usize, side: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..count)
            .map(|_| [rng.random::<f64>() * side, rng.random::<f64>() * side])
            .collect();
        DistributedLayout { positions, side, seed }
    }

    /// Coupling strengths `α_ij = exp(-‖p_i - p_j‖)`; the diagonal is unused and left zero.
    pub fn coupling(&self) -> DMatrix<f64> {
        let n = self.positions.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                let [xi, yi] = self.positions[i];
                let [xj, yj] = self.positions[j];
                (-(xi - xj).hypot(yi - yj)).exp()
            }
        })
    }
}

/// Mass-spring chain with `masses` unit masses: state `[positions; velocities]`,
/// `A = [[0, I], [T, 0]]` with `T = tridiag(1, -2, 1)`, `B1 = B2 = [0; I]`,
/// `Q = I`, `R = 10 I`, and one output per state.
pub fn make_mass_spring(masses: usize) -> Result<Plant> {
    if masses < 2 {
        return Err(Error::InvalidConfig(format!(
            "mass-spring chain needs at least 2 masses, got {masses}"
        )));
    }
    let n = 2 * masses;
    let mut a = DMatrix::zeros(n, n);
    for i in 0..masses {
        a[(i, masses + i)] = 1.0;
        a[(masses + i, i)] = -2.0;
        if i + 1 < masses {
            a[(masses + i, i + 1)] = 1.0;
            a[(masses + i + 1, i)] = 1.0;
        }
    }
    let mut b = DMatrix::zeros(n, masses);
    for i in 0..masses {
        b[(masses + i, i)] = 1.0;
    }
    Ok(Plant::new(
        a,
        b.clone(),
        b,
        DMatrix::identity(n, n),
        DMatrix::identity(masses, masses) * 10.0,
        n,
    ))
}

/// Network of `count` subsystems with `A_ii = [[1, 1], [1, 2]]`,
/// `A_ij = α_ij I₂`, `B_i = [0; 1]` for both disturbance and control,
/// `Q = I`, `R = 10 I`, and one output per state.
pub fn make_distributed(count: usize, side: f64, seed: u64) -> Result<(Plant, DistributedLayout)> {
    if count < 2 {
        return Err(Error::InvalidConfig(format!(
            "distributed system needs at least 2 subsystems, got {count}"
        )));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::InvalidConfig(format!("square side must be positive, got {side}")));
    }
    let layout = DistributedLayout::random(count, side, seed);
    Ok((plant_from_layout(&layout), layout))
}

pub fn plant_from_layout(layout: &DistributedLayout) -> Plant {
    let count = layout.positions.len();
    let n = 2 * count;
    let alpha = layout.coupling();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..count {
        for j in 0..count {
            let (r, c) = (2 * i, 2 * j);
            if i == j {
                a[(r, c)] = 1.0;
                a[(r, c + 1)] = 1.0;
                a[(r + 1, c)] = 1.0;
                a[(r + 1, c + 1)] = 2.0;
            } else {
                a[(r, c)] = alpha[(i, j)];
                a[(r + 1, c + 1)] = alpha[(i, j)];
            }
        }
    }
    let mut b = DMatrix::zeros(n, count);
    for i in 0..count {
        b[(2 * i + 1, i)] = 1.0;
    }
    Plant::new(
        a,
        b.clone(),
        b,
        DMatrix::identity(n, n),
        DMatrix::identity(count, count) * 10.0,
        n,
    )
}
