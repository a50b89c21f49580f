//! Test-only reference implementations that share no code with the engine.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Brute-force one-dimensional walk on the window `-half..=half`.
///
/// The joint state is a dense vector indexed by `2 * (x + half) + coin`, and
/// every step multiplies it by the explicit matrix `S (C ⊗ I)`. Coin 0 moves
/// left, coin 1 moves right.
pub struct DenseLineWalk {
    half: i64,
    step: DMatrix<Complex64>,
    intervention: DMatrix<Complex64>,
}

impl DenseLineWalk {
    pub fn new(half: i64, coin: [[Complex64; 2]; 2], g: [[Complex64; 2]; 2]) -> Self {
        Self {
            half,
            step: Self::step_matrix(half, coin),
            intervention: Self::step_matrix(half, g),
        }
    }

    fn sites(half: i64) -> usize {
        (2 * half + 1) as usize
    }

    fn index(half: i64, x: i64, coin: usize) -> usize {
        2 * (x + half) as usize + coin
    }

    fn step_matrix(half: i64, coin: [[Complex64; 2]; 2]) -> DMatrix<Complex64> {
        let n = 2 * Self::sites(half);
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);

        let mut coin_op = DMatrix::from_element(n, n, zero);
        for x in -half..=half {
            for a in 0..2 {
                for b in 0..2 {
                    coin_op[(Self::index(half, x, a), Self::index(half, x, b))] = coin[a][b];
                }
            }
        }

        // |z><z| ⊗ |x - (-1)^z><x|, dropping amplitude that would leave the window.
        let mut shift = DMatrix::from_element(n, n, zero);
        for x in -half..=half {
            for z in 0..2usize {
                let target = x - if z == 0 { 1 } else { -1 };
                if target.abs() <= half {
                    shift[(Self::index(half, target, z), Self::index(half, x, z))] = one;
                }
            }
        }
        shift * coin_op
    }

    pub fn localized(&self, spinor: [Complex64; 2]) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 2 * Self::sites(self.half)];
        v[Self::index(self.half, 0, 0)] = spinor[0];
        v[Self::index(self.half, 0, 1)] = spinor[1];
        v
    }

    pub fn evolve(&self, state: &[Complex64], intervention: bool) -> Vec<Complex64> {
        let m = if intervention {
            &self.intervention
        } else {
            &self.step
        };
        let v = nalgebra::DVector::from_column_slice(state);
        (m * v).iter().copied().collect()
    }

    pub fn amplitude(&self, state: &[Complex64], x: i64, coin: usize) -> Complex64 {
        state[Self::index(self.half, x, coin)]
    }

    pub fn return_probability(&self, state: &[Complex64]) -> f64 {
        (0..2).map(|z| self.amplitude(state, 0, z).norm_sqr()).sum()
    }

    pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.conj() * y)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn hadamard_2x2() -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
}

/// G = |0><1| - |1><0|.
pub fn flip_2x2() -> [[Complex64; 2]; 2] {
    [[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]]
}

/// The coin state (|0> + i|1>)/sqrt(2) used throughout the line-walk examples.
pub fn symmetric_spinor() -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [c(h, 0.0), c(0.0, h)]
}
