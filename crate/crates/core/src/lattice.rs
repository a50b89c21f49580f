use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice dimension `d` and the displacement `e_j` attached to each coin
/// basis state `j`.
///
/// Displacements must come in opposite pairs, `e_j + e_{c-1-j} = 0`, which is
/// what makes the antidiagonal intervention operator available at all.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GeometryRepr", into = "GeometryRepr")]
pub struct LatticeGeometry {
    dim: usize,
    displacements: Vec<Vec<i64>>,
    max_step: i64,
}

#[derive(Serialize, Deserialize)]
struct GeometryRepr {
    dim: usize,
    displacements: Vec<Vec<i64>>,
}

impl TryFrom<GeometryRepr> for LatticeGeometry {
    type Error = Error;

    fn try_from(r: GeometryRepr) -> Result<Self> {
        Self::new(r.dim, r.displacements)
    }
}

impl From<LatticeGeometry> for GeometryRepr {
    fn from(g: LatticeGeometry) -> Self {
        Self {
            dim: g.dim,
            displacements: g.displacements,
        }
    }
}

impl LatticeGeometry {
    pub fn new(dim: usize, displacements: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGeometry("dimension must be positive".into()));
        }
        let c = displacements.len();
        if c < 2 {
            return Err(Error::InvalidGeometry(format!(
                "need at least two displacements, got {c}"
            )));
        }
        if let Some(bad) = displacements.iter().find(|e| e.len() != dim) {
            return Err(Error::InvalidGeometry(format!(
                "displacement {bad:?} does not have {dim} components"
            )));
        }
        for (j, e) in displacements.iter().enumerate() {
            if displacements[..j].contains(e) {
                return Err(Error::InvalidGeometry(format!(
                    "displacement {e:?} appears more than once"
                )));
            }
            let partner = &displacements[c - 1 - j];
            if e.iter().zip(partner).any(|(a, b)| a + b != 0) {
                return Err(Error::InvalidGeometry(format!(
                    "e_{j} = {e:?} and e_{} = {partner:?} do not cancel",
                    c - 1 - j
                )));
            }
        }
        let max_step = displacements
            .iter()
            .flatten()
            .map(|x| x.abs())
            .max()
            .unwrap_or(0);
        Ok(Self {
            dim,
            displacements,
            max_step,
        })
    }

    /// Nearest-neighbour geometry on `Z^d` with `c = 2d`.
    ///
    /// For `d = 1` the order is `(-1, +1)`: coin 0 moves left, coin 1 right.
    /// Otherwise `e_0..e_{d-1}` are the positive unit vectors in axis order and
    /// `e_d..e_{2d-1}` are their negations in reverse order.
    pub fn standard(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGeometry("dimension must be positive".into()));
        }
        if dim == 1 {
            return Self::new(1, vec![vec![-1], vec![1]]);
        }
        let unit = |axis: usize, sign: i64| {
            let mut v = vec![0; dim];
            v[axis] = sign;
            v
        };
        let mut displacements: Vec<Vec<i64>> = (0..dim).map(|a| unit(a, 1)).collect();
        displacements.extend((0..dim).rev().map(|a| unit(a, -1)));
        Self::new(dim, displacements)
    }

    pub fn line() -> Self {
        Self::standard(1).expect("d = 1 is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of coin states, `c`.
    pub fn coin_dim(&self) -> usize {
        self.displacements.len()
    }

    pub fn displacement(&self, j: usize) -> &[i64] {
        &self.displacements[j]
    }

    pub fn displacements(&self) -> &[Vec<i64>] {
        &self.displacements
    }

    /// `max_j ‖e_j‖_∞`.
    pub fn max_step(&self) -> i64 {
        self.max_step
    }
}
