//! Sparse walker-plus-coin states on `Z^d`.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::linalg::{Complex, ZERO};

/// Allowed deviation of `‖Ψ‖` from one when a state is built from raw amplitudes.
pub const NORM_TOL: f64 = 1e-10;

/// Pure state `Σ_m Σ_j ψ_j(m) |e_j⟩ ⊗ |m⟩` with finite support.
///
/// Occupied sites are kept in a flat vector sorted lexicographically by
/// position, with spinors stored contiguously in the same order. A translation
/// preserves that order, so the shift can be done as a merge without hashing.
/// Sites whose spinor is exactly zero are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    geometry: Arc<LatticeGeometry>,
    sites: Vec<i64>,
    amplitudes: Vec<Complex>,
}

impl WalkState {
    /// Builds a state from `(position, spinor)` pairs. Repeated positions are
    /// summed. The result must have unit norm within [`NORM_TOL`].
    pub fn from_entries<I>(geometry: impl Into<Arc<LatticeGeometry>>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Vec<Complex>)>,
    {
        let state = Self::collect(geometry.into(), entries)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Like [`WalkState::from_entries`] but rescales to unit norm.
    pub fn normalized_from_entries<I>(
        geometry: impl Into<Arc<LatticeGeometry>>,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Vec<Complex>)>,
    {
        let mut state = Self::collect(geometry.into(), entries)?;
        let norm = state.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        state.amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(state)
    }

    pub fn localized(
        geometry: impl Into<Arc<LatticeGeometry>>,
        position: &[i64],
        spinor: &[Complex],
    ) -> Result<Self> {
        Self::from_entries(geometry, [(position.to_vec(), spinor.to_vec())])
    }

    /// Random normalized state supported on `positions`, with independent
    /// complex Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(
        geometry: impl Into<Arc<LatticeGeometry>>,
        positions: &[Vec<i64>],
        rng: &mut R,
    ) -> Result<Self> {
        let geometry = geometry.into();
        let c = geometry.coin_dim();
        let entries: Vec<_> = positions
            .iter()
            .map(|p| (p.clone(), gaussian_vector(c, rng)))
            .collect();
        Self::normalized_from_entries(geometry, entries)
    }

    fn collect<I>(geometry: Arc<LatticeGeometry>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<i64>, Vec<Complex>)>,
    {
        let d = geometry.dim();
        let c = geometry.coin_dim();
        let mut entries: Vec<(Vec<i64>, Vec<Complex>)> = entries.into_iter().collect();
        for (p, s) in &entries {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            if s.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: s.len(),
                });
            }
            if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite("spinor"));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));

        let mut sites = Vec::with_capacity(entries.len() * d);
        let mut amplitudes: Vec<Complex> = Vec::with_capacity(entries.len() * c);
        let mut last: Option<Vec<i64>> = None;
        for (p, s) in entries {
            if last.as_ref() == Some(&p) {
                let start = amplitudes.len() - c;
                for (acc, z) in amplitudes[start..].iter_mut().zip(&s) {
                    *acc += z;
                }
            } else {
                sites.extend_from_slice(&p);
                amplitudes.extend_from_slice(&s);
                last = Some(p);
            }
        }
        let mut state = Self {
            geometry,
            sites,
            amplitudes,
        };
        state.prune(0.0);
        Ok(state)
    }

    /// Caller guarantees sorted, unique positions and no all-zero spinors.
    pub(crate) fn from_sorted_parts(
        geometry: Arc<LatticeGeometry>,
        sites: Vec<i64>,
        amplitudes: Vec<Complex>,
    ) -> Self {
        debug_assert_eq!(
            sites.len() / geometry.dim(),
            amplitudes.len() / geometry.coin_dim()
        );
        Self {
            geometry,
            sites,
            amplitudes,
        }
    }

    pub(crate) fn raw_sites(&self) -> &[i64] {
        &self.sites
    }

    pub(crate) fn raw_amplitudes(&self) -> &[Complex] {
        &self.amplitudes
    }

    pub(crate) fn raw_amplitudes_mut(&mut self) -> &mut [Complex] {
        &mut self.amplitudes
    }

    pub(crate) fn shared_geometry(&self) -> &Arc<LatticeGeometry> {
        &self.geometry
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    /// Number of occupied sites.
    pub fn len(&self) -> usize {
        self.sites.len() / self.geometry.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn position(&self, i: usize) -> &[i64] {
        let d = self.geometry.dim();
        &self.sites[i * d..(i + 1) * d]
    }

    pub fn spinor(&self, i: usize) -> &[Complex] {
        let c = self.geometry.coin_dim();
        &self.amplitudes[i * c..(i + 1) * c]
    }

    /// Occupied sites in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], &[Complex])> + '_ {
        self.sites
            .chunks_exact(self.geometry.dim())
            .zip(self.amplitudes.chunks_exact(self.geometry.coin_dim()))
    }

    fn find(&self, position: &[i64]) -> Option<usize> {
        let n = self.len();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.position(mid).cmp(position) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    pub fn get(&self, position: &[i64]) -> Option<&[Complex]> {
        self.find(position).map(|i| self.spinor(i))
    }

    /// Per-site walker probabilities `Σ_j |ψ_j(m)|²`, in site order.
    pub fn distribution(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        self.iter()
            .map(|(p, s)| (p, s.iter().map(|z| z.norm_sqr()).sum()))
    }

    /// `Σ_m Σ_j conj(self_j(m)) · other_j(m)`.
    pub fn inner(&self, other: &WalkState) -> Result<Complex> {
        inner_product(self, other)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Drops sites whose every amplitude has modulus `<= eps`. With `eps = 0`
    /// only exactly-zero spinors go.
    pub fn prune(&mut self, eps: f64) {
        let d = self.geometry.dim();
        let c = self.geometry.coin_dim();
        let n = self.len();
        let mut keep = 0;
        for i in 0..n {
            let spinor = &self.amplitudes[i * c..(i + 1) * c];
            if spinor.iter().all(|z| z.norm() <= eps) {
                continue;
            }
            if keep != i {
                self.sites.copy_within(i * d..(i + 1) * d, keep * d);
                self.amplitudes.copy_within(i * c..(i + 1) * c, keep * c);
            }
            keep += 1;
        }
        self.sites.truncate(keep * d);
        self.amplitudes.truncate(keep * c);
    }

    /// Per-axis `(min, max)` of occupied positions.
    pub fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.sites.chunks_exact(self.geometry.dim());
        let first = it.next()?;
        let (mut lo, mut hi) = (first.to_vec(), first.to_vec());
        for p in it {
            for (a, x) in p.iter().enumerate() {
                lo[a] = lo[a].min(*x);
                hi[a] = hi[a].max(*x);
            }
        }
        Some((lo, hi))
    }

    #[cfg(test)]
    pub(crate) fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.amplitudes.iter_mut().for_each(|z| *z *= factor);
        out.prune(0.0);
        out
    }
}

fn same_geometry(a: &WalkState, b: &WalkState) -> bool {
    Arc::ptr_eq(&a.geometry, &b.geometry) || a.geometry == b.geometry
}

/// Merges two states' site lists, calling `f` with the spinors present at each
/// occupied position (either side may be absent).
fn merge_sites<F>(a: &WalkState, b: &WalkState, mut f: F) -> Result<()>
where
    F: FnMut(Option<&[Complex]>, Option<&[Complex]>),
{
    if !same_geometry(a, b) {
        return Err(Error::GeometryMismatch);
    }
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    while i < na || j < nb {
        let ord = if i == na {
            Ordering::Greater
        } else if j == nb {
            Ordering::Less
        } else {
            a.position(i).cmp(b.position(j))
        };
        match ord {
            Ordering::Less => {
                f(Some(a.spinor(i)), None);
                i += 1;
            }
            Ordering::Greater => {
                f(None, Some(b.spinor(j)));
                j += 1;
            }
            Ordering::Equal => {
                f(Some(a.spinor(i)), Some(b.spinor(j)));
                i += 1;
                j += 1;
            }
        }
    }
    Ok(())
}

pub fn inner_product(a: &WalkState, b: &WalkState) -> Result<Complex> {
    let mut acc = ZERO;
    merge_sites(a, b, |x, y| {
        if let (Some(x), Some(y)) = (x, y) {
            for (u, v) in x.iter().zip(y) {
                acc += u.conj() * v;
            }
        }
    })?;
    Ok(acc)
}

pub fn norm(a: &WalkState) -> f64 {
    a.norm()
}

/// Largest per-amplitude modulus difference; absent sites count as zero.
pub fn max_amplitude_difference(a: &WalkState, b: &WalkState) -> Result<f64> {
    let mut worst: f64 = 0.0;
    merge_sites(a, b, |x, y| {
        let c = x.or(y).map_or(0, |s| s.len());
        for k in 0..c {
            let u = x.map_or(ZERO, |s| s[k]);
            let v = y.map_or(ZERO, |s| s[k]);
            worst = worst.max((u - v).norm());
        }
    })?;
    Ok(worst)
}

/// Unnormalized vector of independent standard complex Gaussians.
pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re, im)
        })
        .collect()
}

/// Haar-random unit spinor of length `c`.
pub fn random_spinor<R: Rng + ?Sized>(c: usize, rng: &mut R) -> Vec<Complex> {
    let mut v = gaussian_vector(c, rng);
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// JSON form of a state, used for snapshots.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateJson {
    pub geometry: LatticeGeometry,
    pub sites: Vec<SiteJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SiteJson {
    pub position: Vec<i64>,
    pub spinor: Vec<[f64; 2]>,
}

impl From<&WalkState> for StateJson {
    fn from(s: &WalkState) -> Self {
        Self {
            geometry: s.geometry().clone(),
            sites: s
                .iter()
                .map(|(p, sp)| SiteJson {
                    position: p.to_vec(),
                    spinor: sp.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<StateJson> for WalkState {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        let entries = j.sites.into_iter().map(|s| {
            (
                s.position,
                s.spinor
                    .into_iter()
                    .map(|[re, im]| Complex::new(re, im))
                    .collect(),
            )
        });
        WalkState::from_entries(j.geometry, entries)
    }
}
