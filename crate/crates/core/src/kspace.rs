//! Quasi-momentum picture of the walk.
//!
//! Translation invariance block-diagonalizes one step into the `c × c`
//! matrices `C̃(k) = D(k) C` with `D(k) = Σ_j e^{−ik·e_j} |e_j⟩⟨e_j|`, and the
//! intervention into `G̃(k) = D(k) G`. This module evaluates the identities
//! behind the revival protocol at sampled `k`, and runs plans on a discrete
//! torus as an independent check of the position-space engine.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coins::{wrap_angle, CoinSpec, PhaseData};
use crate::engine::{InterventionPlan, StepKind};
use crate::error::{Error, Result};
use crate::lattice::LatticeGeometry;
use crate::linalg::{cis, max_abs_diff, CMatrix, Complex, UnitaryMatrix, ZERO};
use crate::state::WalkState;

/// Offset from π used for the corner sample just below the branch cut.
pub const CORNER_EPS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct Quasimomentum(Vec<f64>);

impl Quasimomentum {
    /// Wraps each component into `[−π, π)`.
    pub fn new(k: Vec<f64>) -> Result<Self> {
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("quasimomentum"));
        }
        Ok(Self(k.into_iter().map(wrap_angle).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

fn check_k(k: &Quasimomentum, geometry: &LatticeGeometry) -> Result<()> {
    if k.dim() != geometry.dim() {
        return Err(Error::DimensionMismatch {
            expected: geometry.dim(),
            found: k.dim(),
        });
    }
    Ok(())
}

fn phase_diagonal(k: &[f64], geometry: &LatticeGeometry) -> Vec<Complex> {
    geometry
        .displacements()
        .iter()
        .map(|e| {
            let dot: f64 = k.iter().zip(e).map(|(a, b)| a * *b as f64).sum();
            cis(-dot)
        })
        .collect()
}

/// Multiplies row `j` of `m` by `diag[j]`, i.e. `D m`.
fn left_diag(diag: &[Complex], m: &CMatrix) -> CMatrix {
    let mut out = m.clone();
    for (j, d) in diag.iter().enumerate() {
        out.row_mut(j).iter_mut().for_each(|z| *z *= d);
    }
    out
}

pub fn d_matrix(k: &Quasimomentum, geometry: &LatticeGeometry) -> Result<UnitaryMatrix> {
    check_k(k, geometry)?;
    let diag = phase_diagonal(k.components(), geometry);
    let c = diag.len();
    Ok(UnitaryMatrix::new_unchecked(CMatrix::from_fn(
        c,
        c,
        |i, j| {
            if i == j {
                diag[i]
            } else {
                ZERO
            }
        },
    )))
}

fn check_dims(geometry: &LatticeGeometry, coin: &CoinSpec, g: &UnitaryMatrix) -> Result<()> {
    let c = geometry.coin_dim();
    for found in [coin.dim(), g.dim()] {
        if found != c {
            return Err(Error::DimensionMismatch { expected: c, found });
        }
    }
    Ok(())
}

/// `C̃(k) = D(k) C`.
pub fn c_tilde(
    k: &Quasimomentum,
    geometry: &LatticeGeometry,
    coin: &UnitaryMatrix,
) -> Result<UnitaryMatrix> {
    check_k(k, geometry)?;
    if coin.dim() != geometry.coin_dim() {
        return Err(Error::DimensionMismatch {
            expected: geometry.coin_dim(),
            found: coin.dim(),
        });
    }
    let diag = phase_diagonal(k.components(), geometry);
    Ok(UnitaryMatrix::new_unchecked(left_diag(
        &diag,
        coin.matrix(),
    )))
}

/// `W̃_l(k) = C̃(k)^l G̃(k)`.
pub fn w_tilde(
    k: &Quasimomentum,
    geometry: &LatticeGeometry,
    coin: &CoinSpec,
    g: &UnitaryMatrix,
    l: usize,
) -> Result<UnitaryMatrix> {
    z_tilde(k, geometry, coin, g, l, 0)
}

/// `Z̃_{l,m}(k) = C̃(k)^{l−m} G̃(k) C̃(k)^m`.
pub fn z_tilde(
    k: &Quasimomentum,
    geometry: &LatticeGeometry,
    coin: &CoinSpec,
    g: &UnitaryMatrix,
    l: usize,
    m: usize,
) -> Result<UnitaryMatrix> {
    check_k(k, geometry)?;
    check_dims(geometry, coin, g)?;
    if l == 0 || m > l {
        return Err(Error::InvalidPlan(format!(
            "need l >= 1 and 0 <= m <= l (l={l}, m={m})"
        )));
    }
    let diag = phase_diagonal(k.components(), geometry);
    let ct = left_diag(&diag, coin.matrix().matrix());
    let gt = left_diag(&diag, g.matrix());
    let c = geometry.coin_dim();
    let power = |p: usize| (0..p).fold(CMatrix::identity(c, c), |acc, _| &ct * acc);
    Ok(UnitaryMatrix::new_unchecked(power(l - m) * gt * power(m)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Identity {
    /// `G̃†(k) C̃(k) G̃(k) = e^{iΦ} C̃†(k)`
    Conjugation,
    /// `W̃_l²(k) = e^{iΦl} G̃²(k)`
    CycleSquare,
    /// `G̃²(k) = e^{iΛ} I`
    InterventionSquare,
    /// `W̃_l(k) = e^{iΦl} G̃²(k) W̃_l†(k)`
    AlmostSelfAdjoint,
    /// `Z̃_{l,m}²(k) = e^{iΦl} G̃²(k)` for every `0 <= m <= l`
    ShiftedCycleSquare,
}

impl Identity {
    pub const ALL: [Identity; 5] = [
        Identity::Conjugation,
        Identity::CycleSquare,
        Identity::InterventionSquare,
        Identity::AlmostSelfAdjoint,
        Identity::ShiftedCycleSquare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Conjugation => "conjugation",
            Identity::CycleSquare => "cycle_square",
            Identity::InterventionSquare => "intervention_square",
            Identity::AlmostSelfAdjoint => "almost_self_adjoint",
            Identity::ShiftedCycleSquare => "shifted_cycle_square",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Identity::Conjugation => "G~'(k) C~(k) G~(k) = e^{i Phi} C~'(k)",
            Identity::CycleSquare => "W~_l(k)^2 = e^{i Phi l} G~(k)^2",
            Identity::InterventionSquare => "G~(k)^2 = e^{i Lambda} I",
            Identity::AlmostSelfAdjoint => "W~_l(k) = e^{i Phi l} G~(k)^2 W~_l'(k)",
            Identity::ShiftedCycleSquare => "Z~_{l,m}(k)^2 = e^{i Phi l} G~(k)^2",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: Identity,
    /// Number of `k` points evaluated.
    pub samples: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub l_max: usize,
    /// Random `k` points, in addition to the corner set.
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            l_max: 10,
            samples: 100,
            tol: 1e-12,
            seed: 0,
        }
    }
}

/// `{0, π/2, −π/2, π − ε}^d`.
pub fn corner_points(d: usize) -> Vec<Vec<f64>> {
    let values = [0.0, FRAC_PI_2, -FRAC_PI_2, PI - CORNER_EPS];
    let mut points = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

fn sample_points(d: usize, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = corner_points(d);
    points.extend((0..samples).map(|_| (0..d).map(|_| rng.random_range(-PI..PI)).collect()));
    points
}

/// Worst deviation of each identity at one `k`, in [`Identity::ALL`] order.
fn deviations_at(
    k: &[f64],
    geometry: &LatticeGeometry,
    coin: &CMatrix,
    g: &CMatrix,
    phases: &PhaseData,
    l_max: usize,
) -> [f64; 5] {
    let c = geometry.coin_dim();
    let diag = phase_diagonal(k, geometry);
    let ct = left_diag(&diag, coin);
    let gt = left_diag(&diag, g);
    let gt_sq = &gt * &gt;
    let conj = cis(phases.conjugation_phase);

    let mut powers = Vec::with_capacity(l_max + 1);
    powers.push(CMatrix::identity(c, c));
    for p in 1..=l_max {
        powers.push(&ct * &powers[p - 1]);
    }

    let mut dev = [0.0f64; 5];
    dev[0] = max_abs_diff(&(gt.adjoint() * &ct * &gt), &(ct.adjoint() * conj));
    dev[2] = max_abs_diff(
        &gt_sq,
        &(CMatrix::identity(c, c) * cis(phases.square_phase)),
    );

    for l in 1..=l_max {
        let expected = &gt_sq * cis(phases.conjugation_phase * l as f64);
        let w = &powers[l] * &gt;
        dev[1] = dev[1].max(max_abs_diff(&(&w * &w), &expected));
        dev[3] = dev[3].max(max_abs_diff(&w, &(&expected * w.adjoint())));
        for m in 0..=l {
            let z = &powers[l - m] * &gt * &powers[m];
            dev[4] = dev[4].max(max_abs_diff(&(&z * &z), &expected));
        }
    }
    dev
}

/// Evaluates every [`Identity`] at the corner set plus `config.samples`
/// uniform random `k`, for `l = 1..=l_max` (and all `m` for the shifted
/// cycle). Failures are reported, not raised.
pub fn verify_identities(
    geometry: &LatticeGeometry,
    coin: &CoinSpec,
    g: &UnitaryMatrix,
    phases: &PhaseData,
    config: &VerifyConfig,
) -> Result<Vec<IdentityReport>> {
    check_dims(geometry, coin, g)?;
    let points = sample_points(geometry.dim(), config.samples, config.seed);
    let worst = points
        .par_iter()
        .map(|k| {
            deviations_at(
                k,
                geometry,
                coin.matrix().matrix(),
                g.matrix(),
                phases,
                config.l_max,
            )
        })
        .reduce(|| [0.0; 5], |a, b| std::array::from_fn(|i| a[i].max(b[i])));
    Ok(Identity::ALL
        .iter()
        .zip(worst)
        .map(|(id, max_deviation)| IdentityReport {
            identity: *id,
            samples: points.len(),
            max_deviation,
            tolerance: config.tol,
            pass: max_deviation <= config.tol,
        })
        .collect())
}

/// Torus side length used when none is given: `2t + 16`.
pub fn default_torus_size(steps: usize) -> usize {
    2 * steps + 16
}

/// Spinors on the torus with every amplitude at or below this are dropped
/// from the returned state; they are round-off from the transforms.
pub const TORUS_NOISE_FLOOR: f64 = 1e-13;

/// Runs `plan` mode by mode on the discrete torus `Z_N^d` and maps the result
/// back to `Z^d`.
///
/// `N` must exceed `2 · steps · max_j‖e_j‖_∞ + diameter(initial support)` so
/// that nothing wraps around; then the result equals the position-space run.
pub fn torus_evolve(
    initial: &WalkState,
    coin: &CoinSpec,
    intervention: Option<&UnitaryMatrix>,
    plan: &InterventionPlan,
    size: usize,
) -> Result<WalkState> {
    let geometry = initial.geometry();
    let d = geometry.dim();
    let c = geometry.coin_dim();
    if coin.dim() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: coin.dim(),
        });
    }
    if let Some(g) = intervention {
        if g.dim() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                found: g.dim(),
            });
        }
    }
    let g = match (plan.has_interventions(), intervention) {
        (true, None) => {
            return Err(Error::InvalidPlan(
                "plan has intervention steps but no intervention operator was given".into(),
            ))
        }
        (_, g) => g,
    };

    let (lo, hi) = initial
        .bounding_box()
        .ok_or(Error::NotNormalized { norm: 0.0 })?;
    let reach = plan.len() as i64 * geometry.max_step();
    let diameter = lo.iter().zip(&hi).map(|(a, b)| b - a).max().unwrap_or(0);
    let required = (2 * reach + diameter) as usize;
    if size <= required {
        return Err(Error::TorusTooSmall { size, required });
    }
    let n = size;
    let origin: Vec<i64> = lo.iter().map(|x| x - reach).collect();
    let total = n.pow(d as u32);

    let mut data = vec![ZERO; total * c];
    for (p, spinor) in initial.iter() {
        let idx = p
            .iter()
            .zip(&origin)
            .fold(0usize, |acc, (x, o)| acc * n + (x - o) as usize);
        data[idx * c..(idx + 1) * c].copy_from_slice(spinor);
    }

    let twiddle: Vec<Complex> = (0..n).map(|q| cis(-TAU * q as f64 / n as f64)).collect();
    for axis in 0..d {
        dft_axis(&mut data, n, d, c, axis, &twiddle, false);
    }

    let coin_m = coin.matrix().matrix();
    let mut v = vec![ZERO; c];
    let mut w = vec![ZERO; c];
    let mut k = vec![0.0; d];
    for mode in 0..total {
        let mut rest = mode;
        for a in (0..d).rev() {
            k[a] = TAU * (rest % n) as f64 / n as f64;
            rest /= n;
        }
        let diag = phase_diagonal(&k, geometry);
        v.copy_from_slice(&data[mode * c..(mode + 1) * c]);
        for kind in plan.steps() {
            let m = match (kind, g) {
                (StepKind::Intervention, Some(g)) => g.matrix(),
                _ => coin_m,
            };
            for (i, out) in w.iter_mut().enumerate() {
                let s: Complex = (0..c).map(|j| m[(i, j)] * v[j]).sum();
                *out = diag[i] * s;
            }
            std::mem::swap(&mut v, &mut w);
        }
        data[mode * c..(mode + 1) * c].copy_from_slice(&v);
    }

    for axis in 0..d {
        dft_axis(&mut data, n, d, c, axis, &twiddle, true);
    }

    let mut entries = Vec::new();
    for idx in 0..total {
        let spinor = &data[idx * c..(idx + 1) * c];
        if spinor.iter().all(|z| z.norm() <= TORUS_NOISE_FLOOR) {
            continue;
        }
        let mut pos = vec![0i64; d];
        let mut rest = idx;
        for a in (0..d).rev() {
            pos[a] = (rest % n) as i64 + origin[a];
            rest /= n;
        }
        entries.push((pos, spinor.to_vec()));
    }
    WalkState::from_entries(initial.shared_geometry().clone(), entries)
}

/// In-place DFT of every line along `axis`. Forward uses `e^{−2πi qx/N}`,
/// inverse the conjugate with a `1/N` factor.
fn dft_axis(
    data: &mut [Complex],
    n: usize,
    d: usize,
    c: usize,
    axis: usize,
    twiddle: &[Complex],
    inverse: bool,
) {
    let total = n.pow(d as u32);
    let stride = n.pow((d - 1 - axis) as u32);
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    let mut line = vec![ZERO; n * c];
    let mut out = vec![ZERO; n * c];
    for start in 0..total {
        if !(start / stride).is_multiple_of(n) {
            continue;
        }
        for q in 0..n {
            let src = (start + q * stride) * c;
            line[q * c..(q + 1) * c].copy_from_slice(&data[src..src + c]);
        }
        for freq in 0..n {
            let acc = &mut out[freq * c..(freq + 1) * c];
            acc.iter_mut().for_each(|z| *z = ZERO);
            for x in 0..n {
                let mut t = twiddle[(freq * x) % n];
                if inverse {
                    t = t.conj();
                }
                for j in 0..c {
                    acc[j] += t * line[x * c + j];
                }
            }
        }
        for q in 0..n {
            let dst = (start + q * stride) * c;
            for j in 0..c {
                data[dst + j] = out[q * c + j] * scale;
            }
        }
    }
}
