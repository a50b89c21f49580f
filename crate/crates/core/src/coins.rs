//! Coin-flip operators, the admissibility test for revival-inducing
//! interventions, and the constructive side: building `G` from its phases and
//! sampling admissible coins.
//!
//! A coin `C` admits an intervention when there are phases `φ_m` and `Φ` with
//!
//! ```text
//! C_{mn} = e^{i(Φ + φ_m − φ_n)} · conj(C_{c−1−n, c−1−m})
//! ```
//!
//! for every entry. The intervention is then the antidiagonal
//! `G = Σ_m e^{iφ_m} |e_m⟩⟨e_{c−1−m}|`, the sums `φ_m + φ_{c−1−m}` all equal
//! one angle `Λ`, and `G† C G† = e^{i(Φ−Λ)} C†`.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cis, max_abs_diff, unitarity_deviation, CMatrix, Complex, UnitaryMatrix, ONE, ZERO,
};
use crate::state::gaussian_vector;

/// Default magnitude tolerance for the admissibility test.
pub const MAGNITUDE_TOL: f64 = 1e-10;
/// Default angular tolerance for phase consistency.
pub const PHASE_TOL: f64 = 1e-9;

/// Wraps an angle into `[−π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let mut r = x - TAU * ((x + PI) / TAU).floor();
    if r >= PI {
        r -= TAU;
    }
    if r < -PI {
        r += TAU;
    }
    r
}

/// Shortest angular distance between `a` and `b`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoinFamily {
    Su2,
    Hadamard,
    Grover,
    Custom,
}

impl fmt::Display for CoinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CoinFamily::Su2 => "su2",
            CoinFamily::Hadamard => "hadamard",
            CoinFamily::Grover => "grover",
            CoinFamily::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Angles of the general two-level coin, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Su2Params {
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoinSpec {
    matrix: UnitaryMatrix,
    family: CoinFamily,
    params: Option<Su2Params>,
}

impl CoinSpec {
    pub fn custom(matrix: CMatrix) -> Result<Self> {
        Ok(Self {
            matrix: UnitaryMatrix::new(matrix)?,
            family: CoinFamily::Custom,
            params: None,
        })
    }

    pub fn custom_with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        Ok(Self {
            matrix: UnitaryMatrix::with_tolerance(matrix, tol)?,
            family: CoinFamily::Custom,
            params: None,
        })
    }

    pub fn matrix(&self) -> &UnitaryMatrix {
        &self.matrix
    }

    pub fn family(&self) -> CoinFamily {
        self.family
    }

    pub fn params(&self) -> Option<Su2Params> {
        self.params
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `e^{iα} C`, relabelled as a custom coin.
    pub fn with_global_phase(&self, alpha: f64) -> Self {
        Self {
            matrix: self.matrix.scaled_by_phase(alpha),
            family: CoinFamily::Custom,
            params: None,
        }
    }
}

/// `[[cosθ, e^{iφ₁} sinθ], [e^{iφ₂} sinθ, −e^{i(φ₁+φ₂)} cosθ]]`.
pub fn coin_su2(theta: f64, phi1: f64, phi2: f64) -> CoinSpec {
    let (s, c) = theta.sin_cos();
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            Complex::new(c, 0.0),
            cis(phi1) * s,
            cis(phi2) * s,
            -cis(phi1 + phi2) * c,
        ],
    );
    CoinSpec {
        matrix: UnitaryMatrix::new_unchecked(m),
        family: CoinFamily::Su2,
        params: Some(Su2Params { theta, phi1, phi2 }),
    }
}

/// Walsh–Hadamard coin `C_{mn} = (−1)^{m·n} / √c`, with `m·n` the bitwise dot
/// product. `c` must be a power of two.
pub fn hadamard_coin(c: usize) -> Result<CoinSpec> {
    if c < 2 || !c.is_power_of_two() {
        return Err(Error::InvalidCoin(format!(
            "Hadamard coin needs a power-of-two dimension >= 2, got {c}"
        )));
    }
    let scale = 1.0 / (c as f64).sqrt();
    let m = CMatrix::from_fn(c, c, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        Complex::new(sign * scale, 0.0)
    });
    Ok(CoinSpec {
        matrix: UnitaryMatrix::new_unchecked(m),
        family: CoinFamily::Hadamard,
        params: None,
    })
}

/// Grover diffusion coin `C_{mn} = 2/c − δ_{mn}`.
pub fn grover_coin(c: usize) -> Result<CoinSpec> {
    if c < 2 {
        return Err(Error::InvalidCoin(format!(
            "Grover coin needs dimension >= 2, got {c}"
        )));
    }
    let off = 2.0 / c as f64;
    let m = CMatrix::from_fn(c, c, |i, j| {
        Complex::new(if i == j { off - 1.0 } else { off }, 0.0)
    });
    Ok(CoinSpec {
        matrix: UnitaryMatrix::new_unchecked(m),
        family: CoinFamily::Grover,
        params: None,
    })
}

/// Discrete Fourier coin `C_{mn} = e^{2πi mn / c} / √c`.
pub fn fourier_coin(c: usize) -> Result<CoinSpec> {
    if c < 2 {
        return Err(Error::InvalidCoin(format!(
            "Fourier coin needs dimension >= 2, got {c}"
        )));
    }
    let scale = 1.0 / (c as f64).sqrt();
    let m = CMatrix::from_fn(c, c, |i, j| {
        cis(TAU * ((i * j) % c) as f64 / c as f64) * scale
    });
    Ok(CoinSpec {
        matrix: UnitaryMatrix::new_unchecked(m),
        family: CoinFamily::Custom,
        params: None,
    })
}

/// Intervention phases `φ_m`, the conjugation phase `Φ` and the square phase
/// `Λ = φ_m + φ_{c−1−m}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseData {
    #[serde(rename = "phi")]
    pub phases: Vec<f64>,
    #[serde(rename = "Phi")]
    pub conjugation_phase: f64,
    #[serde(rename = "Lambda")]
    pub square_phase: f64,
}

impl PhaseData {
    /// Derives `Λ` from `φ_0 + φ_{c−1}` and checks the remaining pairs.
    pub fn new(phases: Vec<f64>, conjugation_phase: f64) -> Result<Self> {
        let square_phase = match (phases.first(), phases.last()) {
            (Some(a), Some(b)) => wrap_angle(a + b),
            _ => return Err(Error::InconsistentPhases("no phases given".into())),
        };
        let p = Self {
            phases,
            conjugation_phase,
            square_phase,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.phases.len();
        if c < 2 {
            return Err(Error::InconsistentPhases(format!(
                "need at least two phases, got {c}"
            )));
        }
        if self
            .phases
            .iter()
            .chain([&self.conjugation_phase, &self.square_phase])
            .any(|x| !x.is_finite())
        {
            return Err(Error::NonFinite("phases"));
        }
        for m in 0..c {
            let sum = self.phases[m] + self.phases[c - 1 - m];
            if angle_distance(sum, self.square_phase) > PHASE_TOL {
                return Err(Error::InconsistentPhases(format!(
                    "φ_{m} + φ_{} = {sum} differs from Λ = {}",
                    c - 1 - m,
                    self.square_phase
                )));
            }
        }
        Ok(())
    }
}

/// The first constraint a rejected coin violates.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `|C_{mn}| ≠ |C_{c−1−n, c−1−m}|`.
    Magnitude {
        row: usize,
        col: usize,
        modulus: f64,
        partner_modulus: f64,
    },
    /// No choice of phases matches entry `(row, col)`; `residual` is the
    /// smallest mismatch found over the candidate conjugation phases.
    Phase {
        row: usize,
        col: usize,
        residual: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Magnitude {
                row,
                col,
                modulus,
                partner_modulus,
            } => write!(
                f,
                "|C[{row},{col}]| = {modulus} but its mirrored partner has modulus {partner_modulus}"
            ),
            Violation::Phase { row, col, residual } => write!(
                f,
                "no phases satisfy entry C[{row},{col}] (residual {residual:e})"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Admissible(PhaseData),
    Rejected(Violation),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdmissibilityTolerance {
    pub magnitude: f64,
    pub phase: f64,
}

impl Default for AdmissibilityTolerance {
    fn default() -> Self {
        Self {
            magnitude: MAGNITUDE_TOL,
            phase: PHASE_TOL,
        }
    }
}

/// Gauge-fixed phases (`φ_0 = 0`) for which `coin` admits an intervention, or
/// `None`. `tol` bounds magnitudes; phases are checked at `10 · tol`.
pub fn check_admissible(coin: &CoinSpec, tol: f64) -> Option<PhaseData> {
    let tol = AdmissibilityTolerance {
        magnitude: tol,
        phase: 10.0 * tol,
    };
    match decide(coin.matrix().matrix(), &tol) {
        Verdict::Admissible(p) => Some(p),
        Verdict::Rejected(_) => None,
    }
}

/// Full admissibility decision for a raw matrix, reporting the violated
/// constraint on rejection. Fails if `m` is not unitary within `unitary_tol`.
pub fn admissibility(
    m: &CMatrix,
    tol: &AdmissibilityTolerance,
    unitary_tol: f64,
) -> Result<Verdict> {
    let deviation = unitarity_deviation(m);
    if deviation.is_nan() || deviation > unitary_tol {
        return Err(Error::NotUnitary { deviation });
    }
    Ok(decide(m, tol))
}

/// Phase of each unknown as `offset + multiple · Φ`, relative to the root of
/// its connected component.
#[derive(Clone, Copy)]
struct Linear {
    offset: f64,
    multiple: i64,
}

fn decide(m: &CMatrix, tol: &AdmissibilityTolerance) -> Verdict {
    let c = m.nrows();
    let mirror = |i: usize| c - 1 - i;

    for i in 0..c {
        for j in 0..c {
            let (a, b) = (m[(i, j)].norm(), m[(mirror(j), mirror(i))].norm());
            if (a - b).abs() > tol.magnitude {
                return Verdict::Rejected(Violation::Magnitude {
                    row: i,
                    col: j,
                    modulus: a,
                    partner_modulus: b,
                });
            }
        }
    }

    let nonzero = |i: usize, j: usize| m[(i, j)].norm() > tol.magnitude;
    // Required value of Φ + φ_i − φ_j for a nonzero entry.
    let target = |i: usize, j: usize| m[(i, j)].arg() + m[(mirror(j), mirror(i))].arg();

    // Breadth-first assignment over the graph whose edges are nonzero entries.
    let mut phase: Vec<Option<Linear>> = vec![None; c];
    let mut component = vec![usize::MAX; c];
    let mut roots = Vec::new();
    for root in 0..c {
        if phase[root].is_some() {
            continue;
        }
        let id = roots.len();
        roots.push(root);
        phase[root] = Some(Linear {
            offset: 0.0,
            multiple: 0,
        });
        component[root] = id;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let pu = phase[u].expect("queued nodes are assigned");
            for v in 0..c {
                if phase[v].is_some() {
                    continue;
                }
                // φ_v = φ_u − target(u, v) + Φ
                let next = if nonzero(u, v) {
                    Some(Linear {
                        offset: pu.offset - target(u, v),
                        multiple: pu.multiple + 1,
                    })
                // φ_v = φ_u + target(v, u) − Φ
                } else if nonzero(v, u) {
                    Some(Linear {
                        offset: pu.offset + target(v, u),
                        multiple: pu.multiple - 1,
                    })
                } else {
                    None
                };
                if let Some(next) = next {
                    phase[v] = Some(next);
                    component[v] = id;
                    queue.push_back(v);
                }
            }
        }
    }
    let phase: Vec<Linear> = phase
        .into_iter()
        .map(|p| p.expect("all nodes visited"))
        .collect();

    // Every nonzero entry constrains K·Φ ≡ B (mod 2π); the smallest nonzero K
    // yields a finite candidate set that contains any valid Φ.
    let mut pivot: Option<(i64, f64)> = None;
    for i in 0..c {
        for j in 0..c {
            if !nonzero(i, j) {
                continue;
            }
            let k = phase[i].multiple - phase[j].multiple + 1;
            let b = target(i, j) - phase[i].offset + phase[j].offset;
            if k != 0 && pivot.is_none_or(|(pk, _)| k.abs() < pk.abs()) {
                pivot = Some((k, b));
            }
        }
    }
    let candidates: Vec<f64> = match pivot {
        Some((k, b)) => (0..k.abs())
            .map(|j| wrap_angle((b + TAU * j as f64) / k as f64))
            .collect(),
        None => vec![0.0],
    };

    let mut best: Option<Violation> = None;
    for conj_phase in candidates {
        let raw: Vec<f64> = phase
            .iter()
            .map(|p| p.offset + p.multiple as f64 * conj_phase)
            .collect();
        let phases = align_components(&raw, &component, &roots);
        let square_phase = wrap_angle(phases[0] + phases[c - 1]);
        let candidate = PhaseData {
            phases: phases.iter().map(|x| wrap_angle(*x)).collect(),
            conjugation_phase: wrap_angle(conj_phase),
            square_phase,
        };
        match first_violation(m, &candidate, tol) {
            None => return Verdict::Admissible(candidate),
            Some(v) => {
                let better = match (&best, &v) {
                    (None, _) => true,
                    (
                        Some(Violation::Phase { residual: r0, .. }),
                        Violation::Phase { residual: r1, .. },
                    ) => r1 < r0,
                    _ => false,
                };
                if better {
                    best = Some(v);
                }
            }
        }
    }
    Verdict::Rejected(best.expect("at least one candidate was tried"))
}

/// Shifts each component by a constant so that `φ_m + φ_{c−1−m}` is the same
/// for every `m`. The component of index 0 keeps `φ_0 = 0`.
fn align_components(raw: &[f64], component: &[usize], roots: &[usize]) -> Vec<f64> {
    let c = raw.len();
    let mirror = |i: usize| c - 1 - i;
    let mut shift: Vec<Option<f64>> = vec![None; roots.len()];
    let mut square: Option<f64> = None;

    for (id, &root) in roots.iter().enumerate() {
        if shift[id].is_some() {
            continue;
        }
        let partner = component[mirror(root)];
        let sum = raw[root] + raw[mirror(root)];
        if partner == id {
            // Shifting a self-mirrored component by u moves its sum by 2u.
            match square {
                None => {
                    shift[id] = Some(0.0);
                    square = Some(sum);
                }
                Some(lambda) => shift[id] = Some(wrap_angle(lambda - sum) / 2.0),
            }
        } else {
            shift[id] = Some(0.0);
            match square {
                None => {
                    shift[partner] = Some(0.0);
                    square = Some(sum);
                }
                Some(lambda) => shift[partner] = Some(wrap_angle(lambda - sum)),
            }
        }
    }

    raw.iter()
        .zip(component)
        .map(|(x, id)| x + shift[*id].expect("every component aligned"))
        .collect()
}

fn first_violation(m: &CMatrix, p: &PhaseData, tol: &AdmissibilityTolerance) -> Option<Violation> {
    let c = m.nrows();
    for i in 0..c {
        for j in 0..c {
            let rhs = cis(p.conjugation_phase + p.phases[i] - p.phases[j])
                * m[(c - 1 - j, c - 1 - i)].conj();
            let residual = (m[(i, j)] - rhs).norm();
            if residual > tol.phase {
                return Some(Violation::Phase {
                    row: i,
                    col: j,
                    residual,
                });
            }
        }
    }
    for i in 0..c {
        let sum = p.phases[i] + p.phases[c - 1 - i];
        if angle_distance(sum, p.square_phase) > tol.phase {
            return Some(Violation::Phase {
                row: i,
                col: c - 1 - i,
                residual: angle_distance(sum, p.square_phase),
            });
        }
    }
    None
}

/// `G = Σ_m e^{iφ_m} |e_m⟩⟨e_{c−1−m}|`.
pub fn construct_g(phases: &PhaseData, c: usize) -> Result<UnitaryMatrix> {
    if phases.dim() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: phases.dim(),
        });
    }
    phases.validate()?;
    let mut g = CMatrix::from_element(c, c, ZERO);
    for (m, phi) in phases.phases.iter().enumerate() {
        g[(m, c - 1 - m)] = cis(*phi);
    }
    Ok(UnitaryMatrix::new_unchecked(g))
}

/// `max |G†CG† − e^{i(Φ−Λ)}C†| <= tol`. Mismatched dimensions give `false`.
pub fn verify_conjugation(
    coin: &CoinSpec,
    g: &UnitaryMatrix,
    phases: &PhaseData,
    tol: f64,
) -> bool {
    conjugation_deviation(coin.matrix(), g, phases).is_some_and(|d| d <= tol)
}

pub fn conjugation_deviation(
    c: &UnitaryMatrix,
    g: &UnitaryMatrix,
    phases: &PhaseData,
) -> Option<f64> {
    if c.dim() != g.dim() {
        return None;
    }
    let gd = g.matrix().adjoint();
    let lhs = &gd * c.matrix() * &gd;
    let rhs = c.matrix().adjoint() * cis(phases.conjugation_phase - phases.square_phase);
    Some(max_abs_diff(&lhs, &rhs))
}

/// Reads the phases off an intervention `G` and checks it against `coin`.
///
/// `G` must be antidiagonal with unit-modulus entries whose mirrored sums are
/// constant, and `G†CG†` must be a phase multiple of `C†`. The returned phases
/// are those of `G` as given, without gauge fixing.
pub fn certify_pair(coin: &CoinSpec, g: &UnitaryMatrix, tol: f64) -> Option<PhaseData> {
    let c = coin.dim();
    if g.dim() != c {
        return None;
    }
    let gm = g.matrix();
    for i in 0..c {
        for j in 0..c {
            let z = gm[(i, j)];
            let ok = if j == c - 1 - i {
                (z.norm() - 1.0).abs() <= tol
            } else {
                z.norm() <= tol
            };
            if !ok {
                return None;
            }
        }
    }
    let phases: Vec<f64> = (0..c).map(|i| gm[(i, c - 1 - i)].arg()).collect();
    let square_phase = wrap_angle(phases[0] + phases[c - 1]);
    if (0..c).any(|i| angle_distance(phases[i] + phases[c - 1 - i], square_phase) > tol) {
        return None;
    }

    let gd = gm.adjoint();
    let lhs = &gd * coin.matrix().matrix() * &gd;
    let cd = coin.matrix().matrix().adjoint();
    let (mut best, mut at) = (0.0, (0, 0));
    for i in 0..c {
        for j in 0..c {
            if cd[(i, j)].norm() > best {
                best = cd[(i, j)].norm();
                at = (i, j);
            }
        }
    }
    let ratio = lhs[at] / cd[at];
    let p = PhaseData {
        phases,
        conjugation_phase: wrap_angle(ratio.arg() + square_phase),
        square_phase,
    };
    verify_conjugation(coin, g, &p, tol).then_some(p)
}

fn random_phases<R: Rng + ?Sized>(c: usize, rng: &mut R) -> PhaseData {
    let mut uniform = || rng.random_range(-PI..PI);
    let square_phase = uniform();
    let mut phases = vec![0.0; c];
    phases[c - 1] = square_phase;
    for m in 1..c {
        let partner = c - 1 - m;
        if m < partner {
            phases[m] = uniform();
            phases[partner] = wrap_angle(square_phase - phases[m]);
        } else if m == partner {
            phases[m] = square_phase / 2.0;
        }
    }
    PhaseData {
        phases,
        conjugation_phase: uniform(),
        square_phase,
    }
}

/// Orthogonal projector onto the span of the columns of a random complex
/// Gaussian `c × rank` matrix.
fn random_projector<R: Rng + ?Sized>(c: usize, rank: usize, rng: &mut R) -> CMatrix {
    let a = DMatrix::from_vec(c, rank, gaussian_vector(c * rank, rng));
    let q = a.qr().q();
    &q * q.adjoint()
}

/// `C = e^{iβ} · G · (2P − I)` for an orthogonal projector `P`, where `β` is
/// half of `Φ − Λ` taken in `[−π, π)`.
///
/// Every admissible coin has this form: the conjugation relation is
/// `C = e^{iΦ} G C† G†`, and writing `C = G X` makes `e^{−i(Φ−Λ)/2} X` a
/// Hermitian unitary, i.e. a reflection.
pub fn admissible_coin_from_projector(phases: &PhaseData, projector: &CMatrix) -> Result<CoinSpec> {
    let c = phases.dim();
    if projector.nrows() != c || projector.ncols() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: projector.nrows(),
        });
    }
    let herm = max_abs_diff(projector, &projector.adjoint());
    let idem = max_abs_diff(&(projector * projector), projector);
    if herm > 1e-12 || idem > 1e-12 {
        return Err(Error::InvalidCoin(format!(
            "not an orthogonal projector (hermiticity {herm:e}, idempotence {idem:e})"
        )));
    }
    let g = construct_g(phases, c)?;
    let reflection = projector * Complex::new(2.0, 0.0) - CMatrix::identity(c, c) * ONE;
    let m = g.matrix()
        * reflection
        * cis(wrap_angle(phases.conjugation_phase - phases.square_phase) / 2.0);
    CoinSpec::custom(m)
}

/// Random admissible coin together with the phases it was drawn from.
///
/// Phases are uniform with `φ_0 = 0`, the reflection rank is uniform in
/// `1..c`, and the projector is Haar-random within that rank.
pub fn random_admissible_coin(c: usize, seed: u64) -> Result<(CoinSpec, PhaseData)> {
    if c < 2 {
        return Err(Error::InvalidCoin(format!(
            "coin dimension must be >= 2, got {c}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases = random_phases(c, &mut rng);
    let rank = rng.random_range(1..c);
    let projector = random_projector(c, rank, &mut rng);
    let coin = admissible_coin_from_projector(&phases, &projector)?;
    Ok((coin, phases))
}
