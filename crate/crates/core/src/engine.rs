//! Position-space evolution: coin toss, conditional shift, and schedules that
//! interleave the ordinary coin `C` with the intervention `G`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coins::{certify_pair, CoinSpec, MAGNITUDE_TOL};
use crate::error::{Error, Result};
use crate::linalg::{Complex, UnitaryMatrix, ZERO};
use crate::metrics::{fidelity, return_probability};
use crate::state::WalkState;

/// Replaces every stored spinor `ψ(m)` by `M ψ(m)`.
pub fn apply_coin(state: &WalkState, m: &UnitaryMatrix) -> Result<WalkState> {
    let mut out = state.clone();
    apply_coin_in_place(&mut out, m)?;
    Ok(out)
}

pub fn apply_coin_in_place(state: &mut WalkState, m: &UnitaryMatrix) -> Result<()> {
    let c = state.geometry().coin_dim();
    if m.dim() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: m.dim(),
        });
    }
    let rows: Vec<Complex> = (0..c)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j))
        .collect();
    let mut scratch = vec![ZERO; c];
    for spinor in state.raw_amplitudes_mut().chunks_exact_mut(c) {
        for (i, out) in scratch.iter_mut().enumerate() {
            *out = rows[i * c..(i + 1) * c]
                .iter()
                .zip(spinor.iter())
                .map(|(a, b)| a * b)
                .sum();
        }
        spinor.copy_from_slice(&scratch);
    }
    Ok(())
}

/// Moves the amplitude of coin state `j` at `m` to `m + e_j`.
///
/// Each coin component is a translated copy of the sorted site list, so the
/// result is a `c`-way merge of already sorted streams.
pub fn apply_shift(state: &WalkState) -> WalkState {
    let geometry = state.shared_geometry().clone();
    let d = geometry.dim();
    let c = geometry.coin_dim();
    let n = state.len();
    let src_sites = state.raw_sites();
    let src = state.raw_amplitudes();

    let mut cursor = vec![0usize; c];
    let mut heads = vec![0i64; c * d];
    let mut live = vec![false; c];

    let seek = |j: usize, cursor: &mut usize, head: &mut [i64], live: &mut bool| {
        while *cursor < n && src[*cursor * c + j] == ZERO {
            *cursor += 1;
        }
        *live = *cursor < n;
        if *live {
            let p = &src_sites[*cursor * d..(*cursor + 1) * d];
            for ((h, x), e) in head.iter_mut().zip(p).zip(geometry.displacement(j)) {
                *h = x + e;
            }
        }
    };

    for j in 0..c {
        seek(
            j,
            &mut cursor[j],
            &mut heads[j * d..(j + 1) * d],
            &mut live[j],
        );
    }

    let mut sites = Vec::with_capacity(src_sites.len() + c * d);
    let mut amplitudes = Vec::with_capacity(src.len() + c * c);
    loop {
        let mut best: Option<usize> = None;
        for j in 0..c {
            if live[j] && best.is_none_or(|b| heads[j * d..(j + 1) * d] < heads[b * d..(b + 1) * d])
            {
                best = Some(j);
            }
        }
        let Some(b) = best else { break };
        let start = sites.len();
        sites.extend_from_slice(&heads[b * d..(b + 1) * d]);
        let base = amplitudes.len();
        amplitudes.resize(base + c, ZERO);
        for j in 0..c {
            if live[j] && heads[j * d..(j + 1) * d] == sites[start..] {
                amplitudes[base + j] = src[cursor[j] * c + j];
                cursor[j] += 1;
                seek(
                    j,
                    &mut cursor[j],
                    &mut heads[j * d..(j + 1) * d],
                    &mut live[j],
                );
            }
        }
    }
    WalkState::from_sorted_parts(geometry, sites, amplitudes)
}

/// One step `U = S M`.
pub fn step(state: &WalkState, coin: &UnitaryMatrix) -> Result<WalkState> {
    let mut tossed = state.clone();
    apply_coin_in_place(&mut tossed, coin)?;
    Ok(apply_shift(&tossed))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Ordinary,
    Intervention,
}

/// Which schedule to build.
///
/// `W { l, r }` repeats `r` cycles of one intervention step followed by `l`
/// ordinary steps. `Z { l, m, r }` places the intervention after `m` ordinary
/// steps instead. `Free { steps }` never intervenes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PlanSpec {
    #[serde(rename = "W")]
    W { l: usize, r: usize },
    #[serde(rename = "Z")]
    Z { l: usize, m: usize, r: usize },
    #[serde(rename = "none")]
    Free { steps: usize },
}

impl fmt::Display for PlanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanSpec::W { l, r } => write!(f, "W(l={l},r={r})"),
            PlanSpec::Z { l, m, r } => write!(f, "Z(l={l},m={m},r={r})"),
            PlanSpec::Free { steps } => write!(f, "none({steps})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterventionPlan {
    spec: PlanSpec,
    steps: Vec<StepKind>,
}

pub fn build_plan(spec: PlanSpec) -> Result<InterventionPlan> {
    let cyclic = |l: usize, m: usize, r: usize| -> Result<Vec<StepKind>> {
        if l == 0 || r == 0 {
            return Err(Error::InvalidPlan(format!(
                "l and r must be >= 1 (l={l}, r={r})"
            )));
        }
        if m > l {
            return Err(Error::InvalidPlan(format!(
                "m must lie in [0, l], got m={m} with l={l}"
            )));
        }
        Ok((0..r * (l + 1))
            .map(|i| {
                if i % (l + 1) == m {
                    StepKind::Intervention
                } else {
                    StepKind::Ordinary
                }
            })
            .collect())
    };
    let steps = match spec {
        PlanSpec::W { l, r } => cyclic(l, 0, r)?,
        PlanSpec::Z { l, m, r } => cyclic(l, m, r)?,
        PlanSpec::Free { steps } => vec![StepKind::Ordinary; steps],
    };
    Ok(InterventionPlan { spec, steps })
}

impl InterventionPlan {
    pub fn spec(&self) -> PlanSpec {
        self.spec
    }

    pub fn steps(&self) -> &[StepKind] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// 1-indexed steps that use `G`.
    pub fn intervention_steps(&self) -> Vec<usize> {
        self.steps
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == StepKind::Intervention)
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn has_interventions(&self) -> bool {
        self.steps.contains(&StepKind::Intervention)
    }

    /// Step at which two full cycles are complete, where the state revives.
    pub fn revival_step(&self) -> Option<usize> {
        match self.spec {
            PlanSpec::W { l, .. } | PlanSpec::Z { l, .. } => Some(2 * (l + 1)),
            PlanSpec::Free { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Refuse to run a plan with interventions unless `(C, G)` satisfies the
    /// conjugation relation.
    pub check_admissibility: bool,
    pub admissibility_tol: f64,
    /// Steps (0 = initial) at which full states are kept.
    pub snapshot_steps: Vec<usize>,
    /// Keep the walker distribution at every step, including `t = 0`.
    pub record_distributions: bool,
    /// Record `p_0(t)` at this position.
    pub return_origin: Option<Vec<i64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            check_admissibility: true,
            admissibility_tol: MAGNITUDE_TOL,
            snapshot_steps: Vec::new(),
            record_distributions: false,
            return_origin: None,
        }
    }
}

pub type Distribution = Vec<(Vec<i64>, f64)>;

#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `(t, |⟨Ψ₀|Ψ(t)⟩|²)` for `t = 1..=T`.
    pub fidelity: Vec<(usize, f64)>,
    /// `(t, p_0(t))` for `t = 1..=T`, when an origin was requested.
    pub return_probability: Vec<(usize, f64)>,
    pub snapshots: Vec<(usize, WalkState)>,
    pub distributions: Vec<(usize, Distribution)>,
    pub final_state: WalkState,
}

impl Trajectory {
    pub fn fidelity_values(&self) -> Vec<f64> {
        self.fidelity.iter().map(|(_, f)| *f).collect()
    }

    pub fn fidelity_at(&self, t: usize) -> Option<f64> {
        self.fidelity.iter().find(|(s, _)| *s == t).map(|(_, f)| *f)
    }
}

fn distribution_of(state: &WalkState) -> Distribution {
    state.distribution().map(|(p, w)| (p.to_vec(), w)).collect()
}

/// Runs `plan` from `initial`, using `intervention` on intervention steps and
/// the coin otherwise.
pub fn run_plan(
    initial: &WalkState,
    coin: &CoinSpec,
    intervention: Option<&UnitaryMatrix>,
    plan: &InterventionPlan,
    options: &RunOptions,
) -> Result<Trajectory> {
    let c = initial.geometry().coin_dim();
    if coin.dim() != c {
        return Err(Error::DimensionMismatch {
            expected: c,
            found: coin.dim(),
        });
    }
    let g = match (plan.has_interventions(), intervention) {
        (true, None) => {
            return Err(Error::InvalidPlan(
                "plan has intervention steps but no intervention operator was given".into(),
            ))
        }
        (true, Some(g)) => {
            if g.dim() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    found: g.dim(),
                });
            }
            if options.check_admissibility
                && certify_pair(coin, g, options.admissibility_tol).is_none()
            {
                return Err(Error::NotAdmissible);
            }
            Some(g)
        }
        (false, _) => None,
    };

    let mut traj = Trajectory {
        fidelity: Vec::with_capacity(plan.len()),
        return_probability: Vec::new(),
        snapshots: Vec::new(),
        distributions: Vec::new(),
        final_state: initial.clone(),
    };
    if options.snapshot_steps.contains(&0) {
        traj.snapshots.push((0, initial.clone()));
    }
    if options.record_distributions {
        traj.distributions.push((0, distribution_of(initial)));
    }

    let mut state = initial.clone();
    for (i, kind) in plan.steps().iter().enumerate() {
        let t = i + 1;
        let m = match (kind, g) {
            (StepKind::Intervention, Some(g)) => g,
            _ => coin.matrix(),
        };
        state = step(&state, m)?;
        traj.fidelity.push((t, fidelity(initial, &state)?));
        if let Some(origin) = &options.return_origin {
            traj.return_probability
                .push((t, return_probability(&state, origin)));
        }
        if options.snapshot_steps.contains(&t) {
            traj.snapshots.push((t, state.clone()));
        }
        if options.record_distributions {
            traj.distributions.push((t, distribution_of(&state)));
        }
    }
    traj.final_state = state;
    Ok(traj)
}
