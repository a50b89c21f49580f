use std::f64::consts::FRAC_PI_4;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use qwalk_core::coins::fourier_coin;
use qwalk_core::linalg::{MatrixJson, UNITARY_TOL};
use qwalk_core::{
    build_plan, check_admissible, coin_su2, construct_g, grover_coin, hadamard_coin,
    random_admissible_coin, CMatrix, CoinSpec, Complex, InterventionPlan, LatticeGeometry,
    PhaseData, PlanSpec, UnitaryMatrix, WalkState,
};

/// One walk, as read from a JSON document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub dimension: usize,
    #[serde(default)]
    pub coin: CoinConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default = "default_plan")]
    pub plan: PlanSpec,
    /// Explicit `G`; derived from the coin when absent.
    #[serde(default)]
    pub intervention: Option<InterventionConfig>,
    #[serde(default)]
    pub override_admissibility: bool,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

fn default_plan() -> PlanSpec {
    PlanSpec::Free { steps: 16 }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config is valid")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoinConfig {
    Su2 {
        theta: f64,
        #[serde(default)]
        phi1: f64,
        #[serde(default)]
        phi2: f64,
    },
    Hadamard,
    Grover,
    Fourier,
    /// Random coin that admits an intervention, drawn from `seed` (or the
    /// run seed).
    RandomAdmissible {
        #[serde(default)]
        seed: Option<u64>,
    },
    Custom {
        matrix_file: PathBuf,
    },
}

impl Default for CoinConfig {
    fn default() -> Self {
        CoinConfig::Su2 {
            theta: FRAC_PI_4,
            phi1: 0.0,
            phi2: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryConfig {
    #[default]
    Default,
    Explicit(Vec<Vec<i64>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub position: Vec<i64>,
    /// `[re, im]` per coin level.
    pub spinor: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialConfig {
    /// Gaussian random amplitudes on the given positions, drawn from the run
    /// seed.
    Random { random: Vec<Vec<i64>> },
    Sites {
        sites: Vec<SiteConfig>,
        #[serde(default)]
        normalize: bool,
    },
}

impl Default for InitialConfig {
    fn default() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        InitialConfig::Sites {
            sites: vec![SiteConfig {
                position: vec![0],
                spinor: vec![[r, 0.0], [0.0, r]],
            }],
            normalize: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InterventionConfig {
    /// `Λ` follows from `φ_0 + φ_{c−1}`.
    Phases {
        phi: Vec<f64>,
        #[serde(rename = "Phi")]
        conjugation_phase: f64,
    },
    Matrix {
        matrix_file: PathBuf,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub distribution_csv: Option<PathBuf>,
    pub fidelity_csv: Option<PathBuf>,
    /// `t, p0, partial_polya_recurrence`; written only when set.
    pub return_csv: Option<PathBuf>,
    /// Steps whose full state goes to `snapshot_json`.
    #[serde(default)]
    pub snapshots: Vec<usize>,
    pub snapshot_json: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_unitary_tol")]
    pub unitary: f64,
    #[serde(default = "default_admissibility_tol")]
    pub admissibility: f64,
}

fn default_unitary_tol() -> f64 {
    UNITARY_TOL
}

fn default_admissibility_tol() -> f64 {
    1e-10
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            unitary: default_unitary_tol(),
            admissibility: default_admissibility_tol(),
        }
    }
}

/// Matrix files hold either a list of rows of `[re, im]` pairs or
/// `{"dim": n, "entries": [...]}` in row-major order.
#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixFile {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(MatrixJson),
}

pub fn read_matrix(path: &Path) -> anyhow::Result<CMatrix> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed: MatrixFile =
        serde_json::from_str(&raw).with_context(|| format!("parsing matrix {}", path.display()))?;
    match parsed {
        MatrixFile::Flat(m) => Ok(m.to_matrix()?),
        MatrixFile::Rows(rows) => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                bail!("{}: matrix must be square and non-empty", path.display());
            }
            if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
                bail!("{}: non-finite matrix entry", path.display());
            }
            Ok(CMatrix::from_fn(n, n, |i, j| {
                Complex::new(rows[i][j][0], rows[i][j][1])
            }))
        }
    }
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Everything a run needs, validated.
pub struct Resolved {
    pub geometry: Arc<LatticeGeometry>,
    pub coin: CoinSpec,
    pub intervention: Option<UnitaryMatrix>,
    pub initial: WalkState,
    pub plan: InterventionPlan,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let raw =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: Self = serde_json::from_str(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(dir) = path.parent() {
            config.rebase_inputs(dir);
        }
        Ok(config)
    }

    /// Matrix files named in a config are relative to the config itself.
    fn rebase_inputs(&mut self, dir: &Path) {
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let CoinConfig::Custom { matrix_file } = &mut self.coin {
            rebase(matrix_file);
        }
        if let Some(InterventionConfig::Matrix { matrix_file }) = &mut self.intervention {
            rebase(matrix_file);
        }
    }

    pub fn geometry(&self) -> anyhow::Result<LatticeGeometry> {
        let g = match &self.geometry {
            GeometryConfig::Default => LatticeGeometry::standard(self.dimension)?,
            GeometryConfig::Explicit(e) => LatticeGeometry::new(self.dimension, e.clone())?,
        };
        Ok(g)
    }

    pub fn coin(&self, c: usize) -> anyhow::Result<CoinSpec> {
        let coin = match &self.coin {
            CoinConfig::Su2 { theta, phi1, phi2 } => coin_su2(*theta, *phi1, *phi2),
            CoinConfig::Hadamard => hadamard_coin(c)?,
            CoinConfig::Grover => grover_coin(c)?,
            CoinConfig::Fourier => fourier_coin(c)?,
            CoinConfig::RandomAdmissible { seed } => {
                random_admissible_coin(c, seed.unwrap_or(self.seed))?.0
            }
            CoinConfig::Custom { matrix_file } => {
                CoinSpec::custom_with_tolerance(read_matrix(matrix_file)?, self.tolerances.unitary)?
            }
        };
        if coin.dim() != c {
            bail!(
                "coin has dimension {} but the geometry has {} directions",
                coin.dim(),
                c
            );
        }
        Ok(coin)
    }

    fn intervention(&self, coin: &CoinSpec) -> anyhow::Result<UnitaryMatrix> {
        let c = coin.dim();
        match &self.intervention {
            Some(InterventionConfig::Phases {
                phi,
                conjugation_phase,
            }) => {
                let p = PhaseData::new(phi.clone(), *conjugation_phase)?;
                Ok(construct_g(&p, c)?)
            }
            Some(InterventionConfig::Matrix { matrix_file }) => Ok(UnitaryMatrix::with_tolerance(
                read_matrix(matrix_file)?,
                self.tolerances.unitary,
            )?),
            None => match check_admissible(coin, self.tolerances.admissibility) {
                Some(p) => Ok(construct_g(&p, c)?),
                None if self.override_admissibility => {
                    bail!("coin is not admissible; an explicit intervention is required with the override")
                }
                None => bail!("coin is not admissible, so no intervention operator exists"),
            },
        }
    }

    fn initial_state(&self, geometry: &Arc<LatticeGeometry>) -> anyhow::Result<WalkState> {
        let state = match &self.initial {
            InitialConfig::Random { random } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                WalkState::random(geometry.clone(), random, &mut rng)?
            }
            InitialConfig::Sites { sites, normalize } => {
                let entries = sites.iter().map(|s| {
                    (
                        s.position.clone(),
                        s.spinor
                            .iter()
                            .map(|[re, im]| Complex::new(*re, *im))
                            .collect(),
                    )
                });
                if *normalize {
                    WalkState::normalized_from_entries(geometry.clone(), entries)?
                } else {
                    WalkState::from_entries(geometry.clone(), entries)?
                }
            }
        };
        Ok(state)
    }

    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let geometry = Arc::new(self.geometry()?);
        let coin = self.coin(geometry.coin_dim())?;
        let plan = build_plan(self.plan)?;
        let intervention = if plan.has_interventions() {
            Some(self.intervention(&coin)?)
        } else {
            None
        };
        let initial = self.initial_state(&geometry)?;
        Ok(Resolved {
            geometry,
            coin,
            intervention,
            initial,
            plan,
        })
    }
}
