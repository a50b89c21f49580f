use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rayon::prelude::*;
use serde_json::json;

use qwalk_core::coins::{admissibility, AdmissibilityTolerance, Verdict};
use qwalk_core::state::StateJson;
use qwalk_core::{
    build_plan, construct_g, partial_polya, run_plan, verify_identities, CoinSpec, LatticeGeometry,
    PlanSpec, PolyaKind, RunOptions, UnitaryMatrix, VerifyConfig,
};

use crate::config::{matrix_rows, CoinConfig, RunConfig};
use crate::output;

/// Exit status for a command that ran to completion. Input errors surface as
/// `Err` and map to 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed,
}

pub struct RunPaths {
    pub output_dir: PathBuf,
    pub distribution: Option<PathBuf>,
    pub fidelity: Option<PathBuf>,
}

pub fn run(config: &RunConfig, paths: &RunPaths) -> anyhow::Result<Status> {
    let resolved = config.resolve()?;
    let outputs = &config.outputs;
    let origin = vec![0; resolved.geometry.dim()];
    let options = RunOptions {
        check_admissibility: !config.override_admissibility,
        admissibility_tol: config.tolerances.admissibility,
        snapshot_steps: outputs.snapshots.clone(),
        record_distributions: true,
        return_origin: Some(origin),
    };
    let traj = run_plan(
        &resolved.initial,
        &resolved.coin,
        resolved.intervention.as_ref(),
        &resolved.plan,
        &options,
    )
    .context("running the walk")?;

    let dir = &paths.output_dir;
    let pick = |flag: &Option<PathBuf>, file: &Option<PathBuf>, default: &str| {
        let p = flag
            .clone()
            .or_else(|| file.clone())
            .unwrap_or_else(|| default.into());
        output::resolve(dir, &p)
    };
    let dist_path = pick(
        &paths.distribution,
        &outputs.distribution_csv,
        "distribution.csv",
    );
    let fid_path = pick(&paths.fidelity, &outputs.fidelity_csv, "fidelity.csv");

    let dim = resolved.geometry.dim();
    output::write(
        &dist_path,
        &output::distribution_csv(dim, &traj.distributions),
    )?;
    let fsr = partial_polya(&traj.fidelity_values(), PolyaKind::Fsr)?;
    output::write(
        &fid_path,
        &output::series_csv("t,fidelity,partial_polya_fsr", &traj.fidelity, &fsr),
    )?;
    println!("distribution: {}", dist_path.display());
    println!("fidelity: {}", fid_path.display());

    if let Some(p) = &outputs.return_csv {
        let p = output::resolve(dir, p);
        let values: Vec<f64> = traj.return_probability.iter().map(|(_, v)| *v).collect();
        let rec = partial_polya(&values, PolyaKind::Recurrence)?;
        output::write(
            &p,
            &output::series_csv(
                "t,return_probability,partial_polya_recurrence",
                &traj.return_probability,
                &rec,
            ),
        )?;
        println!("return: {}", p.display());
    }
    if let Some(p) = &outputs.snapshot_json {
        let p = output::resolve(dir, p);
        let snaps: Vec<_> = traj
            .snapshots
            .iter()
            .map(|(t, s)| json!({ "t": t, "state": StateJson::from(s) }))
            .collect();
        output::write(&p, &(serde_json::to_string_pretty(&snaps)? + "\n"))?;
        println!("snapshots: {}", p.display());
    }

    println!("plan: {}", resolved.plan.spec());
    println!("steps: {}", resolved.plan.len());
    if let Some(t) = resolved.plan.revival_step() {
        let f = traj.fidelity_at(t).map_or("n/a".to_string(), output::float);
        println!("fidelity at revival step {t}: {f}");
    }
    match fsr.first_unity {
        Some(n) => println!("partial polya (fsr) reaches 1 at n = {n}"),
        None => println!(
            "partial polya (fsr) after {} steps: {}",
            fsr.partials.len(),
            output::float(fsr.last())
        ),
    }
    Ok(Status::Ok)
}

/// Coin selection shared by `check-coin` and `verify`.
pub struct CoinChoice {
    pub family: Option<String>,
    pub dim: Option<usize>,
    pub matrix: Option<PathBuf>,
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub seed: u64,
}

impl CoinChoice {
    fn coin_config(&self) -> anyhow::Result<CoinConfig> {
        if let Some(path) = &self.matrix {
            return Ok(CoinConfig::Custom {
                matrix_file: path.clone(),
            });
        }
        let family = self
            .family
            .as_deref()
            .context("give a coin family or --matrix")?;
        Ok(match family {
            "su2" => CoinConfig::Su2 {
                theta: self.theta,
                phi1: self.phi1,
                phi2: self.phi2,
            },
            "hadamard" => CoinConfig::Hadamard,
            "grover" => CoinConfig::Grover,
            "fourier" => CoinConfig::Fourier,
            "random" | "random-admissible" => CoinConfig::RandomAdmissible {
                seed: Some(self.seed),
            },
            other => {
                bail!("unknown coin family '{other}' (su2, hadamard, grover, fourier, random)")
            }
        })
    }

    fn coin_dim(&self, family: &CoinConfig) -> usize {
        match family {
            CoinConfig::Su2 { .. } => 2,
            _ => self.dim.unwrap_or(2),
        }
    }

    /// Builds a run config holding just the coin and the default geometry of
    /// matching dimension.
    fn to_config(&self) -> anyhow::Result<RunConfig> {
        let coin = self.coin_config()?;
        let c = match &coin {
            CoinConfig::Custom { matrix_file } => crate::config::read_matrix(matrix_file)?.nrows(),
            other => self.coin_dim(other),
        };
        if c % 2 != 0 {
            bail!("coin dimension {c} is odd; the default geometry needs c = 2d (use --config for others)");
        }
        Ok(RunConfig {
            dimension: c / 2,
            coin,
            ..RunConfig::default()
        })
    }
}

pub fn check_coin(choice: &CoinChoice, tol: f64, unitary_tol: f64) -> anyhow::Result<Status> {
    let coin_config = choice.coin_config()?;
    let matrix = match &coin_config {
        CoinConfig::Custom { matrix_file } => crate::config::read_matrix(matrix_file)?,
        other => {
            let config = RunConfig {
                coin: other.clone(),
                ..RunConfig::default()
            };
            config
                .coin(choice.coin_dim(other))?
                .matrix()
                .matrix()
                .clone()
        }
    };
    let tolerance = AdmissibilityTolerance {
        magnitude: tol,
        ..AdmissibilityTolerance::default()
    };
    match admissibility(&matrix, &tolerance, unitary_tol)? {
        Verdict::Admissible(phases) => {
            let g = construct_g(&phases, matrix.nrows())?;
            let rows = matrix_rows(g.matrix())
                .iter()
                .map(|r| serde_json::to_string(r).map(|s| format!("    {s}")))
                .collect::<Result<Vec<_>, _>>()?;
            println!("{{");
            println!("  \"admissible\": true,");
            println!("  \"phases\": {},", serde_json::to_string(&phases)?);
            println!("  \"G\": [\n{}\n  ]", rows.join(",\n"));
            println!("}}");
            Ok(Status::Ok)
        }
        Verdict::Rejected(violation) => {
            let report = json!({
                "admissible": false,
                "violation": violation,
                "message": violation.to_string(),
            });
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(Status::Failed)
        }
    }
}

pub struct VerifyArgs {
    pub config: VerifyConfig,
    pub json: Option<PathBuf>,
    pub corrupt_g: bool,
}

/// Flips the sign of the first antidiagonal entry: still unitary, but no
/// longer an intervention for the coin.
fn corrupt(g: &UnitaryMatrix) -> anyhow::Result<UnitaryMatrix> {
    let mut m = g.matrix().clone();
    let c = m.nrows();
    m[(0, c - 1)] = -m[(0, c - 1)];
    Ok(UnitaryMatrix::new(m)?)
}

pub fn verify(
    run_config: Option<&RunConfig>,
    choice: &CoinChoice,
    args: &VerifyArgs,
) -> anyhow::Result<Status> {
    let built;
    let config = match run_config {
        Some(c) => c,
        None => {
            built = choice.to_config()?;
            &built
        }
    };
    let geometry: LatticeGeometry = config.geometry()?;
    let coin: CoinSpec = config.coin(geometry.coin_dim())?;
    let Some(phases) = qwalk_core::check_admissible(&coin, config.tolerances.admissibility) else {
        println!("coin is not admissible; there is no intervention operator to verify");
        return Ok(Status::Failed);
    };
    let mut g = construct_g(&phases, coin.dim())?;
    if args.corrupt_g {
        g = corrupt(&g)?;
    }
    let reports = verify_identities(&geometry, &coin, &g, &phases, &args.config)?;

    let mut table = format!(
        "{:<22} {:>7} {:>24} {:>24} {:>5}\n",
        "identity", "samples", "max_deviation", "tolerance", "pass"
    );
    for r in &reports {
        let _ = writeln!(
            table,
            "{:<22} {:>7} {:>24} {:>24} {:>5}",
            r.identity.name(),
            r.samples,
            output::float(r.max_deviation),
            output::float(r.tolerance),
            if r.pass { "yes" } else { "no" }
        );
    }
    print!("{table}");
    if let Some(path) = &args.json {
        output::write(path, &(serde_json::to_string_pretty(&reports)? + "\n"))?;
    }
    Ok(if reports.iter().all(|r| r.pass) {
        Status::Ok
    } else {
        Status::Failed
    })
}

pub struct SweepArgs {
    pub ls: Vec<usize>,
    pub steps: usize,
    pub include_free: bool,
    pub summary: PathBuf,
    pub series: Option<PathBuf>,
}

struct SweepRow {
    plan: PlanSpec,
    fsr: qwalk_core::PolyaSeries,
    recurrence: qwalk_core::PolyaSeries,
}

fn sweep_one(config: &RunConfig, plan: PlanSpec, steps: usize) -> anyhow::Result<SweepRow> {
    let mut variant = config.clone();
    variant.plan = plan;
    let resolved = variant.resolve()?;
    let options = RunOptions {
        check_admissibility: !config.override_admissibility,
        admissibility_tol: config.tolerances.admissibility,
        return_origin: Some(vec![0; resolved.geometry.dim()]),
        ..RunOptions::default()
    };
    let traj = run_plan(
        &resolved.initial,
        &resolved.coin,
        resolved.intervention.as_ref(),
        &resolved.plan,
        &options,
    )
    .with_context(|| format!("running {plan}"))?;
    let fidelity: Vec<f64> = traj.fidelity_values().into_iter().take(steps).collect();
    let returns: Vec<f64> = traj
        .return_probability
        .iter()
        .take(steps)
        .map(|(_, v)| *v)
        .collect();
    Ok(SweepRow {
        plan,
        fsr: partial_polya(&fidelity, PolyaKind::Fsr)?,
        recurrence: partial_polya(&returns, PolyaKind::Recurrence)?,
    })
}

pub fn sweep_polya(config: &RunConfig, args: &SweepArgs, dir: &Path) -> anyhow::Result<Status> {
    let mut plans: Vec<PlanSpec> = Vec::new();
    if args.include_free {
        plans.push(PlanSpec::Free { steps: args.steps });
    }
    for &l in &args.ls {
        let r = args.steps.div_ceil(l + 1).max(1);
        let plan = PlanSpec::W { l, r };
        build_plan(plan)?;
        plans.push(plan);
    }
    let rows: Vec<SweepRow> = plans
        .par_iter()
        .map(|p| sweep_one(config, *p, args.steps))
        .collect::<anyhow::Result<_>>()?;

    let mut summary =
        String::from("plan,steps,partial_polya_fsr,first_unity,partial_polya_recurrence\n");
    for row in &rows {
        let _ = writeln!(
            summary,
            "\"{}\",{},{},{},{}",
            row.plan,
            row.fsr.partials.len(),
            output::float(row.fsr.last()),
            row.fsr.first_unity.map_or(String::new(), |n| n.to_string()),
            output::float(row.recurrence.last()),
        );
    }
    let summary_path = output::resolve(dir, &args.summary);
    output::write(&summary_path, &summary)?;
    print!("{summary}");

    if let Some(p) = &args.series {
        let mut series = String::from("plan,n,partial_polya_fsr,partial_polya_recurrence\n");
        for row in &rows {
            for ((n, f), (_, r)) in row.fsr.partials.iter().zip(&row.recurrence.partials) {
                let _ = writeln!(
                    series,
                    "\"{}\",{n},{},{}",
                    row.plan,
                    output::float(*f),
                    output::float(*r)
                );
            }
        }
        output::write(&output::resolve(dir, p), &series)?;
    }
    Ok(Status::Ok)
}
