//! Fully resolved runs. Every command is first turned into a [`RunSpec`];
//! executing a spec is pure, so a manifest replays byte for byte.

use std::path::Path;

use gaussnet::cluster::{nullifier_variances_cov, optimize_orthogonal_cov, EsConfig, Graph};
use gaussnet::gaussian::eigenmode_extract;
use gaussnet::homodyne::{default_theta_grid, lo_from_network_row, phase_sweep};
use gaussnet::io::{fmt_float, GraphJson, MatrixJson, NetworkJson, Table, UnitaryJson, UsqzJson};
use gaussnet::resource::{build_pixel_covariance, default_usqz, ResourceSpec, SqueezingProfile};
use gaussnet::secret::{protocol_run, sweep_fidelity};
use gaussnet::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SecretMode {
    Run,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase", deny_unknown_fields)]
pub enum RunSpec {
    Resource {
        profile_variances: Vec<f64>,
        u_sqz: UsqzJson,
        loss: Vec<f64>,
        dark_noise: f64,
        sweep_points: usize,
        format: Format,
    },
    Cluster {
        graph: GraphJson,
        profile_variances: Vec<f64>,
        loss: f64,
        config: EsConfig,
        format: Format,
    },
    Secret {
        network: NetworkJson,
        profile_variances: Vec<f64>,
        loss: f64,
        mode: SecretMode,
        grid: Vec<f64>,
        format: Format,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub run: RunSpec,
    pub outputs: Vec<String>,
}

/// Named output file and its contents.
pub type Output = (String, String);

fn table_output(stem: &str, table: &Table, format: Format) -> Output {
    match format {
        Format::Csv => (format!("{stem}.csv"), table.to_csv()),
        Format::Json => (format!("{stem}.json"), pretty(&table.to_json())),
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn f(x: f64) -> String {
    fmt_float(x)
}

/// Applies loss `eta` to pure squeezer variances.
fn lossy(variances: &[f64], eta: f64) -> Result<SqueezingProfile> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidLoss(eta));
    }
    SqueezingProfile::new(variances.iter().map(|s| (1.0 - eta) * s + eta).collect())
}

impl RunSpec {
    pub fn execute(&self) -> Result<Vec<Output>> {
        match self {
            Self::Resource {
                profile_variances,
                u_sqz,
                loss,
                dark_noise,
                sweep_points,
                format,
            } => run_resource(
                profile_variances,
                u_sqz,
                loss,
                *dark_noise,
                *sweep_points,
                *format,
            ),
            Self::Cluster {
                graph,
                profile_variances,
                loss,
                config,
                format,
            } => run_cluster(
                &graph.to_graph()?,
                profile_variances,
                *loss,
                config,
                *format,
            ),
            Self::Secret {
                network,
                profile_variances,
                loss,
                mode,
                grid,
                format,
            } => run_secret(network, profile_variances, *loss, *mode, grid, *format),
        }
    }
}

fn run_resource(
    variances: &[f64],
    u_sqz: &UsqzJson,
    loss: &[f64],
    dark_noise: f64,
    sweep_points: usize,
    format: Format,
) -> Result<Vec<Output>> {
    let profile = SqueezingProfile::new(variances.to_vec())?;
    let n = profile.len();
    let u = match u_sqz {
        UsqzJson::Named(name) if name == "default" => default_usqz(n),
        UsqzJson::Named(name) => return Err(Error::Parse(format!("unknown u_sqz `{name}`"))),
        UsqzJson::Matrix(m) => m.to_unitary()?,
    };
    let spec = ResourceSpec::new(profile, u, loss.to_vec(), dark_noise)?;
    let v = build_pixel_covariance(&spec)?;
    let modes = eigenmode_extract(&v);

    let mut eig = Table::new(&["mode", "p_variance", "p_db", "x_variance", "x_db"]);
    for k in 0..n {
        let (p, x) = (modes.p_variances[k], modes.x_variances[k]);
        eig.push(vec![
            k.to_string(),
            f(p),
            f(10.0 * p.log10()),
            f(x),
            f(10.0 * x.log10()),
        ]);
    }
    let mut summary = Table::new(&[
        "modes",
        "squeezed_modes",
        "leading_db",
        "diagonalization_residual",
    ]);
    summary.push(vec![
        n.to_string(),
        modes.squeezed_count(1e-6).to_string(),
        f(10.0 * modes.p_variances[0].log10()),
        f(modes.residual),
    ]);

    let thetas = default_theta_grid(sweep_points);
    let lo = lo_from_network_row(&modes.modes, 0, 0.0)?;
    let sweep = phase_sweep(&v, lo.amplitudes(), &thetas)?;
    let mut phase = Table::new(&["theta", "variance", "variance_db"]);
    for (t, var) in sweep {
        phase.push(vec![f(t), f(var), f(10.0 * var.log10())]);
    }

    Ok(vec![
        (
            "covariance.json".into(),
            pretty(&MatrixJson::from_matrix(v.as_matrix())),
        ),
        (
            "eigenmodes.json".into(),
            pretty(&UnitaryJson::from_unitary(&modes.modes)),
        ),
        table_output("eigenmode_report", &eig, format),
        table_output("eigenmode_summary", &summary, format),
        table_output("phase_sweep", &phase, format),
    ])
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn run_cluster(
    g: &Graph,
    variances: &[f64],
    loss: f64,
    config: &EsConfig,
    format: Format,
) -> Result<Vec<Output>> {
    let n = g.n();
    let profile = SqueezingProfile::new(variances.to_vec())?;
    let v = profile.covariance_with_loss(n, loss)?;
    let opt = optimize_orthogonal_cov(g, &v, config)?;
    let u = opt.unitary(g)?;
    let nv = nullifier_variances_cov(g, &u, &v)?;
    let rel_db = nv.relative_db();

    let mut nodes = Table::new(&["node", "variance", "variance_db", "vacuum_reference", "normalized_variance"]);
    for (k, db) in rel_db.iter().enumerate() {
        nodes.push(vec![
            k.to_string(),
            f(nv.variances[k]),
            f(*db),
            f(nv.vacuum_references[k]),
            f(nv.variances[k] / nv.vacuum_references[k]),
        ]);
    }
    let mut sorted = rel_db.clone();
    sorted.sort_by(f64::total_cmp);
    let mut stats = Table::new(&[
        "min_db",
        "q1_db",
        "median_db",
        "q3_db",
        "max_db",
        "mean_db",
        "objective",
        "baseline",
        "evaluations",
    ]);
    stats.push(vec![
        f(sorted[0]),
        f(quantile(&sorted, 0.25)),
        f(quantile(&sorted, 0.5)),
        f(quantile(&sorted, 0.75)),
        f(sorted[n - 1]),
        f(nv.mean_relative_db()),
        f(opt.objective),
        f(opt.baseline),
        opt.evaluations.to_string(),
    ]);
    let mut history = Table::new(&["generation", "objective"]);
    for (i, h) in opt.history.iter().enumerate() {
        history.push(vec![i.to_string(), f(*h)]);
    }
    Ok(vec![
        table_output("nullifiers", &nodes, format),
        table_output("nullifier_stats", &stats, format),
        table_output("optimizer_history", &history, format),
        (
            "unitary.json".into(),
            pretty(&UnitaryJson::from_unitary(&u)),
        ),
    ])
}

fn run_secret(
    network: &NetworkJson,
    variances: &[f64],
    loss: f64,
    mode: SecretMode,
    grid: &[f64],
    format: Format,
) -> Result<Vec<Output>> {
    let net = network.to_network()?;
    let profile = lossy(variances, loss)?;
    match mode {
        SecretMode::Run => {
            let results = protocol_run(&net, &profile)?;
            let mut t = Table::new(&["party", "fidelity_x_var", "fidelity_p_var", "fidelity"]);
            for r in &results {
                let label: Vec<String> = r.party.iter().map(|i| i.to_string()).collect();
                t.push(vec![
                    label.join("-"),
                    f(r.x_variance),
                    f(r.p_variance),
                    f(r.fidelity),
                ]);
            }
            let fids: Vec<f64> = results.iter().map(|r| r.fidelity).collect();
            let mut s = Table::new(&["parties", "f_min", "f_avg", "f_max"]);
            s.push(vec![
                fids.len().to_string(),
                f(fids.iter().copied().fold(f64::INFINITY, f64::min)),
                f(fids.iter().sum::<f64>() / fids.len() as f64),
                f(fids.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            ]);
            Ok(vec![
                table_output("parties", &t, format),
                table_output("party_summary", &s, format),
            ])
        }
        SecretMode::Sweep => {
            let points = sweep_fidelity(&net, &profile, grid)?;
            let mut t = Table::new(&["leading_db", "f_min", "f_avg", "f_max"]);
            for p in points {
                t.push(vec![f(p.leading_db), f(p.f_min), f(p.f_avg), f(p.f_max)]);
            }
            Ok(vec![table_output("sweep", &t, format)])
        }
    }
}

/// Writes every output, then the manifest. Nothing is written when the run
/// fails; each file lands through a rename.
pub fn execute_into(spec: &RunSpec, out_dir: &Path) -> std::result::Result<Vec<String>, RunError> {
    let outputs = spec.execute().map_err(RunError::Model)?;
    let manifest = Manifest {
        tool: "gaussnet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        run: spec.clone(),
        outputs: outputs.iter().map(|(n, _)| n.clone()).collect(),
    };
    let mut all = outputs;
    all.push(("manifest.json".into(), pretty(&manifest)));
    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Io(out_dir.display().to_string(), e))?;
    for (name, body) in &all {
        let path = out_dir.join(name);
        let tmp = out_dir.join(format!(".{name}.tmp"));
        std::fs::write(&tmp, body).map_err(|e| RunError::Io(tmp.display().to_string(), e))?;
        std::fs::rename(&tmp, &path).map_err(|e| RunError::Io(path.display().to_string(), e))?;
    }
    Ok(all.into_iter().map(|(n, _)| n).collect())
}

#[derive(Debug)]
pub enum RunError {
    Model(Error),
    Io(String, std::io::Error),
}
