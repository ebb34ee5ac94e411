use std::fs;
use std::path::{Path, PathBuf};

use rlcm_core::diagnostics::{diagnose_chain, loglik_rows, summarize_chain, waic, QUANTILE_RULE};
use rlcm_core::io::{load_chain, load_dataset, save_chain, save_dataset};
use rlcm_core::model::{check_identifiability, design_matrices, Dataset, Latents, ModelSpec};
use rlcm_core::sampler::{run_chain_observed, Chain, ChainMeta, Draw, COLUMN_CONVENTION, SWEEP_ORDER};
use rlcm_core::simulation::{
    apply_missingness, generate_data, recovery_metrics, run_study, study_truth, PointEstimate,
    RecoveryReport,
};
use rlcm_core::RngStream;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub type CmdResult = Result<Vec<PathBuf>, Box<dyn std::error::Error>>;

/// Settings shared by every command.
pub struct Context {
    pub config: RunConfig,
    pub config_hash: String,
    pub config_path: PathBuf,
    pub out: PathBuf,
}

impl Context {
    pub fn load(path: &Path, seed: Option<u64>, out: PathBuf) -> Result<Self, Box<dyn std::error::Error>> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config = RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        for p in config.input_paths() {
            if !p.is_file() {
                return Err(format!("input file {} does not exist", p.display()).into());
            }
        }
        if let Some(s) = seed {
            config.chain.seed = s;
            if let Some(sc) = &mut config.scenario {
                sc.seed = s;
            }
        }
        fs::create_dir_all(&out).map_err(|e| format!("{}: {e}", out.display()))?;
        let digest = Sha256::digest(text.as_bytes());
        Ok(Self {
            config,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            config_path: path.to_path_buf(),
            out,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Scenario seed for the simulation commands, chain seed otherwise.
    pub fn seed(&self, command: &str) -> u64 {
        match (command, &self.config.scenario) {
            ("simulate" | "recover", Some(s)) => s.seed,
            _ => self.config.chain.seed,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: String,
    config_sha256: &'a str,
    outputs: Vec<String>,
}

pub fn write_manifest(ctx: &Context, command: &str, outputs: &[PathBuf]) -> Result<PathBuf, Box<dyn std::error::Error>> {
    let m = Manifest {
        command,
        version: rlcm_core::VERSION,
        seed: ctx.seed(command),
        config: ctx.config_path.display().to_string(),
        config_sha256: &ctx.config_hash,
        outputs: outputs
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect(),
    };
    let path = ctx.path("manifest.toml");
    fs::write(&path, toml::to_string(&m)?)?;
    Ok(path)
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn model_spec(ctx: &Context, covariates: usize) -> Result<ModelSpec, Box<dyn std::error::Error>> {
    let m = ctx.config.model.as_ref().ok_or("config has no [model] section")?;
    Ok(ModelSpec::new(
        m.k,
        m.l,
        m.categories.clone(),
        m.meas_order.unwrap_or(m.k.min(2)),
        m.trans_order,
        covariates,
    )?)
}

/// Generates one replication's data and writes it with the truth.
pub fn simulate(ctx: &Context) -> CmdResult {
    let sc = ctx.config.scenario.as_ref().ok_or("config has no [scenario] section")?;
    sc.validate()?;
    let spec = sc.model_spec()?;
    let truth = study_truth(sc)?;
    let mut rng = RngStream::new(sc.seed, 1);
    let (full, latents) = generate_data(&truth, sc, &mut rng)?;
    let data = if sc.missing_rate > 0.0 {
        apply_missingness(&full, sc.missing_rate, &mut rng)?
    } else {
        full
    };
    let (yp, xp) = (ctx.path("responses.csv"), ctx.path("covariates.csv"));
    save_dataset(&data, &yp, Some(&xp))?;

    let lp = ctx.path("latents.csv");
    let mut header = vec!["n".to_string(), "t".to_string()];
    header.extend((1..=spec.k()).map(|k| format!("a_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..data.n()).flat_map(|n| {
        let latents = &latents;
        (0..data.t()).map(move |t| {
            let mut r = vec![(n + 1).to_string(), (t + 1).to_string()];
            r.extend(latents.get(n, t).iter().map(|a| a.to_string()));
            r
        })
    });
    write_csv(&lp, &header, rows)?;

    let tp = ctx.path("truth.chain");
    save_chain(&truth_chain(ctx, &spec, &truth, &data, &latents), &tp)?;
    Ok(vec![yp, xp, lp, tp])
}

/// The generating values as a one-draw chain file.
fn truth_chain(
    ctx: &Context,
    spec: &ModelSpec,
    truth: &rlcm_core::simulation::ParamSet,
    data: &Dataset,
    latents: &Latents,
) -> Chain {
    let mut freq = vec![0.0; spec.states()];
    for n in 0..data.n() {
        for t in 0..data.t() {
            freq[spec.state_of(latents.get(n, t))] += 1.0;
        }
    }
    let rows = (data.n() * data.t()) as f64;
    freq.iter_mut().for_each(|f| *f /= rows);
    Chain {
        meta: ChainMeta {
            version: rlcm_core::VERSION.to_string(),
            spec: spec.clone(),
            config: ctx.config.chain.clone(),
            respondents: data.n(),
            waves: data.t(),
            seed: ctx.seed("simulate"),
            stream: 0,
            sweep_order: SWEEP_ORDER.to_string(),
            column_convention: COLUMN_CONVENTION.to_string(),
            kappa_acceptance: Vec::new(),
        },
        draws: vec![Draw {
            meas: truth.meas.clone(),
            structural: truth.structural.clone(),
            class_freq: freq,
            loglik: loglik_rows(data, spec, &truth.meas, latents),
        }],
    }
}

pub fn fit(ctx: &Context) -> CmdResult {
    let d = ctx.config.data.as_ref().ok_or("config has no [data] section")?;
    let m = ctx.config.model.as_ref().ok_or("config has no [model] section")?;
    let data = load_dataset(&d.responses, d.covariates.as_deref(), &m.categories)?;
    let spec = model_spec(ctx, data.d())?;
    let config = &ctx.config.chain;
    let total = config.burn_in + config.post_burn_in;
    let mut rng = RngStream::new(config.seed, 0);
    let mut last_latents = None;
    let chain = run_chain_observed(&data, &spec, config, &mut rng, |sweep, st| {
        if sweep == total {
            last_latents = Some(st.latents.clone());
        }
    })?;
    let cp = ctx.path("chain.txt");
    save_chain(&chain, &cp)?;

    let ap = ctx.path("acceptance.csv");
    write_csv(
        &ap,
        &["item", "kappa_acceptance"],
        chain
            .meta
            .kappa_acceptance
            .iter()
            .enumerate()
            .map(|(j, r)| vec![(j + 1).to_string(), opt(r.is_finite().then_some(*r))]),
    )?;

    let ip = ctx.path("identifiability.txt");
    let last = chain.draws.last().ok_or("chain kept no draws")?;
    let latents = last_latents.ok_or("sampler stopped early")?;
    let w = design_matrices(&data, &latents, &spec);
    let report = check_identifiability(&last.meas, &last.structural, &data, &w, &spec);
    fs::write(
        &ip,
        format!("# conditions at the final retained draw and latent profiles\n{report}\n"),
    )?;
    Ok(vec![cp, ap, ip])
}

pub fn diagnose(ctx: &Context) -> CmdResult {
    let d = ctx.config.diagnose.as_ref().ok_or("config has no [diagnose] section")?;
    let chain = load_chain(&d.chain)?;
    let diag = diagnose_chain(&chain, d.frac_a, d.frac_b);
    let summary = summarize_chain(&chain, d.level)?;

    let dp = ctx.path("diagnostics.csv");
    write_csv(
        &dp,
        &["parameter", "geweke_z", "iact", "ess"],
        diag.iter()
            .map(|p| vec![p.name.clone(), opt(p.geweke), opt(p.iact), opt(p.ess)]),
    )?;
    let sp = ctx.path("summary.csv");
    write_csv(
        &sp,
        &["parameter", "mean", "lower", "upper", "zero_in_ci"],
        summary.entries.iter().map(|e| {
            vec![
                e.name.clone(),
                e.mean.to_string(),
                e.lower.to_string(),
                e.upper.to_string(),
                e.zero_in_ci.to_string(),
            ]
        }),
    )?;
    let tested: Vec<f64> = diag.iter().filter_map(|p| p.geweke).collect();
    let flagged = tested.iter().filter(|z| z.abs() > 1.96).count();
    let iacts: Vec<f64> = diag.iter().filter_map(|p| p.iact).collect();
    let max_iact = iacts.iter().copied().fold(f64::NAN, f64::max);
    let rp = ctx.path("report.txt");
    fs::write(
        &rp,
        format!(
            "draws: {}\nparameters tested: {}\ngeweke |z| > 1.96: {} ({:.2}%)\nwindows: first {}, last {}\nlargest iact: {}\ninterval level: {}\nquantile rule: {}\nkappa acceptance: {}\n",
            chain.len(),
            tested.len(),
            flagged,
            100.0 * flagged as f64 / tested.len().max(1) as f64,
            d.frac_a,
            d.frac_b,
            max_iact,
            d.level,
            QUANTILE_RULE,
            opt(chain.mean_kappa_acceptance()),
        ),
    )?;
    Ok(vec![dp, sp, rp])
}

pub fn waic_cmd(ctx: &Context) -> CmdResult {
    let w = ctx.config.waic.as_ref().ok_or("config has no [waic] section")?;
    let mut rows = Vec::new();
    for path in &w.chains {
        let chain = load_chain(path)?;
        let res = waic(&chain.loglik_matrix())?;
        rows.push((path.display().to_string(), res));
    }
    rows.sort_by(|a, b| a.1.waic.total_cmp(&b.1.waic));
    let wp = ctx.path("waic.csv");
    write_csv(
        &wp,
        &["chain", "waic", "lppd", "p_waic"],
        rows.iter().map(|(p, r)| {
            vec![p.clone(), r.waic.to_string(), r.lppd.to_string(), r.p_waic.to_string()]
        }),
    )?;
    for (p, r) in &rows {
        println!("{p}\t{:.3}", r.waic);
    }
    Ok(vec![wp])
}

pub fn recover(ctx: &Context) -> CmdResult {
    let sc = ctx.config.scenario.as_ref().ok_or("config has no [scenario] section")?;
    let result = run_study(sc, &ctx.config.chain)?;
    let rp = ctx.path("recovery.csv");
    let mut header: Vec<&str> = RecoveryReport::COLUMNS.to_vec();
    header.push("replications");
    let mut row: Vec<String> = result.report.values().iter().map(|v| v.to_string()).collect();
    row.push(result.report.replications.to_string());
    write_csv(&rp, &header, [row])?;
    let truth = PointEstimate::from_params(&result.truth, &sc.model_spec()?);
    let mut rows = Vec::new();
    for r in &result.replications {
        let own = recovery_metrics(&truth, std::slice::from_ref(&r.estimate))?;
        let mut row = vec![
            (r.index + 1).to_string(),
            r.permutation.iter().map(|p| (p + 1).to_string()).collect::<Vec<_>>().join(" "),
            opt(r.kappa_acceptance),
            format!("{:.3}", r.seconds),
        ];
        row.extend(own.values().iter().map(|v| v.to_string()));
        rows.push(row);
    }
    let mut header = vec!["replication", "permutation", "kappa_acceptance", "seconds"];
    header.extend(RecoveryReport::COLUMNS);
    let pp = ctx.path("replications.csv");
    write_csv(&pp, &header, rows)?;
    Ok(vec![rp, pp])
}
