use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use colband::clustering::{fit_kmeans, ClusterModel, Standardizer};
use colband::error::FormatError;
use colband::formats::{
    read_matrix, read_similarity, write_events, write_matrix, EventReader, Snapshot,
};
use colband::linalg::Matrix;
use colband::policies::{Algo, Policy, PolicyConfig};
use colband::replay::{EventRecord, MetricsSeries, ReplayOptions, ReplayOutcome, Replayer};
use colband::similarity::{build_w, sparsify, SimilarityMatrix};
use colband::synth::{
    collaborative_w, gen_environment, simulate, EnvSpec, Environment, OraclePolicy,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::args::*;
use crate::error::CliError;
use crate::metrics::{self, Run};

/// How many skipped lines get their own warning before going quiet.
const LOUD_SKIPS: u64 = 5;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_with(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Where `cluster --standardize` leaves the feature scaling.
pub fn scaling_path(centroids: &Path) -> PathBuf {
    with_suffix(centroids, ".scaling")
}

/// Seeds for the environment, its true W, and the interaction stream.
fn env_seeds(seed: u64) -> (u64, u64, u64) {
    (
        seed,
        seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        seed.wrapping_add(1),
    )
}

fn build_env(env: &EnvArgs, seed: u64) -> Result<Environment, CliError> {
    if env.clusters == 0 || env.dim == 0 || env.pool == 0 || env.arms == 0 {
        return Err(CliError::config(
            "clusters, dim, pool and arms must be positive",
        ));
    }
    if !(0.0..=1.0).contains(&env.self_weight) || env.self_weight == 0.0 {
        return Err(CliError::config("self-weight must be in (0, 1]"));
    }
    if !(env.noise >= 0.0 && env.noise.is_finite())
        || !(env.latent_scale >= 0.0 && env.latent_scale.is_finite())
    {
        return Err(CliError::config(
            "noise and latent-scale must be nonnegative",
        ));
    }
    let (env_seed, w_seed, _) = env_seeds(seed);
    let w = collaborative_w(env.clusters, env.self_weight, w_seed);
    Ok(gen_environment(&EnvSpec {
        clusters: env.clusters,
        d: env.dim,
        dl: env.env_latent_dim,
        k: env.pool,
        num_arms: env.arms,
        user_dim: env.user_dim,
        w_star: w,
        latent_scale: env.latent_scale,
        noise_std: env.noise,
        reward_model: env.reward.into(),
        seed: env_seed,
    }))
}

pub fn genlog(a: &GenlogArgs) -> Result<(), CliError> {
    let env = build_env(&a.env, a.seed)?;
    let log = env.gen_log(a.horizon, env_seeds(a.seed).2);
    write_with(&a.out, |w| write_events(w, &log))?;
    if let Some(p) = &a.truth_centroids {
        write_with(p, |w| write_matrix(w, env.centroids()))?;
    }
    if let Some(p) = &a.truth_w {
        write_with(p, |w| write_matrix(w, env.spec().w_star.entries()))?;
    }
    info!("wrote {} events to {}", log.len(), a.out.display());
    Ok(())
}

/// Counts and reports event lines that cannot be used.
#[derive(Debug, Default)]
pub struct SkipCounter {
    pub skipped: u64,
}

impl SkipCounter {
    fn skip(&mut self, why: impl std::fmt::Display) {
        self.skipped += 1;
        if self.skipped <= LOUD_SKIPS {
            warn!("skipping {why}");
        } else if self.skipped == LOUD_SKIPS + 1 {
            warn!("further skipped lines are counted but not shown");
        }
    }

    fn report(&self, what: &Path) {
        if self.skipped > 0 {
            warn!(
                "{}: skipped {} malformed lines",
                what.display(),
                self.skipped
            );
        }
    }
}

/// One line of a log: an event, a skippable line (with the reason), or a
/// fatal read error.
pub type LogItem = Result<Result<EventRecord, String>, CliError>;

fn events_of<R: BufRead>(r: R) -> impl Iterator<Item = LogItem> {
    EventReader::new(r).map(|item| match item {
        Ok(e) => Ok(Ok(e)),
        Err(FormatError::Parse { line, message }) => Ok(Err(format!("line {line}: {message}"))),
        Err(e) => Err(e.into()),
    })
}

pub fn read_log(path: &Path) -> Result<(Vec<EventRecord>, u64), CliError> {
    let mut skips = SkipCounter::default();
    let mut events = Vec::new();
    for item in events_of(open(path)?) {
        match item? {
            Ok(e) => events.push(e),
            Err(why) => skips.skip(why),
        }
    }
    skips.report(path);
    Ok((events, skips.skipped))
}

pub fn fit_clusters(
    events: &[EventRecord],
    k: usize,
    seed: u64,
    max_iters: usize,
    standardize: bool,
) -> Result<ClusterModel, CliError> {
    let dim = events.first().map_or(0, |e| e.user_features.len());
    let mut skips = SkipCounter::default();
    let mut points = Vec::with_capacity(events.len());
    for e in events {
        if e.user_features.len() == dim {
            points.push(e.user_features.clone());
        } else {
            skips.skip(format_args!(
                "event at t={}: user feature dimension mismatch",
                e.timestamp
            ));
        }
    }
    let scaling = standardize.then(|| Standardizer::fit(&points));
    if let Some(s) = &scaling {
        points = points.iter().map(|p| s.apply(p)).collect();
    }
    Ok(fit_kmeans(&points, k, seed, max_iters)?.with_scaling(scaling))
}

pub fn write_clusters(model: &ClusterModel, out: &Path) -> Result<(), CliError> {
    write_with(out, |w| write_matrix(w, model.centroids()))?;
    let side = scaling_path(out);
    match model.scaling() {
        Some(s) => {
            let m = Matrix::from_rows(&[s.mean.clone(), s.std.clone()])?;
            write_with(&side, |w| write_matrix(w, &m))?;
        }
        None if side.exists() => {
            // a stale scaling file would silently change assignments
            std::fs::remove_file(&side).map_err(|e| CliError::io(&side, e))?;
        }
        None => {}
    }
    Ok(())
}

pub fn load_clusters(path: &Path) -> Result<ClusterModel, CliError> {
    let centroids = read_matrix(open(path)?)?;
    let side = scaling_path(path);
    let scaling = if side.exists() {
        let m = read_matrix(open(&side)?)?;
        if m.rows() != 2 || m.cols() != centroids.cols() {
            return Err(CliError::Parse(format!(
                "{}: expected 2x{} scaling",
                side.display(),
                centroids.cols()
            )));
        }
        Some(Standardizer {
            mean: m.row(0).to_vec(),
            std: m.row(1).to_vec(),
        })
    } else {
        None
    };
    Ok(ClusterModel::from_centroids(centroids).with_scaling(scaling))
}

pub fn cluster(a: &ClusterArgs) -> Result<(), CliError> {
    let (events, _) = read_log(&a.log)?;
    let model = fit_clusters(&events, a.k, a.seed, a.max_iters, a.standardize)?;
    write_clusters(&model, &a.out)?;
    info!("{} centroids from {} users", model.k(), events.len());
    Ok(())
}

pub fn make_w(model: &ClusterModel, sparsity: f64) -> Result<SimilarityMatrix, CliError> {
    Ok(sparsify(&build_w(model)?, sparsity)?)
}

pub fn buildw(a: &BuildwArgs) -> Result<(), CliError> {
    let model = ClusterModel::from_centroids(read_matrix(open(&a.centroids)?)?);
    let w = make_w(&model, a.sparsity)?;
    write_with(&a.out, |f| write_matrix(f, w.entries()))
}

pub fn validate_w(a: &ValidateWArgs) -> Result<String, CliError> {
    let w = read_similarity(open(&a.w)?)?;
    let nz: Vec<usize> = (0..w.m()).map(|c| w.nonzeros_in_column(c)).collect();
    Ok(format!(
        "ok: {0}x{0}, nonzeros per column {1}..{2}",
        w.m(),
        nz.iter().min().copied().unwrap_or(0),
        nz.iter().max().copied().unwrap_or(0)
    ))
}

/// Everything needed to run one replay besides the events.
pub struct ReplaySetup {
    pub algo: Option<Algo>,
    pub snapshot: Option<Policy>,
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub latent_dim: usize,
    pub latent_init: f64,
    pub seed: u64,
    pub clusters: ClusterModel,
    pub w: Option<SimilarityMatrix>,
    pub opts: ReplayOptions,
    pub progress_every: u64,
}

impl ReplaySetup {
    fn check(&self) -> Result<(), CliError> {
        if self.snapshot.is_some() {
            return Ok(());
        }
        let algo = self
            .algo
            .ok_or_else(|| CliError::config("--algo is required unless --snapshot-in is given"))?;
        if algo.needs_similarity() && self.w.is_none() {
            return Err(CliError::config(format!("{algo} needs --w")));
        }
        if algo == Algo::FactorUcb && self.latent_dim == 0 {
            return Err(CliError::config(
                "factorucb needs --latent-dim of at least 1",
            ));
        }
        if let Some(w) = &self.w {
            if w.m() != self.clusters.k() {
                return Err(CliError::config(format!(
                    "W is {0}x{0} but there are {1} clusters",
                    w.m(),
                    self.clusters.k()
                )));
            }
        }
        if self.opts.bucket_size == 0 || self.opts.window == 0 {
            return Err(CliError::config("bucket and window must be positive"));
        }
        Ok(())
    }

    fn new_policy(&self, feature_dim: usize) -> Result<Policy, CliError> {
        if let Some(p) = &self.snapshot {
            return Ok(p.clone());
        }
        let cfg = PolicyConfig {
            alpha: self.alpha,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            num_clusters: self.clusters.k(),
            feature_dim,
            latent_dim: self.latent_dim,
            w: self.w.clone(),
            seed: self.seed,
            latent_init_scale: self.latent_init,
        };
        Ok(Policy::new(self.algo.expect("checked"), &cfg)?)
    }
}

pub struct ReplayResult {
    pub outcome: ReplayOutcome,
    pub policy: Option<Policy>,
    /// Lines that could not be parsed or whose feature dimensions disagree.
    pub skipped: u64,
}

/// Replays `events`, creating the policy once the first event fixes the
/// feature dimension. Malformed events are skipped and counted.
pub fn run_replay<I>(
    setup: &ReplaySetup,
    events: I,
    skips: &mut SkipCounter,
) -> Result<ReplayResult, CliError>
where
    I: IntoIterator<Item = LogItem>,
{
    setup.check()?;
    let user_dim = setup.clusters.feature_dim();
    let mut events = events.into_iter();
    let usable = |item: LogItem,
                  dim: Option<usize>,
                  skips: &mut SkipCounter|
     -> Result<Option<EventRecord>, CliError> {
        let e = match item? {
            Ok(e) => e,
            Err(why) => {
                skips.skip(why);
                return Ok(None);
            }
        };
        let Some(d) = dim.or_else(|| e.pool.first().map(|c| c.features.len())) else {
            skips.skip(format_args!("event at t={}: empty pool", e.timestamp));
            return Ok(None);
        };
        if e.pool.iter().any(|c| c.features.len() != d)
            || (user_dim > 0 && e.user_features.len() != user_dim)
        {
            skips.skip(format_args!(
                "event at t={}: feature dimension mismatch",
                e.timestamp
            ));
            return Ok(None);
        }
        Ok(Some(e))
    };

    let mut first = None;
    for item in events.by_ref() {
        if let Some(e) = usable(item, None, skips)? {
            first = Some(e);
            break;
        }
    }
    let Some(first) = first else {
        return Ok(ReplayResult {
            outcome: ReplayOutcome {
                series: MetricsSeries::new(setup.opts.bucket_size, setup.opts.window),
                events: 0,
                matched: 0,
                malformed: 0,
            },
            policy: None,
            skipped: skips.skipped,
        });
    };
    let dim = Some(first.pool[0].features.len());
    let mut policy = setup.new_policy(first.pool[0].features.len())?;
    let mut r = Replayer::new(&mut policy, &setup.clusters, setup.opts);
    let mut next = Some(first);
    loop {
        let Some(e) = next.take() else {
            match events.next() {
                Some(item) => {
                    next = usable(item, dim, skips)?;
                    continue;
                }
                None => break,
            }
        };
        r.push(&e)?;
        if setup.progress_every > 0 && r.events_seen().is_multiple_of(setup.progress_every) {
            info!("{} events replayed", r.events_seen());
        }
    }
    let outcome = r.finish();
    if outcome.malformed > 0 {
        warn!(
            "{} events name a displayed arm outside their pool or a bad click",
            outcome.malformed
        );
    }
    Ok(ReplayResult {
        skipped: skips.skipped,
        outcome,
        policy: Some(policy),
    })
}

fn run_meta(
    setup: &ReplaySetup,
    algo: &str,
    res: &ReplayResult,
    tags: &[(String, String)],
) -> String {
    let mut fields: Vec<(&str, String)> = vec![
        ("algo", algo.to_string()),
        ("clusters", setup.clusters.k().to_string()),
        (
            "sparsity",
            setup
                .w
                .as_ref()
                .map_or_else(String::new, |w| w.sparsity_pct().to_string()),
        ),
        (
            "alpha",
            if algo == "factorucb" || algo == "random" {
                String::new()
            } else {
                setup.alpha.to_string()
            },
        ),
        ("alpha1", setup.alpha1.to_string()),
        ("alpha2", setup.alpha2.to_string()),
        ("seed", setup.seed.to_string()),
        ("events", res.outcome.events.to_string()),
        ("matched", res.outcome.matched.to_string()),
        ("skipped", (res.skipped + res.outcome.malformed).to_string()),
    ];
    for (k, v) in tags {
        match fields.iter_mut().find(|(fk, _)| fk == k) {
            Some(f) => f.1 = v.clone(),
            None => fields.push((k.as_str(), v.clone())),
        }
    }
    metrics::format_meta(&fields)
}

pub fn replay(a: &ReplayArgs) -> Result<(), CliError> {
    let clusters = match &a.centroids {
        Some(p) => load_clusters(p)?,
        None => ClusterModel::from_centroids(Matrix::zeros(1, 0)),
    };
    let w =
        a.w.as_deref()
            .map(|p| open(p).and_then(|r| Ok(read_similarity(r)?)))
            .transpose()?;
    let snapshot = match &a.snapshot_in {
        Some(p) => {
            let pol = Policy::restore(&Snapshot::parse(&read_text(p)?)?)?;
            if let Some(algo) = a.policy.algo {
                if Algo::from(algo) != pol.algo() {
                    return Err(CliError::config(format!(
                        "snapshot holds {}, not {}",
                        pol.algo(),
                        Algo::from(algo)
                    )));
                }
            }
            Some(pol)
        }
        None => None,
    };
    let setup = ReplaySetup {
        algo: a.policy.algo.map(Algo::from),
        snapshot,
        alpha: a.policy.alpha,
        alpha1: a.policy.alpha1,
        alpha2: a.policy.alpha2,
        latent_dim: a.policy.latent_dim,
        latent_init: a.policy.latent_init,
        seed: a.seed,
        clusters,
        w,
        opts: ReplayOptions {
            bucket_size: a.bucket,
            window: a.window,
            bucket_by: a.bucket_by.into(),
        },
        progress_every: a.progress_every,
    };
    setup.check()?;
    let mut skips = SkipCounter::default();
    let res = run_replay(&setup, events_of(open(&a.log)?), &mut skips)?;
    skips.report(&a.log);

    write_text(
        &a.out,
        &metrics::format_metrics(&res.outcome.series, a.drop_warmup),
    )?;
    let algo = setup
        .snapshot
        .as_ref()
        .map(Policy::algo)
        .or(setup.algo)
        .expect("checked");
    write_text(
        &metrics::meta_path(&a.out),
        &run_meta(&setup, algo.as_str(), &res, &a.tags),
    )?;
    if let Some(p) = &a.snapshot_out {
        match &res.policy {
            Some(pol) => write_text(p, &pol.snapshot().render())?,
            None => warn!("log had no events; no snapshot written"),
        }
    }
    info!(
        "{} events, {} matched, overall CTR {}",
        res.outcome.events,
        res.outcome.matched,
        res.outcome
            .series
            .overall_ctr()
            .map_or("n/a".into(), |c| format!("{c:.6}"))
    );
    Ok(())
}

pub fn simulate_cmd(a: &SimulateArgs) -> Result<(), CliError> {
    let env = build_env(&a.env, a.seed)?;
    let stream = env_seeds(a.seed).2;
    let curve = if a.oracle {
        simulate(&env, &mut OraclePolicy::new(&env), a.horizon, stream)?
    } else {
        let algo: Algo = a
            .policy
            .algo
            .ok_or_else(|| CliError::config("--algo or --oracle is required"))?
            .into();
        if algo == Algo::FactorUcb && a.policy.latent_dim == 0 {
            return Err(CliError::config(
                "factorucb needs --latent-dim of at least 1",
            ));
        }
        let w = match &a.w {
            Some(p) => read_similarity(open(p)?)?,
            None => env.spec().w_star.clone(),
        };
        let cfg = PolicyConfig {
            alpha: a.policy.alpha,
            alpha1: a.policy.alpha1,
            alpha2: a.policy.alpha2,
            num_clusters: a.env.clusters,
            feature_dim: a.env.dim,
            latent_dim: a.policy.latent_dim,
            w: Some(w),
            seed: a.seed,
            latent_init_scale: a.policy.latent_init,
        };
        let mut pol = Policy::new(algo, &cfg)?;
        simulate(&env, &mut pol, a.horizon, stream)?
    };
    write_text(&a.out, &metrics::format_regret(&curve))?;
    info!(
        "final regret {:.4}, reward {:.4}",
        curve.final_regret(),
        curve.final_reward()
    );
    Ok(())
}

pub fn load_run(path: &Path) -> Result<Run, CliError> {
    let rows = metrics::parse_metrics(&read_text(path)?, path)?;
    let mp = metrics::meta_path(path);
    let meta = if mp.exists() {
        metrics::parse_meta(&read_text(&mp)?)
    } else {
        Vec::new()
    };
    let name = path.file_stem().map_or_else(
        || path.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Ok(Run { name, rows, meta })
}

pub fn report(a: &ReportArgs) -> Result<Option<String>, CliError> {
    let runs = a
        .runs
        .iter()
        .map(|p| load_run(p))
        .collect::<Result<Vec<_>, _>>()?;
    let random = load_run(&a.random)?;
    let (table, summary) = metrics::build_report(&runs, &random);
    write_text(&a.out, &table)?;
    match &a.summary {
        Some(p) => {
            write_text(p, &summary)?;
            Ok(None)
        }
        None => Ok(Some(summary)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct GridJob {
    algo: Algo,
    k: usize,
    sparsity: Option<f64>,
    /// FactorUCB explores with `alpha1`/`alpha2` and ignores the α axis.
    alpha: Option<f64>,
}

impl GridJob {
    fn file_name(&self) -> String {
        match self.algo {
            Algo::Random => "random.csv".into(),
            _ => format!(
                "{}_k{}_s{}_a{}.csv",
                self.algo,
                self.k,
                self.sparsity.map_or_else(|| "na".into(), |s| s.to_string()),
                self.alpha.map_or_else(|| "na".into(), |a| a.to_string())
            ),
        }
    }
}

pub fn grid(a: &GridArgs) -> Result<(), CliError> {
    if a.clusters.is_empty() || a.alpha.is_empty() || a.algos.is_empty() || a.sparsity.is_empty() {
        return Err(CliError::config("grid axes must be nonempty"));
    }
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError::io(&a.out_dir, e))?;
    let (events, _) = read_log(&a.log)?;

    let mut models = Vec::new();
    let mut ws = Vec::new();
    for &k in &a.clusters {
        let model = fit_clusters(
            &events,
            k,
            a.seed,
            colband::clustering::DEFAULT_MAX_ITERS,
            a.standardize,
        )?;
        write_clusters(&model, &a.out_dir.join(format!("centroids_k{k}.csv")))?;
        for &p in &a.sparsity {
            let w = make_w(&model, p)?;
            write_with(&a.out_dir.join(format!("w_k{k}_s{p}.csv")), |f| {
                write_matrix(f, w.entries())
            })?;
            ws.push(((k, p.to_bits()), w));
        }
        models.push((k, model));
    }

    // rows of the summary, in grid order
    let mut rows = Vec::new();
    for &k in &a.clusters {
        for &p in &a.sparsity {
            for &alpha in &a.alpha {
                for &algo in &a.algos {
                    let algo = Algo::from(algo);
                    rows.push((
                        p,
                        GridJob {
                            algo,
                            k,
                            sparsity: algo.needs_similarity().then_some(p),
                            alpha: (algo != Algo::FactorUcb).then_some(alpha),
                        },
                        alpha,
                    ));
                }
            }
        }
    }
    let mut jobs: Vec<GridJob> = vec![GridJob {
        algo: Algo::Random,
        k: 1,
        sparsity: None,
        alpha: None,
    }];
    for (_, j, _) in &rows {
        if !jobs.contains(j) {
            jobs.push(*j);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| CliError::config(e.to_string()))?;
    let single = ClusterModel::from_centroids(Matrix::zeros(1, 0));
    let results: Vec<Result<(), CliError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| {
                let clusters = if job.algo == Algo::Random {
                    single.clone()
                } else {
                    models
                        .iter()
                        .find(|(k, _)| *k == job.k)
                        .expect("fitted")
                        .1
                        .clone()
                };
                let w = job.sparsity.map(|p| {
                    ws.iter()
                        .find(|(key, _)| *key == (job.k, p.to_bits()))
                        .expect("built")
                        .1
                        .clone()
                });
                let setup = ReplaySetup {
                    algo: Some(job.algo),
                    snapshot: None,
                    alpha: job.alpha.unwrap_or(0.0),
                    alpha1: a.alpha1,
                    alpha2: a.alpha2,
                    latent_dim: if job.algo == Algo::FactorUcb {
                        a.latent_dim
                    } else {
                        0
                    },
                    latent_init: a.latent_init,
                    seed: a.seed,
                    clusters,
                    w,
                    opts: ReplayOptions {
                        bucket_size: a.bucket,
                        window: a.window,
                        bucket_by: Default::default(),
                    },
                    progress_every: 0,
                };
                let mut skips = SkipCounter::default();
                let res = run_replay(
                    &setup,
                    events.iter().cloned().map(|e| Ok(Ok(e))),
                    &mut skips,
                )?;
                let out = a.out_dir.join(job.file_name());
                write_text(&out, &metrics::format_metrics(&res.outcome.series, false))?;
                write_text(
                    &metrics::meta_path(&out),
                    &run_meta(&setup, job.algo.as_str(), &res, &[]),
                )?;
                info!("finished {}", job.file_name());
                Ok(())
            })
            .collect()
    });
    results.into_iter().collect::<Result<(), _>>()?;

    let random = load_run(&a.out_dir.join("random.csv"))?;
    let mut runs = Vec::new();
    for (p, job, alpha) in &rows {
        let mut run = load_run(&a.out_dir.join(job.file_name()))?;
        // every row carries its grid cell, shared runs included
        run.meta.retain(|(k, _)| k != "sparsity" && k != "alpha");
        run.meta.push(("sparsity".into(), p.to_string()));
        run.meta.push(("alpha".into(), alpha.to_string()));
        runs.push(run);
    }
    let (table, summary) = metrics::build_report(&runs, &random);
    write_text(&a.out_dir.join("report.csv"), &table)?;
    write_text(&a.out_dir.join("summary.csv"), &summary)?;
    Ok(())
}
