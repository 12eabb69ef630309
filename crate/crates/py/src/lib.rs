//! Python bindings: similarity matrices, cluster models, policies, synthetic
//! environments and log replay.

use std::fs::File;
use std::io::BufReader;

use colband::clustering::{self, DEFAULT_MAX_ITERS};
use colband::formats::{read_events, write_events, Snapshot};
use colband::policies::{self, Algo, BanditPolicy, Candidate, PolicyConfig};
use colband::replay::{BucketBy, ReplayOptions, DEFAULT_BUCKET, DEFAULT_WINDOW};
use colband::similarity;
use colband::synth::{self, collaborative_w, gen_environment, EnvSpec, OraclePolicy, RewardModel};
use colband::Matrix;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    Matrix::from_rows(rows).map_err(value_err)
}

/// Column-stochastic similarity matrix over clusters.
#[pyclass(module = "colband_py", frozen, from_py_object)]
#[derive(Clone)]
struct SimilarityMatrix {
    inner: similarity::SimilarityMatrix,
}

#[pymethods]
impl SimilarityMatrix {
    /// Validates `rows` (row-major) as a similarity matrix.
    #[new]
    #[pyo3(signature = (rows, sparsity_pct=100.0))]
    fn new(rows: Vec<Vec<f64>>, sparsity_pct: f64) -> PyResult<Self> {
        let inner = similarity::SimilarityMatrix::from_matrix(matrix(&rows)?, sparsity_pct)
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn identity(m: usize) -> Self {
        Self {
            inner: similarity::SimilarityMatrix::identity(m),
        }
    }

    /// Dense W from a fitted cluster model, optionally sparsified.
    #[staticmethod]
    #[pyo3(signature = (model, keep_pct=100.0))]
    fn from_clusters(model: &ClusterModel, keep_pct: f64) -> PyResult<Self> {
        let dense = similarity::build_w(&model.inner).map_err(value_err)?;
        Ok(Self {
            inner: similarity::sparsify(&dense, keep_pct).map_err(value_err)?,
        })
    }

    fn sparsify(&self, keep_pct: f64) -> PyResult<Self> {
        Ok(Self {
            inner: similarity::sparsify(&self.inner, keep_pct).map_err(value_err)?,
        })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn sparsity_pct(&self) -> f64 {
        self.inner.sparsity_pct()
    }

    fn column(&self, i: usize) -> PyResult<Vec<f64>> {
        if i >= self.inner.m() {
            return Err(value_err(format!("column {i} out of range")));
        }
        Ok(self.inner.column(i))
    }

    fn nonzeros_in_column(&self, i: usize) -> PyResult<usize> {
        if i >= self.inner.m() {
            return Err(value_err(format!("column {i} out of range")));
        }
        Ok(self.inner.nonzeros_in_column(i))
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        self.inner.entries().to_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "SimilarityMatrix(m={}, sparsity_pct={})",
            self.inner.m(),
            self.inner.sparsity_pct()
        )
    }
}

/// k-means centroids; assigns users to their nearest cluster.
#[pyclass(module = "colband_py", frozen)]
struct ClusterModel {
    inner: clustering::ClusterModel,
}

#[pymethods]
impl ClusterModel {
    #[new]
    fn new(centroids: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(Self {
            inner: clustering::ClusterModel::from_centroids(matrix(&centroids)?),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (points, k, seed=0, max_iters=DEFAULT_MAX_ITERS))]
    fn fit(points: Vec<Vec<f64>>, k: usize, seed: u64, max_iters: usize) -> PyResult<Self> {
        Ok(Self {
            inner: clustering::fit_kmeans(&points, k, seed, max_iters).map_err(value_err)?,
        })
    }

    #[getter]
    fn k(&self) -> usize {
        self.inner.k()
    }

    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids().to_rows()
    }

    fn assign(&self, user_features: Vec<f64>) -> PyResult<usize> {
        if user_features.len() != self.inner.feature_dim() {
            return Err(value_err(format!(
                "expected {} user features, got {}",
                self.inner.feature_dim(),
                user_features.len()
            )));
        }
        Ok(self.inner.assign(&user_features))
    }

    fn sse(&self, points: Vec<Vec<f64>>) -> f64 {
        self.inner.sse(&points)
    }
}

fn candidates(pool: Vec<(String, Vec<f64>)>) -> Vec<Candidate> {
    pool.into_iter()
        .map(|(id, x)| Candidate::new(id, x))
        .collect()
}

/// A bandit policy: random, linucb, mlinucb, colin or factorucb.
#[pyclass(module = "colband_py")]
struct Policy {
    inner: policies::Policy,
}

#[pymethods]
impl Policy {
    #[new]
    #[pyo3(signature = (
        algo, num_clusters, feature_dim, *, alpha=0.5, alpha1=policies::DEFAULT_ALPHA1,
        alpha2=policies::DEFAULT_ALPHA2, latent_dim=0, w=None, seed=0,
        latent_init=policies::DEFAULT_LATENT_INIT_SCALE
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        algo: &str,
        num_clusters: usize,
        feature_dim: usize,
        alpha: f64,
        alpha1: f64,
        alpha2: f64,
        latent_dim: usize,
        w: Option<SimilarityMatrix>,
        seed: u64,
        latent_init: f64,
    ) -> PyResult<Self> {
        let algo: Algo = algo.parse().map_err(value_err)?;
        let cfg = PolicyConfig {
            alpha,
            alpha1,
            alpha2,
            num_clusters,
            feature_dim,
            latent_dim,
            w: w.map(|w| w.inner),
            seed,
            latent_init_scale: latent_init,
        };
        Ok(Self {
            inner: policies::Policy::new(algo, &cfg).map_err(value_err)?,
        })
    }

    #[getter]
    fn algo(&self) -> &'static str {
        self.inner.algo().as_str()
    }

    /// Index into `pool`, a list of `(arm_id, features)` pairs.
    fn select(&mut self, cluster: usize, pool: Vec<(String, Vec<f64>)>) -> PyResult<usize> {
        self.inner
            .select(cluster, &candidates(pool))
            .map_err(value_err)
    }

    fn update(
        &mut self,
        cluster: usize,
        arm_id: String,
        features: Vec<f64>,
        reward: f64,
    ) -> PyResult<()> {
        self.inner
            .update(cluster, &Candidate::new(arm_id, features), reward)
            .map_err(value_err)
    }

    /// Full learned state as text; `Policy.restore` reads it back.
    fn snapshot(&self) -> String {
        self.inner.snapshot().render()
    }

    #[staticmethod]
    fn restore(text: &str) -> PyResult<Self> {
        let snap = Snapshot::parse(text).map_err(value_err)?;
        Ok(Self {
            inner: policies::Policy::restore(&snap).map_err(value_err)?,
        })
    }
}

/// Synthetic environment with a known true W and parameters.
#[pyclass(module = "colband_py", frozen)]
struct Environment {
    inner: synth::Environment,
}

#[pymethods]
impl Environment {
    #[new]
    #[pyo3(signature = (
        *, clusters=10, dim=5, latent_dim=0, pool=10, arms=50, user_dim=5, self_weight=0.4,
        latent_scale=0.5, reward="bernoulli", noise=0.1, seed=0, w=None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        clusters: usize,
        dim: usize,
        latent_dim: usize,
        pool: usize,
        arms: usize,
        user_dim: usize,
        self_weight: f64,
        latent_scale: f64,
        reward: &str,
        noise: f64,
        seed: u64,
        w: Option<SimilarityMatrix>,
    ) -> PyResult<Self> {
        if clusters == 0 || dim == 0 || pool == 0 || arms == 0 || user_dim == 0 {
            return Err(value_err(
                "clusters, dim, pool, arms and user_dim must be positive",
            ));
        }
        if pool > arms {
            return Err(value_err("pool cannot exceed arms"));
        }
        let reward_model = match reward {
            "bernoulli" => RewardModel::Bernoulli,
            "gaussian" => RewardModel::Gaussian,
            other => return Err(value_err(format!("unknown reward model `{other}`"))),
        };
        let w_star = match w {
            Some(w) if w.inner.m() != clusters => {
                return Err(value_err("w must be clusters x clusters"))
            }
            Some(w) => w.inner,
            None => collaborative_w(clusters, self_weight, seed.wrapping_add(1)),
        };
        Ok(Self {
            inner: gen_environment(&EnvSpec {
                num_arms: arms,
                user_dim,
                latent_scale,
                noise_std: noise,
                reward_model,
                seed,
                ..EnvSpec::new(w_star, dim, latent_dim, pool)
            }),
        })
    }

    fn true_w(&self) -> SimilarityMatrix {
        SimilarityMatrix {
            inner: self.inner.spec().w_star.clone(),
        }
    }

    fn centroids(&self) -> Vec<Vec<f64>> {
        self.inner.centroids().to_rows()
    }

    fn random_regret_slope(&self) -> f64 {
        self.inner.random_regret_slope()
    }

    /// Runs `policy` live for `horizon` steps, or the true best arm when
    /// `policy` is None. Returns per-step regret and cumulative reward.
    #[pyo3(signature = (policy, horizon, seed=0))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        policy: Option<PyRefMut<'_, Policy>>,
        horizon: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let curve = match policy {
            Some(mut p) => synth::simulate(&self.inner, &mut p.inner, horizon, seed),
            None => synth::simulate(
                &self.inner,
                &mut OraclePolicy::new(&self.inner),
                horizon,
                seed,
            ),
        }
        .map_err(value_err)?;
        let out = PyDict::new(py);
        out.set_item("inst_regret", curve.inst_regret)?;
        out.set_item("cum_regret", curve.cum_regret)?;
        out.set_item("cum_reward", curve.cum_reward)?;
        Ok(out)
    }

    /// Writes a uniformly logged event log in the tab-separated log format.
    fn write_log(&self, path: &str, horizon: usize, seed: u64) -> PyResult<()> {
        let log = self.inner.gen_log(horizon, seed);
        let f = File::create(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        write_events(std::io::BufWriter::new(f), &log)
            .map_err(|e| PyIOError::new_err(format!("{path}: {e}")))
    }
}

/// Replays `policy` over the event log at `path`. Without `clusters` every user
/// is in cluster 0.
#[pyfunction]
#[pyo3(signature = (policy, path, clusters=None, bucket=DEFAULT_BUCKET, window=DEFAULT_WINDOW, bucket_by="matched"))]
fn replay<'py>(
    py: Python<'py>,
    policy: &mut Policy,
    path: &str,
    clusters: Option<&ClusterModel>,
    bucket: usize,
    window: usize,
    bucket_by: &str,
) -> PyResult<Bound<'py, PyDict>> {
    if bucket == 0 || window == 0 {
        return Err(value_err("bucket and window must be positive"));
    }
    let bucket_by = match bucket_by {
        "matched" => BucketBy::Matched,
        "raw" => BucketBy::Raw,
        other => return Err(value_err(format!("unknown bucketing `{other}`"))),
    };
    let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
    let events = read_events(BufReader::new(f)).map_err(value_err)?;
    let single;
    let model = match clusters {
        Some(c) => &c.inner,
        None => {
            let dim = events.first().map_or(1, |e| e.user_features.len());
            single = clustering::ClusterModel::from_centroids(Matrix::zeros(1, dim));
            &single
        }
    };
    let opts = ReplayOptions {
        bucket_size: bucket,
        window,
        bucket_by,
    };
    let outcome =
        colband::replay::replay(&mut policy.inner, model, &events, opts).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("events", outcome.events)?;
    out.set_item("matched", outcome.matched)?;
    out.set_item("bucket_ctr", outcome.series.bucket_ctr())?;
    out.set_item("rolling_ctr", outcome.series.rolling_ctr())?;
    out.set_item("cumulative_ctr", outcome.series.cumulative_ctr())?;
    Ok(out)
}

#[pymodule]
fn colband_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SimilarityMatrix>()?;
    m.add_class::<ClusterModel>()?;
    m.add_class::<Policy>()?;
    m.add_class::<Environment>()?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    Ok(())
}
