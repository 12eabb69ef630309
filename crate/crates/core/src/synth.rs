//! Synthetic environments with known ground truth.
//!
//! Each cluster `i` has effective parameter `Θ* · w*_i` over the augmented
//! context `(x_a, v*_a)`, where `v*_a` is a hidden per-arm latent vector. The
//! arm catalog is fixed for the life of an environment, so arms recur across
//! pools and their latent vectors can be learned.

use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::PolicyError;
use crate::linalg::{dot, norm2, Matrix};
use crate::policies::{argmax_first, BanditPolicy, Candidate};
use crate::replay::EventRecord;
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardModel {
    /// Click with probability given by the squashed mean.
    Bernoulli,
    /// Raw linear mean plus Gaussian noise.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub clusters: usize,
    pub d: usize,
    pub dl: usize,
    /// Pool size per step.
    pub k: usize,
    /// Catalog size the pools are drawn from.
    pub num_arms: usize,
    /// Dimension of the synthetic user (centroid) features.
    pub user_dim: usize,
    pub w_star: SimilarityMatrix,
    /// Latent entries are uniform in `[-latent_scale, latent_scale]`.
    pub latent_scale: f64,
    pub noise_std: f64,
    pub reward_model: RewardModel,
    pub seed: u64,
}

impl EnvSpec {
    /// Reasonable defaults around a given similarity matrix.
    pub fn new(w_star: SimilarityMatrix, d: usize, dl: usize, k: usize) -> Self {
        Self {
            clusters: w_star.m(),
            d,
            dl,
            k,
            num_arms: 50,
            user_dim: 5,
            w_star,
            latent_scale: 0.5,
            noise_std: 0.1,
            reward_model: RewardModel::Bernoulli,
            seed: 0,
        }
    }
}

/// Column-stochastic matrix with `self_weight` on the diagonal and random
/// positive weights spread over the rest of every column.
pub fn collaborative_w(m: usize, self_weight: f64, seed: u64) -> SimilarityMatrix {
    if m == 1 {
        return SimilarityMatrix::identity(1);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Matrix::zeros(m, m);
    for c in 0..m {
        let off: Vec<f64> = (0..m - 1).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = off.iter().sum();
        let mut it = off.iter();
        for r in 0..m {
            let v = if r == c {
                self_weight
            } else {
                (1.0 - self_weight) * it.next().expect("m - 1 weights") / total
            };
            raw.set(r, c, v);
        }
    }
    SimilarityMatrix::from_weights(raw).expect("positive columns")
}

/// Blends `w` towards uniform noise: `(1 − strength)·w + strength·N`, with `N`
/// random column-stochastic.
pub fn perturb_w(w: &SimilarityMatrix, strength: f64, seed: u64) -> SimilarityMatrix {
    let m = w.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut raw = Matrix::zeros(m, m);
    for c in 0..m {
        let noise: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = noise.iter().sum();
        for r in 0..m {
            raw.set(
                r,
                c,
                (1.0 - strength) * w.get(r, c) + strength * noise[r] / total,
            );
        }
    }
    SimilarityMatrix::from_weights(raw).expect("positive diagonal keeps columns nonzero")
}

fn unit_sphere(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn unit_ball(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let dir = unit_sphere(rng, dim);
    let r = rng.random::<f64>().powf(1.0 / dim as f64);
    dir.into_iter().map(|x| x * r).collect()
}

#[derive(Debug, Clone)]
pub struct Environment {
    spec: EnvSpec,
    theta_star: Matrix,
    /// `Θ* · W*`, column `i` is cluster `i`'s true parameter.
    effective: Matrix,
    arms: Vec<Candidate>,
    v_star: Vec<Vec<f64>>,
    arm_lookup: HashMap<String, usize>,
    centroids: Matrix,
    squash_bound: f64,
}

/// Samples a fresh environment; identical seeds give identical environments.
pub fn gen_environment(spec: &EnvSpec) -> Environment {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.d + spec.dl;
    let m = spec.clusters;
    let mut theta_star = Matrix::zeros(p, m);
    for c in 0..m {
        for (r, v) in unit_ball(&mut rng, p).into_iter().enumerate() {
            theta_star.set(r, c, v);
        }
    }
    let effective = theta_star
        .matmul(spec.w_star.entries())
        .expect("W* is M x M");
    let mut arms = Vec::with_capacity(spec.num_arms);
    let mut v_star = Vec::with_capacity(spec.num_arms);
    for a in 0..spec.num_arms {
        arms.push(Candidate::new(
            format!("a{a}"),
            unit_sphere(&mut rng, spec.d),
        ));
        let s = spec.latent_scale;
        v_star.push(
            (0..spec.dl)
                .map(|_| {
                    if s > 0.0 {
                        rng.random_range(-s..=s)
                    } else {
                        0.0
                    }
                })
                .collect(),
        );
    }
    let mut centroids = Matrix::zeros(m, spec.user_dim);
    for c in 0..m {
        for j in 0..spec.user_dim {
            centroids.set(c, j, rng.random_range(0.0..1.0));
        }
    }
    let arm_lookup = arms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.arm_id.clone(), i))
        .collect();
    // |z| <= sqrt(1 + dl·s²) and |Θ* w*_i| <= 1 bound the linear mean
    let squash_bound = (1.0 + spec.dl as f64 * spec.latent_scale * spec.latent_scale).sqrt();
    Environment {
        spec: spec.clone(),
        theta_star,
        effective,
        arms,
        v_star,
        arm_lookup,
        centroids,
        squash_bound,
    }
}

/// One synthetic interaction context.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub cluster: usize,
    pub pool: Vec<Candidate>,
}

impl Environment {
    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn theta_star(&self) -> &Matrix {
        &self.theta_star
    }

    pub fn effective_theta(&self) -> &Matrix {
        &self.effective
    }

    pub fn arms(&self) -> &[Candidate] {
        &self.arms
    }

    pub fn v_star(&self, arm: usize) -> &[f64] {
        &self.v_star[arm]
    }

    pub fn arm_index(&self, arm_id: &str) -> Option<usize> {
        self.arm_lookup.get(arm_id).copied()
    }

    /// Synthetic user features, one row per cluster.
    pub fn centroids(&self) -> &Matrix {
        &self.centroids
    }

    /// Linear mean `(x, v*)ᵀ Θ* w*_i` for an arm given only its features.
    pub fn linear_mean_of(&self, cluster: usize, features: &[f64], v_star: &[f64]) -> f64 {
        let d = self.spec.d;
        let mut mu = 0.0;
        for (r, x) in features.iter().enumerate() {
            mu += x * self.effective.get(r, cluster);
        }
        for (r, v) in v_star.iter().enumerate() {
            mu += v * self.effective.get(d + r, cluster);
        }
        mu
    }

    pub fn linear_mean(&self, cluster: usize, arm: usize) -> f64 {
        self.linear_mean_of(cluster, &self.arms[arm].features, &self.v_star[arm])
    }

    /// Maps a linear mean into `[0, 1]`, affinely so the model stays linear.
    pub fn squash(&self, mu: f64) -> f64 {
        (mu / self.squash_bound + 1.0) / 2.0
    }

    /// Expected reward under the configured reward model.
    pub fn expected_reward(&self, cluster: usize, arm: usize) -> f64 {
        let mu = self.linear_mean(cluster, arm);
        match self.spec.reward_model {
            RewardModel::Bernoulli => self.squash(mu),
            RewardModel::Gaussian => mu,
        }
    }

    fn arm_of(&self, cand: &Candidate) -> usize {
        self.arm_index(&cand.arm_id)
            .unwrap_or_else(|| panic!("arm `{}` is not in this environment", cand.arm_id))
    }

    /// Draws a reward for pulling `chosen` for a user of `cluster`.
    pub fn step(&self, cluster: usize, chosen: &Candidate, rng: &mut impl Rng) -> f64 {
        let arm = self.arm_of(chosen);
        let mu = self.linear_mean_of(cluster, &chosen.features, &self.v_star[arm]);
        match self.spec.reward_model {
            RewardModel::Bernoulli => {
                if rng.random::<f64>() < self.squash(mu) {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::Gaussian => {
                if self.spec.noise_std > 0.0 {
                    mu + Normal::new(0.0, self.spec.noise_std)
                        .expect("finite std")
                        .sample(rng)
                } else {
                    mu
                }
            }
        }
    }

    /// Best expected reward in the pool minus that of `chosen` (an index into `pool`).
    pub fn expected_regret(&self, cluster: usize, chosen: usize, pool: &[Candidate]) -> f64 {
        let means: Vec<f64> = pool
            .iter()
            .map(|c| self.expected_reward(cluster, self.arm_of(c)))
            .collect();
        let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        best - means[chosen]
    }

    /// A uniformly random cluster and a uniformly random pool of `k` distinct arms.
    pub fn sample_context(&self, rng: &mut impl Rng) -> Context {
        let cluster = rng.random_range(0..self.spec.clusters);
        let k = self.spec.k.min(self.arms.len());
        let pool = index::sample(rng, self.arms.len(), k)
            .into_iter()
            .map(|i| self.arms[i].clone())
            .collect();
        Context { cluster, pool }
    }

    /// Exact per-step expected regret of uniform random play over uniformly
    /// drawn clusters and pools.
    pub fn random_regret_slope(&self) -> f64 {
        let n = self.arms.len();
        let k = self.spec.k.min(n);
        let mut total = 0.0;
        for c in 0..self.spec.clusters {
            let mut means: Vec<f64> = (0..n).map(|a| self.expected_reward(c, a)).collect();
            means.sort_by(f64::total_cmp);
            // P(the j-th smallest of n is the max of a random k-subset) = C(j-1, k-1) / C(n, k)
            let mut p = k as f64 / n as f64;
            let mut e_max = 0.0;
            for j in (k..=n).rev() {
                e_max += means[j - 1] * p;
                if j > 1 {
                    p *= (j - k) as f64 / (j - 1) as f64;
                }
            }
            let mean: f64 = means.iter().sum::<f64>() / n as f64;
            total += e_max - mean;
        }
        total / self.spec.clusters as f64
    }

    /// A replay-compatible log with uniform logging: clusters, pools and the
    /// displayed arm are all uniform, clicks are Bernoulli in the squashed mean.
    pub fn gen_log(&self, horizon: usize, seed: u64) -> Vec<EventRecord> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..horizon)
            .map(|t| {
                let ctx = self.sample_context(&mut rng);
                let shown = rng.random_range(0..ctx.pool.len());
                let arm = self.arm_of(&ctx.pool[shown]);
                let p = self.squash(self.linear_mean(ctx.cluster, arm));
                let click = u8::from(rng.random::<f64>() < p);
                EventRecord {
                    timestamp: t as i64,
                    displayed_arm: ctx.pool[shown].arm_id.clone(),
                    click,
                    user_features: self.centroids.row(ctx.cluster).to_vec(),
                    pool: ctx.pool,
                }
            })
            .collect()
    }
}

/// Always pulls the arm with the highest true expected reward.
pub struct OraclePolicy<'a> {
    env: &'a Environment,
}

impl<'a> OraclePolicy<'a> {
    pub fn new(env: &'a Environment) -> Self {
        Self { env }
    }
}

impl BanditPolicy for OraclePolicy<'_> {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        argmax_first(
            candidates
                .iter()
                .map(|c| self.env.expected_reward(cluster, self.env.arm_of(c))),
        )
        .ok_or(PolicyError::EmptyPool)
    }

    fn update(&mut self, _: usize, _: &Candidate, _: f64) -> Result<(), PolicyError> {
        Ok(())
    }
}

/// Non-learning greedy policy: per cluster, the arm maximizing `xᵀ weights[:, cluster]`.
pub struct FixedLinearPolicy {
    weights: Matrix,
}

impl FixedLinearPolicy {
    pub fn new(weights: Matrix) -> Self {
        Self { weights }
    }
}

impl BanditPolicy for FixedLinearPolicy {
    fn name(&self) -> &'static str {
        "fixed"
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        let w = self.weights.column(cluster);
        argmax_first(candidates.iter().map(|c| dot(&w, &c.features))).ok_or(PolicyError::EmptyPool)
    }

    fn update(&mut self, _: usize, _: &Candidate, _: f64) -> Result<(), PolicyError> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegretCurve {
    pub inst_regret: Vec<f64>,
    pub cum_regret: Vec<f64>,
    /// Running sum of realized rewards.
    pub cum_reward: Vec<f64>,
}

impl RegretCurve {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_reward(&self) -> f64 {
        self.cum_reward.last().copied().unwrap_or(0.0)
    }
}

/// Plays `policy` live for `horizon` steps.
///
/// Contexts and reward noise come from two independent streams derived from
/// `seed`, so different policies run with the same seed face the same users,
/// the same pools and the same noise draws.
pub fn simulate<P: BanditPolicy + ?Sized>(
    env: &Environment,
    policy: &mut P,
    horizon: usize,
    seed: u64,
) -> Result<RegretCurve, PolicyError> {
    let mut ctx_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reward_rng = ChaCha8Rng::seed_from_u64(seed);
    reward_rng.set_stream(1);
    let mut curve = RegretCurve {
        inst_regret: Vec::with_capacity(horizon),
        cum_regret: Vec::with_capacity(horizon),
        cum_reward: Vec::with_capacity(horizon),
    };
    let (mut cum_r, mut cum_reward) = (0.0, 0.0);
    for _ in 0..horizon {
        let ctx = env.sample_context(&mut ctx_rng);
        // one uniform per step keeps the noise stream aligned across policies
        let mut step_rng = ChaCha8Rng::seed_from_u64(reward_rng.random());
        let idx = policy.select(ctx.cluster, &ctx.pool)?;
        let chosen = &ctx.pool[idx];
        let reward = env.step(ctx.cluster, chosen, &mut step_rng);
        policy.update(ctx.cluster, chosen, reward)?;
        let r = env.expected_regret(ctx.cluster, idx, &ctx.pool);
        cum_r += r;
        cum_reward += reward;
        curve.inst_regret.push(r);
        curve.cum_regret.push(cum_r);
        curve.cum_reward.push(cum_reward);
    }
    Ok(curve)
}
