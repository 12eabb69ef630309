//! Decision policies: uniform random, per-arm LinUCB, per-cluster M-LinUCB,
//! CoLin and FactorUCB.
//!
//! Every policy follows the same select-then-update loop. `select` never
//! mutates learned parameters (arms seen for the first time are scored with
//! their initial values), so a policy that is asked to choose but never told
//! the outcome is left exactly as it was. Only [`RandomPolicy`] advances state
//! on `select`, namely its RNG.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::PolicyError;
use crate::linalg::{dot, kron_vec, reshape_mat, InverseState, Matrix};
use crate::similarity::SimilarityMatrix;

/// Default exploration radii for FactorUCB.
pub const DEFAULT_ALPHA1: f64 = 0.375;
pub const DEFAULT_ALPHA2: f64 = 0.375;

/// An arm on offer, with its observed context.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub arm_id: String,
    pub features: Vec<f64>,
}

impl Candidate {
    pub fn new(arm_id: impl Into<String>, features: Vec<f64>) -> Self {
        Self {
            arm_id: arm_id.into(),
            features,
        }
    }
}

/// The select-then-update contract shared by all policies.
pub trait BanditPolicy {
    fn name(&self) -> &'static str;

    /// Index into `candidates` of the arm to pull for a user of `cluster`.
    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError>;

    /// Feeds back the reward observed for `chosen`.
    fn update(
        &mut self,
        cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError>;
}

/// First index attaining the maximum score.
pub fn argmax_first(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ if s.is_nan() => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Random,
    LinUcb,
    MLinUcb,
    CoLin,
    FactorUcb,
}

impl Algo {
    pub const ALL: [Algo; 5] = [
        Algo::Random,
        Algo::LinUcb,
        Algo::MLinUcb,
        Algo::CoLin,
        Algo::FactorUcb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::Random => "random",
            Algo::LinUcb => "linucb",
            Algo::MLinUcb => "mlinucb",
            Algo::CoLin => "colin",
            Algo::FactorUcb => "factorucb",
        }
    }

    pub fn needs_similarity(self) -> bool {
        matches!(self, Algo::CoLin | Algo::FactorUcb)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| PolicyError::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Hyperparameters for every policy; each algorithm reads the fields it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub alpha: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub num_clusters: usize,
    pub feature_dim: usize,
    pub latent_dim: usize,
    /// Required by CoLin and FactorUCB.
    pub w: Option<SimilarityMatrix>,
    pub seed: u64,
    /// Half-width of the uniform draw for a new arm's initial latent vector.
    /// Zero starts every latent vector at the origin.
    pub latent_init_scale: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            alpha1: DEFAULT_ALPHA1,
            alpha2: DEFAULT_ALPHA2,
            num_clusters: 1,
            feature_dim: 1,
            latent_dim: 0,
            w: None,
            seed: 0,
            latent_init_scale: DEFAULT_LATENT_INIT_SCALE,
        }
    }
}

pub const DEFAULT_LATENT_INIT_SCALE: f64 = 0.1;

impl PolicyConfig {
    fn check(&self, algo: Algo) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::Config(m.to_string()));
        if algo != Algo::Random && self.feature_dim == 0 {
            return bad("feature_dim must be positive");
        }
        if self.num_clusters == 0 {
            return bad("num_clusters must be positive");
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(PolicyError::Config(format!(
                    "{name} must be a nonnegative finite number"
                )));
            }
        }
        if algo.needs_similarity() {
            match &self.w {
                None => {
                    return Err(PolicyError::Config(format!(
                        "{algo} needs a similarity matrix"
                    )))
                }
                Some(w) if w.m() != self.num_clusters => {
                    return Err(PolicyError::Config(format!(
                        "similarity matrix is {0}x{0} but num_clusters = {1}",
                        w.m(),
                        self.num_clusters
                    )))
                }
                _ => {}
            }
        }
        if !(self.latent_init_scale >= 0.0 && self.latent_init_scale.is_finite()) {
            return bad("latent_init_scale must be a nonnegative finite number");
        }
        Ok(())
    }
}

fn check_cluster(cluster: usize, clusters: usize) -> Result<(), PolicyError> {
    if cluster >= clusters {
        return Err(PolicyError::ClusterOutOfRange {
            index: cluster,
            clusters,
        });
    }
    Ok(())
}

fn check_features(x: &[f64], d: usize) -> Result<(), PolicyError> {
    if x.len() != d {
        return Err(PolicyError::FeatureDim {
            expected: d,
            found: x.len(),
        });
    }
    Ok(())
}

fn ucb_radius(alpha: f64, quad: f64) -> f64 {
    // rounding can push a true zero slightly negative
    alpha * quad.max(0.0).sqrt()
}

/// Ridge-regression block: `A⁻¹` and `b`, with `A = I` and `b = 0` at the start.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeBlock {
    pub inv: InverseState,
    pub b: Vec<f64>,
}

impl RidgeBlock {
    pub fn new(d: usize) -> Self {
        Self {
            inv: InverseState::identity(d),
            b: vec![0.0; d],
        }
    }

    pub fn theta(&self) -> Vec<f64> {
        self.inv.apply(&self.b)
    }

    pub fn score(&self, alpha: f64, x: &[f64]) -> f64 {
        dot(&self.theta(), x) + ucb_radius(alpha, self.inv.quad_form(x))
    }

    pub fn update(&mut self, x: &[f64], reward: f64) -> Result<(), PolicyError> {
        self.inv.rank_one_update(x)?;
        for (b, xi) in self.b.iter_mut().zip(x) {
            *b += reward * xi;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub(crate) fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }

    pub(crate) fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }
}

impl BanditPolicy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&mut self, _cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        if candidates.is_empty() {
            return Err(PolicyError::EmptyPool);
        }
        Ok(self.rng.random_range(0..candidates.len()))
    }

    fn update(
        &mut self,
        _cluster: usize,
        _chosen: &Candidate,
        _reward: f64,
    ) -> Result<(), PolicyError> {
        Ok(())
    }
}

// ---------------------------------------------------------------------------

/// Disjoint LinUCB: one ridge model per arm, users ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct LinUcb {
    pub(crate) alpha: f64,
    pub(crate) d: usize,
    pub(crate) arms: BTreeMap<String, RidgeBlock>,
}

impl LinUcb {
    pub fn new(alpha: f64, d: usize) -> Self {
        Self {
            alpha,
            d,
            arms: BTreeMap::new(),
        }
    }

    pub fn score(&self, cand: &Candidate) -> f64 {
        match self.arms.get(&cand.arm_id) {
            Some(block) => block.score(self.alpha, &cand.features),
            None => RidgeBlock::new(self.d).score(self.alpha, &cand.features),
        }
    }

    pub fn arm(&self, arm_id: &str) -> Option<&RidgeBlock> {
        self.arms.get(arm_id)
    }
}

impl BanditPolicy for LinUcb {
    fn name(&self) -> &'static str {
        "linucb"
    }

    fn select(&mut self, _cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        for c in candidates {
            check_features(&c.features, self.d)?;
        }
        argmax_first(candidates.iter().map(|c| self.score(c))).ok_or(PolicyError::EmptyPool)
    }

    fn update(
        &mut self,
        _cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_features(&chosen.features, self.d)?;
        let d = self.d;
        self.arms
            .entry(chosen.arm_id.clone())
            .or_insert_with(|| RidgeBlock::new(d))
            .update(&chosen.features, reward)
    }
}

// ---------------------------------------------------------------------------

/// One independent LinUCB model per user cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct MLinUcb {
    pub(crate) alpha: f64,
    pub(crate) d: usize,
    pub(crate) blocks: Vec<RidgeBlock>,
}

impl MLinUcb {
    pub fn new(alpha: f64, d: usize, clusters: usize) -> Self {
        Self {
            alpha,
            d,
            blocks: vec![RidgeBlock::new(d); clusters],
        }
    }

    pub fn clusters(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, cluster: usize) -> &RidgeBlock {
        &self.blocks[cluster]
    }

    /// `θ̂` of one cluster.
    pub fn theta(&self, cluster: usize) -> Vec<f64> {
        self.blocks[cluster].theta()
    }

    pub fn scores(
        &self,
        cluster: usize,
        candidates: &[Candidate],
    ) -> Result<Vec<f64>, PolicyError> {
        check_cluster(cluster, self.clusters())?;
        let block = &self.blocks[cluster];
        let theta = block.theta();
        candidates
            .iter()
            .map(|c| {
                check_features(&c.features, self.d)?;
                Ok(dot(&theta, &c.features)
                    + ucb_radius(self.alpha, block.inv.quad_form(&c.features)))
            })
            .collect()
    }
}

impl BanditPolicy for MLinUcb {
    fn name(&self) -> &'static str {
        "mlinucb"
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        argmax_first(self.scores(cluster, candidates)?).ok_or(PolicyError::EmptyPool)
    }

    fn update(
        &mut self,
        cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_cluster(cluster, self.clusters())?;
        check_features(&chosen.features, self.d)?;
        self.blocks[cluster].update(&chosen.features, reward)
    }
}

// ---------------------------------------------------------------------------

/// Collaborative LinUCB over all clusters jointly through the similarity matrix.
///
/// The joint design matrix lives in `ℝ^{dM×dM}`. Observing context `x` for a
/// user of cluster `i` adds `u uᵀ` with `u = w_i ⊗ x`, where `w_i` is column `i`
/// of W. The exploration width for a candidate is `√(uᵀ A⁻¹ u)` with the same
/// `u`, which equals the `(W ⊗ I)`-transformed covariance form without ever
/// materializing that product.
#[derive(Debug, Clone, PartialEq)]
pub struct CoLin {
    pub(crate) alpha: f64,
    pub(crate) d: usize,
    pub(crate) w: SimilarityMatrix,
    pub(crate) a_inv: InverseState,
    pub(crate) b: Vec<f64>,
    /// `d × M`, column `j` is cluster `j`'s own parameter.
    pub(crate) theta: Matrix,
}

impl CoLin {
    pub fn new(alpha: f64, d: usize, w: SimilarityMatrix) -> Self {
        let m = w.m();
        Self {
            alpha,
            d,
            w,
            a_inv: InverseState::identity(d * m),
            b: vec![0.0; d * m],
            theta: Matrix::zeros(d, m),
        }
    }

    pub fn clusters(&self) -> usize {
        self.w.m()
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn a_inv(&self) -> &InverseState {
        &self.a_inv
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        &self.w
    }

    /// Collaborative parameter of cluster `i`: `Θ̂ · w_i`.
    pub fn effective_theta(&self, cluster: usize) -> Vec<f64> {
        self.theta.mul_vec(&self.w.column(cluster))
    }

    pub fn scores(
        &self,
        cluster: usize,
        candidates: &[Candidate],
    ) -> Result<Vec<f64>, PolicyError> {
        check_cluster(cluster, self.clusters())?;
        let w_i = self.w.column(cluster);
        let shared = self.theta.mul_vec(&w_i);
        candidates
            .iter()
            .map(|c| {
                check_features(&c.features, self.d)?;
                let u = kron_vec(&w_i, &c.features);
                Ok(dot(&shared, &c.features) + ucb_radius(self.alpha, self.a_inv.quad_form(&u)))
            })
            .collect()
    }
}

impl BanditPolicy for CoLin {
    fn name(&self) -> &'static str {
        "colin"
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        argmax_first(self.scores(cluster, candidates)?).ok_or(PolicyError::EmptyPool)
    }

    fn update(
        &mut self,
        cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_cluster(cluster, self.clusters())?;
        check_features(&chosen.features, self.d)?;
        let u = kron_vec(&self.w.column(cluster), &chosen.features);
        self.a_inv.rank_one_update(&u)?;
        for (b, ui) in self.b.iter_mut().zip(&u) {
            *b += reward * ui;
        }
        self.theta = reshape_mat(&self.a_inv.apply(&self.b), self.d, self.clusters())?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------

/// Per-arm latent-factor state of FactorUCB.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentArm {
    pub e_inv: InverseState,
    pub d_vec: Vec<f64>,
    pub v_hat: Vec<f64>,
}

/// CoLin with every arm's context extended by a learned latent vector `v̂_a`.
///
/// The joint parameter is `(d + d_l) × M`; its top `d` rows act on the observed
/// context and its bottom `d_l` rows on the latent part. The latent vectors are
/// fitted by a second per-arm ridge regression on the residual left by the
/// observed-context part.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorUcb {
    pub(crate) alpha1: f64,
    pub(crate) alpha2: f64,
    pub(crate) d: usize,
    pub(crate) dl: usize,
    pub(crate) w: SimilarityMatrix,
    pub(crate) a_inv: InverseState,
    pub(crate) b: Vec<f64>,
    pub(crate) theta: Matrix,
    pub(crate) arms: BTreeMap<String, LatentArm>,
    pub(crate) seed: u64,
    pub(crate) latent_init_scale: f64,
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl FactorUcb {
    pub fn new(alpha1: f64, alpha2: f64, d: usize, dl: usize, w: SimilarityMatrix) -> Self {
        let m = w.m();
        let p = d + dl;
        Self {
            alpha1,
            alpha2,
            d,
            dl,
            w,
            a_inv: InverseState::identity(p * m),
            b: vec![0.0; p * m],
            theta: Matrix::zeros(p, m),
            arms: BTreeMap::new(),
            seed: 0,
            latent_init_scale: 0.0,
        }
    }

    /// New arms draw their starting latent vector uniformly from
    /// `[-scale, scale]^{d_l}`, keyed on `(seed, arm_id)`.
    pub fn with_latent_init(mut self, seed: u64, scale: f64) -> Self {
        self.seed = seed;
        self.latent_init_scale = scale;
        self
    }

    pub fn clusters(&self) -> usize {
        self.w.m()
    }

    pub fn latent_dim(&self) -> usize {
        self.dl
    }

    pub fn theta(&self) -> &Matrix {
        &self.theta
    }

    pub fn a_inv(&self) -> &InverseState {
        &self.a_inv
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn arm(&self, arm_id: &str) -> Option<&LatentArm> {
        self.arms.get(arm_id)
    }

    /// State a never-updated arm starts from. `v̂ = E⁻¹ d` holds from the start.
    pub fn fresh_arm(&self, arm_id: &str) -> LatentArm {
        let v_hat: Vec<f64> = if self.latent_init_scale > 0.0 && self.dl > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(arm_id));
            let s = self.latent_init_scale;
            (0..self.dl).map(|_| rng.random_range(-s..=s)).collect()
        } else {
            vec![0.0; self.dl]
        };
        LatentArm {
            e_inv: InverseState::identity(self.dl),
            d_vec: v_hat.clone(),
            v_hat,
        }
    }

    fn with_arm<T>(&self, arm_id: &str, f: impl FnOnce(&LatentArm) -> T) -> T {
        match self.arms.get(arm_id) {
            Some(a) => f(a),
            None => f(&self.fresh_arm(arm_id)),
        }
    }

    fn augmented(&self, x: &[f64], v_hat: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.d + self.dl);
        z.extend_from_slice(x);
        z.extend_from_slice(v_hat);
        z
    }

    pub fn scores(
        &self,
        cluster: usize,
        candidates: &[Candidate],
    ) -> Result<Vec<f64>, PolicyError> {
        check_cluster(cluster, self.clusters())?;
        let w_i = self.w.column(cluster);
        let shared = self.theta.mul_vec(&w_i);
        let g = &shared[self.d..];
        candidates
            .iter()
            .map(|c| {
                check_features(&c.features, self.d)?;
                Ok(self.with_arm(&c.arm_id, |arm| {
                    let z = self.augmented(&c.features, &arm.v_hat);
                    let u = kron_vec(&w_i, &z);
                    dot(&shared, &z)
                        + ucb_radius(self.alpha1, self.a_inv.quad_form(&u))
                        + ucb_radius(self.alpha2, arm.e_inv.quad_form(g))
                }))
            })
            .collect()
    }
}

impl BanditPolicy for FactorUcb {
    fn name(&self) -> &'static str {
        "factorucb"
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        argmax_first(self.scores(cluster, candidates)?).ok_or(PolicyError::EmptyPool)
    }

    fn update(
        &mut self,
        cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError> {
        check_cluster(cluster, self.clusters())?;
        check_features(&chosen.features, self.d)?;
        let x = &chosen.features;
        let w_i = self.w.column(cluster);

        // latent step reads the parameter as it stood before this observation
        let shared_before = self.theta.mul_vec(&w_i);
        let (theta_x, g) = shared_before.split_at(self.d);
        let residual = reward - dot(x, theta_x);

        let mut arm = match self.arms.remove(&chosen.arm_id) {
            Some(a) => a,
            None => self.fresh_arm(&chosen.arm_id),
        };

        let u = kron_vec(&w_i, &self.augmented(x, &arm.v_hat));
        if let Err(e) = self.a_inv.rank_one_update(&u) {
            self.arms.insert(chosen.arm_id.clone(), arm);
            return Err(e.into());
        }
        for (b, ui) in self.b.iter_mut().zip(&u) {
            *b += reward * ui;
        }
        self.theta = reshape_mat(
            &self.a_inv.apply(&self.b),
            self.d + self.dl,
            self.clusters(),
        )?;

        let latent = arm.e_inv.rank_one_update(g);
        if latent.is_ok() {
            for (dv, gi) in arm.d_vec.iter_mut().zip(g) {
                *dv += gi * residual;
            }
            arm.v_hat = arm.e_inv.apply(&arm.d_vec);
        }
        self.arms.insert(chosen.arm_id.clone(), arm);
        latent.map_err(Into::into)
    }
}

// ---------------------------------------------------------------------------

/// Any of the five policies, built from a shared [`PolicyConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Random(RandomPolicy),
    LinUcb(LinUcb),
    MLinUcb(MLinUcb),
    CoLin(CoLin),
    FactorUcb(FactorUcb),
}

impl Policy {
    pub fn new(algo: Algo, cfg: &PolicyConfig) -> Result<Self, PolicyError> {
        cfg.check(algo)?;
        let w = || cfg.w.clone().expect("checked above");
        Ok(match algo {
            Algo::Random => Policy::Random(RandomPolicy::new(cfg.seed)),
            Algo::LinUcb => Policy::LinUcb(LinUcb::new(cfg.alpha, cfg.feature_dim)),
            Algo::MLinUcb => {
                Policy::MLinUcb(MLinUcb::new(cfg.alpha, cfg.feature_dim, cfg.num_clusters))
            }
            Algo::CoLin => Policy::CoLin(CoLin::new(cfg.alpha, cfg.feature_dim, w())),
            Algo::FactorUcb => Policy::FactorUcb(
                FactorUcb::new(cfg.alpha1, cfg.alpha2, cfg.feature_dim, cfg.latent_dim, w())
                    .with_latent_init(cfg.seed, cfg.latent_init_scale),
            ),
        })
    }

    pub fn algo(&self) -> Algo {
        match self {
            Policy::Random(_) => Algo::Random,
            Policy::LinUcb(_) => Algo::LinUcb,
            Policy::MLinUcb(_) => Algo::MLinUcb,
            Policy::CoLin(_) => Algo::CoLin,
            Policy::FactorUcb(_) => Algo::FactorUcb,
        }
    }

    fn inner(&mut self) -> &mut dyn BanditPolicy {
        match self {
            Policy::Random(p) => p,
            Policy::LinUcb(p) => p,
            Policy::MLinUcb(p) => p,
            Policy::CoLin(p) => p,
            Policy::FactorUcb(p) => p,
        }
    }
}

impl BanditPolicy for Policy {
    fn name(&self) -> &'static str {
        self.algo().as_str()
    }

    fn select(&mut self, cluster: usize, candidates: &[Candidate]) -> Result<usize, PolicyError> {
        self.inner().select(cluster, candidates)
    }

    fn update(
        &mut self,
        cluster: usize,
        chosen: &Candidate,
        reward: f64,
    ) -> Result<(), PolicyError> {
        self.inner().update(cluster, chosen, reward)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cands(xs: &[&[f64]]) -> Vec<Candidate> {
        xs.iter()
            .enumerate()
            .map(|(i, x)| Candidate::new(format!("a{i}"), x.to_vec()))
            .collect()
    }

    fn w_cols(cols: &[&[f64]]) -> SimilarityMatrix {
        let m = cols.len();
        let mut raw = Matrix::zeros(m, m);
        for (c, col) in cols.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                raw.set(r, c, *v);
            }
        }
        SimilarityMatrix::from_matrix(raw, 100.0).unwrap()
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax_first([0.0, 0.0]), Some(0));
        assert_eq!(argmax_first(Vec::<f64>::new()), None);
    }

    #[test]
    fn algo_names_round_trip() {
        for a in Algo::ALL {
            assert_eq!(a.as_str().parse::<Algo>().unwrap(), a);
        }
        assert!("thompson".parse::<Algo>().is_err());
    }

    #[test]
    fn random_pool_edge_cases() {
        let mut p = RandomPolicy::new(5);
        assert_eq!(p.select(0, &cands(&[&[1.0]])).unwrap(), 0);
        assert_eq!(p.select(0, &[]).unwrap_err(), PolicyError::EmptyPool);
        let pool = cands(&[&[1.0], &[2.0], &[3.0]]);
        let mut p = RandomPolicy::new(5);
        let a: Vec<usize> = (0..50).map(|_| p.select(0, &pool).unwrap()).collect();
        let mut q = RandomPolicy::new(5);
        let b: Vec<usize> = (0..50).map(|_| q.select(0, &pool).unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn linucb_scores() {
        let fresh = Candidate::new("new", vec![3.0, 4.0]);
        assert_eq!(LinUcb::new(0.0, 2).score(&fresh), 0.0);
        assert_eq!(LinUcb::new(1.0, 2).score(&fresh), 5.0);

        let mut p = LinUcb::new(0.0, 2);
        let x = Candidate::new("a", vec![1.0, 0.0]);
        p.update(0, &x, 1.0).unwrap();
        assert_eq!(p.arm("a").unwrap().theta(), vec![0.5, 0.0]);
        assert_eq!(p.score(&x), 0.5);
    }

    #[test]
    fn linucb_select_leaves_state_alone() {
        let mut p = LinUcb::new(1.0, 2);
        let pool = cands(&[&[1.0, 0.0], &[0.0, 2.0]]);
        assert_eq!(p.select(0, &pool).unwrap(), 1);
        assert!(p.arms.is_empty());
    }

    #[test]
    fn mlinucb_fresh_selection() {
        let mut p = MLinUcb::new(0.0, 2, 3);
        let pool = cands(&[&[0.1, 0.0], &[5.0, 5.0]]);
        assert_eq!(p.select(2, &pool).unwrap(), 0);
        let mut p = MLinUcb::new(0.7, 2, 3);
        let pool = cands(&[&[0.1, 0.0], &[3.0, 4.0], &[0.0, 4.9]]);
        assert_eq!(p.select(1, &pool).unwrap(), 1);
        assert_eq!(p.select(0, &[]).unwrap_err(), PolicyError::EmptyPool);
        assert!(matches!(
            p.select(3, &pool),
            Err(PolicyError::ClusterOutOfRange {
                index: 3,
                clusters: 3
            })
        ));
    }

    #[test]
    fn mlinucb_learns_within_cluster_only() {
        let mut p = MLinUcb::new(0.0, 2, 2);
        let good = Candidate::new("g", vec![1.0, 0.0]);
        for _ in 0..10 {
            p.update(0, &good, 1.0).unwrap();
        }
        let pool = cands(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert_eq!(p.select(0, &pool).unwrap(), 1);
        // cluster 1 saw nothing: all-zero scores, first wins
        assert_eq!(p.select(1, &pool).unwrap(), 0);
        assert_eq!(p.block(1), &RidgeBlock::new(2));
    }

    #[test]
    fn zero_reward_shrinks_width_only() {
        let mut p = MLinUcb::new(1.0, 2, 1);
        let x = Candidate::new("a", vec![0.6, 0.8]);
        p.update(0, &x, 0.0).unwrap();
        assert_eq!(p.block(0).b, vec![0.0, 0.0]);
        assert!(p.block(0).inv.quad_form(&x.features) < 1.0);
    }

    #[test]
    fn colin_fresh_score_is_scaled_norm() {
        let w = w_cols(&[&[0.6, 0.4], &[0.25, 0.75]]);
        let p = CoLin::new(2.0, 2, w);
        let s = p.scores(1, &cands(&[&[3.0, 4.0]])).unwrap()[0];
        let w_norm = (0.25f64 * 0.25 + 0.75 * 0.75).sqrt();
        assert!((s - 2.0 * w_norm * 5.0).abs() < 1e-12);
    }

    #[test]
    fn colin_single_step_hand_values() {
        // d = 1, M = 2, w_0 = (0.6, 0.4), x = 1, r = 1
        let w = w_cols(&[&[0.6, 0.4], &[0.4, 0.6]]);
        let mut p = CoLin::new(0.0, 1, w);
        p.update(0, &Candidate::new("a", vec![1.0]), 1.0).unwrap();
        // (I + uuᵀ)⁻¹ u = u / (1 + |u|²)
        let denom = 1.0 + 0.36 + 0.16;
        assert!((p.theta().get(0, 0) - 0.6 / denom).abs() < 1e-15);
        assert!((p.theta().get(0, 1) - 0.4 / denom).abs() < 1e-15);
        assert!((p.theta().get(0, 0) - 0.3947).abs() < 1e-4);
        assert!((p.theta().get(0, 1) - 0.2632).abs() < 1e-4);
    }

    #[test]
    fn colin_propagates_to_other_clusters() {
        let w = w_cols(&[&[0.5, 0.5], &[0.5, 0.5]]);
        let mut p = CoLin::new(0.0, 1, w);
        p.update(0, &Candidate::new("a", vec![1.0]), 1.0).unwrap();
        assert!(p.effective_theta(1)[0] > 0.0);
    }

    #[test]
    fn colin_zero_reward_keeps_b() {
        let mut p = CoLin::new(1.0, 2, SimilarityMatrix::identity(2));
        p.update(1, &Candidate::new("a", vec![0.3, 0.1]), 0.0)
            .unwrap();
        assert!(p.b().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn factorucb_fresh_score_and_zero_cascade() {
        let w = w_cols(&[&[0.6, 0.4], &[0.4, 0.6]]);
        let mut p = FactorUcb::new(0.8, 0.375, 2, 2, w);
        let s = p.scores(0, &cands(&[&[3.0, 4.0]])).unwrap()[0];
        let w_norm = (0.36f64 + 0.16).sqrt();
        assert!((s - 0.8 * w_norm * 5.0).abs() < 1e-12);

        let x = Candidate::new("a", vec![0.3, -0.2]);
        p.update(1, &x, 0.0).unwrap();
        assert!(p.b().iter().all(|v| *v == 0.0));
        assert!(p.theta().as_slice().iter().all(|v| *v == 0.0));
        let arm = p.arm("a").unwrap();
        assert_eq!(arm.e_inv, InverseState::identity(2));
        assert_eq!(arm.d_vec, vec![0.0, 0.0]);
        assert_eq!(arm.v_hat, vec![0.0, 0.0]);
    }

    #[test]
    fn factorucb_latent_init_is_keyed_by_arm() {
        let f =
            FactorUcb::new(0.3, 0.3, 2, 3, SimilarityMatrix::identity(1)).with_latent_init(9, 0.2);
        let a = f.fresh_arm("x");
        assert_eq!(a, f.fresh_arm("x"));
        assert_ne!(a.v_hat, f.fresh_arm("y").v_hat);
        assert!(a.v_hat.iter().all(|v| v.abs() <= 0.2));
        assert_eq!(a.d_vec, a.v_hat);
    }

    #[test]
    fn config_validation() {
        let cfg = PolicyConfig {
            feature_dim: 2,
            num_clusters: 3,
            ..Default::default()
        };
        assert!(matches!(
            Policy::new(Algo::CoLin, &cfg),
            Err(PolicyError::Config(_))
        ));
        let cfg2 = PolicyConfig {
            w: Some(SimilarityMatrix::identity(2)),
            ..cfg.clone()
        };
        assert!(Policy::new(Algo::FactorUcb, &cfg2).is_err());
        let cfg3 = PolicyConfig {
            alpha: -1.0,
            ..cfg.clone()
        };
        assert!(Policy::new(Algo::MLinUcb, &cfg3).is_err());
        assert_eq!(
            Policy::new(Algo::MLinUcb, &cfg).unwrap().algo(),
            Algo::MLinUcb
        );
    }

    #[test]
    fn feature_dim_is_checked() {
        let mut p = MLinUcb::new(1.0, 2, 1);
        assert!(matches!(
            p.select(0, &cands(&[&[1.0]])),
            Err(PolicyError::FeatureDim {
                expected: 2,
                found: 1
            })
        ));
    }
}
