//! Offline evaluation by replay over a uniformly logged event stream, plus the
//! bucketed / rolling / cumulative CTR series built from it.
//!
//! A policy is asked to choose from each logged pool. When its choice matches
//! the arm that was actually displayed, the logged click is its reward and the
//! policy learns from it. Otherwise the event is discarded and the policy's
//! learned state is untouched.

use crate::clustering::ClusterModel;
use crate::error::PolicyError;
use crate::policies::{BanditPolicy, Candidate};

pub const DEFAULT_BUCKET: usize = 2000;
pub const DEFAULT_WINDOW: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub timestamp: i64,
    pub displayed_arm: String,
    pub click: u8,
    pub user_features: Vec<f64>,
    pub pool: Vec<Candidate>,
}

impl EventRecord {
    pub fn displayed_index(&self) -> Option<usize> {
        self.pool
            .iter()
            .position(|c| c.arm_id == self.displayed_arm)
    }

    pub fn is_well_formed(&self) -> bool {
        self.click <= 1 && self.displayed_index().is_some()
    }
}

/// Runs one select step on `event` and, when the choice matches the logged arm,
/// the matching update. Returns the chosen arm id and whether it matched.
pub fn policy_select_update<P: BanditPolicy + ?Sized>(
    policy: &mut P,
    cluster: usize,
    event: &EventRecord,
) -> Result<(String, bool), PolicyError> {
    let idx = policy.select(cluster, &event.pool)?;
    let chosen = &event.pool[idx];
    if chosen.arm_id == event.displayed_arm {
        policy.update(cluster, chosen, f64::from(event.click))?;
        Ok((chosen.arm_id.clone(), true))
    } else {
        Ok((chosen.arm_id.clone(), false))
    }
}

/// What advances a CTR bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BucketBy {
    /// Every `bucket_size` matched (evaluated) events.
    #[default]
    Matched,
    /// Every `bucket_size` well-formed logged events, matched or not.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub bucket_size: usize,
    pub window: usize,
    /// `(matched_count, click_sum)` per bucket; the last one may be partial.
    pub buckets: Vec<(u64, u64)>,
}

impl MetricsSeries {
    pub fn new(bucket_size: usize, window: usize) -> Self {
        Self {
            bucket_size,
            window,
            buckets: Vec::new(),
        }
    }

    pub fn bucket_ctr(&self) -> Vec<f64> {
        self.buckets
            .iter()
            .map(|&(m, c)| if m == 0 { 0.0 } else { c as f64 / m as f64 })
            .collect()
    }

    pub fn rolling_ctr(&self) -> Vec<f64> {
        rolling_average(&self.bucket_ctr(), self.window)
    }

    pub fn cumulative_ctr(&self) -> Vec<f64> {
        let (mut m, mut c) = (0u64, 0u64);
        self.buckets
            .iter()
            .map(|&(bm, bc)| {
                m += bm;
                c += bc;
                if m == 0 {
                    0.0
                } else {
                    c as f64 / m as f64
                }
            })
            .collect()
    }

    pub fn total_matched(&self) -> u64 {
        self.buckets.iter().map(|b| b.0).sum()
    }

    pub fn total_clicks(&self) -> u64 {
        self.buckets.iter().map(|b| b.1).sum()
    }

    /// Overall CTR over every matched event; `None` before the first match.
    pub fn overall_ctr(&self) -> Option<f64> {
        let m = self.total_matched();
        (m > 0).then(|| self.total_clicks() as f64 / m as f64)
    }
}

/// Trailing mean; the first `window − 1` outputs average whatever is available.
pub fn rolling_average(series: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    (0..series.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let slice = &series[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

/// Elementwise ratio of two series; `None` where the denominator is zero.
pub fn ratio_series(num: &[f64], den: &[f64]) -> Vec<Option<f64>> {
    num.iter()
        .zip(den)
        .map(|(n, d)| if *d == 0.0 { None } else { Some(n / d) })
        .collect()
}

/// Cumulative CTR of `policy` relative to `random`, bucket by bucket.
pub fn normalize_by_random(policy: &MetricsSeries, random: &MetricsSeries) -> Vec<Option<f64>> {
    ratio_series(&policy.cumulative_ctr(), &random.cumulative_ctr())
}

/// Rolling CTR of `policy` relative to `random`, for plotting.
pub fn normalize_rolling_by_random(
    policy: &MetricsSeries,
    random: &MetricsSeries,
) -> Vec<Option<f64>> {
    ratio_series(&policy.rolling_ctr(), &random.rolling_ctr())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplayOptions {
    pub bucket_size: usize,
    pub window: usize,
    pub bucket_by: BucketBy,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        Self {
            bucket_size: DEFAULT_BUCKET,
            window: DEFAULT_WINDOW,
            bucket_by: BucketBy::Matched,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub series: MetricsSeries,
    pub events: u64,
    pub matched: u64,
    /// Events skipped because the displayed arm was missing from the pool
    /// or the click was not 0/1.
    pub malformed: u64,
}

/// Incremental replay evaluator; feed events one at a time.
pub struct Replayer<'a, P: BanditPolicy + ?Sized> {
    policy: &'a mut P,
    clusters: &'a ClusterModel,
    opts: ReplayOptions,
    series: MetricsSeries,
    in_bucket: usize,
    events: u64,
    matched: u64,
    malformed: u64,
}

impl<'a, P: BanditPolicy + ?Sized> Replayer<'a, P> {
    pub fn new(policy: &'a mut P, clusters: &'a ClusterModel, opts: ReplayOptions) -> Self {
        Self {
            policy,
            clusters,
            opts,
            series: MetricsSeries::new(opts.bucket_size.max(1), opts.window.max(1)),
            in_bucket: 0,
            events: 0,
            matched: 0,
            malformed: 0,
        }
    }

    pub fn events_seen(&self) -> u64 {
        self.events
    }

    pub fn push(&mut self, event: &EventRecord) -> Result<bool, PolicyError> {
        self.events += 1;
        if !event.is_well_formed() {
            self.malformed += 1;
            return Ok(false);
        }
        let cluster = self.clusters.assign(&event.user_features);
        let (_, matched) = policy_select_update(self.policy, cluster, event)?;
        let counts = match self.opts.bucket_by {
            BucketBy::Matched => matched,
            BucketBy::Raw => true,
        };
        if counts {
            if self.in_bucket == 0 {
                self.series.buckets.push((0, 0));
            }
            if matched {
                self.matched += 1;
                let last = self.series.buckets.last_mut().expect("bucket opened above");
                last.0 += 1;
                last.1 += u64::from(event.click);
            }
            self.in_bucket += 1;
            if self.in_bucket == self.series.bucket_size {
                self.in_bucket = 0;
            }
        }
        Ok(matched)
    }

    pub fn finish(self) -> ReplayOutcome {
        ReplayOutcome {
            series: self.series,
            events: self.events,
            matched: self.matched,
            malformed: self.malformed,
        }
    }
}

/// Replays a whole event stream through `policy`.
pub fn replay<'e, P, I>(
    policy: &mut P,
    clusters: &ClusterModel,
    events: I,
    opts: ReplayOptions,
) -> Result<ReplayOutcome, PolicyError>
where
    P: BanditPolicy + ?Sized,
    I: IntoIterator<Item = &'e EventRecord>,
{
    let mut r = Replayer::new(policy, clusters, opts);
    for e in events {
        r.push(e)?;
    }
    Ok(r.finish())
}
