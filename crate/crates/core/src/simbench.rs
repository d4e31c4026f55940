//! Synthetic instances and replicated benchmark runs.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::{sample_gwishart, sample_mvn, DataMatrix, GWishartParams, PrecisionMatrix};
use crate::graph::{all_pairs, pair_count, Edge, Graph};
use crate::inference::{edge_inclusion, EdgeInclusionMatrix};
use crate::metrics::{auc, cost_from_auc_series, mamse, mse, CostMetricConfig, MamseConfig};
use crate::priors::{GraphPrior, SpikeSlabParams};
use crate::samplers::{
    default_iterations, run_bd, run_plbd, run_plrj, run_rj, run_ss, BdOptions, MplHyper, RjOptions, SamplerConfig,
    SamplerKind, SamplerTrace, SnapshotSchedule,
};

/// Degrees of freedom and scale identity of the true precision prior.
pub const TRUE_PRECISION_B: f64 = 3.0;
const TRUE_PRECISION_SWEEPS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphType {
    Random,
    Cluster,
    ScaleFree,
}

impl GraphType {
    pub const ALL: [GraphType; 3] = [Self::Random, Self::Cluster, Self::ScaleFree];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Cluster => "cluster",
            Self::ScaleFree => "scale-free",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s.trim())
    }
}

impl std::fmt::Display for GraphType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_prob(edge_prob: f64) -> Result<()> {
    if !(edge_prob > 0.0 && edge_prob < 1.0) {
        return Err(Error::InvalidParameter(format!("edge probability {edge_prob} must lie in (0, 1)")));
    }
    Ok(())
}

/// Every pair independently with probability `edge_prob`.
pub fn gen_random_graph<R: Rng + ?Sized>(p: usize, edge_prob: f64, rng: &mut R) -> Result<Graph> {
    check_prob(edge_prob)?;
    let mut g = Graph::new(p);
    for e in all_pairs(p) {
        if rng.random::<f64>() < edge_prob {
            g.insert(e);
        }
    }
    Ok(g)
}

pub fn cluster_count(p: usize) -> usize {
    (p / 20).max(2)
}

/// Contiguous blocks whose sizes differ by at most one.
pub fn cluster_blocks(p: usize) -> Vec<std::ops::Range<usize>> {
    let c = cluster_count(p);
    let (base, extra) = (p / c, p % c);
    let mut start = 0;
    (0..c)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Random graphs inside `max(2, ⌊p/20⌋)` contiguous blocks, nothing between.
pub fn gen_cluster_graph<R: Rng + ?Sized>(p: usize, edge_prob: f64, rng: &mut R) -> Result<Graph> {
    check_prob(edge_prob)?;
    if p < 4 {
        return Err(Error::InvalidParameter("cluster graphs need p >= 4".into()));
    }
    let mut g = Graph::new(p);
    for block in cluster_blocks(p) {
        for i in block.clone() {
            for j in (i + 1)..block.end {
                if rng.random::<f64>() < edge_prob {
                    g.insert(Edge::new(i, j)?);
                }
            }
        }
    }
    Ok(g)
}

/// Preferential-attachment tree: nodes 0-1 joined, then each new node links
/// to one existing node chosen with probability proportional to its degree.
pub fn gen_scalefree_tree<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Graph> {
    if p < 2 {
        return Err(Error::InvalidParameter("trees need p >= 2".into()));
    }
    let mut g = Graph::new(p);
    g.insert(Edge::new(0, 1)?);
    // Each node appears once per incident edge, so a uniform pick is degree-biased.
    let mut ends = vec![0usize, 1];
    for v in 2..p {
        let u = ends[rng.random_range(0..ends.len())];
        g.insert(Edge::new(u, v)?);
        ends.push(u);
        ends.push(v);
    }
    Ok(g)
}

/// SplitMix64 finalizer over `(master, replication, tag)`.
pub fn derive_seed(master: u64, replication: u64, tag: u64) -> u64 {
    let mix = |mut z: u64| {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    };
    mix(mix(mix(master) ^ replication) ^ tag)
}

const TAG_GRAPH: u64 = 1;
const TAG_PRECISION: u64 = 2;
const TAG_DATA: u64 = 3;
const TAG_CHAIN: u64 = 16;
const TAG_RETRY: u64 = 1 << 32;

#[derive(Clone, Debug)]
pub struct SyntheticInstance {
    pub graph_type: GraphType,
    pub g_true: Graph,
    pub k_true: PrecisionMatrix,
    pub data: DataMatrix,
    pub master_seed: u64,
    pub replication: usize,
    /// G-Wishart parameters of `k_true`: `b` with `D = I`.
    pub b: f64,
}

/// Fully determined by `(graph_type, p, n, master_seed, replication)`.
pub fn gen_instance(
    graph_type: GraphType,
    p: usize,
    n: usize,
    edge_prob: f64,
    master_seed: u64,
    replication: usize,
) -> Result<SyntheticInstance> {
    let rep = replication as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, rep, TAG_GRAPH));
    // AUC needs both classes, so empty and complete draws are redrawn.
    let mut g_true;
    let mut tries = 0;
    loop {
        g_true = match graph_type {
            GraphType::Random => gen_random_graph(p, edge_prob, &mut rng)?,
            GraphType::Cluster => gen_cluster_graph(p, edge_prob, &mut rng)?,
            GraphType::ScaleFree => gen_scalefree_tree(p, &mut rng)?,
        };
        tries += 1;
        if (g_true.edge_count() > 0 && g_true.edge_count() < pair_count(p)) || tries == 1000 {
            break;
        }
    }
    let params = GWishartParams::identity(p, TRUE_PRECISION_B)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, rep, TAG_PRECISION));
    let k_true = sample_gwishart(&g_true, &params, TRUE_PRECISION_SWEEPS, &mut rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master_seed, rep, TAG_DATA));
    let data = sample_mvn(&k_true, n, &mut rng)?;
    Ok(SyntheticInstance { graph_type, g_true, k_true, data, master_seed, replication, b: TRUE_PRECISION_B })
}

/// Sample size as a multiple of `p` or a fixed count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NRule {
    TimesP(usize),
    Fixed(usize),
}

impl NRule {
    pub fn n(&self, p: usize) -> usize {
        match *self {
            Self::TimesP(k) => k * p,
            Self::Fixed(n) => n,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if s == "p" {
            return Some(Self::TimesP(1));
        }
        if let Some(k) = s.strip_suffix('p') {
            return k.parse().ok().filter(|&k| k > 0).map(Self::TimesP);
        }
        s.parse().ok().filter(|&n| n > 0).map(Self::Fixed)
    }
}

impl std::fmt::Display for NRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::TimesP(1) => write!(f, "p"),
            Self::TimesP(k) => write!(f, "{k}p"),
            Self::Fixed(n) => write!(f, "{n}"),
        }
    }
}

/// Iteration count and wall-clock cap for one algorithm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Budget {
    pub iterations: Option<usize>,
    pub max_seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub graph_type: GraphType,
    pub p: usize,
    pub n: NRule,
    pub replications: usize,
    pub algorithms: Vec<SamplerKind>,
    pub master_seed: u64,
    pub edge_prob: f64,
    /// Bernoulli graph prior used by every sampler except SS-O, whose
    /// inclusion prior lives in `spike_slab`.
    pub prior_theta: f64,
    pub spike_slab: SpikeSlabParams,
    pub budget: Budget,
    pub overrides: BTreeMap<SamplerKind, Budget>,
    pub burn_in: usize,
    pub snapshots: SnapshotSchedule,
}

impl ExperimentPlan {
    pub fn new(graph_type: GraphType, p: usize, n: NRule, replications: usize) -> Self {
        Self {
            graph_type,
            p,
            n,
            replications,
            algorithms: SamplerKind::ALL.to_vec(),
            master_seed: 1,
            edge_prob: 0.2,
            prior_theta: 0.2,
            spike_slab: SpikeSlabParams::default(),
            budget: Budget::default(),
            overrides: BTreeMap::new(),
            burn_in: 0,
            snapshots: SnapshotSchedule::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if self.p < 2 || (self.graph_type == GraphType::Cluster && self.p < 4) {
            return Err(Error::InvalidParameter(format!("p = {} is too small for {} graphs", self.p, self.graph_type)));
        }
        if self.n.n(self.p) == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms selected".into()));
        }
        check_prob(self.edge_prob)?;
        check_prob(self.prior_theta)?;
        self.spike_slab.validate()
    }

    /// Budget after overrides. Above p = 10 joint chains run until a
    /// wall-clock cap (60 s unless set) rather than an iteration count.
    pub fn budget_for(&self, kind: SamplerKind) -> (usize, Option<f64>) {
        let o = self.overrides.get(&kind).copied().unwrap_or_default();
        let by_time = !kind.graph_space() && self.p > 10;
        let iterations = o.iterations.or(self.budget.iterations).unwrap_or_else(|| {
            if by_time {
                usize::MAX
            } else {
                default_iterations(self.p)
            }
        });
        let fallback = by_time.then_some(60.0);
        (iterations, o.max_seconds.or(self.budget.max_seconds).or(fallback))
    }

    pub fn jobs(&self) -> Vec<Job> {
        let mut out = Vec::new();
        for replication in 0..self.replications {
            for &algorithm in &self.algorithms {
                out.push(Job { replication, algorithm });
            }
        }
        out
    }

    pub fn run_id(&self, job: &Job) -> String {
        format!(
            "{}-p{}-n{}-s{}-r{}-{}",
            self.graph_type,
            self.p,
            self.n.n(self.p),
            self.master_seed,
            job.replication,
            job.algorithm
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Job {
    pub replication: usize,
    pub algorithm: SamplerKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Ok,
    Failed,
}

impl RunStatus {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub run_id: String,
    pub algorithm: SamplerKind,
    pub graph_type: GraphType,
    pub p: usize,
    pub n: usize,
    pub replication: usize,
    pub master_seed: u64,
    /// Recorded states.
    pub iterations: usize,
    pub auc: f64,
    pub mamse: f64,
    pub mse: f64,
    pub cost_seconds: f64,
    pub wall_seconds: f64,
    pub status: RunStatus,
    /// Failure reason; not part of the CSV.
    pub message: Option<String>,
    /// `(seconds, AUC)` at each snapshot; not part of the CSV.
    pub auc_series: Vec<(f64, f64)>,
}

fn sampler_index(kind: SamplerKind) -> u64 {
    SamplerKind::ALL.iter().position(|&k| k == kind).expect("listed") as u64
}

/// Runs one sampler on an instance with the plan's settings.
pub fn run_sampler(plan: &ExperimentPlan, inst: &SyntheticInstance, kind: SamplerKind, seed: u64) -> Result<SamplerTrace> {
    let (iterations, max_seconds) = plan.budget_for(kind);
    let config = SamplerConfig {
        iterations,
        seed,
        initial_graph: None,
        snapshots: plan.snapshots,
        burn_in: plan.burn_in,
        max_seconds,
        record_states: false,
    };
    let prior = GraphPrior::bernoulli(plan.prior_theta)?;
    let gw = GWishartParams::identity(inst.g_true.p(), 3.0)?;
    match kind {
        SamplerKind::SsO => run_ss(&inst.data, &plan.spike_slab, &config),
        SamplerKind::Rj => run_rj(&inst.data, &gw, &prior, &config, &RjOptions::default()),
        SamplerKind::Bd => run_bd(&inst.data, &gw, &prior, &config, &BdOptions::default()),
        SamplerKind::Plrj => run_plrj(&inst.data, &prior, MplHyper::default(), &config),
        SamplerKind::Plbd => run_plbd(&inst.data, &prior, MplHyper::default(), &config),
    }
}

struct Scored {
    states: usize,
    auc: f64,
    mamse: f64,
    mse: f64,
    cost: f64,
    wall: f64,
    series: Vec<(f64, f64)>,
}

fn score(trace: &SamplerTrace, truth: &Graph) -> Result<Scored> {
    let p = edge_inclusion(trace, trace.burn_in())?;
    let times: Vec<f64> = trace.snapshots().iter().map(|s| s.seconds).collect();
    let aucs = trace
        .snapshots()
        .iter()
        .map(|s| auc(&EdgeInclusionMatrix::from_snapshot(trace, s), truth))
        .collect::<Result<Vec<_>>>()?;
    let cost = cost_from_auc_series(&times, &aucs, &CostMetricConfig::default())?;
    Ok(Scored {
        states: trace.len(),
        auc: auc(&p, truth)?,
        mamse: mamse(&p, truth, &MamseConfig::default())?,
        mse: mse(&p, truth)?,
        cost,
        wall: trace.seconds().max(cost),
        series: times.into_iter().zip(aucs).collect(),
    })
}

/// One replication of one algorithm. A failure is retried once with a
/// derived seed, then reported as a failed record.
pub fn run_job(plan: &ExperimentPlan, job: &Job) -> RunRecord {
    let p = plan.p;
    let n = plan.n.n(p);
    let mut rec = RunRecord {
        run_id: plan.run_id(job),
        algorithm: job.algorithm,
        graph_type: plan.graph_type,
        p,
        n,
        replication: job.replication,
        master_seed: plan.master_seed,
        iterations: 0,
        auc: f64::NAN,
        mamse: f64::NAN,
        mse: f64::NAN,
        cost_seconds: f64::NAN,
        wall_seconds: f64::NAN,
        status: RunStatus::Failed,
        message: None,
        auc_series: Vec::new(),
    };
    let start = Instant::now();
    let attempt = |tag: u64| -> Result<Scored> {
        let inst = gen_instance(plan.graph_type, p, n, plan.edge_prob, plan.master_seed, job.replication)?;
        let seed = derive_seed(plan.master_seed, job.replication as u64, TAG_CHAIN + sampler_index(job.algorithm) + tag);
        let trace = run_sampler(plan, &inst, job.algorithm, seed)?;
        score(&trace, &inst.g_true)
    };
    let outcome = attempt(0).or_else(|e| {
        log::warn!("{}: {e}; retrying with a derived seed", rec.run_id);
        attempt(TAG_RETRY)
    });
    match outcome {
        Ok(s) => {
            rec.iterations = s.states;
            rec.auc = s.auc;
            rec.mamse = s.mamse;
            rec.mse = s.mse;
            rec.cost_seconds = s.cost;
            rec.wall_seconds = s.wall;
            rec.status = RunStatus::Ok;
            rec.auc_series = s.series;
        }
        Err(e) => {
            log::error!("{}: {e}", rec.run_id);
            rec.wall_seconds = start.elapsed().as_secs_f64();
            rec.message = Some(e.to_string());
        }
    }
    rec
}

/// Every replication and algorithm of the plan, in job order. Jobs run on up
/// to `threads` workers (at least one).
pub fn run_experiment(plan: &ExperimentPlan, threads: usize) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let jobs = plan.jobs();
    run_jobs(plan, &jobs, threads)
}

pub fn run_jobs(plan: &ExperimentPlan, jobs: &[Job], threads: usize) -> Result<Vec<RunRecord>> {
    if threads <= 1 {
        return Ok(jobs.iter().map(|j| run_job(plan, j)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(pool.install(|| jobs.par_iter().map(|j| run_job(plan, j)).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_graph_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = 10_000;
        let mut total = 0.0;
        for _ in 0..draws {
            total += gen_random_graph(10, 0.2, &mut rng).unwrap().edge_count() as f64;
        }
        let mean = total / (draws as f64 * 45.0);
        let sd = (0.2f64 * 0.8 / (draws as f64 * 45.0)).sqrt();
        assert!((mean - 0.2).abs() < 3.0 * sd, "{mean}");
        assert!(gen_random_graph(10, 0.999, &mut rng).unwrap().edge_count() >= 40);
        assert!(gen_random_graph(10, 1.0, &mut rng).is_err());
        let a = gen_random_graph(12, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = gen_random_graph(12, 0.2, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cluster_blocks_and_cut() {
        assert_eq!(cluster_blocks(10), vec![0..5, 5..10]);
        assert_eq!(cluster_count(100), 5);
        assert_eq!(cluster_blocks(43).iter().map(|r| r.len()).collect::<Vec<_>>(), vec![22, 21]);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut within, mut count) = (0.0, 0.0);
        for _ in 0..2000 {
            let g = gen_cluster_graph(10, 0.2, &mut rng).unwrap();
            assert!(g.edges().all(|e| (e.i() < 5) == (e.j() < 5)));
            within += g.edge_count() as f64;
            count += 20.0;
        }
        assert!((within / count - 0.2).abs() < 0.01);
        assert!(gen_cluster_graph(3, 0.2, &mut rng).is_err());
    }

    fn connected(g: &Graph) -> bool {
        let mut seen = vec![false; g.p()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in g.neighbor_iter(v) {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    #[test]
    fn scale_free_trees() {
        for seed in 0..200 {
            let g = gen_scalefree_tree(30, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(g.edge_count(), 29);
            assert!(connected(&g));
        }
    }

    #[test]
    fn preferential_attachment_has_heavier_hubs() {
        let uniform_tree = |rng: &mut ChaCha8Rng| {
            let mut g = Graph::new(100);
            g.insert(Edge::new(0, 1).unwrap());
            for v in 2..100 {
                g.insert(Edge::new(rng.random_range(0..v), v).unwrap());
            }
            g
        };
        let max_degree = |g: &Graph| (0..g.p()).map(|v| g.degree(v)).max().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ba: Vec<usize> = (0..1000).map(|_| max_degree(&gen_scalefree_tree(100, &mut rng).unwrap())).collect();
        let mut un: Vec<usize> = (0..1000).map(|_| max_degree(&uniform_tree(&mut rng))).collect();
        ba.sort();
        un.sort();
        // Quantile-wise dominance at the quartiles.
        for q in [250, 500, 750] {
            assert!(ba[q] > un[q], "{} vs {}", ba[q], un[q]);
        }
    }

    #[test]
    fn instance_contract() {
        let inst = gen_instance(GraphType::Cluster, 12, 30, 0.2, 7, 0).unwrap();
        assert!(inst.k_true.check_pattern(&inst.g_true).is_ok());
        for e in all_pairs(12) {
            assert_eq!(inst.k_true.get(e.i(), e.j()) != 0.0, inst.g_true.contains(e));
        }
        assert_eq!(inst.data.n(), 30);
        assert_eq!(inst.b, 3.0);
        let again = gen_instance(GraphType::Cluster, 12, 30, 0.2, 7, 0).unwrap();
        assert_eq!(again.k_true.matrix(), inst.k_true.matrix());
        assert_eq!(again.data.matrix(), inst.data.matrix());
        let other = gen_instance(GraphType::Cluster, 12, 30, 0.2, 7, 1).unwrap();
        assert_ne!(other.g_true, inst.g_true);
    }

    #[test]
    fn density_at_fifty_nodes() {
        let mut total = 0.0;
        for rep in 0..20 {
            let inst = gen_instance(GraphType::Cluster, 50, 5, 0.2, 3, rep).unwrap();
            total += inst.g_true.density().unwrap();
        }
        let mean = total / 20.0;
        // Two blocks of 25: 600 of 1225 pairs are within blocks.
        let expected = 600.0 / 1225.0 * 0.2;
        assert!(mean > expected / 1.5 && mean < expected * 1.5, "{mean}");
        assert!(mean > 0.05 / 1.5 && mean < 0.05 * 2.5);
    }

    #[test]
    fn n_rules() {
        assert_eq!(NRule::parse("p"), Some(NRule::TimesP(1)));
        assert_eq!(NRule::parse("10p"), Some(NRule::TimesP(10)));
        assert_eq!(NRule::parse("200"), Some(NRule::Fixed(200)));
        assert_eq!(NRule::parse("0"), None);
        assert_eq!(NRule::TimesP(2).n(50), 100);
        assert_eq!(NRule::TimesP(10).to_string(), "10p");
    }

    #[test]
    fn experiment_records_are_reproducible() {
        let mut plan = ExperimentPlan::new(GraphType::Cluster, 6, NRule::TimesP(10), 2);
        plan.algorithms = vec![SamplerKind::Plbd, SamplerKind::SsO];
        plan.budget.iterations = Some(300);
        let a = run_experiment(&plan, 1).unwrap();
        let b = run_experiment(&plan, 2).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.status, RunStatus::Ok, "{:?}", x.message);
            assert_eq!((&x.run_id, x.auc, x.mamse, x.iterations), (&y.run_id, y.auc, y.mamse, y.iterations));
            assert!(x.cost_seconds <= x.wall_seconds);
            assert!((0.0..=1.0).contains(&x.auc));
        }
        assert_eq!(a[0].run_id, "cluster-p6-n60-s1-r0-g-plbd");
    }

    #[test]
    fn seeds_are_distinct() {
        let s: std::collections::HashSet<u64> =
            (0..50).flat_map(|r| (0..20).map(move |t| derive_seed(1, r, t))).collect();
        assert_eq!(s.len(), 1000);
    }
}
