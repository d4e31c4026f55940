use std::time::Instant;

use crate::error::{Error, Result};
use crate::graph::{pair_count, Edge, Graph};

use super::{SamplerKind, SnapshotSchedule};

/// One recorded state: the pairs toggled since the previous recorded state,
/// and the state's weight.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub toggles: Vec<Edge>,
    pub weight: f64,
}

/// Running edge-inclusion matrix at a wall-clock time.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    /// Seconds since the chain started.
    pub seconds: f64,
    /// Recorded states so far.
    pub states: usize,
    /// Pair-indexed inclusion frequencies.
    pub inclusion: Vec<f64>,
}

/// Weighted edge frequencies maintained in O(toggles) per state. Each present
/// pair remembers the total weight at the time it appeared.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Accumulator {
    p: usize,
    present: Vec<bool>,
    since: Vec<f64>,
    sums: Vec<f64>,
    total: f64,
}

impl Accumulator {
    pub fn new(g: &Graph) -> Self {
        let m = pair_count(g.p());
        let mut present = vec![false; m];
        for e in g.edges() {
            present[e.index(g.p())] = true;
        }
        Self { p: g.p(), present, since: vec![0.0; m], sums: vec![0.0; m], total: 0.0 }
    }

    pub fn toggle(&mut self, e: Edge) {
        let k = e.index(self.p);
        if self.present[k] {
            self.sums[k] += self.total - self.since[k];
            self.present[k] = false;
        } else {
            self.present[k] = true;
            self.since[k] = self.total;
        }
    }

    pub fn add_state(&mut self, weight: f64) {
        self.total += weight;
    }

    pub fn inclusion(&self) -> Vec<f64> {
        if self.total <= 0.0 {
            return vec![0.0; self.sums.len()];
        }
        (0..self.sums.len())
            .map(|k| {
                let live = if self.present[k] { self.total - self.since[k] } else { 0.0 };
                ((self.sums[k] + live) / self.total).clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Output of a sampler run.
#[derive(Clone, Debug)]
pub struct SamplerTrace {
    pub(crate) sampler: SamplerKind,
    pub(crate) p: usize,
    pub(crate) weighted: bool,
    pub(crate) initial: Graph,
    pub(crate) steps: Option<Vec<Step>>,
    pub(crate) acc: Accumulator,
    pub(crate) snapshots: Vec<Snapshot>,
    pub(crate) current: Graph,
    pub(crate) states: usize,
    pub(crate) burn_in: usize,
    pub(crate) seconds: f64,
}

impl SamplerTrace {
    pub fn sampler(&self) -> SamplerKind {
        self.sampler
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// True for continuous-time chains whose states carry waiting-time weights.
    pub fn weighted(&self) -> bool {
        self.weighted
    }

    pub fn initial_graph(&self) -> &Graph {
        &self.initial
    }

    pub fn final_graph(&self) -> &Graph {
        &self.current
    }

    /// Recorded states, including any burn-in.
    pub fn len(&self) -> usize {
        self.states
    }

    pub fn is_empty(&self) -> bool {
        self.states == 0
    }

    /// Burn-in applied to the running accumulator and the snapshots.
    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn steps(&self) -> Option<&[Step]> {
        self.steps.as_deref()
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    /// Wall-clock duration of the run in seconds.
    pub fn seconds(&self) -> f64 {
        self.seconds
    }

    /// Pair-indexed running inclusion frequencies after burn-in.
    pub fn running_inclusion(&self) -> Vec<f64> {
        self.acc.inclusion()
    }

    /// Replays the recorded states, calling `f(graph, weight)` for each.
    pub fn for_each_state<F: FnMut(&Graph, f64)>(&self, mut f: F) -> Result<()> {
        let steps = self.steps.as_ref().ok_or_else(|| {
            Error::InvalidParameter("trace was recorded without per-state steps".into())
        })?;
        let mut g = self.initial.clone();
        for s in steps {
            for &e in &s.toggles {
                g.toggle(e);
            }
            f(&g, s.weight);
        }
        Ok(())
    }

    /// Same recorded states and weights (timings ignored).
    pub fn same_states(&self, other: &SamplerTrace) -> bool {
        self.p == other.p
            && self.initial == other.initial
            && self.steps == other.steps
            && self.acc == other.acc
            && self.current == other.current
    }

    /// Text export: a versioned header, the initial edge set, then one line per
    /// state holding its weight followed by the toggled pairs as 1-based `i-j`.
    pub fn to_delta_text(&self) -> Result<String> {
        let steps = self.steps.as_ref().ok_or_else(|| {
            Error::InvalidParameter("trace was recorded without per-state steps".into())
        })?;
        let pair = |e: &Edge| format!("{}-{}", e.i() + 1, e.j() + 1);
        let mut out = String::from("# ggmsl-trace v1\n");
        out.push_str(&format!("p={}\nsampler={}\nweighted={}\n", self.p, self.sampler.name(), self.weighted));
        out.push_str("init");
        for e in self.initial.edges() {
            out.push(' ');
            out.push_str(&pair(&e));
        }
        out.push('\n');
        for s in steps {
            out.push_str(&format!("{}", s.weight));
            for e in &s.toggles {
                out.push(' ');
                out.push_str(&pair(e));
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses [`SamplerTrace::to_delta_text`] output. Timings are not stored,
    /// so the result has no snapshots.
    pub fn from_delta_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut expect = |prefix: &str| -> Result<(usize, String)> {
            let (ln, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing `{prefix}` line"),
            })?;
            let rest = line.strip_prefix(prefix).ok_or_else(|| Error::Parse {
                line: ln + 1,
                message: format!("expected `{prefix}`"),
            })?;
            Ok((ln + 1, rest.trim().to_string()))
        };
        expect("# ggmsl-trace v1")?;
        let (ln, p) = expect("p=")?;
        let p: usize = p.parse().map_err(|_| Error::Parse { line: ln, message: "bad node count".into() })?;
        let (ln, name) = expect("sampler=")?;
        let sampler = SamplerKind::from_name(&name)
            .ok_or_else(|| Error::Parse { line: ln, message: format!("unknown sampler {name:?}") })?;
        let (ln, w) = expect("weighted=")?;
        let weighted: bool = w.parse().map_err(|_| Error::Parse { line: ln, message: "bad flag".into() })?;
        let (ln, init) = expect("init")?;
        let parse_pair = |tok: &str, line: usize| -> Result<Edge> {
            let (a, b) = tok
                .split_once('-')
                .ok_or_else(|| Error::Parse { line, message: format!("bad pair {tok:?}") })?;
            let a: usize = a.parse().map_err(|_| Error::Parse { line, message: format!("bad pair {tok:?}") })?;
            let b: usize = b.parse().map_err(|_| Error::Parse { line, message: format!("bad pair {tok:?}") })?;
            if a == 0 || b == 0 || a > p || b > p {
                return Err(Error::Parse { line, message: format!("pair {tok:?} out of range") });
            }
            Edge::new(a - 1, b - 1).map_err(|e| Error::Parse { line, message: e.to_string() })
        };
        let mut initial = Graph::new(p);
        for tok in init.split_whitespace() {
            initial.insert(parse_pair(tok, ln)?);
        }
        let mut trace = Recorder::bare(sampler, weighted, &initial);
        let rest: Vec<(usize, &str)> = text.lines().enumerate().skip(5).collect();
        for (ln, line) in rest {
            if line.trim().is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let w = toks.next().unwrap_or("");
            let weight: f64 = w
                .parse()
                .map_err(|_| Error::Parse { line: ln + 1, message: format!("bad weight {w:?}") })?;
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Parse { line: ln + 1, message: "weights must be positive".into() });
            }
            let toggles = toks.map(|t| parse_pair(t, ln + 1)).collect::<Result<Vec<_>>>()?;
            trace.push(toggles, weight);
        }
        Ok(trace)
    }
}

/// Incremental builder used by the samplers.
pub(crate) struct Recorder {
    trace: SamplerTrace,
    start: Instant,
    next_snapshot: f64,
    schedule: SnapshotSchedule,
}

impl Recorder {
    pub fn new(sampler: SamplerKind, weighted: bool, initial: &Graph, config: &super::SamplerConfig) -> Self {
        let mut trace = Self::bare(sampler, weighted, initial);
        trace.burn_in = config.burn_in;
        if !config.record_states {
            trace.steps = None;
        }
        Self {
            trace,
            start: Instant::now(),
            next_snapshot: config.snapshots.first_seconds,
            schedule: config.snapshots,
        }
    }

    fn bare(sampler: SamplerKind, weighted: bool, initial: &Graph) -> SamplerTrace {
        SamplerTrace {
            sampler,
            p: initial.p(),
            weighted,
            initial: initial.clone(),
            steps: Some(Vec::new()),
            acc: Accumulator::new(initial),
            snapshots: Vec::new(),
            current: initial.clone(),
            states: 0,
            burn_in: 0,
            seconds: 0.0,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Records the state reached by applying `toggles` to the previous one.
    pub fn record(&mut self, toggles: Vec<Edge>, weight: f64) {
        debug_assert!(weight > 0.0 && weight.is_finite(), "weight {weight}");
        self.trace.push(toggles, weight);
        if self.trace.states > self.trace.burn_in {
            let now = self.elapsed();
            if now >= self.next_snapshot {
                self.snapshot(now);
                while self.next_snapshot <= now {
                    self.next_snapshot *= self.schedule.growth;
                }
            }
        }
    }

    fn snapshot(&mut self, seconds: f64) {
        let inclusion = self.trace.acc.inclusion();
        self.trace.snapshots.push(Snapshot { seconds, states: self.trace.states, inclusion });
    }

    pub fn finish(mut self) -> SamplerTrace {
        let now = self.elapsed();
        if self.trace.states > self.trace.burn_in
            && self.trace.snapshots.last().is_none_or(|s| s.states != self.trace.states)
        {
            self.snapshot(now);
        }
        self.trace.seconds = now;
        self.trace
    }
}

impl SamplerTrace {
    fn push(&mut self, toggles: Vec<Edge>, weight: f64) {
        for &e in &toggles {
            self.current.toggle(e);
            self.acc.toggle(e);
        }
        self.states += 1;
        if self.states > self.burn_in {
            self.acc.add_state(weight);
        }
        if let Some(steps) = self.steps.as_mut() {
            steps.push(Step { toggles, weight });
        }
    }
}
