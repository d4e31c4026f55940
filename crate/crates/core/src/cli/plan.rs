//! Plan files: `key = value` settings, optionally grouped in `run { ... }`
//! blocks. Settings outside blocks are defaults for every block. Inside a
//! block, `graph`, `p` and `n` take comma-separated lists and expand to their
//! cartesian product.
//!
//! ```text
//! seed = 7
//! replications = 50
//! algorithms = ss-o, rj, bd, g-plrj, g-plbd
//! run { graph = cluster; p = 10, 50; n = 10p }
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::samplers::SamplerKind;
use crate::simbench::{Budget, ExperimentPlan, GraphType, NRule};

#[derive(Clone, Debug, Default)]
struct Settings {
    graphs: Option<Vec<GraphType>>,
    ps: Option<Vec<usize>>,
    ns: Option<Vec<NRule>>,
    replications: Option<usize>,
    seed: Option<u64>,
    algorithms: Option<Vec<SamplerKind>>,
    edge_prob: Option<f64>,
    prior_theta: Option<f64>,
    burn_in: Option<usize>,
    epsilon: Option<f64>,
    v: Option<f64>,
    lambda: Option<f64>,
    pi: Option<f64>,
    budget: Budget,
    overrides: BTreeMap<SamplerKind, Budget>,
}

impl Settings {
    fn merged(&self, block: &Settings) -> Settings {
        let mut overrides = self.overrides.clone();
        for (k, b) in &block.overrides {
            let o = overrides.entry(*k).or_default();
            o.iterations = b.iterations.or(o.iterations);
            o.max_seconds = b.max_seconds.or(o.max_seconds);
        }
        Settings {
            graphs: block.graphs.clone().or_else(|| self.graphs.clone()),
            ps: block.ps.clone().or_else(|| self.ps.clone()),
            ns: block.ns.clone().or_else(|| self.ns.clone()),
            replications: block.replications.or(self.replications),
            seed: block.seed.or(self.seed),
            algorithms: block.algorithms.clone().or_else(|| self.algorithms.clone()),
            edge_prob: block.edge_prob.or(self.edge_prob),
            prior_theta: block.prior_theta.or(self.prior_theta),
            burn_in: block.burn_in.or(self.burn_in),
            epsilon: block.epsilon.or(self.epsilon),
            v: block.v.or(self.v),
            lambda: block.lambda.or(self.lambda),
            pi: block.pi.or(self.pi),
            budget: Budget {
                iterations: block.budget.iterations.or(self.budget.iterations),
                max_seconds: block.budget.max_seconds.or(self.budget.max_seconds),
            },
            overrides,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn one<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.trim().parse::<T>().map_err(|e| format!("bad value `{}`: {e}", v.trim()))
        }
        fn list<T>(v: &str, f: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
            let out = v.split(',').map(|x| f(x.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
            if out.is_empty() {
                return Err("empty list".into());
            }
            Ok(out)
        }
        let kind = |x: &str| SamplerKind::from_name(x).ok_or_else(|| format!("unknown algorithm `{x}`"));
        if let Some((field, alg)) = key.split_once('.') {
            if field == "iterations" || field == "max_seconds" {
                let o = self.overrides.entry(kind(alg)?).or_default();
                if field == "iterations" {
                    o.iterations = Some(one(value)?);
                } else {
                    o.max_seconds = Some(one(value)?);
                }
                return Ok(());
            }
        }
        match key {
            "graph" => {
                self.graphs = Some(list(value, |x| GraphType::from_name(x).ok_or_else(|| format!("unknown graph type `{x}`")))?)
            }
            "p" => self.ps = Some(list(value, one)?),
            "n" => self.ns = Some(list(value, |x| NRule::parse(x).ok_or_else(|| format!("bad sample size `{x}`; use p, <k>p or a count")))?),
            "replications" => self.replications = Some(one(value)?),
            "seed" => self.seed = Some(one(value)?),
            "algorithms" => self.algorithms = Some(list(value, kind)?),
            "edge_prob" => self.edge_prob = Some(one(value)?),
            "prior_theta" => self.prior_theta = Some(one(value)?),
            "burn_in" => self.burn_in = Some(one(value)?),
            "iterations" => self.budget.iterations = Some(one(value)?),
            "max_seconds" => self.budget.max_seconds = Some(one(value)?),
            "ss.epsilon" => self.epsilon = Some(one(value)?),
            "ss.v" => self.v = Some(one(value)?),
            "ss.lambda" => self.lambda = Some(one(value)?),
            "ss.pi" => self.pi = Some(one(value)?),
            _ => return Err(format!("unknown field `{key}`")),
        }
        Ok(())
    }

    fn expand(&self, line: usize) -> Result<Vec<ExperimentPlan>> {
        let missing = |f: &str| Error::Parse { line, message: format!("run is missing field `{f}`") };
        let graphs = self.graphs.as_ref().ok_or_else(|| missing("graph"))?;
        let ps = self.ps.as_ref().ok_or_else(|| missing("p"))?;
        let ns = self.ns.as_ref().ok_or_else(|| missing("n"))?;
        let mut out = Vec::new();
        for &g in graphs {
            for &p in ps {
                for &n in ns {
                    let mut plan = ExperimentPlan::new(g, p, n, self.replications.unwrap_or(DEFAULT_REPLICATIONS));
                    if let Some(a) = &self.algorithms {
                        plan.algorithms = a.clone();
                    }
                    plan.master_seed = self.seed.unwrap_or(plan.master_seed);
                    plan.edge_prob = self.edge_prob.unwrap_or(plan.edge_prob);
                    plan.prior_theta = self.prior_theta.unwrap_or(plan.prior_theta);
                    plan.burn_in = self.burn_in.unwrap_or(plan.burn_in);
                    let ss = &mut plan.spike_slab;
                    ss.epsilon = self.epsilon.unwrap_or(ss.epsilon);
                    ss.v = self.v.unwrap_or(ss.v);
                    ss.lambda = self.lambda.unwrap_or(ss.lambda);
                    ss.pi = self.pi.unwrap_or(ss.pi);
                    plan.budget = self.budget;
                    plan.overrides = self.overrides.clone();
                    plan.validate().map_err(|e| Error::Parse { line, message: e.to_string() })?;
                    out.push(plan);
                }
            }
        }
        Ok(out)
    }
}

/// Replications when a plan does not say.
pub const DEFAULT_REPLICATIONS: usize = 50;

enum Token {
    Open,
    Close,
    Setting(String, String),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut buf = String::new();
        let flush = |buf: &mut String, out: &mut Vec<(usize, Token)>| -> Result<()> {
            for piece in buf.split(';') {
                let piece = piece.trim();
                if piece.is_empty() {
                    continue;
                }
                let (k, v) = piece
                    .split_once('=')
                    .ok_or_else(|| Error::Parse { line, message: format!("expected `key = value`, found `{piece}`") })?;
                let k = k.trim();
                if k.is_empty() || v.trim().is_empty() {
                    return Err(Error::Parse { line, message: format!("empty key or value in `{piece}`") });
                }
                out.push((line, Token::Setting(k.to_ascii_lowercase(), v.trim().to_string())));
            }
            buf.clear();
            Ok(())
        };
        for c in body.chars() {
            match c {
                '{' => {
                    if buf.trim() != "run" {
                        return Err(Error::Parse { line, message: format!("expected `run {{`, found `{}{{`", buf.trim()) });
                    }
                    buf.clear();
                    out.push((line, Token::Open));
                }
                '}' => {
                    flush(&mut buf, &mut out)?;
                    out.push((line, Token::Close));
                }
                _ => buf.push(c),
            }
        }
        flush(&mut buf, &mut out)?;
    }
    Ok(out)
}

/// Parses a plan file into one experiment per (graph type, p, n) cell.
pub fn parse_plan(text: &str) -> Result<Vec<ExperimentPlan>> {
    let mut globals = Settings::default();
    let mut blocks: Vec<(usize, Settings)> = Vec::new();
    let mut open: Option<(usize, Settings)> = None;
    let mut last_line = 0;
    for (line, tok) in tokenize(text)? {
        last_line = line;
        match tok {
            Token::Open => {
                if open.is_some() {
                    return Err(Error::Parse { line, message: "nested `run` block".into() });
                }
                open = Some((line, Settings::default()));
            }
            Token::Close => {
                let block = open.take().ok_or_else(|| Error::Parse { line, message: "unmatched `}`".into() })?;
                blocks.push(block);
            }
            Token::Setting(k, v) => {
                let target = match open.as_mut() {
                    Some((_, s)) => s,
                    None if blocks.is_empty() => &mut globals,
                    None => {
                        return Err(Error::Parse { line, message: "settings after the first `run` block must go inside one".into() })
                    }
                };
                target.set(&k, &v).map_err(|m| Error::Parse { line, message: format!("field `{k}`: {m}") })?;
            }
        }
    }
    if let Some((line, _)) = open {
        return Err(Error::Parse { line, message: "`run` block is never closed".into() });
    }
    if blocks.is_empty() {
        return globals.expand(last_line.max(1));
    }
    let mut out = Vec::new();
    for (line, b) in &blocks {
        out.extend(globals.merged(b).expand(*line)?);
    }
    Ok(out)
}
