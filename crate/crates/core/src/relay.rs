//! Relay decoder built on memory min-sum belief propagation.
//!
//! Each leg runs flooding min-sum where the prior of variable `j` is mixed
//! with its previous posterior at every iteration:
//!
//! ```text
//! prior_j(t) = (1 − γ_j) · channel_j + γ_j · posterior_j(t − 1)
//! ```
//!
//! Leg 0 uses a uniform `gamma0` for `pre_iter` iterations. Every later leg
//! draws `γ_j` uniformly from `[gamma_min, gamma_max]`, starts its memory from
//! the previous leg's final posteriors and runs for `set_max_iter`
//! iterations. Legs whose hard decision satisfies the syndrome contribute a
//! candidate; the relay stops after `stop_nconv` converged legs or `num_sets`
//! legs in total.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::f2::{BitVec, SparseBitMatrix};
use crate::problem::{DecodingProblem, LogicalClass, Syndrome};
use crate::seed::substream;

/// Magnitude cap for messages and posteriors. Checks of degree one send an
/// unbounded message, so everything is clipped to keep the memory mixing
/// finite.
const LLR_CAP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    pub gamma0: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub pre_iter: usize,
    pub set_max_iter: usize,
    pub num_sets: usize,
    pub stop_nconv: usize,
    pub seed: u64,
}

/// Memory ranges tuned per circuit for the relay decoder.
pub fn memory_preset(name: &str) -> Option<(f64, f64)> {
    match name {
        "bb72" => Some((-0.19, 0.26)),
        "bb144" => Some((-0.24, 0.66)),
        "in_module_x1" => Some((-0.16, 0.60)),
        "in_module_y1" => Some((-0.14, 0.66)),
        "inter_module_x1x1" => Some((-0.14, 0.70)),
        _ => None,
    }
}

impl RelayConfig {
    /// Baseline-run defaults: 1201 legs, 100 solutions.
    pub fn baseline() -> Self {
        let (gamma_min, gamma_max) = memory_preset("bb72").unwrap();
        RelayConfig {
            gamma0: 0.1,
            gamma_min,
            gamma_max,
            pre_iter: 80,
            set_max_iter: 60,
            num_sets: 1201,
            stop_nconv: 100,
            seed: 0,
        }
    }

    /// Forced-run defaults: as [`RelayConfig::baseline`] with 25 legs.
    pub fn forced() -> Self {
        RelayConfig {
            num_sets: 25,
            ..Self::baseline()
        }
    }

    pub fn with_memory(mut self, gamma_min: f64, gamma_max: f64) -> Self {
        self.gamma_min = gamma_min;
        self.gamma_max = gamma_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_num_sets(mut self, num_sets: usize) -> Self {
        self.num_sets = num_sets;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.gamma_min <= self.gamma_max) {
            return bad("gamma_min must not exceed gamma_max");
        }
        if !self.gamma0.is_finite() || !self.gamma_min.is_finite() || !self.gamma_max.is_finite() {
            return bad("memory strengths must be finite");
        }
        if self.pre_iter == 0 || self.set_max_iter == 0 {
            return bad("iteration limits must be at least 1");
        }
        if self.num_sets == 0 {
            return bad("num_sets must be at least 1");
        }
        if self.stop_nconv == 0 {
            return bad("stop_nconv must be at least 1");
        }
        Ok(())
    }

    /// Sets one parameter by name. `pre-iter` and `set-max-iter` are accepted
    /// as aliases.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
        }
        match key.replace('-', "_").as_str() {
            "gamma0" => self.gamma0 = num(key, value)?,
            "gamma_min" => self.gamma_min = num(key, value)?,
            "gamma_max" => self.gamma_max = num(key, value)?,
            "pre_iter" => self.pre_iter = num(key, value)?,
            "set_max_iter" => self.set_max_iter = num(key, value)?,
            "num_sets" => self.num_sets = num(key, value)?,
            "stop_nconv" => self.stop_nconv = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_kv(mut self, text: &str) -> Result<Self> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("line {}: expected key = value", i + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_kv(&self) -> String {
        format!(
            "stop_nconv = {}\nnum_sets = {}\ngamma0 = {:?}\npre_iter = {}\nset_max_iter = {}\ngamma_min = {:?}\ngamma_max = {:?}\nseed = {}\n",
            self.stop_nconv,
            self.num_sets,
            self.gamma0,
            self.pre_iter,
            self.set_max_iter,
            self.gamma_min,
            self.gamma_max,
            self.seed
        )
    }
}

/// Per-variable memory strengths for leg `leg_index`. Leg 0 is uniform
/// `gamma0`; later legs are i.i.d. uniform on `[gamma_min, gamma_max]`.
pub fn sample_gammas<R: Rng + ?Sized>(cfg: &RelayConfig, leg_index: usize, n: usize, rng: &mut R) -> Vec<f64> {
    if leg_index == 0 {
        return vec![cfg.gamma0; n];
    }
    let span = cfg.gamma_max - cfg.gamma_min;
    (0..n).map(|_| cfg.gamma_min + span * rng.random::<f64>()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSolution {
    pub correction: BitVec,
    pub log_likelihood: f64,
    pub logical_class: LogicalClass,
    pub leg_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    /// Distinct corrections, most likely first.
    pub candidates: Vec<CandidateSolution>,
    pub legs_run: usize,
}

impl DecodeOutcome {
    pub fn converged(&self) -> bool {
        !self.candidates.is_empty()
    }

    pub fn best(&self) -> Option<&CandidateSolution> {
        self.candidates.first()
    }
}

/// Tanner graph in edge-list form. Variables with zero prior are left out.
#[derive(Clone, Debug)]
struct TannerGraph {
    check_start: Vec<usize>,
    edge_var: Vec<usize>,
    var_start: Vec<usize>,
    var_edges: Vec<usize>,
}

impl TannerGraph {
    fn new(h: &SparseBitMatrix, active: &[bool]) -> Self {
        let mut check_start = Vec::with_capacity(h.rows() + 1);
        let mut edge_var = Vec::new();
        check_start.push(0);
        for i in 0..h.rows() {
            edge_var.extend(h.row(i).iter().copied().filter(|&j| active[j]));
            check_start.push(edge_var.len());
        }
        let n = h.cols();
        let mut degree = vec![0usize; n];
        for &j in &edge_var {
            degree[j] += 1;
        }
        let mut var_start = vec![0usize; n + 1];
        for j in 0..n {
            var_start[j + 1] = var_start[j] + degree[j];
        }
        let mut fill = var_start.clone();
        let mut var_edges = vec![0usize; edge_var.len()];
        for (e, &j) in edge_var.iter().enumerate() {
            var_edges[fill[j]] = e;
            fill[j] += 1;
        }
        TannerGraph {
            check_start,
            edge_var,
            var_start,
            var_edges,
        }
    }

    fn check_edges(&self, i: usize) -> std::ops::Range<usize> {
        self.check_start[i]..self.check_start[i + 1]
    }

    fn var_edges(&self, j: usize) -> &[usize] {
        &self.var_edges[self.var_start[j]..self.var_start[j + 1]]
    }

    fn num_checks(&self) -> usize {
        self.check_start.len() - 1
    }
}

/// Decoder bound to one problem. Cheap to share; each call to
/// [`RelayDecoder::decode`] owns its message state.
#[derive(Clone, Debug)]
pub struct RelayDecoder {
    problem: DecodingProblem,
    graph: TannerGraph,
    active: Vec<bool>,
    channel: Vec<f64>,
}

impl RelayDecoder {
    pub fn new(problem: DecodingProblem) -> Self {
        let active: Vec<bool> = problem.llr_weights().iter().map(|w| w.is_finite()).collect();
        let graph = TannerGraph::new(problem.h(), &active);
        let channel = problem
            .llr_weights()
            .iter()
            .map(|&w| if w.is_finite() { w } else { 0.0 })
            .collect();
        RelayDecoder {
            problem,
            graph,
            active,
            channel,
        }
    }

    pub fn problem(&self) -> &DecodingProblem {
        &self.problem
    }

    /// Fresh message state for syndrome `s`.
    pub fn start(&self, s: &Syndrome) -> Result<BpState<'_>> {
        self.problem.check_syndrome(s)?;
        let edges = self.graph.edge_var.len();
        Ok(BpState {
            decoder: self,
            check_sign: (0..self.graph.num_checks())
                .map(|i| if s.bits().get(i) { -1.0 } else { 1.0 })
                .collect(),
            syndrome: s.bits().clone(),
            c2v: vec![0.0; edges],
            v2c: vec![0.0; edges],
            memory: self.channel.clone(),
            posterior: self.channel.clone(),
            hard: BitVec::zeros(self.problem.num_faults()),
        })
    }

    pub fn decode(&self, s: &Syndrome, cfg: &RelayConfig) -> Result<DecodeOutcome> {
        cfg.validate()?;
        let n = self.problem.num_faults();
        let mut state = self.start(s)?;
        let mut seen: HashSet<BitVec> = HashSet::new();
        let mut candidates = Vec::new();
        let mut nconv = 0;
        let mut legs_run = 0;
        for leg in 0..cfg.num_sets {
            let (gammas, max_iter) = if leg == 0 {
                (sample_gammas(cfg, 0, n, &mut substream(cfg.seed, 0)), cfg.pre_iter)
            } else {
                state.relay();
                let mut rng = substream(cfg.seed, leg as u64);
                (sample_gammas(cfg, leg, n, &mut rng), cfg.set_max_iter)
            };
            legs_run += 1;
            if let Some(e) = state.bp_leg(&gammas, max_iter) {
                nconv += 1;
                if seen.insert(e.clone()) {
                    candidates.push(CandidateSolution {
                        log_likelihood: self.problem.log_likelihood(&e)?,
                        logical_class: self.problem.logical_class_of(&e)?,
                        correction: e,
                        leg_index: leg,
                    });
                }
                if nconv >= cfg.stop_nconv {
                    break;
                }
            }
        }
        // stable: equal likelihoods keep discovery order
        candidates.sort_by(|a, b| b.log_likelihood.total_cmp(&a.log_likelihood));
        Ok(DecodeOutcome {
            candidates,
            legs_run,
        })
    }
}

/// Mutable message state of one decoding call.
pub struct BpState<'a> {
    decoder: &'a RelayDecoder,
    syndrome: BitVec,
    check_sign: Vec<f64>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    /// Posterior carried into the memory term of the next iteration.
    memory: Vec<f64>,
    posterior: Vec<f64>,
    hard: BitVec,
}

impl BpState<'_> {
    pub fn posteriors(&self) -> &[f64] {
        &self.posterior
    }

    /// Hands the current posteriors to the next leg and clears edge messages.
    pub fn relay(&mut self) {
        self.memory.copy_from_slice(&self.posterior);
        self.c2v.fill(0.0);
    }

    /// Runs up to `max_iter` flooding iterations. Returns the hard decision on
    /// the first iteration that satisfies the syndrome.
    pub fn bp_leg(&mut self, gammas: &[f64], max_iter: usize) -> Option<BitVec> {
        assert_eq!(gammas.len(), self.posterior.len(), "one memory strength per variable");
        let d = self.decoder;
        let g = &d.graph;
        let n = self.posterior.len();
        let mut prior = vec![0.0; n];
        for _ in 0..max_iter {
            // variable to check
            for j in 0..n {
                if !d.active[j] {
                    continue;
                }
                let p = ((1.0 - gammas[j]) * d.channel[j] + gammas[j] * self.memory[j]).clamp(-LLR_CAP, LLR_CAP);
                prior[j] = p;
                let edges = g.var_edges(j);
                let total: f64 = edges.iter().map(|&e| self.c2v[e]).sum();
                for &e in edges {
                    self.v2c[e] = p + total - self.c2v[e];
                }
            }
            // check to variable
            for i in 0..g.num_checks() {
                let range = g.check_edges(i);
                let (mut min1, mut min2, mut argmin) = (f64::INFINITY, f64::INFINITY, usize::MAX);
                let mut sign = self.check_sign[i];
                for e in range.clone() {
                    let m = self.v2c[e];
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let a = m.abs();
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        argmin = e;
                    } else if a < min2 {
                        min2 = a;
                    }
                }
                for e in range {
                    let own = if self.v2c[e] < 0.0 { -1.0 } else { 1.0 };
                    let mag = if e == argmin { min2 } else { min1 };
                    self.c2v[e] = sign * own * mag.min(LLR_CAP);
                }
            }
            // posteriors and hard decision
            for j in 0..n {
                if !d.active[j] {
                    self.hard.set(j, false);
                    continue;
                }
                let post: f64 = prior[j] + g.var_edges(j).iter().map(|&e| self.c2v[e]).sum::<f64>();
                let post = post.clamp(-LLR_CAP, LLR_CAP);
                self.posterior[j] = post;
                self.memory[j] = post;
                self.hard.set(j, post < 0.0);
            }
            if self.satisfies_syndrome() {
                return Some(self.hard.clone());
            }
        }
        None
    }

    fn satisfies_syndrome(&self) -> bool {
        let g = &self.decoder.graph;
        (0..g.num_checks()).all(|i| {
            let parity = g.check_edges(i).filter(|&e| self.hard.get(g.edge_var[e])).count() & 1 == 1;
            parity == self.syndrome.get(i)
        })
    }
}

/// One-shot convenience wrapper around [`RelayDecoder`].
pub fn relay_decode(
    h: &SparseBitMatrix,
    a: &SparseBitMatrix,
    priors: &[f64],
    s: &Syndrome,
    cfg: &RelayConfig,
) -> Result<DecodeOutcome> {
    let problem = DecodingProblem::new(h.clone(), a.clone(), priors.to_vec())?;
    RelayDecoder::new(problem).decode(s, cfg)
}
