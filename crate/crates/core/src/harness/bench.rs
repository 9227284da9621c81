use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::baselines::{simple_reg_prune, sparsegpt_prune, wanda_prune, DEFAULT_DAMP};
use crate::error::{Error, Result};
use crate::harness::synth::{gen_synthetic, SyntheticSpec};
use crate::linalg::{layer_loss, Hessian, Matrix};
use crate::prox::SimpleReg;
use crate::pruner::{
    prune_prox, refine_with_masked_gd, LambdaSchedule, PruneConfig, PruneMask, PruneReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Prox,
    Wanda,
    WandaGd,
    SparseGpt,
    SparseGptGd,
    L0,
    L1,
    L2,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Prox,
        Method::Wanda,
        Method::WandaGd,
        Method::SparseGpt,
        Method::SparseGptGd,
        Method::L0,
        Method::L1,
        Method::L2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Prox => "prox",
            Method::Wanda => "wanda",
            Method::WandaGd => "wanda+gd",
            Method::SparseGpt => "sparsegpt",
            Method::SparseGptGd => "sparsegpt+gd",
            Method::L0 => "l0",
            Method::L1 => "l1",
            Method::L2 => "l2",
        }
    }

    /// `"all"` or a comma-separated list of names.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        if s.trim() == "all" {
            return Ok(Method::ALL.to_vec());
        }
        s.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace("-gd", "+gd");
        Method::ALL
            .into_iter()
            .find(|m| m.name() == norm)
            .ok_or_else(|| Error::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub schedule: LambdaSchedule,
    pub prune: PruneConfig,
    pub damp: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { schedule: LambdaSchedule::default(), prune: PruneConfig::default(), damp: DEFAULT_DAMP }
    }
}

/// Result of running one pruning method.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub w: Matrix,
    pub mask: PruneMask,
    /// Proximal iterations, masked-GD steps for the "+gd" baselines, 0
    /// for one-shot baselines.
    pub iterations: usize,
    pub report: Option<PruneReport>,
}

pub fn run_method(
    method: Method,
    w_star: &Matrix,
    h: &Hessian,
    cfg: &BenchConfig,
) -> Result<MethodOutput> {
    let refine = |(w, mask): (Matrix, PruneMask)| -> Result<MethodOutput> {
        let w = refine_with_masked_gd(&w, w_star, h, &mask, cfg.prune.gd_steps)?;
        Ok(MethodOutput { w, mask, iterations: cfg.prune.gd_steps, report: None })
    };
    let one_shot = |(w, mask): (Matrix, PruneMask)| MethodOutput { w, mask, iterations: 0, report: None };
    let proximal = |(w, mask, rep): (Matrix, PruneMask, PruneReport)| MethodOutput {
        w,
        mask,
        iterations: rep.iterations,
        report: Some(rep),
    };
    let simple = |kind| simple_reg_prune(w_star, h, kind, &cfg.schedule, &cfg.prune).map(proximal);
    match method {
        Method::Prox => prune_prox(w_star, h, &cfg.schedule, &cfg.prune).map(proximal),
        Method::Wanda => wanda_prune(w_star, h).map(one_shot),
        Method::WandaGd => refine(wanda_prune(w_star, h)?),
        Method::SparseGpt => sparsegpt_prune(w_star, h, cfg.damp).map(one_shot),
        Method::SparseGptGd => refine(sparsegpt_prune(w_star, h, cfg.damp)?),
        Method::L0 => simple(SimpleReg::R0),
        Method::L1 => simple(SimpleReg::R1),
        Method::L2 => simple(SimpleReg::R2),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub alpha: f64,
    pub seed: u64,
    pub loss: f64,
    pub runtime_s: f64,
    pub iterations: usize,
}

/// Prunes a synthetic instance for every `(α, seed, method)` and records the
/// final layer loss. Rows come back sorted by `α`, seed, then method name.
pub fn run_benchmark(
    alphas: &[f64],
    d: usize,
    seeds: &[u64],
    methods: &[Method],
    cfg: &BenchConfig,
) -> Result<Vec<BenchRow>> {
    let specs = alphas
        .iter()
        .flat_map(|&alpha| seeds.iter().map(move |&seed| SyntheticSpec::new(d, alpha, seed)))
        .collect::<Result<Vec<_>>>()?;
    let instances = specs
        .par_iter()
        .map(|s| gen_synthetic(s).map(|inst| (*s, inst)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<_> = instances
        .iter()
        .flat_map(|inst| methods.iter().map(move |&m| (inst, m)))
        .collect();
    let mut rows = jobs
        .par_iter()
        .map(|((spec, (w_star, h)), method)| {
            let start = Instant::now();
            let out = run_method(*method, w_star, h, cfg)?;
            let runtime_s = start.elapsed().as_secs_f64();
            Ok(BenchRow {
                method: *method,
                alpha: spec.alpha,
                seed: spec.seed,
                loss: layer_loss(&out.w, w_star, h)?,
                runtime_s,
                iterations: out.iterations,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.alpha
            .total_cmp(&b.alpha)
            .then(a.seed.cmp(&b.seed))
            .then(a.method.name().cmp(b.method.name()))
    });
    Ok(rows)
}

pub const BENCH_HEADER: &str = "method,alpha,seed,loss,runtime_s,iterations";

pub fn write_bench_csv(rows: &[BenchRow]) -> String {
    let mut s = format!("{BENCH_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.method, r.alpha, r.seed, r.loss, r.runtime_s, r.iterations
        ));
    }
    s
}
