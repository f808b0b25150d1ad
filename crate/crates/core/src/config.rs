//! JSON run and benchmark documents.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::driver::RunConfig;
use crate::engine::{SplitProblem, Splitting};
use crate::error::{structural, Error, Result};
use crate::graph::{canonical, scheme_from_graph, CanonicalKind, DiGraph, PredecessorMap};
use crate::linalg::BlockVector;
use crate::problems::{
    gen_elastic_net, gen_lasso, ElasticNetParams, LassoSplit, Problem, ProblemDoc, Spectrum,
};
use crate::relocator::RelocatorKind;
use crate::schedule::{RelaxationPlan, StepsizeSchedule, TRule, ZetaRule};
use crate::scheme::{CoefficientScheme, SchemeDoc, DEFAULT_TOL};

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// `{"kind": "sequential", "n": 3}` or `{"n": 3, "arcs": [[1, 2], [2, 3]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CanonicalKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<Vec<(usize, usize)>>,
}

impl GraphSpec {
    pub fn canonical(kind: CanonicalKind, n: usize) -> Self {
        Self {
            n,
            kind: Some(kind),
            arcs: None,
        }
    }

    pub fn build(&self) -> Result<DiGraph> {
        match (&self.kind, &self.arcs) {
            (Some(kind), None) => canonical(*kind, self.n),
            (None, Some(arcs)) => DiGraph::new(self.n, arcs.clone()),
            _ => Err(config_err("graph needs exactly one of 'kind' and 'arcs'")),
        }
    }

    /// Short label, e.g. `sequential-3`.
    pub fn label(&self) -> String {
        match self.kind {
            Some(k) => format!("{k}-{}", self.n),
            None => format!("graph-{}", self.n),
        }
    }
}

/// A stepsize, either absolute or as a multiple of `1/β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    PerBeta { per_beta: f64 },
}

impl GammaSpec {
    pub fn resolve(self, beta: f64) -> f64 {
        match self {
            GammaSpec::Value(v) => v,
            GammaSpec::PerBeta { per_beta } => per_beta / beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleSpec {
    Constant {
        gamma: GammaSpec,
    },
    /// Bounds default to `γ_max = 0.99·2/μ`, `γ_min = 0.1·γ_max`; `γ_0` defaults to
    /// `γ_max` and is clamped into the bounds.
    Safeguard {
        rule: String,
        #[serde(default)]
        accel_c: Option<f64>,
        #[serde(default)]
        gamma0: Option<GammaSpec>,
        #[serde(default)]
        gamma_min: Option<GammaSpec>,
        #[serde(default)]
        gamma_max: Option<GammaSpec>,
        #[serde(default)]
        zeta: ZetaRule<f64>,
    },
}

impl ScheduleSpec {
    pub fn build(&self, beta: f64, mu: f64) -> Result<StepsizeSchedule<f64>> {
        match self {
            ScheduleSpec::Constant { gamma } => StepsizeSchedule::constant(gamma.resolve(beta)),
            ScheduleSpec::Safeguard {
                rule,
                accel_c,
                gamma0,
                gamma_min,
                gamma_max,
                zeta,
            } => {
                let mut t_rule = TRule::from_str(rule)?;
                if let (TRule::Accel { c }, Some(v)) = (&mut t_rule, accel_c) {
                    *c = *v;
                }
                let gmax = gamma_max.map_or(0.99 * 2.0 / mu, |g| g.resolve(beta));
                let gmin = gamma_min.map_or(0.1 * gmax, |g| g.resolve(beta));
                let g0 = gamma0.map_or(gmax, |g| g.resolve(beta)).max(gmin).min(gmax);
                Ok(StepsizeSchedule::Safeguard(crate::schedule::Safeguard::new(
                    g0, gmin, gmax, *zeta, t_rule,
                )?))
            }
        }
    }

    /// Short label, e.g. `const-1` or `safeguard-accel`.
    pub fn label(&self) -> String {
        match self {
            ScheduleSpec::Constant {
                gamma: GammaSpec::PerBeta { per_beta },
            } => format!("const-{per_beta}/beta"),
            ScheduleSpec::Constant {
                gamma: GammaSpec::Value(v),
            } => format!("const-{v}"),
            ScheduleSpec::Safeguard { rule, .. } => format!("safeguard-{rule}"),
        }
    }
}

/// Generated or inline problem data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Lasso {
        q: usize,
        d: usize,
        seed: u64,
        #[serde(default)]
        spectrum: Spectrum,
        #[serde(default)]
        lam: Option<f64>,
        #[serde(default)]
        u: Option<f64>,
        #[serde(default)]
        half_quadratic: bool,
        #[serde(default)]
        split: LassoSplit,
    },
    ElasticNet {
        q: usize,
        d: usize,
        seed: u64,
        #[serde(default)]
        n_corr: usize,
        #[serde(default)]
        noise_sd: f64,
        #[serde(default)]
        exp_rate: Option<f64>,
        #[serde(default)]
        jitter: Option<f64>,
        #[serde(default)]
        lam1: Option<f64>,
        #[serde(default)]
        lam2: Option<f64>,
    },
    Inline {
        data: ProblemDoc,
        #[serde(default)]
        split: LassoSplit,
    },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Problem> {
        match self {
            ProblemSpec::Lasso {
                q,
                d,
                seed,
                spectrum,
                lam,
                u,
                half_quadratic,
                ..
            } => {
                let mut p = gen_lasso(*q, *d, *seed, *spectrum)?;
                p.lam = lam.unwrap_or(p.lam);
                p.u = u.unwrap_or(p.u);
                if !(p.lam > 0.0) || !(p.u > 0.0) {
                    return Err(crate::error::parameter("λ and u must be positive"));
                }
                p.half_quadratic = *half_quadratic;
                Ok(Problem::Lasso(p))
            }
            ProblemSpec::ElasticNet {
                q,
                d,
                seed,
                n_corr,
                noise_sd,
                exp_rate,
                jitter,
                lam1,
                lam2,
            } => {
                let def = ElasticNetParams::default();
                let params = ElasticNetParams {
                    n_corr: *n_corr,
                    noise_sd: *noise_sd,
                    exp_rate: *exp_rate,
                    jitter: jitter.unwrap_or(def.jitter),
                    lam1: lam1.unwrap_or(def.lam1),
                    lam2: lam2.unwrap_or(def.lam2),
                };
                Ok(Problem::ElasticNet(gen_elastic_net(*q, *d, *seed, params)?))
            }
            ProblemSpec::Inline { data, .. } => Problem::from_doc(data),
        }
    }

    pub fn lasso_split(&self) -> LassoSplit {
        match self {
            ProblemSpec::Lasso { split, .. } | ProblemSpec::Inline { split, .. } => *split,
            ProblemSpec::ElasticNet { .. } => LassoSplit::Literal,
        }
    }
}

/// Initial point: zeros, or i.i.d. standard normal entries from a seed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    #[default]
    Zeros,
    Random {
        seed: u64,
    },
}

impl InitSpec {
    pub fn build(&self, blocks: usize, dim: usize) -> BlockVector<f64> {
        match self {
            InitSpec::Zeros => BlockVector::zeros(blocks, dim),
            InitSpec::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let data = (0..blocks * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                BlockVector::from_flat(data, blocks, dim).expect("sizes agree")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub max_iters: usize,
    pub fix_res_tol: f64,
    pub record_every: usize,
    pub z0: InitSpec,
    /// Fill `rel_err_x` / `rel_err_f` from a reference run of `20 × max_iters` iterations.
    pub reference: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            max_iters: 1000,
            fix_res_tol: 1e-10,
            record_every: 1,
            z0: InitSpec::Zeros,
            reference: false,
        }
    }
}

/// `"auto"` or a relocator kind name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelocatorSpec(pub String);

impl Default for RelocatorSpec {
    fn default() -> Self {
        RelocatorSpec("auto".into())
    }
}

impl RelocatorSpec {
    /// `auto` picks the cheap kind of the topology, else `general`.
    pub fn resolve(&self, split: &Splitting<f64>) -> Result<RelocatorKind> {
        if self.0 == "auto" {
            Ok(RelocatorKind::cheap_for(split).unwrap_or(RelocatorKind::General))
        } else {
            RelocatorKind::from_str(&self.0)
        }
    }
}

/// The document accepted by `relsplit validate` and `relsplit run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunDocument {
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub scheme: Option<SchemeDoc>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub relocator: RelocatorSpec,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub relaxation: Option<RelaxationPlan<f64>>,
    #[serde(default)]
    pub run: RunSpec,
}

/// Everything needed to call [`crate::driver::run`].
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: Splitting<f64>,
    pub problem: Problem,
    pub lasso_split: LassoSplit,
    pub prob: SplitProblem<f64>,
    pub cfg: RunConfig<f64>,
    pub z0: BlockVector<f64>,
    pub run: RunSpec,
}

impl RunDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("ill-formed config: {e}")))
    }

    pub fn tol(&self) -> f64 {
        self.tol.unwrap_or(DEFAULT_TOL)
    }

    /// The coefficient scheme, without validating it.
    pub fn scheme(&self) -> Result<CoefficientScheme<f64>> {
        match (&self.graph, &self.scheme) {
            (Some(g), None) => {
                let g = g.build()?;
                scheme_from_graph(&g, &PredecessorMap::with_fallback(&g))
            }
            (None, Some(s)) => CoefficientScheme::from_doc(s),
            _ => Err(config_err("config needs exactly one of 'graph' and 'scheme'")),
        }
    }

    pub fn splitting(&self) -> Result<Splitting<f64>> {
        match (&self.graph, &self.scheme) {
            (Some(g), None) => {
                let g = g.build()?;
                Splitting::from_graph(&g, &PredecessorMap::with_fallback(&g))
            }
            _ => Splitting::from_scheme_tol(self.scheme()?, self.tol()),
        }
    }

    pub fn prepare(&self) -> Result<Prepared> {
        let split = self.splitting()?;
        let spec = self
            .problem
            .as_ref()
            .ok_or_else(|| config_err("config has no 'problem' section"))?;
        let problem = spec.build()?;
        if problem.num_resolvents() != split.n() {
            return Err(structural(format!(
                "problem has {} resolvents but the scheme has n = {}",
                problem.num_resolvents(),
                split.n()
            )));
        }
        let lasso_split = spec.lasso_split();
        let prob = problem.split(lasso_split)?;
        let mu = split.mu(prob.beta);
        let schedule = self
            .schedule
            .as_ref()
            .ok_or_else(|| config_err("config has no 'schedule' section"))?
            .build(prob.beta, mu)?;
        let kind = self.relocator.resolve(&split)?;
        let mut cfg = RunConfig::new(kind, schedule);
        if let Some(r) = self.relaxation {
            cfg.relaxation = r;
        }
        cfg.max_iters = self.run.max_iters;
        cfg.fix_res_tol = self.run.fix_res_tol;
        cfg.record_every = self.run.record_every;
        cfg.keep_iterates = self.run.reference;
        cfg.validate()?;
        let z0 = self.run.z0.build(split.m(), prob.dim);
        Ok(Prepared {
            split,
            problem,
            lasso_split,
            prob,
            cfg,
            z0,
            run: self.run,
        })
    }
}

/// One method of a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub relocator: RelocatorSpec,
    #[serde(default)]
    pub relaxation: Option<RelaxationPlan<f64>>,
}

impl MethodSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.schedule.label())
    }
}

/// The document accepted by `relsplit bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub problem: ProblemSpec,
    /// Defaults to the two-node chain for LASSO and the sequential chain for elastic net.
    #[serde(default)]
    pub graphs: Vec<GraphSpec>,
    #[serde(default = "BenchSpec::default_methods")]
    pub methods: Vec<MethodSpec>,
    pub budget: usize,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub fix_res_tol: Option<f64>,
    #[serde(default)]
    pub z0: InitSpec,
    pub out_dir: String,
}

impl BenchSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| config_err(format!("ill-formed benchmark spec: {e}")))?;
        if spec.methods.is_empty() {
            return Err(config_err("benchmark needs at least one method"));
        }
        if spec.budget < 1 {
            return Err(config_err("benchmark budget must be at least 1"));
        }
        Ok(spec)
    }

    /// Constant `γ ∈ {0.1, 1, 1.99}/β` and the three safeguard rules.
    pub fn default_methods() -> Vec<MethodSpec> {
        let constant = |c: f64| MethodSpec {
            name: None,
            schedule: ScheduleSpec::Constant {
                gamma: GammaSpec::PerBeta { per_beta: c },
            },
            relocator: RelocatorSpec::default(),
            relaxation: None,
        };
        let safeguard = |rule: &str| MethodSpec {
            name: None,
            schedule: ScheduleSpec::Safeguard {
                rule: rule.into(),
                accel_c: None,
                gamma0: Some(GammaSpec::PerBeta { per_beta: 1.0 }),
                gamma_min: None,
                gamma_max: None,
                zeta: ZetaRule::default(),
            },
            relocator: RelocatorSpec::default(),
            relaxation: None,
        };
        vec![
            constant(0.1),
            constant(1.0),
            constant(1.99),
            safeguard("norm-ratio"),
            safeguard("accel"),
            safeguard("harmonic"),
        ]
    }

    pub fn graphs(&self, problem: &Problem) -> Vec<GraphSpec> {
        if !self.graphs.is_empty() {
            return self.graphs.clone();
        }
        vec![GraphSpec::canonical(CanonicalKind::Sequential, problem.num_resolvents())]
    }

    /// The run document of one (graph, method) pair.
    pub fn run_document(&self, graph: &GraphSpec, method: &MethodSpec) -> RunDocument {
        let def = RunSpec::default();
        RunDocument {
            graph: Some(graph.clone()),
            scheme: None,
            tol: None,
            problem: Some(self.problem.clone()),
            relocator: method.relocator.clone(),
            schedule: Some(method.schedule.clone()),
            relaxation: method.relaxation,
            run: RunSpec {
                max_iters: self.budget,
                fix_res_tol: self.fix_res_tol.unwrap_or(def.fix_res_tol),
                record_every: self.record_every.unwrap_or(def.record_every),
                z0: self.z0,
                reference: true,
            },
        }
    }
}
