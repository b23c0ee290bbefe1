//! Monte Carlo and exact experiments on the structure of the dimension-bounded sets.
//!
//! Every report is a pure function of its configuration: samples use seeds
//! split from the master seed by index and are assembled in index order.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::behaviour::{
    bell_matrix, pm_matrix, BellScenario, Behaviour, PmBehaviour, PmScenario, DEFAULT_VALIDATION_TOL,
};
use crate::constructions::{d_zero, l_star, l_star_components, p_epsilon};
use crate::error::{Error, Result};
use crate::linalg::{rank, RankMethod, RankMode, RankResult};
use crate::par::map_range;
use crate::sampling::{sample_behaviour, sample_bell_behaviour, PmLaw, Seed};
use crate::scalar::Scalar;
use crate::witness::ceil_sqrt;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rank settings echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankSettings {
    /// `"auto"`, `"exact"` or `"float"`.
    pub method: &'static str,
    /// Relative singular-value tolerance; `None` means `max(rows, cols) * eps`.
    pub tolerance: Option<f64>,
    pub validation_tolerance: f64,
}

impl RankSettings {
    pub fn new(method: RankMethod) -> RankSettings {
        let (name, tolerance) = match method {
            RankMethod::Auto(t) => ("auto", t),
            RankMethod::Exact => ("exact", None),
            RankMethod::Float(t) => ("float", t),
        };
        RankSettings { method: name, tolerance, validation_tolerance: DEFAULT_VALIDATION_TOL }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentScenario {
    Pm { n_inputs_a: usize, n_inputs_b: usize },
    Bell { m: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct NegligibilityConfig {
    pub scenario: ExperimentScenario,
    pub samples: usize,
    pub seed: Seed,
    pub rank: RankMethod,
    /// Behaviours placed in front of the random samples, flagged as planted.
    pub include: Vec<Behaviour>,
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeficientSample {
    pub index: usize,
    pub rank: usize,
    pub planted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NegligibilityReport {
    pub experiment: &'static str,
    pub version: &'static str,
    pub scenario: ExperimentScenario,
    /// How random samples are drawn.
    pub sampler: String,
    pub samples: usize,
    pub planted: usize,
    pub seed: u64,
    pub rank: RankSettings,
    pub rank_modes: Vec<RankMode>,
    pub max_rank: usize,
    pub deficient: usize,
    pub deficient_fraction: f64,
    pub deficient_samples: Vec<DeficientSample>,
    /// Number of samples per observed rank.
    pub rank_histogram: BTreeMap<usize, usize>,
    /// Over float-mode samples at full rank: the smallest ratio of the last
    /// retained singular value to the cutoff.
    pub min_singular_margin: Option<f64>,
    pub note: &'static str,
}

const NEGLIGIBILITY_NOTE: &str =
    "a zero deficient fraction is evidence consistent with measure zero, not a proof of it";

fn behaviour_rank(beh: &Behaviour, method: RankMethod) -> Result<RankResult> {
    match beh {
        Behaviour::Pm(p) => rank(&pm_matrix(p), method),
        Behaviour::Bell(p) => rank(&bell_matrix(p), method),
    }
}

fn margin(r: &RankResult) -> Option<f64> {
    match (&r.singular_values, r.tolerance_used) {
        (Some(sv), Some(tol)) if r.rank > 0 && tol > 0.0 => Some(sv[r.rank - 1] / (tol * sv[0])),
        _ => None,
    }
}

/// Fraction of random behaviours whose matrix rank falls below the scenario maximum.
pub fn negligibility_experiment(cfg: &NegligibilityConfig) -> Result<NegligibilityReport> {
    if cfg.samples == 0 {
        return Err(Error::Precondition("sample count must be at least 1".into()));
    }
    if cfg.include.len() > cfg.samples {
        return Err(Error::Precondition(format!(
            "{} planted behaviours exceed the sample count {}",
            cfg.include.len(),
            cfg.samples
        )));
    }
    let (max_rank, local_dim, sampler) = match cfg.scenario {
        ExperimentScenario::Pm { n_inputs_a, n_inputs_b } => {
            let sc = PmScenario::new(n_inputs_a, n_inputs_b)?;
            (sc.max_rank(), 0, "uniform P(0|xy) in [0, 1]".to_string())
        }
        ExperimentScenario::Bell { m, n } => {
            let sc = BellScenario::new(m, n)?;
            let d = m * n;
            (sc.max_rank(), d, format!("random quantum strategy, local dimensions {d} x {d}"))
        }
    };
    for (i, beh) in cfg.include.iter().enumerate() {
        let matches = match (beh, cfg.scenario) {
            (Behaviour::Pm(p), ExperimentScenario::Pm { n_inputs_a, n_inputs_b }) => {
                p.scenario() == PmScenario::new(n_inputs_a, n_inputs_b)?
            }
            (Behaviour::Bell(p), ExperimentScenario::Bell { m, n }) => p.scenario() == BellScenario::new(m, n)?,
            _ => false,
        };
        if !matches {
            return Err(Error::Structural(format!("planted behaviour {i} does not match the experiment scenario")));
        }
    }
    let planted = cfg.include.len();
    let results = map_range(cfg.samples, cfg.parallel, |i| -> Result<RankResult> {
        if i < planted {
            return behaviour_rank(&cfg.include[i], cfg.rank);
        }
        let seed = cfg.seed.child(i as u64);
        let beh = match cfg.scenario {
            ExperimentScenario::Pm { n_inputs_a, n_inputs_b } => {
                Behaviour::Pm(sample_behaviour(PmScenario::new(n_inputs_a, n_inputs_b)?, PmLaw::Uniform, seed)?)
            }
            ExperimentScenario::Bell { m, n } => {
                Behaviour::Bell(sample_bell_behaviour(BellScenario::new(m, n)?, local_dim, local_dim, seed)?)
            }
        };
        behaviour_rank(&beh, cfg.rank)
    });
    let results = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut rank_histogram = BTreeMap::new();
    let mut deficient_samples = Vec::new();
    let mut rank_modes = Vec::new();
    let mut min_singular_margin: Option<f64> = None;
    for (i, r) in results.iter().enumerate() {
        *rank_histogram.entry(r.rank).or_insert(0) += 1;
        if !rank_modes.contains(&r.mode) {
            rank_modes.push(r.mode);
        }
        if r.rank < max_rank {
            deficient_samples.push(DeficientSample { index: i, rank: r.rank, planted: i < planted });
        } else if let Some(m) = margin(r) {
            min_singular_margin = Some(min_singular_margin.map_or(m, |cur| cur.min(m)));
        }
    }
    let deficient = deficient_samples.len();
    Ok(NegligibilityReport {
        experiment: "negligibility",
        version: VERSION,
        scenario: cfg.scenario,
        sampler,
        samples: cfg.samples,
        planted,
        seed: cfg.seed.0,
        rank: RankSettings::new(cfg.rank),
        rank_modes,
        max_rank,
        deficient,
        deficient_fraction: deficient as f64 / cfg.samples as f64,
        deficient_samples,
        rank_histogram,
        min_singular_margin,
        note: NEGLIGIBILITY_NOTE,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityConfig {
    pub m: usize,
    pub k: usize,
    /// Rank-deficient behaviours to perturb; `D_0` when empty.
    pub behaviours: Vec<PmBehaviour>,
    pub deltas: Vec<Scalar>,
    pub rank: RankMethod,
}

impl DensityConfig {
    /// `delta` in `{10^-1, ..., 10^-6}` with `P = D_0`.
    pub fn standard(m: usize, k: usize) -> DensityConfig {
        DensityConfig {
            m,
            k,
            behaviours: Vec::new(),
            deltas: (1..=6).map(|j| Scalar::ratio(1, 10i64.pow(j))).collect(),
            rank: RankMethod::Auto(None),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRow {
    pub delta: Scalar,
    pub epsilon: Option<Scalar>,
    /// `max |P - P_eps|` entrywise.
    pub distance: Option<Scalar>,
    pub rank: Option<usize>,
    pub success: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityCase {
    pub behaviour: usize,
    pub base_rank: usize,
    /// `eps = 0` control: the unperturbed behaviour keeps its deficient rank.
    pub control_rank: usize,
    pub rows: Vec<DensityRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    pub experiment: &'static str,
    pub version: &'static str,
    pub m: usize,
    pub k: usize,
    pub target_rank: usize,
    pub rank: RankSettings,
    pub epsilon_rule: &'static str,
    pub cases: Vec<DensityCase>,
    pub all_succeeded: bool,
}

const EPSILON_CANDIDATES: i64 = 16;

fn max_abs_diff(a: &PmBehaviour, b: &PmBehaviour) -> Scalar {
    let mut best = Scalar::zero(a.kind().join(b.kind()));
    for (x, y) in a.probs().iter().zip(b.probs()) {
        let d = (x - y).abs();
        if (&best - &d).is_negative_beyond(0.0) {
            best = d;
        }
    }
    best
}

/// For each deficient `P` and `delta`, finds `eps` with `|P - P_eps|_max < delta`
/// and `rank P_eps = k + 1`, where `P_eps = (1 - eps) P + eps Q`.
pub fn density_restoration_experiment(cfg: &DensityConfig) -> Result<DensityReport> {
    if cfg.m < cfg.k + 1 || cfg.k == 0 {
        return Err(Error::Precondition(format!("need k >= 1 and m >= k + 1, got m={}, k={}", cfg.m, cfg.k)));
    }
    if cfg.deltas.is_empty() {
        return Err(Error::Precondition("no delta values given".into()));
    }
    if let Some(d) = cfg.deltas.iter().find(|d| !(d.to_f64() > 0.0)) {
        return Err(Error::Precondition(format!("delta must be positive, got {d}")));
    }
    let behaviours = if cfg.behaviours.is_empty() { vec![d_zero(cfg.m, cfg.k)?] } else { cfg.behaviours.clone() };
    let scenario = PmScenario::new(cfg.m, cfg.k)?;
    let target = cfg.k + 1;
    let mut cases = Vec::new();
    for (bi, p) in behaviours.iter().enumerate() {
        if p.scenario() != scenario {
            return Err(Error::Structural(format!("behaviour {bi} is not in the ({}, {}) scenario", cfg.m, cfg.k)));
        }
        let base_rank = rank(&pm_matrix(p), cfg.rank)?.rank;
        let control_rank = rank(&pm_matrix(&p_epsilon(p, &Scalar::zero(p.kind()))?), cfg.rank)?.rank;
        let mut rows = Vec::new();
        for delta in &cfg.deltas {
            let mut row = DensityRow { delta: delta.clone(), epsilon: None, distance: None, rank: None, success: false };
            for j in 1..=EPSILON_CANDIDATES {
                let eps = delta * &Scalar::ratio(1, 10 * j);
                let pe = p_epsilon(p, &eps)?;
                let r = rank(&pm_matrix(&pe), cfg.rank)?.rank;
                let dist = max_abs_diff(p, &pe);
                let close = (&dist - delta).is_negative_beyond(0.0);
                row = DensityRow { delta: delta.clone(), epsilon: Some(eps), distance: Some(dist), rank: Some(r), success: close && r == target };
                if row.success {
                    break;
                }
            }
            rows.push(row);
        }
        cases.push(DensityCase { behaviour: bi, base_rank, control_rank, rows });
    }
    let all_succeeded = cases.iter().all(|c| c.rows.iter().all(|r| r.success));
    Ok(DensityReport {
        experiment: "density",
        version: VERSION,
        m: cfg.m,
        k: cfg.k,
        target_rank: target,
        rank: RankSettings::new(cfg.rank),
        epsilon_rule: "eps = delta / (10 j) for the first j = 1..16 reaching full rank",
        cases,
        all_succeeded,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LdbTerm {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
    pub weight: Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonconvexityReport {
    pub experiment: &'static str,
    pub version: &'static str,
    pub m: usize,
    pub n: usize,
    pub rank: usize,
    pub rank_mode: RankMode,
    /// `ceil(sqrt(rank)) - 1`: the largest `d` excluded by the rank.
    pub threshold: usize,
    /// Every `d` with `d^2 < rank`: `L` is outside these sets yet inside their convex hull.
    pub nonconvex_d: Vec<usize>,
    /// The rank argument says nothing about any `d >= 2`.
    pub silent_for_d_ge_2: bool,
    pub note: String,
    /// Local deterministic behaviours whose uniform mixture is `L`.
    pub mixture: Vec<LdbTerm>,
}

/// The maximal-rank local behaviour `L` and the dimensions whose sets it shows to be non-convex.
pub fn nonconvexity_report(m: usize, n: usize) -> Result<NonconvexityReport> {
    BellScenario::new(m, n)?;
    let l = l_star(m, n)?;
    let r = rank(&bell_matrix(&l), RankMethod::Exact)?;
    let threshold = ceil_sqrt(r.rank) - 1;
    let nonconvex_d: Vec<usize> = (1..=threshold).collect();
    let silent = threshold < 2;
    let note = if silent {
        format!(
            "rank {} allows local dimension 2 (2^2 >= {}); the rank method is silent for d >= 2 in this scenario",
            r.rank, r.rank
        )
    } else {
        format!("L lies in the convex hull of local deterministic behaviours but outside Q_d for d <= {threshold}")
    };
    let comps = l_star_components(m, n);
    let w = Scalar::ratio(1, comps.len() as i64);
    let mixture = comps.into_iter().map(|(f, g)| LdbTerm { f, g, weight: w.clone() }).collect();
    Ok(NonconvexityReport {
        experiment: "nonconvexity",
        version: VERSION,
        m,
        n,
        rank: r.rank,
        rank_mode: r.mode,
        threshold,
        nonconvex_d,
        silent_for_d_ge_2: silent,
        note,
        mixture,
    })
}
