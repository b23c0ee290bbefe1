//! Prepare-and-measure and Bell behaviours, their validation, and the matrix
//! arrangements every witness works on.
//!
//! All indices are 0-based. The 1-based formulas of the underlying model are
//! translated next to each arrangement below.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{homogeneous_kind, joint_kind, Scalar, ScalarKind};

/// Default absolute tolerance for float validation.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-12;

/// Prepare-and-measure scenario: `|X|` preparations, `|Y|` measurements, binary outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PmScenario {
    n_inputs_a: usize,
    n_inputs_b: usize,
}

impl PmScenario {
    pub const N_OUTPUTS: usize = 2;

    pub fn new(n_inputs_a: usize, n_inputs_b: usize) -> Result<PmScenario> {
        if n_inputs_a == 0 || n_inputs_b == 0 {
            return Err(Error::InvalidScenario(format!(
                "input alphabets must be non-empty (|X|={n_inputs_a}, |Y|={n_inputs_b})"
            )));
        }
        Ok(PmScenario { n_inputs_a, n_inputs_b })
    }

    /// `|X|`.
    pub fn n_inputs_a(&self) -> usize {
        self.n_inputs_a
    }

    /// `|Y|`.
    pub fn n_inputs_b(&self) -> usize {
        self.n_inputs_b
    }

    /// Largest rank a behaviour matrix can have: `min(|X|, |Y| + 1)`.
    pub fn max_rank(&self) -> usize {
        self.n_inputs_a.min(self.n_inputs_b + 1)
    }
}

/// Bell scenario `(m, n)`: `m` inputs and `n` outputs per party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BellScenario {
    m: usize,
    n: usize,
}

impl BellScenario {
    pub fn new(m: usize, n: usize) -> Result<BellScenario> {
        if m == 0 || n < 2 {
            return Err(Error::InvalidScenario(format!(
                "Bell scenario needs m >= 1 and n >= 2 (got m={m}, n={n})"
            )));
        }
        Ok(BellScenario { m, n })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest rank of a no-signaling behaviour matrix: `mn - m + 1`.
    pub fn max_rank(&self) -> usize {
        self.m * self.n - self.m + 1
    }
}

/// Conditional probabilities `P(b|xy)`, stored flat in `(b, x, y)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct PmBehaviour {
    scenario: PmScenario,
    probs: Vec<Scalar>,
}

impl PmBehaviour {
    /// Wraps a flat `(b, x, y)` array. Checks shape and scalar homogeneity only;
    /// probability constraints are checked by [`validate_pm`].
    pub fn new(scenario: PmScenario, probs: Vec<Scalar>) -> Result<PmBehaviour> {
        let expected = 2 * scenario.n_inputs_a * scenario.n_inputs_b;
        if probs.len() != expected {
            return Err(Error::Structural(format!(
                "expected {expected} probabilities for scenario {}x{}, got {}",
                scenario.n_inputs_a,
                scenario.n_inputs_b,
                probs.len()
            )));
        }
        if homogeneous_kind(&probs).is_none() {
            return Err(Error::WrongMode("behaviour mixes exact and float entries".into()));
        }
        Ok(PmBehaviour { scenario, probs })
    }

    pub fn from_fn(scenario: PmScenario, mut f: impl FnMut(usize, usize, usize) -> Scalar) -> Result<PmBehaviour> {
        let mut probs = Vec::with_capacity(2 * scenario.n_inputs_a * scenario.n_inputs_b);
        for b in 0..2 {
            for x in 0..scenario.n_inputs_a {
                for y in 0..scenario.n_inputs_b {
                    probs.push(f(b, x, y));
                }
            }
        }
        PmBehaviour::new(scenario, probs)
    }

    /// Builds a behaviour from `P(0|xy)`, setting `P(1|xy) = 1 - P(0|xy)`.
    pub fn from_p0(scenario: PmScenario, mut p0: impl FnMut(usize, usize) -> Scalar) -> Result<PmBehaviour> {
        let table: Vec<Scalar> = (0..scenario.n_inputs_a)
            .flat_map(|x| (0..scenario.n_inputs_b).map(move |y| (x, y)))
            .map(|(x, y)| p0(x, y))
            .collect();
        let ny = scenario.n_inputs_b;
        PmBehaviour::from_fn(scenario, |b, x, y| {
            let v = &table[x * ny + y];
            if b == 0 {
                v.clone()
            } else {
                &Scalar::one(v.kind()) - v
            }
        })
    }

    pub fn scenario(&self) -> PmScenario {
        self.scenario
    }

    pub fn kind(&self) -> ScalarKind {
        self.probs[0].kind()
    }

    pub fn probs(&self) -> &[Scalar] {
        &self.probs
    }

    pub fn get(&self, b: usize, x: usize, y: usize) -> &Scalar {
        let s = &self.scenario;
        &self.probs[(b * s.n_inputs_a + x) * s.n_inputs_b + y]
    }

    pub fn to_kind(&self, kind: ScalarKind) -> Result<PmBehaviour> {
        let probs = self.probs.iter().map(|v| v.to_kind(kind)).collect::<Result<_>>()?;
        Ok(PmBehaviour { scenario: self.scenario, probs })
    }
}

/// Conditional probabilities `P(ab|xy)`, stored flat in `(a, b, x, y)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct BellBehaviour {
    scenario: BellScenario,
    probs: Vec<Scalar>,
}

impl BellBehaviour {
    pub fn new(scenario: BellScenario, probs: Vec<Scalar>) -> Result<BellBehaviour> {
        let (m, n) = (scenario.m, scenario.n);
        let expected = n * n * m * m;
        if probs.len() != expected {
            return Err(Error::Structural(format!(
                "expected {expected} probabilities for Bell scenario ({m},{n}), got {}",
                probs.len()
            )));
        }
        if homogeneous_kind(&probs).is_none() {
            return Err(Error::WrongMode("behaviour mixes exact and float entries".into()));
        }
        Ok(BellBehaviour { scenario, probs })
    }

    pub fn from_fn(
        scenario: BellScenario,
        mut f: impl FnMut(usize, usize, usize, usize) -> Scalar,
    ) -> Result<BellBehaviour> {
        let (m, n) = (scenario.m, scenario.n);
        let mut probs = Vec::with_capacity(n * n * m * m);
        for a in 0..n {
            for b in 0..n {
                for x in 0..m {
                    for y in 0..m {
                        probs.push(f(a, b, x, y));
                    }
                }
            }
        }
        BellBehaviour::new(scenario, probs)
    }

    pub fn scenario(&self) -> BellScenario {
        self.scenario
    }

    pub fn kind(&self) -> ScalarKind {
        self.probs[0].kind()
    }

    pub fn probs(&self) -> &[Scalar] {
        &self.probs
    }

    pub fn get(&self, a: usize, b: usize, x: usize, y: usize) -> &Scalar {
        let (m, n) = (self.scenario.m, self.scenario.n);
        &self.probs[((a * n + b) * m + x) * m + y]
    }

    pub fn to_kind(&self, kind: ScalarKind) -> Result<BellBehaviour> {
        let probs = self.probs.iter().map(|v| v.to_kind(kind)).collect::<Result<_>>()?;
        Ok(BellBehaviour { scenario: self.scenario, probs })
    }
}

/// Either kind of behaviour, as read from or written to JSON.
#[derive(Clone, Debug, PartialEq)]
pub enum Behaviour {
    Pm(PmBehaviour),
    Bell(BellBehaviour),
}

impl Behaviour {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Behaviour::Pm(b) => b.kind(),
            Behaviour::Bell(b) => b.kind(),
        }
    }
}

/// A single violated constraint.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Violation {
    /// Entry below zero; `index` is `(b,x,y)` or `(a,b,x,y)`.
    Negative { index: Vec<usize>, value: f64 },
    /// Outcome probabilities for inputs `(x, y)` do not sum to one.
    Normalization { x: usize, y: usize, sum: f64 },
    /// Alice's marginal for `(a, x)` changes between Bob's inputs `y` and `y2`.
    SignalingToAlice { a: usize, x: usize, y: usize, y2: usize, difference: f64 },
    /// Bob's marginal for `(b, y)` changes between Alice's inputs `x` and `x2`.
    SignalingToBob { b: usize, x: usize, x2: usize, y: usize, difference: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { index, value } => {
                let idx: Vec<String> = index.iter().map(|i| i.to_string()).collect();
                write!(f, "negative entry at ({}): {value}", idx.join(","))
            }
            Violation::Normalization { x, y, sum } => {
                write!(f, "normalization at ({x},{y}), sum {sum}")
            }
            Violation::SignalingToAlice { a, x, y, y2, difference } => write!(
                f,
                "no-signaling violated for a={a}, x={x} between y={y} and y'={y2} (difference {difference})"
            ),
            Violation::SignalingToBob { b, x, x2, y, difference } => write!(
                f,
                "no-signaling violated for b={b}, y={y} between x={x} and x'={x2} (difference {difference})"
            ),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(|v| v.to_string()).collect()
    }
}

fn sum<'a>(values: impl IntoIterator<Item = &'a Scalar>, kind: ScalarKind) -> Scalar {
    values.into_iter().fold(Scalar::zero(kind), |acc, v| &acc + v)
}

/// Checks nonnegativity and normalization. Exact behaviours are checked exactly;
/// `tol` applies to float behaviours only.
pub fn validate_pm(beh: &PmBehaviour, tol: f64) -> ValidationReport {
    let s = beh.scenario;
    let kind = beh.kind();
    let one = Scalar::one(kind);
    let mut violations = Vec::new();
    for b in 0..2 {
        for x in 0..s.n_inputs_a {
            for y in 0..s.n_inputs_b {
                let v = beh.get(b, x, y);
                if v.is_negative_beyond(tol) || !v.is_finite() {
                    violations.push(Violation::Negative { index: vec![b, x, y], value: v.to_f64() });
                }
            }
        }
    }
    for x in 0..s.n_inputs_a {
        for y in 0..s.n_inputs_b {
            let total = beh.get(0, x, y) + beh.get(1, x, y);
            if total.differs_from(&one, tol) || !total.is_finite() {
                violations.push(Violation::Normalization { x, y, sum: total.to_f64() });
            }
        }
    }
    ValidationReport { violations }
}

/// Checks nonnegativity, normalization and both no-signaling families.
pub fn validate_bell(beh: &BellBehaviour, tol: f64) -> ValidationReport {
    let BellScenario { m, n } = beh.scenario;
    let kind = beh.kind();
    let one = Scalar::one(kind);
    let mut violations = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for x in 0..m {
                for y in 0..m {
                    let v = beh.get(a, b, x, y);
                    if v.is_negative_beyond(tol) || !v.is_finite() {
                        violations.push(Violation::Negative { index: vec![a, b, x, y], value: v.to_f64() });
                    }
                }
            }
        }
    }
    for x in 0..m {
        for y in 0..m {
            let total = sum((0..n).flat_map(|a| (0..n).map(move |b| (a, b))).map(|(a, b)| beh.get(a, b, x, y)), kind);
            if total.differs_from(&one, tol) || !total.is_finite() {
                violations.push(Violation::Normalization { x, y, sum: total.to_f64() });
            }
        }
    }
    // Alice's marginal P(a|xy) = sum_b P(ab|xy) must not depend on y.
    for a in 0..n {
        for x in 0..m {
            let marginals: Vec<Scalar> = (0..m)
                .map(|y| sum((0..n).map(|b| beh.get(a, b, x, y)), kind))
                .collect();
            for y in 0..m {
                for y2 in y + 1..m {
                    if marginals[y].differs_from(&marginals[y2], tol) {
                        violations.push(Violation::SignalingToAlice {
                            a,
                            x,
                            y,
                            y2,
                            difference: (&marginals[y] - &marginals[y2]).to_f64(),
                        });
                    }
                }
            }
        }
    }
    for b in 0..n {
        for y in 0..m {
            let marginals: Vec<Scalar> = (0..m)
                .map(|x| sum((0..n).map(|a| beh.get(a, b, x, y)), kind))
                .collect();
            for x in 0..m {
                for x2 in x + 1..m {
                    if marginals[x].differs_from(&marginals[x2], tol) {
                        violations.push(Violation::SignalingToBob {
                            b,
                            x,
                            x2,
                            y,
                            difference: (&marginals[x] - &marginals[x2]).to_f64(),
                        });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// The `|X| x 2|Y|` matrix with row `x` and column `2y + b` holding `P(b|xy)`.
///
/// This is the 1-based column order `(0|x1) (1|x1) (0|x2) (1|x2) ...` shifted to 0-based.
pub fn pm_matrix(beh: &PmBehaviour) -> Matrix {
    let s = beh.scenario;
    Matrix::from_fn(s.n_inputs_a, 2 * s.n_inputs_b, |x, col| beh.get(col % 2, x, col / 2).clone())
}

/// The `mn x mn` matrix with entry `(x*n + a, y*n + b) = P(ab|xy)`, i.e. `n x n`
/// blocks `P_xy` laid out on an `m x m` grid.
pub fn bell_matrix(beh: &BellBehaviour) -> Matrix {
    let BellScenario { m, n } = beh.scenario;
    Matrix::from_fn(m * n, m * n, |r, c| beh.get(r % n, c % n, r / n, c / n).clone())
}

/// The `k x k` matrix `W(i, j) = P(0 | x=2j, y=i) - P(0 | x=2j+1, y=i)` for `|X| = 2|Y| = 2k`.
///
/// With 1-based indices this is `P(0|2j-1, i) - P(0|2j, i)`.
pub fn w_matrix(beh: &PmBehaviour) -> Result<Matrix> {
    let s = beh.scenario;
    let k = s.n_inputs_b;
    if s.n_inputs_a != 2 * k {
        return Err(Error::UnsupportedScenario(format!(
            "W matrix needs |X| = 2|Y|, got |X|={} and |Y|={k}",
            s.n_inputs_a
        )));
    }
    Ok(Matrix::from_fn(k, k, |i, j| beh.get(0, 2 * j, i) - beh.get(0, 2 * j + 1, i)))
}

/// Behaviour tables that can be convexly combined entrywise.
pub trait Mixable: Sized + Clone {
    type Scenario: PartialEq + Copy + fmt::Debug;

    fn scenario(&self) -> Self::Scenario;
    fn probs(&self) -> &[Scalar];
    fn with_probs(scenario: Self::Scenario, probs: Vec<Scalar>) -> Result<Self>;
}

impl Mixable for PmBehaviour {
    type Scenario = PmScenario;

    fn scenario(&self) -> PmScenario {
        self.scenario
    }
    fn probs(&self) -> &[Scalar] {
        &self.probs
    }
    fn with_probs(scenario: PmScenario, probs: Vec<Scalar>) -> Result<Self> {
        PmBehaviour::new(scenario, probs)
    }
}

impl Mixable for BellBehaviour {
    type Scenario = BellScenario;

    fn scenario(&self) -> BellScenario {
        self.scenario
    }
    fn probs(&self) -> &[Scalar] {
        &self.probs
    }
    fn with_probs(scenario: BellScenario, probs: Vec<Scalar>) -> Result<Self> {
        BellBehaviour::new(scenario, probs)
    }
}

/// Checks that `weights` are a probability distribution: exactly when all are
/// rational, within `1e-12` otherwise.
pub fn check_distribution(weights: &[Scalar]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidWeights("no weights given".into()));
    }
    let kind = joint_kind(weights);
    if let Some(w) = weights.iter().find(|w| w.is_negative_beyond(DEFAULT_VALIDATION_TOL) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {w} is negative")));
    }
    let total = sum(weights, kind);
    if total.differs_from(&Scalar::one(kind), DEFAULT_VALIDATION_TOL) {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Entrywise convex combination. The result is exact iff every behaviour and weight is exact.
pub fn mix<B: Mixable>(behs: &[B], weights: &[Scalar]) -> Result<B> {
    if behs.is_empty() {
        return Err(Error::InvalidWeights("nothing to mix".into()));
    }
    if behs.len() != weights.len() {
        return Err(Error::InvalidWeights(format!(
            "{} behaviours but {} weights",
            behs.len(),
            weights.len()
        )));
    }
    let scenario = behs[0].scenario();
    if let Some(other) = behs.iter().find(|b| b.scenario() != scenario) {
        return Err(Error::Structural(format!(
            "cannot mix behaviours of scenarios {scenario:?} and {:?}",
            other.scenario()
        )));
    }
    check_distribution(weights)?;
    let kind = behs
        .iter()
        .fold(joint_kind(weights), |k, b| k.join(b.probs()[0].kind()));
    let len = behs[0].probs().len();
    let probs = (0..len)
        .map(|i| {
            behs.iter().zip(weights).fold(Scalar::zero(kind), |acc, (b, w)| &acc + &(w * &b.probs()[i]))
        })
        .collect();
    B::with_probs(scenario, probs)
}
