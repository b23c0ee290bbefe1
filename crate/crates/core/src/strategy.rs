//! Classical and quantum strategies and the behaviours they generate.

use num_complex::Complex64;

use crate::behaviour::{BellBehaviour, BellScenario, PmBehaviour, PmScenario};
use crate::error::{Error, Result};
use crate::quantum::{
    check_psd, direct_sum, hermitize, normalize_povm, partial_traces, real_trace, support_rank,
    trace_product, CMatrix, PovmLaw, OPERATOR_TOL,
};
use crate::scalar::{joint_kind, Scalar, ScalarKind};

/// Slack for stochasticity of float classical strategies.
pub const STOCHASTIC_TOL: f64 = 1e-10;

/// Classical message strategy: sender `s(m|x)`, responder `t(b|m y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPmStrategy {
    d: usize,
    n_inputs_a: usize,
    n_inputs_b: usize,
    /// `s[x * d + m]`
    s: Vec<Scalar>,
    /// `t[(m * |Y| + y) * 2 + b]`
    t: Vec<Scalar>,
}

fn check_stochastic(values: &[Scalar], what: &str) -> Result<()> {
    let kind = joint_kind(values);
    if let Some(v) = values.iter().find(|v| v.is_negative_beyond(STOCHASTIC_TOL) || !v.is_finite()) {
        return Err(Error::InvalidStrategy(format!("{what} has invalid entry {v}")));
    }
    let total = values.iter().fold(Scalar::zero(kind), |a, v| &a + v);
    if total.differs_from(&Scalar::one(kind), STOCHASTIC_TOL) {
        return Err(Error::InvalidStrategy(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

impl ClassicalPmStrategy {
    /// `s` is indexed `[x][m]`, `t` is indexed `[m][y][b]`.
    pub fn new(d: usize, s: Vec<Vec<Scalar>>, t: Vec<Vec<Vec<Scalar>>>) -> Result<ClassicalPmStrategy> {
        if d == 0 {
            return Err(Error::InvalidStrategy("message dimension must be positive".into()));
        }
        if s.is_empty() || s.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidStrategy(format!("sender table must have rows of length d={d}")));
        }
        if t.len() != d || t[0].is_empty() || t.iter().any(|row| row.len() != t[0].len() || row.iter().any(|p| p.len() != 2)) {
            return Err(Error::InvalidStrategy(format!(
                "responder table must be d={d} x |Y| x 2"
            )));
        }
        for (x, row) in s.iter().enumerate() {
            check_stochastic(row, &format!("s(.|x={x})"))?;
        }
        for (m, row) in t.iter().enumerate() {
            for (y, pair) in row.iter().enumerate() {
                check_stochastic(pair, &format!("t(.|m={m}, y={y})"))?;
            }
        }
        let n_inputs_a = s.len();
        let n_inputs_b = t[0].len();
        let s: Vec<Scalar> = s.into_iter().flatten().collect();
        let t: Vec<Scalar> = t.into_iter().flatten().flatten().collect();
        let kind = joint_kind(&s).join(joint_kind(&t));
        let promote = |v: Vec<Scalar>| -> Vec<Scalar> {
            v.into_iter().map(|x| x.to_kind(kind).expect("promotion")).collect()
        };
        Ok(ClassicalPmStrategy { d, n_inputs_a, n_inputs_b, s: promote(s), t: promote(t) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scenario(&self) -> PmScenario {
        PmScenario::new(self.n_inputs_a, self.n_inputs_b).expect("non-empty tables")
    }

    pub fn kind(&self) -> ScalarKind {
        self.s[0].kind()
    }

    pub fn sender(&self, m: usize, x: usize) -> &Scalar {
        &self.s[x * self.d + m]
    }

    pub fn responder(&self, b: usize, m: usize, y: usize) -> &Scalar {
        &self.t[(m * self.n_inputs_b + y) * 2 + b]
    }

    /// Nested `[x][m]` sender table.
    pub fn sender_table(&self) -> Vec<Vec<Scalar>> {
        self.s.chunks(self.d).map(<[Scalar]>::to_vec).collect()
    }

    /// Nested `[m][y][b]` responder table.
    pub fn responder_table(&self) -> Vec<Vec<Vec<Scalar>>> {
        self.t
            .chunks(2 * self.n_inputs_b)
            .map(|row| row.chunks(2).map(<[Scalar]>::to_vec).collect())
            .collect()
    }
}

/// `P(b|xy) = sum_m s(m|x) t(b|m y)`.
pub fn simulate_classical_pm(st: &ClassicalPmStrategy, scenario: PmScenario) -> Result<PmBehaviour> {
    if st.scenario() != scenario {
        return Err(Error::Structural(format!(
            "strategy is for {:?}, scenario is {scenario:?}",
            st.scenario()
        )));
    }
    let kind = st.kind();
    PmBehaviour::from_fn(scenario, |b, x, y| {
        (0..st.d).fold(Scalar::zero(kind), |acc, m| &acc + &(st.sender(m, x) * st.responder(b, m, y)))
    })
}

/// Quantum message strategy: states `rho_x` on `C^d`, binary measurements `Pi_b^y`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumPmStrategy {
    d: usize,
    states: Vec<CMatrix>,
    povms: Vec<Vec<CMatrix>>,
    povm_law: Option<PovmLaw>,
}

fn checked_state(rho: &CMatrix, d: usize, what: &str) -> Result<CMatrix> {
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::InvalidStrategy(format!("{what} is not {d}x{d}")));
    }
    let rho = hermitize(rho, what)?;
    check_psd(&rho, what)?;
    let tr = real_trace(&rho);
    if (tr - 1.0).abs() > OPERATOR_TOL {
        return Err(Error::InvalidStrategy(format!("{what} has trace {tr}, not 1")));
    }
    Ok(rho.map(|z| z / tr))
}

fn checked_measurement(ops: &[CMatrix], d: usize, what: &str) -> Result<Vec<CMatrix>> {
    let ops = ops
        .iter()
        .enumerate()
        .map(|(b, e)| {
            let name = format!("{what} element {b}");
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::InvalidStrategy(format!("{name} is not {d}x{d}")));
            }
            let e = hermitize(e, &name)?;
            check_psd(&e, &name)?;
            Ok(e)
        })
        .collect::<Result<Vec<_>>>()?;
    let total = ops.iter().fold(CMatrix::zeros(d, d), |a, e| a + e);
    let dev = (total - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > OPERATOR_TOL {
        return Err(Error::InvalidStrategy(format!("{what} does not sum to the identity (deviation {dev:e})")));
    }
    normalize_povm(&ops)
}

impl QuantumPmStrategy {
    /// `povms[y]` holds the two elements `Pi_0^y, Pi_1^y`. States are rescaled to
    /// unit trace and measurements to exact completeness after validation.
    pub fn new(d: usize, states: Vec<CMatrix>, povms: Vec<Vec<CMatrix>>) -> Result<QuantumPmStrategy> {
        if d == 0 || states.is_empty() || povms.is_empty() {
            return Err(Error::InvalidStrategy("need d >= 1, at least one state and one measurement".into()));
        }
        let states = states
            .iter()
            .enumerate()
            .map(|(x, rho)| checked_state(rho, d, &format!("state {x}")))
            .collect::<Result<Vec<_>>>()?;
        let povms = povms
            .iter()
            .enumerate()
            .map(|(y, ops)| {
                if ops.len() != PmScenario::N_OUTPUTS {
                    return Err(Error::InvalidStrategy(format!(
                        "measurement {y} has {} outcomes, prepare-and-measure outputs are binary",
                        ops.len()
                    )));
                }
                checked_measurement(ops, d, &format!("measurement {y}"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuantumPmStrategy { d, states, povms, povm_law: None })
    }

    pub fn with_povm_law(mut self, law: PovmLaw) -> Self {
        self.povm_law = Some(law);
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn states(&self) -> &[CMatrix] {
        &self.states
    }

    pub fn povms(&self) -> &[Vec<CMatrix>] {
        &self.povms
    }

    pub fn povm_law(&self) -> Option<PovmLaw> {
        self.povm_law
    }

    pub fn scenario(&self) -> PmScenario {
        PmScenario::new(self.states.len(), self.povms.len()).expect("non-empty")
    }
}

fn clip_probability(p: f64, what: &str) -> Result<f64> {
    if !(-OPERATOR_TOL..=1.0 + OPERATOR_TOL).contains(&p) {
        return Err(Error::InvalidStrategy(format!("{what} evaluates to probability {p}")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `P(b|xy) = tr(rho_x Pi_b^y)`, as floats.
pub fn simulate_quantum_pm(st: &QuantumPmStrategy, scenario: PmScenario) -> Result<PmBehaviour> {
    if st.scenario() != scenario {
        return Err(Error::Structural(format!(
            "strategy is for {:?}, scenario is {scenario:?}",
            st.scenario()
        )));
    }
    let (nx, ny) = (scenario.n_inputs_a(), scenario.n_inputs_b());
    let mut table = vec![[0.0f64; 2]; nx * ny];
    for x in 0..nx {
        for y in 0..ny {
            let mut pair = [0.0; 2];
            for (b, slot) in pair.iter_mut().enumerate() {
                let p = trace_product(&st.states[x], &st.povms[y][b]).re;
                *slot = clip_probability(p, &format!("P({b}|{x}{y})"))?;
            }
            let total = pair[0] + pair[1];
            table[x * ny + y] = [pair[0] / total, pair[1] / total];
        }
    }
    PmBehaviour::from_fn(scenario, |b, x, y| Scalar::Float(table[x * ny + y][b]))
}

/// Dimension of the joint support of the states: rank of `sum_x rho_x`.
pub fn message_dimension(states: &[CMatrix]) -> Result<usize> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidStrategy("no states given".into()))?;
    let d = first.nrows();
    let mut total = CMatrix::zeros(d, d);
    for (x, rho) in states.iter().enumerate() {
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::InvalidStrategy(format!("state {x} has mismatched size")));
        }
        let rho = hermitize(rho, &format!("state {x}"))?;
        check_psd(&rho, &format!("state {x}"))?;
        total += rho;
    }
    Ok(support_rank(&total))
}

/// Bipartite strategy: shared state on `C^dA (x) C^dB`, local measurements `E_a^x`, `F_b^y`.
#[derive(Clone, Debug, PartialEq)]
pub struct BellQuantumStrategy {
    d_a: usize,
    d_b: usize,
    state: CMatrix,
    meas_a: Vec<Vec<CMatrix>>,
    meas_b: Vec<Vec<CMatrix>>,
    povm_laws: Option<(PovmLaw, PovmLaw)>,
}

impl BellQuantumStrategy {
    pub fn new(
        d_a: usize,
        d_b: usize,
        state: CMatrix,
        meas_a: Vec<Vec<CMatrix>>,
        meas_b: Vec<Vec<CMatrix>>,
    ) -> Result<BellQuantumStrategy> {
        if d_a == 0 || d_b == 0 {
            return Err(Error::InvalidStrategy("local dimensions must be positive".into()));
        }
        if meas_a.is_empty() || meas_a.len() != meas_b.len() {
            return Err(Error::InvalidStrategy("both parties need the same, non-zero number of inputs".into()));
        }
        let n = meas_a[0].len();
        if n < 2 || meas_a.iter().chain(&meas_b).any(|ops| ops.len() != n) {
            return Err(Error::InvalidStrategy("every measurement needs the same number (>= 2) of outcomes".into()));
        }
        let state = checked_state(&state, d_a * d_b, "shared state")?;
        let meas_a = meas_a
            .iter()
            .enumerate()
            .map(|(x, ops)| checked_measurement(ops, d_a, &format!("Alice measurement {x}")))
            .collect::<Result<Vec<_>>>()?;
        let meas_b = meas_b
            .iter()
            .enumerate()
            .map(|(y, ops)| checked_measurement(ops, d_b, &format!("Bob measurement {y}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(BellQuantumStrategy { d_a, d_b, state, meas_a, meas_b, povm_laws: None })
    }

    pub fn with_povm_laws(mut self, alice: PovmLaw, bob: PovmLaw) -> Self {
        self.povm_laws = Some((alice, bob));
        self
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn state(&self) -> &CMatrix {
        &self.state
    }

    pub fn meas_a(&self) -> &[Vec<CMatrix>] {
        &self.meas_a
    }

    pub fn meas_b(&self) -> &[Vec<CMatrix>] {
        &self.meas_b
    }

    pub fn povm_laws(&self) -> Option<(PovmLaw, PovmLaw)> {
        self.povm_laws
    }

    pub fn scenario(&self) -> BellScenario {
        BellScenario::new(self.meas_a.len(), self.meas_a[0].len()).expect("validated")
    }

    /// Support ranks of the two reduced states. Their minimum is the local
    /// dimension entering the rank bound.
    pub fn reduced_support_ranks(&self) -> (usize, usize) {
        let (ra, rb) = partial_traces(&self.state, self.d_a, self.d_b);
        (support_rank(&ra), support_rank(&rb))
    }
}

/// `tr(rho (E (x) F))` without forming the tensor product.
fn joint_expectation(rho: &CMatrix, e: &CMatrix, f: &CMatrix) -> f64 {
    let (da, db) = (e.nrows(), f.nrows());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..da {
        for k in 0..db {
            let row = i * db + k;
            for j in 0..da {
                let eji = e[(j, i)];
                if eji == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for l in 0..db {
                    acc += rho[(row, j * db + l)] * eji * f[(l, k)];
                }
            }
        }
    }
    acc.re
}

/// `P(ab|xy) = tr(rho_AB E_a^x (x) F_b^y)`, as floats.
pub fn simulate_bell(st: &BellQuantumStrategy, scenario: BellScenario) -> Result<BellBehaviour> {
    if st.scenario() != scenario {
        return Err(Error::Structural(format!(
            "strategy is for {:?}, scenario is {scenario:?}",
            st.scenario()
        )));
    }
    let (m, n) = (scenario.m(), scenario.n());
    let mut table = vec![0.0f64; n * n * m * m];
    for a in 0..n {
        for b in 0..n {
            for x in 0..m {
                for y in 0..m {
                    let p = joint_expectation(&st.state, &st.meas_a[x][a], &st.meas_b[y][b]);
                    table[((a * n + b) * m + x) * m + y] = clip_probability(p, &format!("P({a}{b}|{x}{y})"))?;
                }
            }
        }
    }
    BellBehaviour::from_fn(scenario, |a, b, x, y| Scalar::Float(table[((a * n + b) * m + x) * m + y]))
}

/// Strategy realizing `lam * B1 + (1 - lam) * B2` without shared randomness:
/// state `lam rho (+) (1 - lam) rho'` and measurements `E (+) E'`, `F (+) F'`.
pub fn direct_sum_mixture(
    st1: &BellQuantumStrategy,
    st2: &BellQuantumStrategy,
    lam: f64,
) -> Result<BellQuantumStrategy> {
    if st1.scenario() != st2.scenario() {
        return Err(Error::Structural(format!(
            "cannot combine strategies for {:?} and {:?}",
            st1.scenario(),
            st2.scenario()
        )));
    }
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::Precondition(format!("mixing weight must lie in (0, 1), got {lam}")));
    }
    let (da1, db1, da2, db2) = (st1.d_a, st1.d_b, st2.d_a, st2.d_b);
    let (da, db) = (da1 + da2, db1 + db2);
    let mut state = CMatrix::zeros(da * db, da * db);
    // First block lives on A1 (x) B1, second on A2 (x) B2.
    for (rho, w, a_off, b_off, sa, sb) in [
        (&st1.state, lam, 0, 0, da1, db1),
        (&st2.state, 1.0 - lam, da1, db1, da2, db2),
    ] {
        for i in 0..sa {
            for k in 0..sb {
                for j in 0..sa {
                    for l in 0..sb {
                        let src = rho[(i * sb + k, j * sb + l)];
                        state[((a_off + i) * db + b_off + k, (a_off + j) * db + b_off + l)] = src * w;
                    }
                }
            }
        }
    }
    let combine = |m1: &[Vec<CMatrix>], m2: &[Vec<CMatrix>]| -> Vec<Vec<CMatrix>> {
        m1.iter()
            .zip(m2)
            .map(|(ops1, ops2)| ops1.iter().zip(ops2).map(|(e1, e2)| direct_sum(e1, e2)).collect())
            .collect()
    };
    BellQuantumStrategy::new(da, db, state, combine(&st1.meas_a, &st2.meas_a), combine(&st1.meas_b, &st2.meas_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{pm_matrix, validate_bell, validate_pm};
    use crate::constructions::d_block;
    use crate::linalg::rank_exact;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(values: &[f64]) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), values.iter().map(|&v| c(v))))
    }

    #[test]
    fn d1_strategy_reproduces_construction() {
        // A sends 0 on x = 0 and 1 otherwise; B outputs 1 only on (message 0, y = 0).
        let (m, k) = (4, 3);
        let s: Vec<Vec<Scalar>> = (0..m)
            .map(|x| if x == 0 { vec![Scalar::int(1), Scalar::int(0)] } else { vec![Scalar::int(0), Scalar::int(1)] })
            .collect();
        let t: Vec<Vec<Vec<Scalar>>> = (0..2)
            .map(|msg| {
                (0..k)
                    .map(|y| if msg == 0 && y == 0 { vec![Scalar::int(0), Scalar::int(1)] } else { vec![Scalar::int(1), Scalar::int(0)] })
                    .collect()
            })
            .collect();
        let st = ClassicalPmStrategy::new(2, s, t).unwrap();
        let beh = simulate_classical_pm(&st, PmScenario::new(m, k).unwrap()).unwrap();
        assert_eq!(beh, d_block(m, k, 0, 0).unwrap());
    }

    #[test]
    fn one_dimensional_messages_give_product_behaviour() {
        let s = vec![vec![Scalar::int(1)]; 3];
        let t = vec![vec![vec![Scalar::ratio(1, 3), Scalar::ratio(2, 3)], vec![Scalar::ratio(1, 5), Scalar::ratio(4, 5)]]];
        let st = ClassicalPmStrategy::new(1, s, t).unwrap();
        let beh = simulate_classical_pm(&st, st.scenario()).unwrap();
        assert_eq!(rank_exact(&pm_matrix(&beh)).unwrap().rank, 1);
        assert_eq!(*beh.get(1, 2, 1), Scalar::ratio(4, 5));
    }

    #[test]
    fn classical_stochasticity_enforced() {
        let s = vec![vec![Scalar::ratio(1, 2), Scalar::ratio(1, 3)]];
        let t = vec![vec![vec![Scalar::int(1), Scalar::int(0)]]; 2];
        assert!(matches!(ClassicalPmStrategy::new(2, s, t), Err(Error::InvalidStrategy(_))));
        assert!(ClassicalPmStrategy::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn diagonal_embedding_matches_classical() {
        // s(m|x) as diagonal states, t(b|my) as diagonal POVMs.
        let s = [[0.2, 0.8], [0.5, 0.5], [1.0, 0.0]];
        let t = [[[0.3, 0.7], [1.0, 0.0]], [[0.6, 0.4], [0.25, 0.75]]];
        let cl = ClassicalPmStrategy::new(
            2,
            s.iter().map(|r| r.iter().map(|&v| Scalar::Float(v)).collect()).collect(),
            t.iter().map(|r| r.iter().map(|p| p.iter().map(|&v| Scalar::Float(v)).collect()).collect()).collect(),
        )
        .unwrap();
        let states = s.iter().map(|r| diag(r)).collect();
        let povms = (0..2)
            .map(|y| (0..2).map(|b| diag(&[t[0][y][b], t[1][y][b]])).collect())
            .collect();
        let q = QuantumPmStrategy::new(2, states, povms).unwrap();
        let scenario = PmScenario::new(3, 2).unwrap();
        let p1 = simulate_classical_pm(&cl, scenario).unwrap();
        let p2 = simulate_quantum_pm(&q, scenario).unwrap();
        for (a, b) in p1.probs().iter().zip(p2.probs()) {
            assert!((a.to_f64() - b.to_f64()).abs() < 1e-12);
        }
        assert!(validate_pm(&p2, 1e-12).is_valid());
    }

    #[test]
    fn invalid_quantum_inputs() {
        let bad_trace = vec![diag(&[0.5, 0.4])];
        let povm = vec![vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]];
        assert!(QuantumPmStrategy::new(2, bad_trace, povm.clone()).is_err());
        let not_psd = vec![diag(&[1.5, -0.5])];
        assert!(QuantumPmStrategy::new(2, not_psd, povm).is_err());
        let incomplete = vec![vec![diag(&[1.0, 0.0]), diag(&[0.0, 0.9])]];
        assert!(QuantumPmStrategy::new(2, vec![diag(&[1.0, 0.0])], incomplete).is_err());
    }

    #[test]
    fn message_dimension_cases() {
        assert_eq!(message_dimension(&[diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap(), 2);
        let mut psi = CMatrix::zeros(2, 2);
        psi[(0, 0)] = c(0.5);
        psi[(0, 1)] = Complex64::new(0.0, 0.5);
        psi[(1, 0)] = Complex64::new(0.0, -0.5);
        psi[(1, 1)] = c(0.5);
        assert_eq!(message_dimension(&[psi.clone(), psi.clone(), psi]).unwrap(), 1);
        assert!(message_dimension(&[diag(&[1.0, -0.1])]).is_err());
    }

    #[test]
    fn deterministic_product_strategy_gives_ldb() {
        // |0><0| (x) |0><0|, Alice measures {P0, P1} always returning output f(x).
        let rho = diag(&[1.0, 0.0, 0.0, 0.0]);
        let proj0 = diag(&[1.0, 0.0]);
        let proj1 = diag(&[0.0, 1.0]);
        let meas = |flip: bool| {
            if flip {
                vec![proj1.clone(), proj0.clone()]
            } else {
                vec![proj0.clone(), proj1.clone()]
            }
        };
        let st = BellQuantumStrategy::new(2, 2, rho, vec![meas(false), meas(true)], vec![meas(true), meas(true)]).unwrap();
        let beh = simulate_bell(&st, st.scenario()).unwrap();
        let expected = crate::constructions::ldb(2, 2, &[0, 1], &[1, 1]).unwrap();
        for (a, b) in beh.probs().iter().zip(expected.probs()) {
            assert!((a.to_f64() - b.to_f64()).abs() < 1e-15);
        }
        assert!(validate_bell(&beh, 1e-12).is_valid());
        assert_eq!(st.reduced_support_ranks(), (1, 1));
    }
}
