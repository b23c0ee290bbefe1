//! Seeded samplers for behaviours and strategies.
//!
//! Every sampler takes a [`Seed`]; child seeds are derived by counter so that
//! item `i` of a batch is the same whether the batch runs sequentially or in
//! parallel.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::behaviour::{BellBehaviour, BellScenario, PmBehaviour, PmScenario};
use crate::error::{Error, Result};
use crate::quantum::{random_density_matrix, random_povm, CMatrix};
use crate::scalar::Scalar;
use crate::strategy::{
    simulate_bell, simulate_classical_pm, simulate_quantum_pm, BellQuantumStrategy, ClassicalPmStrategy,
    QuantumPmStrategy,
};

/// Root of a reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Seed {
    /// Independent seed for the `i`-th item of a batch.
    pub fn child(self, i: u64) -> Seed {
        Seed(splitmix64(splitmix64(self.0) ^ splitmix64(i.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Distribution for [`sample_behaviour`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PmLaw {
    /// Each `P(0|xy)` i.i.d. uniform on `[0, 1]` (floats).
    Uniform,
    /// Each `P(0|xy)` uniform on `{0, 1/2^bits, ..., 1}` (exact).
    Dyadic { bits: u32 },
}

/// Random prepare-and-measure behaviour.
pub fn sample_behaviour(scenario: PmScenario, law: PmLaw, seed: Seed) -> Result<PmBehaviour> {
    let mut rng = seed.rng();
    match law {
        PmLaw::Uniform => PmBehaviour::from_p0(scenario, |_, _| Scalar::Float(rng.random::<f64>())),
        PmLaw::Dyadic { bits } => {
            if bits == 0 || bits > 62 {
                return Err(Error::Precondition(format!("dyadic resolution must be 1..=62 bits, got {bits}")));
            }
            let den = 1i64 << bits;
            PmBehaviour::from_p0(scenario, |_, _| Scalar::ratio(rng.random_range(0..=den), den))
        }
    }
}

fn dirichlet_f64<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Random exact distribution over `k` outcomes with denominators `2^bits`.
fn dyadic_distribution<R: Rng + ?Sized>(rng: &mut R, k: usize, bits: u32) -> Vec<Scalar> {
    let den = 1i64 << bits;
    let mut cuts: Vec<i64> = (0..k - 1).map(|_| rng.random_range(0..=den)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(den)) {
        out.push(Scalar::Exact(BigRational::new(BigInt::from(c - prev), BigInt::from(den))));
        prev = c;
    }
    out
}

/// Random classical strategy with `d`-level messages. `exact_bits` selects dyadic
/// rationals; otherwise entries are flat-Dirichlet floats.
pub fn sample_classical_pm(
    scenario: PmScenario,
    d: usize,
    exact_bits: Option<u32>,
    seed: Seed,
) -> Result<ClassicalPmStrategy> {
    if d == 0 {
        return Err(Error::Precondition("message dimension must be positive".into()));
    }
    let mut rng = seed.rng();
    let mut dist = |k: usize| -> Vec<Scalar> {
        match exact_bits {
            Some(bits) => dyadic_distribution(&mut rng, k, bits.clamp(1, 30)),
            None => dirichlet_f64(&mut rng, k).into_iter().map(Scalar::Float).collect(),
        }
    };
    let s = (0..scenario.n_inputs_a()).map(|_| dist(d)).collect();
    let t = (0..d).map(|_| (0..scenario.n_inputs_b()).map(|_| dist(2)).collect()).collect();
    ClassicalPmStrategy::new(d, s, t)
}

/// Random quantum strategy on `C^d`: Ginibre states, Haar projective binary measurements.
pub fn sample_quantum_pm(scenario: PmScenario, d: usize, seed: Seed) -> Result<QuantumPmStrategy> {
    if d == 0 {
        return Err(Error::Precondition("message dimension must be positive".into()));
    }
    let mut rng = seed.rng();
    let states: Vec<CMatrix> = (0..scenario.n_inputs_a()).map(|_| random_density_matrix(&mut rng, d)).collect();
    let mut law = None;
    let povms = (0..scenario.n_inputs_b())
        .map(|_| {
            let (ops, l) = random_povm(&mut rng, d, PmScenario::N_OUTPUTS);
            law = Some(l);
            ops
        })
        .collect();
    let st = QuantumPmStrategy::new(d, states, povms)?;
    Ok(match law {
        Some(l) => st.with_povm_law(l),
        None => st,
    })
}

/// Random bipartite strategy with local dimensions `d_a, d_b`.
pub fn sample_bell_strategy(scenario: BellScenario, d_a: usize, d_b: usize, seed: Seed) -> Result<BellQuantumStrategy> {
    if d_a == 0 || d_b == 0 {
        return Err(Error::Precondition("local dimensions must be positive".into()));
    }
    let mut rng = seed.rng();
    let state = random_density_matrix(&mut rng, d_a * d_b);
    let (m, n) = (scenario.m(), scenario.n());
    let mut laws = (None, None);
    let meas_a = (0..m)
        .map(|_| {
            let (ops, l) = random_povm(&mut rng, d_a, n);
            laws.0 = Some(l);
            ops
        })
        .collect();
    let meas_b = (0..m)
        .map(|_| {
            let (ops, l) = random_povm(&mut rng, d_b, n);
            laws.1 = Some(l);
            ops
        })
        .collect();
    let st = BellQuantumStrategy::new(d_a, d_b, state, meas_a, meas_b)?;
    Ok(match laws {
        (Some(a), Some(b)) => st.with_povm_laws(a, b),
        _ => st,
    })
}

/// Behaviour of a random classical strategy.
pub fn sample_classical_behaviour(scenario: PmScenario, d: usize, exact_bits: Option<u32>, seed: Seed) -> Result<PmBehaviour> {
    simulate_classical_pm(&sample_classical_pm(scenario, d, exact_bits, seed)?, scenario)
}

/// Behaviour of a random quantum strategy.
pub fn sample_quantum_behaviour(scenario: PmScenario, d: usize, seed: Seed) -> Result<PmBehaviour> {
    simulate_quantum_pm(&sample_quantum_pm(scenario, d, seed)?, scenario)
}

/// Behaviour of a random bipartite strategy.
pub fn sample_bell_behaviour(scenario: BellScenario, d_a: usize, d_b: usize, seed: Seed) -> Result<BellBehaviour> {
    simulate_bell(&sample_bell_strategy(scenario, d_a, d_b, seed)?, scenario)
}

/// Pure state `|psi><psi|` from amplitudes.
pub fn pure_state(amplitudes: &[Complex64]) -> CMatrix {
    let v = nalgebra::DVector::from_column_slice(amplitudes);
    let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
    (&v * v.adjoint()).map(|z| z / norm2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::{validate_bell, validate_pm};

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let s = Seed(7);
        assert_eq!(s.child(3), s.child(3));
        assert_ne!(s.child(3), s.child(4));
        assert_ne!(s.child(0), Seed(7));
        let sc = PmScenario::new(3, 2).unwrap();
        assert_eq!(
            sample_behaviour(sc, PmLaw::Uniform, Seed(1)).unwrap(),
            sample_behaviour(sc, PmLaw::Uniform, Seed(1)).unwrap()
        );
    }

    #[test]
    fn samples_are_valid() {
        let sc = PmScenario::new(4, 3).unwrap();
        for i in 0..5 {
            let seed = Seed(11).child(i);
            for beh in [
                sample_behaviour(sc, PmLaw::Uniform, seed).unwrap(),
                sample_behaviour(sc, PmLaw::Dyadic { bits: 8 }, seed).unwrap(),
                sample_classical_behaviour(sc, 2, Some(6), seed).unwrap(),
                sample_classical_behaviour(sc, 3, None, seed).unwrap(),
                sample_quantum_behaviour(sc, 2, seed).unwrap(),
            ] {
                assert!(validate_pm(&beh, 1e-12).is_valid());
            }
            let bell = sample_bell_behaviour(BellScenario::new(2, 3).unwrap(), 2, 3, seed).unwrap();
            assert!(validate_bell(&bell, 1e-9).is_valid());
        }
    }

    #[test]
    fn dyadic_behaviour_is_exact() {
        let sc = PmScenario::new(2, 2).unwrap();
        assert!(sample_classical_behaviour(sc, 2, Some(4), Seed(0)).unwrap().kind() == crate::scalar::ScalarKind::Exact);
        assert!(sample_behaviour(sc, PmLaw::Dyadic { bits: 0 }, Seed(0)).is_err());
    }
}
