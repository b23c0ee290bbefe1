//! Noise models and the rank-robustness checks.
//!
//! `P_eta = eta P + (1 - eta) P_n`. In prepare-and-measure the noise cannot
//! depend on `x`, so `P_n` has rank one and, for `eta > 0`, leaves the rank of
//! `P` unchanged. In the Bell case product noise moves the rank by at most one.

use serde::Serialize;

use crate::behaviour::{bell_matrix, mix, pm_matrix, BellBehaviour, Behaviour, PmBehaviour};
use crate::error::{Error, Result};
use crate::linalg::{rank, RankMethod, RankMode};
use crate::scalar::{joint_kind, Scalar};

/// Slack for stochasticity of float noise tables.
pub const NOISE_TABLE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum NoiseModel {
    /// `P_n(b|y)`, indexed `[y][b]`.
    PmMeasurement { table: Vec<Vec<Scalar>> },
    /// `P_A(a|x) P_B(b|y)`, indexed `[x][a]` and `[y][b]`.
    BellProduct { alice: Vec<Vec<Scalar>>, bob: Vec<Vec<Scalar>> },
}

fn check_table(table: &[Vec<Scalar>], what: &str) -> Result<()> {
    for (i, row) in table.iter().enumerate() {
        let kind = joint_kind(row);
        if row.iter().any(|v| v.is_negative_beyond(NOISE_TABLE_TOL) || !v.is_finite()) {
            return Err(Error::InvalidBehaviour(format!("{what} row {i} has a negative entry")));
        }
        let total = row.iter().fold(Scalar::zero(kind), |a, v| &a + v);
        if total.differs_from(&Scalar::one(kind), NOISE_TABLE_TOL) {
            return Err(Error::InvalidBehaviour(format!("{what} row {i} sums to {total}")));
        }
    }
    Ok(())
}

impl NoiseModel {
    /// White measurement noise: each output with probability 1/2.
    pub fn uniform_pm(n_inputs_b: usize) -> NoiseModel {
        NoiseModel::PmMeasurement { table: vec![vec![Scalar::ratio(1, 2); 2]; n_inputs_b] }
    }

    /// Uniformly random outputs on both sides.
    pub fn uniform_bell(m: usize, n: usize) -> NoiseModel {
        let row = vec![Scalar::ratio(1, n as i64); n];
        NoiseModel::BellProduct { alice: vec![row.clone(); m], bob: vec![row; m] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::PmMeasurement { table } => check_table(table, "P_n(b|y)"),
            NoiseModel::BellProduct { alice, bob } => {
                check_table(alice, "P_A(a|x)")?;
                check_table(bob, "P_B(b|y)")
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            NoiseModel::PmMeasurement { .. } => "pm_measurement",
            NoiseModel::BellProduct { .. } => "bell_product",
        }
    }

    /// The noise as a behaviour of `beh`'s scenario.
    pub fn behaviour_like(&self, beh: &Behaviour) -> Result<Behaviour> {
        self.validate()?;
        match (self, beh) {
            (NoiseModel::PmMeasurement { table }, Behaviour::Pm(p)) => {
                let sc = p.scenario();
                if table.len() != sc.n_inputs_b() || table.iter().any(|r| r.len() != 2) {
                    return Err(Error::Structural(format!(
                        "noise table must be {} x 2 for this scenario",
                        sc.n_inputs_b()
                    )));
                }
                let kind = table.iter().map(|r| joint_kind(r.iter())).fold(joint_kind(&table[0]), |a, b| a.join(b));
                Ok(Behaviour::Pm(PmBehaviour::from_fn(sc, |b, _, y| table[y][b].to_kind(kind).expect("promotion"))?))
            }
            (NoiseModel::BellProduct { alice, bob }, Behaviour::Bell(p)) => {
                let sc = p.scenario();
                let (m, n) = (sc.m(), sc.n());
                if alice.len() != m || bob.len() != m || alice.iter().chain(bob).any(|r| r.len() != n) {
                    return Err(Error::Structural(format!("noise tables must be {m} x {n} for this scenario")));
                }
                Ok(Behaviour::Bell(BellBehaviour::from_fn(sc, |a, b, x, y| &alice[x][a] * &bob[y][b])?))
            }
            _ => Err(Error::UnsupportedScenario(format!(
                "{} noise does not apply to this behaviour",
                self.kind_name()
            ))),
        }
    }
}

fn check_eta(eta: &Scalar) -> Result<()> {
    let above_one = (&Scalar::one(eta.kind()) - eta).is_negative_beyond(0.0);
    if !eta.is_finite() || eta.is_negative_beyond(0.0) || above_one {
        return Err(Error::Precondition(format!("eta must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// `eta * beh + (1 - eta) * noise`.
pub fn apply_noise(beh: &Behaviour, model: &NoiseModel, eta: &Scalar) -> Result<Behaviour> {
    check_eta(eta)?;
    let noise = model.behaviour_like(beh)?;
    let one_minus = &Scalar::one(eta.kind()) - eta;
    let weights = [eta.clone(), one_minus];
    Ok(match (beh, noise) {
        (Behaviour::Pm(p), Behaviour::Pm(n)) => Behaviour::Pm(mix(&[p.clone(), n], &weights)?),
        (Behaviour::Bell(p), Behaviour::Bell(n)) => Behaviour::Bell(mix(&[p.clone(), n], &weights)?),
        _ => unreachable!("noise behaviour has the scenario of the input"),
    })
}

fn behaviour_rank(beh: &Behaviour, method: RankMethod) -> Result<crate::linalg::RankResult> {
    match beh {
        Behaviour::Pm(p) => rank(&pm_matrix(p), method),
        Behaviour::Bell(p) => rank(&bell_matrix(p), method),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub eta: Scalar,
    pub rank: usize,
    pub mode: RankMode,
    /// `None` at `eta = 0`, where no claim is made.
    pub holds: Option<bool>,
    /// Float mode: smallest retained singular value over the cutoff `tol * sigma_max`.
    pub singular_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub noise: &'static str,
    pub base_rank: usize,
    /// `"equal"` for prepare-and-measure, `"within_one"` for Bell.
    pub claim: &'static str,
    pub rows: Vec<RobustnessRow>,
    pub all_hold: bool,
}

/// Ranks of `P_eta` for each `eta`, checked against the robustness claim.
/// Exact arithmetic is used whenever the behaviour, tables and `eta` are rational.
pub fn rank_robustness_check(
    beh: &Behaviour,
    model: &NoiseModel,
    etas: &[Scalar],
    method: RankMethod,
) -> Result<RobustnessReport> {
    let base = behaviour_rank(beh, method)?;
    let is_pm = matches!(beh, Behaviour::Pm(_));
    let rows = etas
        .iter()
        .map(|eta| {
            let noisy = apply_noise(beh, model, eta)?;
            let r = behaviour_rank(&noisy, method)?;
            let holds = (!eta.is_zero()).then(|| {
                if is_pm {
                    r.rank == base.rank
                } else {
                    r.rank + 1 >= base.rank && r.rank <= base.rank + 1
                }
            });
            let singular_margin = match (&r.singular_values, r.tolerance_used) {
                (Some(sv), Some(tol)) if r.rank > 0 && tol > 0.0 => Some(sv[r.rank - 1] / (tol * sv[0])),
                _ => None,
            };
            Ok(RobustnessRow { eta: eta.clone(), rank: r.rank, mode: r.mode, holds, singular_margin })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_hold = rows.iter().all(|r| r.holds != Some(false));
    Ok(RobustnessReport {
        noise: model.kind_name(),
        base_rank: base.rank,
        claim: if is_pm { "equal" } else { "within_one" },
        rows,
        all_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{l_star, p_k};
    use crate::linalg::rank_exact;

    fn eta(s: &str) -> Scalar {
        Scalar::parse_decimal(s).unwrap()
    }

    #[test]
    fn endpoints() {
        let p = Behaviour::Pm(p_k(4, 3).unwrap());
        let model = NoiseModel::uniform_pm(3);
        assert_eq!(apply_noise(&p, &model, &eta("1")).unwrap(), p);
        let Behaviour::Pm(n) = apply_noise(&p, &model, &eta("0")).unwrap() else { panic!() };
        assert_eq!(rank_exact(&pm_matrix(&n)).unwrap().rank, 1);
    }

    #[test]
    fn pm_rank_is_preserved() {
        let p = Behaviour::Pm(p_k(6, 5).unwrap());
        let model = NoiseModel::PmMeasurement {
            table: (0..5).map(|y| vec![Scalar::ratio(y + 1, 7), Scalar::ratio(6 - y, 7)]).collect(),
        };
        let etas: Vec<Scalar> = ["0.9", "0.5", "0.01", "0"].iter().map(|s| eta(s)).collect();
        let rep = rank_robustness_check(&p, &model, &etas, RankMethod::Auto(None)).unwrap();
        assert_eq!(rep.base_rank, 6);
        assert!(rep.all_hold);
        assert_eq!(rep.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), vec![6, 6, 6, 1]);
        assert_eq!(rep.rows[3].holds, None);
    }

    #[test]
    fn bell_band() {
        let p = Behaviour::Bell(l_star(2, 3).unwrap());
        let rep = rank_robustness_check(&p, &NoiseModel::uniform_bell(2, 3), &[eta("0.5")], RankMethod::Auto(None)).unwrap();
        assert_eq!(rep.base_rank, 5);
        assert!((4..=6).contains(&rep.rows[0].rank));
        assert!(rep.all_hold);
    }

    #[test]
    fn errors() {
        let p = Behaviour::Pm(p_k(3, 2).unwrap());
        assert!(matches!(apply_noise(&p, &NoiseModel::uniform_pm(2), &eta("1.5")), Err(Error::Precondition(_))));
        assert!(matches!(apply_noise(&p, &NoiseModel::uniform_pm(2), &eta("-0.1")), Err(Error::Precondition(_))));
        assert!(matches!(apply_noise(&p, &NoiseModel::uniform_bell(2, 2), &eta("0.5")), Err(Error::UnsupportedScenario(_))));
        assert!(matches!(apply_noise(&p, &NoiseModel::uniform_pm(3), &eta("0.5")), Err(Error::Structural(_))));
        let bad = NoiseModel::PmMeasurement { table: vec![vec![Scalar::ratio(1, 2), Scalar::ratio(1, 3)]; 2] };
        assert!(matches!(apply_noise(&p, &bad, &eta("0.5")), Err(Error::InvalidBehaviour(_))));
    }
}
