//! Exact-rational generators for the explicit behaviour families.
//!
//! Every generator emits exact rationals; take a float view with `to_kind`
//! when needed.

use crate::behaviour::{mix, BellBehaviour, BellScenario, PmBehaviour, PmScenario};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};

/// Default cap on the number of LDBs `enumerate_ldbs` agrees to stream.
pub const DEFAULT_LDB_CAP: u128 = 1_000_000;

/// Standard basis vector `e_i` of length `n` (0-based `i`).
pub fn basis_vector(n: usize, i: usize) -> Result<Vec<Scalar>> {
    if i >= n {
        return Err(Error::Precondition(format!("basis index {i} out of range for length {n}")));
    }
    Ok((0..n).map(|j| Scalar::int((i == j) as i64)).collect())
}

fn pm_scenario(m: usize, k: usize) -> Result<PmScenario> {
    PmScenario::new(m, k)
}

/// `D_ij`: every block of the `m x 2k` matrix is `(1, 0)` except block `(i, j)`,
/// which is `(0, 1)`. Indices are 0-based; `d_block(m, k, i, i)` is `D_i`.
pub fn d_block(m: usize, k: usize, i: usize, j: usize) -> Result<PmBehaviour> {
    let s = pm_scenario(m, k)?;
    if i >= m || j >= k {
        return Err(Error::Precondition(format!(
            "block ({i},{j}) out of range for an {m}x{k} block grid"
        )));
    }
    PmBehaviour::from_p0(s, |x, y| Scalar::int(((x, y) != (i, j)) as i64))
}

/// `D_0`: every block equal to `(1, 0)`, i.e. output 0 always.
pub fn d_zero(m: usize, k: usize) -> Result<PmBehaviour> {
    PmBehaviour::from_p0(pm_scenario(m, k)?, |_, _| Scalar::int(1))
}

/// Uniform mixture of `D_0 .. D_{k-1}`: diagonal blocks `(1 - 1/k, 1/k)`, all
/// other blocks `(1, 0)`. Requires `m >= k + 1`; its matrix then has rank `k + 1`.
pub fn p_k(m: usize, k: usize) -> Result<PmBehaviour> {
    if k == 0 || m < k + 1 {
        return Err(Error::Precondition(format!("p_k needs k >= 1 and m >= k + 1 (got m={m}, k={k})")));
    }
    let off = Scalar::ratio(k as i64 - 1, k as i64);
    PmBehaviour::from_p0(pm_scenario(m, k)?, |x, y| if x == y { off.clone() } else { Scalar::int(1) })
}

/// The `k + 1` vectors of length `2k` used to build `Q`: `v_j` has block `j` equal
/// to `e_2` and all other blocks `e_1`; `v_k` has every block `e_1`.
pub fn q_vectors(k: usize) -> Vec<Vec<Scalar>> {
    (0..=k)
        .map(|j| {
            (0..2 * k)
                .map(|c| {
                    let (block, b) = (c / 2, c % 2);
                    let hot = if block == j { 1 } else { 0 };
                    Scalar::int((b == hot) as i64)
                })
                .collect()
        })
        .collect()
}

/// `Q = sum_{j<k} e_j v_j^T + (sum_{j>=k} e_j) v_k^T`.
pub fn q_perturbation(m: usize, k: usize) -> Result<PmBehaviour> {
    if k == 0 || m < k + 1 {
        return Err(Error::Precondition(format!("Q needs k >= 1 and m >= k + 1 (got m={m}, k={k})")));
    }
    let vs = q_vectors(k);
    PmBehaviour::from_fn(pm_scenario(m, k)?, |b, x, y| vs[x.min(k)][2 * y + b].clone())
}

/// `P_eps = (1 - eps) P + eps Q`.
pub fn p_epsilon(p: &PmBehaviour, eps: &Scalar) -> Result<PmBehaviour> {
    if eps.is_negative_beyond(0.0) || (eps - &Scalar::one(eps.kind())).to_f64() > 0.0 || !eps.is_finite() {
        return Err(Error::Precondition(format!("eps must lie in [0, 1], got {eps}")));
    }
    let s = p.scenario();
    let q = q_perturbation(s.n_inputs_a(), s.n_inputs_b())?;
    let keep = &Scalar::one(eps.kind()) - eps;
    mix(&[p.clone(), q], &[keep, eps.clone()])
}

/// Local deterministic behaviour `D(ab|xy) = [a = f(x)] [b = g(y)]`.
pub fn ldb(m: usize, n: usize, f: &[usize], g: &[usize]) -> Result<BellBehaviour> {
    let s = BellScenario::new(m, n)?;
    if f.len() != m || g.len() != m {
        return Err(Error::Precondition(format!(
            "response functions must be defined on all {m} inputs (got {} and {})",
            f.len(),
            g.len()
        )));
    }
    if let Some(&v) = f.iter().chain(g).find(|&&v| v >= n) {
        return Err(Error::Precondition(format!("output {v} out of range for n={n}")));
    }
    BellBehaviour::from_fn(s, |a, b, x, y| Scalar::int((a == f[x] && b == g[y]) as i64))
}

/// Response functions of the LDB with the given index: `f` is the high base-`n`
/// number and `g` the low one, most significant digit first.
pub fn ldb_maps(m: usize, n: usize, index: u128) -> (Vec<usize>, Vec<usize>) {
    let per_party = (n as u128).pow(m as u32);
    let digits = |mut v: u128| {
        let mut out = vec![0usize; m];
        for slot in out.iter_mut().rev() {
            *slot = (v % n as u128) as usize;
            v /= n as u128;
        }
        out
    };
    (digits(index / per_party), digits(index % per_party))
}

/// Stateless, index-addressed stream of all `n^{2m}` LDBs in lexicographic `(f, g)` order.
#[derive(Clone, Debug)]
pub struct LdbIter {
    m: usize,
    n: usize,
    next: u128,
    end: u128,
}

impl LdbIter {
    pub fn total(&self) -> u128 {
        (self.n as u128).pow(2 * self.m as u32)
    }

    /// Restricts the stream to indices in `start..end`, for sharding across workers.
    pub fn range(mut self, start: u128, end: u128) -> LdbIter {
        self.end = end.min(self.total());
        self.next = start.min(self.end);
        self
    }

    /// The LDB at a given position of the full stream.
    pub fn at(&self, index: u128) -> BellBehaviour {
        let (f, g) = ldb_maps(self.m, self.n, index);
        ldb(self.m, self.n, &f, &g).expect("maps are in range")
    }
}

impl Iterator for LdbIter {
    type Item = BellBehaviour;

    fn next(&mut self) -> Option<BellBehaviour> {
        if self.next >= self.end {
            return None;
        }
        let item = self.at(self.next);
        self.next += 1;
        Some(item)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = usize::try_from(self.end - self.next).unwrap_or(usize::MAX);
        (left, Some(left))
    }

    fn nth(&mut self, n: usize) -> Option<BellBehaviour> {
        self.next = self.next.saturating_add(n as u128);
        self.next()
    }
}

impl ExactSizeIterator for LdbIter {}

/// All LDBs of the `(m, n)` scenario, refusing when `n^{2m}` exceeds `cap`.
pub fn enumerate_ldbs(m: usize, n: usize, cap: u128) -> Result<LdbIter> {
    BellScenario::new(m, n)?;
    let required = (n as u128)
        .checked_pow(2 * m as u32)
        .ok_or(Error::CapExceeded { required: u128::MAX, cap })?;
    if required > cap {
        return Err(Error::CapExceeded { required, cap });
    }
    Ok(LdbIter { m, n, next: 0, end: required })
}

/// The `mn - m + 1` response-function pairs mixed into `L`: the all-zero pair,
/// then for each input `j` and output `i >= 1` the pair with `f = g` sending `j`
/// to `i` and everything else to 0.
pub fn l_star_components(m: usize, n: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = vec![(vec![0; m], vec![0; m])];
    for j in 0..m {
        for i in 1..n {
            let mut f = vec![0; m];
            f[j] = i;
            out.push((f.clone(), f));
        }
    }
    out
}

/// Uniform mixture of the LDBs from [`l_star_components`]; local, exact, and of
/// the largest possible matrix rank `mn - m + 1`.
pub fn l_star(m: usize, n: usize) -> Result<BellBehaviour> {
    BellScenario::new(m, n)?;
    let parts = l_star_components(m, n)
        .iter()
        .map(|(f, g)| ldb(m, n, f, g))
        .collect::<Result<Vec<_>>>()?;
    let w = Scalar::ratio(1, parts.len() as i64);
    let weights = vec![w; parts.len()];
    mix(&parts, &weights)
}

/// Float view of an exact construction.
pub fn as_float(beh: &PmBehaviour) -> PmBehaviour {
    beh.to_kind(ScalarKind::Float).expect("exact to float never fails")
}
