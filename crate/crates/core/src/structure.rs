//! Contraction coefficients, zero-pattern search for ergodic/primitive
//! structure, and explicit Doeblin certificates.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::matrix::Matrix;
use crate::scalar::{ceil_tol, Scalar};

/// `τ_e(P) = ½ max_{k,k̄} ‖P_k − P_k̄‖₁` for a row-stochastic `P`.
pub fn ergodicity_coefficient<T: Scalar>(p: &Matrix<T>) -> Result<T> {
    let tol = T::lit(1e-10).max(T::mass_tol());
    for (r, sum) in p.row_sums().into_iter().enumerate() {
        if (sum - T::one()).abs() > tol || p.row(r).iter().any(|&x| x < T::zero()) {
            return Err(Error::NotStochastic { row: r, sum: sum.as_f64() });
        }
    }
    Ok(ergodicity_unchecked(p))
}

fn ergodicity_unchecked<T: Scalar>(p: &Matrix<T>) -> T {
    let mut best = T::zero();
    for a in 0..p.rows() {
        for b in a + 1..p.rows() {
            let d: T = p.row(a).iter().zip(p.row(b)).map(|(&x, &y)| (x - y).abs()).sum();
            best = best.max(d);
        }
    }
    (best / T::lit(2.0)).min(T::one())
}

/// Birkhoff coefficient `(1 − √ψ)/(1 + √ψ)`; exactly 1 when some entry is zero.
pub fn birkhoff_coefficient<T: Scalar>(p: &Matrix<T>) -> T {
    if p.rows() == 0 || p.min_entry() <= T::positive_tol() {
        return T::one();
    }
    let psi = birkhoff_psi(p);
    let r = psi.sqrt();
    ((T::one() - r) / (T::one() + r)).max(T::zero())
}

/// `ψ(P) = min (P_{k,k'} P_{k̄,k''}) / (P_{k̄,k'} P_{k,k''})` over all index quadruples.
pub fn birkhoff_psi<T: Scalar>(p: &Matrix<T>) -> T {
    let (n, c) = (p.rows(), p.cols());
    let mut psi = T::one();
    for k in 0..n {
        for kb in k + 1..n {
            for a in 0..c {
                for b in 0..c {
                    if a == b {
                        continue;
                    }
                    let num = p[(k, a)] * p[(kb, b)];
                    let den = p[(kb, a)] * p[(k, b)];
                    psi = psi.min(num / den);
                }
            }
        }
    }
    psi
}

/// Positivity pattern of a square matrix with at most 64 rows.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternMatrix {
    rows: Vec<u64>,
}

impl PatternMatrix {
    pub fn from_matrix<T: Scalar>(m: &Matrix<T>) -> Self {
        assert!(m.rows() <= 64, "pattern matrices hold at most 64 states");
        let rows = (0..m.rows())
            .map(|r| {
                m.row(r)
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x > T::positive_tol())
                    .fold(0u64, |acc, (c, _)| acc | (1 << c))
            })
            .collect();
        Self { rows }
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r] >> c & 1 == 1
    }

    /// Boolean product.
    pub fn mul(&self, rhs: &PatternMatrix) -> PatternMatrix {
        let rows = self
            .rows
            .iter()
            .map(|&row| {
                let mut out = 0u64;
                let mut bits = row;
                while bits != 0 {
                    let j = bits.trailing_zeros() as usize;
                    out |= rhs.rows[j];
                    bits &= bits - 1;
                }
                out
            })
            .collect();
        PatternMatrix { rows }
    }

    pub fn is_positive(&self) -> bool {
        let full = full_mask(self.size());
        self.rows.iter().all(|&r| r == full)
    }

    /// Every pair of rows shares a positive column.
    pub fn is_scrambling(&self) -> bool {
        let n = self.size();
        if n == 1 {
            return true;
        }
        (0..n).all(|a| (a + 1..n).all(|b| self.rows[a] & self.rows[b] != 0))
    }

    pub fn satisfies(&self, kind: PatternKind) -> bool {
        match kind {
            PatternKind::Positive => self.is_positive(),
            PatternKind::Scrambling => self.is_scrambling(),
        }
    }
}

fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Scrambling,
    Positive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    TauE,
    TauP,
}

/// `2^|K|` for positivity, `3^|K|` for scrambling, saturating.
pub fn default_bound(kind: PatternKind, states: usize) -> usize {
    let base: usize = match kind {
        PatternKind::Positive => 2,
        PatternKind::Scrambling => 3,
    };
    base.checked_pow(states as u32).unwrap_or(usize::MAX)
}

/// Patterns of the full alphabet: `(i, j)` pairs for blind games, `(i, j, s)`
/// triples otherwise. Duplicates are dropped.
pub fn alphabet_patterns<T: Scalar>(spec: &GameSpec<T>) -> Vec<PatternMatrix> {
    let set: BTreeSet<PatternMatrix> = spec
        .letters()
        .map(|(i, j, s)| PatternMatrix::from_matrix(spec.matrix(i, j, s)))
        .collect();
    set.into_iter().collect()
}

/// Smallest `m ≤ bound` such that every length-`m` product has the property.
///
/// Walks the sets of reachable patterns length by length. Each set is a
/// function of the previous one, so a repeated set means the sequence has
/// entered a cycle and no later length can succeed.
pub fn minimal_uniform_length<T: Scalar>(
    spec: &GameSpec<T>,
    kind: PatternKind,
    bound: Option<usize>,
) -> Result<Option<usize>> {
    if kind == PatternKind::Scrambling && !spec.is_blind() {
        return Err(Error::NotBlind {
            signals: spec.num_signals(),
        });
    }
    if spec.num_states() > 64 {
        return Err(Error::InvalidArgument("pattern search supports at most 64 states".into()));
    }
    let bound = bound.unwrap_or_else(|| default_bound(kind, spec.num_states()));
    let letters = alphabet_patterns(spec);
    let mut seen: Vec<BTreeSet<PatternMatrix>> = Vec::new();
    let mut current: BTreeSet<PatternMatrix> = letters.iter().cloned().collect();
    for m in 1..=bound {
        if current.iter().all(|p| p.satisfies(kind)) {
            return Ok(Some(m));
        }
        if seen.contains(&current) {
            return Ok(None);
        }
        let next = current
            .iter()
            .flat_map(|p| letters.iter().map(move |l| p.mul(l)))
            .collect();
        seen.push(std::mem::replace(&mut current, next));
    }
    Ok(None)
}

fn alphabet_size<T: Scalar>(spec: &GameSpec<T>) -> usize {
    spec.num_actions1() * spec.num_actions2() * spec.num_signals()
}

fn check_enumeration<T: Scalar>(spec: &GameSpec<T>, m: usize, cap: usize) -> Result<()> {
    let total = (alphabet_size(spec) as u128).checked_pow(m as u32);
    match total {
        Some(t) if t <= cap as u128 => Ok(()),
        _ => Err(Error::CapExceeded {
            what: "product enumeration",
            cap,
        }),
    }
}

/// Folds `f` over every product `T(h)` of exactly `m ≥ 1` letters. The first
/// letter is spread over the rayon pool; partial results are combined with
/// `combine`, which must be associative and commutative.
fn fold_products<T, A, F, C>(spec: &GameSpec<T>, m: usize, init: A, f: F, combine: C) -> A
where
    T: Scalar,
    A: Copy + Send + Sync,
    F: Fn(A, &Matrix<T>) -> A + Sync,
    C: Fn(A, A) -> A + Sync + Send,
{
    fn rec<T: Scalar, A: Copy, F: Fn(A, &Matrix<T>) -> A>(
        spec: &GameSpec<T>,
        prefix: &Matrix<T>,
        remaining: usize,
        acc: A,
        f: &F,
    ) -> A {
        if remaining == 0 {
            return f(acc, prefix);
        }
        spec.letters().fold(acc, |acc, (i, j, s)| {
            rec(spec, &prefix.mul(spec.matrix(i, j, s)), remaining - 1, acc, f)
        })
    }
    let letters: Vec<_> = spec.letters().collect();
    letters
        .par_iter()
        .map(|&(i, j, s)| rec(spec, spec.matrix(i, j, s), m - 1, init, &f))
        .reduce(|| init, &combine)
}

/// Maximum of `τ_e` or `τ_p` over all products of length `m`.
pub fn max_coefficient<T: Scalar>(spec: &GameSpec<T>, m: usize, kind: CoefficientKind, cap: usize) -> Result<T> {
    if m == 0 {
        return Err(Error::InvalidArgument("product length must be at least 1".into()));
    }
    if kind == CoefficientKind::TauE && !spec.is_blind() {
        return Err(Error::NotBlind {
            signals: spec.num_signals(),
        });
    }
    check_enumeration(spec, m, cap)?;
    let coef = |p: &Matrix<T>| match kind {
        CoefficientKind::TauE => ergodicity_unchecked(p),
        CoefficientKind::TauP => birkhoff_coefficient(p),
    };
    Ok(fold_products(spec, m, T::zero(), |acc, p| acc.max(coef(p)), |a, b| a.max(b)))
}

/// Lower bound on the smallest row sum of any length-`m` product, by the
/// recursion `l₁(k) = min row sum`, `l_t(k) = min_a Σ_{k'} P_{k,k'}(a) l_{t−1}(k')`.
pub fn mu_lower_bound<T: Scalar>(spec: &GameSpec<T>, m: usize) -> T {
    let n = spec.num_states();
    let mut l = vec![T::one(); n];
    for _ in 0..m {
        let next: Vec<T> = (0..n)
            .map(|k| {
                spec.letters()
                    .map(|(i, j, s)| {
                        spec.matrix(i, j, s)
                            .row(k)
                            .iter()
                            .zip(&l)
                            .map(|(&p, &x)| p * x)
                            .sum::<T>()
                    })
                    .fold(T::infinity(), T::min)
            })
            .collect();
        l = next;
    }
    l.into_iter().fold(T::infinity(), T::min)
}

/// Exact `min_{k, h} Σ_{k'} T_{k,k'}(h)` over all products of length `m`.
pub fn exact_mu<T: Scalar>(spec: &GameSpec<T>, m: usize, cap: usize) -> Result<T> {
    if m == 0 {
        return Ok(T::one());
    }
    check_enumeration(spec, m, cap)?;
    Ok(fold_products(
        spec,
        m,
        T::infinity(),
        |acc, p| p.row_sums().into_iter().fold(acc, T::min),
        |a, b| a.min(b),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateSource {
    Ergodic,
    Primitive,
    User,
}

/// `(ε, m_ε, δ_ε)` with the data it was derived from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoeblinCertificate {
    pub epsilon: f64,
    pub m_eps: u64,
    pub delta_eps: f64,
    pub source: CertificateSource,
    pub tau_bar: f64,
    pub base_length: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_eps: Option<f64>,
}

impl DoeblinCertificate {
    /// Certificate supplied by the caller; only the basic ranges are checked.
    pub fn user(epsilon: f64, m_eps: u64, delta_eps: f64) -> Result<Self> {
        let cert = Self {
            epsilon,
            m_eps,
            delta_eps,
            source: CertificateSource::User,
            tau_bar: 0.0,
            base_length: m_eps as usize,
            mu_eps: None,
        };
        cert.check()?;
        Ok(cert)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if self.m_eps == 0 || !(self.delta_eps > 0.0 && self.delta_eps <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "certificate needs m_eps >= 1 and delta_eps in (0, 1], got ({}, {})",
                self.m_eps, self.delta_eps
            )));
        }
        if !(self.tau_bar >= 0.0 && self.tau_bar < 1.0) {
            return Err(Error::InvalidArgument(format!("tau_bar {} outside [0, 1)", self.tau_bar)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CertificateOptions {
    /// Limit on the number of products enumerated for `τ̄` and exact `μ`.
    pub enum_cap: usize,
    /// Enumerate `μ` exactly when it fits under `enum_cap`.
    pub exact_mu: bool,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            enum_cap: 1_000_000,
            exact_mu: false,
        }
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1)")))
    }
}

fn blocks_needed(target: f64, tau_bar: f64, m_star: usize) -> Result<u64> {
    if tau_bar <= 0.0 {
        return Ok(m_star as u64);
    }
    let blocks = ceil_tol(target.ln() / tau_bar.ln()).max(1.0);
    let m_eps = blocks * m_star as f64;
    if !m_eps.is_finite() || m_eps > u64::MAX as f64 {
        return Err(Error::NumericalFailure(format!("m_eps overflows ({m_eps})")));
    }
    Ok(m_eps as u64)
}

/// `⌈ln(ε/2) / ln τ̄⌉ · m*`, or `m*` when `τ̄ = 0`.
pub fn ergodic_m_eps(eps: f64, tau_bar: f64, m_star: usize) -> Result<u64> {
    blocks_needed(eps / 2.0, tau_bar, m_star)
}

/// `⌈ln(ε/2) / ln τ̄⌉ · m*`, or `m*` when `τ̄ = 0`.
///
/// Normalized rows of a matrix with Birkhoff coefficient `τ` can sit `2τ`
/// apart in L1 (two vertex beliefs through `[[.6, .4], [.45, .55]]` land
/// 0.3 apart with `τ ≈ 0.15`), so the target is `ε/2` as in the ergodic case.
pub fn primitive_m_eps(eps: f64, tau_bar: f64, m_star: usize) -> Result<u64> {
    blocks_needed(eps / 2.0, tau_bar, m_star)
}

/// `|I×J|^{−m_ε}`.
pub fn ergodic_delta(m_eps: u64, action_pairs: usize) -> Result<f64> {
    nonzero_delta(m_eps, -(m_eps as f64) * (action_pairs as f64).ln())
}

/// `(1/(|I||J|))^{m_ε−1} · μ_ε`.
pub fn primitive_delta(m_eps: u64, action_pairs: usize, mu: f64) -> Result<f64> {
    nonzero_delta(m_eps, -((m_eps - 1) as f64) * (action_pairs as f64).ln() + mu.ln())
}

fn nonzero_delta(m_eps: u64, log_delta: f64) -> Result<f64> {
    let d = log_delta.exp();
    if d > 0.0 && d.is_normal() {
        Ok(d.min(1.0))
    } else {
        Err(Error::CertificateUnderflow { m_eps })
    }
}

/// Certificate for a blind game whose products eventually scramble.
pub fn ergodic_certificate<T: Scalar>(
    spec: &GameSpec<T>,
    eps: f64,
    opts: &CertificateOptions,
) -> Result<DoeblinCertificate> {
    check_epsilon(eps)?;
    if !spec.is_blind() {
        return Err(Error::NotBlind {
            signals: spec.num_signals(),
        });
    }
    let bound = default_bound(PatternKind::Scrambling, spec.num_states());
    let m_star = minimal_uniform_length(spec, PatternKind::Scrambling, None)?.ok_or(Error::NotErgodic { bound })?;
    let tau_bar = max_coefficient(spec, m_star, CoefficientKind::TauE, opts.enum_cap)?.as_f64();
    let m_eps = ergodic_m_eps(eps, tau_bar, m_star)?;
    let pairs = spec.num_actions1() * spec.num_actions2();
    Ok(DoeblinCertificate {
        epsilon: eps,
        m_eps,
        delta_eps: ergodic_delta(m_eps, pairs)?,
        source: CertificateSource::Ergodic,
        tau_bar,
        base_length: m_star,
        mu_eps: None,
    })
}

/// Certificate for a game whose products of some fixed length are positive.
pub fn primitive_certificate<T: Scalar>(
    spec: &GameSpec<T>,
    eps: f64,
    opts: &CertificateOptions,
) -> Result<DoeblinCertificate> {
    check_epsilon(eps)?;
    let bound = default_bound(PatternKind::Positive, spec.num_states());
    let m_star = minimal_uniform_length(spec, PatternKind::Positive, None)?.ok_or(Error::NotPrimitive { bound })?;
    let tau_bar = max_coefficient(spec, m_star, CoefficientKind::TauP, opts.enum_cap)?.as_f64();
    let m_eps = primitive_m_eps(eps, tau_bar, m_star)?;
    let m_usize = usize::try_from(m_eps).map_err(|_| Error::NumericalFailure("m_eps too large".into()))?;
    let mu = if opts.exact_mu && check_enumeration(spec, m_usize, opts.enum_cap).is_ok() {
        exact_mu(spec, m_usize, opts.enum_cap)?
    } else {
        mu_lower_bound(spec, m_usize)
    }
    .as_f64();
    if !(mu > 0.0) {
        return Err(Error::CertificateUnderflow { m_eps });
    }
    let pairs = spec.num_actions1() * spec.num_actions2();
    Ok(DoeblinCertificate {
        epsilon: eps,
        m_eps,
        delta_eps: primitive_delta(m_eps, pairs, mu)?,
        source: CertificateSource::Primitive,
        tau_bar,
        base_length: m_star,
        mu_eps: Some(mu),
    })
}

/// Primitive first (any signal set), then ergodic (blind games only).
pub fn derive_certificate<T: Scalar>(
    spec: &GameSpec<T>,
    eps: f64,
    opts: &CertificateOptions,
) -> Result<DoeblinCertificate> {
    match primitive_certificate(spec, eps, opts) {
        Ok(c) => Ok(c),
        Err(Error::NotPrimitive { .. }) if spec.is_blind() => match ergodic_certificate(spec, eps, opts) {
            Err(Error::NotErgodic { .. }) => Err(Error::NoCertificate),
            other => other,
        },
        Err(Error::NotPrimitive { .. }) => Err(Error::NoCertificate),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_f64_rows(rows)
    }

    #[test]
    fn ergodicity_examples() {
        assert_eq!(ergodicity_coefficient(&m(&[&[0.3, 0.7], &[0.3, 0.7]])).unwrap(), 0.0);
        assert_eq!(ergodicity_coefficient(&Matrix::<f64>::identity(2)).unwrap(), 1.0);
        let t = ergodicity_coefficient(&m(&[&[0.8, 0.2], &[0.4, 0.6]])).unwrap();
        assert!((t - 0.4).abs() < 1e-15);
        assert!(matches!(
            ergodicity_coefficient(&m(&[&[0.5, 0.4], &[0.5, 0.5]])),
            Err(Error::NotStochastic { row: 0, .. })
        ));
    }

    #[test]
    fn birkhoff_examples() {
        assert_eq!(birkhoff_coefficient(&m(&[&[1.0, 0.0], &[0.5, 0.5]])), 1.0);
        assert_eq!(birkhoff_coefficient(&m(&[&[0.5, 0.5], &[0.5, 0.5]])), 0.0);
        let p = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert!((birkhoff_psi(&p) - 0.25).abs() < 1e-15);
        assert!((birkhoff_coefficient(&p) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pattern_product_matches_matrix_product() {
        let a = m(&[&[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]);
        let b = m(&[&[0.0, 1.0, 0.0], &[0.0, 0.5, 0.5], &[1.0, 0.0, 0.0]]);
        assert_eq!(
            PatternMatrix::from_matrix(&a).mul(&PatternMatrix::from_matrix(&b)),
            PatternMatrix::from_matrix(&a.mul(&b))
        );
    }

    #[test]
    fn minimal_length_examples() {
        let pos = fixtures::blind_from_matrices::<f64>(&[&[&[0.5, 0.5], &[0.2, 0.8]]], 1, 1);
        assert_eq!(minimal_uniform_length(&pos, PatternKind::Positive, None).unwrap(), Some(1));

        let ident = fixtures::blind_from_matrices::<f64>(
            &[&[&[0.5, 0.5], &[0.5, 0.5]], &[&[1.0, 0.0], &[0.0, 1.0]]],
            2,
            1,
        );
        assert_eq!(minimal_uniform_length(&ident, PatternKind::Scrambling, None).unwrap(), None);

        let scr = fixtures::blind_from_matrices::<f64>(
            &[&[&[0.5, 0.5], &[0.5, 0.5]], &[&[1.0, 0.0], &[0.5, 0.5]]],
            2,
            1,
        );
        assert_eq!(minimal_uniform_length(&scr, PatternKind::Scrambling, None).unwrap(), Some(1));
        // [[1,0],[.5,.5]] is never positive: its powers keep the zero.
        assert_eq!(minimal_uniform_length(&scr, PatternKind::Positive, None).unwrap(), None);
    }

    #[test]
    fn cyclic_permutation_needs_length_two() {
        // Letters: cyclic shift and a matrix mixing states 0 and 1.
        let spec = fixtures::blind_from_matrices::<f64>(
            &[&[&[0.0, 1.0], &[1.0, 0.0]], &[&[0.5, 0.5], &[0.0, 1.0]]],
            2,
            1,
        );
        assert_eq!(minimal_uniform_length(&spec, PatternKind::Scrambling, None).unwrap(), None);
        let spec = fixtures::blind_from_matrices::<f64>(&[&[&[0.5, 0.5], &[1.0, 0.0]]], 1, 1);
        assert_eq!(minimal_uniform_length(&spec, PatternKind::Positive, None).unwrap(), Some(2));
    }

    #[test]
    fn max_coefficient_over_two_letters() {
        let a = [0.9, 0.1, 0.2, 0.8];
        let b = [0.6, 0.4, 0.5, 0.5];
        let spec = fixtures::blind_from_matrices::<f64>(
            &[&[&a[..2], &a[2..]], &[&b[..2], &b[2..]]],
            2,
            1,
        );
        let ms = [spec.matrix(0, 0, 0).clone(), spec.matrix(1, 0, 0).clone()];
        let mut expect: f64 = 0.0;
        for x in &ms {
            for y in &ms {
                expect = expect.max(birkhoff_coefficient(&x.mul(y)));
            }
        }
        let got = max_coefficient(&spec, 2, CoefficientKind::TauP, 100).unwrap();
        assert_eq!(got, expect);
        assert!(matches!(
            max_coefficient(&spec, 8, CoefficientKind::TauP, 100),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn mu_bounds() {
        let spec = fixtures::blind_rank_one_pair::<f64>();
        for k in 1..5 {
            assert!((mu_lower_bound(&spec, k) - 1.0).abs() < 1e-12);
        }
        let split = fixtures::signal_split::<f64>();
        for m in 1..4 {
            let lb = mu_lower_bound(&split, m);
            let ex = exact_mu(&split, m, 10_000).unwrap();
            assert!(lb > 0.0 && lb <= ex + 1e-15, "m = {m}: {lb} vs {ex}");
        }
        // One step: the recursion is exact.
        assert!((mu_lower_bound(&split, 1) - exact_mu(&split, 1, 100).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ergodic_worked_example() {
        let spec = fixtures::blind_from_matrices::<f64>(
            &[&[&[0.75, 0.25], &[0.25, 0.75]], &[&[0.5, 0.5], &[0.5, 0.5]]],
            2,
            1,
        );
        let c = ergodic_certificate(&spec, 0.1, &CertificateOptions::default()).unwrap();
        assert_eq!((c.base_length, c.m_eps), (1, 5));
        assert!((c.tau_bar - 0.5).abs() < 1e-15);
        assert!((c.delta_eps - 2f64.powi(-5)).abs() < 1e-15 * c.delta_eps.max(1.0));
    }

    #[test]
    fn degenerate_tau_bar() {
        let spec = fixtures::constant_game::<f64>(0.3);
        let c = ergodic_certificate(&spec, 0.1, &CertificateOptions::default()).unwrap();
        assert_eq!((c.m_eps, c.base_length, c.tau_bar), (1, 1, 0.0));
        let pairs = (spec.num_actions1() * spec.num_actions2()) as f64;
        assert!((c.delta_eps - 1.0 / pairs).abs() < 1e-15);
    }

    #[test]
    fn primitive_formula_example() {
        assert_eq!(primitive_m_eps(0.1, 0.25, 2).unwrap(), 6);
        assert_eq!(ergodic_m_eps(0.1, 0.5, 1).unwrap(), 5);
        assert!(matches!(ergodic_delta(100_000, 4), Err(Error::CertificateUnderflow { .. })));
    }

    #[test]
    fn certificate_json_round_trip() {
        let c = DoeblinCertificate::user(0.2, 3, 0.01).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.contains("\"source\":\"user\""));
        assert_eq!(serde_json::from_str::<DoeblinCertificate>(&s).unwrap(), c);
    }
}
