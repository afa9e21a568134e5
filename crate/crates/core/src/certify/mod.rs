//! Non-speciality certificates for composite point counts.
//!
//! A system `L_d(m^{n1 n2})` specialises to a limit whose dimension is
//! computed from four smaller systems and an admissible twist `k`. If those
//! four are non-special and the limit dimension equals the expected one, so
//! does the generic dimension (the limit can only be larger). Certificates
//! record that recursion down to rank witnesses and trivial cases.

mod doc;
mod family;
mod verify;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

pub use doc::{CertDocError, CERT_VERSION};
pub use family::{preset_family, Family, FamilyReport, FamilyRow};
pub use verify::{check_certificate, verify_certificate, VerifyError};

use crate::calculus::{expected_vec_dim, select_k, CaseLabel, FiberedProduct, SystemSpec, VecDim};
use crate::oracle::{oracle_dim, OracleConfig};
use crate::store::{CacheEntry, Evidence, ResultStore, Status};

/// Oracle is not attempted above this many columns by default.
pub const DEFAULT_MAX_ORACLE_COLS: u64 = 2000;
/// Systems with at most this many points go to the oracle before any
/// degeneration is tried.
pub const DEFAULT_BASE_POINTS: u64 = 9;
pub const DEFAULT_MAX_DEPTH: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Method {
    OracleWitness { prime: u64, seed: u64, trial: u32 },
    Degeneration {
        n1: u64,
        n2: u64,
        k: i64,
        case: CaseLabel,
        dim_l0: VecDim,
        /// `L_d((k+1)^{n1})`, `L_d(k^{n1})`, `L_{k-1}(m^{n2})`, `L_k(m^{n2})`.
        children: Box<[Certificate; 4]>,
    },
    TrivialEmpty,
    TrivialFull,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::OracleWitness { .. } => "oracle_witness",
            Method::Degeneration { .. } => "degeneration",
            Method::TrivialEmpty => "trivial_empty",
            Method::TrivialFull => "trivial_full",
        }
    }
}

/// Evidence that `spec` has its expected dimension. Serializes as a
/// `cert-v1` document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub spec: SystemSpec,
    pub method: Method,
}

impl Certificate {
    /// Dimension this certificate proves.
    pub fn proven_dim(&self) -> VecDim {
        expected_vec_dim(self.spec)
    }

    pub fn children(&self) -> &[Certificate] {
        match &self.method {
            Method::Degeneration { children, .. } => children.as_slice(),
            _ => &[],
        }
    }

    /// Total number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Certificate::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(Certificate::depth).max().unwrap_or(0)
    }

    pub fn leaves(&self) -> Vec<&Certificate> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(c) = stack.pop() {
            if c.children().is_empty() {
                out.push(c);
            } else {
                stack.extend(c.children().iter().rev());
            }
        }
        out
    }

    /// One line per node, indented by depth.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        self.write_summary(&mut out, 0);
        out
    }

    fn write_summary(&self, out: &mut String, indent: usize) {
        use std::fmt::Write;
        let pad = "  ".repeat(indent);
        let dim = self.proven_dim();
        let _ = match &self.method {
            Method::Degeneration { n1, n2, k, case, dim_l0, .. } => writeln!(
                out,
                "{pad}{} = {dim}: degeneration {n1}x{n2}, k={k}, case {case}, dim_L0={dim_l0}",
                self.spec
            ),
            Method::OracleWitness { prime, seed, trial } => writeln!(
                out,
                "{pad}{} = {dim}: oracle witness (p={prime}, seed={seed:#x}, trial {trial})",
                self.spec
            ),
            Method::TrivialEmpty => writeln!(out, "{pad}{} = 0: negative degree", self.spec),
            Method::TrivialFull => writeln!(out, "{pad}{} = {dim}: no conditions", self.spec),
        };
        for c in self.children() {
            c.write_summary(out, indent + 1);
        }
    }
}

/// How composite point counts are split.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum FactorStrategy {
    /// Every split, most balanced first.
    #[default]
    Auto,
    /// Use exactly this split at the root; deeper levels fall back to `Auto`.
    Fixed { n1: u64, n2: u64 },
    /// Only splits whose `n2` (the per-plane point count) is in the list,
    /// in list order.
    Peel(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertPolicy {
    pub max_oracle_cols: u64,
    pub base_points: u64,
    pub factor_strategy: FactorStrategy,
    pub oracle: OracleConfig,
    pub max_depth: u32,
}

impl Default for CertPolicy {
    fn default() -> Self {
        CertPolicy {
            max_oracle_cols: DEFAULT_MAX_ORACLE_COLS,
            base_points: DEFAULT_BASE_POINTS,
            factor_strategy: FactorStrategy::Auto,
            oracle: OracleConfig::default(),
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// All ordered `(n1, n2)` with `n1 n2 = n` and both at least 2, most
/// balanced first (ties broken by smaller `n1`).
pub fn factor_pairs(n: u64) -> Vec<(u64, u64)> {
    let mut pairs: Vec<(u64, u64)> = (2..=n / 2).filter(|a| n.is_multiple_of(*a)).map(|a| (a, n / a)).filter(|&(_, b)| b >= 2).collect();
    pairs.sort_by_key(|&(a, b)| (a.max(b), a));
    pairs
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    NoFactorizationOracleTooLarge,
    SubSystemFailed,
    DepthExceeded,
    /// Neither the oracle nor any split produced a certificate.
    Exhausted,
    BadFactorPair { n1: u64, n2: u64 },
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureReason::NoFactorizationOracleTooLarge => f.write_str("no factorization and oracle too large"),
            FailureReason::SubSystemFailed => f.write_str("sub-system certification failed"),
            FailureReason::DepthExceeded => f.write_str("depth exceeded"),
            FailureReason::Exhausted => f.write_str("no oracle witness and no admissible degeneration"),
            FailureReason::BadFactorPair { n1, n2 } => write!(f, "factor pair {n1}x{n2} does not split n"),
        }
    }
}

/// Why certification stopped, with the chain of systems leading to the
/// deepest failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub reason: FailureReason,
    pub path: Vec<SystemSpec>,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.reason)?;
        if !self.path.is_empty() {
            let path: Vec<String> = self.path.iter().map(ToString::to_string).collect();
            write!(f, " at {}", path.join(" -> "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Failure {}

/// Certification engine with a shared memo.
///
/// Safe to share across threads; the memo is a [`ResultStore`] and only
/// holds certificates that were either built here or re-verified before use.
pub struct Certifier {
    policy: CertPolicy,
    store: Arc<ResultStore>,
    trusted: Mutex<HashSet<SystemSpec>>,
    failed: Mutex<HashMap<SystemSpec, (u32, Failure)>>,
}

impl Certifier {
    pub fn new(policy: CertPolicy) -> Self {
        Self::with_store(policy, Arc::new(ResultStore::new()))
    }

    pub fn with_store(policy: CertPolicy, store: Arc<ResultStore>) -> Self {
        Certifier { policy, store, trusted: Mutex::new(HashSet::new()), failed: Mutex::new(HashMap::new()) }
    }

    pub fn policy(&self) -> &CertPolicy {
        &self.policy
    }

    pub fn store(&self) -> &Arc<ResultStore> {
        &self.store
    }

    pub fn certify(&self, spec: SystemSpec) -> Result<Certificate, Failure> {
        if let FactorStrategy::Fixed { n1, n2 } = self.policy.factor_strategy {
            if n1.checked_mul(n2) != Some(spec.n) {
                return Err(Failure { reason: FailureReason::BadFactorPair { n1, n2 }, path: vec![spec] });
            }
        }
        self.certify_at(spec, 0).map_err(|mut f| {
            f.path.insert(0, spec);
            f.path.dedup();
            f
        })
    }

    fn certify_at(&self, spec: SystemSpec, depth: u32) -> Result<Certificate, Failure> {
        if spec.d < 0 {
            return Ok(Certificate { spec, method: Method::TrivialEmpty });
        }
        if spec.imposes_nothing() {
            return Ok(Certificate { spec, method: Method::TrivialFull });
        }
        let root = depth == 0;
        if !root {
            if let Some(cert) = self.memo_get(spec) {
                return Ok(cert);
            }
        }
        let remaining = self.policy.max_depth.saturating_sub(depth);
        if let Some((seen_remaining, failure)) = self.failed.lock().unwrap().get(&spec) {
            if remaining <= *seen_remaining {
                return Err(failure.clone());
            }
        }
        let result = self.certify_uncached(spec, depth);
        match &result {
            Ok(cert) => self.memo_put(cert),
            Err(f) => {
                self.failed.lock().unwrap().insert(spec, (remaining, f.clone()));
            }
        }
        result
    }

    fn certify_uncached(&self, spec: SystemSpec, depth: u32) -> Result<Certificate, Failure> {
        let fail = |reason| Err(Failure { reason, path: vec![spec] });
        if depth > self.policy.max_depth {
            return fail(FailureReason::DepthExceeded);
        }
        let oracle_ok = spec.monomial_count() <= self.policy.max_oracle_cols && self.policy.oracle.trials > 0;
        let (pairs, forced) = match (&self.policy.factor_strategy, depth) {
            (FactorStrategy::Fixed { n1, n2 }, 0) => (vec![(*n1, *n2)], true),
            (FactorStrategy::Peel(bases), _) => (peel_pairs(spec.n, bases), false),
            _ => (factor_pairs(spec.n), false),
        };
        let oracle_first = !forced && (spec.n <= self.policy.base_points || pairs.is_empty());

        if oracle_first && oracle_ok {
            if let Some(cert) = self.try_oracle(spec) {
                return Ok(cert);
            }
        }
        if pairs.is_empty() && !oracle_ok {
            return fail(FailureReason::NoFactorizationOracleTooLarge);
        }
        let mut deepest: Option<Failure> = None;
        if depth < self.policy.max_depth {
            for &(n1, n2) in &pairs {
                let Ok(selection) = select_k(spec.m, n2) else { continue };
                for &k in &selection.candidates {
                    match self.try_degeneration(spec, n1, n2, k, depth) {
                        Ok(cert) => return Ok(cert),
                        Err(Some(f)) => {
                            if deepest.as_ref().is_none_or(|d| f.path.len() > d.path.len()) {
                                deepest = Some(f);
                            }
                        }
                        Err(None) => {}
                    }
                }
            }
        } else if !pairs.is_empty() && !(oracle_first && oracle_ok) {
            deepest = Some(Failure { reason: FailureReason::DepthExceeded, path: vec![spec] });
        }
        if !oracle_first && !forced && oracle_ok {
            if let Some(cert) = self.try_oracle(spec) {
                return Ok(cert);
            }
        }
        match deepest {
            Some(mut f) => {
                if f.path.first() != Some(&spec) {
                    f.path.insert(0, spec);
                }
                Err(f)
            }
            None => fail(FailureReason::Exhausted),
        }
    }

    fn try_oracle(&self, spec: SystemSpec) -> Option<Certificate> {
        let res = oracle_dim(spec, &self.policy.oracle).ok()?;
        let trial = res.witness_trial?;
        Some(Certificate { spec, method: Method::OracleWitness { prime: res.prime, seed: res.seed, trial } })
    }

    /// `Err(None)`: the arithmetic rules this split out before any recursion.
    fn try_degeneration(
        &self,
        spec: SystemSpec,
        n1: u64,
        n2: u64,
        k: i64,
        depth: u32,
    ) -> Result<Certificate, Option<Failure>> {
        let fp = FiberedProduct::new(spec.d, k, spec.m, n1, n2).map_err(|_| None)?;
        let case = fp.classify();
        let dim_l0 = fp.dim_l0();
        if !case.is_conclusive() || dim_l0 != expected_vec_dim(spec) {
            return Err(None);
        }
        let subs = fp.sub_systems();
        let mut order = [0usize, 1, 2, 3];
        order.sort_by_key(|&i| (subs[i].monomial_count() * subs[i].conditions().max(1), i));
        let mut slots: [Option<Certificate>; 4] = Default::default();
        for i in order {
            match self.certify_at(subs[i], depth + 1) {
                Ok(c) => slots[i] = Some(c),
                Err(mut f) => {
                    f.path.insert(0, spec);
                    if f.reason != FailureReason::DepthExceeded {
                        f.reason = FailureReason::SubSystemFailed;
                    }
                    return Err(Some(f));
                }
            }
        }
        let children = Box::new(slots.map(|c| c.expect("all four sub-systems certified")));
        Ok(Certificate { spec, method: Method::Degeneration { n1, n2, k, case, dim_l0, children } })
    }

    fn memo_get(&self, spec: SystemSpec) -> Option<Certificate> {
        let entry = self.store.get(spec)?;
        let cert = match entry.evidence {
            Evidence::Certificate(cert) => cert,
            Evidence::Oracle { prime, seed, witness_trial: Some(trial), .. } => {
                Certificate { spec, method: Method::OracleWitness { prime, seed, trial } }
            }
            _ => return None,
        };
        if cert.spec != spec {
            return None;
        }
        if self.trusted.lock().unwrap().contains(&spec) {
            return Some(cert);
        }
        if verify_certificate(&cert) {
            self.trusted.lock().unwrap().insert(spec);
            Some(cert)
        } else {
            None
        }
    }

    fn memo_put(&self, cert: &Certificate) {
        if matches!(cert.method, Method::TrivialEmpty | Method::TrivialFull) {
            return;
        }
        self.trusted.lock().unwrap().insert(cert.spec);
        let entry = CacheEntry::new(cert.spec, Status::NonSpecial, Evidence::Certificate(cert.clone()));
        // An existing NonSpecial entry for the same spec is never downgraded,
        // and a verified certificate is always acceptable evidence.
        let _ = self.store.put(entry);
    }
}

/// Convenience wrapper around a fresh [`Certifier`].
pub fn certify(spec: SystemSpec, policy: &CertPolicy) -> Result<Certificate, Failure> {
    Certifier::new(policy.clone()).certify(spec)
}

fn peel_pairs(n: u64, bases: &[u64]) -> Vec<(u64, u64)> {
    bases
        .iter()
        .filter(|&&b| b >= 2 && n.is_multiple_of(b) && n / b >= 2)
        .map(|&b| (n / b, b))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(d: i64, m: u64, n: u64) -> SystemSpec {
        SystemSpec { d, m, n }
    }

    #[test]
    fn factor_pair_examples() {
        let p16 = factor_pairs(16);
        assert_eq!(p16[0], (4, 4));
        assert_eq!(p16, vec![(4, 4), (2, 8), (8, 2)]);
        let p36 = factor_pairs(36);
        let pos = |p| p36.iter().position(|&x| x == p).unwrap();
        assert!(pos((4, 9)) < pos((2, 18)) && pos((9, 4)) < pos((2, 18)));
        assert_eq!(p36[0], (6, 6));
        assert!(factor_pairs(7).is_empty());
        assert!(factor_pairs(1).is_empty());
        assert_eq!(factor_pairs(4), vec![(2, 2)]);
    }

    #[test]
    fn peel_prefers_listed_bases() {
        assert_eq!(peel_pairs(36, &[4, 9]), vec![(9, 4), (4, 9)]);
        assert_eq!(peel_pairs(16, &[4, 9]), vec![(4, 4)]);
        assert!(peel_pairs(9, &[4]).is_empty());
    }

    #[test]
    fn certify_4_1_16() {
        let cert = certify(spec(4, 1, 16), &CertPolicy::default()).unwrap();
        match &cert.method {
            Method::Degeneration { n1, n2, k, case, dim_l0, children } => {
                assert_eq!((*n1, *n2, *k, *case, *dim_l0), (4, 4, 2, CaseLabel::A, VecDim(0)));
                for c in children.iter() {
                    assert!(matches!(c.method, Method::OracleWitness { .. } | Method::TrivialEmpty), "{c:?}");
                }
            }
            other => panic!("expected degeneration, got {other:?}"),
        }
        assert!(verify_certificate(&cert));
    }

    #[test]
    fn certify_8_1_16_case_ii() {
        let cert = certify(spec(8, 1, 16), &CertPolicy::default()).unwrap();
        let Method::Degeneration { k, case, dim_l0, .. } = cert.method else { panic!() };
        assert_eq!((k, case, dim_l0), (2, CaseLabel::II, VecDim(29)));
    }

    #[test]
    fn certify_small_n_goes_to_oracle() {
        let cert = certify(spec(0, 1, 4), &CertPolicy::default()).unwrap();
        assert!(matches!(cert.method, Method::OracleWitness { .. }));
        assert_eq!(cert.proven_dim(), VecDim(0));
    }

    #[test]
    fn trivial_cases() {
        let p = CertPolicy::default();
        assert_eq!(certify(spec(-2, 3, 4), &p).unwrap().method, Method::TrivialEmpty);
        assert_eq!(certify(spec(3, 0, 4), &p).unwrap().method, Method::TrivialFull);
        assert_eq!(certify(spec(3, 2, 0), &p).unwrap().method, Method::TrivialFull);
    }

    #[test]
    fn special_system_fails() {
        let err = certify(spec(2, 2, 2), &CertPolicy::default()).unwrap_err();
        assert_eq!(err.path[0], spec(2, 2, 2));
    }

    #[test]
    fn prime_n_without_trials_fails() {
        let policy = CertPolicy { oracle: OracleConfig { trials: 0, ..OracleConfig::default() }, ..CertPolicy::default() };
        let err = certify(spec(5, 2, 7), &policy).unwrap_err();
        assert_eq!(err.reason, FailureReason::NoFactorizationOracleTooLarge);
        assert!(certify(spec(5, 2, 7), &CertPolicy::default()).is_ok());
    }

    #[test]
    fn fixed_pair_must_split_n() {
        let policy = CertPolicy { factor_strategy: FactorStrategy::Fixed { n1: 3, n2: 5 }, ..CertPolicy::default() };
        let err = certify(spec(4, 1, 16), &policy).unwrap_err();
        assert_eq!(err.reason, FailureReason::BadFactorPair { n1: 3, n2: 5 });
    }

    #[test]
    fn fixed_pair_forces_root_split() {
        let policy = CertPolicy { factor_strategy: FactorStrategy::Fixed { n1: 2, n2: 8 }, ..CertPolicy::default() };
        let cert = certify(spec(12, 1, 16), &policy).unwrap();
        let Method::Degeneration { n1, n2, .. } = cert.method else { panic!() };
        assert_eq!((n1, n2), (2, 8));
        assert!(verify_certificate(&cert));
    }

    #[test]
    fn depth_limit() {
        let policy = CertPolicy { max_depth: 0, max_oracle_cols: 0, ..CertPolicy::default() };
        let err = certify(spec(10, 1, 16), &policy).unwrap_err();
        assert_eq!(err.reason, FailureReason::DepthExceeded);
    }

    #[test]
    fn oracle_too_large_for_prime_n() {
        let policy = CertPolicy { max_oracle_cols: 10, ..CertPolicy::default() };
        let err = certify(spec(10, 1, 13), &policy).unwrap_err();
        assert_eq!(err.reason, FailureReason::NoFactorizationOracleTooLarge);
    }

    #[test]
    fn warm_cache_certificates_verify() {
        let certifier = Certifier::new(CertPolicy::default());
        let a = certifier.certify(spec(10, 2, 16)).unwrap();
        let b = certifier.certify(spec(10, 2, 16)).unwrap();
        assert_eq!(a, b);
        assert!(verify_certificate(&b));
        assert!(certifier.store().len() >= 4);
    }

    #[test]
    fn certify_10_2_16_k4() {
        let cert = certify(spec(10, 2, 16), &CertPolicy::default()).unwrap();
        let Method::Degeneration { k, dim_l0, .. } = cert.method else { panic!() };
        assert_eq!((k, dim_l0), (4, VecDim(18)));
    }

    #[test]
    fn summary_mentions_each_node() {
        let cert = certify(spec(8, 1, 16), &CertPolicy::default()).unwrap();
        let s = cert.summary();
        assert_eq!(s.lines().count(), cert.size());
        assert!(s.starts_with("L_8(1^16) = 29: degeneration 4x4, k=2, case II"));
    }
}
