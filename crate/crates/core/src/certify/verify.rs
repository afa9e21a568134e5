use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Certificate, Method};
use crate::calculus::{expected_vec_dim, select_k, FiberedProduct, SystemSpec};
use crate::exec::Exec;
use crate::oracle::{matrix::check_prime, trial_rank, PrimeField};

/// A failed check, located by the chain of systems from the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyError {
    pub path: Vec<SystemSpec>,
    pub reason: String,
}

impl fmt::Display for VerifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path: Vec<String> = self.path.iter().map(ToString::to_string).collect();
        write!(f, "{} at {}", self.reason, path.join(" -> "))
    }
}

impl std::error::Error for VerifyError {}

pub fn verify_certificate(cert: &Certificate) -> bool {
    check_certificate(cert, Exec::default()).is_ok()
}

/// Re-derives every claim in the tree from the dimension formulas alone and
/// replays every rank witness from its seed.
pub fn check_certificate(cert: &Certificate, exec: Exec) -> Result<(), VerifyError> {
    check_node(cert, exec).map_err(|mut e| {
        e.path.reverse();
        e
    })
}

fn check_node(cert: &Certificate, exec: Exec) -> Result<(), VerifyError> {
    let spec = cert.spec;
    let bail = |reason: String| Err(VerifyError { path: vec![spec], reason });
    match &cert.method {
        Method::TrivialEmpty => {
            if spec.d >= 0 {
                return bail(format!("trivially empty claimed for degree {}", spec.d));
            }
        }
        Method::TrivialFull => {
            if !spec.imposes_nothing() {
                return bail("trivially full claimed but conditions are imposed".into());
            }
        }
        Method::OracleWitness { prime, seed, trial } => {
            if spec.d < 0 {
                return bail("rank witness for a negative degree".into());
            }
            let Ok(field) = PrimeField::new(*prime) else {
                return bail(format!("witness modulus {prime} is not a usable prime"));
            };
            if check_prime(spec, field).is_err() {
                return bail(format!("witness modulus {prime} does not exceed d and m"));
            }
            let rank = match trial_rank(spec, field, *seed, *trial, exec) {
                Ok(r) => r,
                Err(e) => return bail(format!("replay failed: {e}")),
            };
            let kernel = spec.monomial_count() - rank;
            let expected = expected_vec_dim(spec).0;
            if kernel != expected {
                return bail(format!("replayed trial {trial} has kernel {kernel}, expected {expected}"));
            }
        }
        Method::Degeneration { n1, n2, k, case, dim_l0, children } => {
            if spec.d < 0 {
                return bail("degeneration of a negative-degree system".into());
            }
            if *n1 < 2 || *n2 < 2 || n1.checked_mul(*n2) != Some(spec.n) {
                return bail(format!("{n1} x {n2} is not a split of n = {}", spec.n));
            }
            let admissible = select_k(spec.m, *n2).map(|s| s.contains(*k)).unwrap_or(false);
            if !admissible {
                return bail(format!("k = {k} is not admissible for m = {}, n2 = {n2}", spec.m));
            }
            let fp = match FiberedProduct::new(spec.d, *k, spec.m, *n1, *n2) {
                Ok(fp) => fp,
                Err(e) => return bail(e.to_string()),
            };
            let recomputed_case = fp.classify();
            if recomputed_case != *case || !case.is_conclusive() {
                return bail(format!("case {case} recorded, {recomputed_case} recomputed"));
            }
            let recomputed = fp.dim_l0();
            let expected = expected_vec_dim(spec);
            if recomputed != *dim_l0 || *dim_l0 != expected {
                return bail(format!("dim_L0 {dim_l0} recorded, {recomputed} recomputed, {expected} expected"));
            }
            let subs = fp.sub_systems();
            for (child, want) in children.iter().zip(subs) {
                if child.spec != want {
                    return bail(format!("child {} where {want} is required", child.spec));
                }
            }
            for outcome in exec.map(children.as_slice(), |c| check_node(c, exec)) {
                if let Err(mut e) = outcome {
                    e.path.push(spec);
                    return Err(e);
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{CaseLabel, VecDim};
    use crate::certify::{certify, CertPolicy};

    fn cert_4_1_16() -> Certificate {
        certify(SystemSpec { d: 4, m: 1, n: 16 }, &CertPolicy::default()).unwrap()
    }

    fn with_method(cert: &Certificate, f: impl FnOnce(&mut Method)) -> Certificate {
        let mut c = cert.clone();
        f(&mut c.method);
        c
    }

    #[test]
    fn roundtrip_accepts() {
        assert!(verify_certificate(&cert_4_1_16()));
    }

    #[test]
    fn tampered_k_rejected() {
        let bad = with_method(&cert_4_1_16(), |m| {
            if let Method::Degeneration { k, .. } = m {
                *k = 3;
            }
        });
        let err = check_certificate(&bad, Exec::Sequential).unwrap_err();
        assert!(err.reason.contains("k = 3"), "{err}");
    }

    #[test]
    fn tampered_dim_rejected() {
        let bad = with_method(&cert_4_1_16(), |m| {
            if let Method::Degeneration { dim_l0, .. } = m {
                *dim_l0 = VecDim(1);
            }
        });
        assert!(!verify_certificate(&bad));
    }

    #[test]
    fn tampered_case_rejected() {
        let bad = with_method(&cert_4_1_16(), |m| {
            if let Method::Degeneration { case, .. } = m {
                *case = CaseLabel::IV;
            }
        });
        assert!(!verify_certificate(&bad));
    }

    #[test]
    fn tampered_leaf_located() {
        let bad = with_method(&cert_4_1_16(), |m| {
            if let Method::Degeneration { children, .. } = m {
                for c in children.iter_mut() {
                    if let Method::OracleWitness { seed, .. } = &mut c.method {
                        *seed ^= 1;
                    }
                }
            }
        });
        // a different seed may still witness; swap a spec instead to be sure
        let worse = with_method(&bad, |m| {
            if let Method::Degeneration { children, .. } = m {
                children[1].spec.n = 5;
            }
        });
        let err = check_certificate(&worse, Exec::Sequential).unwrap_err();
        assert_eq!(err.path[0], SystemSpec { d: 4, m: 1, n: 16 });
    }

    #[test]
    fn fake_witness_for_special_system_rejected() {
        let spec = SystemSpec { d: 2, m: 2, n: 2 };
        for trial in 0..3 {
            let fake = Certificate {
                spec,
                method: Method::OracleWitness { prime: crate::oracle::DEFAULT_PRIME, seed: 1, trial },
            };
            assert!(!verify_certificate(&fake));
        }
    }

    #[test]
    fn trivial_misuse_rejected() {
        let s = SystemSpec { d: 3, m: 1, n: 2 };
        assert!(!verify_certificate(&Certificate { spec: s, method: Method::TrivialEmpty }));
        assert!(!verify_certificate(&Certificate { spec: s, method: Method::TrivialFull }));
    }
}
