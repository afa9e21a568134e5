//! Batch evaluation over a grid of systems, one row per `(d, m, n)`.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::calculus::{expected_vec_dim, virtual_dim, SystemSpec};
use crate::certify::{CertPolicy, Certifier, Method};
use crate::exec::Exec;
use crate::oracle::{probe_speciality, Speciality};
use crate::store::{CacheEntry, Evidence, ResultStore, Status};

/// Column order of [`SweepRow`] in tabular output.
pub const COLUMNS: [&str; 10] =
    ["d", "m", "n", "virtual", "expected_vec", "oracle_vec", "status", "cert_method", "wall_time_ms", "error"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: i64,
    pub m: u64,
    pub n: u64,
    #[serde(rename = "virtual")]
    pub virtual_dim: i64,
    pub expected_vec: u64,
    pub oracle_vec: Option<u64>,
    /// `NonSpecialCertified`, `ProbablySpecial(gap)` or `Unknown`.
    pub status: String,
    pub cert_method: Option<String>,
    pub wall_time_ms: u64,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn spec(&self) -> SystemSpec {
        SystemSpec { d: self.d, m: self.m, n: self.n }
    }
}

pub fn status_string(status: Status) -> String {
    match status {
        Status::NonSpecial => "NonSpecialCertified".into(),
        Status::ProbablySpecial(gap) => format!("ProbablySpecial({gap})"),
        Status::Unknown => "Unknown".into(),
    }
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub policy: CertPolicy,
    /// Attempt a certificate for every row.
    pub certify: bool,
    /// Record wall time; off gives byte-reproducible output.
    pub timing: bool,
    pub exec: Exec,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { policy: CertPolicy::default(), certify: true, timing: true, exec: Exec::default() }
    }
}

/// Grid ordered by `d`, then `m`, then `n`.
pub fn grid(ds: impl IntoIterator<Item = i64>, ms: &[u64], ns: &[u64]) -> Vec<SystemSpec> {
    let mut specs = Vec::new();
    for d in ds {
        for &m in ms {
            for &n in ns {
                specs.push(SystemSpec { d, m, n });
            }
        }
    }
    specs
}

/// Rows in the order of `specs`. Results go into `store` when given.
pub fn sweep(specs: &[SystemSpec], opts: &SweepOptions, store: Option<Arc<ResultStore>>) -> Vec<SweepRow> {
    let store = store.unwrap_or_default();
    let certifier = Certifier::with_store(opts.policy.clone(), store);
    opts.exec.map(specs, |&spec| evaluate(spec, &certifier, opts))
}

/// One row: certificate first, then a two-prime oracle probe when the
/// certificate does not already pin the dimension down.
pub fn evaluate(spec: SystemSpec, certifier: &Certifier, opts: &SweepOptions) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        d: spec.d,
        m: spec.m,
        n: spec.n,
        virtual_dim: virtual_dim(spec).unwrap_or(-1),
        expected_vec: expected_vec_dim(spec).0,
        oracle_vec: None,
        status: status_string(Status::Unknown),
        cert_method: None,
        wall_time_ms: 0,
        error: None,
    };
    let mut status = Status::Unknown;
    let mut oracle_needed = true;
    let mut errors = Vec::new();
    let mut cert_failure = None;

    if opts.certify {
        match certifier.certify(spec) {
            Ok(cert) => {
                status = Status::NonSpecial;
                row.cert_method = Some(cert.method.name().to_string());
                if matches!(cert.method, Method::OracleWitness { .. }) {
                    row.oracle_vec = Some(cert.proven_dim().0);
                    oracle_needed = false;
                }
            }
            Err(f) => cert_failure = Some(format!("certify: {f}")),
        }
    }

    let policy = certifier.policy();
    let oracle_ok = spec.d >= 0 && spec.monomial_count() <= policy.max_oracle_cols && policy.oracle.trials > 0;
    if oracle_needed && oracle_ok {
        match probe_speciality(spec, &policy.oracle) {
            Ok(probe) => {
                row.oracle_vec = Some(probe.vec_dim().0);
                let from_oracle = match probe.status {
                    Speciality::NonSpecialCertified => Status::NonSpecial,
                    Speciality::ProbablySpecial(gap) => Status::ProbablySpecial(gap),
                    Speciality::Unknown => Status::Unknown,
                };
                if status == Status::Unknown {
                    status = from_oracle;
                    let r = probe.witness().unwrap_or(&probe.primary);
                    let evidence = Evidence::Oracle {
                        prime: r.prime,
                        seed: r.seed,
                        trials: r.trials_run,
                        witness_trial: r.witness_trial,
                    };
                    let _ = certifier.store().put(CacheEntry::new(spec, status, evidence));
                }
            }
            Err(e) => errors.push(format!("oracle: {e}")),
        }
    }

    // A failed certificate is only an error when no oracle probe ran either;
    // otherwise the status column already says what is known.
    if row.oracle_vec.is_none() {
        errors.extend(cert_failure);
    }
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row.status = status_string(status);
    if opts.timing {
        row.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> SweepOptions {
        SweepOptions { timing: false, ..Default::default() }
    }

    #[test]
    fn grid_order() {
        let g = grid(0..=1, &[1, 2], &[4, 9]);
        assert_eq!(g.len(), 8);
        assert_eq!(g[0], SystemSpec { d: 0, m: 1, n: 4 });
        assert_eq!(g[1], SystemSpec { d: 0, m: 1, n: 9 });
        assert_eq!(g[2], SystemSpec { d: 0, m: 2, n: 4 });
        assert_eq!(g[7], SystemSpec { d: 1, m: 2, n: 9 });
    }

    #[test]
    fn rows_for_known_systems() {
        let specs = [
            SystemSpec { d: 8, m: 1, n: 16 },
            SystemSpec { d: 2, m: 2, n: 2 },
            SystemSpec { d: 5, m: 1, n: 4 },
        ];
        let rows = sweep(&specs, &opts(), None);
        assert_eq!(rows[0].status, "NonSpecialCertified");
        assert_eq!(rows[0].cert_method.as_deref(), Some("degeneration"));
        assert_eq!(rows[0].oracle_vec, Some(29));
        assert_eq!(rows[1].status, "ProbablySpecial(1)");
        assert_eq!(rows[1].oracle_vec, Some(1));
        assert_eq!(rows[1].expected_vec, 0);
        assert!(rows[1].error.is_none());
        assert_eq!(rows[2].cert_method.as_deref(), Some("oracle_witness"));
        assert_eq!(rows[2].virtual_dim, 16);
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let specs = grid(0..=8, &[1, 2], &[4, 5, 9]);
        let a = sweep(&specs, &SweepOptions { exec: Exec::Sequential, ..opts() }, None);
        let b = sweep(&specs, &SweepOptions { exec: Exec::Parallel, ..opts() }, None);
        assert_eq!(a, b);
    }

    #[test]
    fn results_land_in_the_store() {
        let store = Arc::new(ResultStore::new());
        sweep(&[SystemSpec { d: 4, m: 2, n: 5 }], &opts(), Some(store.clone()));
        let entry = store.get(SystemSpec { d: 4, m: 2, n: 5 }).unwrap();
        assert_eq!(entry.status, Status::ProbablySpecial(1));
    }
}
