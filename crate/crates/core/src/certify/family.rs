use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{CertPolicy, Certificate, Certifier, Failure, FactorStrategy};
use crate::calculus::SystemSpec;
use crate::exec::Exec;
use crate::store::ResultStore;

/// Point counts built from the base families 4 and 9.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    FourPow(u32),
    NinePow(u32),
    /// `4^h * 9^k`
    Mixed(u32, u32),
}

impl Family {
    pub fn points(&self) -> u64 {
        match *self {
            Family::FourPow(h) => 4u64.pow(h),
            Family::NinePow(h) => 9u64.pow(h),
            Family::Mixed(h, k) => 4u64.pow(h) * 9u64.pow(k),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::FourPow(h) => write!(f, "4^{h}"),
            Family::NinePow(h) => write!(f, "9^{h}"),
            Family::Mixed(h, k) => write!(f, "4^{h}*9^{k}"),
        }
    }
}

impl FromStr for Family {
    type Err = String;

    /// Accepts `4^h`, `9^h` and `4^h*9^k`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let power = |part: &str, base: &str| -> Option<u32> {
            let (b, e) = part.trim().split_once('^')?;
            (b == base).then(|| e.parse().ok()).flatten()
        };
        let bad = || format!("unrecognised family {s:?}; expected 4^h, 9^h or 4^h*9^k");
        let family = match s.split_once('*') {
            Some((a, b)) => Family::Mixed(power(a, "4").ok_or_else(bad)?, power(b, "9").ok_or_else(bad)?),
            None => match (power(s, "4"), power(s, "9")) {
                (Some(h), _) => Family::FourPow(h),
                (_, Some(h)) => Family::NinePow(h),
                _ => return Err(bad()),
            },
        };
        let h = match family {
            Family::FourPow(h) | Family::NinePow(h) | Family::Mixed(h, _) => h,
        };
        if h == 0 {
            return Err(format!("family {s:?} needs a positive exponent h"));
        }
        if family.points() > crate::calculus::MAX_PARAMETER {
            return Err(format!("family {s:?} has too many points"));
        }
        Ok(family)
    }
}

#[derive(Clone, Debug)]
pub struct FamilyRow {
    pub spec: SystemSpec,
    pub result: Result<Certificate, Failure>,
}

#[derive(Clone, Debug)]
pub struct FamilyReport {
    pub family: Family,
    pub rows: Vec<FamilyRow>,
}

impl FamilyReport {
    pub fn all_certified(&self) -> bool {
        self.rows.iter().all(|r| r.result.is_ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&SystemSpec, &Failure)> {
        self.rows.iter().filter_map(|r| r.result.as_ref().err().map(|f| (&r.spec, f)))
    }

    /// Total certificate nodes across the batch.
    pub fn total_nodes(&self) -> usize {
        self.rows.iter().filter_map(|r| r.result.as_ref().ok()).map(Certificate::size).sum()
    }
}

/// Certifies `L_d(m^n)` for every `0 <= d <= d_max`, `1 <= m <= m_max` with
/// `n` from `family`, splitting off one factor 4 or 9 at a time.
///
/// Rows are independent and run under `exec`; failures are recorded per row.
pub fn preset_family(
    family: Family,
    d_max: i64,
    m_max: u64,
    policy: &CertPolicy,
    store: Option<Arc<ResultStore>>,
    exec: Exec,
) -> FamilyReport {
    let mut policy = policy.clone();
    if !matches!(policy.factor_strategy, FactorStrategy::Fixed { .. }) {
        policy.factor_strategy = FactorStrategy::Peel(vec![4, 9]);
    }
    let certifier = match store {
        Some(s) => Certifier::with_store(policy, s),
        None => Certifier::new(policy),
    };
    let n = family.points();
    let specs: Vec<SystemSpec> =
        (0..=d_max).flat_map(|d| (1..=m_max).map(move |m| SystemSpec { d, m, n })).collect();
    let rows = exec.map(&specs, |&spec| FamilyRow { spec, result: certifier.certify(spec) });
    FamilyReport { family, rows }
}
