//! Generic dimension of `L_d(m^n)` from the rank of the conditions matrix at
//! random points over a prime field.
//!
//! A trial whose rank reaches the expected rank is a sound characteristic-0
//! witness: a non-vanishing minor mod `p` lifts to a non-vanishing integer
//! minor at the same points, and the rank at special points never exceeds
//! the generic rank. A rank deficit, on the other hand, is only evidence.

pub mod field;
pub mod matrix;
pub mod rank;

use serde::{Deserialize, Serialize};

pub use field::{is_prime, previous_prime, PrimeField, DEFAULT_PRIME, SECOND_PRIME};
pub use matrix::{build_conditions_matrix, hasse_row, monomial_basis, ConditionsMatrix, PointConfig};
pub use rank::rank_mod_p;

use crate::calculus::{expected_vec_dim, SystemSpec, VecDim};
use crate::error::{Error, Result};
use crate::exec::Exec;

/// Default RNG seed for point generation.
pub const DEFAULT_SEED: u64 = 0xF47;
pub const DEFAULT_TRIALS: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleConfig {
    pub prime: u64,
    pub trials: u32,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { prime: DEFAULT_PRIME, trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, exec: Exec::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub spec: SystemSpec,
    /// Minimum over trials of `cols - rank`.
    pub vec_dim: VecDim,
    pub expected: VecDim,
    pub certified_nonspecial: bool,
    /// First trial whose rank reached the expected rank.
    pub witness_trial: Option<u32>,
    /// Rank of each trial, in trial order.
    pub ranks: Vec<u64>,
    pub trials_run: u32,
    pub prime: u64,
    pub seed: u64,
}

impl OracleResult {
    pub fn gap(&self) -> u64 {
        self.vec_dim.0 - self.expected.0
    }
}

/// Rank of the conditions matrix for one reproducible trial.
pub fn trial_rank(spec: SystemSpec, field: PrimeField, seed: u64, trial: u32, exec: Exec) -> Result<u64> {
    let points = PointConfig::generate(spec.n, field, seed, trial);
    let matrix = build_conditions_matrix(spec, &points, field)?;
    Ok(rank_mod_p(&matrix, exec) as u64)
}

/// Runs `cfg.trials` independent trials and keeps the smallest kernel.
pub fn oracle_dim(spec: SystemSpec, cfg: &OracleConfig) -> Result<OracleResult> {
    if spec.d < 0 {
        return Err(Error::NegativeDegree(spec.d));
    }
    if cfg.trials == 0 {
        return Err(Error::NoTrials);
    }
    let field = PrimeField::new(cfg.prime)?;
    matrix::check_prime(spec, field)?;

    let cols = spec.monomial_count();
    let expected = expected_vec_dim(spec);
    let ranks = cfg
        .exec
        .map_range(cfg.trials as usize, |t| trial_rank(spec, field, cfg.seed, t as u32, cfg.exec))
        .into_iter()
        .collect::<Result<Vec<u64>>>()?;

    let best = ranks.iter().copied().max().unwrap_or(0);
    let vec_dim = VecDim(cols - best);
    let witness_trial = ranks.iter().position(|&r| VecDim(cols - r) == expected).map(|t| t as u32);
    Ok(OracleResult {
        spec,
        vec_dim,
        expected,
        certified_nonspecial: witness_trial.is_some(),
        witness_trial,
        ranks,
        trials_run: cfg.trials,
        prime: cfg.prime,
        seed: cfg.seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", content = "gap")]
pub enum Speciality {
    NonSpecialCertified,
    ProbablySpecial(u64),
    Unknown,
}

impl Speciality {
    pub fn label(&self) -> &'static str {
        match self {
            Speciality::NonSpecialCertified => "NonSpecialCertified",
            Speciality::ProbablySpecial(_) => "ProbablySpecial",
            Speciality::Unknown => "Unknown",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub status: Speciality,
    pub primary: OracleResult,
    pub secondary: Option<OracleResult>,
}

impl Probe {
    /// Best (smallest) observed vector dimension across both primes.
    pub fn vec_dim(&self) -> VecDim {
        match &self.secondary {
            Some(s) => s.vec_dim.min(self.primary.vec_dim),
            None => self.primary.vec_dim,
        }
    }

    /// The oracle run holding the witness, if any.
    pub fn witness(&self) -> Option<&OracleResult> {
        std::iter::once(&self.primary)
            .chain(self.secondary.as_ref())
            .find(|r| r.certified_nonspecial)
    }
}

/// Prime used to corroborate a rank deficit seen at `prime`.
pub fn companion_prime(prime: u64) -> Option<u64> {
    if prime == DEFAULT_PRIME {
        Some(SECOND_PRIME)
    } else {
        previous_prime(prime)
    }
}

/// Certified if any trial witnesses the expected rank; probably special if
/// every trial at two distinct primes shows the same positive gap.
pub fn probe_speciality(spec: SystemSpec, cfg: &OracleConfig) -> Result<Probe> {
    let primary = oracle_dim(spec, cfg)?;
    if primary.certified_nonspecial {
        return Ok(Probe { status: Speciality::NonSpecialCertified, primary, secondary: None });
    }
    let secondary = match companion_prime(cfg.prime) {
        Some(q) => match oracle_dim(spec, &OracleConfig { prime: q, ..*cfg }) {
            Ok(r) => Some(r),
            Err(Error::PrimeTooSmall { .. }) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let status = match &secondary {
        Some(s) if s.certified_nonspecial => Speciality::NonSpecialCertified,
        Some(s) => {
            let all_agree = primary.ranks.iter().chain(&s.ranks).all(|&r| r == primary.ranks[0]);
            if all_agree && primary.vec_dim > primary.expected {
                Speciality::ProbablySpecial(primary.gap())
            } else {
                Speciality::Unknown
            }
        }
        None => Speciality::Unknown,
    };
    Ok(Probe { status, primary, secondary })
}
