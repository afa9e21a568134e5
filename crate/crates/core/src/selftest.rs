//! Property grids and acceptance checks, runnable from the library so the
//! command-line `selftest` and the `acceptance` test target share them.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::calculus::{
    evd, expected_proj_dim, expected_vec_dim, k_lower_ok, k_upper_ok, select_k, CaseLabel, FiberedProduct,
    SystemSpec, VecDim,
};
use crate::certify::{check_certificate, CertPolicy, Certifier, Method};
use crate::tables::{image_intersection_closed_form, kernel_sum_closed_form, CaseTables, ImageCase, ThirdCaseSign};
use crate::exec::Exec;
use crate::oracle::{oracle_dim, probe_speciality, OracleConfig, Speciality};
use crate::store::ResultStore;

#[derive(Clone, Debug, Default)]
pub struct SelftestOptions {
    /// Smaller grids and degree ranges.
    pub quick: bool,
    /// Closed-form tables under test; the default is the correct one.
    pub tables: CaseTables,
    pub oracle: OracleConfig,
    pub exec: Exec,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Number of instances examined.
    pub checked: usize,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let budget = self.budget.map(|b| format!(" (budget {:.0}s)", b.as_secs_f64())).unwrap_or_default();
        format!(
            "[{verdict}] {}: {} instances in {:.2}s{budget}. {}",
            self.name,
            self.checked,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

type Check = Result<(usize, String), String>;

fn timed(name: &str, budget: Option<Duration>, f: impl FnOnce() -> Check) -> CheckOutcome {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let over = budget.is_some_and(|b| elapsed > b);
    match outcome {
        Ok((checked, detail)) => CheckOutcome {
            name: name.to_string(),
            passed: !over,
            checked,
            detail: if over { format!("exceeded time budget. {detail}") } else { detail },
            elapsed,
            budget,
        },
        Err(detail) => CheckOutcome { name: name.to_string(), passed: false, checked: 0, detail, elapsed, budget },
    }
}

fn fp(d: i64, k: i64, m: u64, n1: u64, n2: u64) -> FiberedProduct {
    FiberedProduct { d, k, m, n1, n2 }
}

// ---------------------------------------------------------------------------
// grids

fn table_grid(quick: bool) -> (i64, u64, &'static [u64]) {
    if quick {
        (20, 3, &[4, 9])
    } else {
        (30, 5, &[4, 9, 16, 25, 36])
    }
}

/// Over `d <= 30`, `m <= 5`, `n1, n2 in {4, 9}`, every admissible `k`
/// concludes with the expected dimension.
pub fn check_degeneration_consistency(quick: bool) -> Check {
    let (d_max, m_max) = if quick { (20, 3) } else { (30, 5) };
    let mut checked = 0;
    for d in 0..=d_max {
        for m in 1..=m_max {
            for n1 in [4u64, 9] {
                for n2 in [4u64, 9] {
                    let sel = select_k(m, n2).map_err(|e| e.to_string())?;
                    for &k in &sel.candidates {
                        let f = fp(d, k, m, n1, n2);
                        let case = f.classify();
                        let want = expected_vec_dim(f.target());
                        if case == CaseLabel::NONE || f.dim_l0() != want {
                            return Err(format!(
                                "d={d} k={k} m={m} n1={n1} n2={n2}: case {case}, dim_L0 {} vs expected {want}",
                                f.dim_l0()
                            ));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok((checked, "every admissible k concludes with dim_L0 = expected".into()))
}

/// Kernel sums against the four-case closed form.
pub fn check_kernel_tables(quick: bool) -> Check {
    let (d_max, m_max, ns) = table_grid(quick);
    let mut checked = 0;
    for d in 0..=d_max {
        for k in 0..=d {
            for m in 1..=m_max {
                for &n1 in ns {
                    for &n2 in ns {
                        let f = fp(d, k, m, n1, n2);
                        let (case, closed) = kernel_sum_closed_form(&f);
                        let got = f.kernel_sum().0 as i64;
                        if got != closed {
                            return Err(format!("d={d} k={k} m={m} n1={n1} n2={n2}: {case:?} gives {closed}, formula {got}"));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok((checked, "kernel sum matches its closed forms".into()))
}

/// Image intersections against the five-case closed form.
pub fn check_image_tables(quick: bool, tables: CaseTables) -> Check {
    let (d_max, m_max, ns) = table_grid(quick);
    let mut checked = 0;
    let mut third = 0;
    for d in 0..=d_max {
        for k in 0..=d {
            for m in 1..=m_max {
                for &n1 in ns {
                    for &n2 in ns {
                        let f = fp(d, k, m, n1, n2);
                        let (case, closed) = image_intersection_closed_form(&f, tables);
                        let got = f.image_intersection().0 as i64;
                        if got != closed {
                            return Err(format!("d={d} k={k} m={m} n1={n1} n2={n2}: {case:?} gives {closed}, formula {got}"));
                        }
                        third += (case == ImageCase::BlowupKernelEmpty) as usize;
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok((checked, format!("image intersection matches its closed forms ({third} third-case instances)")))
}

/// The tabulated sign of the third image case holds everywhere while the
/// opposite sign fails on every third-case instance with `k >= 1`.
pub fn check_third_case_sign(quick: bool) -> Check {
    let (d_max, m_max, ns) = table_grid(quick);
    let plus = CaseTables { third_case_sign: ThirdCaseSign::Plus };
    let (mut instances, mut plus_wrong) = (0, 0);
    for d in 0..=d_max {
        for k in 1..=d {
            for m in 1..=m_max {
                for &n1 in ns {
                    for &n2 in ns {
                        let f = fp(d, k, m, n1, n2);
                        let (case, minus_value) = image_intersection_closed_form(&f, CaseTables::default());
                        if case != ImageCase::BlowupKernelEmpty {
                            continue;
                        }
                        instances += 1;
                        if minus_value != f.image_intersection().0 as i64 {
                            return Err(format!("minus-sign form fails at d={d} k={k} m={m} n1={n1} n2={n2}"));
                        }
                        let (_, plus_value) = image_intersection_closed_form(&f, plus);
                        plus_wrong += (plus_value != f.image_intersection().0 as i64) as usize;
                    }
                }
            }
        }
    }
    if instances == 0 {
        return Err("no third-case instance on the grid".into());
    }
    if plus_wrong != instances {
        return Err(format!("plus-sign form agreed on {} of {instances} instances", instances - plus_wrong));
    }
    Ok((instances, "minus sign confirmed; plus sign wrong on every instance".into()))
}

/// `select_k` against the real bracket `[k_l, k_l + 1]`, evaluated with an
/// integer square root.
pub fn check_k_bracket(quick: bool) -> Check {
    let (m_max, n_max) = if quick { (20u64, 60u64) } else { (50, 200) };
    let mut checked = 0;
    let mut doubles = 0;
    for m in 1..=m_max {
        for n2 in 1..=n_max {
            let sel = select_k(m, n2).map_err(|e| e.to_string())?;
            let c = &sel.candidates;
            if c.is_empty() || c.len() > 2 || (c.len() == 2 && c[1] != c[0] + 1) {
                return Err(format!("m={m} n2={n2}: candidates {c:?}"));
            }
            if k_lower_ok(c[0] - 1, m, n2) || k_upper_ok(c[c.len() - 1] + 1, m, n2) {
                return Err(format!("m={m} n2={n2}: bracket not tight around {c:?}"));
            }
            let bracket = real_bracket(m, n2);
            if *c != bracket {
                return Err(format!("m={m} n2={n2}: integer inequalities give {c:?}, exact bounds {bracket:?}"));
            }
            doubles += (c.len() == 2) as usize;
            checked += 1;
        }
    }
    Ok((checked, format!("{doubles} pairs with two candidates, all at exact square discriminants")))
}

/// Integers in `[(s - 3) / 2, (s - 1) / 2]` with `s = sqrt(1 + 4 n2 m(m+1))`.
fn real_bracket(m: u64, n2: u64) -> Vec<i64> {
    let disc = 1 + 4 * n2 as u128 * (m * (m + 1)) as u128;
    let s = disc.isqrt();
    if s * s == disc {
        // s is odd, both endpoints are integers
        let s = s as i64;
        vec![(s - 3) / 2, (s - 1) / 2]
    } else {
        // s < sqrt(disc) < s + 1, so 2k + 1 <= s < 2k + 3: exactly one k
        vec![(s as i64 - 1).div_euclid(2)]
    }
}

/// For every `0 <= k <= d`, the limit dimension bounds the expected one.
pub fn check_semicontinuity(quick: bool) -> Check {
    let d_max = if quick { 20 } else { 30 };
    let mut checked = 0;
    for d in 0..=d_max {
        for k in 0..=d {
            for m in 1..=5 {
                for n1 in [4u64, 9] {
                    for n2 in [4u64, 9] {
                        let f = fp(d, k, m, n1, n2);
                        if f.dim_l0() < expected_vec_dim(f.target()) {
                            return Err(format!("d={d} k={k} m={m} n1={n1} n2={n2}: dim_L0 below expected"));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok((checked, "dim_L0 >= expected for every twist".into()))
}

/// Conclusive labels give the expected dimension, label A gives zero, for
/// every twist.
pub fn check_case_labels(quick: bool) -> Check {
    let (d_max, m_max, ns) = table_grid(quick);
    let mut checked = 0;
    for d in 0..=d_max {
        for k in 0..=d {
            for m in 1..=m_max {
                for &n1 in ns {
                    for &n2 in ns {
                        let f = fp(d, k, m, n1, n2);
                        let ok = match f.classify() {
                            CaseLabel::NONE => true,
                            CaseLabel::A => f.dim_l0() == VecDim(0),
                            _ => f.dim_l0() == expected_vec_dim(f.target()),
                        };
                        if !ok {
                            return Err(format!("d={d} k={k} m={m} n1={n1} n2={n2}: label {} inconsistent", f.classify()));
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    Ok((checked, "case labels agree with dim_L0".into()))
}

/// Vector/projective relation and restriction monotonicity.
pub fn check_dimension_relations(quick: bool) -> Check {
    let d_max = if quick { 40 } else { 80 };
    let mut checked = 0;
    for d in 0..=d_max {
        for m in 0..=8u64 {
            for n in 0..=40u64 {
                let s = SystemSpec { d, m, n };
                let e = expected_proj_dim(s).map_err(|e| e.to_string())?;
                let v = expected_vec_dim(s);
                if v.0 as i64 != e.max(-1) + 1 {
                    return Err(format!("{s}: vec {v} vs projective {e}"));
                }
                if evd(d, m, n) < evd(d, m + 1, n) || evd(d, m, n) < evd(d - 1, m, n) {
                    return Err(format!("{s}: monotonicity"));
                }
                checked += 1;
            }
        }
    }
    Ok((checked, "vec = proj + 1, monotone in d and m".into()))
}

/// Oracle never reports less than the expected dimension.
pub fn check_oracle_bounds(opts: &SelftestOptions) -> Check {
    let (d_max, n_max) = if opts.quick { (6, 6) } else { (10, 10) };
    let specs: Vec<SystemSpec> = (0..=d_max)
        .flat_map(|d| (1..=3u64).flat_map(move |m| (1..=n_max).map(move |n| SystemSpec { d, m, n })))
        .collect();
    let results = opts.exec.map(&specs, |&s| oracle_dim(s, &opts.oracle).map(|r| (s, r)));
    for r in results {
        let (s, r) = r.map_err(|e| e.to_string())?;
        if r.vec_dim < r.expected || r.vec_dim.0 < s.monomial_count().saturating_sub(s.conditions()) {
            return Err(format!("{s}: oracle {} below a lower bound", r.vec_dim));
        }
    }
    Ok((specs.len(), "oracle >= max(cols - rows, 0) >= expected".into()))
}

// ---------------------------------------------------------------------------
// acceptance

fn oracle_family(opts: &SelftestOptions, n: u64, d_max: i64, m_max: u64) -> Check {
    let specs: Vec<SystemSpec> =
        (0..=d_max).flat_map(|d| (1..=m_max).map(move |m| SystemSpec { d, m, n })).collect();
    let results = opts.exec.map(&specs, |&s| oracle_dim(s, &opts.oracle).map(|r| (s, r)));
    for r in results {
        let (s, r) = r.map_err(|e| e.to_string())?;
        if !r.certified_nonspecial || r.vec_dim != expected_vec_dim(s) {
            return Err(format!("{s}: oracle {} vs expected {}", r.vec_dim, r.expected));
        }
    }
    Ok((specs.len(), format!("all L_d(m^{n}) witnessed at their expected dimension")))
}

fn degeneration_family(opts: &SelftestOptions, n: u64, d_max: i64, ms: &[u64]) -> Check {
    let policy = CertPolicy { oracle: opts.oracle, ..CertPolicy::default() };
    let certifier = Certifier::with_store(policy, Arc::new(ResultStore::new()));
    let specs: Vec<SystemSpec> =
        (0..=d_max).flat_map(|d| ms.iter().map(move |&m| SystemSpec { d, m, n })).collect();
    let rows = opts.exec.map(&specs, |&s| -> Result<usize, String> {
        let cert = certifier.certify(s).map_err(|f| format!("{s}: {f}"))?;
        if !matches!(cert.method, Method::Degeneration { .. }) {
            return Err(format!("{s}: root is {}, not a degeneration", cert.method.name()));
        }
        check_certificate(&cert, Exec::Sequential).map_err(|e| format!("{s}: {e}"))?;
        let oracle = oracle_dim(s, &opts.oracle).map_err(|e| e.to_string())?;
        if oracle.vec_dim != expected_vec_dim(s) || !oracle.certified_nonspecial {
            return Err(format!("{s}: oracle {} disagrees with certified {}", oracle.vec_dim, expected_vec_dim(s)));
        }
        Ok(cert.size())
    });
    let mut nodes = 0;
    for r in rows {
        nodes += r?;
    }
    Ok((specs.len(), format!("certified by degeneration, verified, oracle agrees ({nodes} certificate nodes)")))
}

fn special_controls(opts: &SelftestOptions) -> Check {
    let controls = [(2, 2, 2), (4, 2, 5), (6, 4, 3)];
    for (d, m, n) in controls {
        let s = SystemSpec { d, m, n };
        let probe = probe_speciality(s, &opts.oracle).map_err(|e| e.to_string())?;
        let two_primes = probe.secondary.as_ref().is_some_and(|r| r.prime != probe.primary.prime);
        if probe.status != Speciality::ProbablySpecial(1) || !two_primes {
            return Err(format!("{s}: {:?}", probe.status));
        }
    }
    Ok((controls.len(), "gap 1 at both primes for each control".into()))
}

/// One acceptance criterion by number (1 to 8).
pub fn acceptance_criterion(id: u32, opts: &SelftestOptions) -> CheckOutcome {
    let q = opts.quick;
    let secs = |s| Some(Duration::from_secs(s));
    match id {
        1 => timed("1 base family n=4 by oracle", secs(10), || oracle_family(opts, 4, 15, 4)),
        2 => timed("2 base family n=9 by oracle", secs(10), || oracle_family(opts, 9, 15, 3)),
        3 => timed("3 degeneration for n=16", secs(60), || {
            degeneration_family(opts, 16, if q { 10 } else { 20 }, if q { &[1, 2] } else { &[1, 2, 3] })
        }),
        4 => timed("4 degeneration for n=36", secs(120), || degeneration_family(opts, 36, if q { 12 } else { 25 }, &[1, 2])),
        5 => timed("5 special-system controls", None, || special_controls(opts)),
        6 => timed("6 degeneration consistency", None, || check_degeneration_consistency(q)),
        7 => timed("7 closed-form cross-checks", None, || {
            let (a, _) = check_kernel_tables(q)?;
            let (b, _) = check_image_tables(q, opts.tables)?;
            let (c, detail) = check_third_case_sign(q)?;
            Ok((a + b + c, format!("kernel-sum and image-intersection closed forms hold; {detail}")))
        }),
        8 => timed("8 k-selection bracket", None, || check_k_bracket(q)),
        _ => CheckOutcome {
            name: format!("{id} unknown criterion"),
            passed: false,
            checked: 0,
            detail: String::new(),
            elapsed: Duration::ZERO,
            budget: None,
        },
    }
}

pub const ACCEPTANCE_IDS: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

/// Property grids beyond the acceptance criteria.
pub fn property_checks(opts: &SelftestOptions) -> Vec<CheckOutcome> {
    let q = opts.quick;
    vec![
        timed("dimension relations", None, || check_dimension_relations(q)),
        timed("k-selection bracket", None, || check_k_bracket(q)),
        timed("kernel-sum cross-check", None, || check_kernel_tables(q)),
        timed("image-intersection cross-check", None, || check_image_tables(q, opts.tables)),
        timed("case-label soundness", None, || check_case_labels(q)),
        timed("semicontinuity bound", None, || check_semicontinuity(q)),
        timed("oracle lower bounds", None, || check_oracle_bounds(opts)),
    ]
}

#[derive(Clone, Debug)]
pub struct SelftestReport {
    pub checks: Vec<CheckOutcome>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Property grids followed by every acceptance criterion.
pub fn run(opts: &SelftestOptions) -> SelftestReport {
    let mut checks = property_checks(opts);
    checks.extend(ACCEPTANCE_IDS.iter().map(|&id| acceptance_criterion(id, opts)));
    SelftestReport { checks }
}
