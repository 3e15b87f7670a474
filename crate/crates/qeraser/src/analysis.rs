//! Analytic coincidence tables, empirical tallying, fringe visibility and
//! simulation-versus-theory comparison.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::{EnvDetector, SysDetector, TrialRecord};
use crate::optics::{fringe_phase, wrap_angle, Choice};
use crate::ZERO_PROB_TOL;

/// Closed-form coincidence probabilities for one `(θ, choice)` setting,
/// indexed by `(environment detector, system detector)`.
///
/// With the circular analyzer (choice 1) the table is
/// `p(D1,D3) = p(D2,D4) = ½sin²α` and `p(D2,D3) = p(D1,D4) = ½cos²α`
/// with `α = θ/2 + π/4`; with the linear analyzer (choice 0) every entry
/// is ¼ independent of θ.
#[derive(Debug, Clone, Serialize)]
pub struct AnalyticProbTable {
    theta: f64,
    alpha: f64,
    choice: Choice,
    probs: [[f64; 2]; 2],
}

pub fn analytic_table(theta: f64, choice: Choice) -> AnalyticProbTable {
    let theta = wrap_angle(theta);
    let alpha = fringe_phase(theta);
    let probs = match choice {
        Choice::Zero => [[0.25, 0.25], [0.25, 0.25]],
        Choice::One => {
            let bright = 0.5 * alpha.sin().powi(2);
            let dark = 0.5 * alpha.cos().powi(2);
            // [env][sys]; D1 rides the bright fringe at port 3.
            [[bright, dark], [dark, bright]]
        }
    };
    AnalyticProbTable {
        theta,
        alpha,
        choice,
        probs,
    }
}

impl AnalyticProbTable {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Fringe phase `α = θ/2 + π/4` in `[0, π)`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn choice(&self) -> Choice {
        self.choice
    }

    pub fn probability(&self, env: EnvDetector, sys: SysDetector) -> f64 {
        self.probs[env.index()][sys.index()]
    }

    pub fn sys_marginal(&self, sys: SysDetector) -> f64 {
        EnvDetector::ALL
            .iter()
            .map(|&e| self.probability(e, sys))
            .sum()
    }

    pub fn env_marginal(&self, env: EnvDetector) -> f64 {
        SysDetector::ALL
            .iter()
            .map(|&s| self.probability(env, s))
            .sum()
    }

    /// `p(env ∧ sys) / p(sys)`: the fringe seen in coincidence with one
    /// system detector.
    pub fn conditioned(&self, env: EnvDetector, sys: SysDetector) -> f64 {
        self.probability(env, sys) / self.sys_marginal(sys)
    }
}

/// Coincidence counts for one stratum of trials.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CoincidenceTable {
    counts: [[u64; 2]; 2],
    total: u64,
}

impl CoincidenceTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, env: EnvDetector, sys: SysDetector) {
        self.counts[env.index()][sys.index()] += 1;
        self.total += 1;
    }

    pub fn count(&self, env: EnvDetector, sys: SysDetector) -> u64 {
        self.counts[env.index()][sys.index()]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Relative frequency of one detector pair; `None` for an empty stratum.
    pub fn frequency(&self, env: EnvDetector, sys: SysDetector) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        Some(self.count(env, sys) as f64 / self.total as f64)
    }

    /// Frequency of one system detector regardless of the environment side.
    pub fn sys_frequency(&self, sys: SysDetector) -> Option<f64> {
        if self.total == 0 {
            return None;
        }
        let count: u64 = EnvDetector::ALL.iter().map(|&e| self.count(e, sys)).sum();
        Some(count as f64 / self.total as f64)
    }

    /// Counterwise sum of two tables.
    pub fn merge(&self, other: &Self) -> Self {
        let mut merged = self.clone();
        for env in EnvDetector::ALL {
            for sys in SysDetector::ALL {
                merged.counts[env.index()][sys.index()] += other.count(env, sys);
            }
        }
        merged.total += other.total;
        merged
    }
}

/// Coincidence tables partitioned by the per-trial choice bit. Strata left
/// empty by a fixed-choice run stay at total 0 and report no frequencies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChoiceStrata {
    strata: [CoincidenceTable; 2],
}

impl ChoiceStrata {
    pub fn stratum(&self, choice: Choice) -> &CoincidenceTable {
        &self.strata[choice.bit() as usize]
    }

    pub fn merge(&self, other: &Self) -> Self {
        Self {
            strata: [
                self.strata[0].merge(&other.strata[0]),
                self.strata[1].merge(&other.strata[1]),
            ],
        }
    }
}

/// Counts detector coincidences per choice stratum. An empty record list
/// yields two empty strata.
pub fn tally(records: &[TrialRecord]) -> ChoiceStrata {
    let mut strata = ChoiceStrata::default();
    for r in records {
        strata.strata[r.choice.bit() as usize].record(r.env_detector, r.sys_detector);
    }
    strata
}

/// Fringe visibility `(max − min) / (max + min)` over a sweep of
/// `(θ, conditioned frequency)` points. The sweep should cover a full fringe
/// period (a θ range of length 2π) for the result to mean anything. Errors
/// when `max + min = 0`.
pub fn visibility(sweep: &[(f64, f64)]) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(_, value) in sweep {
        lo = lo.min(value);
        hi = hi.max(value);
    }
    if sweep.is_empty() || hi + lo == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok((hi - lo) / (hi + lo))
}

/// Verdict for one detector pair of a simulation-versus-theory comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CellComparison {
    pub env: EnvDetector,
    pub sys: SysDetector,
    pub count: u64,
    pub frequency: f64,
    pub expected: f64,
    /// Binomial z-score; absent for expected probabilities of exactly 0 or
    /// 1, where the verdict is an exact-count check instead.
    pub z: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub sigma: f64,
    pub total: u64,
    pub cells: Vec<CellComparison>,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn max_abs_z(&self) -> f64 {
        self.cells
            .iter()
            .filter_map(|c| c.z)
            .fold(0.0, |acc, z| acc.max(z.abs()))
    }
}

/// Per-cell z-scores of an empirical table against the analytic one, with a
/// pass/fail verdict at the given sigma threshold. Cells whose expected
/// probability is 0 (or 1) pass only on an exact count of 0 (or the full
/// total).
pub fn compare(
    empirical: &CoincidenceTable,
    analytic: &AnalyticProbTable,
    sigma: f64,
) -> Result<ComparisonReport> {
    if empirical.is_empty() {
        return Err(Error::EmptyTally);
    }
    let n = empirical.total();
    let mut cells = Vec::with_capacity(4);
    let mut pass = true;
    for env in EnvDetector::ALL {
        for sys in SysDetector::ALL {
            let count = empirical.count(env, sys);
            let frequency = count as f64 / n as f64;
            let expected = analytic.probability(env, sys);
            let (z, cell_pass) = if expected <= ZERO_PROB_TOL {
                (None, count == 0)
            } else if expected >= 1.0 - ZERO_PROB_TOL {
                (None, count == n)
            } else {
                let z = (frequency - expected) / (expected * (1.0 - expected) / n as f64).sqrt();
                (Some(z), z.abs() <= sigma)
            };
            pass &= cell_pass;
            cells.push(CellComparison {
                env,
                sys,
                count,
                frequency,
                expected,
                z,
                pass: cell_pass,
            });
        }
    }
    Ok(ComparisonReport {
        sigma,
        total: n,
        cells,
        pass,
    })
}
