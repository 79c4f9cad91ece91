//! Closed-form and Monte-Carlo analysis of the selection-vs-extraction
//! tradeoff.
//!
//! A selection policy is abstracted to three numbers: the probability
//! `p_hit` that every evidence page gets expanded, the error rate when that
//! happens (`err_hit`), and the error rate when at least one evidence page
//! is missed (`err_miss`). Conditioning total error on the hit event gives
//! the exact decomposition
//!
//! `expected_error = p_hit * err_hit + (1 - p_hit) * err_miss`
//!
//! and the benefit of tool use over reading compressed pages directly (error
//! rate `d_no`) follows as `d_no - expected_error`: tool use helps exactly
//! when direct reading degrades faster with compression than selection
//! accuracy does.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("probability {name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("trials must be at least 1")]
    NoTrials,
}

fn check_unit(name: &'static str, value: f64) -> Result<(), SimError> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(SimError::OutOfRange { name, value });
    }
    Ok(())
}

/// Abstract selection policy: hit probability and conditional error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    /// Probability that all evidence pages are among the expanded set.
    pub p_hit: f64,
    /// Error rate when every evidence page was expanded.
    pub err_hit: f64,
    /// Error rate when at least one evidence page was missed. For multi-hop
    /// tasks this is the caller-supplied average over partial-hit cases.
    pub err_miss: f64,
}

impl PolicySpec {
    pub fn new(p_hit: f64, err_hit: f64, err_miss: f64) -> Result<Self, SimError> {
        let spec = Self {
            p_hit,
            err_hit,
            err_miss,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        check_unit("p_hit", self.p_hit)?;
        check_unit("err_hit", self.err_hit)?;
        check_unit("err_miss", self.err_miss)
    }
}

/// Expected task error under the policy: the exact hit/miss decomposition.
pub fn expected_error(policy: &PolicySpec) -> f64 {
    policy.p_hit * policy.err_hit + (1.0 - policy.p_hit) * policy.err_miss
}

/// Benefit of selective expansion over direct reading at no-tool error
/// `d_no`. Algebraically identical to `d_no - expected_error(policy)`.
pub fn benefit(policy: &PolicySpec, d_no: f64) -> f64 {
    policy.p_hit * (d_no - policy.err_hit) - (1.0 - policy.p_hit) * (policy.err_miss - d_no)
}

/// Measured behavior across a grid of compression rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCurve {
    /// Compression rates, strictly increasing.
    pub rates: Vec<f64>,
    /// Direct-reading error at each rate.
    pub no_tool_error: Vec<f64>,
    /// Selection (hit) probability at each rate.
    pub selection: Vec<f64>,
}

impl RegimeCurve {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.rates.is_empty() {
            return Err(SimError::InvalidCurve("empty grid".into()));
        }
        if self.rates.len() != self.no_tool_error.len() || self.rates.len() != self.selection.len()
        {
            return Err(SimError::InvalidCurve("column lengths differ".into()));
        }
        if self.rates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidCurve(
                "rates must be strictly increasing".into(),
            ));
        }
        for &v in &self.no_tool_error {
            check_unit("no_tool_error", v)?;
        }
        for &v in &self.selection {
            check_unit("selection", v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate: f64,
    pub no_tool_error: f64,
    pub p_hit: f64,
    pub expected_error: f64,
    pub benefit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// First rate at which the benefit turns positive, if any.
    pub crossover: Option<f64>,
}

/// Evaluates the benefit at every grid point of the curve.
pub fn sweep(curve: &RegimeCurve, err_hit: f64, err_miss: f64) -> Result<SweepTable, SimError> {
    curve.validate()?;
    check_unit("err_hit", err_hit)?;
    check_unit("err_miss", err_miss)?;
    let mut rows = Vec::with_capacity(curve.rates.len());
    for i in 0..curve.rates.len() {
        let policy = PolicySpec {
            p_hit: curve.selection[i],
            err_hit,
            err_miss,
        };
        let d_no = curve.no_tool_error[i];
        rows.push(SweepRow {
            rate: curve.rates[i],
            no_tool_error: d_no,
            p_hit: policy.p_hit,
            expected_error: expected_error(&policy),
            benefit: benefit(&policy, d_no),
        });
    }
    let crossover = rows.iter().find(|r| r.benefit > 0.0).map(|r| r.rate);
    Ok(SweepTable { rows, crossover })
}

/// Empirical error rates from Monte-Carlo episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalErrors {
    pub no_tool_error: f64,
    pub with_tool_error: f64,
    pub trials: u64,
}

const TRIALS_PER_STREAM: u64 = 1 << 16;

/// Simulates `trials` episodes with and without the tool.
///
/// Trials are split into fixed-size chunks, each drawing from its own
/// deterministic RNG stream, so results are bit-identical for a given seed
/// regardless of how many threads run the chunks.
pub fn simulate_episodes(
    policy: &PolicySpec,
    d_no: f64,
    trials: u64,
    seed: u64,
) -> Result<EmpiricalErrors, SimError> {
    policy.validate()?;
    check_unit("d_no", d_no)?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    let chunks = trials.div_ceil(TRIALS_PER_STREAM);
    let (no_tool_errors, with_tool_errors) = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let start = chunk * TRIALS_PER_STREAM;
            let n = TRIALS_PER_STREAM.min(trials - start);
            let mut no_tool = 0u64;
            let mut with_tool = 0u64;
            for _ in 0..n {
                if rng.random::<f64>() < d_no {
                    no_tool += 1;
                }
                let hit = rng.random::<f64>() < policy.p_hit;
                let err_rate = if hit { policy.err_hit } else { policy.err_miss };
                if rng.random::<f64>() < err_rate {
                    with_tool += 1;
                }
            }
            (no_tool, with_tool)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(EmpiricalErrors {
        no_tool_error: no_tool_errors as f64 / trials as f64,
        with_tool_error: with_tool_errors as f64 / trials as f64,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn expected_error_degenerate_policies() {
        let p1 = PolicySpec::new(1.0, 0.12, 0.9).unwrap();
        assert_eq!(expected_error(&p1), 0.12);
        let p0 = PolicySpec::new(0.0, 0.12, 0.9).unwrap();
        assert_eq!(expected_error(&p0), 0.9);
    }

    #[test]
    fn expected_error_monte_carlo_oracle() {
        // Coin-flip oracle at one million draws, tolerance 1e-3.
        let policy = PolicySpec::new(0.5, 0.1, 0.6).unwrap();
        let closed = expected_error(&policy);
        assert_eq!(closed, 0.35);
        let sim = simulate_episodes(&policy, 0.5, 1_000_000, 1234).unwrap();
        assert!((sim.with_tool_error - closed).abs() < 1e-3);
    }

    #[test]
    fn benefit_degenerate_policies() {
        let p1 = PolicySpec::new(1.0, 0.12, 0.9).unwrap();
        assert!((benefit(&p1, 0.5) - (0.5 - 0.12)).abs() < 1e-15);
        let p0 = PolicySpec::new(0.0, 0.12, 0.9).unwrap();
        assert!((benefit(&p0, 0.5) - -(0.9 - 0.5)).abs() < 1e-15);
    }

    #[test]
    fn simulation_is_deterministic_in_seed() {
        let policy = PolicySpec::new(0.7, 0.2, 0.8).unwrap();
        let a = simulate_episodes(&policy, 0.6, 200_000, 42).unwrap();
        let b = simulate_episodes(&policy, 0.6, 200_000, 42).unwrap();
        assert_eq!(a, b);
        let c = simulate_episodes(&policy, 0.6, 200_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_policy_has_zero_error() {
        let policy = PolicySpec::new(0.5, 0.0, 0.0).unwrap();
        let sim = simulate_episodes(&policy, 0.0, 10_000, 7).unwrap();
        assert_eq!(sim.no_tool_error, 0.0);
        assert_eq!(sim.with_tool_error, 0.0);
    }

    #[test]
    fn sweep_flat_curves_give_constant_benefit() {
        let curve = RegimeCurve {
            rates: vec![5.0, 10.0, 15.0],
            no_tool_error: vec![0.5, 0.5, 0.5],
            selection: vec![0.7, 0.7, 0.7],
        };
        let table = sweep(&curve, 0.2, 0.8).unwrap();
        let first = table.rows[0].benefit;
        assert!(table.rows.iter().all(|r| (r.benefit - first).abs() < 1e-15));
    }

    #[test]
    fn sweep_rising_no_tool_error_raises_benefit() {
        // Finite differencing of the closed form: with p flat, the benefit
        // strictly follows d_no.
        let curve = RegimeCurve {
            rates: vec![2.0, 4.0, 8.0, 16.0],
            no_tool_error: vec![0.2, 0.4, 0.6, 0.8],
            selection: vec![0.7, 0.7, 0.7, 0.7],
        };
        let table = sweep(&curve, 0.2, 0.9).unwrap();
        for pair in table.rows.windows(2) {
            assert!(pair[1].benefit > pair[0].benefit);
        }
    }

    #[test]
    fn sweep_rejects_bad_curves() {
        let empty = RegimeCurve {
            rates: vec![],
            no_tool_error: vec![],
            selection: vec![],
        };
        assert!(sweep(&empty, 0.1, 0.9).is_err());
        let unsorted = RegimeCurve {
            rates: vec![5.0, 5.0],
            no_tool_error: vec![0.5, 0.5],
            selection: vec![0.5, 0.5],
        };
        assert!(sweep(&unsorted, 0.1, 0.9).is_err());
    }

    #[test]
    fn measured_points_show_positive_benefit_everywhere() {
        // Direct-reading accuracy 31.3/21.0/18.1% and selection accuracy
        // 76.8/71.0/52.1% at the three studied rates.
        let curve = RegimeCurve {
            rates: vec![5.0, 10.0, 15.0],
            no_tool_error: vec![1.0 - 0.313, 1.0 - 0.210, 1.0 - 0.181],
            selection: vec![0.768, 0.710, 0.521],
        };
        let table = sweep(&curve, 0.35, 1.0).unwrap();
        assert!(table.rows.iter().all(|r| r.benefit > 0.0));
        assert_eq!(table.crossover, Some(5.0));
    }

    proptest! {
        /// Exact decomposition: d_no - expected_error equals benefit to
        /// machine epsilon, for any valid policy.
        #[test]
        fn decomposition_identity(
            p in 0.0f64..=1.0,
            eh in 0.0f64..=1.0,
            em in 0.0f64..=1.0,
            d_no in 0.0f64..=1.0,
        ) {
            let policy = PolicySpec::new(p, eh, em).unwrap();
            let lhs = d_no - expected_error(&policy);
            let rhs = benefit(&policy, d_no);
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }

        /// Bounds: expected error lies between the conditional error rates.
        #[test]
        fn expected_error_bounds(
            p in 0.0f64..=1.0,
            eh in 0.0f64..=1.0,
            em in 0.0f64..=1.0,
        ) {
            let policy = PolicySpec::new(p, eh, em).unwrap();
            let e = expected_error(&policy);
            prop_assert!(e >= eh.min(em) - 1e-12);
            prop_assert!(e <= eh.max(em) + 1e-12);
        }

        /// Monotonicity: when hitting is no worse than missing, more hits
        /// never hurt.
        #[test]
        fn expected_error_monotone_in_p(
            p1 in 0.0f64..=1.0,
            p2 in 0.0f64..=1.0,
            eh in 0.0f64..=0.5,
            em in 0.5f64..=1.0,
        ) {
            let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
            let e_lo = expected_error(&PolicySpec::new(lo, eh, em).unwrap());
            let e_hi = expected_error(&PolicySpec::new(hi, eh, em).unwrap());
            prop_assert!(e_hi <= e_lo + 1e-12);
        }
    }
}
