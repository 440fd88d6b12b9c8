//! Forced-gap post-selection.
//!
//! One baseline relay run on `(H, σ)` yields a best class `L⁽⁰⁾`. For every
//! observable `i` a forced run decodes `(H⁽ⁱ⁾, σ⁽ⁱ⁾)`, where `H⁽ⁱ⁾` is `H`
//! with row `i` of `A` appended and `σ⁽ⁱ⁾` appends `1 ⊕ L⁽⁰⁾ᵢ`, so every
//! solution it finds flips observable `i`. All candidates from all runs are
//! pooled per logical class, and the gap is the log-likelihood difference of
//! the two best classes. An unconverged baseline is an erasure with gap 0; a
//! single pooled class gives gap `+∞`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::f2::BitVec;
use crate::problem::{extend_syndrome, DecodingProblem, LogicalClass, Syndrome};
use crate::relay::{CandidateSolution, DecodeOutcome, RelayConfig, RelayDecoder};
use crate::seed::derive_seed;

/// Nonnegative extended real.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct GapValue(f64);

impl GapValue {
    pub const ZERO: GapValue = GapValue(0.0);
    pub const INFINITE: GapValue = GapValue(f64::INFINITY);

    pub fn finite(v: f64) -> Result<Self> {
        if v.is_finite() && v >= 0.0 {
            Ok(GapValue(v))
        } else {
            Err(Error::InvalidParameter(format!("gap must be finite and nonnegative, got {v}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `gap ≥ threshold`.
    pub fn passes(self, threshold: f64) -> bool {
        self.0 >= threshold
    }
}

impl fmt::Display for GapValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

impl FromStr for GapValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "Infinity" => Ok(GapValue::INFINITE),
            t => {
                let v = t
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad gap `{t}`")))?;
                GapValue::finite(v)
            }
        }
    }
}

/// Best correction found for one logical class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassEntry {
    pub class: LogicalClass,
    pub log_likelihood: f64,
    pub correction: BitVec,
}

/// Pooled classes ordered by decreasing likelihood, ties by class bits.
pub type ClassTable = Vec<ClassEntry>;

pub fn pool_classes<'a, I>(candidates: I) -> ClassTable
where
    I: IntoIterator<Item = &'a CandidateSolution>,
{
    let mut best: HashMap<&LogicalClass, &CandidateSolution> = HashMap::new();
    for c in candidates {
        best.entry(&c.logical_class)
            .and_modify(|cur| {
                if c.log_likelihood > cur.log_likelihood {
                    *cur = c;
                }
            })
            .or_insert(c);
    }
    let mut table: ClassTable = best
        .into_values()
        .map(|c| ClassEntry {
            class: c.logical_class.clone(),
            log_likelihood: c.log_likelihood,
            correction: c.correction.clone(),
        })
        .collect();
    table.sort_by(|a, b| {
        b.log_likelihood
            .total_cmp(&a.log_likelihood)
            .then_with(|| a.class.cmp(&b.class))
    });
    table
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapOutcome {
    pub gap: GapValue,
    pub erasure: bool,
    /// `L⁽⁰⁾`, the baseline run's best class.
    pub baseline_class: Option<LogicalClass>,
    pub forced_converged_count: usize,
    pub class_table: ClassTable,
}

impl GapOutcome {
    fn erasure() -> Self {
        GapOutcome {
            gap: GapValue::ZERO,
            erasure: true,
            baseline_class: None,
            forced_converged_count: 0,
            class_table: Vec::new(),
        }
    }

    fn from_table(baseline_class: LogicalClass, forced_converged_count: usize, table: ClassTable) -> Self {
        let gap = match table.as_slice() {
            [] => unreachable!("a converged baseline contributes at least one class"),
            [_] => GapValue::INFINITE,
            [first, second, ..] => GapValue(first.log_likelihood - second.log_likelihood),
        };
        GapOutcome {
            gap,
            erasure: false,
            baseline_class: Some(baseline_class),
            forced_converged_count,
            class_table: table,
        }
    }

    /// `λ⁽⁰⁾`.
    pub fn lambda0(&self) -> Option<&LogicalClass> {
        self.class_table.first().map(|e| &e.class)
    }

    /// `λ⁽¹⁾`.
    pub fn lambda1(&self) -> Option<&LogicalClass> {
        self.class_table.get(1).map(|e| &e.class)
    }

    pub fn best_correction(&self) -> Option<&BitVec> {
        self.class_table.first().map(|e| &e.correction)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub accepted: bool,
    pub threshold: f64,
}

/// Rejects iff `gap < threshold`.
pub fn decide(gap: GapValue, threshold: f64) -> Result<Decision> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidParameter(format!("threshold must be ≥ 0, got {threshold}")));
    }
    Ok(Decision {
        accepted: gap.passes(threshold),
        threshold,
    })
}

/// The class reported for a shot: pooled `λ⁽⁰⁾`.
pub fn decoded_class(outcome: &GapOutcome) -> Result<LogicalClass> {
    outcome.lambda0().cloned().ok_or(Error::Erasure)
}

#[derive(Clone, Debug)]
pub struct ForcedRun {
    pub observable_index: usize,
    pub forced_bit: bool,
    pub outcome: DecodeOutcome,
}

/// Everything one forced-gap evaluation produced.
#[derive(Clone, Debug)]
pub struct ForcedGapReport {
    pub outcome: GapOutcome,
    pub baseline: DecodeOutcome,
    pub forced: Vec<ForcedRun>,
}

/// Baseline decoder plus one decoder per augmented check matrix. The
/// augmented matrices depend only on `i`, so they are built once.
#[derive(Clone, Debug)]
pub struct ForcedGapEngine {
    baseline: RelayDecoder,
    forced: Vec<RelayDecoder>,
}

impl ForcedGapEngine {
    pub fn new(problem: &DecodingProblem) -> Result<Self> {
        let zero = LogicalClass::zeros(problem.num_observables());
        let forced = (0..problem.num_observables())
            .map(|i| Ok(RelayDecoder::new(problem.build_forced(i, &zero)?.problem())))
            .collect::<Result<Vec<_>>>()?;
        Ok(ForcedGapEngine {
            baseline: RelayDecoder::new(problem.clone()),
            forced,
        })
    }

    pub fn problem(&self) -> &DecodingProblem {
        self.baseline.problem()
    }

    /// Runs the pipeline with seeds derived from `shot_seed`: the baseline
    /// uses index 0 and forced run `i` uses index `i + 1`. The seeds inside
    /// the configs are ignored.
    pub fn run(
        &self,
        s: &Syndrome,
        shot_seed: u64,
        cfg_baseline: &RelayConfig,
        cfg_forced: &RelayConfig,
    ) -> Result<ForcedGapReport> {
        cfg_baseline.validate()?;
        cfg_forced.validate()?;
        let baseline_cfg = cfg_baseline.clone().with_seed(derive_seed(shot_seed, 0));
        let baseline = self.baseline.decode(s, &baseline_cfg)?;
        let Some(best) = baseline.best() else {
            return Ok(ForcedGapReport {
                outcome: GapOutcome::erasure(),
                baseline,
                forced: Vec::new(),
            });
        };
        let l0 = &best.logical_class;

        let forced: Vec<ForcedRun> = self
            .forced
            .par_iter()
            .enumerate()
            .map(|(i, dec)| {
                let forced_bit = !l0.bit(i);
                let cfg = cfg_forced.clone().with_seed(derive_seed(shot_seed, i as u64 + 1));
                let outcome = dec.decode(&extend_syndrome(s, forced_bit), &cfg)?;
                Ok(ForcedRun {
                    observable_index: i,
                    forced_bit,
                    outcome,
                })
            })
            .collect::<Result<_>>()?;

        Ok(ForcedGapReport {
            outcome: combine_runs(&baseline, &forced),
            baseline,
            forced,
        })
    }
}

/// Pools a baseline run and its forced runs into a [`GapOutcome`].
pub fn combine_runs(baseline: &DecodeOutcome, forced: &[ForcedRun]) -> GapOutcome {
    let Some(best) = baseline.best() else {
        return GapOutcome::erasure();
    };
    let forced_converged_count = forced.iter().filter(|r| r.outcome.converged()).count();
    let table = pool_classes(
        baseline
            .candidates
            .iter()
            .chain(forced.iter().flat_map(|r| r.outcome.candidates.iter())),
    );
    GapOutcome::from_table(best.logical_class.clone(), forced_converged_count, table)
}

/// Single-instance entry point. `cfg_baseline.seed` acts as the shot seed.
pub fn run_forced_gap(
    prob: &DecodingProblem,
    s: &Syndrome,
    cfg_baseline: &RelayConfig,
    cfg_forced: &RelayConfig,
) -> Result<GapOutcome> {
    prob.check_syndrome(s)?;
    let engine = ForcedGapEngine::new(prob)?;
    Ok(engine.run(s, cfg_baseline.seed, cfg_baseline, cfg_forced)?.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::repetition_problem;
    use crate::f2::SparseBitMatrix;

    fn cand(class: &[u8], ll: f64, bits: &[u8]) -> CandidateSolution {
        CandidateSolution {
            correction: BitVec::from_bits(bits),
            log_likelihood: ll,
            logical_class: LogicalClass(BitVec::from_bits(class)),
            leg_index: 0,
        }
    }

    fn cfgs() -> (RelayConfig, RelayConfig) {
        (
            RelayConfig::baseline().with_num_sets(40).with_seed(3),
            RelayConfig::forced().with_num_sets(10),
        )
    }

    #[test]
    fn pooling_rules() {
        assert!(pool_classes(&[]).is_empty());
        let t = pool_classes(&[cand(&[1], -5.0, &[1, 1]), cand(&[1], -2.0, &[1, 0])]);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].log_likelihood, -2.0);
        assert_eq!(t[0].correction, BitVec::from_bits(&[1, 0]));

        let t = pool_classes(&[cand(&[0], 0.009f64.ln(), &[0]), cand(&[1], 0.081f64.ln(), &[1])]);
        assert_eq!(t[0].class.0, BitVec::from_bits(&[1]));
        assert_eq!(t[1].class.0, BitVec::from_bits(&[0]));
    }

    #[test]
    fn decide_rules() {
        assert!(decide(GapValue::ZERO, 0.0).unwrap().accepted);
        assert!(!decide(GapValue::ZERO, 1e-9).unwrap().accepted);
        assert!(decide(GapValue::INFINITE, 1e300).unwrap().accepted);
        assert!(decide(GapValue::INFINITE, f64::INFINITY).unwrap().accepted);
        let g = GapValue::finite(2.0).unwrap();
        assert!(decide(g, 2.0).unwrap().accepted);
        assert!(!decide(g, 2.0000001).unwrap().accepted);
        assert!(decide(g, -1.0).is_err());
        assert!(decide(g, f64::NAN).is_err());
    }

    #[test]
    fn gap_value_text() {
        assert_eq!(GapValue::INFINITE.to_string(), "inf");
        assert_eq!("inf".parse::<GapValue>().unwrap(), GapValue::INFINITE);
        let g = GapValue::finite(9f64.ln()).unwrap();
        assert_eq!(g.to_string().parse::<GapValue>().unwrap(), g);
        assert!("-1".parse::<GapValue>().is_err());
        assert!(GapValue::finite(f64::NAN).is_err());
    }

    #[test]
    fn rep3_gap_is_ln9() {
        let prob = repetition_problem(3, 0.1).unwrap();
        let (b, f) = cfgs();
        let out = run_forced_gap(&prob, &Syndrome(BitVec::from_bits(&[1, 0])), &b, &f).unwrap();
        assert!(!out.erasure);
        assert_eq!(out.lambda0().unwrap().0, BitVec::from_bits(&[1]));
        assert_eq!(out.lambda1().unwrap().0, BitVec::from_bits(&[0]));
        assert!((out.gap.value() - 9f64.ln()).abs() < 1e-9);
        assert_eq!(out.forced_converged_count, 1);
        assert_eq!(decoded_class(&out).unwrap().0, BitVec::from_bits(&[1]));
        assert_eq!(out.best_correction().unwrap(), &BitVec::from_bits(&[1, 0, 0]));
    }

    #[test]
    fn erasure_when_baseline_fails() {
        let h = SparseBitMatrix::from_rows(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        let a = SparseBitMatrix::from_rows(2, vec![vec![0]]).unwrap();
        let prob = DecodingProblem::new(h, a, vec![0.1, 0.1]).unwrap();
        let (b, f) = cfgs();
        let out = run_forced_gap(&prob, &Syndrome(BitVec::from_bits(&[1, 0])), &b, &f).unwrap();
        assert!(out.erasure);
        assert_eq!(out.gap, GapValue::ZERO);
        assert!(out.class_table.is_empty());
        assert!(matches!(decoded_class(&out), Err(Error::Erasure)));
    }

    #[test]
    fn infinite_gap_when_forced_runs_fail() {
        // the observable is a stabilizer-determined parity, so no forced run can succeed
        let h = SparseBitMatrix::from_rows(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
        let a = SparseBitMatrix::from_rows(3, vec![vec![0, 1]]).unwrap();
        let prob = DecodingProblem::new(h, a, vec![0.1; 3]).unwrap();
        let (b, f) = cfgs();
        let out = run_forced_gap(&prob, &Syndrome(BitVec::from_bits(&[1, 0])), &b, &f).unwrap();
        assert!(!out.erasure);
        assert_eq!(out.forced_converged_count, 0);
        assert!(out.gap.is_infinite());
        assert!(out.lambda1().is_none());
    }

    #[test]
    fn exact_tie_gives_zero_gap() {
        let h = SparseBitMatrix::from_rows(2, vec![vec![0, 1]]).unwrap();
        let a = SparseBitMatrix::from_rows(2, vec![vec![0]]).unwrap();
        let prob = DecodingProblem::new(h, a, vec![0.1, 0.1]).unwrap();
        let (b, f) = cfgs();
        let out = run_forced_gap(&prob, &Syndrome(BitVec::from_bits(&[1])), &b, &f).unwrap();
        assert!(!out.erasure);
        assert_eq!(out.class_table.len(), 2);
        assert_eq!(out.gap.value(), 0.0);
        assert!(!out.gap.is_infinite());
        // ties resolve to the lexicographically smaller class
        assert_eq!(out.lambda0().unwrap().0, BitVec::from_bits(&[0]));
    }

    #[test]
    fn pooled_class_can_beat_baseline() {
        let baseline = DecodeOutcome {
            candidates: vec![cand(&[1], -4.0, &[1, 1, 1])],
            legs_run: 3,
        };
        let forced = vec![ForcedRun {
            observable_index: 0,
            forced_bit: false,
            outcome: DecodeOutcome {
                candidates: vec![cand(&[0], -1.5, &[0, 0, 1])],
                legs_run: 1,
            },
        }];
        let out = combine_runs(&baseline, &forced);
        assert_eq!(out.baseline_class.as_ref().unwrap().0, BitVec::from_bits(&[1]));
        assert_eq!(decoded_class(&out).unwrap().0, BitVec::from_bits(&[0]));
        assert_eq!(out.gap.value(), 2.5);
        assert_eq!(out.best_correction().unwrap(), &BitVec::from_bits(&[0, 0, 1]));

        let single = combine_runs(&baseline, &[]);
        assert!(single.gap.is_infinite());
        assert_eq!(decoded_class(&single).unwrap().0, BitVec::from_bits(&[1]));
    }
}
