//! The decoding problem `(H, A, p)` and the forced-instance construction.

use std::fmt;

use crate::error::{Error, Result};
use crate::f2::{BitVec, SparseBitMatrix};

/// Observed detector outcomes for one shot.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Syndrome(pub BitVec);

/// Pattern of logical observables flipped by a correction (`A · e`).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LogicalClass(pub BitVec);

impl Syndrome {
    pub fn bits(&self) -> &BitVec {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl LogicalClass {
    pub fn zeros(k: usize) -> Self {
        LogicalClass(BitVec::zeros(k))
    }

    pub fn bits(&self) -> &BitVec {
        &self.0
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0.get(i)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Parity-check matrix `H` (detectors × faults), logical action matrix `A`
/// (observables × faults) and independent fault priors.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodingProblem {
    h: SparseBitMatrix,
    a: SparseBitMatrix,
    priors: Vec<f64>,
    llr_weights: Vec<f64>,
    /// `ln P[e = 0] = Σ ln(1 − p_j)`.
    log_no_fault: f64,
}

impl DecodingProblem {
    pub fn new(h: SparseBitMatrix, a: SparseBitMatrix, priors: Vec<f64>) -> Result<Self> {
        if a.cols() != h.cols() {
            return Err(Error::DimensionMismatch {
                context: "action matrix columns",
                expected: h.cols(),
                found: a.cols(),
            });
        }
        if priors.len() != h.cols() {
            return Err(Error::DimensionMismatch {
                context: "prior vector length",
                expected: h.cols(),
                found: priors.len(),
            });
        }
        for &p in &priors {
            check_prior(p)?;
        }
        let llr_weights = priors.iter().map(|&p| llr_weight(p)).collect();
        let log_no_fault = priors.iter().map(|&p| (-p).ln_1p()).sum();
        Ok(DecodingProblem {
            h,
            a,
            priors,
            llr_weights,
            log_no_fault,
        })
    }

    pub fn h(&self) -> &SparseBitMatrix {
        &self.h
    }

    pub fn a(&self) -> &SparseBitMatrix {
        &self.a
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    /// `w_j = ln((1 − p_j) / p_j)`, `+∞` for `p_j = 0`.
    pub fn llr_weights(&self) -> &[f64] {
        &self.llr_weights
    }

    pub fn num_faults(&self) -> usize {
        self.h.cols()
    }

    pub fn num_detectors(&self) -> usize {
        self.h.rows()
    }

    pub fn num_observables(&self) -> usize {
        self.a.rows()
    }

    /// Same matrices, new uniform prior.
    pub fn with_uniform_prior(&self, p: f64) -> Result<Self> {
        DecodingProblem::new(self.h.clone(), self.a.clone(), vec![p; self.num_faults()])
    }

    /// `ln P[e]` in weight form: `ln P[0] − Σ_{e_j = 1} w_j`.
    pub fn log_likelihood(&self, e: &BitVec) -> Result<f64> {
        self.check_fault_len(e)?;
        Ok(self.log_no_fault - e.ones().map(|j| self.llr_weights[j]).sum::<f64>())
    }

    pub fn logical_class_of(&self, e: &BitVec) -> Result<LogicalClass> {
        self.check_fault_len(e)?;
        Ok(LogicalClass(self.a.mul_vec(e)?))
    }

    /// `H · e`.
    pub fn syndrome_of(&self, e: &BitVec) -> Result<Syndrome> {
        self.check_fault_len(e)?;
        Ok(Syndrome(self.h.mul_vec(e)?))
    }

    pub fn check_syndrome(&self, s: &Syndrome) -> Result<()> {
        if s.len() != self.num_detectors() {
            return Err(Error::DimensionMismatch {
                context: "syndrome length",
                expected: self.num_detectors(),
                found: s.len(),
            });
        }
        Ok(())
    }

    /// The instance that forces observable `i` away from `baseline_class`.
    pub fn build_forced(&self, i: usize, baseline_class: &LogicalClass) -> Result<ForcedInstance<'_>> {
        if i >= self.num_observables() {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: self.num_observables(),
            });
        }
        if baseline_class.len() != self.num_observables() {
            return Err(Error::DimensionMismatch {
                context: "baseline class length",
                expected: self.num_observables(),
                found: baseline_class.len(),
            });
        }
        let h_aug = self.h.append_row(&self.a.row_bitvec(i))?;
        Ok(ForcedInstance {
            base: self,
            observable_index: i,
            h_aug,
            forced_bit: !baseline_class.bit(i),
        })
    }

    fn check_fault_len(&self, e: &BitVec) -> Result<()> {
        if e.len() != self.num_faults() {
            return Err(Error::DimensionMismatch {
                context: "fault vector length",
                expected: self.num_faults(),
                found: e.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_prior(p: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::InvalidPrior(p));
    }
    Ok(())
}

fn llr_weight(p: f64) -> f64 {
    if p == 0.0 {
        f64::INFINITY
    } else {
        ((1.0 - p) / p).ln()
    }
}

/// `H` with row `i` of `A` appended, and the bit to append to the syndrome.
/// Any `e` with `h_aug · e = σ ∥ forced_bit` satisfies `(A · e)_i = forced_bit`.
#[derive(Clone, Debug)]
pub struct ForcedInstance<'a> {
    pub base: &'a DecodingProblem,
    pub observable_index: usize,
    pub h_aug: SparseBitMatrix,
    pub forced_bit: bool,
}

impl ForcedInstance<'_> {
    pub fn syndrome(&self, s: &Syndrome) -> Syndrome {
        extend_syndrome(s, self.forced_bit)
    }

    /// The augmented problem `(H^(i), A, p)`.
    pub fn problem(&self) -> DecodingProblem {
        DecodingProblem {
            h: self.h_aug.clone(),
            a: self.base.a.clone(),
            priors: self.base.priors.clone(),
            llr_weights: self.base.llr_weights.clone(),
            log_no_fault: self.base.log_no_fault,
        }
    }
}

pub fn extend_syndrome(s: &Syndrome, forced_bit: bool) -> Syndrome {
    Syndrome(s.0.with_bit(forced_bit))
}
