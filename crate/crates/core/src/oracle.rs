//! Exact maximum-likelihood decoding by coset enumeration.
//!
//! Only usable when `N − rank(H)` is small. The coset of `σ` is walked as a
//! particular solution plus a Gray-code sweep over a kernel basis, and class
//! masses are accumulated in log space.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::f2::{BitVec, SparseBitMatrix};
use crate::problem::{DecodingProblem, LogicalClass, Syndrome};

/// Largest kernel dimension [`enumerate_coset`] accepts.
pub const ENUMERATION_BUDGET: usize = 24;

/// Iterator over `{e : H e = σ}`.
pub struct CosetIter {
    current: BitVec,
    basis: Vec<BitVec>,
    next_index: u64,
    total: u64,
}

impl Iterator for CosetIter {
    type Item = BitVec;

    fn next(&mut self) -> Option<BitVec> {
        if self.next_index >= self.total {
            return None;
        }
        if self.next_index > 0 {
            // Gray code: step k flips the basis vector at the lowest set bit of k
            let flip = self.next_index.trailing_zeros() as usize;
            self.current.xor_assign(&self.basis[flip]);
        }
        self.next_index += 1;
        Some(self.current.clone())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next_index) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for CosetIter {}

pub fn enumerate_coset(h: &SparseBitMatrix, s: &Syndrome) -> Result<CosetIter> {
    let basis = h.kernel_basis();
    if basis.len() > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            dim: basis.len(),
            budget: ENUMERATION_BUDGET,
        });
    }
    let (current, total) = match h.solve(s.bits())? {
        Some(x) => (x, 1u64 << basis.len()),
        None => (BitVec::zeros(h.cols()), 0),
    };
    Ok(CosetIter {
        current,
        basis,
        next_index: 0,
        total,
    })
}

/// Streaming `ln Σ exp(x)`.
#[derive(Clone, Copy, Debug)]
struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.scaled += (x - self.max).exp();
        }
    }

    fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

#[derive(Clone, Debug)]
pub struct ClassEntryMass {
    pub class: LogicalClass,
    pub log_mass: f64,
    /// Most likely single correction in the class.
    pub best_correction: BitVec,
    pub best_log_likelihood: f64,
}

/// `ℙ_L[λ]` for every class with nonzero mass, ordered by decreasing mass,
/// ties by class bits.
#[derive(Clone, Debug)]
pub struct ClassDistribution {
    pub entries: Vec<ClassEntryMass>,
    pub log_syndrome_mass: f64,
}

impl ClassDistribution {
    pub fn mass(&self, class: &LogicalClass) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.class == class)
            .map_or(0.0, |e| e.log_mass.exp())
    }

    pub fn syndrome_mass(&self) -> f64 {
        self.log_syndrome_mass.exp()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn class_distribution(prob: &DecodingProblem, s: &Syndrome) -> Result<ClassDistribution> {
    prob.check_syndrome(s)?;
    let mut acc: HashMap<LogicalClass, (LogSum, BitVec, f64)> = HashMap::new();
    let mut total = LogSum::new();
    for e in enumerate_coset(prob.h(), s)? {
        let ll = prob.log_likelihood(&e)?;
        if ll == f64::NEG_INFINITY {
            continue;
        }
        total.add(ll);
        let class = prob.logical_class_of(&e)?;
        let slot = acc
            .entry(class)
            .or_insert_with(|| (LogSum::new(), e.clone(), f64::NEG_INFINITY));
        slot.0.add(ll);
        if ll > slot.2 || (ll == slot.2 && e < slot.1) {
            slot.1 = e;
            slot.2 = ll;
        }
    }
    let mut entries: Vec<ClassEntryMass> = acc
        .into_iter()
        .map(|(class, (sum, best_correction, best_log_likelihood))| ClassEntryMass {
            class,
            log_mass: sum.value(),
            best_correction,
            best_log_likelihood,
        })
        .collect();
    entries.sort_by(|a, b| b.log_mass.total_cmp(&a.log_mass).then_with(|| a.class.cmp(&b.class)));
    Ok(ClassDistribution {
        entries,
        log_syndrome_mass: total.value(),
    })
}

#[derive(Clone, Debug)]
pub struct MldResult {
    pub class: LogicalClass,
    /// `ln ℙ_L[λ*]`.
    pub log_prob: f64,
    /// Most likely correction inside `λ*`.
    pub correction: BitVec,
}

/// Most likely logical class; ties go to the lexicographically smallest.
pub fn mld_decode(prob: &DecodingProblem, s: &Syndrome) -> Result<MldResult> {
    let dist = class_distribution(prob, s)?;
    let top = dist.entries.into_iter().next().ok_or(Error::InfeasibleSyndrome)?;
    Ok(MldResult {
        class: top.class,
        log_prob: top.log_mass,
        correction: top.best_correction,
    })
}

/// `ln ℙ_L[λ*] − ln ℙ_L[λ**]` from the full class distribution.
pub fn exact_gap(prob: &DecodingProblem, s: &Syndrome) -> Result<f64> {
    let dist = class_distribution(prob, s)?;
    match dist.entries.as_slice() {
        [] => Err(Error::InfeasibleSyndrome),
        [_] => Err(Error::SingleClass),
        [first, second, ..] => Ok(first.log_mass - second.log_mass),
    }
}

/// The same quantity using one MLD call on `(H, σ)` and one per observable on
/// the forced instances `(H⁽ⁱ⁾, σ⁽ⁱ⁾)`; `λ**` is the best of the forced
/// winners.
pub fn exact_gap_via_forced(prob: &DecodingProblem, s: &Syndrome) -> Result<f64> {
    let star = mld_decode(prob, s)?;
    let mut second = f64::NEG_INFINITY;
    for i in 0..prob.num_observables() {
        let forced = prob.build_forced(i, &star.class)?;
        match mld_decode(&forced.problem(), &forced.syndrome(s)) {
            Ok(r) => second = second.max(r.log_prob),
            Err(Error::InfeasibleSyndrome) => {}
            Err(e) => return Err(e),
        }
    }
    if second == f64::NEG_INFINITY {
        return Err(Error::SingleClass);
    }
    Ok(star.log_prob - second)
}
