//! Built-in decoding problems: repetition codes and bivariate bicycle codes.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::f2::{BitVec, EchelonBasis, SparseBitMatrix};
use crate::problem::{check_prior, DecodingProblem};

/// Polynomial in commuting cyclic shifts `x` (order `l`) and `y` (order `m`)
/// with GF(2) coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BivariatePoly {
    l: usize,
    m: usize,
    terms: BTreeSet<(usize, usize)>,
}

impl BivariatePoly {
    /// Monomials are given as `(power of x, power of y)`. Exponents are reduced
    /// mod `(l, m)` and repeated monomials cancel.
    pub fn new(l: usize, m: usize, monomials: &[(usize, usize)]) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("shift orders must be positive, got l={l} m={m}")));
        }
        let mut terms = BTreeSet::new();
        for &(a, b) in monomials {
            let t = (a % l, b % m);
            if !terms.remove(&t) {
                terms.insert(t);
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidParameter("polynomial has no terms".into()));
        }
        Ok(BivariatePoly { l, m, terms })
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.terms.iter().copied()
    }

    /// The `lm × lm` matrix with row `(i, j)` (index `i·m + j`) mapped to
    /// column `(i + a, j + b)` for each monomial `x^a y^b`.
    pub fn matrix(&self) -> SparseBitMatrix {
        let size = self.l * self.m;
        let rows = (0..size)
            .map(|r| {
                let (i, j) = (r / self.m, r % self.m);
                let mut cols: Vec<usize> = self
                    .terms
                    .iter()
                    .map(|&(a, b)| ((i + a) % self.l) * self.m + (j + b) % self.m)
                    .collect();
                cols.sort_unstable();
                cols
            })
            .collect();
        SparseBitMatrix::from_rows(size, rows).expect("distinct monomials give distinct columns")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckSide {
    X,
    Z,
}

/// A CSS code with a paired logical basis: `a_x · a_zᵀ = I`.
#[derive(Clone, Debug)]
pub struct CssCode {
    pub h_x: SparseBitMatrix,
    pub h_z: SparseBitMatrix,
    /// X-type logicals, rows in `ker(H_Z)`.
    pub a_x: SparseBitMatrix,
    /// Z-type logicals, rows in `ker(H_X)`.
    pub a_z: SparseBitMatrix,
    pub n: usize,
    pub k: usize,
}

impl CssCode {
    pub fn new(h_x: SparseBitMatrix, h_z: SparseBitMatrix) -> Result<Self> {
        let (a_x, a_z) = css_logicals(&h_x, &h_z)?;
        let n = h_x.cols();
        let k = a_x.rows();
        Ok(CssCode { h_x, h_z, a_x, a_z, n, k })
    }

    /// Pairing matrix `A_X · A_Zᵀ`.
    pub fn pairing(&self) -> Vec<BitVec> {
        self.a_x.mul_transpose(&self.a_z).expect("same column count")
    }
}

/// Bivariate bicycle code: `H_X = [A | B]`, `H_Z = [Bᵀ | Aᵀ]`.
pub fn bb_code(a: &BivariatePoly, b: &BivariatePoly) -> Result<CssCode> {
    if (a.l, a.m) != (b.l, b.m) {
        return Err(Error::InvalidParameter("polynomials over different shift groups".into()));
    }
    let half = a.l * a.m;
    let am = a.matrix();
    let bm = b.matrix();
    let (amt, bmt) = (am.transpose(), bm.transpose());
    let hstack = |left: &SparseBitMatrix, right: &SparseBitMatrix| {
        let rows = (0..half)
            .map(|r| {
                left.row(r)
                    .iter()
                    .copied()
                    .chain(right.row(r).iter().map(|&c| c + half))
                    .collect()
            })
            .collect();
        SparseBitMatrix::from_rows(2 * half, rows)
    };
    CssCode::new(hstack(&am, &bm)?, hstack(&bmt, &amt)?)
}

/// The `[[72, 12, 6]]` code: `l = m = 6`, `A = x³ + y + y²`, `B = y³ + x + x²`.
pub fn bb72() -> CssCode {
    bb_preset(6, 6)
}

/// The `[[144, 12, 12]]` code: `l = 12`, `m = 6`, same polynomials as [`bb72`].
pub fn bb144() -> CssCode {
    bb_preset(12, 6)
}

fn bb_preset(l: usize, m: usize) -> CssCode {
    let a = BivariatePoly::new(l, m, &[(3, 0), (0, 1), (0, 2)]).unwrap();
    let b = BivariatePoly::new(l, m, &[(0, 3), (1, 0), (2, 0)]).unwrap();
    bb_code(&a, &b).unwrap()
}

/// Logical bases for a CSS code, symplectically paired so that
/// `A_X · A_Zᵀ` is the identity.
///
/// Candidates are kernel vectors taken in pivot order that are independent of
/// the opposite stabilizer rowspace, followed by Gram-Schmidt pairing.
pub fn css_logicals(
    h_x: &SparseBitMatrix,
    h_z: &SparseBitMatrix,
) -> Result<(SparseBitMatrix, SparseBitMatrix)> {
    let n = h_x.cols();
    if h_z.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "css_logicals",
            expected: n,
            found: h_z.cols(),
        });
    }
    if h_x.mul_transpose(h_z)?.iter().any(|r| !r.is_zero()) {
        return Err(Error::InvalidParameter("H_X · H_Zᵀ ≠ 0".into()));
    }

    let complement = |kernel_of: &SparseBitMatrix, stabilizers: &SparseBitMatrix| {
        let mut span = EchelonBasis::new();
        for r in stabilizers.to_bitvec_rows() {
            span.insert(&r);
        }
        kernel_of
            .kernel_basis()
            .into_iter()
            .filter(|v| span.insert(v))
            .collect::<Vec<_>>()
    };
    let mut xs = complement(h_z, h_x);
    let mut zs = complement(h_x, h_z);
    debug_assert_eq!(xs.len(), zs.len());

    let k = xs.len();
    for i in 0..k {
        let partner = (i..k)
            .find(|&j| xs[i].dot(&zs[j]))
            .expect("pairing matrix is invertible");
        zs.swap(i, partner);
        let (xi, zi) = (xs[i].clone(), zs[i].clone());
        for l in (i + 1)..k {
            if xs[l].dot(&zi) {
                xs[l].xor_assign(&xi);
            }
            if xi.dot(&zs[l]) {
                zs[l].xor_assign(&zi);
            }
        }
    }
    Ok((
        SparseBitMatrix::from_bitvec_rows(n, &xs)?,
        SparseBitMatrix::from_bitvec_rows(n, &zs)?,
    ))
}

/// Code-capacity problem for one check side: faults are single-qubit flips
/// seen by that side's checks, classes come from the opposite-type logicals.
/// Side `Z` decodes X flips with `H = H_Z` and `A = A_Z`.
pub fn css_side_problem(code: &CssCode, side: CheckSide, p: f64) -> Result<DecodingProblem> {
    check_prior(p)?;
    let (h, a) = match side {
        CheckSide::Z => (code.h_z.clone(), code.a_z.clone()),
        CheckSide::X => (code.h_x.clone(), code.a_x.clone()),
    };
    DecodingProblem::new(h, a, vec![p; code.n])
}

fn adjacent_parities(n: usize) -> Vec<Vec<usize>> {
    (0..n - 1).map(|c| vec![c, c + 1]).collect()
}

fn check_rep_size(n: usize) -> Result<()> {
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidParameter(format!("repetition length must be odd and ≥ 3, got {n}")));
    }
    Ok(())
}

/// Length-`n` bit-flip repetition code under code-capacity noise. The single
/// observable reads qubit 0.
pub fn repetition_problem(n: usize, p: f64) -> Result<DecodingProblem> {
    check_rep_size(n)?;
    check_prior(p)?;
    DecodingProblem::new(
        SparseBitMatrix::from_rows(n, adjacent_parities(n))?,
        SparseBitMatrix::from_rows(n, vec![vec![0]])?,
        vec![p; n],
    )
}

/// Repetition code over `rounds` rounds of noisy check measurement.
///
/// Detector `(r, c)` has index `r·(n−1) + c` and compares check `c` in round
/// `r` with round `r − 1` (implicit zero before round 0). Fault columns are
/// laid out round by round: `n` data flips, then `n − 1` measurement flips for
/// every round but the last. A data flip on qubit `q` in round `r` fires the
/// neighbouring checks' detectors in round `r`; a measurement flip on check `c`
/// in round `r` fires `(r, c)` and `(r + 1, c)`. The last round's measurements
/// are noiseless.
pub fn repetition_phenom_problem(
    n: usize,
    rounds: usize,
    p_data: f64,
    p_meas: f64,
) -> Result<DecodingProblem> {
    check_rep_size(n)?;
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be ≥ 1".into()));
    }
    check_prior(p_data)?;
    check_prior(p_meas)?;
    let checks = n - 1;
    let det = |r: usize, c: usize| r * checks + c;
    let mut h_rows = vec![Vec::new(); checks * rounds];
    let mut obs = Vec::new();
    let mut priors = Vec::new();
    let mut col = 0;
    for r in 0..rounds {
        for q in 0..n {
            if q >= 1 {
                h_rows[det(r, q - 1)].push(col);
            }
            if q < checks {
                h_rows[det(r, q)].push(col);
            }
            if q == 0 {
                obs.push(col);
            }
            priors.push(p_data);
            col += 1;
        }
        if r + 1 < rounds {
            for c in 0..checks {
                h_rows[det(r, c)].push(col);
                h_rows[det(r + 1, c)].push(col);
                priors.push(p_meas);
                col += 1;
            }
        }
    }
    DecodingProblem::new(
        SparseBitMatrix::from_rows(col, h_rows)?,
        SparseBitMatrix::from_rows(col, vec![obs])?,
        priors,
    )
}

pub const PRESETS: &[&str] = &["rep3", "rep5", "bb72", "bb144"];

/// Looks up a named built-in problem. BB presets are Z-side code-capacity
/// problems.
pub fn preset_problem(name: &str, p: f64) -> Result<DecodingProblem> {
    match name {
        "rep3" => repetition_problem(3, p),
        "rep5" => repetition_problem(5, p),
        "bb72" => css_side_problem(&bb72(), CheckSide::Z, p),
        "bb144" => css_side_problem(&bb144(), CheckSide::Z, p),
        other => Err(Error::InvalidParameter(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESETS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_identity(rows: &[BitVec]) -> bool {
        rows.iter()
            .enumerate()
            .all(|(i, r)| r.ones().collect::<Vec<_>>() == vec![i])
    }

    #[test]
    fn repetition_examples() {
        let p = repetition_problem(3, 0.1).unwrap();
        assert_eq!(p.h().to_dense(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(p.a().to_dense(), vec![vec![1, 0, 0]]);
        let p5 = repetition_problem(5, 0.1).unwrap();
        assert_eq!(p5.h().rank(), 4);
        assert_eq!(p5.h().kernel_basis(), vec![BitVec::from_bits(&[1; 5])]);
        assert!(repetition_problem(4, 0.1).is_err());
        assert!(repetition_problem(1, 0.1).is_err());
        assert!(repetition_problem(3, 0.5).is_err());
    }

    #[test]
    fn phenomenological_counts() {
        let p = repetition_phenom_problem(3, 2, 0.1, 0.1).unwrap();
        assert_eq!(p.num_detectors(), 4);
        assert_eq!(p.num_faults(), 8);
        assert_eq!(p.num_observables(), 1);
        // every fault fires one or two detectors
        for col in p.h().column_supports() {
            assert!((1..=2).contains(&col.len()));
        }
        let one_round = repetition_phenom_problem(3, 1, 0.1, 0.0).unwrap();
        assert_eq!(one_round, repetition_problem(3, 0.1).unwrap());
        assert!(repetition_phenom_problem(3, 0, 0.1, 0.1).is_err());
    }

    #[test]
    fn poly_reduction_and_cancellation() {
        let p = BivariatePoly::new(3, 2, &[(4, 3), (1, 1), (2, 0)]).unwrap();
        assert_eq!(p.terms().collect::<Vec<_>>(), vec![(2, 0)]);
        assert!(BivariatePoly::new(3, 2, &[(0, 0), (3, 2)]).is_err());
        assert!(BivariatePoly::new(0, 2, &[(0, 0)]).is_err());
    }

    #[test]
    fn single_term_bb_is_orthogonal() {
        let one = BivariatePoly::new(3, 3, &[(0, 0)]).unwrap();
        let code = bb_code(&one, &one).unwrap();
        assert!(code.h_x.mul_transpose(&code.h_z).unwrap().iter().all(BitVec::is_zero));
        assert_eq!(code.k, code.n - code.h_x.rank() - code.h_z.rank());
    }

    #[test]
    fn bb72_structure() {
        let code = bb72();
        assert_eq!(code.n, 72);
        assert_eq!(code.h_x.rank(), 30);
        assert_eq!(code.h_z.rank(), 30);
        assert_eq!(code.k, 12);
        assert!(is_identity(&code.pairing()));
        for r in code.a_x.to_bitvec_rows() {
            assert!(code.h_z.mul_vec(&r).unwrap().is_zero());
        }
        for r in code.a_z.to_bitvec_rows() {
            assert!(code.h_x.mul_vec(&r).unwrap().is_zero());
        }
        let prob = css_side_problem(&code, CheckSide::Z, 0.01).unwrap();
        assert_eq!((prob.num_faults(), prob.num_detectors(), prob.num_observables()), (72, 36, 12));
    }

    #[test]
    fn rep_code_as_css() {
        let h_z = SparseBitMatrix::from_rows(3, adjacent_parities(3)).unwrap();
        let code = CssCode::new(SparseBitMatrix::empty(3), h_z).unwrap();
        assert_eq!(code.k, 1);
        assert_eq!(code.a_x.to_dense(), vec![vec![1, 1, 1]]);
        let side = css_side_problem(&code, CheckSide::Z, 0.1).unwrap();
        let rep = repetition_problem(3, 0.1).unwrap();
        assert_eq!(side.h(), rep.h());
        // logical representatives agree modulo the rowspace of H
        let mut span = EchelonBasis::new();
        for r in rep.h().to_bitvec_rows() {
            span.insert(&r);
        }
        let diff = side.a().row_bitvec(0).xor(&rep.a().row_bitvec(0));
        assert!(span.reduce(&diff).is_zero());
    }

    #[test]
    fn presets_resolve() {
        for name in PRESETS {
            assert!(preset_problem(name, 0.01).is_ok(), "{name}");
        }
        assert!(preset_problem("surface", 0.01).is_err());
    }
}
