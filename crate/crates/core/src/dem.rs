//! Flat detector-error-model text format.
//!
//! Accepted lines:
//!
//! ```text
//! # comment
//! error(0.001) D0 D3 L1
//! error(0.002) D1 ^ D2 L0
//! detector(1, 0) D7
//! detector D7
//! logical_observable L2
//! ```
//!
//! Each `error` line is one fault column. `^` separated components are merged
//! into a single fault with targets cancelling mod 2; a fault whose targets
//! all cancel is written back as `error(p) ^`. `repeat` blocks and any other
//! instruction are rejected.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::f2::SparseBitMatrix;
use crate::problem::DecodingProblem;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Target {
    Detector(usize),
    Observable(usize),
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Dem {
        line,
        message: message.into(),
    }
}

/// Splits `name(args) rest` into its three parts.
fn split_instruction(line: &str, lineno: usize) -> Result<(&str, Option<&str>, &str)> {
    let name_end = line
        .find(|c: char| c == '(' || c.is_whitespace())
        .unwrap_or(line.len());
    let name = &line[..name_end];
    let rest = &line[name_end..];
    if let Some(after) = rest.strip_prefix('(') {
        let close = after
            .find(')')
            .ok_or_else(|| err(lineno, "unclosed argument list"))?;
        Ok((name, Some(&after[..close]), &after[close + 1..]))
    } else {
        Ok((name, None, rest))
    }
}

fn parse_target(tok: &str, lineno: usize) -> Result<Target> {
    let parse_index = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| err(lineno, format!("bad target `{tok}`")))
    };
    if let Some(k) = tok.strip_prefix('D') {
        Ok(Target::Detector(parse_index(k)?))
    } else if let Some(k) = tok.strip_prefix('L') {
        Ok(Target::Observable(parse_index(k)?))
    } else {
        Err(err(lineno, format!("bad target `{tok}`")))
    }
}

pub fn parse_dem(text: &str) -> Result<DecodingProblem> {
    let mut columns: Vec<(f64, BTreeSet<Target>)> = Vec::new();
    let mut num_detectors = 0usize;
    let mut num_observables = 0usize;
    let mut raise = |t: Target| match t {
        Target::Detector(k) => num_detectors = num_detectors.max(k + 1),
        Target::Observable(k) => num_observables = num_observables.max(k + 1),
    };

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, args, rest) = split_instruction(line, lineno)?;
        match name {
            "error" => {
                let args = args.ok_or_else(|| err(lineno, "error instruction needs a probability"))?;
                let p: f64 = args
                    .trim()
                    .parse()
                    .map_err(|_| err(lineno, format!("bad probability `{}`", args.trim())))?;
                if !(0.0..0.5).contains(&p) {
                    return Err(err(lineno, format!("probability {p} outside [0, 1/2)")));
                }
                let mut merged = BTreeSet::new();
                let mut saw_target = false;
                for component in rest.split('^') {
                    let mut seen = BTreeSet::new();
                    for tok in component.split_whitespace() {
                        let t = parse_target(tok, lineno)?;
                        if !seen.insert(t) {
                            return Err(err(lineno, format!("duplicate target `{tok}`")));
                        }
                        saw_target = true;
                    }
                    for t in seen {
                        raise(t);
                        if !merged.remove(&t) {
                            merged.insert(t);
                        }
                    }
                }
                if !saw_target && !rest.contains('^') {
                    return Err(err(lineno, "error instruction without targets"));
                }
                columns.push((p, merged));
            }
            "detector" | "logical_observable" => {
                for tok in rest.split_whitespace() {
                    let t = parse_target(tok, lineno)?;
                    match (name, t) {
                        ("detector", Target::Detector(_))
                        | ("logical_observable", Target::Observable(_)) => raise(t),
                        _ => return Err(err(lineno, format!("unexpected target `{tok}`"))),
                    }
                }
            }
            "repeat" => return Err(err(lineno, "repeat blocks are not supported")),
            other => return Err(err(lineno, format!("unknown instruction `{other}`"))),
        }
    }

    if columns.is_empty() {
        return Err(err(0, "no error instructions"));
    }

    let n = columns.len();
    let mut h_rows = vec![Vec::new(); num_detectors];
    let mut a_rows = vec![Vec::new(); num_observables];
    let mut priors = Vec::with_capacity(n);
    for (j, (p, targets)) in columns.into_iter().enumerate() {
        priors.push(p);
        for t in targets {
            match t {
                Target::Detector(k) => h_rows[k].push(j),
                Target::Observable(k) => a_rows[k].push(j),
            }
        }
    }
    DecodingProblem::new(
        SparseBitMatrix::from_rows(n, h_rows)?,
        SparseBitMatrix::from_rows(n, a_rows)?,
        priors,
    )
}

/// Writes one `error` line per fault column. Trailing detectors or observables
/// that no fault touches are declared explicitly so dimensions survive.
pub fn serialize_dem(prob: &DecodingProblem) -> String {
    let h_cols = prob.h().column_supports();
    let a_cols = prob.a().column_supports();
    let mut out = String::new();
    let mut max_det = None;
    let mut max_obs = None;
    for (j, &p) in prob.priors().iter().enumerate() {
        write!(out, "error({p:?})").unwrap();
        for &d in &h_cols[j] {
            write!(out, " D{d}").unwrap();
            max_det = max_det.max(Some(d));
        }
        for &l in &a_cols[j] {
            write!(out, " L{l}").unwrap();
            max_obs = max_obs.max(Some(l));
        }
        if h_cols[j].is_empty() && a_cols[j].is_empty() {
            out.push_str(" ^");
        }
        out.push('\n');
    }
    let m = prob.num_detectors();
    if m > 0 && max_det.is_none_or(|d| d + 1 < m) {
        writeln!(out, "detector D{}", m - 1).unwrap();
    }
    let k = prob.num_observables();
    if k > 0 && max_obs.is_none_or(|l| l + 1 < k) {
        writeln!(out, "logical_observable L{}", k - 1).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const REP3: &str = "error(0.1) D0\nerror(0.1) D0 D1\nerror(0.1) D1 L0\n";

    #[test]
    fn parses_repetition_model() {
        let prob = parse_dem(REP3).unwrap();
        assert_eq!(prob.h().to_dense(), vec![vec![1, 1, 0], vec![0, 1, 1]]);
        assert_eq!(prob.a().to_dense(), vec![vec![0, 0, 1]]);
        assert_eq!(prob.priors(), &[0.1, 0.1, 0.1]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_dem("").is_err());
        assert!(parse_dem("# only a comment\n").is_err());
        assert!(matches!(
            parse_dem("error(0.6) D0"),
            Err(Error::Dem { line: 1, .. })
        ));
        assert!(parse_dem("error(0.5) D0").is_err());
        assert!(parse_dem("error(-0.1) D0").is_err());
        assert!(matches!(
            parse_dem("error(0.1) D0\nerror(0.1) D1 D1"),
            Err(Error::Dem { line: 2, .. })
        ));
        assert!(matches!(
            parse_dem("error(0.1) D0\nrepeat 3 {\n"),
            Err(Error::Dem { line: 2, .. })
        ));
        assert!(parse_dem("error(0.1) X0").is_err());
        assert!(parse_dem("error(0.1)").is_err());
        assert!(parse_dem("error D0").is_err());
        assert!(parse_dem("error(0.1 D0").is_err());
        assert!(parse_dem("shift_detectors 3").is_err());
    }

    #[test]
    fn separators_merge_and_cancel() {
        let prob = parse_dem("error(0.01) D0 D1 ^ D1 D2 L0 ^ L0\n").unwrap();
        assert_eq!(prob.h().to_dense(), vec![vec![1], vec![0], vec![1]]);
        assert_eq!(prob.a().to_dense(), vec![vec![0]]);
    }

    #[test]
    fn declarations_raise_dimensions() {
        let text = "detector(0, 1) D0\ndetector D4\nlogical_observable L2\nerror(0.1) D0 # trailing\n";
        let prob = parse_dem(text).unwrap();
        assert_eq!(prob.num_detectors(), 5);
        assert_eq!(prob.num_observables(), 3);
        assert_eq!(prob.num_faults(), 1);
        assert!(parse_dem("detector L0\nerror(0.1) D0").is_err());
    }

    #[test]
    fn serialize_examples() {
        let prob = parse_dem(REP3).unwrap();
        let text = serialize_dem(&prob);
        assert_eq!(text, "error(0.1) D0\nerror(0.1) D0 D1\nerror(0.1) D1 L0\n");

        let no_obs = parse_dem("error(0.2) D0 D1\nerror(0.0) D1").unwrap();
        let s = serialize_dem(&no_obs);
        assert!(!s.contains('L'));
        assert_eq!(parse_dem(&s).unwrap(), no_obs);

        let padded = parse_dem("detector D6\nlogical_observable L3\nerror(1e-7) D0 L1").unwrap();
        assert_eq!(parse_dem(&serialize_dem(&padded)).unwrap(), padded);
    }

    proptest::proptest! {
        #[test]
        fn roundtrip_is_identity(
            cols in proptest::collection::vec(
                (0.0f64..0.4999, proptest::collection::btree_set(0usize..9, 0..4),
                 proptest::collection::btree_set(0usize..3, 0..2)),
                1..12,
            )
        ) {
            let mut text = String::new();
            for (p, ds, ls) in &cols {
                text.push_str(&format!("error({p})"));
                for d in ds { text.push_str(&format!(" D{d}")); }
                for l in ls { text.push_str(&format!(" L{l}")); }
                if ds.is_empty() && ls.is_empty() { text.push_str(" ^"); }
                text.push('\n');
            }
            let parsed = parse_dem(&text).unwrap();
            let again = parse_dem(&serialize_dem(&parsed)).unwrap();
            proptest::prop_assert_eq!(again.h(), parsed.h());
            proptest::prop_assert_eq!(again.a(), parsed.a());
            for (x, y) in again.priors().iter().zip(parsed.priors()) {
                proptest::prop_assert!((x - y).abs() <= 1e-12 * y.abs());
            }
        }
    }
}
