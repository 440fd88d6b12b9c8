//! Monte Carlo shots, threshold sweeps and their file formats.
//!
//! Shot `i` of an experiment uses `shot_seed = derive_seed(master_seed, i)`
//! for both fault sampling and decoding, so results do not depend on how
//! shots are spread over workers.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::codes::{preset_problem, repetition_phenom_problem};
use crate::dem::parse_dem;
use crate::error::{Error, Result};
use crate::f2::BitVec;
use crate::gap::{decoded_class, ForcedGapEngine, ForcedGapReport, GapValue};
use crate::problem::{DecodingProblem, LogicalClass, Syndrome};
use crate::relay::RelayConfig;
use crate::seed::derive_seed;
use crate::stats::{per_round_ler, wilson_ci};

/// Draws `f ~ Bernoulli(p)` and returns `(f, H·f, A·f)`.
pub fn sample_shot<R: Rng + ?Sized>(prob: &DecodingProblem, rng: &mut R) -> (BitVec, Syndrome, LogicalClass) {
    let mut f = BitVec::zeros(prob.num_faults());
    for (j, &p) in prob.priors().iter().enumerate() {
        if p > 0.0 && rng.random::<f64>() < p {
            f.set(j, true);
        }
    }
    let s = prob.syndrome_of(&f).expect("fault length matches");
    let class = prob.logical_class_of(&f).expect("fault length matches");
    (f, s, class)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShotRecord {
    pub shot_index: usize,
    pub shot_seed: u64,
    pub true_class: LogicalClass,
    pub gap: GapValue,
    pub erasure: bool,
    pub decoded_class: Option<LogicalClass>,
    pub success: bool,
    pub forced_converged_count: usize,
}

/// A decoded shot together with the data behind its record.
#[derive(Clone, Debug)]
pub struct ShotDetail {
    pub record: ShotRecord,
    pub fault: BitVec,
    pub syndrome: Syndrome,
    pub report: ForcedGapReport,
}

/// Violations found by [`audit_report`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AuditSummary {
    pub candidates_checked: usize,
    /// Candidates whose correction does not reproduce their syndrome.
    pub syndrome_violations: usize,
    /// Forced-run candidates whose class bit `i` differs from `1 ⊕ L⁽⁰⁾ᵢ`.
    pub forced_violations: usize,
}

impl AuditSummary {
    pub fn is_clean(&self) -> bool {
        self.syndrome_violations == 0 && self.forced_violations == 0
    }

    pub fn merge(self, other: AuditSummary) -> AuditSummary {
        AuditSummary {
            candidates_checked: self.candidates_checked + other.candidates_checked,
            syndrome_violations: self.syndrome_violations + other.syndrome_violations,
            forced_violations: self.forced_violations + other.forced_violations,
        }
    }
}

/// Re-checks every candidate of a report against the original problem.
pub fn audit_report(prob: &DecodingProblem, s: &Syndrome, report: &ForcedGapReport) -> AuditSummary {
    let mut out = AuditSummary::default();
    let reproduces = |e: &BitVec| prob.syndrome_of(e).map(|x| &x == s).unwrap_or(false);
    for c in &report.baseline.candidates {
        out.candidates_checked += 1;
        if !reproduces(&c.correction) {
            out.syndrome_violations += 1;
        }
    }
    let l0 = report.baseline.best().map(|c| c.logical_class.clone());
    for run in &report.forced {
        for c in &run.outcome.candidates {
            out.candidates_checked += 1;
            if !reproduces(&c.correction) {
                out.syndrome_violations += 1;
            }
            let class = prob.logical_class_of(&c.correction).ok();
            let want = l0.as_ref().map(|l| !l.bit(run.observable_index));
            if class.map(|k| k.bit(run.observable_index)) != want || want != Some(run.forced_bit) {
                out.forced_violations += 1;
            }
        }
    }
    out
}

/// Samples and decodes one shot. Fails with [`Error::AuditFailure`] if any
/// candidate does not reproduce the syndrome.
pub fn decode_shot(
    engine: &ForcedGapEngine,
    shot_index: usize,
    shot_seed: u64,
    cfg_baseline: &RelayConfig,
    cfg_forced: &RelayConfig,
) -> Result<ShotDetail> {
    let prob = engine.problem();
    let mut rng = ChaCha8Rng::seed_from_u64(shot_seed);
    let (fault, syndrome, true_class) = sample_shot(prob, &mut rng);
    let report = engine.run(&syndrome, shot_seed, cfg_baseline, cfg_forced)?;
    if audit_report(prob, &syndrome, &report).syndrome_violations > 0 {
        return Err(Error::AuditFailure { shot: shot_index });
    }
    let outcome = &report.outcome;
    let decoded = decoded_class(outcome).ok();
    let record = ShotRecord {
        shot_index,
        shot_seed,
        success: decoded.as_ref() == Some(&true_class),
        true_class,
        gap: outcome.gap,
        erasure: outcome.erasure,
        decoded_class: decoded,
        forced_converged_count: outcome.forced_converged_count,
    };
    Ok(ShotDetail {
        record,
        fault,
        syndrome,
        report,
    })
}

#[derive(Clone, Debug)]
pub enum ProblemSource {
    /// Built-in preset (`rep3`, `rep5`, `bb72`, `bb144`) at uniform prior `p`.
    Preset { name: String, p: f64 },
    /// Phenomenological repetition code.
    RepetitionPhenom {
        n: usize,
        rounds: usize,
        p_data: f64,
        p_meas: f64,
    },
    DemFile(PathBuf),
    Problem(DecodingProblem),
}

impl ProblemSource {
    pub fn load(&self) -> Result<DecodingProblem> {
        match self {
            ProblemSource::Preset { name, p } => preset_problem(name, *p),
            ProblemSource::RepetitionPhenom {
                n,
                rounds,
                p_data,
                p_meas,
            } => repetition_phenom_problem(*n, *rounds, *p_data, *p_meas),
            ProblemSource::DemFile(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                parse_dem(&text)
            }
            ProblemSource::Problem(p) => Ok(p.clone()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub source: ProblemSource,
    pub baseline: RelayConfig,
    pub forced: RelayConfig,
    pub n_shots: usize,
    /// Syndrome-extraction rounds, used for per-round normalization.
    pub rounds: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub worker_count: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_shots == 0 {
            return Err(Error::InvalidConfig("n_shots must be ≥ 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be ≥ 1".into()));
        }
        self.baseline.validate()?;
        self.forced.validate()
    }
}

fn with_workers<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Decodes shots `0..n_shots` in parallel and hands each detail to `visit`
/// (called from worker threads), returning the records in shot order.
pub fn run_shots_with<F>(cfg: &ExperimentConfig, engine: &ForcedGapEngine, visit: F) -> Result<Vec<ShotRecord>>
where
    F: Fn(&ShotDetail) + Sync,
{
    cfg.validate()?;
    with_workers(cfg.worker_count, || {
        (0..cfg.n_shots)
            .into_par_iter()
            .map(|i| {
                let detail = decode_shot(
                    engine,
                    i,
                    derive_seed(cfg.master_seed, i as u64),
                    &cfg.baseline,
                    &cfg.forced,
                )?;
                visit(&detail);
                Ok(detail.record)
            })
            .collect::<Result<Vec<_>>>()
    })?
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ShotRecord>> {
    cfg.validate()?;
    let prob = cfg.source.load()?;
    let engine = ForcedGapEngine::new(&prob)?;
    run_shots_with(cfg, &engine, |_| {})
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    #[serde(rename = "T", serialize_with = "serialize_threshold")]
    pub threshold: f64,
    pub ps_rate: f64,
    pub ler: f64,
    pub ler_per_round: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_accepted: usize,
}

fn serialize_threshold<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*t)
    }
}

/// One curve point per threshold: shots with `gap < T` are rejected and the
/// logical error rate is taken over the rest. At `T = 0` erasures are kept and
/// count as failures. With nothing accepted the rate is 0 and the interval
/// is `[0, 1]`.
pub fn sweep_thresholds(records: &[ShotRecord], thresholds: &[f64], rounds: usize) -> Result<Vec<CurvePoint>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no shot records".into()));
    }
    if rounds == 0 {
        return Err(Error::InvalidParameter("rounds must be ≥ 1".into()));
    }
    if thresholds.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter("thresholds must be ≥ 0".into()));
    }
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("thresholds must be sorted ascending".into()));
    }
    let n = records.len();
    thresholds
        .iter()
        .map(|&t| {
            let accepted: Vec<&ShotRecord> = records.iter().filter(|r| r.gap.passes(t)).collect();
            let n_accepted = accepted.len();
            let failures = accepted.iter().filter(|r| !r.success).count();
            let (ler, ci_low, ci_high) = if n_accepted == 0 {
                (0.0, 0.0, 1.0)
            } else {
                let (lo, hi) = wilson_ci(failures, n_accepted, 0.95)?;
                (failures as f64 / n_accepted as f64, lo, hi)
            };
            Ok(CurvePoint {
                threshold: t,
                ps_rate: (n - n_accepted) as f64 / n as f64,
                ler,
                ler_per_round: per_round_ler(ler, rounds),
                ci_low,
                ci_high,
                n_accepted,
            })
        })
        .collect()
}

/// Parses `"0,0.5,1,inf"`.
pub fn parse_thresholds(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let t = match tok {
                "inf" | "+inf" => f64::INFINITY,
                _ => tok
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad threshold `{tok}`")))?,
            };
            if t.is_nan() || t < 0.0 {
                return Err(Error::InvalidParameter(format!("threshold `{tok}` must be ≥ 0")));
            }
            Ok(t)
        })
        .collect()
}

pub const RECORDS_HEADER: &str = "shot,seed,gap,erasure,success,forced_converged,true_class,decoded_class";
pub const CURVE_HEADER: &str = "T,ps_rate,ler,ler_per_round,ci_low,ci_high,n_accepted";

pub fn records_to_csv(records: &[ShotRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.shot_index,
            r.shot_seed,
            r.gap,
            u8::from(r.erasure),
            u8::from(r.success),
            r.forced_converged_count,
            r.true_class.to_hex(),
            r.decoded_class.as_ref().map(LogicalClass::to_hex).unwrap_or_default()
        )
        .unwrap();
    }
    out
}

/// Reads records written by [`records_to_csv`]. Class widths come from
/// `num_observables` when given, otherwise four bits per hex digit.
pub fn records_from_csv(text: &str, num_observables: Option<usize>) -> Result<Vec<ShotRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RECORDS_HEADER => {}
        _ => return Err(Error::Io(format!("records file must start with `{RECORDS_HEADER}`"))),
    }
    let bad = |line: usize, what: &str| Error::Io(format!("records line {}: bad {what}", line + 1));
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(i, "field count"));
        }
        let flag = |s: &str, what| match s {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(bad(i, what)),
        };
        let class = |s: &str| {
            let k = num_observables.unwrap_or(4 * s.len());
            BitVec::from_hex(s, k).map(LogicalClass).ok_or_else(|| bad(i, "class"))
        };
        let erasure = flag(f[3], "erasure")?;
        out.push(ShotRecord {
            shot_index: f[0].parse().map_err(|_| bad(i, "shot"))?,
            shot_seed: f[1].parse().map_err(|_| bad(i, "seed"))?,
            gap: f[2].parse().map_err(|_| bad(i, "gap"))?,
            erasure,
            success: flag(f[4], "success")?,
            forced_converged_count: f[5].parse().map_err(|_| bad(i, "forced_converged"))?,
            true_class: class(f[6])?,
            decoded_class: if erasure { None } else { Some(class(f[7])?) },
        });
    }
    Ok(out)
}

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        format!("{t:?}")
    }
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for p in points {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{}",
            fmt_threshold(p.threshold),
            p.ps_rate,
            p.ler,
            p.ler_per_round,
            p.ci_low,
            p.ci_high,
            p.n_accepted
        )
        .unwrap();
    }
    out
}

pub fn curve_to_json(points: &[CurvePoint]) -> String {
    serde_json::to_string_pretty(points).expect("curve points serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::repetition_problem;

    fn record(i: usize, gap: GapValue, erasure: bool, success: bool) -> ShotRecord {
        ShotRecord {
            shot_index: i,
            shot_seed: i as u64,
            true_class: LogicalClass::zeros(1),
            gap,
            erasure,
            decoded_class: (!erasure).then(|| LogicalClass::zeros(1)),
            success,
            forced_converged_count: 0,
        }
    }

    fn small_experiment(workers: usize) -> ExperimentConfig {
        ExperimentConfig {
            source: ProblemSource::Preset {
                name: "rep5".into(),
                p: 0.08,
            },
            baseline: RelayConfig::baseline().with_num_sets(20),
            forced: RelayConfig::forced().with_num_sets(5),
            n_shots: 300,
            rounds: 1,
            master_seed: 42,
            worker_count: workers,
        }
    }

    #[test]
    fn sampling_all_zero_priors() {
        let prob = repetition_problem(3, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (f, s, c) = sample_shot(&prob, &mut rng);
            assert!(f.is_zero() && s.bits().is_zero() && c.bits().is_zero());
        }
    }

    #[test]
    fn sampling_mean_weight() {
        let prob = repetition_problem(3, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let shots = 100_000;
        let total: usize = (0..shots).map(|_| sample_shot(&prob, &mut rng).0.count_ones()).sum();
        let mean = total as f64 / shots as f64;
        let sd = (3.0f64 * 0.1 * 0.9 / shots as f64).sqrt();
        assert!((mean - 0.3).abs() < 3.0 * sd, "mean {mean}");
    }

    #[test]
    fn experiment_is_worker_independent() {
        let one = run_experiment(&small_experiment(1)).unwrap();
        let many = run_experiment(&small_experiment(4)).unwrap();
        assert_eq!(records_to_csv(&one), records_to_csv(&many));
        assert_eq!(one.len(), 300);
        assert!(one.iter().enumerate().all(|(i, r)| r.shot_index == i));
    }

    #[test]
    fn experiment_rejects_zero_shots() {
        let mut cfg = small_experiment(1);
        cfg.n_shots = 0;
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn sweep_conventions() {
        let recs = vec![
            record(0, GapValue::ZERO, true, false),
            record(1, GapValue::ZERO, false, false),
            record(2, GapValue::finite(1.0).unwrap(), false, false),
            record(3, GapValue::finite(3.0).unwrap(), false, true),
            record(4, GapValue::INFINITE, false, true),
        ];
        let pts = sweep_thresholds(&recs, &[0.0, 1e-12, 2.0, f64::INFINITY], 1).unwrap();
        assert_eq!(pts[0].ps_rate, 0.0);
        assert_eq!(pts[0].ler, 3.0 / 5.0);
        assert_eq!(pts[1].n_accepted, 3);
        assert_eq!(pts[2].n_accepted, 2);
        assert_eq!(pts[2].ler, 0.0);
        assert_eq!(pts[3].n_accepted, 1);
        for w in pts.windows(2) {
            assert!(w[0].ps_rate <= w[1].ps_rate);
        }
        for p in &pts {
            assert!(p.ci_low <= p.ler && p.ler <= p.ci_high);
        }
        assert!(sweep_thresholds(&[], &[0.0], 1).is_err());
        assert!(sweep_thresholds(&recs, &[1.0, 0.5], 1).is_err());
        assert!(sweep_thresholds(&recs, &[-1.0], 1).is_err());
    }

    #[test]
    fn threshold_parsing() {
        assert_eq!(parse_thresholds("0,0.5, 1,2,inf").unwrap(), vec![0.0, 0.5, 1.0, 2.0, f64::INFINITY]);
        assert!(parse_thresholds("0,x").is_err());
        assert!(parse_thresholds("-1").is_err());
        assert!(parse_thresholds("").is_err());
    }

    #[test]
    fn records_csv_roundtrip() {
        let recs = run_experiment(&small_experiment(2)).unwrap();
        let text = records_to_csv(&recs);
        assert!(text.starts_with(RECORDS_HEADER));
        assert_eq!(records_from_csv(&text, Some(1)).unwrap(), recs);
        assert!(records_from_csv("nope\n", None).is_err());
    }

    #[test]
    fn curve_formats() {
        let recs = vec![record(0, GapValue::INFINITE, false, true), record(1, GapValue::ZERO, true, false)];
        let pts = sweep_thresholds(&recs, &[0.0, f64::INFINITY], 6).unwrap();
        let csv = curve_to_csv(&pts);
        assert!(csv.starts_with(CURVE_HEADER));
        assert!(csv.lines().nth(2).unwrap().starts_with("inf,"));
        let json: serde_json::Value = serde_json::from_str(&curve_to_json(&pts)).unwrap();
        assert_eq!(json[1]["T"], "inf");
        assert_eq!(json[0]["n_accepted"], 2);
    }
}
