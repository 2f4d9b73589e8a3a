//! Run a stream through any engine and report comparisons, timings, targets
//! and, for approximate runs, accuracy against the exact frontiers.
//!
//! Report files, all CSV with a header row:
//!
//! * `steps.csv`: `step,object_id,targets,target_count,cluster_comparisons,member_comparisons,comparisons,cumulative_comparisons,wall_us,cumulative_wall_us`.
//!   `targets` lists user ids separated by spaces.
//! * `frontiers.csv`: `user_id,object_id`, one row per frontier member at the end of the run.
//!   Users with empty frontiers appear with an empty `object_id`.
//! * `summary.csv`: `key,value`.
//! * `accuracy.csv`: `user_id,exact,approx,intersection,precision,recall,f_measure,accuracy`,
//!   then an `all` row with totals and aggregate metrics. Metrics use 4 decimals.
//! * `trace.csv`: see [`trace_csv`](crate::window::trace_csv).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_traits::Signed;

use crate::approx::{accuracy_metrics, AccuracyReport, ApproxParams};
use crate::clustering::{agglomerate_groups, build_profiles, AgglomerateOptions, Dendrogram, SimilarityKind};
use crate::engine::{Comparisons, Engine, StepOutcome};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::filter_verify::FilterThenVerify;
use crate::frontier::{frontier_oracle, Baseline};
use crate::ids::{ObjectId, Rational, UserId};
use crate::profile::{ObjectRecord, ProfileKind, UserProfile};
use crate::window::{windowed_frontier_oracle, BaselineSw, FilterThenVerifySw, TraceRow, Window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Baseline,
    Ftv,
    FtvApprox,
    BaselineSw,
    FtvSw,
    FtvApproxSw,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Baseline,
        Algorithm::Ftv,
        Algorithm::FtvApprox,
        Algorithm::BaselineSw,
        Algorithm::FtvSw,
        Algorithm::FtvApproxSw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Baseline => "baseline",
            Algorithm::Ftv => "ftv",
            Algorithm::FtvApprox => "ftv-approx",
            Algorithm::BaselineSw => "baseline-sw",
            Algorithm::FtvSw => "ftv-sw",
            Algorithm::FtvApproxSw => "ftv-approx-sw",
        }
    }

    pub fn is_windowed(self) -> bool {
        matches!(self, Algorithm::BaselineSw | Algorithm::FtvSw | Algorithm::FtvApproxSw)
    }

    pub fn is_approximate(self) -> bool {
        matches!(self, Algorithm::FtvApprox | Algorithm::FtvApproxSw)
    }

    pub fn is_clustered(self) -> bool {
        !matches!(self, Algorithm::Baseline | Algorithm::BaselineSw)
    }

    pub fn profile_kind(self) -> ProfileKind {
        if self.is_approximate() {
            ProfileKind::Approximate
        } else {
            ProfileKind::ExactCommon
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

/// Accepts `3/5`, `0.6` or `2`, exactly.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Config(format!("not a number: `{s}`"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().map_err(|_| bad())?;
        let d: i128 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if (int.is_empty() && frac.is_empty()) || frac.len() > 30 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i128 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let scale = 10i128.pow(frac.len() as u32);
    let frac: i128 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let r = Rational::new(int * scale + frac, scale);
    Ok(if neg { -r } else { r })
}

/// Round half away from zero to `places` decimals.
pub fn decimal(r: Rational, places: u32) -> String {
    let scale = 10i128.pow(places);
    let scaled = (r.abs() * Rational::from_integer(scale)).round().to_integer();
    let sign = if r.is_negative() && scaled != 0 { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{scaled}");
    }
    format!(
        "{sign}{}.{:0width$}",
        scaled / scale,
        scaled % scale,
        width = places as usize
    )
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub similarity: SimilarityKind,
    /// Branch cut for agglomeration; unused when clusters are given.
    pub h: Option<Rational>,
    /// Required exactly for approximate algorithms.
    pub approx: Option<ApproxParams>,
    /// Required exactly for windowed algorithms.
    pub window: Option<usize>,
    pub normalize: bool,
    pub exec: Execution,
    /// Check every step of an exact run against a baseline run in lockstep.
    pub assert_oracle: bool,
    /// Record frontier and buffer rows before and after each arrival (windowed only).
    pub trace: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            similarity: SimilarityKind::WeightedJaccard,
            h: None,
            approx: algorithm.is_approximate().then(ApproxParams::default),
            window: None,
            normalize: false,
            exec: Execution::default(),
            assert_oracle: false,
            trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.algorithm;
        match (a.is_windowed(), self.window) {
            (true, None) => return Err(Error::Config(format!("{a} needs a window size"))),
            (false, Some(_)) => return Err(Error::Config(format!("{a} takes no window size"))),
            (true, Some(0)) => return Err(Error::Config("window size must be positive".into())),
            _ => {}
        }
        match (a.is_approximate(), &self.approx) {
            (true, None) => return Err(Error::Config(format!("{a} needs approximation thresholds"))),
            (false, Some(_)) => return Err(Error::Config(format!("{a} takes no approximation thresholds"))),
            (true, Some(p)) if p.theta2.is_negative() || p.theta2 > Rational::from_integer(1) => {
                return Err(Error::Config("theta2 must lie in [0, 1]".into()))
            }
            _ => {}
        }
        if self.trace && !a.is_windowed() {
            return Err(Error::Config(
                "step traces are only recorded for windowed algorithms".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    /// 1-based position in the stream.
    pub step: usize,
    pub object: ObjectId,
    pub targets: Vec<UserId>,
    pub comparisons: Comparisons,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub steps: Vec<StepRecord>,
    pub totals: Comparisons,
    pub wall: Duration,
    pub frontiers: BTreeMap<UserId, BTreeSet<ObjectId>>,
    /// The partition used by clustered algorithms.
    pub clusters: Option<Vec<Vec<UserId>>>,
    pub dendrogram: Option<Dendrogram>,
    /// Objects streamed.
    pub universe: usize,
    /// Approximate runs only: final frontiers against the exact ones.
    pub accuracy: Option<AccuracyReport>,
    pub trace: Vec<TraceRow>,
    /// Summary keys describing the configuration.
    pub settings: Vec<(String, String)>,
}

enum Runner {
    Baseline(Baseline),
    Ftv(FilterThenVerify),
    BaselineSw(BaselineSw),
    FtvSw(FilterThenVerifySw),
}

impl Runner {
    fn engine(&mut self) -> &mut dyn Engine {
        match self {
            Runner::Baseline(e) => e,
            Runner::Ftv(e) => e,
            Runner::BaselineSw(e) => e,
            Runner::FtvSw(e) => e,
        }
    }

    fn step(&mut self, o: ObjectRecord, trace: Option<&mut Vec<TraceRow>>) -> Result<StepOutcome> {
        let Some(rows) = trace else {
            return self.engine().step(o);
        };
        let out = match self {
            Runner::BaselineSw(e) => {
                let r = e.step_observed(o, |e| rows.extend(e.trace("expire")))?;
                rows.extend(e.trace("arrive"));
                r
            }
            Runner::FtvSw(e) => {
                let r = e.step_observed(o, |e| rows.extend(e.trace("expire")))?;
                rows.extend(e.trace("arrive"));
                r
            }
            _ => unreachable!("validated"),
        };
        Ok(out)
    }
}

fn reference(users: &[UserProfile], window: Option<usize>, exec: Execution) -> Result<Box<dyn Engine>> {
    Ok(match window {
        None => Box::new(Baseline::new(users.to_vec()).with_execution(exec)),
        Some(w) => Box::new(BaselineSw::new(users.to_vec(), w)?.with_execution(exec)),
    })
}

/// Stream `objects` in order through the configured algorithm. Clustered
/// algorithms use `clusters` if given, else agglomerate at `config.h`.
pub fn run(
    config: &RunConfig,
    users: &[UserProfile],
    objects: &[ObjectRecord],
    clusters: Option<Vec<Vec<UserId>>>,
) -> Result<RunReport> {
    config.validate()?;
    let a = config.algorithm;
    let approx = config.approx.clone().unwrap_or_default();
    let mut settings = vec![
        ("algorithm".to_string(), a.name().to_string()),
        ("users".to_string(), users.len().to_string()),
    ];
    let mut dendrogram = None;
    let partition = if !a.is_clustered() {
        None
    } else if let Some(p) = clusters {
        Some(p)
    } else {
        let h = config
            .h
            .ok_or_else(|| Error::Config(format!("{a} needs clusters or a branch cut h")))?;
        let options = AgglomerateOptions {
            approx: approx.clone(),
            normalize: config.normalize,
            exec: config.exec,
        };
        let (p, d) = agglomerate_groups(users, config.similarity, h, &options)?;
        settings.push(("similarity".into(), config.similarity.name().into()));
        settings.push(("h".into(), h.to_string()));
        dendrogram = Some(d);
        Some(p)
    };
    if let Some(p) = &partition {
        settings.push(("clusters".into(), p.len().to_string()));
    }
    if let Some(p) = &config.approx {
        settings.push(("theta1".into(), p.theta1.map_or("auto".into(), |t| t.to_string())));
        settings.push(("theta2".into(), p.theta2.to_string()));
    }
    if let Some(w) = config.window {
        settings.push(("window".into(), w.to_string()));
    }
    let profiles = match &partition {
        Some(p) => build_profiles(users, p, a.profile_kind(), &approx, config.exec)?,
        None => Vec::new(),
    };
    let mut runner = match (a.is_clustered(), config.window) {
        (false, None) => Runner::Baseline(Baseline::new(users.to_vec()).with_execution(config.exec)),
        (false, Some(w)) => Runner::BaselineSw(BaselineSw::new(users.to_vec(), w)?.with_execution(config.exec)),
        (true, None) => Runner::Ftv(FilterThenVerify::new(users, profiles)?.with_execution(config.exec)),
        (true, Some(w)) => Runner::FtvSw(FilterThenVerifySw::new(users, profiles, w)?.with_execution(config.exec)),
    };
    let lockstep = config.assert_oracle && !a.is_approximate();
    let mut exact = if lockstep || a.is_approximate() {
        Some(reference(users, config.window, config.exec)?)
    } else {
        None
    };

    let mut steps = Vec::with_capacity(objects.len());
    let mut trace = Vec::new();
    let started = Instant::now();
    for (i, o) in objects.iter().enumerate() {
        let t = Instant::now();
        let out = runner.step(o.clone(), config.trace.then_some(&mut trace))?;
        let wall = t.elapsed();
        if let Some(r) = exact.as_mut() {
            let expected = r.step(o.clone())?;
            if lockstep && expected.targets != out.targets {
                return Err(Error::Invariant(format!(
                    "step {}: {a} reports targets {:?} for object {}, baseline reports {:?}",
                    i + 1,
                    out.targets,
                    o.id,
                    expected.targets
                )));
            }
        }
        steps.push(StepRecord {
            step: i + 1,
            object: o.id,
            targets: out.targets,
            comparisons: out.comparisons,
            wall,
        });
    }
    let wall = started.elapsed();
    let engine = runner.engine();
    let frontiers = engine.user_frontiers();
    let mut accuracy = None;
    if let Some(r) = &exact {
        let reference = r.user_frontiers();
        if lockstep && reference != frontiers {
            return Err(Error::Invariant(format!(
                "{a} final frontiers differ from the baseline"
            )));
        }
        if a.is_approximate() {
            accuracy = Some(accuracy_metrics(&reference, &frontiers, objects.len())?);
        }
    }
    Ok(RunReport {
        algorithm: a,
        steps,
        totals: engine.comparisons(),
        wall,
        frontiers,
        clusters: partition,
        dendrogram,
        universe: objects.len(),
        accuracy,
        trace,
        settings,
    })
}

impl RunReport {
    pub fn steps_csv(&self) -> String {
        let mut s = String::from(
            "step,object_id,targets,target_count,cluster_comparisons,member_comparisons,comparisons,cumulative_comparisons,wall_us,cumulative_wall_us\n",
        );
        let (mut cum, mut cum_wall) = (0u64, 0u128);
        for r in &self.steps {
            cum += r.comparisons.total();
            cum_wall += r.wall.as_micros();
            let targets: Vec<String> = r.targets.iter().map(|u| u.to_string()).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                r.step,
                r.object,
                targets.join(" "),
                r.targets.len(),
                r.comparisons.cluster,
                r.comparisons.member,
                r.comparisons.total(),
                cum,
                r.wall.as_micros(),
                cum_wall
            );
        }
        s
    }

    pub fn frontiers_csv(&self) -> String {
        frontiers_csv(&self.frontiers)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k},{v}");
        }
        let _ = writeln!(s, "universe,{}", self.universe);
        let _ = writeln!(s, "cluster_comparisons,{}", self.totals.cluster);
        let _ = writeln!(s, "member_comparisons,{}", self.totals.member);
        let _ = writeln!(s, "comparisons,{}", self.totals.total());
        let _ = writeln!(s, "wall_ms,{:.3}", self.wall.as_secs_f64() * 1e3);
        if let Some(acc) = &self.accuracy {
            let _ = writeln!(s, "precision,{}", decimal(acc.precision, 4));
            let _ = writeln!(s, "recall,{}", decimal(acc.recall, 4));
            let _ = writeln!(s, "f_measure,{}", decimal(acc.f_measure, 4));
            let _ = writeln!(s, "accuracy,{}", decimal(acc.accuracy, 4));
        }
        s
    }
}

pub fn frontiers_csv(frontiers: &BTreeMap<UserId, BTreeSet<ObjectId>>) -> String {
    let mut s = String::from("user_id,object_id\n");
    for (u, f) in frontiers {
        if f.is_empty() {
            let _ = writeln!(s, "{u},");
        }
        for o in f {
            let _ = writeln!(s, "{u},{o}");
        }
    }
    s
}

fn csv_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .skip(1)
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| (i, l.split(',').map(str::trim).collect()))
}

fn parse_field<T: FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad field `{s}`"),
    })
}

pub fn parse_frontiers_csv(text: &str) -> Result<BTreeMap<UserId, BTreeSet<ObjectId>>> {
    let mut out: BTreeMap<UserId, BTreeSet<ObjectId>> = BTreeMap::new();
    for (line, f) in csv_rows(text) {
        if f.len() != 2 {
            return Err(Error::Parse {
                line,
                message: "expected user_id,object_id".into(),
            });
        }
        let set = out.entry(UserId(parse_field(line, f[0])?)).or_default();
        if !f[1].is_empty() {
            set.insert(ObjectId(parse_field(line, f[1])?));
        }
    }
    Ok(out)
}

/// `key,value` pairs of a summary file.
pub fn parse_summary_csv(text: &str) -> Result<BTreeMap<String, String>> {
    csv_rows(text)
        .map(|(line, f)| match f.as_slice() {
            [k, v] => Ok((k.to_string(), v.to_string())),
            _ => Err(Error::Parse {
                line,
                message: "expected key,value".into(),
            }),
        })
        .collect()
}

/// Compare two runs' final frontiers; their universes must agree.
pub fn evaluate(
    exact: &BTreeMap<UserId, BTreeSet<ObjectId>>,
    exact_universe: usize,
    approx: &BTreeMap<UserId, BTreeSet<ObjectId>>,
    approx_universe: usize,
) -> Result<AccuracyReport> {
    if exact_universe != approx_universe {
        return Err(Error::Mismatch(format!(
            "runs streamed different object counts ({exact_universe} and {approx_universe})"
        )));
    }
    accuracy_metrics(exact, approx, exact_universe)
}

pub fn accuracy_csv(report: &AccuracyReport) -> String {
    let mut s = String::from("user_id,exact,approx,intersection,precision,recall,f_measure,accuracy\n");
    let (mut e, mut a, mut i) = (0, 0, 0);
    for u in &report.users {
        e += u.exact;
        a += u.approx;
        i += u.intersection;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            u.user,
            u.exact,
            u.approx,
            u.intersection,
            decimal(u.precision, 4),
            decimal(u.recall, 4),
            decimal(u.f_measure, 4),
            decimal(u.accuracy, 4)
        );
    }
    let _ = writeln!(
        s,
        "all,{e},{a},{i},{},{},{},{}",
        decimal(report.precision, 4),
        decimal(report.recall, 4),
        decimal(report.f_measure, 4),
        decimal(report.accuracy, 4)
    );
    s
}

/// A step number and every user's frontier after it.
pub type StepFrontiers = (usize, BTreeMap<UserId, BTreeSet<ObjectId>>);

/// Brute-force frontiers. Append mode gives one entry (step = object count);
/// windowed mode gives one entry per step over the live window.
pub fn oracle_dump(
    users: &[UserProfile],
    objects: &[ObjectRecord],
    window: Option<usize>,
) -> Result<Vec<StepFrontiers>> {
    let Some(w) = window else {
        let all = users.iter().map(|u| (u.id, frontier_oracle(objects, u))).collect();
        return Ok(vec![(objects.len(), all)]);
    };
    let mut win = Window::new(w)?;
    let mut out = Vec::with_capacity(objects.len());
    for (i, o) in objects.iter().enumerate() {
        win.push(o.clone());
        let alive: Vec<ObjectRecord> = win.alive().cloned().collect();
        let step = users
            .iter()
            .map(|u| (u.id, windowed_frontier_oracle(&alive, u)))
            .collect();
        out.push((i + 1, step));
    }
    Ok(out)
}

/// CSV `step,user_id,object_id` for [`oracle_dump`] output.
pub fn oracle_csv(dump: &[StepFrontiers]) -> String {
    let mut s = String::from("step,user_id,object_id\n");
    for (step, frontiers) in dump {
        for (u, f) in frontiers {
            if f.is_empty() {
                let _ = writeln!(s, "{step},{u},");
            }
            for o in f {
                let _ = writeln!(s, "{step},{u},{o}");
            }
        }
    }
    s
}
