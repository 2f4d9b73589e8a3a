//! Hand-encoded worked examples and the checks run against them.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Instant;

use pareto_stream::approx::{get_approx_preference_tuples_traced, PairFrequencyTable};
use pareto_stream::clustering::{similarity, Group, SimilarityKind};
use pareto_stream::filter_verify::FilterThenVerify;
use pareto_stream::ingest::{load_clusters, load_objects, load_profiles, load_schema};
use pareto_stream::window::{BaselineSw, FilterThenVerifySw, TraceRow};
use pareto_stream::{
    AttributeId, AttributeSchema, Baseline, ClusterId, ClusterProfile, Engine, Holder, ObjectId, ObjectRecord,
    Rational, UserId, UserProfile, ValueId,
};

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub struct Laptop {
    pub schema: AttributeSchema,
    pub objects: Vec<ObjectRecord>,
    pub window_objects: Vec<ObjectRecord>,
    pub users: Vec<UserProfile>,
    pub approx: UserProfile,
    pub clusters: Vec<Vec<UserId>>,
}

pub fn laptop() -> Laptop {
    let d = dir().join("laptop");
    let schema = load_schema(d.join("schema.txt")).unwrap();
    Laptop {
        objects: load_objects(d.join("objects.csv"), &schema).unwrap(),
        window_objects: load_objects(d.join("window_objects.csv"), &schema).unwrap(),
        users: load_profiles(d.join("prefs.csv"), &schema).unwrap(),
        approx: load_profiles(d.join("approx_cluster.csv"), &schema).unwrap().remove(0),
        clusters: load_clusters(d.join("clusters.csv")).unwrap(),
        schema,
    }
}

pub struct Brands {
    pub schema: AttributeSchema,
    pub users: Vec<UserProfile>,
    pub clusters: Vec<Vec<UserId>>,
}

pub fn brands() -> Brands {
    let d = dir().join("brand");
    let schema = load_schema(d.join("schema.txt")).unwrap();
    Brands {
        users: load_profiles(d.join("prefs.csv"), &schema).unwrap(),
        clusters: load_clusters(d.join("clusters.csv")).unwrap(),
        schema,
    }
}

pub fn three_users() -> (AttributeSchema, Vec<UserProfile>) {
    let d = dir().join("brand");
    let schema = load_schema(d.join("three_schema.txt")).unwrap();
    let users = load_profiles(d.join("three_prefs.csv"), &schema).unwrap();
    (schema, users)
}

pub fn ids(xs: &[u64]) -> BTreeSet<ObjectId> {
    xs.iter().map(|&x| ObjectId(x)).collect()
}

pub fn show(s: &BTreeSet<ObjectId>) -> String {
    let v: Vec<String> = s.iter().map(|o| format!("o{o}")).collect();
    format!("{{{}}}", v.join(","))
}

/// One named expectation with what was observed.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

fn set_check(name: &str, got: &BTreeSet<ObjectId>, want: &[u64]) -> Check {
    let want = ids(want);
    Check::new(name, *got == want, format!("got {} want {}", show(got), show(&want)))
}

fn profile_refs(users: &[UserProfile]) -> Vec<&UserProfile> {
    users.iter().collect()
}

fn cluster_of(users: &[UserProfile], id: u32) -> ClusterProfile {
    ClusterProfile::common(ClusterId(id), &profile_refs(users)).unwrap()
}

/// Laptop stream and two customers: frontiers, targets and the common CPU relation.
pub fn laptop_checks() -> Vec<Check> {
    let started = Instant::now();
    let l = laptop();
    let mut out = Vec::new();

    let mut base = Baseline::new(l.users.clone());
    for o in &l.objects[..14] {
        base.step(o.clone()).unwrap();
    }
    out.push(set_check(
        "P_c1 over o1..o14",
        &base.frontier(UserId(1)).unwrap().ids(),
        &[2],
    ));
    let t15 = base.step(l.objects[14].clone()).unwrap();
    out.push(Check::new(
        "C_o15 = {c2} (baseline)",
        t15.targets == [UserId(2)],
        format!("{:?}", t15.targets),
    ));
    out.push(set_check(
        "P_c2 after o15",
        &base.frontier(UserId(2)).unwrap().ids(),
        &[2, 3, 15],
    ));
    let t16 = base.step(l.objects[15].clone()).unwrap();
    out.push(Check::new(
        "C_o16 = {} (baseline)",
        t16.targets.is_empty(),
        format!("{:?}", t16.targets),
    ));
    out.push(set_check(
        "P_c1 over o1..o16",
        &base.frontier(UserId(1)).unwrap().ids(),
        &[2],
    ));
    out.push(set_check(
        "P_c2 over o1..o16",
        &base.frontier(UserId(2)).unwrap().ids(),
        &[2, 3, 15],
    ));

    let cluster = cluster_of(&l.users, 0);
    let cpu = l.schema.attribute_id("cpu").unwrap();
    let want: BTreeSet<(ValueId, ValueId)> = [("dual", "single"), ("triple", "single"), ("quad", "single")]
        .iter()
        .map(|(a, b)| (l.schema.value_id(cpu, a).unwrap(), l.schema.value_id(cpu, b).unwrap()))
        .collect();
    let got: BTreeSet<_> = cluster.relations[cpu.index()].tuples().collect();
    out.push(Check::new(
        "common CPU relation",
        got == want,
        format!("{} tuples", got.len()),
    ));

    let mut ftv = FilterThenVerify::new(&l.users, vec![cluster]).unwrap();
    let mut steps = Vec::new();
    for o in &l.objects {
        steps.push(ftv.step(o.clone()).unwrap());
    }
    out.push(set_check(
        "P_U over o1..o16",
        &ftv.cluster_frontier(ClusterId(0)).unwrap().ids(),
        &[2, 3, 10, 15],
    ));
    out.push(Check::new(
        "C_o15 = {c2} (ftv)",
        steps[14].targets == [UserId(2)],
        format!("{:?}", steps[14].targets),
    ));
    out.push(Check::new(
        "C_o16 = {} with no member comparisons (ftv)",
        steps[15].targets.is_empty() && steps[15].comparisons.member == 0,
        format!(
            "{:?}, {} member comparisons",
            steps[15].targets, steps[15].comparisons.member
        ),
    ));
    let elapsed = started.elapsed();
    out.push(Check::new(
        "runtime under 1 s",
        elapsed.as_secs_f64() < 1.0,
        format!("{elapsed:?}"),
    ));
    out
}

fn group_of(kind: SimilarityKind, users: &[UserProfile], members: &[UserId]) -> Group {
    let m: Vec<&UserProfile> = members
        .iter()
        .map(|id| users.iter().find(|u| u.id == *id).unwrap())
        .collect();
    Group::new(kind, &m).unwrap()
}

/// Brand similarities between the three two-customer clusters.
pub fn similarity_checks() -> Vec<Check> {
    let b = brands();
    let d = AttributeId(0);
    let sim = |kind, x: usize, y: usize| {
        let gx = group_of(kind, &b.users, &b.clusters[x]);
        let gy = group_of(kind, &b.users, &b.clusters[y]);
        similarity(kind, &gx, &gy, d).unwrap()
    };
    let r = Rational::new;
    let mut out = Vec::new();
    let exact = [
        (SimilarityKind::IntersectionSize, "sim_i", (0, 2), r(2, 1)),
        (SimilarityKind::Jaccard, "sim_j", (0, 2), r(2, 6)),
        (SimilarityKind::Jaccard, "sim_j", (1, 2), r(2, 7)),
        (SimilarityKind::WeightedIntersection, "sim_wi", (0, 2), r(3, 2)),
        (SimilarityKind::WeightedIntersection, "sim_wi", (1, 2), r(3, 2)),
        (SimilarityKind::WeightedJaccard, "sim_wj", (0, 2), r(3, 11)),
        (SimilarityKind::WeightedJaccard, "sim_wj", (1, 2), r(3, 12)),
    ];
    for (kind, label, (x, y), want) in exact {
        let got = sim(kind, x, y);
        out.push(Check::new(
            format!("{label}(U{},U{}) = {want}", x + 1, y + 1),
            got == want,
            format!("got {got}"),
        ));
    }
    for (kind, label, want) in [
        (SimilarityKind::ApproxJaccard, "approx sim_j", 0.36),
        (SimilarityKind::ApproxWeightedJaccard, "approx sim_wj", 0.19),
    ] {
        let got = sim(kind, 0, 2);
        let dec = *got.numer() as f64 / *got.denom() as f64;
        out.push(Check::new(
            format!("{label}(U1,U3) = {want} within 0.005"),
            (dec - want).abs() <= 0.005,
            format!("got {got} = {dec:.4}"),
        ));
    }
    out
}

/// Approximate tuple extraction for three users with θ1 = 7 and θ2 = 3/5.
pub fn extraction_checks() -> Vec<Check> {
    let (schema, users) = three_users();
    let d = AttributeId(0);
    let v = |name: &str| schema.value_id(d, name).unwrap();
    let table = PairFrequencyTable::from_members(&profile_refs(&users), d).unwrap();
    let (rel, trace) = get_approx_preference_tuples_traced(&table, 7, Rational::new(3, 5));
    let hasse: BTreeSet<_> = rel.hasse().edges().into_iter().collect();
    let want_hasse: BTreeSet<_> = [("Apple", "Toshiba"), ("Lenovo", "Toshiba"), ("Toshiba", "Samsung")]
        .iter()
        .map(|(a, b)| (v(a), v(b)))
        .collect();
    let closure: BTreeSet<_> = rel.tuples().collect();
    let mut want_closure = want_hasse.clone();
    want_closure.insert((v("Apple"), v("Samsung")));
    want_closure.insert((v("Lenovo"), v("Samsung")));
    let name = |p: (ValueId, ValueId)| format!("({},{})", schema.value_name(d, p.0), schema.value_name(d, p.1));
    vec![
        Check::new("Hasse view", hasse == want_hasse, format!("{} edges", hasse.len())),
        Check::new("closure", closure == want_closure, format!("{} tuples", closure.len())),
        Check::new(
            "(Samsung,Lenovo) rejected",
            trace.rejected == [(v("Samsung"), v("Lenovo"))],
            trace.rejected.iter().map(|&p| name(p)).collect::<Vec<_>>().join(" "),
        ),
        Check::new(
            "scan stops at (Apple,Lenovo)",
            trace.stopped_at == Some((v("Apple"), v("Lenovo"))),
            trace.stopped_at.map(name).unwrap_or_else(|| "ran to the end".into()),
        ),
    ]
}

fn row<'a>(rows: &'a [TraceRow], phase: &str, holder: Holder) -> &'a TraceRow {
    rows.iter().find(|r| r.phase == phase && r.holder == holder).unwrap()
}

fn set(v: &[ObjectId]) -> BTreeSet<ObjectId> {
    v.iter().copied().collect()
}

/// Three window phases of the product-window stream with W = 6:
/// `[1,6]` after the sixth arrival, `(1,6]` after o1 expires, `(1,7]` after o7 arrives.
pub fn phases_baseline(users: &[UserProfile], objects: &[ObjectRecord]) -> Vec<(String, Vec<TraceRow>)> {
    let mut e = BaselineSw::new(users.to_vec(), 6).unwrap();
    for o in &objects[..6] {
        e.step(o.clone()).unwrap();
    }
    let first = e.trace("[1,6]");
    let mut mid = Vec::new();
    e.step_observed(objects[6].clone(), |e| mid = e.trace("(1,6]")).unwrap();
    let last = e.trace("(1,7]");
    vec![("[1,6]".into(), first), ("(1,6]".into(), mid), ("(1,7]".into(), last)]
}

pub fn phases_ftv(users: &[UserProfile], objects: &[ObjectRecord]) -> Vec<(String, Vec<TraceRow>)> {
    let mut e = FilterThenVerifySw::new(users, vec![cluster_of(users, 0)], 6).unwrap();
    for o in &objects[..6] {
        e.step(o.clone()).unwrap();
    }
    let first = e.trace("[1,6]");
    let mut mid = Vec::new();
    e.step_observed(objects[6].clone(), |e| mid = e.trace("(1,6]")).unwrap();
    let last = e.trace("(1,7]");
    vec![("[1,6]".into(), first), ("(1,6]".into(), mid), ("(1,7]".into(), last)]
}

type Phase<'a> = (&'a str, &'a [u64], &'a [u64], &'a [u64], &'a [u64]);

/// Expected sliding-window states for the seven-object stream, next to what the engines produce.
pub fn window_table_checks() -> Vec<Check> {
    let l = laptop();
    let (c1, c2, u) = (
        Holder::User(UserId(1)),
        Holder::User(UserId(2)),
        Holder::Cluster(ClusterId(0)),
    );
    let mut out = Vec::new();

    // P_c1, P_c2, PB_c1, PB_c2
    let baseline: [Phase; 3] = [
        ("[1,6]", &[1, 3], &[3, 4], &[1, 3, 4, 6], &[3, 4, 5, 6]),
        ("(1,6]", &[3], &[3, 4], &[3, 4, 6], &[3, 4, 5, 6]),
        ("(1,7]", &[7], &[4, 7], &[4, 7], &[4, 7]),
    ];
    let got = phases_baseline(&l.users, &l.window_objects);
    for ((phase, rows), (_, p1, p2, b1, b2)) in got.iter().zip(baseline) {
        let (r1, r2) = (row(rows, phase, c1), row(rows, phase, c2));
        let g = [
            set(&r1.frontier),
            set(&r2.frontier),
            set(r1.buffer.as_ref().unwrap()),
            set(r2.buffer.as_ref().unwrap()),
        ];
        let w = [ids(p1), ids(p2), ids(b1), ids(b2)];
        let pass = g == w;
        let detail = format!(
            "got P_c1={} P_c2={} PB_c1={} PB_c2={}; table has {} {} {} {}",
            show(&g[0]),
            show(&g[1]),
            show(&g[2]),
            show(&g[3]),
            show(&w[0]),
            show(&w[1]),
            show(&w[2]),
            show(&w[3])
        );
        out.push(Check::new(
            format!("per-user windowed table, window {phase}"),
            pass,
            detail,
        ));
    }

    // P_U, P_c1, P_c2, PB_U
    let ftv: [Phase; 3] = [
        ("[1,6]", &[1, 3, 4], &[1, 3], &[3, 4], &[1, 3, 4, 5, 6]),
        ("(1,6]", &[3, 4], &[3], &[3, 4], &[3, 4, 5, 6]),
        ("(1,7]", &[4, 7], &[7], &[4, 7], &[4, 7]),
    ];
    let got = phases_ftv(&l.users, &l.window_objects);
    for ((phase, rows), (_, pu, p1, p2, bu)) in got.iter().zip(ftv) {
        let ru = row(rows, phase, u);
        let g = [
            set(&ru.frontier),
            set(&row(rows, phase, c1).frontier),
            set(&row(rows, phase, c2).frontier),
            set(ru.buffer.as_ref().unwrap()),
        ];
        let w = [ids(pu), ids(p1), ids(p2), ids(bu)];
        let detail = format!(
            "got P_U={} P_c1={} P_c2={} PB_U={}; table has {} {} {} {}",
            show(&g[0]),
            show(&g[1]),
            show(&g[2]),
            show(&g[3]),
            show(&w[0]),
            show(&w[1]),
            show(&w[2]),
            show(&w[3])
        );
        out.push(Check::new(
            format!("clustered windowed table, window {phase}"),
            g == w,
            detail,
        ));
    }
    out
}

/// Laptop stream with W = 5, state after the tenth arrival.
pub fn window_example_checks() -> Vec<Check> {
    let l = laptop();
    let mut e = BaselineSw::new(l.users.clone(), 5).unwrap();
    for o in &l.objects[..10] {
        e.step(o.clone()).unwrap();
    }
    vec![
        set_check("P_c1 at step 10, W=5", &e.frontier(UserId(1)).unwrap().ids(), &[8]),
        set_check("P_c2 at step 10, W=5", &e.frontier(UserId(2)).unwrap().ids(), &[7, 8]),
        set_check(
            "PB_c1 at step 10, W=5",
            &e.buffer(UserId(1)).unwrap().ids(),
            &[8, 9, 10],
        ),
    ]
}
