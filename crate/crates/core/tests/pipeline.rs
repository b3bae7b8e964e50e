use stepwise::interp::ExecutionLimits;
use stepwise::pipeline::contamination::{contamination_scan, cosine, parse_vectors};
use stepwise::pipeline::filter::{filter_difficulty, filter_execution, DropReason, ExecVerdict};
use stepwise::pipeline::mutate::{mutate_inputs, ValuePool};
use stepwise::pipeline::oracle::{oracle_from_name, AlwaysCorrect, AlwaysWrong};
use stepwise::pipeline::stats::{corpus_stats, StatsRecord};
use stepwise::pipeline::{DatasetInstance, Provenance};

const RSTRIP: &str = include_str!("fixtures/rstrip.py");

fn inst(id: &str, code: &str, call: &str) -> DatasetInstance {
    DatasetInstance {
        id: id.into(),
        code: code.into(),
        call: call.into(),
        expected: String::new(),
        provenance: Provenance::Raw,
        level: Some(3),
    }
}

fn rstrip_instance() -> DatasetInstance {
    inst("rstrip", RSTRIP, "test_rstrip(\"  hello world  \")")
}

#[test]
fn mutation_reaches_pool_string_mutant() {
    let pool = ValuePool {
        integers: vec![12, 7, 11, 9, 14],
        strings: vec!["E2NC97aoEt".into()],
    };
    let a = mutate_inputs(&rstrip_instance(), &pool, 3, 1, ExecutionLimits::default()).unwrap();
    let b = mutate_inputs(&rstrip_instance(), &pool, 3, 1, ExecutionLimits::default()).unwrap();
    assert_eq!(a, b);
    let m = a.iter().find(|m| m.call == "test_rstrip('E2NC97aoEt')").expect("pool replacement");
    assert_eq!(m.expected, "''");
    assert_eq!(m.provenance, Provenance::Mutated);
    for m in &a {
        assert!(matches!(filter_execution(m, ExecutionLimits::default()), ExecVerdict::Keep { .. }));
    }
}

#[test]
fn mutation_draws_ints_from_pool_and_grows_lists() {
    let pool = ValuePool {
        integers: vec![12, 7, 11, 9, 14],
        strings: vec![],
    };
    let code = "def f(n, xs):\n    return n + len(xs)\n";
    let out = mutate_inputs(&inst("i", code, "f(3, [1])"), &pool, 5, 9, ExecutionLimits::default()).unwrap();
    assert!(!out.is_empty());
    for m in &out {
        let c = stepwise::interp::EntryCall::parse(&m.call).unwrap();
        let n = c.args[0].as_i64().unwrap();
        assert!(pool.integers.contains(&n), "{n} not from pool");
        let stepwise::interp::Value::List(xs) = &c.args[1] else { panic!() };
        assert!(xs.len() > 1);
    }
    let empty = ValuePool::default();
    assert!(mutate_inputs(&rstrip_instance(), &empty, 1, 0, ExecutionLimits::default()).is_err());
}

#[test]
fn execution_filter_reasons() {
    let keep = filter_execution(&rstrip_instance(), ExecutionLimits::default());
    let ExecVerdict::Keep { instance } = keep else { panic!("{keep:?}") };
    assert_eq!(instance.expected, "'  hello world'");
    let spin = inst("s", "def f():\n    while True:\n        pass\n", "f()");
    assert!(matches!(
        filter_execution(&spin, ExecutionLimits::default()),
        ExecVerdict::Drop { reason: DropReason::FuelExhausted, .. }
    ));
    let loud = inst("l", "def f():\n    print('x' * 1000000)\n    return 1\n", "f()");
    assert!(matches!(
        filter_execution(&loud, ExecutionLimits::default()),
        ExecVerdict::Drop { reason: DropReason::OutputOverflow, .. }
    ));
    let boom = inst("b", "def f():\n    return 1 // 0\n", "f()");
    assert!(matches!(
        filter_execution(&boom, ExecutionLimits::default()),
        ExecVerdict::Drop { reason: DropReason::RuntimeError, .. }
    ));
    let bad = inst("p", "def f(:\n", "f()");
    assert!(matches!(
        filter_execution(&bad, ExecutionLimits::default()),
        ExecVerdict::Drop { reason: DropReason::ParseError, .. }
    ));
}

#[test]
fn difficulty_stubs() {
    let l = ExecutionLimits::default();
    let v = filter_difficulty(&rstrip_instance(), &AlwaysCorrect, 10, 3, 0, l).unwrap();
    assert_eq!((v.keep, v.pass_count), (false, 10));
    let v = filter_difficulty(&rstrip_instance(), &AlwaysWrong, 10, 3, 0, l).unwrap();
    assert_eq!((v.keep, v.pass_count), (true, 0));
    let v = filter_difficulty(&rstrip_instance(), &AlwaysCorrect, 10, 10, 0, l).unwrap();
    assert!(v.keep);
    assert!(filter_difficulty(&rstrip_instance(), &AlwaysCorrect, 0, 3, 0, l).is_err());
    assert!(oracle_from_name("bernoulli:1.5").is_err());
    assert!(oracle_from_name("nope").is_err());
}

#[test]
fn external_oracle_protocol() {
    let l = ExecutionLimits::default();
    // Commands are split on whitespace, so the solver lives in a script file.
    let dir = std::env::temp_dir().join(format!("stepwise-oracle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let script = dir.join("solver.sh");
    std::fs::write(&script, "read line\ncase \"$line\" in *masked_call*) echo \"'  hello world'\";; esac\n").unwrap();
    let o = oracle_from_name(&format!("cmd:sh {}", script.display())).unwrap();
    let v = filter_difficulty(&rstrip_instance(), o.as_ref(), 3, 3, 0, l).unwrap();
    assert_eq!(v.pass_count, 3);
    let fail = dir.join("fail.sh");
    std::fs::write(&fail, "echo \"'  hello world'\"\nexit 1\n").unwrap();
    let o = oracle_from_name(&format!("cmd:sh {}", fail.display())).unwrap();
    assert_eq!(filter_difficulty(&rstrip_instance(), o.as_ref(), 3, 3, 0, l).unwrap().pass_count, 0);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn contamination_toy() {
    let train = parse_vectors("3 3\n1 0 0\n0 1 0\n1 1 0\n").unwrap();
    let bench = parse_vectors("3 3\n1 0 0\n0 0 1\n0 1 1\n").unwrap();
    let r = contamination_scan(&train, &bench, 0.95).unwrap();
    let sims: Vec<f64> = r.rows.iter().map(|x| x.max_sim.unwrap()).collect();
    assert_eq!(sims[0], 1.0);
    assert_eq!(sims[1], 1.0 / 2f64.sqrt());
    assert_eq!(sims[2], 1.0 / 2f64.sqrt());
    assert_eq!(r.flagged, vec![0]);
    assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]), Some(0.0));
    let z = contamination_scan(&[vec![0.0, 0.0]], &[vec![1.0, 0.0]], 0.95).unwrap();
    assert!(z.rows[0].error.is_some() && z.flagged.is_empty());
    assert!(contamination_scan(&[vec![1.0]], &[vec![1.0, 0.0]], 0.95).is_err());
    assert!(parse_vectors("2 2\n1 0\n").is_err());
}

#[test]
fn stats_aggregates() {
    let mut a = StatsRecord { instance: rstrip_instance(), pass_count: Some(0) };
    a.instance.level = Some(3);
    let mut b = StatsRecord { instance: rstrip_instance(), pass_count: Some(10) };
    b.instance.level = Some(1);
    let s = corpus_stats(&[a.clone(), b]).unwrap();
    assert_eq!(s.difficulty_histogram[0], 1);
    assert_eq!(s.difficulty_histogram[10], 1);
    assert_eq!(s.level_shares["1"], 0.5);
    let one = corpus_stats(&[a]).unwrap();
    assert_eq!(one.complexity.unwrap().loc.mean, 11.0);
    assert_eq!(one.type_tags["str"], 1);
    assert!(corpus_stats(&[]).is_err());
}
