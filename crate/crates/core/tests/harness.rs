use schelling_core::harness::{
    cells, csv_header, derive_seed, export, import_csv, import_json_lines, parse_f64_list, parse_int_list,
    run_experiment, schema, sweep, ExperimentConfig, ExperimentKind, ExportFormat, Field, RunRecord, SweepOptions,
};

fn simulate(n: Vec<usize>, w: Vec<usize>, seeds: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::Simulate);
    c.n = n;
    c.w = w;
    c.tau = vec![0.45];
    c.seeds = seeds;
    c.seed = 3;
    c
}

fn assert_same(a: &[RunRecord], b: &[RunRecord]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert!(x.same_outputs(y), "{x:?}\n!=\n{y:?}");
    }
}

#[test]
fn config_text_round_trips() {
    let mut c = simulate(vec![16, 32], vec![1, 2, 3], 5);
    c.t_stops = vec![1.5, 10.0];
    c.jobs = 4;
    c.out = Some("runs/a".into());
    let c = c.with_extra("note", "x");
    let text = c.to_text();
    let back = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(back, c);
    assert_eq!(back.hash(), c.hash());
    assert!(text.contains("w = 1..=3"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.conf");
    c.save(&path).unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap(), c);
}

#[test]
fn hash_ignores_output_location_and_jobs() {
    let a = simulate(vec![16], vec![1], 2);
    let mut b = a.clone();
    b.out = Some("elsewhere".into());
    b.jobs = 8;
    assert_eq!(a.hash(), b.hash());
    let mut c = a.clone();
    c.seed += 1;
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn config_parse_errors() {
    assert!(ExperimentConfig::parse("n = 4").is_err());
    assert!(ExperimentConfig::parse("kind = simulate\nn = 4\nn = 5").is_err());
    assert!(ExperimentConfig::parse("kind = nonsense").is_err());
    assert!(ExperimentConfig::parse("kind = simulate\nseeds = many").is_err());
    let ok = ExperimentConfig::parse("# comment\nkind = scaling # trailing\nn = 8..=16:4\n").unwrap();
    assert_eq!(ok.n, vec![8, 12, 16]);
    assert_eq!(parse_int_list("1,3..=5").unwrap(), vec![1, 3, 4, 5]);
    assert_eq!(parse_f64_list("0.4, 0.45").unwrap(), vec![0.4, 0.45]);
    for k in ExperimentKind::ALL {
        assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
    }
}

#[test]
fn seeds_derive_from_hash_cell_and_replicate() {
    let h = "abc";
    assert_eq!(derive_seed(h, 0, 0), derive_seed(h, 0, 0));
    assert_ne!(derive_seed(h, 0, 0), derive_seed(h, 0, 1));
    assert_ne!(derive_seed(h, 0, 1), derive_seed(h, 1, 0));
    // Known vector: sha256("abc:0:0") begins with these bytes.
    use sha2::{Digest, Sha256};
    let d = Sha256::digest(b"abc:0:0");
    assert_eq!(derive_seed(h, 0, 0), u64::from_be_bytes(d[..8].try_into().unwrap()));
}

#[test]
fn single_simulation_absorbs() {
    let c = simulate(vec![32], vec![2], 1);
    let recs = run_experiment(&c).unwrap();
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!(r.kind, "simulate");
    assert_eq!(r.get("absorbed"), Some(&Field::Bool(true)));
    assert_eq!(r.get("truncated"), Some(&Field::Bool(false)));
    assert_eq!(r.config_hash, c.hash());
    assert_eq!(r.seed, derive_seed(&c.hash(), 0, 0));
    assert!(r.f64("mean_radius").unwrap() >= 0.0);
}

#[test]
fn one_cell_sweep_matches_direct_run() {
    let c = simulate(vec![24], vec![1], 3);
    let direct = run_experiment(&c).unwrap();
    let swept = sweep(std::slice::from_ref(&c), &SweepOptions { jobs: 2, sink: None }).unwrap();
    assert_same(&direct, &swept.records);
    assert_eq!(swept.computed, 3);
    assert_same(&direct, &run_experiment(&c).unwrap());
}

#[test]
fn sweep_resumes_from_its_sink() {
    let dir = tempfile::tempdir().unwrap();
    let sink = dir.path().join("records.jsonl");
    let c = simulate(vec![16, 24], vec![1], 2);
    let opts = SweepOptions { jobs: 1, sink: Some(sink.clone()) };
    let first = sweep(std::slice::from_ref(&c), &opts).unwrap();
    assert_eq!((first.computed, first.skipped), (4, 0));
    let second = sweep(std::slice::from_ref(&c), &opts).unwrap();
    assert_eq!((second.computed, second.skipped), (0, 4));
    assert_same(&first.records, &second.records);
    assert_eq!(import_json_lines(&sink).unwrap().len(), 4);

    // A grown grid runs only the new units.
    let mut bigger = c.clone();
    bigger.seeds = 3;
    let third = sweep(std::slice::from_ref(&bigger), &opts).unwrap();
    assert_eq!(third.computed, 6, "a new seed count changes the hash");
}

#[test]
fn invalid_cells_become_error_records() {
    let c = simulate(vec![8, 32], vec![1, 4], 1);
    assert_eq!(cells(&c).unwrap().len(), 4);
    let recs = run_experiment(&c).unwrap();
    assert_eq!(recs.len(), 4);
    let errors: Vec<_> = recs.iter().filter(|r| r.is_error()).collect();
    assert_eq!(errors.len(), 1);
    let msg = errors[0].error.as_deref().unwrap();
    assert!(msg.contains("n=8") && msg.contains("w=4"), "{msg}");
    assert!(recs.iter().filter(|r| !r.is_error()).all(|r| r.get("absorbed").is_some()));
}

#[test]
fn grid_caps_are_enforced() {
    let c = simulate(vec![16], vec![1], 50).with_extra("max_runs", 10);
    assert!(run_experiment(&c).is_err());
    let mut empty = ExperimentConfig::new(ExperimentKind::Simulate);
    empty.n = vec![16];
    assert!(run_experiment(&empty).is_err());
}

#[test]
fn export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    assert!(export(&[], ExportFormat::Csv, dir.path()).is_err());

    let c = simulate(vec![8, 16], vec![1, 4], 2);
    let recs = run_experiment(&c).unwrap();
    let paths = export(&recs, ExportFormat::JsonLines, dir.path()).unwrap();
    assert_eq!(paths.len(), 2);
    let mut back = import_json_lines(&dir.path().join("simulate.jsonl")).unwrap();
    back.extend(import_json_lines(&dir.path().join("errors.jsonl")).unwrap());
    let mut orig = recs.clone();
    orig.sort_by_key(|r| r.is_error());
    assert_eq!(back, orig);

    export(&recs, ExportFormat::Csv, dir.path()).unwrap();
    let csv = import_csv(&dir.path().join("simulate.csv"), "simulate").unwrap();
    let ok: Vec<_> = recs.iter().filter(|r| !r.is_error()).collect();
    assert_eq!(csv.len(), ok.len());
    for (a, b) in csv.iter().zip(ok) {
        assert_eq!(a.fields, b.fields);
        assert_eq!((a.seed, &a.config_hash), (b.seed, &b.config_hash));
    }
    assert!(std::fs::read_to_string(dir.path().join("errors.csv")).unwrap().starts_with("config_hash,seed,kind"));
    assert!(import_csv(&dir.path().join("simulate.csv"), "scaling").is_err());
}

#[test]
fn scaling_export_layout_is_stable() {
    assert_eq!(
        csv_header("scaling").unwrap(),
        "config_hash,seed,n,w,tau,T,flips,mean_radius,max_radius"
    );
    let mut c = ExperimentConfig::new(ExperimentKind::Scaling);
    c.n = vec![24];
    c.w = vec![1, 2];
    c.tau = vec![0.45];
    c.seeds = 2;
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&c).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    export(&a, ExportFormat::Csv, da.path()).unwrap();
    export(&b, ExportFormat::Csv, db.path()).unwrap();
    let ta = std::fs::read_to_string(da.path().join("scaling.csv")).unwrap();
    let tb = std::fs::read_to_string(db.path().join("scaling.csv")).unwrap();
    assert_eq!(ta, tb);
    assert_eq!(ta.lines().count(), 5);
}

#[test]
fn every_kind_produces_schema_records() {
    let mut configs = Vec::new();
    let mut c = simulate(vec![16], vec![1], 1);
    c.t_stops = vec![0.5];
    configs.push(c);

    let mut c = ExperimentConfig::new(ExperimentKind::ViralGrowth);
    c.n = vec![41];
    c.w = vec![2];
    c.tau = vec![0.4];
    c.seeds = 1;
    configs.push(c.with_extra("mu1_hat", 1.0));

    let mut c = ExperimentConfig::new(ExperimentKind::FppShape);
    c.t_stops = vec![4.0, 8.0];
    c.reps = 3;
    configs.push(c.with_extra("dist", "exponential(1),deterministic(1)"));

    let mut c = ExperimentConfig::new(ExperimentKind::BoundsSweep);
    c.n = vec![10, 20];
    configs.push(c.with_extra("grid_step", 0.05));

    let mut c = ExperimentConfig::new(ExperimentKind::ViralReplay);
    c.w = vec![8];
    c.seeds = 2;
    configs.push(c.with_extra("eps", 0.3));

    let mut c = ExperimentConfig::new(ExperimentKind::PersistenceGeometry);
    c.w = vec![2, 3];
    configs.push(c.with_extra("eps", 0.1).with_extra("big_r", "10,30"));

    let out = sweep(&configs, &SweepOptions::default()).unwrap();
    let errors: Vec<_> = out.records.iter().filter(|r| r.is_error()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    for r in &out.records {
        let cols = schema(&r.kind).unwrap();
        let names: Vec<_> = r.fields.iter().map(|(k, _)| k.as_str()).collect();
        let expect: Vec<_> = cols.iter().map(|(k, _)| *k).collect();
        assert_eq!(names, expect, "{}", r.kind);
    }
    let kinds: std::collections::BTreeSet<_> = out.records.iter().map(|r| r.kind.as_str()).collect();
    for k in ["simulate", "viral-growth", "fpp-shape", "fpp-summary", "bounds-sweep", "viral-replay", "persistence-geometry"] {
        assert!(kinds.contains(k), "missing {k}");
    }
    let dir = tempfile::tempdir().unwrap();
    export(&out.records, ExportFormat::Csv, dir.path()).unwrap();
    export(&out.records, ExportFormat::JsonLines, dir.path()).unwrap();
}

#[test]
fn snapshots_are_written_when_out_is_set() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = simulate(vec![16], vec![1], 1);
    c.t_stops = vec![0.25];
    c.out = Some(dir.path().to_path_buf());
    let recs = run_experiment(&c).unwrap();
    assert!(!recs[0].artifacts.is_empty());
    for p in &recs[0].artifacts {
        let bytes = std::fs::read(p).unwrap();
        assert!(bytes.starts_with(b"P5") || bytes.starts_with(b"P2"), "{}", p.display());
    }
}
