use spellmap_cli::config::SyntheticConfig;
use spellmap_cli::pipeline::{MANIFEST_FILE, TIMINGS_FILE};
use spellmap_cli::{run, PipelineConfig, RunError, RunManifest, Stage};
use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn small(dir: &Path, n: usize) -> PipelineConfig {
    let mut c = PipelineConfig {
        synthetic: Some(SyntheticConfig { n_records: n }),
        ..PipelineConfig::default()
    };
    c.som.epochs = 15;
    c.output.dir = dir.to_path_buf();
    c
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != TIMINGS_FILE)
        .map(|e| (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap()))
        .collect()
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spellmap"));
    cmd.env_remove("SPELLMAP_OUT_DIR").env_remove("SPELLMAP_SEED");
    cmd
}

#[test]
fn all_twice_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(Stage::All, &small(a.path(), 1500)).unwrap();
    run(Stage::All, &small(b.path(), 1500)).unwrap();
    let (x, y) = (artifacts(a.path()), artifacts(b.path()));
    assert!(x.len() > 30);
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (name, bytes) in &x {
        assert!(bytes == &y[name], "{name} differs");
    }
    // the manifest covers every artifact with its hash
    let m = RunManifest::read(&a.path().join(MANIFEST_FILE)).unwrap();
    let listed: usize = m.stages.values().map(|s| s.files.len()).sum();
    assert_eq!(listed, x.len() - 1);
    assert!(m.stages["train"].seed.is_some());
}

#[test]
fn partition_plane_and_figure_counts() {
    let dir = tempfile::tempdir().unwrap();
    run(Stage::All, &small(dir.path(), 2000)).unwrap();
    let partition = std::fs::read_to_string(dir.path().join("partition.csv")).unwrap();
    assert_eq!(partition.lines().count(), 101);
    let classes: std::collections::BTreeSet<&str> = partition.lines().skip(1).map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(classes.len(), 5);
    for plane in ["1_2", "1_3"] {
        let svg = std::fs::read_to_string(dir.path().join(format!("fig_mca_{plane}.svg"))).unwrap();
        assert_eq!(svg.matches("class=\"modality\"").count(), 32);
        let csv = std::fs::read_to_string(dir.path().join(format!("mca_plane_{plane}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 33);
    }
    let counts = std::fs::read_to_string(dir.path().join("class_counts.csv")).unwrap();
    let total: usize = counts.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(total, 2000);
    let grid = std::fs::read_to_string(dir.path().join("fig_classes.svg")).unwrap();
    assert_eq!(grid.matches("class=\"unit\"").count(), 100);
    for v in ["agec", "ctindmoy", "dipl3", "durc", "har", "pparc", "rmotifa", "rmotifi"] {
        assert!(dir.path().join(format!("fig_qual_{v}.svg")).is_file());
    }
}

#[test]
fn rerunning_a_stage_and_deleting_downstream_leave_upstream_alone() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path(), 800);
    run(Stage::All, &config).unwrap();
    let before = artifacts(dir.path());
    run(Stage::Cluster, &config).unwrap();
    for name in ["class_profile.csv", "fig_classes.svg", "mca_coordinates.csv"] {
        std::fs::remove_file(dir.path().join(name)).unwrap();
    }
    run(Stage::Transitions, &config).unwrap();
    let after = artifacts(dir.path());
    for (name, bytes) in &after {
        if name != MANIFEST_FILE {
            assert!(bytes == &before[name], "{name} changed");
        }
    }
    assert_eq!(after[MANIFEST_FILE], before[MANIFEST_FILE]);
}

#[test]
fn downstream_stage_without_upstream_reports_the_missing_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = small(dir.path(), 500);
    assert!(matches!(run(Stage::Code, &config), Err(RunError::MissingStage("synth"))));
    run(Stage::Synth, &config).unwrap();
    assert!(matches!(run(Stage::Train, &config), Err(RunError::MissingStage("code"))));
    run(Stage::Code, &config).unwrap();
    assert!(matches!(run(Stage::Cluster, &config), Err(RunError::MissingStage("train"))));
    run(Stage::Train, &config).unwrap();
    assert!(matches!(run(Stage::Profile, &config), Err(RunError::MissingStage("cluster"))));
    run(Stage::Cluster, &config).unwrap();
    assert!(matches!(run(Stage::Plot, &config), Err(RunError::MissingStage("profile"))));
    run(Stage::Profile, &config).unwrap();
    assert!(matches!(run(Stage::Plot, &config), Err(RunError::MissingStage("mca"))));
    run(Stage::Mca, &config).unwrap();
    run(Stage::Plot, &config).unwrap();
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spellmap.toml");
    std::fs::write(&cfg, "[synthetic]\nn_records = 300\n[output]\ndir = \"out\"\n").unwrap();

    let out = bin().args(["train", "-c"]).arg(&cfg).current_dir(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing stage: code"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[synthetic]\n[cluster]\nk = 101\n").unwrap();
    let out = bin().args(["all", "-c"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cluster.k"));

    let out = bin().args(["synth", "-c"]).arg(dir.path().join("absent.toml")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = bin().args(["synth", "-c"]).arg(&cfg).current_dir(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("out/records.csv").is_file());
}

#[test]
fn environment_overrides_seed_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spellmap.toml");
    std::fs::write(&cfg, "seed = 1\n[synthetic]\nn_records = 200\n").unwrap();
    for (seed, sub) in [("1", "a"), ("2", "b")] {
        let status = bin()
            .args(["synth", "-c"])
            .arg(&cfg)
            .env("SPELLMAP_SEED", seed)
            .env("SPELLMAP_OUT_DIR", dir.path().join(sub))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(dir.path().join("a/records.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/records.csv")).unwrap();
    assert_ne!(a, b);
    let out = bin().args(["synth", "-c"]).arg(&cfg).env("SPELLMAP_SEED", "x").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ingest_with_renamed_columns_and_semicolons() {
    let dir = tempfile::tempdir().unwrap();
    let synth = small(&dir.path().join("synth"), 300);
    run(Stage::Synth, &synth).unwrap();
    let text = std::fs::read_to_string(dir.path().join("synth/records.csv")).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().replace("individual_id", "id").replace("AGE", "age_years").replace(',', ";");
    let mut body: Vec<String> = lines.map(|l| l.replace(',', ";")).collect();
    body.push("broken;row".to_string());
    std::fs::write(dir.path().join("spells.txt"), format!("{header}\n{}\n", body.join("\n"))).unwrap();
    std::fs::write(dir.path().join("schema.txt"), "# renamed fields\nindividual_id = id\nAGE = age_years\n").unwrap();
    std::fs::write(
        dir.path().join("spellmap.toml"),
        "[input]\npath = \"spells.txt\"\ndelimiter = \";\"\nschema = \"schema.txt\"\n[output]\ndir = \"ingested\"\n",
    )
    .unwrap();
    let config = PipelineConfig::load(&dir.path().join("spellmap.toml")).unwrap();
    let config = PipelineConfig {
        output: spellmap_cli::config::OutputConfig {
            dir: dir.path().join("ingested"),
            ..config.output.clone()
        },
        ..config
    };
    run(Stage::Ingest, &config).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("ingested/records.csv")).unwrap(),
        std::fs::read(dir.path().join("synth/records.csv")).unwrap()
    );
    let report = std::fs::read_to_string(dir.path().join("ingested/ingest_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);
    run(Stage::Code, &config).unwrap();
    assert!(matches!(run(Stage::Synth, &config), Err(RunError::Config(_))));
}

#[test]
fn shipped_example_config_spells_out_the_defaults() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../spellmap.toml");
    let text = std::fs::read_to_string(path).unwrap();
    let config = PipelineConfig::from_toml(&text).unwrap();
    config.validate().unwrap();
    assert_eq!(config, PipelineConfig::default());
}
