use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use jobtune::cli::{run, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use jobtune::project::{load_project, scaffold, TemplateKind};

fn jobtune(args: &[&str]) -> i32 {
    run(std::iter::once("jobtune").chain(args.iter().copied()))
}

fn synthetic_project(dir: &Path) {
    fs::create_dir_all(dir).unwrap();
    fs::write(
        dir.join("params.conf"),
        "a int min=0 max=10 step=1 default=5\nb float min=0 max=1 step=0.1 default=0.5\n",
    )
    .unwrap();
    fs::write(
        dir.join("job.conf"),
        "executor=synthetic\nsurface=bowl\nbase_s=100\nweights=40,20\noptimum=0.3,0.7\n",
    )
    .unwrap();
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

fn fill_placeholders(text: &str) -> String {
    let mut out = String::new();
    let mut rest = text;
    let mut n = 0;
    while let Some(start) = rest.find("<FILL") {
        let end = start + rest[start..].find('>').unwrap();
        n += 1;
        out.push_str(&rest[..start]);
        out.push_str(&format!("/filled/{n}"));
        rest = &rest[end + 1..];
    }
    out + rest
}

#[test]
fn unknown_strategy_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    synthetic_project(d.path());
    let dir = d.path().to_str().unwrap();
    assert_eq!(jobtune(&["tune", "--dir", dir, "--strategy", "warp", "--budget", "5"]), EXIT_USAGE);
    assert_eq!(jobtune(&["tune", "--dir", dir, "--budget", "5"]), EXIT_USAGE);
    assert_eq!(jobtune(&["frobnicate"]), EXIT_USAGE);
    assert!(!d.path().join("history").exists());
}

#[test]
fn missing_directory_is_a_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    let missing = d.path().join("nope");
    assert_eq!(jobtune(&["task", "--dir", missing.to_str().unwrap()]), EXIT_RUNTIME);
    assert_eq!(jobtune(&["resume", "--dir", missing.to_str().unwrap()]), EXIT_RUNTIME);
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(jobtune(&["--help"]), EXIT_OK);
    assert_eq!(jobtune(&["--version"]), EXIT_OK);
}

#[test]
fn tune_report_and_aggregate() {
    let d = tempfile::tempdir().unwrap();
    synthetic_project(d.path());
    let dir = d.path().to_str().unwrap();
    let hist = d.path().join("history");

    assert_eq!(jobtune(&["task", "--dir", dir]), EXIT_OK);
    let runs = fs::read_to_string(hist.join("task_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2);
    assert!(runs.lines().nth(1).unwrap().starts_with("job.conf,success,"), "{runs}");

    assert_eq!(jobtune(&["tune", "--dir", dir, "--strategy", "compass", "--budget", "12", "--seed", "3"]), EXIT_OK);
    let trials = fs::read(hist.join("trials.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&trials).lines().count(), 13);

    // a second fresh session must not clobber the first
    assert_eq!(jobtune(&["tune", "--dir", dir, "--strategy", "grid", "--budget", "3"]), EXIT_RUNTIME);
    assert_eq!(fs::read(hist.join("trials.csv")).unwrap(), trials);

    assert_eq!(jobtune(&["aggregate", "--dir", dir]), EXIT_OK);
    assert_eq!(fs::read(hist.join("trials.csv")).unwrap(), trials);

    assert_eq!(jobtune(&["report", "--dir", dir]), EXIT_OK);
    let conv = fs::read_to_string(hist.join("convergence.csv")).unwrap();
    assert_eq!(conv.lines().count(), 13);
    assert!(conv.starts_with("iteration,aggregate_s,best_so_far_s\n"));

    assert_eq!(jobtune(&["report", "--dir", dir, "--surface", "a", "b"]), EXIT_OK);
    assert!(hist.join("surface_a_b.csv").is_file());
    assert_eq!(jobtune(&["report", "--dir", dir, "--surface", "a", "a"]), EXIT_RUNTIME);
    assert_eq!(jobtune(&["report", "--dir", dir, "--surface", "a", "zz"]), EXIT_RUNTIME);
}

#[test]
fn aggregate_of_an_untuned_project_writes_a_header() {
    let d = tempfile::tempdir().unwrap();
    synthetic_project(d.path());
    assert_eq!(jobtune(&["aggregate", "--dir", d.path().to_str().unwrap()]), EXIT_OK);
    let trials = fs::read_to_string(d.path().join("history/trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 1);
    assert!(trials.starts_with("trial_id,"), "{trials}");
    assert_eq!(jobtune(&["report", "--dir", d.path().to_str().unwrap()]), EXIT_RUNTIME);
}

#[test]
fn loading_does_not_touch_the_project() {
    let d = tempfile::tempdir().unwrap();
    synthetic_project(d.path());
    let before = snapshot(d.path());
    load_project(d.path()).unwrap();
    assert_eq!(snapshot(d.path()), before);
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 2);
}

#[test]
fn filled_templates_load() {
    for (kind, name) in [(TemplateKind::Task, "task"), (TemplateKind::Project, "project"), (TemplateKind::Tuning, "tuning")] {
        let d = tempfile::tempdir().unwrap();
        let root = d.path().join(name);
        assert_eq!(
            jobtune(&["scaffold", "--kind", name, "--dir", root.to_str().unwrap()]),
            EXIT_OK
        );
        assert!(load_project(&root).is_err(), "{name}: unfilled template loaded");
        for e in fs::read_dir(&root).unwrap() {
            let p = e.unwrap().path();
            fs::write(&p, fill_placeholders(&fs::read_to_string(&p).unwrap())).unwrap();
        }
        let project = load_project(&root).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(project.env.as_ref().unwrap().master_host.starts_with("/filled/"));
        assert_eq!(project.jobs.is_empty(), kind == TemplateKind::Task);
        assert_eq!(project.space.specs().len(), if kind == TemplateKind::Tuning { 2 } else { 0 });
        assert!(scaffold(kind, &root).is_err());
    }
}
