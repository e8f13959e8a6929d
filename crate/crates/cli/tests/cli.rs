use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wavescope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavescope"))
        .args(args)
        .env_remove("WAVESCOPE_THREADS")
        .output()
        .expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const SMALL: &str = "\
[dataset]
preset = desk
snr_db = 25
train_baseline = 12
test_baseline = 6
test_damaged = 6

[methods]
epochs = 2
batch = 4

[run]
seed = 5
";

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = wavescope(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("Usage"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(wavescope(&["gen", "--bogus"]).status.code(), Some(2));
}

#[test]
fn help_lists_every_documented_flag() {
    let table: &[(&str, &[&str])] = &[
        ("gen", &["--config", "--seed", "--out", "--preset"]),
        ("cwt", &["--in", "--out", "--size", "--channels", "--split"]),
        ("fit-subspace", &["--kind", "--components", "--in", "--out", "--seed"]),
        ("fit-ocsvm", &["--nu", "--in", "--subspace", "--gamma", "--out"]),
        ("train-cae", &["--preset", "--in", "--epochs", "--lr", "--batch", "--seed", "--out"]),
        ("run", &["--config", "--out"]),
        ("sweep-nu", &["--subspace", "--train", "--test", "--nus", "--gamma", "--out"]),
        ("report", &["--in"]),
    ];
    for (cmd, flags) in table {
        let o = wavescope(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd} --help failed");
        let help = text(&o);
        for flag in *flags {
            assert!(help.contains(flag), "`{cmd} --help` does not mention {flag}");
        }
    }
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "[methods]\nnu = 1.5\n").unwrap();
    let o = wavescope(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
    assert!(text(&o).contains("line 2"));

    let missing = dir.path().join("nope.wimg");
    let o = wavescope(&["train-cae", "--in", missing.to_str().unwrap(), "--out", "x.wcae"]);
    assert_eq!(o.status.code(), Some(4), "{}", text(&o));

    fs::write(&cfg, "[dataset]\ntrain_baseline = 12\n[methods]\nlist = pca_ocsvm\ncomponents = 50\n").unwrap();
    let o = wavescope(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("stage"), "{}", text(&o));
}

fn read_reports(dir: &Path) -> Vec<(String, String)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_a_self_describing_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = wavescope(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));

    let run = out.join("run-000");
    for f in [
        "dataset/manifest",
        "images/train.wimg",
        "images/test.wimg",
        "models/pca.wsub",
        "models/ica.wsub",
        "models/pca_ocsvm.wsvm",
        "models/cae.wcae",
        "reports/pca_ocsvm-ocsvm.json",
        "reports/ica_ocsvm-ocsvm.json",
        "reports/cae-quantile0.99.json",
        "reports/cae-max.json",
        "csv/cae-loss.csv",
        "csv/cae-latent.csv",
        "csv/pca_ocsvm-nu_sweep.csv",
    ] {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let manifest = fs::read_to_string(out.join("run.manifest")).unwrap();
    assert!(manifest.contains("master_seed = 5"));
    assert!(manifest.contains("run.0.seed = "));

    let o = wavescope(&["report", "--in", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("ica_ocsvm"));

    // The echoed configuration reproduces the reports exactly.
    let again = dir.path().join("again");
    let echoed = out.join("config.cfg");
    let o = wavescope(&["run", "--config", echoed.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    assert_eq!(read_reports(&run.join("reports")), read_reports(&again.join("run-000/reports")));
}

#[test]
fn stage_subcommands_chain() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    fs::write(p("small.cfg"), SMALL).unwrap();
    let d = dir.path().display();
    let steps = [
        format!("gen --config {d}/small.cfg --seed 3 --out {d}/data"),
        format!("cwt --in {d}/data --out {d}/train.wimg --split train"),
        format!("cwt --in {d}/data --out {d}/test.wimg --split test"),
        format!("fit-subspace --kind pca --in {d}/train.wimg --out {d}/pca.wsub"),
        format!("fit-subspace --kind ica --in {d}/train.wimg --out {d}/ica.wsub"),
        format!("fit-ocsvm --nu 0.2 --in {d}/train.wimg --subspace {d}/pca.wsub --out {d}/m.wsvm"),
        format!("sweep-nu --subspace {d}/ica.wsub --train {d}/train.wimg --test {d}/test.wimg --out {d}/sweep.csv"),
        format!("train-cae --in {d}/train.wimg --epochs 1 --batch 6 --out {d}/m.wcae"),
    ];
    for step in &steps {
        let args: Vec<&str> = step.split_whitespace().collect();
        let o = wavescope(&args);
        assert!(o.status.success(), "{:?}: {}", args, text(&o));
    }
    assert!(fs::read_to_string(p("data/run.manifest")).unwrap().contains("seed = 3"));
    let sweep = fs::read_to_string(p("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 10);
    for f in ["pca.wsub", "ica.wsub", "m.wsvm", "m.wcae", "train.wimg", "test.wimg"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
}
