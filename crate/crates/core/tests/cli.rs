use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_decouple-sim"))
        .args(args)
        .current_dir(dir)
        .env("DECOUPLE_SIM_THREADS", "2")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const TRACE: &str = "experiment = trace\ncontrol.mode = bare\nintegrator.steps = 300\n";

#[test]
fn run_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "short.scenario", TRACE);
    let out = cli(&["run", &scenario, "--out-dir", "out", "--plot", "--tol", "1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("case.bare.final_fidelity"));
    let csv = std::fs::read_to_string(dir.path().join("out/short.csv")).unwrap();
    assert!(csv.starts_with("# experiment = trace\n"));
    assert!(csv.contains("\nt_over_tau,F_bare\n"));
    assert!(dir.path().join("out/short.svg").exists());

    let replot = cli(&["plot", "out/short.csv", "--kind", "line", "--out", "again.svg"], dir.path());
    assert!(replot.status.success());
    assert_eq!(
        std::fs::read(dir.path().join("again.svg")).unwrap(),
        std::fs::read(dir.path().join("out/short.svg")).unwrap()
    );
}

#[test]
fn validation_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        "experiment = trace\ncontrol.mode = full_protect\ncontrol.n = 3\n",
        "experiment = trace\nunknown.key = 1\n",
        "experiment = trace\nreservoirs.1.class = dephasing\n",
        "experiment = nonsense\n",
        "experiment = trace\nreservoirs.1.class = dephasing\nreservoirs.1.s = 1\n\
         reservoirs.2.class = dephasing\nreservoirs.2.s = 3\n",
    ];
    for (i, text) in cases.iter().enumerate() {
        let scenario = write(dir.path(), &format!("bad{i}.scenario"), text);
        let out = cli(&["run", &scenario], dir.path());
        assert_eq!(out.status.code(), Some(2), "{text}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let scenario = write(dir.path(), "ok.scenario", TRACE);
    let out = cli(&["run", &scenario, "--tol", "-1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["run", &scenario, "--steps", "10"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn parse_errors_carry_the_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "bad.scenario", "# comment\nexperiment = trace\nno equals sign\n");
    let out = cli(&["run", &scenario], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn failed_step_doubling_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "strict.scenario", TRACE);
    let out = cli(&["run", &scenario, "--tol", "1e-16"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("strict.csv").exists());
}

#[test]
fn missing_inputs_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(&["run", "absent.scenario"], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["plot", "absent.csv", "--kind", "heatmap"], dir.path()).status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["verify"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn shipped_scenarios_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "scenario") {
            decouple_sim::experiment::load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 7);
}
