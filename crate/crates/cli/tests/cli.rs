use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use portagrad::corpus::save_corpus;
use portagrad::synth::synth_noise;
use portagrad::{write_wav, CorpusRecord, EventKind, SampleBuffer, Sonata};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_portagrad"));
    c.env_remove("PORTAGRAD_CONFIG");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn json_lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> (PathBuf, Value) {
    let mut args = vec!["synth", "--out", name];
    args.extend_from_slice(extra);
    let o = run(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(name).with_extension("json")).unwrap()).unwrap();
    (dir.join(name), truth)
}

fn record(year: i32, kind: EventKind, gradient: f64, bpm: f64) -> CorpusRecord {
    CorpusRecord {
        performer: "Anon".into(),
        year,
        sonata: Sonata::Op69,
        bar: 1,
        kind,
        gradient_px: gradient / 2220.0,
        gradient_hz_s: gradient,
        duration_s: if kind == EventKind::Sliding { 0.1 } else { 0.02 },
        bpm,
    }
}

#[test]
fn synth_then_analyze_recovers_the_glide() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, truth) = synth(dir.path(), "g.wav", &["--f-start", "196", "--f-end", "293.7", "--glide-s", "0.12", "--snr-db", "30"]);
    assert_eq!(truth["kind"], "glide");
    let o = run(dir.path(), &["analyze", wav.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = stdout_json(&o);
    let events = r["events"].as_array().unwrap();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0]["kind"], "sliding");
    let g = events[0]["gradient_hz_per_s"].as_f64().unwrap();
    let want = truth["truth"]["gradient"].as_f64().unwrap();
    assert!(((g - want) / want).abs() <= 0.05, "{g} vs {want}");
    assert!(r["timing"]["elapsed_ms"].is_number());
}

#[test]
fn silent_input_gives_no_events() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("silence.wav");
    write_wav(&SampleBuffer::new(vec![0.0f64; 44_100], 44_100), &wav).unwrap();
    let o = run(dir.path(), &["analyze", wav.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout_json(&o)["events"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_input_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["analyze", "no_such_take.wav"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no_such_take.wav"));
    assert_eq!(stderr(&o).matches("no_such_take.wav").count(), 1, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["analyze"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["analyze", "x.wav", "--window-size", "lots"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["analyze", "x.wav", "--window-size", "1000"]).status.code(), Some(1));
    assert!(run(dir.path(), &["--help"]).status.success());
}

#[test]
fn measure_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["measure", "--p1", "100,300", "--p2", "110,280"]);
    assert!(o.status.success());
    let r = stdout_json(&o);
    assert_eq!(r["gradient_hz_s"], 4440.0);
    assert_eq!(r["delta_f_hz"], 185.0);
    assert!(stderr(&o).contains("4440.0 Hz/s"));

    let o = run(dir.path(), &["measure", "--p1", "0,100", "--p2", "240,100"]);
    let r = stdout_json(&o);
    assert_eq!((r["gradient_hz_s"].as_f64(), r["duration_s"].as_f64()), (Some(0.0), Some(1.0)));

    let o = run(dir.path(), &["measure", "--p1", "10,0", "--p2", "10,50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not positive"));

    let o = run(dir.path(), &["measure", "--p1", "0,0", "--p2", "10,10", "--range", "0:800", "--height", "800", "--width", "1", "--window", "1"]);
    assert_eq!(stdout_json(&o)["gradient_hz_s"], 1.0);
}

#[test]
fn reports_follow_input_order() {
    let dir = tempfile::tempdir().unwrap();
    let (a, _) = synth(dir.path(), "a.wav", &["--f-start", "220", "--f-end", "330", "--glide-s", "0.3"]);
    let (b, _) = synth(dir.path(), "b.wav", &["--kind", "step", "--f-start", "300", "--f-end", "400"]);
    let (c, _) = synth(dir.path(), "c.wav", &["--f-start", "500", "--f-end", "400", "--glide-s", "0.1"]);
    let paths: Vec<&str> = [&a, &b, &c].iter().map(|p| p.to_str().unwrap()).collect();
    let mut args = vec!["analyze", "--jobs", "3"];
    args.extend(&paths);
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let reports = json_lines(&o);
    let inputs: Vec<&str> = reports.iter().map(|r| r["input"].as_str().unwrap()).collect();
    assert_eq!(inputs, paths);
    let kinds: Vec<&str> = reports.iter().map(|r| r["events"][0]["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["sliding", "clean_shift", "sliding"]);
    assert_eq!(reports[1]["events"][0]["gradient_hz_per_s"], 0.0);
}

fn without_timing(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "g.wav", &["--snr-db", "35", "--seed", "4"]);
    let wav = wav.to_str().unwrap();
    let first = stdout_json(&run(dir.path(), &["analyze", wav, "--window-size", "4096", "--min-plateau-s", "0.1", "--no-refine"]));
    let conf: String = first["config"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| format!("{k} = {}\n", v.as_str().unwrap()))
        .collect();
    let conf_path = dir.path().join("run.conf");
    std::fs::write(&conf_path, conf).unwrap();
    let again = stdout_json(&run(dir.path(), &["analyze", wav, "--config", conf_path.to_str().unwrap()]));
    assert_eq!(without_timing(first.clone()), without_timing(again));
    assert_eq!(first["resolved"]["spectro"]["window_size"], 4096);
    assert_eq!(first["resolved"]["refine_slides"], false);
}

#[test]
fn config_file_sources_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "g.wav", &[]);
    let wav = wav.to_str().unwrap();
    std::fs::write(dir.path().join("portagrad.conf"), "# local defaults\nwindow-size = 4096\nwindow = 9\n").unwrap();
    // `window` belongs to measure and is skipped here.
    let r = stdout_json(&run(dir.path(), &["analyze", wav]));
    assert_eq!(r["config"]["window-size"], "4096");
    let r = stdout_json(&run(dir.path(), &["analyze", wav, "--window-size", "1024"]));
    assert_eq!(r["config"]["window-size"], "1024");
    let m = stdout_json(&run(dir.path(), &["measure", "--p1", "0,0", "--p2", "240,0"]));
    assert_eq!(m["calibration"]["window_seconds"], 9.0);

    let env_conf = dir.path().join("env.conf");
    std::fs::write(&env_conf, "hop-size = 256\ntime-res = 0\n").unwrap();
    let o = bin().current_dir(dir.path()).env("PORTAGRAD_CONFIG", &env_conf).args(["analyze", wav]).output().unwrap();
    let r = stdout_json(&o);
    assert_eq!(r["resolved"]["spectro"]["hop_size"], 256);
    assert_eq!(r["resolved"]["spectro"]["window_size"], 2048, "env file replaces the local one");

    std::fs::write(&env_conf, "no-such-flag = 1\n").unwrap();
    let o = bin().current_dir(dir.path()).env("PORTAGRAD_CONFIG", &env_conf).args(["analyze", wav]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no-such-flag"));

    let o = run(dir.path(), &["analyze", wav, "--config", "missing.conf"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn recovery_exhausted_on_noise() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("hiss.wav");
    write_wav(&synth_noise(1.5f64, 0.01, 44_100, 3), &wav).unwrap();
    let o = run(dir.path(), &["recover", wav.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let r = stdout_json(&o);
    assert_eq!(r["recovery"]["recovered"], false);
    assert_eq!(r["recovery"]["diagnostics"].as_array().unwrap().len(), 6);
    assert_eq!(r["config"]["recover"], "true");
}

#[test]
fn recovery_lifts_a_faint_glide() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, truth) = synth(dir.path(), "faint.wav", &["--amplitude", "0.002", "--harmonics", "1", "--snr-db", "40"]);
    // Magnitudes are amplitude-normalized: the 0.002 trace sits 10.5 dB under this floor.
    let o = run(dir.path(), &["analyze", "--recover", "--visibility-floor", "0.0067", wav.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = stdout_json(&o);
    let gain = r["recovery"]["gain_used_db"].as_f64().unwrap();
    assert_eq!(gain, 12.0);
    let g = r["events"][0]["gradient_hz_per_s"].as_f64().unwrap();
    let want = truth["truth"]["gradient"].as_f64().unwrap();
    assert!(((g - want) / want).abs() <= 0.10, "{g} vs {want}");
}

#[test]
fn analyze_writes_corpus_image_and_track() {
    let dir = tempfile::tempdir().unwrap();
    let (wav, _) = synth(dir.path(), "g.wav", &["--f-start", "330", "--f-end", "440", "--glide-s", "0.15"]);
    let wav = wav.to_str().unwrap();
    let args = [
        "analyze", wav, "--corpus", "corpus.csv", "--performer", "Casals", "--year", "1930",
        "--bpm", "72", "--bar", "12", "--pgm", "g.pgm", "--track-csv", "g.csv",
    ];
    for _ in 0..2 {
        let o = run(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let corpus = std::fs::read_to_string(dir.path().join("corpus.csv")).unwrap();
    assert_eq!(corpus.lines().count(), 3, "{corpus}");
    assert!(corpus.lines().nth(1).unwrap().starts_with("Casals,1930,op69,12,sliding,"));
    let pgm = std::fs::read(dir.path().join("g.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5"));
    let track = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(track.starts_with("time_s,freq_hz,voiced,confidence"));

    let o = run(dir.path(), &["analyze", wav, "--corpus", "corpus.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn regress_and_era_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut records: Vec<CorpusRecord> = (0..30)
        .map(|i| {
            let bpm = 50.0 + 3.0 * i as f64;
            let wobble = if i % 2 == 0 { 60.0 } else { -60.0 };
            record(1930 + 3 * i, EventKind::Sliding, 6000.0 - 25.0 * bpm + wobble, bpm)
        })
        .collect();
    records.push(record(1960, EventKind::CleanShift, 0.0, 95.0));
    let path = dir.path().join("c.csv");
    save_corpus(&records, &path).unwrap();
    let o = run(dir.path(), &["regress", "c.csv", "--mode", "tempo", "--plot-csv", "p.csv", "--plot-svg", "p.svg", "--era-summary"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = stdout_json(&o);
    let slope = r["regression"]["slope"].as_f64().unwrap();
    assert!(slope < 0.0 && ((slope + 25.0) / 25.0).abs() <= 0.15, "{slope}");
    assert_eq!(r["excluded_zero"], 1);
    assert!(!r["eras"].as_array().unwrap().is_empty());
    let plot = std::fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(plot.lines().count(), 31);
    assert!(plot.starts_with("bpm,gradient_hz_s\n"));
    assert!(std::fs::read_to_string(dir.path().join("p.svg")).unwrap().contains("<circle"));

    let o = run(dir.path(), &["regress", "c.csv", "--mode", "year"]);
    assert!(stdout_json(&o)["regression"]["slope"].as_f64().unwrap() < 0.0);

    let o = run(dir.path(), &["era", "c.csv", "--eras", "1930-1960,1960-2030"]);
    let rows = stdout_json(&o);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["n"], 10);
    assert_eq!(rows[1]["n"], 20);
    for key in ["min_gradient", "max_gradient", "mean_gradient"] {
        assert!(rows[0][key].is_number());
    }
    assert_eq!(run(dir.path(), &["era", "c.csv", "--eras", "1960-1930"]).status.code(), Some(1));
}

#[test]
fn regress_without_slides_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shifts.csv");
    save_corpus(&[record(1930, EventKind::CleanShift, 0.0, 60.0), record(1940, EventKind::CleanShift, 0.0, 70.0)], &path).unwrap();
    let o = run(dir.path(), &["regress", "shifts.csv"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no portamento-present subset"));

    std::fs::write(dir.path().join("bad.csv"), "not,a,corpus\n").unwrap();
    assert_eq!(run(dir.path(), &["regress", "bad.csv"]).status.code(), Some(2));
}
