//! End-to-end tests of the nvsim binary: flag/config handling, exit
//! codes, file formats, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn nvsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn nvsim")
}

fn nvsim_env(args: &[&str], dir: &Path, key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvsim"))
        .args(args)
        .current_dir(dir)
        .env(key, value)
        .output()
        .expect("spawn nvsim")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn parse_csv(path: &PathBuf) -> (String, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).expect("read csv");
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().expect("parse float"))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("spectrum"));
    let out = nvsim(&["spectrum", "--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn spectrum_is_deterministic_and_peaks_at_the_overtone_ridge() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "spectrum",
        "--field",
        "2000",
        "--orientations",
        "powder:64",
        "--class",
        "ot",
        "--grid",
        "10000:5:13000",
    ];
    let mut first = args.to_vec();
    first.extend(["--out", "a"]);
    let mut second = args.to_vec();
    second.extend(["--out", "b"]);
    assert_eq!(nvsim(&first, dir.path()).status.code(), Some(0));
    assert_eq!(nvsim(&second, dir.path()).status.code(), Some(0));

    let bytes_a = fs::read(dir.path().join("a.csv")).unwrap();
    let bytes_b = fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(
        bytes_a, bytes_b,
        "identical config must give identical bytes"
    );

    let (header, rows) = parse_csv(&dir.path().join("a.csv"));
    assert_eq!(header, "freq_mhz,amplitude");
    assert_eq!(rows.len(), 601);
    let peak = rows.iter().max_by(|a, b| a[1].total_cmp(&b[1])).unwrap();
    let ridge = 2.0 * 2.8 * 2000.0;
    assert!(
        (peak[0] - ridge).abs() < 0.05 * ridge,
        "overtone peak at {} vs 2γB = {ridge}",
        peak[0]
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# sample configuration\nfield = 985\norientations = powder:32\nclass = sq\n",
    )
    .unwrap();

    let with_flag = [
        "spectrum", "--config", "run.cfg", "--field", "2000", "--out", "flagged",
    ];
    let pure_flag = [
        "spectrum",
        "--field",
        "2000",
        "--orientations",
        "powder:32",
        "--class",
        "sq",
        "--out",
        "pure",
    ];
    let config_only = ["spectrum", "--config", "run.cfg", "--out", "cfg"];
    assert_eq!(nvsim(&with_flag, dir.path()).status.code(), Some(0));
    assert_eq!(nvsim(&pure_flag, dir.path()).status.code(), Some(0));
    assert_eq!(nvsim(&config_only, dir.path()).status.code(), Some(0));

    let flagged = fs::read(dir.path().join("flagged.csv")).unwrap();
    let pure = fs::read(dir.path().join("pure.csv")).unwrap();
    let cfg = fs::read(dir.path().join("cfg.csv")).unwrap();
    assert_eq!(flagged, pure, "the flag must shadow the config entry");
    assert_ne!(flagged, cfg, "985 G and 2000 G spectra must differ");
}

#[test]
fn negative_field_exits_2_citing_the_precondition() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(&["spectrum", "--field", "-5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("field"), "stderr: {err}");
    assert!(err.contains("nonnegative"), "stderr: {err}");
}

#[test]
fn bad_inputs_exit_2_naming_the_offender() {
    let dir = tempfile::tempdir().unwrap();

    let out = nvsim(&["spectrum", "--class", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("class"));

    let out = nvsim(&["spectrum", "--fwhm", "0"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("fwhm"));

    let out = nvsim(&["spectrum", "--grid", "10:0:100"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("grid"));

    let out = nvsim(&["spectrum", "--orientations", "powder:1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("orientations"));

    let out = nvsim(&["sweep", "--widths", "log:0:100:5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("widths"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.cfg"), "fild = 10\n").unwrap();
    let out = nvsim(&["spectrum", "--config", "bad.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("fild"));

    fs::write(dir.path().join("noeq.cfg"), "field 10\n").unwrap();
    let out = nvsim(&["spectrum", "--config", "noeq.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("key = value"));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &[
            "spectrum",
            "--field",
            "100",
            "--orientations",
            "axis-100",
            "--out",
            "no_such_dir/run",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn widths_csv_has_the_contracted_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &[
            "widths",
            "--fields",
            "log:1000:50000:5",
            "--orientations",
            "powder:32",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&dir.path().join("widths.csv"));
    assert_eq!(header, "field_g,sigma_sq_mhz,sigma_ot_mhz");
    assert_eq!(rows.len(), 5);
    assert!((rows[0][0] - 1000.0).abs() < 1e-6);
    assert!((rows[4][0] - 50000.0).abs() < 1e-3);
    for row in &rows {
        assert!(row[1] >= 0.0 && row[2] >= 0.0);
    }
    // overtone narrowing with field
    assert!(rows[4][2] < rows[0][2]);
}

#[test]
fn sweep_csv_is_monotone_in_width() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &[
            "sweep",
            "--field",
            "2000",
            "--widths",
            "250:250:3000",
            "--orientations",
            "powder:64",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = parse_csv(&dir.path().join("sweep.csv"));
    assert_eq!(header, "width_mhz,pmax_sq,pmax_ot");
    assert_eq!(rows.len(), 12);
    for pair in rows.windows(2) {
        assert!(pair[1][1] >= pair[0][1]);
        assert!(pair[1][2] >= pair[0][2]);
    }
    // small sweeps favor the overtone at 2 kG, wide sweeps the SQ band
    assert!(rows[0][2] > rows[0][1]);
    assert!(rows.last().unwrap()[1] > rows.last().unwrap()[2]);
}

#[test]
fn sweep_reproduces_published_checkpoints() {
    // default powder:512 at 2000 G: ~10% of the polarization inside the
    // best 100 MHz SQ window, ~25% inside a 200 MHz OT window, ~50%
    // inside a 3 GHz SQ window
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &["sweep", "--field", "2000", "--widths", "100:100:3000"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let (_, rows) = parse_csv(&dir.path().join("sweep.csv"));
    let at = |w: f64| rows.iter().find(|r| (r[0] - w).abs() < 1e-9).unwrap();
    let sq_100 = at(100.0)[1];
    let ot_200 = at(200.0)[2];
    let sq_3000 = at(3000.0)[1];
    assert!((0.05..=0.15).contains(&sq_100), "pmax_sq(100) = {sq_100}");
    assert!((0.20..=0.30).contains(&ot_200), "pmax_ot(200) = {ot_200}");
    assert!(
        (0.40..=0.60).contains(&sq_3000),
        "pmax_sq(3000) = {sq_3000}"
    );
}

#[test]
fn map2d_writes_long_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &[
            "map2d",
            "--fields",
            "0:500:1000",
            "--freqs",
            "2500:10:3200",
            "--orientations",
            "axis-100",
            "--out",
            "m",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    let (header, rows) = parse_csv(&dir.path().join("m.csv"));
    assert_eq!(header, "field_g,freq_mhz,amplitude");
    assert_eq!(rows.len(), 3 * 71);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[71][0], 500.0);

    let pgm = fs::read(dir.path().join("m.pgm")).unwrap();
    let text_head = String::from_utf8_lossy(&pgm[..64]);
    assert!(text_head.starts_with("P5\n# amin="), "header: {text_head}");
    assert!(text_head.contains("amax="));
    let header_end = pgm
        .windows(4)
        .position(|w| w == b"255\n")
        .expect("maxval line")
        + 4;
    assert_eq!(pgm.len() - header_end, 3 * 71);
    let dims_line = text_head.lines().nth(2).unwrap();
    assert_eq!(dims_line, "71 3");

    // the zero-field row must light up at 2870 MHz
    let row0: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == 0.0).collect();
    let best = row0.iter().max_by(|a, b| a[2].total_cmp(&b[2])).unwrap();
    assert_eq!(best[1], 2870.0);
}

#[test]
fn poldensity_writes_slice_csv_and_field_map_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let out = nvsim(
        &[
            "poldensity",
            "--field",
            "1000",
            "--fields",
            "500:250:1000",
            "--bin",
            "5",
            "--orientations",
            "powder:16",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    let (header, rows) = parse_csv(&dir.path().join("poldensity.csv"));
    assert_eq!(header, "freq_mhz,density_per_mhz");
    let mass: f64 = rows.iter().map(|r| r[1] * 5.0).sum();
    assert!(mass > 0.5, "total available polarization {mass}");
    for row in &rows {
        assert!(row[1] >= 0.0);
    }

    let pgm = fs::read(dir.path().join("poldensity.pgm")).unwrap();
    let text_head = String::from_utf8_lossy(&pgm[..64]);
    assert!(text_head.starts_with("P5\n"));
    let dims_line = text_head.lines().nth(2).unwrap();
    let (_, height) = dims_line.split_once(' ').unwrap();
    assert_eq!(height, "3");
}

#[test]
fn thread_count_changes_nothing_but_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "map2d",
        "--fields",
        "0:200:2000",
        "--freqs",
        "0:20:7000",
        "--orientations",
        "powder:32",
    ];
    let mut one = args.to_vec();
    one.extend(["--out", "one"]);
    let mut many = args.to_vec();
    many.extend(["--out", "many"]);
    assert_eq!(
        nvsim_env(&one, dir.path(), "NVSIM_THREADS", "1")
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        nvsim_env(&many, dir.path(), "NVSIM_THREADS", "8")
            .status
            .code(),
        Some(0)
    );
    let a = fs::read(dir.path().join("one.csv")).unwrap();
    let b = fs::read(dir.path().join("many.csv")).unwrap();
    assert_eq!(a, b);

    let out = nvsim_env(&["spectrum"], dir.path(), "NVSIM_THREADS", "zero");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("NVSIM_THREADS"));
}
