use std::fs;

use blsw::cli_io::*;
use blsw::dynamics::{Field2D, YGrid};
use blsw::grid::Grid1D;
use blsw::resonance::{CurveFit, EigenCurve};
use blsw::{make_params, Error, C64};
use serde_json::{json, Value};

fn three_point_curve() -> EigenCurve {
    EigenCurve {
        etas: vec![-0.1, 0.0, 0.1],
        lambdas: vec![
            C64::new(-0.023_456_789_012_345_67, -0.018_112_5),
            C64::new(0.0, 0.0),
            C64::new(-0.023_456_789_012_345_67, 0.1 / 3.0),
        ],
        vectors: None,
        fit: CurveFit { lambda1: 0.181, lambda3: -0.01, lambda2: 2.3, rms_im: 1e-9, rms_re: 2e-9 },
    }
}

#[test]
fn curve_csv_has_header_plus_rows_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = make_params(1.0, 2.0, 1.05, 0.5).unwrap();
    let curve = three_point_curve();
    let files = write_curve(&curve, &p, dir.path(), "curve", &[Format::Csv, Format::Json]).unwrap();
    assert_eq!(files.len(), 2);
    let text = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], "eta,re_lambda,im_lambda");
    let back = read_curve_csv(&dir.path().join("curve.csv")).unwrap();
    for (k, (eta, lam)) in back.iter().enumerate() {
        assert_eq!(eta.to_bits(), curve.etas[k].to_bits());
        assert_eq!(lam.re.to_bits(), curve.lambdas[k].re.to_bits());
        assert_eq!(lam.im.to_bits(), curve.lambdas[k].im.to_bits());
    }
    let v: Value = serde_json::from_slice(&fs::read(dir.path().join("curve.json")).unwrap()).unwrap();
    for key in ["lambda1_fit", "lambda2_fit", "lambda1_closed", "lambda2_closed", "kappa1"] {
        assert!(v[key].is_number(), "{key}");
    }
    assert_eq!(v["lambda1_fit"], json!(0.181));
}

#[test]
fn unwritable_destination_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let p = make_params(1.0, 2.0, 1.05, 0.5).unwrap();
    let err = write_curve(&three_point_curve(), &p, &blocker, "curve", &[Format::Csv]).unwrap_err();
    assert!(matches!(err, Error::Io(_)), "{err}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    fs::write(&path, r#"{"command": "profile", "c": 1.1, "n": 256}"#).unwrap();
    let cfg = load_config(Some(&path), &[]).unwrap();
    assert_eq!((cfg.c, cfg.n), (1.1, 256));
    let cfg = load_config(Some(&path), &[("c".into(), json!(1.2))]).unwrap();
    assert_eq!((cfg.c, cfg.n), (1.2, 256));

    let empty = load_config(None, &[]).unwrap();
    assert_eq!((empty.a, empty.b, empty.c, empty.alpha_fraction, empty.n), (1.0, 2.0, 1.05, 0.5, 512));

    let err = load_config(None, &[("c".into(), json!(0.9))]).unwrap_err();
    assert!(matches!(err, Error::Config(_)) && err.to_string().contains("c > 1"), "{err}");
    let missing = load_config(Some(&dir.path().join("absent.json")), &[]).unwrap_err();
    assert!(matches!(missing, Error::Config(_) | Error::Io(_)), "{missing}");
    fs::write(&path, r#"{"command": "profile", "grid": {"n": 3}}"#).unwrap();
    let err = load_config(Some(&path), &[]).unwrap_err();
    assert!(err.to_string().contains("grid"), "{err}");
}

#[test]
fn run_reports_module_errors_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = load_config(
        None,
        &[("command".into(), json!("spectrum")), ("n".into(), json!(63)), ("output".into(), json!(dir.path()))],
    );
    let err = cfg.and_then(|c| run(&c)).unwrap_err();
    assert_eq!(err.name(), "GridError");
    assert_eq!(err.exit_code(), 1);
    let line: Value = serde_json::from_str(&error_line(Some(Command::Spectrum), &err)).unwrap();
    assert_eq!(line["error"], "GridError");
    assert_eq!(line["exit_code"], 1);
    assert_eq!(line["command"], "spectrum");
}

#[test]
fn snapshot_layout() {
    let z = Grid1D::periodic(10.0, 4, 0.3);
    let mut f = Field2D::zeros(z, YGrid::new(5.0, 4).unwrap());
    f.phi[1] = C64::new(1.5, -2.0);
    f.psi[15] = C64::new(0.25, 0.0);
    let bytes = snapshot_bytes(&f, 2.0);
    let nl = bytes.iter().position(|b| *b == b'\n').unwrap();
    let header: Value = serde_json::from_slice(&bytes[..nl]).unwrap();
    assert_eq!((header["m"].as_u64(), header["n"].as_u64()), (Some(4), Some(4)));
    let body = &bytes[nl + 1..];
    assert_eq!(body.len(), 2 * 16 * 8);
    let word = |k: usize| f32::from_le_bytes(body[4 * k..4 * k + 4].try_into().unwrap());
    assert_eq!((word(2), word(3)), (1.5, -2.0));
    assert_eq!(word(2 * (16 + 15)), 0.25);
}
