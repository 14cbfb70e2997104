//! Run configuration, command dispatch and result files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::dynamics::{
    evolve_field, geometric_times, offresonant_decay, preset_field, project_out, random_state, EvolveOptions, Field2D, Preset,
    ResonantBasis, YGrid,
};
use crate::error::{Error, Result};
use crate::grid::build_grid;
use crate::linop::{assemble_L, DenseEig};
use crate::params::{make_params, ModelParams};
use crate::profile::{closed_form_integrals, energy_and_derivative, eval_profiles, quadrature_integrals};
use crate::resonance::{
    basis_at, closed_form_constants, kp_convergence_study, resonant_curve_with, CurveOptions, EigenCurve, KpOptions,
};
use crate::symbols::verify_symbol_bounds;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Profile,
    SymbolsCheck,
    Spectrum,
    Resonance,
    KpCompare,
    Evolve,
    Decay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::SymbolsCheck => "symbols-check",
            Command::Spectrum => "spectrum",
            Command::Resonance => "resonance",
            Command::KpCompare => "kp-compare",
            Command::Evolve => "evolve",
            Command::Decay => "decay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Bin,
}

/// Every knob of every command. Optional fields default to values derived
/// from the model parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha_fraction: f64,
    /// z-grid points
    pub n: usize,
    pub l_override: Option<f64>,
    /// band edge; default 0.5ε²
    pub eta_max: Option<f64>,
    pub n_eta: usize,
    /// single transverse wavenumber for `spectrum` and `decay`; `decay`
    /// defaults to 0.3ε²
    pub eta: Option<f64>,
    /// y-grid points
    pub m: usize,
    /// y half-length; default covers the spread of the prediction
    pub l_y: Option<f64>,
    /// default: geometric from 50 to 800 for `evolve`, 0..1000 by 25 for `decay`
    pub times: Option<Vec<f64>>,
    pub seed: u64,
    pub preset: String,
    pub eps_list: Vec<f64>,
    pub kp_eta: f64,
    pub samples: usize,
    pub output: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            a: 1.0,
            b: 2.0,
            c: 1.05,
            alpha_fraction: 0.5,
            n: 512,
            l_override: None,
            eta_max: None,
            n_eta: 33,
            eta: None,
            m: 512,
            l_y: None,
            times: None,
            seed: 0,
            preset: "gaussian-bump".into(),
            eps_list: vec![0.4, 0.2, 0.1],
            kp_eta: 0.05,
            samples: 100_000,
            output: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ModelParams> {
        make_params(self.a, self.b, self.c, self.alpha_fraction)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::Config(format!("{key}: {msg}")));
        if !(self.c > 1.0) {
            return bad("c", format!("requires c > 1, got {}", self.c));
        }
        if !(self.a > 0.0 && self.a < self.b) {
            return bad("a", format!("requires 0 < a < b, got a={}, b={}", self.a, self.b));
        }
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction < 1.0) {
            return bad("alpha_fraction", format!("requires 0 < alpha_fraction < 1, got {}", self.alpha_fraction));
        }
        if self.n == 0 {
            return bad("n", "must be positive".into());
        }
        if self.n_eta < 5 {
            return bad("n_eta", format!("requires at least 5 samples, got {}", self.n_eta));
        }
        for (key, v) in [("eta_max", self.eta_max), ("l_override", self.l_override), ("l_y", self.l_y)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(key, format!("must be positive, got {v}"));
                }
            }
        }
        if let Some(e) = self.eta {
            if !e.is_finite() {
                return bad("eta", "must be finite".into());
            }
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| !(*t >= 0.0 && t.is_finite())) || ts.windows(2).any(|w| w[1] < w[0]) {
                return bad("times", "must be a nonempty sorted list of nonnegative values".into());
            }
        }
        if self.eps_list.len() < 2 || self.eps_list.iter().any(|e| !(*e > 0.0)) || self.eps_list.windows(2).any(|w| w[1] >= w[0])
        {
            return bad("eps_list", "must hold at least two positive, strictly descending values".into());
        }
        if !(self.kp_eta > 0.0) {
            return bad("kp_eta", format!("must be positive, got {}", self.kp_eta));
        }
        if self.samples == 0 {
            return bad("samples", "must be positive".into());
        }
        if self.formats.is_empty() {
            return bad("formats", "at least one of csv, json, bin".into());
        }
        Preset::parse(&self.preset, self.seed).map_err(|e| Error::Config(format!("preset: {}", strip_name(&e))))?;
        Ok(())
    }
}

fn strip_name(e: &Error) -> String {
    let s = e.to_string();
    s.split_once(": ").map(|(_, r)| r.to_string()).unwrap_or(s)
}

/// Reads an optional JSON file, applies `overrides` (flag values, keyed by
/// field name) on top, then validates.
pub fn load_config(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let mut obj = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(m)) => m,
                Ok(_) => return Err(Error::Config(format!("{}: top level must be an object", p.display()))),
                Err(e) => return Err(Error::Config(format!("{}: {e}", p.display()))),
            }
        }
        None => Map::new(),
    };
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    let de = Value::Object(obj);
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config(format!("{path}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &str, rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn json_bytes(v: &impl Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v).map_err(|e| Error::Io(e.into()))?;
    out.push(b'\n');
    Ok(out)
}

/// `<stem>.csv` with columns `eta,re_lambda,im_lambda` and `<stem>.json`
/// with the fit next to the closed-form constants.
pub fn write_curve(curve: &EigenCurve, p: &ModelParams, dir: &Path, stem: &str, formats: &[Format]) -> Result<Vec<PathBuf>> {
    let mut written = vec![];
    if formats.contains(&Format::Csv) {
        let path = dir.join(format!("{stem}.csv"));
        let rows = curve.etas.iter().zip(&curve.lambdas).map(|(e, l)| vec![*e, l.re, l.im]);
        write_atomic(&path, csv("eta,re_lambda,im_lambda", rows).as_bytes())?;
        written.push(path);
    }
    if formats.contains(&Format::Json) {
        let cf = closed_form_constants(p)?;
        let path = dir.join(format!("{stem}.json"));
        let v = json!({
            "a": p.a, "b": p.b, "c": p.c, "eps": p.eps, "alpha": p.alpha,
            "lambda1_fit": curve.fit.lambda1,
            "lambda3_fit": curve.fit.lambda3,
            "lambda2_fit": curve.fit.lambda2,
            "lambda1_closed": cf.lambda1_0,
            "lambda2_closed": cf.lambda2_0,
            "kappa1": cf.kappa1,
            "rms_im": curve.fit.rms_im,
            "rms_re": curve.fit.rms_re,
            "conjugation_defect": curve.conjugation_defect(),
            "points": curve.etas.len(),
        });
        write_atomic(&path, &json_bytes(&v)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Parses a curve CSV written by [`write_curve`].
pub fn read_curve_csv(path: &Path) -> Result<Vec<(f64, C64)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next() != Some("eta,re_lambda,im_lambda") {
        return Err(Error::Config(format!("{}: unexpected header", path.display())));
    }
    lines
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("{}: {e}", path.display()))))
                .collect::<Result<_>>()?;
            if v.len() != 3 {
                return Err(Error::Config(format!("{}: expected 3 columns", path.display())));
            }
            Ok((v[0], C64::new(v[1], v[2])))
        })
        .collect()
}

/// One snapshot: a JSON header line, then (Φ, Ψ) as little-endian complex64
/// (f32 re, f32 im) in row-major [y][z] order, Φ block first.
pub fn snapshot_bytes(field: &Field2D, t: f64) -> Vec<u8> {
    let header = json!({
        "t": t,
        "m": field.y_grid.m,
        "n": field.z_grid.n,
        "l_y": field.y_grid.half_length,
        "l_z": field.z_grid.half_length,
        "alpha": field.z_grid.alpha,
        "coordinates": "conjugated, e^{alpha z} times the physical field",
        "dtype": "complex64",
        "layout": "row-major [y][z]; phi block then psi block",
    });
    let mut out = serde_json::to_vec(&header).expect("header serializes");
    out.push(b'\n');
    for v in field.phi.iter().chain(&field.psi) {
        out.extend_from_slice(&(v.re as f32).to_le_bytes());
        out.extend_from_slice(&(v.im as f32).to_le_bytes());
    }
    out
}

/// Default y half-length: the prediction's support λ₁t plus twelve heat
/// widths plus four bump widths at the last time.
pub fn default_l_y(p: &ModelParams, t_max: f64) -> Result<f64> {
    let cf = closed_form_constants(p)?;
    let w = crate::dynamics::natural_width(p);
    Ok(cf.lambda1_0 * t_max + 12.0 * (cf.lambda2_0 * t_max).sqrt() + 4.0 * w)
}

/// Result of a run: files written and a one-line summary.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub command: &'static str,
    pub files: Vec<PathBuf>,
    pub summary: Value,
}

impl RunOutcome {
    pub fn summary_line(&self) -> String {
        json!({ "command": self.command, "status": "ok", "files": self.files, "summary": self.summary }).to_string()
    }
}

/// One-line machine-readable failure report.
pub fn error_line(command: Option<Command>, e: &Error) -> String {
    json!({
        "command": command.map(Command::name),
        "status": "error",
        "error": e.name(),
        "message": strip_name(e),
        "exit_code": e.exit_code(),
    })
    .to_string()
}

pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let cmd = cfg.command.ok_or_else(|| Error::Config("command: missing".into()))?;
    cfg.validate()?;
    let p = cfg.params()?;
    let dir = cfg.output.as_path();
    let mut files = vec![];
    let summary = match cmd {
        Command::Profile => {
            let g = build_grid(&p, cfg.n, cfg.l_override)?;
            let pr = eval_profiles(&p, &g.nodes);
            let ci = closed_form_integrals(&p);
            let qi = quadrature_integrals(&p);
            let en = energy_and_derivative(&p);
            if cfg.wants(Format::Csv) {
                let path = dir.join("profile.csv");
                let rows = pr.iter().map(|b| vec![b.x, b.q, b.qp, b.r, b.rp]);
                write_atomic(&path, csv("x,q,qp,r,rp", rows).as_bytes())?;
                files.push(path);
            }
            let v = json!({ "params": p, "closed_form": ci, "quadrature": qi, "energy": en });
            if cfg.wants(Format::Json) {
                let path = dir.join("profile.json");
                write_atomic(&path, &json_bytes(&v)?)?;
                files.push(path);
            }
            json!({ "de_dc": en.de_dc })
        }
        Command::SymbolsCheck => {
            let rep = verify_symbol_bounds(&p, cfg.samples, cfg.seed);
            if cfg.wants(Format::Json) {
                let path = dir.join("symbols.json");
                write_atomic(&path, &json_bytes(&rep)?)?;
                files.push(path);
            }
            if cfg.wants(Format::Csv) {
                let path = dir.join("symbols.csv");
                let mut s = String::from("check,samples,violations,worst_margin\n");
                for c in &rep.checks {
                    s.push_str(&format!("{},{},{},{}\n", c.name, c.samples, c.violations, fmt_f64(c.worst_margin)));
                }
                write_atomic(&path, s.as_bytes())?;
                files.push(path);
            }
            json!({ "violations": rep.total_violations(), "checks": rep.checks.len() })
        }
        Command::Spectrum => {
            let g = build_grid(&p, cfg.n, cfg.l_override)?;
            let eta = cfg.eta.unwrap_or(0.0);
            let m = assemble_L(&p, &g, eta.abs())?;
            let dec = DenseEig::compute(&m.entries)?;
            let mut order: Vec<usize> = (0..dec.values.len()).collect();
            order.sort_by(|&i, &j| {
                let (x, y) = (dec.values[i], dec.values[j]);
                y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im))
            });
            let vals: Vec<C64> = order.iter().map(|&k| dec.values[k]).collect();
            if cfg.wants(Format::Csv) {
                let path = dir.join("spectrum.csv");
                write_atomic(&path, csv("re,im", vals.iter().map(|v| vec![v.re, v.im])).as_bytes())?;
                files.push(path);
            }
            if cfg.wants(Format::Json) {
                let path = dir.join("spectrum.json");
                // λ and residual of the rightmost eigenpairs
                let pairs: Vec<Value> = order
                    .iter()
                    .take(8)
                    .map(|&k| {
                        let e = dec.pair(&m.entries, k);
                        json!({ "lambda": [e.lambda.re, e.lambda.im], "residual": e.residual })
                    })
                    .collect();
                let v = json!({
                    "a": p.a, "b": p.b, "c": p.c, "alpha": p.alpha, "eta": eta, "n": cfg.n,
                    "half_length": g.half_length, "condition": dec.condition(), "rightmost": pairs, "values": vals,
                });
                write_atomic(&path, &json_bytes(&v)?)?;
                files.push(path);
            }
            json!({ "eta": eta, "count": vals.len(), "max_re": vals[0].re })
        }
        Command::Resonance => {
            let g = build_grid(&p, cfg.n, cfg.l_override)?;
            let eta_max = cfg.eta_max.unwrap_or(0.5 * p.eps * p.eps);
            let curve = resonant_curve_with(&p, &g, eta_max, cfg.n_eta, CurveOptions::default())?;
            files.extend(write_curve(&curve, &p, dir, "resonance", &cfg.formats)?);
            let cf = closed_form_constants(&p)?;
            json!({
                "lambda1_fit": curve.fit.lambda1, "lambda2_fit": curve.fit.lambda2,
                "lambda1_closed": cf.lambda1_0, "lambda2_closed": cf.lambda2_0, "kappa1": cf.kappa1,
            })
        }
        Command::KpCompare => {
            let opts = KpOptions { n: cfg.n, alpha_fraction: cfg.alpha_fraction, ..Default::default() };
            let st = kp_convergence_study(cfg.a, cfg.b, &cfg.eps_list, cfg.kp_eta, opts)?;
            if cfg.wants(Format::Csv) {
                let path = dir.join("kp.csv");
                let rows = st.rows.iter().map(|r| vec![r.eps, r.re_scaled, r.im_scaled, r.error]);
                write_atomic(&path, csv("eps,re_scaled,im_scaled,error", rows).as_bytes())?;
                files.push(path);
            }
            if cfg.wants(Format::Json) {
                let path = dir.join("kp.json");
                write_atomic(&path, &json_bytes(&st)?)?;
                files.push(path);
            }
            json!({ "ratios": st.ratios, "non_increasing": st.non_increasing })
        }
        Command::Evolve => {
            let g = build_grid(&p, cfg.n, cfg.l_override)?;
            let times = cfg.times.clone().unwrap_or_else(|| geometric_times(50.0, 2f64.sqrt(), 9));
            let t_max = times.last().copied().unwrap_or(0.0);
            let l_y = match cfg.l_y {
                Some(v) => v,
                None => default_l_y(&p, t_max)?,
            };
            let y = YGrid::new(l_y, cfg.m)?;
            let preset = Preset::parse(&cfg.preset, cfg.seed)?;
            let mut field0 = preset_field(&p, g, y, preset)?;
            if let Preset::ProjectedNoise { .. } = preset {
                project_field(&p, &mut field0)?;
            }
            let lo = times.iter().copied().find(|t| *t > 0.0).unwrap_or(0.0);
            let opts =
                EvolveOptions { fit_window: Some((lo, t_max)), keep_snapshots: cfg.wants(Format::Bin), ..Default::default() };
            let rec = evolve_field(&p, &field0, &times, opts)?;
            if cfg.wants(Format::Csv) {
                let path = dir.join("evolve.csv");
                let rows = (0..times.len()).map(|k| vec![rec.times[k], rec.residual[k], rec.norm_x[k]]);
                write_atomic(&path, csv("t,residual,norm_X", rows).as_bytes())?;
                files.push(path);
            }
            if cfg.wants(Format::Json) {
                let path = dir.join("evolve.json");
                let v = json!({ "preset": cfg.preset, "l_y": l_y, "m": cfg.m, "record": rec });
                write_atomic(&path, &json_bytes(&v)?)?;
                files.push(path);
            }
            if let Some(snaps) = &rec.snapshots {
                for (k, (phi, psi)) in snaps.iter().enumerate() {
                    let f = Field2D { phi: phi.clone(), psi: psi.clone(), ..field0.clone() };
                    let path = dir.join(format!("snapshot_{k:03}.bin"));
                    write_atomic(&path, &snapshot_bytes(&f, times[k]))?;
                    files.push(path);
                }
            }
            json!({ "decay_fit": rec.decay_fit, "final_residual": rec.residual.last() })
        }
        Command::Decay => {
            let g = build_grid(&p, cfg.n, cfg.l_override)?;
            let eta = cfg.eta.unwrap_or(0.3 * p.eps * p.eps);
            let times = cfg.times.clone().unwrap_or_else(|| (0..=40).map(|k| 25.0 * k as f64).collect());
            let (pair, _) = basis_at(&p, &g, eta)?;
            let basis = ResonantBasis::from_pair(&g, &pair)?;
            let u0 = project_out(&basis, &random_state(&p, &g, cfg.seed));
            let rep = offresonant_decay(&p, &g, eta, &u0, &times)?;
            if cfg.wants(Format::Csv) {
                let path = dir.join("decay.csv");
                let rows = rep.times.iter().zip(&rep.norms).map(|(t, v)| vec![*t, *v]);
                write_atomic(&path, csv("t,norm_X", rows).as_bytes())?;
                files.push(path);
            }
            if cfg.wants(Format::Json) {
                let path = dir.join("decay.json");
                write_atomic(&path, &json_bytes(&rep)?)?;
                files.push(path);
            }
            json!({ "eta": eta, "rate": rep.rate, "bound": rep.bound, "meets_bound": rep.meets_bound })
        }
    };
    Ok(RunOutcome { command: cmd.name(), files, summary })
}

/// Removes the resonant component of every η-block except η = 0, where the
/// Jordan pair is removed through the kernel duals.
fn project_field(p: &ModelParams, field: &mut Field2D) -> Result<()> {
    let (n, m) = (field.z_grid.n, field.y_grid.m);
    let zg = field.z_grid.clone();
    let zq = crate::resonance::zeta_quadruple(p, &zg);
    let gm = crate::resonance::pairing_matrix_complex(&zq, &zg);
    let mut modes: Vec<Vec<C64>> = (0..m).map(|_| vec![C64::new(0.0, 0.0); 2 * n]).collect();
    let mut col = vec![C64::new(0.0, 0.0); m];
    for (comp, data) in [&field.phi, &field.psi].into_iter().enumerate() {
        for i in 0..n {
            for j in 0..m {
                col[j] = data[j * n + i];
            }
            field.y_grid.fft(&mut col);
            for j in 0..m {
                modes[j][comp * n + i] = col[j];
            }
        }
    }
    let wn = field.y_grid.wavenumbers.clone();
    let projected: Vec<Result<Vec<C64>>> = crate::exec::Exec::default().map_range(m / 2 + 1, |j| {
        let s = &modes[j];
        if s.iter().all(|v| v.norm() == 0.0) {
            return Ok(s.clone());
        }
        if wn[j] == 0.0 {
            // solve the 2×2 Gram system against ζ₁*, ζ₂*
            let r =
                [crate::resonance::pair_stacked(&zg, s, &zq.zeta1_star), crate::resonance::pair_stacked(&zg, s, &zq.zeta2_star)];
            let det = gm[0][0] * gm[1][1] - gm[0][1] * gm[1][0];
            let x1 = (r[0] * gm[1][1] - r[1] * gm[1][0]) / det;
            let x2 = (r[1] * gm[0][0] - r[0] * gm[0][1]) / det;
            return Ok(s.iter().enumerate().map(|(i, v)| v - x1 * zq.zeta1[i] - x2 * zq.zeta2[i]).collect());
        }
        let (pair, _) = basis_at(p, &zg, wn[j].abs())?;
        let basis = ResonantBasis::from_pair(&zg, &pair)?;
        Ok(project_out(&basis, s))
    });
    for (j, r) in projected.into_iter().enumerate() {
        modes[j] = r?;
    }
    for j in m / 2 + 1..m {
        modes[j] = modes[m - j].iter().map(|v| v.conj()).collect();
    }
    for (comp, data) in [&mut field.phi, &mut field.psi].into_iter().enumerate() {
        for i in 0..n {
            for j in 0..m {
                col[j] = modes[j][comp * n + i];
            }
            field.y_grid.ifft(&mut col);
            for j in 0..m {
                data[j * n + i] = C64::new(col[j].re, 0.0);
            }
        }
    }
    Ok(())
}
