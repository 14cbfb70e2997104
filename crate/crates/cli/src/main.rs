use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::LazyLock;

use blsw::cli_io::{error_line, load_config, run, Command};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "blsw", version = VERSION_LINE.as_str(), about = "Transverse linear stability of Benney-Luke line solitary waves")]
struct Cli {
    /// cap on worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// profile values, closed-form integrals and dE/dc
    Profile(Opts),
    /// seeded sampling of the symbol bounds
    SymbolsCheck(Opts),
    /// eigenvalues of the discretized operator at one transverse wavenumber
    Spectrum(Opts),
    /// resonant eigenvalue curve and its fitted constants
    Resonance(Opts),
    /// convergence of the scaled resonant eigenvalue to the KP-II value
    KpCompare(Opts),
    /// two-dimensional linear evolution against the modulation prediction
    Evolve(Opts),
    /// decay rate of data with the resonant part removed
    Decay(Opts),
}

/// Flags override values read from `--config`.
#[derive(Args, Debug, Default)]
struct Opts {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha_fraction: Option<f64>,
    /// z-grid points
    #[arg(long)]
    n: Option<usize>,
    /// z half-length
    #[arg(long)]
    l_override: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long)]
    n_eta: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    eta: Option<f64>,
    /// y-grid points
    #[arg(long)]
    m: Option<usize>,
    /// y half-length
    #[arg(long)]
    l_y: Option<f64>,
    /// comma-separated output times
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    /// gaussian-bump, gaussian-phase-bump, kernel-mode or projected-noise
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long)]
    kp_eta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    /// output directory
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// comma-separated subset of csv, json, bin
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<String>>,
}

static VERSION_LINE: LazyLock<String> =
    LazyLock::new(|| format!("{} (blsw library {})", env!("CARGO_PKG_VERSION"), blsw::VERSION));

impl Opts {
    fn overrides(&self, cmd: Command) -> Vec<(String, Value)> {
        let mut o = vec![("command".to_string(), json!(cmd))];
        let mut put = |k: &str, v: Option<Value>| {
            if let Some(v) = v {
                o.push((k.to_string(), v));
            }
        };
        put("a", self.a.map(|v| json!(v)));
        put("b", self.b.map(|v| json!(v)));
        put("c", self.c.map(|v| json!(v)));
        put("alpha_fraction", self.alpha_fraction.map(|v| json!(v)));
        put("n", self.n.map(|v| json!(v)));
        put("l_override", self.l_override.map(|v| json!(v)));
        put("eta_max", self.eta_max.map(|v| json!(v)));
        put("n_eta", self.n_eta.map(|v| json!(v)));
        put("eta", self.eta.map(|v| json!(v)));
        put("m", self.m.map(|v| json!(v)));
        put("l_y", self.l_y.map(|v| json!(v)));
        put("times", self.times.as_ref().map(|v| json!(v)));
        put("seed", self.seed.map(|v| json!(v)));
        put("preset", self.preset.as_ref().map(|v| json!(v)));
        put("eps_list", self.eps_list.as_ref().map(|v| json!(v)));
        put("kp_eta", self.kp_eta.map(|v| json!(v)));
        put("samples", self.samples.map(|v| json!(v)));
        put("output", self.output.as_ref().map(|v| json!(v)));
        put("formats", self.formats.as_ref().map(|v| json!(v)));
        o
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        blsw::exec::set_threads(t);
    }
    let (cmd, opts) = match &cli.cmd {
        Cmd::Profile(o) => (Command::Profile, o),
        Cmd::SymbolsCheck(o) => (Command::SymbolsCheck, o),
        Cmd::Spectrum(o) => (Command::Spectrum, o),
        Cmd::Resonance(o) => (Command::Resonance, o),
        Cmd::KpCompare(o) => (Command::KpCompare, o),
        Cmd::Evolve(o) => (Command::Evolve, o),
        Cmd::Decay(o) => (Command::Decay, o),
    };
    let result = load_config(opts.config.as_deref(), &opts.overrides(cmd)).and_then(|cfg| run(&cfg));
    match result {
        Ok(out) => {
            println!("{}", out.summary_line());
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_line(Some(cmd), &e));
            let code = e.exit_code() as u8;
            let report = anyhow::Error::new(e).context(format!("{} failed", cmd.name()));
            eprintln!("error: {report:#}");
            ExitCode::from(code)
        }
    }
}
