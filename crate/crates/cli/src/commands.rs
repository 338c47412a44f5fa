use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use pmlab::certify::{check_thm6, check_thm7, find_thm7_factor, lemma_suite, thm7_search, CertificationReport};
use pmlab::entropy::{coherent_information, measure, mutual_information};
use pmlab::json::{format_f64, to_string};
use pmlab::optimize::maximize_coherent_information;
use pmlab::par::map_indexed;
use pmlab::pmx::{load_process, save_process};
use pmlab::process::{build_three_relation_process, partial_swap, relabel_for_theorem6, validate};
use pmlab::tensor::sys;
use pmlab::{Execution, OptimizerConfig, ProcessMatrix, PurifiedProcess, PureVector, Role, ThreeRelationParams, C64};

use crate::config::{parse_grid, EnsembleArg, Family, Format, Psi, Settings};
use crate::CliError;

pub const CSV_HEADER: [&str; 6] = ["parameter", "I_B", "I_mutual", "I_B_LO", "restarts", "seed"];

const DEFAULT_GRID: &str = "0:1:0.05";
const DEFAULT_TRIALS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Build,
    Validate,
    Measure,
    Certify,
    Scan,
    Lemmas,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Validate => "validate",
            Command::Measure => "measure",
            Command::Certify => "certify",
            Command::Scan => "scan",
            Command::Lemmas => "lemmas",
        }
    }
}

/// Maps a library error to a usage error. Parameter errors name their own
/// field; anything else is charged to `field`.
fn usage(field: &'static str) -> impl Fn(pmlab::Error) -> CliError {
    move |e| match e {
        pmlab::Error::InvalidParameter { name, .. } => CliError::usage(name, e.to_string()),
        other => CliError::usage(field, other.to_string()),
    }
}

fn failed(e: pmlab::Error) -> CliError {
    match e {
        pmlab::Error::InvalidParameter { name, .. } => CliError::usage(name, e.to_string()),
        other => CliError::Failed(other.to_string()),
    }
}

enum Source {
    Purified(PurifiedProcess),
    File(ProcessMatrix),
}

impl Source {
    fn process(&self) -> &ProcessMatrix {
        match self {
            Source::Purified(wp) => wp.process(),
            Source::File(w) => w,
        }
    }

    fn purified(&self, what: &str) -> Result<&PurifiedProcess, CliError> {
        match self {
            Source::Purified(wp) => Ok(wp),
            Source::File(_) => Err(CliError::usage(
                "input",
                format!("{what} needs the purification, so build it from --family instead of a file"),
            )),
        }
    }
}

fn execution(s: &Settings) -> Execution {
    if s.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

/// Fills family defaults in place and checks the process flags.
fn resolve_family(s: &mut Settings) -> Result<(), CliError> {
    if s.input.is_some() {
        if s.family.is_some() {
            return Err(CliError::usage("input", "give either --input or --family, not both"));
        }
        return Ok(());
    }
    let family = s
        .family
        .ok_or_else(|| CliError::usage("family", "one of --family or --input is required"))?;
    s.d.get_or_insert(2);
    if family == Family::ThreeRelation {
        s.psi.get_or_insert(Psi::PhiPlus);
        s.phases.get_or_insert_with(|| vec![0.0; 3]);
        if s.phases.as_ref().is_some_and(|v| v.len() != 3) {
            return Err(CliError::usage("phases", "needs exactly three values"));
        }
        if s.alpha.as_ref().is_some_and(|v| v.len() != 3) {
            return Err(CliError::usage("alpha", "needs exactly three values"));
        }
        if s.alpha.is_some() && (s.theta.is_some() || s.phi.is_some()) {
            return Err(CliError::usage("alpha", "give either --alpha or --theta/--phi, not both"));
        }
    }
    Ok(())
}

fn three_relation_params(s: &Settings, theta: Option<f64>, phi: Option<f64>) -> Result<ThreeRelationParams, CliError> {
    let d = s.d.unwrap_or(2);
    let phases = s.phases.clone().unwrap_or_else(|| vec![0.0; 3]);
    let mags = match (&s.alpha, theta, phi) {
        (Some(a), _, _) => [a[0], a[1], a[2]],
        (None, Some(t), Some(f)) => [t.sin() * f.cos(), t.sin() * f.sin(), t.cos()],
        (None, None, _) => return Err(CliError::usage("theta", "three-relation needs --alpha or --theta and --phi")),
        (None, Some(_), None) => return Err(CliError::usage("phi", "three-relation needs --phi alongside --theta")),
    };
    let alpha = [0, 1, 2].map(|k| C64::from_polar(1.0, phases[k]) * mags[k]);
    let psi = match s.psi.unwrap_or_default() {
        Psi::PhiPlus => ThreeRelationParams::default_psi(d).map_err(usage("d"))?,
        Psi::Product => PureVector::basis(
            vec![
                sys("x", d, Role::Environment),
                sys("y", d, Role::Environment),
                sys("z", 1, Role::Environment),
            ],
            0,
        )
        .map_err(usage("d"))?,
    };
    ThreeRelationParams::new(alpha, psi, d).map_err(usage("alpha"))
}

fn build_source(s: &Settings, p: Option<f64>, angles: Option<(f64, f64)>) -> Result<Source, CliError> {
    if let Some(path) = &s.input {
        let (w, _) = load_process(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
        return Ok(Source::File(w));
    }
    let d = s.d.unwrap_or(2);
    match s.family {
        Some(Family::PartialSwap) => {
            let p = p.ok_or_else(|| CliError::usage("p", "partial-swap needs --p"))?;
            Ok(Source::Purified(partial_swap(p, d).map_err(usage("p"))?))
        }
        Some(Family::ThreeRelation) => {
            let (theta, phi) = angles.map_or((s.theta, s.phi), |(t, f)| (Some(t), Some(f)));
            let params = three_relation_params(s, theta, phi)?;
            Ok(Source::Purified(build_three_relation_process(&params).map_err(usage("alpha"))?))
        }
        None => Err(CliError::usage("family", "one of --family or --input is required")),
    }
}

/// Fills optimizer defaults into `s` and returns the config.
fn optimizer_config(s: &mut Settings, w: &ProcessMatrix, seed: u64) -> OptimizerConfig {
    let mut cfg = OptimizerConfig {
        restarts: *s.restarts.get_or_insert(32),
        budget: *s.budget.get_or_insert(2000),
        kept_dim: s.kept_dim,
        ancilla_dim: s.ancilla_dim,
        seed,
        execution: execution(s),
    };
    let dims = cfg.dims(w);
    s.kept_dim = Some(dims.kept_dim);
    s.ancilla_dim = Some(dims.ancilla_dim);
    cfg.kept_dim = s.kept_dim;
    cfg.ancilla_dim = s.ancilla_dim;
    cfg
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    config: &'a Settings,
    report: &'a T,
}

fn emit_json<T: Serialize>(s: &Settings, report: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_string(&Envelope { config: s, report }).map_err(|e| CliError::Failed(e.to_string()))?;
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| CliError::Failed(format!("{}: {e}", path.display()))),
        None => write_stdout(&(text + "\n")),
    }
}

/// Writes to stdout; a closed pipe on the reading side is not an error.
fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Failed(e.to_string())),
        _ => Ok(()),
    }
}

fn json_only(s: &Settings, cmd: Command) -> Result<(), CliError> {
    match s.format {
        Some(Format::Csv) => Err(CliError::usage(
            "format",
            format!("{} writes JSON; csv is only available for scan", cmd.name()),
        )),
        _ => Ok(()),
    }
}

/// Runs one command and reports whether every check passed.
pub fn run(cmd: Command, mut s: Settings) -> Result<bool, CliError> {
    if let Some(c) = &s.command {
        if c != cmd.name() {
            return Err(CliError::usage(
                "command",
                format!("config was written for `{c}`, not `{}`", cmd.name()),
            ));
        }
    }
    s.command = Some(cmd.name().to_string());
    s.config = None;
    match cmd {
        Command::Build => build(s),
        Command::Validate => validate_cmd(s),
        Command::Measure => measure_cmd(s),
        Command::Certify => certify(s),
        Command::Scan => scan(s),
        Command::Lemmas => lemmas(s),
    }
}

#[derive(Serialize)]
struct Built<'a> {
    output: &'a Path,
    validity: pmlab::ValidityReport,
}

fn build(mut s: Settings) -> Result<bool, CliError> {
    json_only(&s, Command::Build)?;
    if s.input.is_some() {
        return Err(CliError::usage("input", "build constructs a process; use --family"));
    }
    resolve_family(&mut s)?;
    s.format.get_or_insert(Format::Json);
    let out: PathBuf = s
        .out
        .clone()
        .ok_or_else(|| CliError::usage("out", "build needs --out for the process file"))?;
    let src = build_source(&s, s.p, None)?;
    let w = src.process();
    let validity = validate(w).map_err(failed)?;
    let config = serde_json::to_value(&s).map_err(|e| CliError::Failed(e.to_string()))?;
    save_process(&out, w, Some(&config)).map_err(|e| CliError::Failed(format!("{}: {e}", out.display())))?;
    let valid = validity.valid;
    emit_json(&s, &Built { output: &out, validity }, None)?;
    Ok(valid)
}

fn validate_cmd(mut s: Settings) -> Result<bool, CliError> {
    json_only(&s, Command::Validate)?;
    resolve_family(&mut s)?;
    s.format.get_or_insert(Format::Json);
    let src = build_source(&s, s.p, None)?;
    let report = validate(src.process()).map_err(failed)?;
    if !report.valid {
        eprintln!(
            "invalid process: L_V residual {}, min eigenvalue {}, |Tr - 1| {}",
            format_f64(report.lv_residual),
            format_f64(report.min_eigenvalue),
            format_f64(report.trace_deviation)
        );
    }
    emit_json(&s, &report, s.out.as_deref())?;
    Ok(report.valid)
}

fn measure_cmd(mut s: Settings) -> Result<bool, CliError> {
    json_only(&s, Command::Measure)?;
    resolve_family(&mut s)?;
    s.format.get_or_insert(Format::Json);
    let src = build_source(&s, s.p, None)?;
    let report = measure(src.process().op(), &["b1", "b2"], &["a1", "a2"]).map_err(failed)?;
    emit_json(&s, &report, s.out.as_deref())?;
    Ok(true)
}

fn certify(mut s: Settings) -> Result<bool, CliError> {
    json_only(&s, Command::Certify)?;
    resolve_family(&mut s)?;
    s.format.get_or_insert(Format::Json);
    let theorem = s.theorem.ok_or_else(|| CliError::usage("theorem", "certify needs --theorem 6 or 7"))?;
    let src = build_source(&s, s.p, None)?;
    let wp = src.purified("certify")?;
    let report: CertificationReport = match theorem {
        6 => {
            let seed = s.seed_required("certify --theorem 6")?;
            // the three-relation family meets the hypotheses only after relabeling
            let relabeled;
            let wp = if s.family == Some(Family::ThreeRelation) {
                relabeled = relabel_for_theorem6(wp).map_err(failed)?;
                &relabeled
            } else {
                wp
            };
            let default_e0 = if s.family == Some(Family::ThreeRelation) { "e0" } else { "e1" };
            let e0 = s.e0.get_or_insert_with(|| vec![default_e0.to_string()]).clone();
            let e0: Vec<&str> = e0.iter().map(String::as_str).collect();
            let cfg = optimizer_config(&mut s, wp.process(), seed);
            check_thm6(wp, &e0, Some(&cfg)).map_err(usage("e0"))?
        }
        7 => {
            let mut report = match &s.f {
                Some(f) => {
                    let f: Vec<&str> = f.iter().map(String::as_str).collect();
                    check_thm7(wp, &f).map_err(usage("f"))?
                }
                None => match find_thm7_factor(wp).map_err(failed)? {
                    Some(r) => r,
                    None => thm7_search(wp)
                        .map_err(failed)?
                        .into_iter()
                        .next()
                        .ok_or_else(|| CliError::Failed("no environment factors to search".into()))?,
                },
            };
            s.f = Some(report.subsystems.selected.clone());
            // observed LO maximum, reported but not judged
            if let Some(seed) = s.seed {
                let cfg = optimizer_config(&mut s, wp.process(), seed);
                report.evidence = Some(maximize_coherent_information(wp.process(), &cfg).map_err(failed)?);
            }
            report
        }
        other => return Err(CliError::usage("theorem", format!("{other} is not 6 or 7"))),
    };
    emit_json(&s, &report, s.out.as_deref())?;
    Ok(report.conclusion_pass)
}

#[derive(Clone, Debug, Serialize)]
struct Row {
    parameter: String,
    #[serde(rename = "I_B")]
    i_b: f64,
    #[serde(rename = "I_mutual")]
    i_mutual: f64,
    #[serde(rename = "I_B_LO")]
    i_b_lo: f64,
    restarts: usize,
    seed: u64,
    #[serde(skip)]
    valid: bool,
}

/// Row label, then either `p` or `(θ, φ)`.
type GridPoint = (String, Option<f64>, Option<(f64, f64)>);

#[derive(Serialize)]
struct ScanReport<'a> {
    rows: &'a [Row],
}

fn scan(mut s: Settings) -> Result<bool, CliError> {
    if s.input.is_some() {
        return Err(CliError::usage("input", "scan sweeps a family; use --family"));
    }
    resolve_family(&mut s)?;
    let format = *s.format.get_or_insert(Format::Csv);
    let seed = s.seed_required("scan")?;
    let points: Vec<GridPoint> = match s.family {
        Some(Family::PartialSwap) => {
            let grid = s.grid.get_or_insert_with(|| DEFAULT_GRID.to_string()).clone();
            parse_grid("grid", &grid)?
                .into_iter()
                .map(|p| (format_f64(p), Some(p), None))
                .collect()
        }
        _ => {
            let axis = |grid: &Option<String>, single: Option<f64>, field: &'static str| -> Result<Vec<f64>, CliError> {
                match (grid, single) {
                    (Some(g), _) => parse_grid(field, g),
                    (None, Some(v)) => Ok(vec![v]),
                    (None, None) => Err(CliError::usage(
                        field,
                        "three-relation scan needs a grid or a fixed angle for both theta and phi",
                    )),
                }
            };
            if s.alpha.is_some() {
                return Err(CliError::usage("alpha", "scan sweeps angles; use --theta-grid/--phi-grid"));
            }
            let thetas = axis(&s.theta_grid, s.theta, "theta_grid")?;
            let phis = axis(&s.phi_grid, s.phi, "phi_grid")?;
            thetas
                .iter()
                .flat_map(|&t| phis.iter().map(move |&f| (format!("{}:{}", format_f64(t), format_f64(f)), None, Some((t, f)))))
                .collect()
        }
    };
    // resolve optimizer settings once, against the first point
    let first = build_source(&s, points[0].1, points[0].2)?;
    let cfg = optimizer_config(&mut s, first.process(), seed);
    let settings = &s;
    let rows: Vec<Result<Row, CliError>> = map_indexed(execution(settings), points.len(), |k| {
        let (label, p, angles) = &points[k];
        let src = build_source(settings, *p, *angles)?;
        let w = src.process();
        let op = w.op();
        let valid = validate(w).map_err(failed)?.valid;
        Ok(Row {
            parameter: label.clone(),
            i_b: coherent_information(op, &["b1", "b2"], &["a1", "a2"]).map_err(failed)?,
            i_mutual: mutual_information(op, &["a1", "a2"], &["b1", "b2"]).map_err(failed)?,
            i_b_lo: maximize_coherent_information(w, &cfg).map_err(failed)?.best_value,
            restarts: cfg.restarts,
            seed,
            valid,
        })
    });
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_, _>>()?;
    let all_valid = rows.iter().all(|r| r.valid);
    match format {
        Format::Json => emit_json(&s, &ScanReport { rows: &rows }, s.out.as_deref())?,
        Format::Csv => {
            let csv = scan_csv(&rows)?;
            match &s.out {
                Some(path) => {
                    fs::write(path, csv).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
                    let sidecar = config_sidecar(path);
                    let text = to_string(&s).map_err(|e| CliError::Failed(e.to_string()))?;
                    fs::write(&sidecar, text + "\n")
                        .map_err(|e| CliError::Failed(format!("{}: {e}", sidecar.display())))?;
                }
                None => {
                    write_stdout(&csv)?;
                    let text = to_string(&s).map_err(|e| CliError::Failed(e.to_string()))?;
                    eprintln!("{text}");
                }
            }
        }
    }
    Ok(all_valid)
}

/// `<out>.config.json` next to a CSV file.
pub fn config_sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".config.json");
    PathBuf::from(name)
}

fn scan_csv(rows: &[Row]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Failed(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            format_f64(r.i_b),
            format_f64(r.i_mutual),
            format_f64(r.i_b_lo),
            r.restarts.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn lemmas(mut s: Settings) -> Result<bool, CliError> {
    json_only(&s, Command::Lemmas)?;
    s.format.get_or_insert(Format::Json);
    let seed = s.seed_required("lemmas")?;
    let trials = *s.trials.get_or_insert(DEFAULT_TRIALS);
    let dims = s.dims.get_or_insert_with(|| vec![2, 3, 4]).clone();
    let ensemble = *s.ensemble.get_or_insert(EnsembleArg::Generic);
    let report = lemma_suite(seed, trials, &dims, ensemble.into(), execution(&s)).map_err(failed)?;
    emit_json(&s, &report, s.out.as_deref())?;
    Ok(report.all_pass)
}
