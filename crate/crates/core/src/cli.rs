//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check failed, 2 the input or the arguments
//! were unusable.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dirac_comb::{
    comb_bruteforce_gap_levels, comb_cell_transfer, match_roots, parse_comb, solve_tamm,
    solve_tamm_with, tamm_residual_impedance, CombSpec, TammLevel,
};
use crate::impedance::scattering_from_impedance;
use crate::matrices::{
    impedance_matrix_to_transfer, profile_transfer, rt_from_transfer, scattering_to_transfer,
    transfer_to_impedance_matrix, transfer_to_scattering, ImpedanceMatrix, Matrix2,
    ScatteringMatrix, TransferMatrix,
};
use crate::periodic::matrix_power_chebyshev;
use crate::potential::{characteristic_impedance, parse_profile, PotentialProfile};
use crate::roots::linspace;
use crate::{Error, PHYSICS_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Relative step applied to grid energies that coincide with a region potential.
pub const NUDGE: f64 = 1e-12;

const DEFAULT_TAMM_TOL: f64 = 1e-8;
const DEFAULT_TAMM_GRID: usize = 4000;
const DEFAULT_SPECTRUM_GRID: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "qimp", version, about = "1D quantum scattering via transfer matrices and wave impedance")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transmission and reflection over an energy grid.
    Spectrum(RunArgs),
    /// Surface (Tamm) levels of a finite Dirac comb.
    Tamm(RunArgs),
    /// Convert a T, S or Z matrix into all three representations.
    Convert(RunArgs),
    /// Run the invariant suite on a profile or comb.
    Validate(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Transfer,
    Impedance,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    Det,
    Residual,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub emin: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub emax: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_enum, default_value = "transfer")]
    pub method: Method,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn check(message: impl Into<String>) -> Self {
        Self { code: EXIT_CHECK_FAILED, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// What a command produced: the rendered document and the exit code.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

/// Parsed input file.
#[derive(Debug, Clone)]
pub enum InputDoc {
    Profile(PotentialProfile),
    Comb(CombSpec),
    Matrix(MatrixDoc),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatrixKind {
    T,
    S,
    Z,
}

/// `{"matrix": {"kind": "T", "entries": [[[re, im], ...]], "z_left": [re, im], "z_right": [re, im]}}`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub kind: MatrixKind,
    pub entries: Matrix2,
    pub z_left: Complex64,
    pub z_right: Complex64,
}

#[derive(Deserialize)]
struct MatrixWrapper {
    matrix: MatrixDoc,
}

pub fn load_input(text: &str) -> Result<InputDoc, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        CliError::input(format!("syntax error at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    if value.get("comb").is_some() {
        return parse_comb(text).map(InputDoc::Comb).map_err(|e| CliError::input(e.to_string()));
    }
    if value.get("matrix").is_some() {
        let w: MatrixWrapper =
            serde_json::from_value(value).map_err(|e| CliError::input(format!("matrix document: {e}")))?;
        let m = w.matrix;
        if !(m.entries.is_finite() && m.z_left.is_finite() && m.z_right.is_finite()) {
            return Err(CliError::input("matrix document contains non-finite numbers"));
        }
        return Ok(InputDoc::Matrix(m));
    }
    let parsed = parse_profile(text).map_err(|e| CliError::input(e.to_string()))?;
    for w in &parsed.warnings {
        log::warn!("{w}");
    }
    Ok(InputDoc::Profile(parsed.profile))
}

fn read_input(args: &RunArgs) -> Result<InputDoc, CliError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", args.input.display())))?;
    load_input(&text)
}

/// Entry point used by the binary: parses `argv`, runs, writes output.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let args = match &cli.command {
        Command::Spectrum(a) | Command::Tamm(a) | Command::Convert(a) | Command::Validate(a) => a.clone(),
    };
    match run(&cli.command) {
        Ok(out) => {
            if let Err(e) = emit(&args, &out.text) {
                eprintln!("error: {e}");
                return EXIT_INPUT;
            }
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn emit(args: &RunArgs, text: &str) -> Result<(), CliError> {
    match &args.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Tamm(a) => cmd_tamm(a),
        Command::Convert(a) => cmd_convert(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Profile to scan plus, for combs, the spec that supplies the cell χ.
fn scattering_target(doc: InputDoc) -> Result<(PotentialProfile, Option<CombSpec>), CliError> {
    match doc {
        InputDoc::Profile(p) => Ok((p, None)),
        InputDoc::Comb(c) => Ok((c.to_profile(), Some(c))),
        InputDoc::Matrix(_) => Err(CliError::input("expected a profile or comb document, found a matrix")),
    }
}

fn tolerance(args: &RunArgs, default: f64) -> Result<f64, CliError> {
    match args.tol {
        Some(t) if !(t.is_finite() && t > 0.0) => Err(CliError::input(format!("--tol must be positive, got {t}"))),
        Some(t) => Ok(t),
        None => Ok(default),
    }
}

/// Energy grid for scattering scans. Defaults cover `[U_max + 0.01, U_max + 10]`
/// above the higher lead with 200 points.
fn scattering_grid(args: &RunArgs, profile: &PotentialProfile) -> Result<Vec<f64>, CliError> {
    let top = profile.left_lead.potential.max(profile.right_lead.potential);
    let emin = args.emin.unwrap_or(top + 0.01);
    let emax = args.emax.unwrap_or(top + 10.0);
    let grid = args.grid.unwrap_or(DEFAULT_SPECTRUM_GRID);
    check_grid(emin, emax, grid, 2)?;
    Ok(linspace(emin, emax, grid))
}

fn check_grid(emin: f64, emax: f64, grid: usize, min_grid: usize) -> Result<(), CliError> {
    if !(emin.is_finite() && emax.is_finite() && emin < emax) {
        return Err(CliError::input(format!("need finite --emin < --emax, got {emin} and {emax}")));
    }
    if grid < min_grid {
        return Err(CliError::input(format!("--grid must be at least {min_grid}, got {grid}")));
    }
    Ok(())
}

/// Moves `energy` off every region potential by a relative `NUDGE`.
/// Returns the energy to use and whether it moved.
pub fn nudge_energy(energy: f64, profile: &PotentialProfile) -> (f64, bool) {
    let potentials = profile.region_potentials();
    let mut e = energy;
    let mut moved = false;
    while potentials.contains(&e) {
        e += NUDGE * e.abs().max(1.0);
        moved = true;
    }
    if moved {
        log::warn!("energy {energy} coincides with a region potential; evaluated at {e}");
    }
    (e, moved)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "T")]
    pub transmission: f64,
    #[serde(rename = "R")]
    pub reflection: f64,
    pub unitarity_defect: f64,
    pub chi_re: f64,
    pub chi_im: f64,
    pub in_gap: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub method_discrepancy: Option<f64>,
}

/// `(T, R, t, r)` with `T = Re z_R / Re z_L · |t|²`.
fn probabilities(
    profile: &PotentialProfile,
    energy: f64,
    method: Method,
) -> Result<(f64, f64, Complex64, Complex64), Error> {
    let u = profile.units;
    let zl = characteristic_impedance(energy, profile.left_lead.potential, u);
    let zr = characteristic_impedance(energy, profile.right_lead.potential, u);
    let (t, r) = match method {
        Method::Impedance => scattering_from_impedance(profile, energy)?,
        _ => rt_from_transfer(&profile_transfer(profile, energy)?)?,
    };
    Ok((zr.re / zl.re * t.norm_sqr(), r.norm_sqr(), t, r))
}

fn spectrum_row(
    profile: &PotentialProfile,
    comb: Option<&CombSpec>,
    energy: f64,
    method: Method,
) -> Result<(SpectrumRow, bool), Error> {
    let (e, nudged) = nudge_energy(energy, profile);
    let chi = match comb {
        Some(c) => Complex64::new(c.quantities(e)?.chi(), 0.0),
        None => profile_transfer(profile, e)?.half_trace(),
    };
    let mut row = SpectrumRow {
        energy: e,
        transmission: 0.0,
        reflection: 1.0,
        unitarity_defect: 0.0,
        chi_re: chi.re,
        chi_im: chi.im,
        in_gap: chi.re.abs() > 1.0,
        method_discrepancy: None,
    };
    let top = profile.left_lead.potential.max(profile.right_lead.potential);
    if e < top {
        // no flux reaches the far lead (or none arrives): total reflection
        if method == Method::Both {
            row.method_discrepancy = Some(0.0);
        }
        return Ok((row, nudged));
    }
    let primary = if method == Method::Both { Method::Transfer } else { method };
    let (tp, rp, t, r) = probabilities(profile, e, primary)?;
    row.transmission = tp;
    row.reflection = rp;
    row.unitarity_defect = (tp + rp - 1.0).abs();
    if method == Method::Both {
        let (_, _, t2, r2) = probabilities(profile, e, Method::Impedance)?;
        row.method_discrepancy = Some((t - t2).norm().max((r - r2).norm()));
    }
    Ok((row, nudged))
}

pub fn spectrum_rows(
    profile: &PotentialProfile,
    comb: Option<&CombSpec>,
    energies: &[f64],
    method: Method,
) -> Result<Vec<SpectrumRow>, CliError> {
    let rows: Vec<Result<(SpectrumRow, bool), Error>> =
        energies.par_iter().map(|&e| spectrum_row(profile, comb, e, method)).collect();
    rows.into_iter()
        .zip(energies)
        .map(|(r, e)| r.map(|x| x.0).map_err(|err| CliError::check(format!("E = {e}: {err}"))))
        .collect()
}

/// Shortest round-trip decimal; empty for non-finite values.
fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn render_spectrum(rows: &[SpectrumRow], format: Format, with_discrepancy: bool) -> String {
    match format {
        Format::Json => {
            let doc = json!({ "rows": rows });
            serde_json::to_string_pretty(&doc).expect("rows serialize") + "\n"
        }
        Format::Csv => {
            let mut out = String::from("E,T,R,unitarity_defect,chi_re,chi_im,in_gap");
            if with_discrepancy {
                out.push_str(",method_discrepancy");
            }
            out.push('\n');
            for r in rows {
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{}",
                    num(r.energy),
                    num(r.transmission),
                    num(r.reflection),
                    num(r.unitarity_defect),
                    num(r.chi_re),
                    num(r.chi_im),
                    r.in_gap
                );
                if with_discrepancy {
                    let _ = write!(out, ",{}", opt_num(r.method_discrepancy));
                }
                out.push('\n');
            }
            out
        }
    }
}

fn cmd_spectrum(args: &RunArgs) -> Result<Outcome, CliError> {
    let (profile, comb) = scattering_target(read_input(args)?)?;
    let tol = tolerance(args, PHYSICS_TOL)?;
    let energies = scattering_grid(args, &profile)?;
    let rows = spectrum_rows(&profile, comb.as_ref(), &energies, args.method)?;
    let mut code = EXIT_OK;
    if args.method == Method::Both {
        let worst = rows.iter().filter_map(|r| r.method_discrepancy).fold(0.0, f64::max);
        if !(worst <= tol) {
            log::error!("transfer and impedance results differ by {worst} (tolerance {tol})");
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(Outcome { text: render_spectrum(&rows, args.format, args.method == Method::Both), code })
}

/// One Tamm level with the optional brute-force comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TammRow {
    pub level: TammLevel,
    pub bruteforce: Option<f64>,
}

fn tamm_range(args: &RunArgs, spec: &CombSpec) -> Result<(f64, f64, usize), CliError> {
    let emin = args.emin.unwrap_or(0.0);
    let emax = args.emax.unwrap_or(spec.lead_potential);
    let grid = args.grid.unwrap_or(DEFAULT_TAMM_GRID);
    check_grid(emin, emax, grid, crate::dirac_comb::MIN_GRID)?;
    if emin < 0.0 || emax > spec.lead_potential {
        return Err(CliError::input(format!(
            "energy range must lie inside (0, U_E = {})",
            spec.lead_potential
        )));
    }
    Ok((emin, emax, grid))
}

fn tamm_levels(spec: &CombSpec, range: (f64, f64), grid: usize, fault: Option<Fault>) -> Result<Vec<TammLevel>, CliError> {
    let levels = match fault {
        Some(Fault::Residual) => solve_tamm_with(spec, range, grid, |e| {
            tamm_residual_impedance(e, spec).ok().map(|r| r + 0.25 * e.sin())
        }),
        _ => solve_tamm(spec, range, grid),
    };
    levels.map_err(|e| CliError::input(e.to_string()))
}

/// Brute-force comparison: the worst pairwise distance, or `None` when the
/// root counts differ.
fn verify_levels(
    spec: &CombSpec,
    levels: &[TammLevel],
    range: (f64, f64),
    grid: usize,
) -> Result<(Vec<Option<f64>>, Option<f64>), CliError> {
    let lo = range.0.max(1e-12 * spec.lead_potential);
    let brute = comb_bruteforce_gap_levels(spec, (lo, range.1), grid).map_err(|e| CliError::input(e.to_string()))?;
    let brute_e: Vec<f64> = brute.iter().map(|l| l.energy).collect();
    let mut partner = Vec::with_capacity(levels.len());
    for l in levels {
        let best = brute_e.iter().copied().min_by(|a, b| (a - l.energy).abs().total_cmp(&(b - l.energy).abs()));
        partner.push(best);
    }
    let ours: Vec<f64> = levels.iter().map(|l| l.energy).collect();
    let worst = (brute_e.len() == ours.len()).then(|| match_roots(&ours, &brute_e).into_iter().fold(0.0, f64::max));
    Ok((partner, worst))
}

pub fn render_tamm(rows: &[TammRow], format: Format, verify: bool) -> String {
    match format {
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v = json!({
                        "E": r.level.energy,
                        "residual": finite_or_null(r.level.residual),
                        "method": r.level.method,
                        "cross_form_discrepancy": r.level.cross_form_discrepancy.map_or(Value::Null, finite_or_null),
                    });
                    if verify {
                        v["bruteforce_E"] = r.bruteforce.map_or(Value::Null, finite_or_null);
                    }
                    v
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "levels": items })).expect("levels serialize") + "\n"
        }
        Format::Csv => {
            let mut out = String::from("E,residual,method,cross_form_discrepancy");
            if verify {
                out.push_str(",bruteforce_E");
            }
            out.push('\n');
            for r in rows {
                let method = serde_json::to_value(r.level.method).expect("tag serializes");
                let _ = write!(
                    out,
                    "{},{},{},{}",
                    num(r.level.energy),
                    num(r.level.residual),
                    method.as_str().unwrap_or_default(),
                    opt_num(r.level.cross_form_discrepancy)
                );
                if verify {
                    let _ = write!(out, ",{}", opt_num(r.bruteforce));
                }
                out.push('\n');
            }
            out
        }
    }
}

fn cmd_tamm(args: &RunArgs) -> Result<Outcome, CliError> {
    let spec = match read_input(args)? {
        InputDoc::Comb(c) => c,
        _ => return Err(CliError::input("tamm needs a comb document ({\"comb\": {...}})")),
    };
    let tol = tolerance(args, DEFAULT_TAMM_TOL)?;
    let (emin, emax, grid) = tamm_range(args, &spec)?;
    let levels = tamm_levels(&spec, (emin, emax), grid, args.inject_fault)?;
    let mut code = EXIT_OK;
    let mut rows: Vec<TammRow> = levels.iter().map(|&level| TammRow { level, bruteforce: None }).collect();
    if args.verify {
        let (partner, worst) = verify_levels(&spec, &levels, (emin, emax), grid)?;
        for (row, p) in rows.iter_mut().zip(partner) {
            row.bruteforce = p;
        }
        let cross = levels
            .iter()
            .map(|l| l.cross_form_discrepancy.unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max);
        match worst {
            None => {
                log::error!("root counts differ between the impedance form and the brute-force scan");
                code = EXIT_CHECK_FAILED;
            }
            Some(w) if !(w <= tol) => {
                log::error!("impedance form and brute force differ by {w} (tolerance {tol})");
                code = EXIT_CHECK_FAILED;
            }
            _ => {}
        }
        if !(cross <= tol) {
            log::error!("impedance and cot forms differ by {cross} (tolerance {tol})");
            code = EXIT_CHECK_FAILED;
        }
    }
    Ok(Outcome { text: render_tamm(&rows, args.format, args.verify), code })
}

/// All three representations of one matrix, with `r`, `t` and determinants.
/// Failed conversions are listed under `errors` with their physical reading.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Conversion {
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub transfer: Option<Matrix2>,
    #[serde(rename = "S", skip_serializing_if = "Option::is_none")]
    pub scattering: Option<Matrix2>,
    #[serde(rename = "Z", skip_serializing_if = "Option::is_none")]
    pub impedance: Option<Matrix2>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_t: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_s: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_z: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<Complex64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Complex64>,
    pub z_left: Complex64,
    pub z_right: Complex64,
    pub errors: Vec<String>,
}

pub fn convert_matrix(doc: &MatrixDoc) -> Conversion {
    let mut out = Conversion { z_left: doc.z_left, z_right: doc.z_right, ..Default::default() };
    let transfer = match doc.kind {
        MatrixKind::T => Ok(TransferMatrix::new(doc.entries, doc.z_left, doc.z_right)),
        MatrixKind::S => scattering_to_transfer(&ScatteringMatrix {
            inner: doc.entries,
            z_left: doc.z_left,
            z_right: doc.z_right,
        }),
        MatrixKind::Z => Ok(impedance_matrix_to_transfer(&ImpedanceMatrix {
            inner: doc.entries,
            z_left: doc.z_left,
            z_right: doc.z_right,
        })),
    };
    let t = match transfer {
        Ok(t) => t,
        Err(e) => {
            out.errors.push(format!("S → T: {e}"));
            out.scattering = Some(doc.entries);
            out.det_s = Some(doc.entries.det());
            return out;
        }
    };
    out.transfer = Some(t.inner);
    out.det_t = Some(t.det());
    let z = transfer_to_impedance_matrix(&t).inner;
    out.impedance = Some(z);
    out.det_z = Some(z.det());
    match transfer_to_scattering(&t) {
        Ok(s) => {
            out.scattering = Some(s.inner);
            out.det_s = Some(s.inner.det());
        }
        Err(e) => out.errors.push(format!("T → S: {e}")),
    }
    match rt_from_transfer(&t) {
        Ok((tt, r)) => {
            out.t = Some(tt);
            out.r = Some(r);
        }
        Err(e) => out.errors.push(format!("r, t: {e}")),
    }
    out
}

fn render_conversion(c: &Conversion, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(c).expect("conversion serializes") + "\n",
        Format::Csv => {
            let mut out = String::from("quantity,re,im\n");
            let mut put = |name: &str, v: Complex64| {
                let _ = writeln!(out, "{name},{},{}", num(v.re), num(v.im));
            };
            for (label, m) in [("T", c.transfer), ("S", c.scattering), ("Z", c.impedance)] {
                if let Some(m) = m {
                    for (i, v) in m.entries().into_iter().enumerate() {
                        put(&format!("{label}{}{}", i / 2 + 1, i % 2 + 1), v);
                    }
                }
            }
            for (name, v) in [("det_T", c.det_t), ("det_S", c.det_s), ("det_Z", c.det_z), ("t", c.t), ("r", c.r)] {
                if let Some(v) = v {
                    put(name, v);
                }
            }
            put("z_left", c.z_left);
            put("z_right", c.z_right);
            out
        }
    }
}

fn cmd_convert(args: &RunArgs) -> Result<Outcome, CliError> {
    let doc = match read_input(args)? {
        InputDoc::Matrix(m) => m,
        _ => return Err(CliError::input("convert needs a matrix document ({\"matrix\": {...}})")),
    };
    let conv = convert_matrix(&doc);
    for e in &conv.errors {
        log::error!("{e}");
    }
    let code = if conv.errors.is_empty() { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(Outcome { text: render_conversion(&conv, args.format), code })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub name: String,
    pub passed: bool,
    pub max_error: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl InvariantReport {
    fn new(name: &str, max_error: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: max_error <= tolerance, max_error, tolerance, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub invariants: Vec<InvariantReport>,
    pub nudged: Vec<f64>,
}

/// Relative distance between matrices: `max |a − b| / max(1, max |b|)`.
fn rel_diff(a: &Matrix2, b: &Matrix2) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1.0)
}

fn brute_power(t: &TransferMatrix, n: u32) -> TransferMatrix {
    let mut acc = *t;
    for _ in 1..n {
        acc = TransferMatrix::new(acc.inner * t.inner, t.z_left, t.z_right);
    }
    acc
}

/// Per-energy measurements for the invariant suite; `None` marks a check
/// that does not apply at that energy.
#[derive(Debug, Clone, Copy, Default)]
struct Sample {
    nudged: Option<f64>,
    unitarity: Option<f64>,
    det: f64,
    cross: Option<f64>,
    chebyshev: Option<f64>,
    round_trip: f64,
}

fn measure(profile: &PotentialProfile, comb: Option<&CombSpec>, energy: f64, fault: Option<Fault>) -> Result<Sample, Error> {
    let (e, moved) = nudge_energy(energy, profile);
    let mut s = Sample { nudged: moved.then_some(energy), ..Default::default() };
    let mut t = profile_transfer(profile, e)?;
    if fault == Some(Fault::Det) {
        t.inner = t.inner.scale(Complex64::new(1.001, 0.0));
    }
    let det_scale = (t.inner.m11 * t.inner.m22).norm() + (t.inner.m12 * t.inner.m21).norm();
    s.det = (t.det() - t.expected_det()).norm() / det_scale.max(1.0);

    let top = profile.left_lead.potential.max(profile.right_lead.potential);
    if e > top {
        let (tp, rp, ta, ra) = probabilities(profile, e, Method::Transfer)?;
        s.unitarity = Some((tp + rp - 1.0).abs());
        let (tb, rb) = scattering_from_impedance(profile, e)?;
        s.cross = Some((ta - tb).norm().max((ra - rb).norm()));
    }

    let cell = match comb {
        Some(c) if e > 0.0 => Some((comb_cell_transfer(e, c)?, c.cells)),
        Some(_) => None,
        None if t.z_left == t.z_right => Some((t, 4)),
        None => None,
    };
    if let Some((cell, n)) = cell {
        let mut worst: f64 = 0.0;
        for k in [2, 3, n.max(2)] {
            worst = match matrix_power_chebyshev(&cell, k) {
                Ok(cheb) => worst.max(rel_diff(&cheb.inner, &brute_power(&cell, k).inner)),
                Err(_) => f64::INFINITY,
            };
        }
        s.chebyshev = Some(worst);
    }

    let via_z = impedance_matrix_to_transfer(&transfer_to_impedance_matrix(&t));
    s.round_trip = rel_diff(&via_z.inner, &t.inner);
    if let Ok(sm) = transfer_to_scattering(&t) {
        let back = scattering_to_transfer(&sm)?;
        s.round_trip = s.round_trip.max(rel_diff(&back.inner, &t.inner));
    }
    Ok(s)
}

pub fn validate_target(
    profile: &PotentialProfile,
    comb: Option<&CombSpec>,
    energies: &[f64],
    tol: f64,
    fault: Option<Fault>,
) -> Result<ValidationReport, CliError> {
    let samples: Vec<Result<Sample, Error>> = energies.par_iter().map(|&e| measure(profile, comb, e, fault)).collect();
    let samples: Vec<Sample> = samples
        .into_iter()
        .zip(energies)
        .map(|(s, e)| s.map_err(|err| CliError::check(format!("E = {e}: {err}"))))
        .collect::<Result<_, _>>()?;

    let worst = |f: &dyn Fn(&Sample) -> Option<f64>| -> (f64, usize) {
        let vals: Vec<f64> = samples.iter().filter_map(f).collect();
        (vals.iter().copied().fold(0.0, f64::max), vals.len())
    };
    let mut invariants = Vec::new();
    let (u, n) = worst(&|s| s.unitarity);
    invariants.push(InvariantReport::new("unitarity", u, tol, format!("{n} propagating energies")));
    let (d, n) = worst(&|s| Some(s.det));
    invariants.push(InvariantReport::new("determinant", d, tol, format!("{n} energies, det T = z_R/z_L")));
    let (c, n) = worst(&|s| s.cross);
    invariants.push(InvariantReport::new("cross_formalism", c, tol, format!("{n} energies, transfer vs impedance")));
    let (ch, n) = worst(&|s| s.chebyshev);
    invariants.push(InvariantReport::new("chebyshev_power", ch, 1e-9, format!("{n} energies")));
    let (rt, n) = worst(&|s| Some(s.round_trip));
    invariants.push(InvariantReport::new("conversion_round_trip", rt, 1e-12, format!("{n} energies")));

    if let Some(spec) = comb {
        if spec.lead_potential > 0.0 {
            let range = (0.0, spec.lead_potential);
            let levels = tamm_levels(spec, range, DEFAULT_TAMM_GRID, fault)?;
            let (_, agreement) = verify_levels(spec, &levels, range, DEFAULT_TAMM_GRID)?;
            let cross = levels
                .iter()
                .map(|l| l.cross_form_discrepancy.unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max);
            let err = agreement.map_or(f64::INFINITY, |w| w.max(cross));
            invariants.push(InvariantReport::new(
                "tamm_agreement",
                err,
                DEFAULT_TAMM_TOL,
                format!("{} level(s), impedance form vs cot form vs brute force", levels.len()),
            ));
            let outside = levels
                .iter()
                .filter(|l| !spec.quantities(l.energy).is_ok_and(|q| q.chi().abs() > 1.0))
                .count();
            invariants.push(InvariantReport::new(
                "tamm_in_gap",
                outside as f64,
                0.0,
                "levels with |cos ξ + Ω sin ξ| ≤ 1".into(),
            ));
        }
    }

    let nudged = samples.iter().filter_map(|s| s.nudged).collect();
    let passed = invariants.iter().all(|i| i.passed);
    Ok(ValidationReport { passed, invariants, nudged })
}

fn render_validation(r: &ValidationReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(r).expect("report serializes") + "\n",
        Format::Csv => {
            let mut out = String::from("invariant,passed,max_error,tolerance\n");
            for i in &r.invariants {
                let _ = writeln!(out, "{},{},{},{}", i.name, i.passed, num(i.max_error), num(i.tolerance));
            }
            out
        }
    }
}

fn cmd_validate(args: &RunArgs) -> Result<Outcome, CliError> {
    let (profile, comb) = scattering_target(read_input(args)?)?;
    let tol = tolerance(args, PHYSICS_TOL)?;
    let energies = scattering_grid(args, &profile)?;
    let report = validate_target(&profile, comb.as_ref(), &energies, tol, args.inject_fault)?;
    for i in report.invariants.iter().filter(|i| !i.passed) {
        log::error!("invariant {} failed: {} > {}", i.name, i.max_error, i.tolerance);
    }
    let code = if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(Outcome { text: render_validation(&report, args.format), code })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::UnitSystem;

    fn barrier() -> PotentialProfile {
        PotentialProfile::new(0.0, vec![PotentialProfile::segment(1.0, 5.0)], 0.0, UnitSystem::default())
    }

    #[test]
    fn free_line_transmits_everything() {
        let p = PotentialProfile::free(0.0, UnitSystem::default());
        let rows = spectrum_rows(&p, None, &linspace(0.1, 5.0, 20), Method::Both).unwrap();
        for r in rows {
            assert!((r.transmission - 1.0).abs() < 1e-15 && r.reflection < 1e-15);
            assert_eq!(r.method_discrepancy, Some(0.0));
        }
    }

    #[test]
    fn barrier_transmission_rises_below_top() {
        let rows = spectrum_rows(&barrier(), None, &linspace(0.05, 4.95, 100), Method::Transfer).unwrap();
        assert!(rows.windows(2).all(|w| w[1].transmission > w[0].transmission));
    }

    #[test]
    fn energies_on_a_potential_are_nudged() {
        let p = barrier();
        let (e, moved) = nudge_energy(5.0, &p);
        assert!(moved && e > 5.0 && e - 5.0 < 1e-10);
        assert_eq!(nudge_energy(4.0, &p), (4.0, false));
        let rows = spectrum_rows(&p, None, &[5.0], Method::Both).unwrap();
        assert!(rows[0].unitarity_defect < 1e-10);
    }

    #[test]
    fn below_lead_rows_reflect_totally() {
        let p = PotentialProfile::new(0.0, vec![], 2.0, UnitSystem::default());
        let rows = spectrum_rows(&p, None, &[1.0], Method::Transfer).unwrap();
        assert_eq!((rows[0].transmission, rows[0].reflection), (0.0, 1.0));
    }

    #[test]
    fn comb_rows_use_cell_chi() {
        let spec = CombSpec::new(1.0, 1.0, 5, 0.0);
        let rows = spectrum_rows(&spec.to_profile(), Some(&spec), &linspace(0.1, 20.0, 50), Method::Transfer).unwrap();
        assert_eq!(rows.len(), 50);
        for r in &rows {
            let chi = spec.quantities(r.energy).unwrap().chi();
            assert_eq!(r.chi_re, chi);
            assert_eq!(r.in_gap, chi.abs() > 1.0);
        }
        assert!(rows.iter().any(|r| r.in_gap));
    }

    #[test]
    fn identity_conversion() {
        let one = Complex64::new(1.0, 0.0);
        let doc = MatrixDoc { kind: MatrixKind::T, entries: Matrix2::IDENTITY, z_left: one, z_right: one };
        let c = convert_matrix(&doc);
        assert!(c.errors.is_empty());
        assert_eq!(c.scattering, Some(Matrix2::IDENTITY));
        assert_eq!((c.t, c.r), (Some(one), Some(Complex64::new(0.0, 0.0))));
        let z = c.impedance.unwrap();
        assert_eq!(z, Matrix2::new(0.0.into(), (-1.0).into(), 1.0.into(), 0.0.into()));
        assert_eq!(c.det_z, Some(one));
    }

    #[test]
    fn singular_conversion_is_reported() {
        let zero = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let s = MatrixDoc { kind: MatrixKind::S, entries: Matrix2::new(zero, one, one, zero), z_left: one, z_right: one };
        let c = convert_matrix(&s);
        assert!(c.errors[0].contains("zero transmission"));
        let t = MatrixDoc { kind: MatrixKind::T, entries: Matrix2::new(zero, one, -one, zero), z_left: one, z_right: one };
        assert!(convert_matrix(&t).errors.iter().any(|e| e.contains("bound-state")));
    }

    #[test]
    fn input_kinds_are_detected() {
        assert!(matches!(load_input(r#"{"comb": {"alpha": -2, "l": 1, "N": 3, "U_E": 10}}"#), Ok(InputDoc::Comb(_))));
        assert!(matches!(load_input(&barrier().to_json()), Ok(InputDoc::Profile(_))));
        let m = r#"{"matrix": {"kind": "S", "entries": [[[1,0],[0,0]],[[0,0],[1,0]]], "z_left": [1,0], "z_right": [1,0]}}"#;
        assert!(matches!(load_input(m), Ok(InputDoc::Matrix(_))));
        assert_eq!(load_input("{").unwrap_err().code, EXIT_INPUT);
        assert_eq!(load_input(r#"{"comb": {"alpha": 1}}"#).unwrap_err().code, EXIT_INPUT);
    }

    #[test]
    fn validation_passes_and_detects_faults() {
        let p = barrier();
        let e = linspace(0.1, 12.0, 60);
        assert!(validate_target(&p, None, &e, PHYSICS_TOL, None).unwrap().passed);
        let bad = validate_target(&p, None, &e, PHYSICS_TOL, Some(Fault::Det)).unwrap();
        assert!(!bad.passed);
        let det = bad.invariants.iter().find(|i| i.name == "determinant").unwrap();
        assert!(!det.passed);
    }

    #[test]
    fn csv_numbers_round_trip() {
        assert_eq!(num(0.1 + 0.2).parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(num(1e-300).parse::<f64>().unwrap(), 1e-300);
        assert_eq!(num(f64::INFINITY), "");
    }
}
