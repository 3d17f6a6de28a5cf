use std::f64::consts::PI;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use holonomy_core::bundle::{canonical_amplitude, horizontal_lift_with};
use holonomy_core::dynamics::{evolve, qubit_axis, qubit_reference, qubit_run, speed_limit_with};
use holonomy_core::invariants::{check_isoholonomic_with, eigenphases_with, geometric_phase, wilson_loop, CheckOptions};
use holonomy_core::io::{self, AmplitudeFile, CurveFile, MatrixFile, PlanManifest};
use holonomy_core::spectra::spectral_decompose;
use holonomy_core::synthesis::{saturation_report, synthesize, DEFAULT_SAMPLES};
use holonomy_core::{
    random, Amplitude, DensityOperator, EigenprojectorBasis, Error, GaugeElement, IsoReport, OperatorCurve, Result,
    SpectralBound,
};
use log::{info, warn};
use serde::Serialize;

use crate::args::{CheckArgs, Common, EvolveArgs, LiftArgs, QubitDemoArgs, SynthesizeArgs};

const DEFAULT_CURVE_SAMPLES: usize = 2001;

pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_state(path: &Path, gap_tol: f64) -> Result<DensityOperator> {
    let file: MatrixFile = io::read_json(path)?;
    spectral_decompose(&file.to_matrix()?, gap_tol)
}

fn load_curve(path: &Path) -> Result<OperatorCurve> {
    io::read_json::<CurveFile>(path)?.to_curve()
}

fn initial_amplitude(curve: &OperatorCurve, amplitude: Option<&Amplitude>, gap_tol: f64) -> Result<Amplitude> {
    match amplitude {
        Some(w) => Ok(w.clone()),
        None => {
            let rho = spectral_decompose(curve.first(), gap_tol)?;
            canonical_amplitude(&rho, &EigenprojectorBasis::standard(rho.m.clone()))
        }
    }
}

fn check_one(path: &Path, w0: Option<&Amplitude>, alpha: Option<&SpectralBound>, opts: CheckOptions) -> Result<IsoReport> {
    let curve = load_curve(path)?;
    let w = initial_amplitude(&curve, w0, opts.gap_tol)?;
    let report = check_isoholonomic_with(&curve, &w, alpha, opts)?;
    info!("{}: L = {:.12}, iHB = {:.12}, slack = {:.3e}", path.display(), report.length, report.ihb, report.slack);
    Ok(report)
}

#[derive(Serialize)]
struct BatchEntry {
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<IsoReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    exit: u8,
}

pub fn check(common: &Common, args: &CheckArgs) -> Result<u8> {
    let w0 = match &args.amplitude {
        Some(p) => Some(io::read_json::<AmplitudeFile>(p)?.initial()?),
        None => None,
    };
    let alpha = args.alpha.clone().map(SpectralBound::new).transpose()?;
    let opts = CheckOptions { gap_tol: common.gap_tol, phase_tol: common.phase_tol };

    if let [single] = args.curves.as_slice() {
        let report = check_one(single, w0.as_ref(), alpha.as_ref(), opts)?;
        emit(common.out.as_deref(), &io::to_json_lenient(&report)?)?;
        return Ok(0);
    }

    let results: Mutex<Vec<Option<Result<IsoReport>>>> = Mutex::new(vec![None; args.curves.len()]);
    let next = AtomicUsize::new(0);
    let workers = args.jobs.clamp(1, args.curves.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = args.curves.get(k) else { break };
                let r = check_one(path, w0.as_ref(), alpha.as_ref(), opts);
                results.lock().expect("no poisoned workers")[k] = Some(r);
            });
        }
    });
    let results = results.into_inner().expect("no poisoned workers");
    let mut code = 0;
    let entries: Vec<BatchEntry> = args
        .curves
        .iter()
        .zip(results)
        .map(|(path, r)| {
            let file = path.display().to_string();
            match r.expect("every file is processed") {
                Ok(report) => BatchEntry { file, report: Some(report), error: None, exit: 0 },
                Err(e) => {
                    warn!("{file}: {e}");
                    let exit = exit_code(&e);
                    code = code.max(exit);
                    BatchEntry { file, report: None, error: Some(e.to_string()), exit }
                }
            }
        })
        .collect();
    emit(common.out.as_deref(), &io::to_json_lenient(&entries)?)?;
    Ok(code)
}

pub fn evolve_cmd(common: &Common, args: &EvolveArgs) -> Result<u8> {
    let rho = load_state(&args.state, common.gap_tol)?;
    let sched = io::read_json::<CurveFile>(&args.hamiltonian)?.to_schedule()?;
    if sched.dim() != rho.dim() {
        return Err(Error::DimMismatch { expected: rho.dim(), found: sched.dim() });
    }
    let ev = evolve(&rho, &sched)?;
    if let Some(out) = &common.out {
        io::write_json(out, &CurveFile::from_curve(&ev.states))?;
        info!("wrote {} samples to {}", ev.states.len(), out.display());
    }
    let w0 = canonical_amplitude(&rho, &EigenprojectorBasis::standard(rho.m.clone()))?;
    let report = speed_limit_with(&ev.states, &sched, &w0, common.gap_tol, common.phase_tol)?;
    emit(args.report.as_deref(), &io::to_json(&report)?)?;
    Ok(0)
}

pub fn lift(common: &Common, args: &LiftArgs) -> Result<u8> {
    let curve = load_curve(&args.curve)?;
    let w0 = match &args.amplitude {
        Some(p) => io::read_json::<AmplitudeFile>(p)?.initial()?,
        None => initial_amplitude(&curve, None, common.gap_tol)?,
    };
    let lift = horizontal_lift_with(&curve, &w0, common.gap_tol)?;
    info!("connection residual {:.3e}", lift.connection_residual()?);
    emit(common.out.as_deref(), &io::to_json(&AmplitudeFile::from_lift(&lift))?)?;
    Ok(0)
}

pub fn synthesize_cmd(common: &Common, args: &SynthesizeArgs) -> Result<u8> {
    let rho = load_state(&args.state, common.gap_tol)?;
    let basis = EigenprojectorBasis::standard(rho.m.clone());
    let w = canonical_amplitude(&rho, &basis)?;
    let target = match &args.target {
        Some(p) => GaugeElement::new(io::read_json::<MatrixFile>(p)?.to_matrix()?, basis)?,
        None => {
            let mut rng = random::rng(common.seed);
            GaugeElement::new(random::block_unitary(&mut rng, rho.m.as_slice()), basis)?
        }
    };
    let dim = args.dim.unwrap_or_else(|| rho.dim().max(2 * rho.rank()));
    let samples = common.samples.unwrap_or(DEFAULT_SAMPLES);
    let plan = synthesize(&rho, &w, &target, args.tau, dim, samples)?;
    let report = saturation_report(&plan)?;
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Parse(format!("{}: {e}", dir.display())))?;
        io::write_json(dir.join("schedule.json"), &CurveFile::from_schedule(&plan.schedule))?;
        io::write_json(dir.join("coherent_schedule.json"), &CurveFile::from_schedule(&plan.coherent_schedule))?;
        io::write_json(dir.join("manifest.json"), &PlanManifest::from_plan(&plan))?;
        io::write_json(dir.join("verification.json"), &report)?;
        info!("wrote plan to {}", dir.display());
    }
    println!("{}", io::to_json(&report)?);
    let failures = report.failures();
    if failures.is_empty() {
        Ok(0)
    } else {
        Err(Error::SaturationFailed(failures.join("; ")))
    }
}

#[derive(Debug, Serialize)]
struct Row {
    quantity: &'static str,
    analytic: f64,
    numeric: f64,
    error: f64,
}

#[derive(Serialize)]
struct Demo {
    n3: f64,
    omega: f64,
    p0: f64,
    samples: usize,
    saturated: bool,
    rows: Vec<Row>,
}

pub fn qubit_demo(common: &Common, args: &QubitDemoArgs) -> Result<u8> {
    let samples = common.samples.unwrap_or(DEFAULT_CURVE_SAMPLES);
    let n = qubit_axis(args.n3);
    let reference = qubit_reference(n, args.omega, args.p0)?;
    let run = qubit_run(n, args.omega, args.p0, samples)?;
    let phases = eigenphases_with(&run.holonomy, common.phase_tol)?;
    let w = wilson_loop(&run.holonomy);
    let rho = spectral_decompose(run.evolution.states.first(), common.gap_tol)?;
    let w0 = canonical_amplitude(&rho, &EigenprojectorBasis::standard(rho.m.clone()))?;
    let geo = geometric_phase(&run.evolution.states, &w0)?;
    let angle = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    let row = |quantity, analytic: f64, numeric: f64| Row { quantity, analytic, numeric, error: (numeric - analytic).abs() };
    let r = &run.report;
    let rows = vec![
        Row { error: angle(phases.blocks()[0][0], reference.phases[0]), ..row("phase_0", reference.phases[0], phases.blocks()[0][0]) },
        Row { error: angle(phases.blocks()[1][0], reference.phases[1]), ..row("phase_1", reference.phases[1], phases.blocks()[1][0]) },
        row("wilson_loop_re", reference.wilson_loop[0], w.re),
        row("wilson_loop_im", reference.wilson_loop[1], w.im),
        Row { error: angle(geo, reference.geometric_phase), ..row("geometric_phase", reference.geometric_phase, geo) },
        row("iHB", reference.ihb, r.ihb),
        row("L", reference.length, r.length),
        row("delta_E", reference.delta_e, r.delta_e),
        row("period", reference.period, r.tau),
        row("bound", reference.bound, r.bound),
        row("margin", reference.period - reference.bound, r.margin),
    ];
    let saturated = (reference.period - reference.bound).abs() <= 1e-12;
    let demo = Demo { n3: args.n3, omega: args.omega, p0: args.p0, samples, saturated, rows };
    let text = if args.csv { to_csv(&demo.rows)? } else { io::to_json(&demo)? };
    emit(common.out.as_deref(), text.trim_end())?;
    Ok(0)
}

fn to_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
