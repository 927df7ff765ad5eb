use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use cnrange::constrained::{
    ascend_invariance_lagrange, ascend_orthogonality, ascend_projected, epsilon_components,
    invariance_is_vacuous, min_modulus, sample_constrained_range, stabilizer_algebra, Constraint,
    ConstrainedResult,
};
use cnrange::flow::{ascend, Objective};
use cnrange::io::{parse_json, read_matrix, to_json_sig12, MatrixFile, StateFile};
use cnrange::linalg::{c_spectrum, haar_unitary_with, stream_rng};
use cnrange::local::{ascend_local, entanglement_distance, sample_local_range, state_psi3, state_psi4};
use cnrange::range::trace_boundary;
use cnrange::reversal::{
    kz, reversal_residual, reversibility_obstruction, search_reversal, z_rotation_reversal,
    AngleSolution, HamiltonianNormalForm,
};
use cnrange::{BoundaryOptions, ComplexMatrix, FlowConfig, LambdaSchedule, PureState, C64};

use crate::manifest::ManifestBuilder;
use crate::svg::{Plot, Series, Style};
use crate::{
    BoundaryArgs, Command, ConstrainedArgs, Family, FlowArgs, Method, Outcome, RadiusArgs,
    ReversalArgs, SampleArgs, ScanArgs,
};

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Boundary(a) => boundary(a),
        Command::Radius(a) => radius(a, "radius"),
        Command::LocalRadius(mut a) => {
            a.local = true;
            radius(a, "local-radius")
        }
        Command::EntanglementScan(a) => entanglement_scan(a),
        Command::Reversal(a) => reversal(a),
        Command::Constrained(a) => constrained(a),
        Command::SampleRange(a) => sample_range(a),
    }
}

impl FlowArgs {
    fn config(&self) -> FlowConfig {
        let mut cfg = FlowConfig::default().with_seed(self.seed);
        if let Some(r) = self.restarts {
            cfg.restarts = r;
        }
        if let Some(m) = self.max_iters {
            cfg.max_iters = m;
        }
        if let Some(t) = self.gradient_tol {
            cfg.gradient_tol = t;
        }
        cfg
    }

    fn record(&self, m: &mut ManifestBuilder) {
        if let Some(r) = self.restarts {
            m.set("restarts", r);
        }
        if let Some(x) = self.max_iters {
            m.set("max_iters", x);
        }
        if let Some(t) = self.gradient_tol {
            m.set("gradient_tol", t);
        }
    }
}

fn load(path: &Path) -> Result<ComplexMatrix> {
    read_matrix(path).with_context(|| format!("reading {}", path.display()))
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn points(zs: &[C64]) -> Vec<(f64, f64)> {
    zs.iter().map(|z| (z.re, z.im)).collect()
}

fn complex_plot(title: &str, series: Vec<Series>) -> Plot {
    Plot { title: title.into(), x_label: "Re".into(), y_label: "Im".into(), equal_aspect: true, series }
}

fn boundary(args: BoundaryArgs) -> Result<Outcome> {
    let mut manifest = ManifestBuilder::new("boundary", args.flow.seed, Some(&args.out));
    manifest.input("A", &args.a);
    manifest.input("C", &args.c);
    manifest.set("m", args.m);
    args.flow.record(&mut manifest);
    let a = load(&args.a)?;
    let c = load(&args.c)?;
    let opts = BoundaryOptions::default().with_m(args.m);
    opts.validate()?;
    let curve = trace_boundary(&a, &c, &opts, &args.flow.config())?;

    prepare_out(&args.out)?;
    write(&args.out, "boundary.csv", &curve.to_csv())?;
    write(&args.out, "boundary.json", &curve.to_json())?;
    if args.svg {
        let mut series = vec![Series::new("boundary", Style::Closed, points(&curve.polygon()))];
        if let Ok(spec) = c_spectrum(&c, &a) {
            series.push(Series::new("C-spectrum", Style::Dots, points(&spec.points)));
        }
        series.push(Series::new("center", Style::Dots, vec![(curve.center.re, curve.center.im)]));
        write(&args.out, "boundary.svg", &complex_plot("W(C, A)", series).render())?;
    }
    eprintln!(
        "boundary: {} angles, coverage {:.6}, {} corners, max |z| {:.6}",
        curve.m(),
        curve.coverage(),
        curve.corners.len(),
        curve.max_modulus()
    );
    manifest.finish()?;
    Ok(if curve.fully_converged() { Outcome::Complete } else { Outcome::Partial })
}

fn outcome(converged: bool) -> Outcome {
    if converged {
        Outcome::Complete
    } else {
        Outcome::Partial
    }
}

fn radius(args: RadiusArgs, name: &str) -> Result<Outcome> {
    let mut manifest = ManifestBuilder::new(name, args.flow.seed, args.out.as_deref());
    manifest.input("A", &args.a);
    manifest.input("C", &args.c);
    manifest.set("local", args.local);
    args.flow.record(&mut manifest);
    let a = load(&args.a)?;
    let c = load(&args.c)?;
    let cfg = args.flow.config();
    let (record, converged) = if args.local {
        let r = ascend_local(&a, &c, Objective::SquaredModulus, &cfg)?;
        let factors: Vec<MatrixFile> = r.optimum.factors().iter().map(MatrixFile::from_matrix).collect();
        let rec = json!({
            "radius": r.objective.sqrt(),
            "value": pair(r.value),
            "converged": r.converged,
            "restart": r.restart,
            "factors": factors,
        });
        (rec, r.converged)
    } else {
        let r = ascend(&a, &c, Objective::SquaredModulus, &cfg)?;
        let rec = json!({
            "radius": r.objective.sqrt(),
            "value": pair(r.value),
            "converged": r.converged,
            "restart": r.restart,
            "unitary": MatrixFile::from_matrix(r.optimum.matrix()),
        });
        (rec, r.converged)
    };
    let text = to_json_sig12(&record)?;
    println!("{text}");
    if let Some(out) = &args.out {
        prepare_out(out)?;
        write(out, "result.json", &(text + "\n"))?;
    }
    manifest.finish()?;
    Ok(outcome(converged))
}

fn scan_states(args: &ScanArgs) -> Result<Vec<(f64, PureState)>> {
    let grid = |f: fn(f64) -> cnrange::Result<PureState>| -> Result<Vec<(f64, PureState)>> {
        if args.grid < 2 {
            bail!("--grid must be at least 2");
        }
        (0..args.grid)
            .map(|i| {
                let s = i as f64 / (args.grid - 1) as f64;
                Ok((s, f(s)?))
            })
            .collect()
    };
    match args.family {
        Family::Psi3 => grid(state_psi3),
        Family::Psi4 => grid(state_psi4),
        Family::File => {
            let path = args.state.as_ref().context("--family file needs --state")?;
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let files: Vec<StateFile> = match parse_json::<StateFile>(&text) {
                Ok(one) => vec![one],
                Err(_) => parse_json::<Vec<StateFile>>(&text)?,
            };
            let k = files.len();
            files
                .into_iter()
                .enumerate()
                .map(|(i, f)| {
                    let s = if k > 1 { i as f64 / (k - 1) as f64 } else { 0.0 };
                    Ok((s, PureState::from_file(f)?))
                })
                .collect()
        }
    }
}

fn entanglement_scan(args: ScanArgs) -> Result<Outcome> {
    let mut manifest = ManifestBuilder::new("entanglement-scan", args.flow.seed, Some(&args.out));
    manifest.set("family", format!("{:?}", args.family).to_lowercase());
    manifest.set("grid", args.grid);
    if let Some(s) = &args.state {
        manifest.input("state", s);
    }
    args.flow.record(&mut manifest);
    let states = scan_states(&args)?;
    let cfg = args.flow.config();
    let mut csv = String::from("s,delta_sq,max_transfer\n");
    let mut all_converged = true;
    let mut rows = Vec::new();
    for (s, psi) in &states {
        let e = entanglement_distance(psi, &cfg)?;
        all_converged &= e.converged;
        let _ = writeln!(csv, "{},{},{}", cnrange::io::sig12(*s), cnrange::io::sig12(e.delta_sq), cnrange::io::sig12(e.max_transfer));
        eprintln!("s = {s:.6}: delta^2 = {:.6}, max transfer = {:.6}", e.delta_sq, e.max_transfer);
        rows.push((*s, e.delta_sq, e.max_transfer));
    }
    prepare_out(&args.out)?;
    write(&args.out, "entanglement.csv", &csv)?;
    if args.svg {
        let plot = Plot {
            title: "Euclidean entanglement distance".into(),
            x_label: "s".into(),
            y_label: "value".into(),
            equal_aspect: false,
            series: vec![
                Series::new("delta^2", Style::Line, rows.iter().map(|r| (r.0, r.1)).collect()),
                Series::new("max local transfer", Style::Line, rows.iter().map(|r| (r.0, r.2)).collect()),
            ],
        };
        write(&args.out, "entanglement.svg", &plot.render())?;
    }
    manifest.finish()?;
    Ok(outcome(all_converged))
}

#[derive(Serialize)]
struct Verdict {
    reversible: bool,
    method: &'static str,
    witness: Option<serde_json::Value>,
    angles: Option<Vec<f64>>,
    certificate: Option<serde_json::Value>,
    floor: Option<f64>,
    residual: Option<f64>,
    converged: bool,
}

fn flow_verdict(h: &ComplexMatrix, cfg: &FlowConfig, certificate: Option<serde_json::Value>) -> Result<Verdict> {
    let s = search_reversal(h, cfg)?;
    let witness = s.witness.map(|w| json!({"power": w.power, "trace": w.trace}));
    let method = if witness.is_some() { "obstruction" } else { "flow" };
    Ok(Verdict {
        reversible: s.reversible && witness.is_none(),
        method,
        witness,
        angles: None,
        certificate,
        floor: Some(s.floor),
        residual: Some(s.residual),
        converged: s.converged,
    })
}

fn reversal(args: ReversalArgs) -> Result<Outcome> {
    let mut manifest = ManifestBuilder::new("reversal", args.flow.seed, args.out.as_deref());
    args.flow.record(&mut manifest);
    let cfg = args.flow.config();
    let verdict = if let Some(path) = &args.normal_form {
        manifest.input("normal_form", path);
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let nf = HamiltonianNormalForm::from_json(&text)?;
        let h = nf.assemble();
        match nf.solve()? {
            AngleSolution::Feasible { angles, residual } => {
                let k = kz(&angles);
                eprintln!("angle system residual {residual:.6e}");
                Verdict {
                    reversible: true,
                    method: "angles",
                    witness: None,
                    residual: Some(reversal_residual(&k, &h)?),
                    angles: Some(angles),
                    certificate: None,
                    floor: None,
                    converged: true,
                }
            }
            AngleSolution::Infeasible { certificate } => {
                // z-rotations cannot do it; a general local unitary might.
                flow_verdict(&h, &cfg, Some(serde_json::to_value(certificate)?))?
            }
        }
    } else {
        let path = args.h.as_ref().expect("clap enforces one input");
        manifest.input("H", path);
        let h = load(path)?;
        if let Some(w) = reversibility_obstruction(&h)? {
            let mut v = flow_verdict(&h, &cfg, None)?;
            v.witness = Some(json!({"power": w.power, "trace": w.trace}));
            v.method = "obstruction";
            v.reversible = false;
            v
        } else {
            match z_rotation_reversal(&h, 1e-12) {
                Ok((_, AngleSolution::Feasible { angles, .. })) => {
                    let k = kz(&angles);
                    Verdict {
                        reversible: true,
                        method: "angles",
                        witness: None,
                        residual: Some(reversal_residual(&k, &h)?),
                        angles: Some(angles),
                        certificate: None,
                        floor: None,
                        converged: true,
                    }
                }
                _ => flow_verdict(&h, &cfg, None)?,
            }
        }
    };
    let text = to_json_sig12(&verdict)?;
    println!("{text}");
    if let Some(out) = &args.out {
        prepare_out(out)?;
        write(out, "reversal.json", &(text + "\n"))?;
    }
    manifest.finish()?;
    Ok(outcome(verdict.converged || verdict.method == "obstruction"))
}

fn schedule(args: &ConstrainedArgs) -> Result<LambdaSchedule> {
    let mut s = LambdaSchedule::default();
    if let Some(l) = args.lambda_initial {
        s = LambdaSchedule { initial: l, ..s };
    }
    if let Some(c) = args.lambda_cap {
        s = LambdaSchedule { cap: c, ..s };
    }
    s.validate()?;
    Ok(s)
}

fn trajectories_csv(result: &ConstrainedResult) -> String {
    let mut out = String::from("restart,step,re,im\n");
    for run in &result.runs {
        for (k, z) in run.path.iter().flatten().enumerate() {
            let _ = writeln!(out, "{},{k},{},{}", run.restart, cnrange::io::sig12(z.re), cnrange::io::sig12(z.im));
        }
    }
    out
}

fn constrained(args: ConstrainedArgs) -> Result<Outcome> {
    if args.d.is_some() && args.e.is_some() {
        bail!("give either --D or --E, not both (one constraint per run)");
    }
    if args.d.is_none() && args.e.is_none() {
        bail!("a constraint is required: --D or --E");
    }
    if args.method == Method::Projected && args.d.is_some() {
        bail!("--method projected applies to invariance constraints (--E) only");
    }
    let mut manifest = ManifestBuilder::new("constrained", args.flow.seed, Some(&args.out));
    manifest.input("A", &args.a);
    manifest.input("C", &args.c);
    manifest.set("method", format!("{:?}", args.method).to_lowercase());
    args.flow.record(&mut manifest);
    let a = load(&args.a)?;
    let c = load(&args.c)?;
    let mut cfg = args.flow.config();
    cfg.record_trajectory = args.trajectories;
    let sched = schedule(&args)?;
    manifest.set("lambda_schedule", sched);

    let result = if let Some(path) = &args.e {
        manifest.input("E", path);
        let e = load(path)?;
        if invariance_is_vacuous(&e) {
            eprintln!("warning: E is a multiple of the identity; the invariance constraint is vacuous");
        }
        match args.method {
            Method::Projected => ascend_projected(&a, &c, &stabilizer_algebra(&e)?, &cfg)?,
            Method::Lagrange => ascend_invariance_lagrange(&a, &c, &e, &cfg, &sched)?,
        }
    } else {
        let path = args.d.as_ref().expect("checked above");
        manifest.input("D", path);
        let d = load(path)?;
        ascend_orthogonality(&a, &c, &d, &cfg, &sched)?
    };

    prepare_out(&args.out)?;
    let text = to_json_sig12(&result.to_record())?;
    println!("{text}");
    write(&args.out, "constrained.json", &(text + "\n"))?;
    if args.trajectories {
        write(&args.out, "trajectories.csv", &trajectories_csv(&result))?;
    }
    if args.svg {
        let mut series = Vec::new();
        if let Ok(curve) = trace_boundary(&a, &c, &BoundaryOptions::default(), &FlowConfig::default().with_seed(args.flow.seed)) {
            series.push(Series::new("boundary of W(C, A)", Style::Closed, points(&curve.polygon())));
        }
        for run in result.runs.iter().filter(|r| r.path.is_some()) {
            series.push(Series::new(format!("run {}", run.restart), Style::Line, points(run.path.as_ref().unwrap())));
        }
        let finals: Vec<C64> = result.runs.iter().map(|r| r.f_c).collect();
        series.push(Series::new("final f_C", Style::Dots, points(&finals)));
        write(&args.out, "constrained.svg", &complex_plot("constrained transfer", series).render())?;
    }
    if let Some(d) = &result.diagnostic {
        eprintln!("warning: {d}");
    }
    eprintln!(
        "|f_C| = {:.6}, residual {:.6e}, {} of {} runs agree",
        result.f_c.norm(),
        result.constraint_residual,
        result.restarts_agreeing,
        result.runs.len()
    );
    manifest.finish()?;
    Ok(outcome(result.converged))
}

fn sample_range(args: SampleArgs) -> Result<Outcome> {
    if [args.local, args.e.is_some(), args.d.is_some()].iter().filter(|&&x| x).count() > 1 {
        bail!("--local, --E and --D are mutually exclusive");
    }
    let mut manifest = ManifestBuilder::new("sample-range", args.flow.seed, Some(&args.out));
    manifest.input("A", &args.a);
    manifest.input("C", &args.c);
    manifest.set("samples", args.samples);
    manifest.set("local", args.local);
    let a = load(&args.a)?;
    let c = load(&args.c)?;
    let seed = args.flow.seed;
    let pts: Vec<C64> = if args.local {
        sample_local_range(&a, &c, args.samples, seed)?
    } else if let Some(path) = &args.e {
        manifest.input("E", path);
        let basis = stabilizer_algebra(&load(path)?)?;
        let cloud = sample_constrained_range(&a, &c, &Constraint::Invariance(basis), args.samples, seed)?;
        if cloud.points.len() >= 2 {
            eprintln!("connectivity probe: {} component(s)", epsilon_components(&cloud.points, 3.0)?);
        }
        cloud.points
    } else if let Some(path) = &args.d {
        manifest.input("D", path);
        let d = load(path)?;
        let (m0, _) = min_modulus(&a, &d, &args.flow.config())?;
        let cloud = sample_constrained_range(&a, &c, &Constraint::Orthogonality { d, m0 }, args.samples, seed)?;
        eprintln!("m0 = {m0:.6e}, acceptance rate {:.6e}", cloud.acceptance_rate);
        cloud.points
    } else {
        let n = a.rows();
        (0..args.samples)
            .map(|i| {
                let u = haar_unitary_with(n, &mut stream_rng(seed, i as u64));
                cnrange::flow::transfer(&u, &a, &c)
            })
            .collect::<cnrange::Result<_>>()?
    };
    prepare_out(&args.out)?;
    let mut csv = String::from("re,im\n");
    for z in &pts {
        let _ = writeln!(csv, "{},{}", cnrange::io::sig12(z.re), cnrange::io::sig12(z.im));
    }
    write(&args.out, "samples.csv", &csv)?;
    if args.svg {
        write(&args.out, "samples.svg", &complex_plot("sampled range", vec![Series::new("samples", Style::Dots, points(&pts))]).render())?;
    }
    eprintln!("{} samples written", pts.len());
    manifest.finish()?;
    Ok(Outcome::Complete)
}
