use std::fs;
use std::path::Path;

use exactapprox::cantor::{
    build_tree, random_trial_boxes, support_trial_boxes, verify_counts, verify_pointwise, verify_structure, BuildOptions, CantorTree,
};
use exactapprox::dimension::{box_counting, local_dimension, resolved_scale, PiecewiseLinearProfile};
use exactapprox::numeric::rational::{fmt_q, fmt_qs, to_f64};
use exactapprox::numeric::scan_approximations;
use exactapprox::schedule::{build_schedule, verify_schedule, Mode, ParameterSchedule, ToyOverrides};
use exactapprox::weights::{auxiliary_weights, check_auxiliary, final_lower_bound, rynne_dimension};
use exactapprox::{Error, QBox, Rational, Weights};
use num_traits::Signed;
use serde_json::{json, Value};

use crate::args::*;

pub enum CliError {
    /// Bad flags, config or input files: exit 2.
    Usage(String),
    /// The run itself could not finish: exit 1 with an error report.
    Failed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Weights(_)
            | Error::TauNotAboveOne(_)
            | Error::DeltaOutOfRange { .. }
            | Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::Precondition(_)
            | Error::Parse(_)
            | Error::Json(_)
            | Error::Io(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<exactapprox::error::WeightError> for CliError {
    fn from(e: exactapprox::error::WeightError) -> Self {
        Error::from(e).into()
    }
}

fn io(path: &Path, e: std::io::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

/// A report and whether every check in it passed.
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

type Res = Result<Outcome, CliError>;

pub fn execute(cmd: &Command) -> Res {
    match cmd {
        Command::Dim(a) => dim(a),
        Command::Aux(a) => aux(a),
        Command::Schedule(a) => schedule_cmd(a),
        Command::Build(a) => build(a),
        Command::Verify(a) => verify(a),
        Command::Analyze(a) => analyze(a),
        Command::Approx(a) => approx(a),
    }
}

fn weights(a: &WeightArgs) -> Result<Weights, CliError> {
    match (&a.w, a.d) {
        (Some(w), d) => {
            if let Some(d) = d.filter(|&d| d != w.0.len()) {
                return Err(CliError::Usage(format!("-d {d} but {} weights given", w.0.len())));
            }
            Ok(Weights::new(&w.0)?)
        }
        (None, Some(0)) => Err(CliError::Usage("-d must be positive".into())),
        (None, Some(d)) => Ok(Weights::equal(d)),
        (None, None) => Err(CliError::Usage("give -w or -d".into())),
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Failed(e.to_string()))
}

fn dim(a: &DimArgs) -> Res {
    let w = weights(&a.weights)?;
    let tau = &a.weights.tau;
    let r = rynne_dimension(&w, tau)?;
    let mut report = json!({
        "schema": "exactapprox.dim/1",
        "d": w.dim(),
        "w": fmt_qs(w.as_slice()),
        "tau": fmt_q(tau),
        "value": fmt_q(&r.value),
        "value_approx": to_f64(&r.value),
        "argmin_k": r.argmin_k,
        "per_k": fmt_qs(&r.per_k_values),
    });
    let mut pass = true;
    if let Some(delta) = &a.delta {
        let fb = final_lower_bound(&w, tau, delta)?;
        let pm = PiecewiseLinearProfile::from_weights(&w, tau, &fb.aux.wtilde)?.minimize();
        let gap = &r.value - &fb.value;
        let tol = delta * (Rational::from_integer(w.dim().into()) + tau);
        let identity = pm.value == fb.value;
        let within = gap.abs() <= tol;
        pass = identity && within && pm.slopes_ordered;
        report["lower_bound"] = json!({
            "delta": fmt_q(delta),
            "wtilde": fmt_qs(&fb.aux.wtilde),
            "value": fmt_q(&fb.value),
            "value_approx": to_f64(&fb.value),
            "h": fb.h,
            "k": fb.k,
            "k_exceeds_split": fb.k_exceeds_split,
            "profile_min": fmt_q(&pm.value),
            "profile_argmin_k": pm.argmin_k,
            "profile_x_star": fmt_q(&pm.x_star),
            "slopes_ordered": pm.slopes_ordered,
            "profile_matches_bound": identity,
            "gap_to_dimension": fmt_q(&gap),
            "gap_tolerance": fmt_q(&tol),
            "gap_within_tolerance": within,
        });
    }
    report["all_pass"] = pass.into();
    Ok(Outcome { report, pass })
}

fn aux(a: &AuxArgs) -> Res {
    let w = weights(&a.weights)?;
    let tau = &a.weights.tau;
    let x = auxiliary_weights(&w, tau, &a.delta)?;
    let violations = check_auxiliary(&w, tau, &x);
    let pass = violations.is_empty();
    let report = json!({
        "schema": "exactapprox.aux/1",
        "w": fmt_qs(w.as_slice()),
        "tau": fmt_q(tau),
        "delta": fmt_q(&a.delta),
        "delta0": fmt_q(&x.delta0),
        "K": x.k,
        "wtilde": fmt_qs(&x.wtilde),
        "violations": violations,
        "all_pass": pass,
    });
    Ok(Outcome { report, pass })
}

fn schedule(a: &ScheduleArgs, default_toy: bool) -> Result<ParameterSchedule, CliError> {
    let w = weights(&a.weights)?;
    let toy = a.toy || (default_toy && !a.faithful);
    let over = ToyOverrides {
        r: a.r.clone(),
        eps0: a.eps0.clone(),
        rho0: a.rho0.clone().map(|x| x.0),
        xi: a.xi,
        n: a.n.clone().map(|x| x.0).unwrap_or_default(),
        ni: a.ni.clone().map(|x| x.0).unwrap_or_default(),
        eps: a.eps.clone().map(|x| x.0).unwrap_or_default(),
        c: a.c.clone().map(|x| x.0).unwrap_or_default(),
        eps_l7: a.eps_l7.clone(),
    };
    if !toy && over != ToyOverrides::default() {
        return Err(CliError::Usage("schedule overrides need --toy".into()));
    }
    let mode = if toy { Mode::Toy } else { Mode::Faithful };
    Ok(build_schedule(&w, &a.weights.tau, &a.delta, a.k_max, mode, &over)?)
}

fn schedule_cmd(a: &ScheduleArgs) -> Res {
    let s = schedule(a, false)?;
    let rep = verify_schedule(&s)?;
    let report = json!({
        "schema": "exactapprox.schedule-run/1",
        "schedule": to_value(&s)?,
        "report": to_value(&rep)?,
        "all_pass": rep.all_pass,
    });
    Ok(Outcome { report, pass: rep.all_pass })
}

fn build(a: &BuildArgs) -> Res {
    let s = schedule(&a.schedule, true)?;
    let opts = BuildOptions {
        depth: a.depth,
        uniform_branching: !a.no_uniform,
        max_boxes: a.max_boxes,
        enum_budget: a.enum_budget,
        inject_fault: a.inject_fault,
    };
    let t = build_tree(&s, &opts)?;
    fs::write(&a.tree, t.to_json()?).map_err(|e| io(&a.tree, e))?;
    if let Some(p) = &a.csv {
        let f = fs::File::create(p).map_err(|e| io(p, e))?;
        t.write_summary_csv(std::io::BufWriter::new(f))?;
    }
    let forced = t.levels.iter().flatten().filter(|n| n.forced).count();
    let report = json!({
        "schema": "exactapprox.build/1",
        "tree": a.tree.display().to_string(),
        "depth": t.depth(),
        "mode": to_value(&s.mode)?,
        "levels": to_value(&t.summary)?,
        "danger_regions": t.danger.len(),
        "forced_nodes": forced,
    });
    Ok(Outcome { report, pass: true })
}

fn load_tree(p: &Path) -> Result<CantorTree, CliError> {
    let text = fs::read_to_string(p).map_err(|e| io(p, e))?;
    CantorTree::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
}

fn verify(a: &VerifyArgs) -> Res {
    let t = load_tree(&a.tree)?;
    let rep = verify_schedule(&t.schedule)?;
    let structure = verify_structure(&t)?;
    let pointwise = verify_pointwise(&t, &rep, a.samples)?;
    let mut boxes = random_trial_boxes(&t, a.trial_boxes / 2, a.seed);
    boxes.extend(support_trial_boxes(&t, a.trial_boxes - a.trial_boxes / 2, a.seed));
    boxes.push(QBox::unit(t.schedule.d));
    let counts = verify_counts(&t, &rep, &boxes)?;
    let pass = structure.all_pass && pointwise.required_pass && counts.required_pass;
    let report = json!({
        "schema": "exactapprox.verify/1",
        "depth": t.depth(),
        "schedule_all_pass": rep.all_pass,
        "structure": to_value(&structure)?,
        "pointwise": to_value(&pointwise)?,
        "counts": to_value(&counts)?,
        "trial_boxes": boxes.len(),
        "required_pass": pass,
    });
    Ok(Outcome { report, pass })
}

fn analyze(a: &AnalyzeArgs) -> Res {
    let t = load_tree(&a.tree)?;
    let all = support_trial_boxes(&t, a.trial_boxes, a.seed);
    let total = all.len();
    let boxes: Vec<QBox> = all
        .into_iter()
        .filter(|b| resolved_scale(&t, &b.sides().into_iter().max().expect("d >= 1")).is_ok())
        .collect();
    let local = local_dimension(&t, &boxes)?;
    if let Some(p) = &a.csv {
        let f = fs::File::create(p).map_err(|e| io(p, e))?;
        local.write_csv(std::io::BufWriter::new(f))?;
    }
    let scales = match &a.scales {
        Some(s) => s.0.clone(),
        None => (0..=t.depth()).map(|l| t.schedule.side(0, l)).collect::<Result<_, _>>()?,
    };
    let points = t.sample_points(a.seed, a.points);
    let bc = box_counting(&points, &scales)?;
    let report = json!({
        "schema": "exactapprox.analyze/1",
        "depth": t.depth(),
        "trial_boxes": total,
        "skipped_boxes": total - boxes.len(),
        "local_dimension": to_value(&local)?,
        "box_counting": to_value(&bc)?,
    });
    Ok(Outcome { report, pass: local.all_bounds_hold })
}

fn approx(a: &ApproxArgs) -> Res {
    let w = weights(&a.weights)?;
    let tau = &a.weights.tau;
    let scan = scan_approximations(&a.x.0, &w, &a.c, tau, a.q_max)?;
    let mut report = to_value(&scan)?;
    let extra = json!({
        "schema": "exactapprox.approx/1",
        "x": fmt_qs(&a.x.0),
        "w": fmt_qs(w.as_slice()),
        "c": fmt_q(&a.c),
        "tau": fmt_q(tau),
        "hit_count": scan.hits.len(),
    });
    for (k, v) in extra.as_object().expect("object") {
        report[k] = v.clone();
    }
    Ok(Outcome { report, pass: true })
}
