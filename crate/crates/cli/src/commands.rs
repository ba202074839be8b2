use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;

use num_traits::ToPrimitive;
use serde_json::{json, Value};

use xorgap::distributions::{
    check_pairwise_independent, disguise, g_m, ground, parse_ratio, uniform_over, xor_support,
    DisguiseSpec, Prob, TupleDistribution, Witness,
};
use xorgap::families::generate;
use xorgap::fourier::{degree_slice, instance_objective};
use xorgap::gadget::{compose as compose_gadget, dictator_assignment, LabelCoverInstance};
use xorgap::instances::{self, evaluate, Instance};
use xorgap::oracle::{self, brute_force};
use xorgap::pipeline::{gap_experiment, row_seeds, two_round, ExperimentRow, PipelineError};
use xorgap::sign::{all_points, point_string};

use crate::args::{
    BruteArgs, ComposeArgs, ExperimentArgs, FourierArgs, GenArgs, SolveArgs, VerifyDistArgs,
};
use crate::output::{csv_row, header, io_error, Out, CSV_COLUMNS};
use crate::CliError;

fn invalid(e: impl Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn pipeline_error(e: PipelineError) -> CliError {
    if e.is_numerical() {
        CliError::Numerical(e.to_string())
    } else {
        CliError::Validation(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    instances::parse(&read(path)?).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn ratio_string(p: &Prob) -> String {
    if p.is_integer() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

pub fn gen(a: &GenArgs) -> Result<(), CliError> {
    let spec = a.family.spec()?;
    fs::create_dir_all(&a.out).map_err(io_error)?;
    let mut out = Out::new();
    out.json(&header("gen", Some(a.seed), &a.family))?;
    for i in 0..spec.count {
        let g = generate(&spec, i, row_seeds(a.seed, i).0).map_err(invalid)?;
        let file = format!("{}.xor", g.id);
        let text = instances::serialize_with_comments(&g.instance, &g.comments);
        fs::write(a.out.join(&file), text).map_err(io_error)?;
        let mut lc_file = None;
        if let Some(lc) = &g.label_cover {
            let name = format!("{}.lc", g.id);
            fs::write(a.out.join(&name), lc.to_text()).map_err(io_error)?;
            lc_file = Some(name);
        }
        let witness = g
            .witness
            .as_ref()
            .map(|w| evaluate(&g.instance, w))
            .transpose()
            .map_err(invalid)?;
        out.json(&json!({
            "id": g.id,
            "file": file,
            "label_cover": lc_file,
            "n_vars": g.instance.num_vars(),
            "n_cons": g.instance.constraints().len(),
            "witness": witness,
        }))?;
    }
    out.finish()
}

pub fn compose(a: &ComposeArgs) -> Result<(), CliError> {
    let lc = LabelCoverInstance::parse(&read(&a.lc)?).map_err(invalid)?;
    let phi = match &a.phi {
        Some(p) => TupleDistribution::parse_dump(&read(p)?).map_err(invalid)?,
        None => uniform_over(&xor_support()).map_err(invalid)?,
    };
    let inst = compose_gadget(&lc, &phi, &a.gadget.params(a.seed)).map_err(invalid)?;
    let dictator = match lc.labeling() {
        Some(_) => Some(
            evaluate(&inst, &dictator_assignment(&lc, &inst).map_err(invalid)?).map_err(invalid)?,
        ),
        None => None,
    };
    let comments = vec![
        format!("composed from {}", instance_id(&a.lc)),
        format!("R {} d {} eta {}", lc.r(), lc.d(), a.gadget.eta),
    ];
    fs::write(&a.out, instances::serialize_with_comments(&inst, &comments)).map_err(io_error)?;
    let mut out = Out::new();
    out.json(&header("compose", Some(a.seed), &a.gadget))?;
    out.json(&json!({
        "id": instance_id(&a.out),
        "sizes": inst.sizes(),
        "n_vars": inst.num_vars(),
        "n_cons": inst.constraints().len(),
        "dictator": dictator,
    }))?;
    out.finish()
}

fn named_set(name: &str) -> Option<TupleDistribution> {
    let points = match name {
        "C" => xor_support(),
        "G" => all_points(3).collect(),
        _ => {
            let m: usize = name.strip_prefix('G')?.parse().ok()?;
            if m > 3 {
                return None;
            }
            g_m(m)
        }
    };
    uniform_over(&points).ok()
}

fn mixture(parts: &[String]) -> Result<TupleDistribution, CliError> {
    let mut components = Vec::new();
    for part in parts {
        let (w, set) = part
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("--disguise expects weight:set, got `{part}`")))?;
        let w = parse_ratio(w).ok_or_else(|| CliError::Usage(format!("bad weight `{w}`")))?;
        let d = named_set(set).ok_or_else(|| CliError::Usage(format!("unknown set `{set}`")))?;
        components.push((w, d));
    }
    disguise(&DisguiseSpec::new(components)).map_err(invalid)
}

pub fn verify_dist(a: &VerifyDistArgs) -> Result<(), CliError> {
    let dist = match (&a.file, a.disguise.is_empty()) {
        (Some(path), true) => TupleDistribution::parse_dump(&read(path)?).map_err(invalid)?,
        (None, false) => mixture(&a.disguise)?,
        _ => {
            return Err(CliError::Usage(
                "give either a distribution file or --disguise components".into(),
            ))
        }
    };
    let gamma = parse_ratio(&a.gamma)
        .and_then(|g| g.to_f64())
        .ok_or_else(|| CliError::Usage(format!("bad --gamma `{}`", a.gamma)))?;
    let verdict = check_pairwise_independent(&dist, gamma, a.tol).map_err(invalid)?;

    let k = dist.arity();
    let probs: BTreeMap<String, String> = dist
        .entries()
        .map(|(z, p)| (point_string(z), ratio_string(p)))
        .collect();
    let marginals: Vec<String> = (0..k).map(|i| ratio_string(&dist.marginal_plus(i))).collect();
    let pairs: Vec<Value> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .map(|(i, j)| json!([i + 1, j + 1, ratio_string(&dist.pair_marginal_plus(i, j))]))
        .collect();
    let witness = verdict.witness.as_ref().map(|w| match w {
        Witness::Single { coord, observed } => json!({"coord": coord, "observed": ratio_string(observed)}),
        Witness::Pair { i, j, observed } => json!({"pair": [i, j], "observed": ratio_string(observed)}),
    });

    let mut out = Out::new();
    let source = match &a.file {
        Some(p) => json!({"file": instance_id(p)}),
        None => json!({"disguise": a.disguise}),
    };
    out.json(&header(
        "verify-dist",
        None,
        &json!({"source": source, "gamma": a.gamma, "tol": a.tol}),
    ))?;
    out.json(&json!({
        "arity": k,
        "ground": ground(&dist).iter().map(|z| point_string(z)).collect::<Vec<_>>(),
        "probs": probs,
        "marginals": marginals,
        "pairs": pairs,
        "holds": verdict.holds,
        "witness": witness,
    }))?;
    out.finish()
}

pub fn fourier(a: &FourierArgs) -> Result<(), CliError> {
    let inst = read_instance(&a.instance)?;
    let full = instance_objective(&inst);
    let poly = match a.degree {
        Some(d) => degree_slice(&full, d),
        None => full,
    };
    let mut out = Out::new();
    out.json(&header(
        "fourier",
        None,
        &json!({"instance": instance_id(&a.instance), "degree": a.degree}),
    ))?;
    let mut by_degree: BTreeMap<usize, usize> = BTreeMap::new();
    for (m, c) in poly.terms() {
        *by_degree.entry(m.degree()).or_default() += 1;
        out.json(&json!({
            "monomial": m.to_string(),
            "degree": m.degree(),
            "coeff": ratio_string(c),
        }))?;
    }
    out.json(&json!({
        "summary": {
            "terms": poly.len(),
            "constant": ratio_string(&poly.constant_term()),
            "squared_norm": ratio_string(&poly.squared_norm()),
            "by_degree": by_degree,
        }
    }))?;
    out.finish()
}

pub fn solve(a: &SolveArgs) -> Result<(), CliError> {
    let inst = read_instance(&a.instance)?;
    let cfg = a.sdp.pipeline(a.seed);
    let (assignment, mut report) = two_round(&inst, &cfg).map_err(pipeline_error)?;
    report.id = instance_id(&a.instance);
    if let Some(path) = &a.assignment_out {
        let text: String = assignment
            .blocks()
            .iter()
            .map(|b| format!("{}\n", point_string(b)))
            .collect();
        fs::write(path, text).map_err(io_error)?;
    }
    let mut out = Out::new();
    if a.csv {
        out.line(CSV_COLUMNS)?;
        out.line(&csv_row(&report))?;
    } else {
        out.json(&header("solve", Some(a.seed), &cfg))?;
        out.json(&report)?;
    }
    out.finish()
}

pub fn brute(a: &BruteArgs) -> Result<(), CliError> {
    let inst = read_instance(&a.instance)?;
    if inst.num_vars() > oracle::MAX_VARS {
        return Err(CliError::Validation(format!(
            "instance has {} variables; exhaustive search is capped at {}",
            inst.num_vars(),
            oracle::MAX_VARS
        )));
    }
    let r = brute_force(&inst).map_err(invalid)?;
    let mut out = Out::new();
    out.json(&header(
        "brute",
        None,
        &json!({"instance": instance_id(&a.instance), "cap": oracle::MAX_VARS}),
    ))?;
    out.json(&json!({
        "id": instance_id(&a.instance),
        "n_vars": inst.num_vars(),
        "n_cons": inst.constraints().len(),
        "optimum": r.optimum,
        "count": r.count,
        "assignment": r.assignment.blocks().iter().map(|b| point_string(b)).collect::<Vec<_>>(),
    }))?;
    out.finish()
}

pub fn experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    let spec = a.family.spec()?;
    let cfg = a.sdp.pipeline(a.seed);
    let report = gap_experiment(&spec, &cfg, a.seed).map_err(pipeline_error)?;
    let mut out = Out::new();
    if a.csv {
        out.line(CSV_COLUMNS)?;
        for row in &report.rows {
            match row {
                ExperimentRow::Ok(r) => out.line(&csv_row(r))?,
                ExperimentRow::Err { id, error } => out.line(&format!("# {id}: {error}"))?,
            }
        }
    } else {
        out.json(&header(
            "experiment",
            Some(a.seed),
            &json!({"family": spec, "pipeline": cfg}),
        ))?;
        for row in &report.rows {
            out.json(row)?;
        }
        out.json(&json!({"summary": report.summary}))?;
    }
    out.finish()
}
