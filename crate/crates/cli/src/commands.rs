use std::path::Path;

use anyhow::{anyhow, bail};
use serde_json::{json, Value};
use seorder_core::cones::{self, ConeKind, CpBudget};
use seorder_core::mc::{self, McConfig};
use seorder_core::model;
use seorder_core::nalgebra::DMatrix;
use seorder_core::orders::{self, OrderKind, OrderVerdict, Overall};
use seorder_core::sampler::Sampler;
use seorder_core::SkewEllipticalParams;

use crate::dto::{self, ParamsJson, Scenario};
use crate::error::InputError;
use crate::output::{emit_json, write_atomic};
use crate::parallel::RayonSampler;
use crate::report::{self, envelope, number};
use crate::{Cli, Cmd, Common, McArgs};

const EXIT_OK: u8 = 0;
const EXIT_REFUTED: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

pub fn execute(cli: &Cli) -> anyhow::Result<u8> {
    let c = &cli.common;
    if let Some(t) = c.tol {
        if !(t.is_finite() && t >= 0.0) {
            return Err(InputError::invalid("--tol", "must be finite and nonnegative").into());
        }
    }
    match &cli.command {
        Cmd::Check { scenario } => check(scenario, c),
        Cmd::Verify { scenario, mc } => verify(scenario, mc, c),
        Cmd::Falsify { scenario, mc } => falsify(scenario, mc, c),
        Cmd::Sample { params, m } => sample(params, *m, c),
        Cmd::Density { params, at } => density(params, at, c),
        Cmd::Moments { params } => moments(params, c),
        Cmd::Cone {
            matrix,
            matrix_file,
            kind,
        } => cone(matrix.as_deref(), matrix_file.as_deref(), kind, c),
        Cmd::Run { scenario } => run(scenario, c),
    }
}

fn load_scenario(path: &Path, c: &Common) -> anyhow::Result<Scenario> {
    let mut s = dto::read_scenario(path)?;
    if let Some(seed) = c.seed {
        s.mc.seed = seed;
    }
    if let Some(tol) = c.tol {
        s.tol = tol;
    }
    Ok(s)
}

fn with_mc_args(s: &mut Scenario, a: &McArgs) -> anyhow::Result<()> {
    if !a.orders.is_empty() {
        s.orders = dto::parse_orders(&a.orders, "--order")?;
    }
    if let Some(m) = a.m {
        if m == 0 {
            return Err(InputError::invalid("--m", "must be positive").into());
        }
        s.mc.m = m;
    }
    if let Some(f) = a.family_size {
        if f == 0 {
            return Err(InputError::invalid("--family-size", "must be positive").into());
        }
        s.mc.family_size = f;
    }
    if let Some(z) = a.z {
        if !(z.is_finite() && z > 0.0) {
            return Err(InputError::invalid("--z", "must be finite and positive").into());
        }
        s.mc.z = z;
    }
    if a.crn {
        s.mc.common_random_numbers = true;
    }
    Ok(())
}

fn scenario_json(s: &Scenario) -> Value {
    json!({
        "X": ParamsJson::from_params(&s.x),
        "Y": ParamsJson::from_params(&s.y),
        "x_digest": s.x.digest(),
        "y_digest": s.y.digest(),
        "orders": s.orders.iter().map(|o| o.name()).collect::<Vec<_>>(),
        "mode": { "centered": s.mode.centered },
        "tol": s.tol,
    })
}

fn seeds_json(cfg: &McConfig) -> Value {
    json!({
        "master": cfg.seed,
        "streams": {
            "verify_x": 0,
            "verify_y": 1,
            "family": 2,
            "verify_confirmation": [3, 4],
            "falsify_stage_k": "10+4k (X), 11+4k (Y), 12+4k and 13+4k (confirmation)",
        },
    })
}

fn classify(order: OrderKind, s: &Scenario) -> anyhow::Result<OrderVerdict> {
    orders::classify_with(order, &s.x, &s.y, s.tol, s.mode).map_err(|e| anyhow!("order {}: {e}", order.name()))
}

fn summary(verdicts: &[OrderVerdict]) -> Value {
    let count = |o: Overall| verdicts.iter().filter(|v| v.overall == o).count();
    json!({
        "ordered_by_sufficiency": count(Overall::OrderedBySufficiency),
        "refuted_by_necessity": count(Overall::RefutedByNecessity),
        "inconclusive": count(Overall::Inconclusive),
    })
}

fn check(path: &Path, c: &Common) -> anyhow::Result<u8> {
    let s = load_scenario(path, c)?;
    let verdicts = s.orders.iter().map(|&o| classify(o, &s)).collect::<anyhow::Result<Vec<_>>>()?;
    let code = if verdicts.iter().any(|v| v.overall == Overall::RefutedByNecessity) {
        EXIT_REFUTED
    } else if verdicts.iter().any(|v| v.overall == Overall::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    };
    let body = json!({
        "scenario": scenario_json(&s),
        "verdicts": verdicts.iter().map(report::verdict_json).collect::<Vec<_>>(),
        "summary": summary(&verdicts),
        "exit_code": code,
    });
    emit_json(c.out.as_deref(), &envelope("check", body))?;
    Ok(code)
}

fn sampler(c: &Common) -> anyhow::Result<RayonSampler> {
    RayonSampler::new(c.threads)
}

fn verify(path: &Path, a: &McArgs, c: &Common) -> anyhow::Result<u8> {
    let mut s = load_scenario(path, c)?;
    with_mc_args(&mut s, a)?;
    let smp = sampler(c)?;
    let mut results = Vec::new();
    let mut failed = false;
    for &o in &s.orders {
        let v = classify(o, &s)?;
        let r = mc::verify_with(o, &s.x, &s.y, &s.mc, &smp).map_err(|e| anyhow!("order {}: {e}", o.name()))?;
        failed |= !r.passed;
        results.push(json!({ "verdict": report::verdict_json(&v), "mc": report::mc_report_json(&r) }));
    }
    let code = if failed { EXIT_REFUTED } else { EXIT_OK };
    let body = json!({
        "scenario": scenario_json(&s),
        "seeds": seeds_json(&s.mc),
        "results": results,
        "passed": !failed,
        "exit_code": code,
    });
    emit_json(c.out.as_deref(), &envelope("verify", body))?;
    Ok(code)
}

fn falsify(path: &Path, a: &McArgs, c: &Common) -> anyhow::Result<u8> {
    let mut s = load_scenario(path, c)?;
    with_mc_args(&mut s, a)?;
    let smp = sampler(c)?;
    let mut results = Vec::new();
    let mut found = false;
    for &o in &s.orders {
        let v = classify(o, &s)?;
        let w = mc::falsify_with(o, &s.x, &s.y, &s.mc, &smp).map_err(|e| anyhow!("order {}: {e}", o.name()))?;
        found |= w.is_some();
        results.push(json!({ "verdict": report::verdict_json(&v), "mc": report::falsify_json(o.name(), &s.mc, &w) }));
    }
    let code = if found { EXIT_REFUTED } else { EXIT_OK };
    let body = json!({
        "scenario": scenario_json(&s),
        "seeds": seeds_json(&s.mc),
        "results": results,
        "witness_found": found,
        "exit_code": code,
    });
    emit_json(c.out.as_deref(), &envelope("falsify", body))?;
    Ok(code)
}

fn run(path: &Path, c: &Common) -> anyhow::Result<u8> {
    let s = load_scenario(path, c)?;
    let smp = sampler(c)?;
    let mut verdicts = Vec::new();
    let mut mc_results = Vec::new();
    let mut contradiction = false;
    for &o in &s.orders {
        let v = classify(o, &s)?;
        match v.overall {
            Overall::OrderedBySufficiency => {
                let r = mc::verify_with(o, &s.x, &s.y, &s.mc, &smp).map_err(|e| anyhow!("order {}: {e}", o.name()))?;
                contradiction |= !r.passed;
                mc_results.push(report::mc_report_json(&r));
            }
            Overall::RefutedByNecessity => {
                let w = mc::falsify_with(o, &s.x, &s.y, &s.mc, &smp).map_err(|e| anyhow!("order {}: {e}", o.name()))?;
                mc_results.push(report::falsify_json(o.name(), &s.mc, &w));
            }
            Overall::Inconclusive => {}
        }
        verdicts.push(v);
    }
    let all_inconclusive = verdicts.iter().all(|v| v.overall == Overall::Inconclusive);
    let (status, code) = if contradiction {
        ("contradiction", EXIT_REFUTED)
    } else if all_inconclusive {
        ("inconclusive", EXIT_INCONCLUSIVE)
    } else {
        ("consistent", EXIT_OK)
    };
    let body = json!({
        "scenario": scenario_json(&s),
        "seeds": seeds_json(&s.mc),
        "mc_config": report::config_json(&s.mc),
        "verdicts": verdicts.iter().map(report::verdict_json).collect::<Vec<_>>(),
        "summary": summary(&verdicts),
        "mc_results": mc_results,
        "status": status,
        "exit_code": code,
    });
    emit_json(c.out.as_deref(), &envelope("run", body))?;
    Ok(code)
}

fn sample(path: &Path, m: usize, c: &Common) -> anyhow::Result<u8> {
    let p = dto::read_params(path)?;
    let out = c
        .out
        .as_deref()
        .ok_or_else(|| InputError::invalid("--out", "sample needs an output path for the CSV"))?;
    if m == 0 {
        return Err(InputError::invalid("--m", "must be positive").into());
    }
    let seed = c.seed.unwrap_or(0);
    let batch = sampler(c)?.sample(&p, m, seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=p.dim()).map(|i| format!("x{i}")))?;
    for row in batch.iter_rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("csv: {e}"))?;
    write_atomic(out, &bytes)?;
    let sidecar = json!({
        "version": report::VERSION,
        "seed": seed,
        "m": m,
        "n": p.dim(),
        "params_digest": batch.params_digest(),
    });
    let mut side_path = out.as_os_str().to_owned();
    side_path.push(".json");
    emit_json(Some(Path::new(&side_path)), &sidecar)?;
    Ok(EXIT_OK)
}

fn parse_point(s: &str, n: usize) -> anyhow::Result<Vec<f64>> {
    let x = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| InputError::invalid("--at", format!("'{s}': {e}")))?;
    if x.len() != n {
        bail!(InputError::invalid("--at", format!("'{s}' has {} coordinates, expected {n}", x.len())));
    }
    Ok(x)
}

fn density(path: &Path, at: &[String], c: &Common) -> anyhow::Result<u8> {
    let p = dto::read_params(path)?;
    let points = at
        .iter()
        .map(|s| {
            let x = parse_point(s, p.dim())?;
            let d = p.density(&x);
            Ok(json!({ "x": x, "density": number(d), "log_density": number(d.ln()) }))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let body = json!({ "params_digest": p.digest(), "points": points });
    emit_json(c.out.as_deref(), &envelope("density", body))?;
    Ok(EXIT_OK)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn moments(path: &Path, c: &Common) -> anyhow::Result<u8> {
    let p: SkewEllipticalParams = dto::read_params(path)?;
    let gen = p.generator();
    let (mean, cov) = match (p.mean(), p.covariance()) {
        (Ok(m), Ok(cv)) => (json!(m.iter().collect::<Vec<_>>()), json!(matrix_rows(&cv))),
        (Ok(m), Err(_)) => (json!(m.iter().collect::<Vec<_>>()), Value::Null),
        _ => (Value::Null, Value::Null),
    };
    let body = json!({
        "params": ParamsJson::from_params(&p),
        "params_digest": p.digest(),
        "mean": mean,
        "covariance": cov,
        "kappa1": model::kappa1(gen).ok(),
        "c2": model::c2(gen).ok(),
        "scales": p.scales().iter().collect::<Vec<_>>(),
        "delta_w": p.delta_w().iter().collect::<Vec<_>>(),
        "psi": matrix_rows(p.psi()),
        "lambda": p.lambda().iter().collect::<Vec<_>>(),
    });
    emit_json(c.out.as_deref(), &envelope("moments", body))?;
    Ok(EXIT_OK)
}

fn cone(inline: Option<&str>, file: Option<&Path>, kind: &str, c: &Common) -> anyhow::Result<u8> {
    let rows: Vec<Vec<f64>> = match (inline, file) {
        (Some(text), _) => serde_json::from_str(text).map_err(|e| InputError::parse("--matrix", &e))?,
        (None, Some(path)) => dto::read_json(path)?,
        (None, None) => return Err(InputError::invalid("--matrix", "give --matrix or --matrix-file").into()),
    };
    let cone_kind = ConeKind::from_name(kind)
        .ok_or_else(|| InputError::invalid("--kind", format!("unknown cone '{kind}'")))?;
    let n = rows.len();
    if n == 0 {
        return Err(InputError::invalid("matrix", "empty").into());
    }
    if let Some(i) = rows.iter().position(|r| r.len() != n) {
        return Err(InputError::invalid(format!("matrix[{i}]"), format!("has {} entries, expected {n}", rows[i].len())).into());
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let tol = c.tol.unwrap_or_else(|| cones::default_tol(&a));
    let verdict = match cone_kind {
        ConeKind::Copositive => cones::is_copositive(&a, tol, cones::DEFAULT_COPOSITIVE_NODES),
        ConeKind::CompletelyPositive => cones::is_completely_positive(&a, tol, CpBudget::default()),
        other => cones::in_cone(&a, other, tol),
    }
    .map_err(|e| match e {
        seorder_core::Error::NonSymmetric { row, col } => anyhow::Error::from(InputError::invalid(
            "matrix",
            format!("not symmetric: entry ({row},{col}) differs from entry ({col},{row})"),
        )),
        other => anyhow!("matrix: {other}"),
    })
    ?;
    let mut body = report::cone_verdict_json(&verdict);
    if let Value::Object(m) = &mut body {
        m.insert("kind".into(), json!(cone_kind.name()));
        m.insert("tol".into(), json!(tol));
        m.insert("matrix".into(), json!(rows));
    }
    emit_json(c.out.as_deref(), &envelope("cone", body))?;
    Ok(EXIT_OK)
}
