//! JSON report bodies. Reports carry the tool version and no timestamps, so
//! identical inputs give identical bytes.

use serde::Serialize;
use serde_json::Value;
use seorder_core::cones::{Certificate, TriVerdict, UnknownReason, Witness};
use seorder_core::mc::{FalsifyWitness, GapEstimate, McConfig, McReport, TestFunction};
use seorder_core::orders::{ConditionResult, Detail, OrderVerdict, Status};

pub const VERSION: &str = concat!("seorder ", env!("CARGO_PKG_VERSION"));

/// Finite numbers as numbers, infinities as strings.
pub fn number(v: f64) -> Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else if v.is_nan() {
        Value::String("nan".into())
    } else if v > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Holds => "holds",
        Status::Fails => "fails",
        Status::Undecided => "undecided",
    }
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Vector(x) => serde_json::json!({ "vector": x }),
        Witness::Entry { row, col, value } => {
            serde_json::json!({ "entry": { "row": row, "col": col, "value": value } })
        }
    }
}

fn unknown_name(r: &UnknownReason) -> &'static str {
    match r {
        UnknownReason::Budget => "budget exhausted",
    }
}

fn detail_json(d: &Detail) -> Value {
    match d {
        Detail::Margin { worst, at } => serde_json::json!({
            "margin": number(*worst),
            "at": at.map(|(i, j)| [i, j]),
        }),
        Detail::Certified(c) => serde_json::json!({ "certificate": c }),
        Detail::Witness(w) => serde_json::json!({ "witness": witness_json(w) }),
        Detail::NotApplicable(why) => serde_json::json!({ "not_applicable": why }),
        Detail::Unknown(r) => serde_json::json!({ "unknown": unknown_name(r) }),
        Detail::TailRatio { holds, c } => serde_json::json!({
            "tail_ratio_holds": holds,
            "c": c.map(number),
        }),
    }
}

fn condition_json(c: &ConditionResult) -> Value {
    serde_json::json!({
        "name": c.name,
        "status": status_name(c.status),
        "detail": detail_json(&c.detail),
    })
}

pub fn verdict_json(v: &OrderVerdict) -> Value {
    serde_json::json!({
        "order": v.order.name(),
        "overall": v.overall.name(),
        "sufficiency": v.sufficiency.iter().map(condition_json).collect::<Vec<_>>(),
        "necessity": v.necessity.iter().map(condition_json).collect::<Vec<_>>(),
        "notes": v.notes,
    })
}

#[derive(Serialize)]
struct ConfigJson {
    m: usize,
    seed: u64,
    family_size: usize,
    z: f64,
    centered: bool,
    common_random_numbers: bool,
}

pub fn config_json(c: &McConfig) -> Value {
    serde_json::to_value(ConfigJson {
        m: c.m,
        seed: c.seed,
        family_size: c.family_size,
        z: c.z,
        centered: c.centered,
        common_random_numbers: c.common_random_numbers,
    })
    .expect("plain struct")
}

fn gap_json(g: &GapEstimate) -> Value {
    serde_json::json!({ "gap": number(g.gap), "stderr": number(g.stderr), "m": g.m })
}

fn function_json(f: &TestFunction) -> Value {
    serde_json::json!({
        "form": f.form.kind_name(),
        "formula": f.form.describe(),
        "frame": { "center": f.frame.center, "scale": number(f.frame.scale) },
        "certificate": f.certificate,
    })
}

pub fn mc_report_json(r: &McReport) -> Value {
    let functions: Vec<Value> = r
        .results
        .iter()
        .map(|f| {
            serde_json::json!({
                "function": function_json(&f.function),
                "gap": number(f.estimate.gap),
                "stderr": number(f.estimate.stderr),
                "flagged": f.flagged,
                "confirmation": f.confirmation.as_ref().map(gap_json),
                "violated": f.violated,
            })
        })
        .collect();
    serde_json::json!({
        "order": r.order.name(),
        "kind": "verify",
        "config": config_json(&r.config),
        "common_random_numbers": r.config.common_random_numbers,
        "passed": r.passed,
        "violations": r.violations,
        "functions": functions,
    })
}

pub fn falsify_json(order: &str, cfg: &McConfig, w: &Option<FalsifyWitness>) -> Value {
    serde_json::json!({
        "order": order,
        "kind": "falsify",
        "config": config_json(cfg),
        "common_random_numbers": cfg.common_random_numbers,
        "found": w.is_some(),
        "witness": w.as_ref().map(|w| serde_json::json!({
            "function": function_json(&w.function),
            "estimate": gap_json(&w.estimate),
            "confirmation": gap_json(&w.confirmation),
        })),
    })
}

pub fn cone_verdict_json(v: &TriVerdict) -> Value {
    match v {
        TriVerdict::Yes(c) => {
            let cert = match c {
                Certificate::Direct => serde_json::json!({ "kind": "direct" }),
                Certificate::Factor(b) => serde_json::json!({
                    "kind": "nonnegative_factor",
                    "factor": (0..b.nrows())
                        .map(|i| (0..b.ncols()).map(|j| b[(i, j)]).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                }),
                Certificate::DoublyNonnegative => serde_json::json!({ "kind": "doubly_nonnegative" }),
                Certificate::SimplexPartition { nodes } => {
                    serde_json::json!({ "kind": "simplex_partition", "nodes": nodes })
                }
            };
            serde_json::json!({ "verdict": "yes", "certificate": cert })
        }
        TriVerdict::No(w) => serde_json::json!({ "verdict": "no", "witness": witness_json(w) }),
        TriVerdict::Unknown(r) => serde_json::json!({ "verdict": "unknown", "reason": unknown_name(r) }),
    }
}

/// Wraps a body with the version and command name.
pub fn envelope(command: &str, body: Value) -> Value {
    let mut out = serde_json::Map::new();
    out.insert("version".into(), Value::String(VERSION.into()));
    out.insert("command".into(), Value::String(command.into()));
    if let Value::Object(m) = body {
        out.extend(m);
    }
    Value::Object(out)
}
