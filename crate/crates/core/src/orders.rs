//! Parameter conditions for stochastic orders between two skew-elliptical
//! laws sharing a generator.
//!
//! Each order has a list of sufficient and a list of necessary conditions.
//! A verdict is `OrderedBySufficiency` when every sufficient condition holds,
//! `RefutedByNecessity` when an applicable necessary condition fails, and
//! `Inconclusive` otherwise.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::cones::{self, ConeKind, CpBudget, TriVerdict, UnknownReason, Witness};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{self, GeneratorKind, SkewEllipticalParams};

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OrderKind {
    Cx,
    Sm,
    Dcx,
    Ccx,
    Cp,
    Cop,
    St,
    Icx,
    Ism,
    Idcx,
    Uo,
    Iccx,
    Icp,
    Icop,
    Lcx,
    Plcx,
    Iplcx,
    Plst,
}

impl OrderKind {
    pub const ALL: [OrderKind; 18] = [
        OrderKind::Cx,
        OrderKind::Sm,
        OrderKind::Dcx,
        OrderKind::Ccx,
        OrderKind::Cp,
        OrderKind::Cop,
        OrderKind::St,
        OrderKind::Icx,
        OrderKind::Ism,
        OrderKind::Idcx,
        OrderKind::Uo,
        OrderKind::Iccx,
        OrderKind::Icp,
        OrderKind::Icop,
        OrderKind::Lcx,
        OrderKind::Plcx,
        OrderKind::Iplcx,
        OrderKind::Plst,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OrderKind::Cx => "cx",
            OrderKind::Sm => "sm",
            OrderKind::Dcx => "dcx",
            OrderKind::Ccx => "ccx",
            OrderKind::Cp => "cp",
            OrderKind::Cop => "cop",
            OrderKind::St => "st",
            OrderKind::Icx => "icx",
            OrderKind::Ism => "ism",
            OrderKind::Idcx => "idcx",
            OrderKind::Uo => "uo",
            OrderKind::Iccx => "iccx",
            OrderKind::Icp => "icp",
            OrderKind::Icop => "icop",
            OrderKind::Lcx => "lcx",
            OrderKind::Plcx => "plcx",
            OrderKind::Iplcx => "iplcx",
            OrderKind::Plst => "plst",
        }
    }

    /// Case-insensitive lookup by short name.
    pub fn from_name(s: &str) -> Option<OrderKind> {
        OrderKind::ALL
            .iter()
            .copied()
            .find(|o| o.name().eq_ignore_ascii_case(s))
    }

    /// Test functions of the class are coordinatewise nondecreasing.
    pub fn is_increasing(&self) -> bool {
        matches!(
            self,
            OrderKind::St
                | OrderKind::Icx
                | OrderKind::Ism
                | OrderKind::Idcx
                | OrderKind::Iccx
                | OrderKind::Icp
                | OrderKind::Icop
                | OrderKind::Iplcx
                | OrderKind::Plst
        )
    }

    /// The necessary conditions use `E|U0|`.
    pub fn needs_kappa1(&self) -> bool {
        matches!(
            self,
            OrderKind::Cx
                | OrderKind::Sm
                | OrderKind::Dcx
                | OrderKind::Ccx
                | OrderKind::Cp
                | OrderKind::Cop
                | OrderKind::Icp
                | OrderKind::Icop
                | OrderKind::Lcx
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
    Undecided,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Detail {
    /// Smallest slack of the inequality (negative when violated) and where it occurs.
    Margin { worst: f64, at: Option<(usize, usize)> },
    /// Cone membership certified; names the certificate.
    Certified(&'static str),
    /// Cone membership refuted.
    Witness(Witness),
    NotApplicable(String),
    Unknown(UnknownReason),
    /// Result of the tail-ratio check on the generator.
    TailRatio { holds: bool, c: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionResult {
    pub name: String,
    pub status: Status,
    pub detail: Detail,
}

impl ConditionResult {
    fn new(name: &str, status: Status, detail: Detail) -> Self {
        ConditionResult {
            name: name.to_string(),
            status,
            detail,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Overall {
    OrderedBySufficiency,
    RefutedByNecessity,
    Inconclusive,
}

impl Overall {
    pub fn name(&self) -> &'static str {
        match self {
            Overall::OrderedBySufficiency => "ordered_by_sufficiency",
            Overall::RefutedByNecessity => "refuted_by_necessity",
            Overall::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderVerdict {
    pub order: OrderKind,
    pub sufficiency: Vec<ConditionResult>,
    pub necessity: Vec<ConditionResult>,
    pub overall: Overall,
    pub notes: Vec<String>,
}

/// Evaluation options.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mode {
    /// Compare `X - E(X)` with `Y - E(Y)` instead of `X` with `Y`.
    pub centered: bool,
}

fn combine(sufficiency: &[ConditionResult], necessity: &[ConditionResult]) -> Overall {
    if !sufficiency.is_empty() && sufficiency.iter().all(|c| c.status == Status::Holds) {
        Overall::OrderedBySufficiency
    } else if necessity.iter().any(|c| c.status == Status::Fails) {
        Overall::RefutedByNecessity
    } else {
        Overall::Inconclusive
    }
}

// ---------------------------------------------------------------------------
// Condition primitives.

fn entry_tol(tol: f64, a: f64, b: f64) -> f64 {
    tol * (1.0 + a.abs().max(b.abs()))
}

fn vec_equal(name: &str, x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> ConditionResult {
    let mut worst = 0.0;
    let mut at = None;
    let mut ok = true;
    for i in 0..x.len() {
        let d = (x[i] - y[i]).abs();
        if d > entry_tol(tol, x[i], y[i]) {
            ok = false;
        }
        if -d < worst || at.is_none() {
            worst = -d;
            at = Some((i, i));
        }
    }
    let status = if ok { Status::Holds } else { Status::Fails };
    ConditionResult::new(name, status, Detail::Margin { worst, at })
}

fn vec_le(name: &str, x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> ConditionResult {
    let mut worst = f64::INFINITY;
    let mut at = None;
    let mut ok = true;
    for i in 0..x.len() {
        let slack = y[i] - x[i];
        if slack < -entry_tol(tol, x[i], y[i]) {
            ok = false;
        }
        if slack < worst {
            worst = slack;
            at = Some((i, i));
        }
    }
    let status = if ok { Status::Holds } else { Status::Fails };
    ConditionResult::new(name, status, Detail::Margin { worst, at })
}

#[derive(Clone, Copy)]
enum Rel {
    Equal,
    Le,
}

// Compares Omega^x and Omega^y entrywise on the selected entries.
fn mat_rel(
    name: &str,
    ox: &DMatrix<f64>,
    oy: &DMatrix<f64>,
    tol: f64,
    rel: Rel,
    select: impl Fn(usize, usize) -> bool,
) -> ConditionResult {
    let n = ox.nrows();
    let t = mat_tol(ox, oy, tol);
    let mut worst = f64::INFINITY;
    let mut at = None;
    let mut ok = true;
    for i in 0..n {
        for j in i..n {
            if !select(i, j) {
                continue;
            }
            let diff = oy[(i, j)] - ox[(i, j)];
            let slack = match rel {
                Rel::Equal => -diff.abs(),
                Rel::Le => diff,
            };
            if slack < -t {
                ok = false;
            }
            if slack < worst {
                worst = slack;
                at = Some((i, j));
            }
        }
    }
    if at.is_none() {
        worst = 0.0;
    }
    let status = if ok { Status::Holds } else { Status::Fails };
    ConditionResult::new(name, status, Detail::Margin { worst, at })
}

fn mat_tol(ox: &DMatrix<f64>, oy: &DMatrix<f64>, tol: f64) -> f64 {
    tol * (1.0 + linalg::norm_inf(ox).max(linalg::norm_inf(oy)))
}

fn certificate_name(c: &cones::Certificate) -> &'static str {
    match c {
        cones::Certificate::Direct => "direct",
        cones::Certificate::Factor(_) => "nonnegative_factor",
        cones::Certificate::DoublyNonnegative => "doubly_nonnegative",
        cones::Certificate::SimplexPartition { .. } => "simplex_partition",
    }
}

fn cone_condition(
    name: &str,
    ox: &DMatrix<f64>,
    oy: &DMatrix<f64>,
    tol: f64,
    cone: ConeKind,
) -> Result<ConditionResult> {
    let diff = linalg::symmetrize(&(oy - ox));
    let t = mat_tol(ox, oy, tol);
    let v = match cone {
        ConeKind::Copositive => cones::is_copositive(&diff, t, cones::DEFAULT_COPOSITIVE_NODES)?,
        ConeKind::CompletelyPositive => cones::is_completely_positive(&diff, t, CpBudget::default())?,
        other => cones::in_cone(&diff, other, t)?,
    };
    Ok(match v {
        TriVerdict::Yes(c) => ConditionResult::new(name, Status::Holds, Detail::Certified(certificate_name(&c))),
        TriVerdict::No(w) => ConditionResult::new(name, Status::Fails, Detail::Witness(w)),
        TriVerdict::Unknown(r) => ConditionResult::new(name, Status::Undecided, Detail::Unknown(r)),
    })
}

fn check_pair(x: &SkewEllipticalParams, y: &SkewEllipticalParams) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    if x.generator() != y.generator() {
        return Err(Error::GeneratorMismatch);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sufficient conditions.

/// Sufficient conditions for `X <= Y` in `order`.
pub fn sufficient(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
) -> Result<Vec<ConditionResult>> {
    check_pair(x, y)?;
    let (ox, oy) = (x.omega(), y.omega());
    let increasing = matches!(
        order,
        OrderKind::St
            | OrderKind::Icx
            | OrderKind::Ism
            | OrderKind::Idcx
            | OrderKind::Uo
            | OrderKind::Iccx
            | OrderKind::Icp
            | OrderKind::Icop
            | OrderKind::Iplcx
            | OrderKind::Plst
    );
    let mut out = if increasing {
        vec![
            vec_le("mu_le", x.mu(), y.mu(), tol),
            vec_le("delta_w_le", x.delta_w(), y.delta_w(), tol),
        ]
    } else {
        vec![
            vec_equal("mu_equal", x.mu(), y.mu(), tol),
            vec_equal("delta_w_equal", x.delta_w(), y.delta_w(), tol),
        ]
    };
    let all = |_: usize, _: usize| true;
    let diag = |i: usize, j: usize| i == j;
    let off = |i: usize, j: usize| i != j;
    match order {
        OrderKind::Cx | OrderKind::Icx | OrderKind::Lcx => {
            out.push(cone_condition("diff_psd", ox, oy, tol, ConeKind::Psd)?)
        }
        OrderKind::Sm | OrderKind::Ism | OrderKind::Uo => {
            out.push(mat_rel("omega_diag_equal", ox, oy, tol, Rel::Equal, diag));
            out.push(mat_rel("omega_offdiag_le", ox, oy, tol, Rel::Le, off));
        }
        OrderKind::Dcx | OrderKind::Idcx => {
            out.push(mat_rel("omega_entries_le", ox, oy, tol, Rel::Le, all))
        }
        OrderKind::Ccx | OrderKind::Iccx => {
            out.push(mat_rel("omega_diag_le", ox, oy, tol, Rel::Le, diag));
            out.push(mat_rel("omega_offdiag_equal", ox, oy, tol, Rel::Equal, off));
        }
        OrderKind::Cp | OrderKind::Icp | OrderKind::Plcx | OrderKind::Iplcx => {
            out.push(cone_condition("diff_copositive", ox, oy, tol, ConeKind::Copositive)?)
        }
        OrderKind::Cop | OrderKind::Icop => out.push(cone_condition(
            "diff_completely_positive",
            ox,
            oy,
            tol,
            ConeKind::CompletelyPositive,
        )?),
        OrderKind::St | OrderKind::Plst => {
            out.push(mat_rel("omega_equal", ox, oy, tol, Rel::Equal, all))
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Tail-ratio condition on the generator.

/// Outcome of the tail-ratio check: the limit `C` of
/// `(s1/s2) g(t^2/s2^2) / g(t^2/s1^2)` as `|t| -> inf`, and whether it
/// stays away from one. `c` is `None` when the scales coincide.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRatio {
    pub holds: bool,
    pub c: Option<f64>,
}

const TAIL_BAND: f64 = 1e-6;

fn tail_limit(gen: GeneratorKind, s1: f64, s2: f64, sign: f64) -> Result<f64> {
    let ln_ratio = |t: f64| -> f64 {
        libm::log(s1 / s2) + gen.ln_generator(t * t / (s2 * s2), 1) - gen.ln_generator(t * t / (s1 * s1), 1)
    };
    let mut prev = ln_ratio(sign);
    let mut prev2 = prev;
    for k in 1..=40 {
        let cur = ln_ratio(sign * libm::ldexp(1.0, k));
        if cur < -745.0 && cur < prev {
            return Ok(0.0);
        }
        if cur > 710.0 && cur > prev {
            return Ok(f64::INFINITY);
        }
        prev2 = prev;
        prev = cur;
    }
    // Algebraic tails converge like t^-2, so one Richardson step removes the leading error.
    let extrapolated = (4.0 * prev - prev2) / 3.0;
    if (prev - prev2).abs() > 1e-6 * (1.0 + prev.abs()) {
        return Err(Error::NumericallyUnstable);
    }
    Ok(libm::exp(extrapolated))
}

/// Tail-ratio condition for scales `sigma1`, `sigma2` under `gen`.
pub fn tail_ratio_condition(gen: GeneratorKind, sigma1: f64, sigma2: f64) -> Result<TailRatio> {
    gen.validate()?;
    if !(sigma1 > 0.0 && sigma2 > 0.0 && sigma1.is_finite() && sigma2.is_finite()) {
        return Err(Error::InvalidArgument("scales must be finite and positive"));
    }
    if sigma1 == sigma2 {
        return Ok(TailRatio { holds: true, c: None });
    }
    let lo = tail_limit(gen, sigma1, sigma2, -1.0)?;
    let hi = tail_limit(gen, sigma1, sigma2, 1.0)?;
    let agree = if lo.is_infinite() || hi.is_infinite() {
        lo == hi
    } else {
        (lo - hi).abs() <= 1e-6 * (1.0 + lo.abs().max(hi.abs()))
    };
    if !agree {
        return Err(Error::NumericallyUnstable);
    }
    let c = hi;
    let holds = !(c >= 1.0 - TAIL_BAND && c <= 1.0 + TAIL_BAND);
    Ok(TailRatio { holds, c: Some(c) })
}

fn tail_condition(gen: GeneratorKind, sx: &[f64], sy: &[f64]) -> ConditionResult {
    let mut worst = TailRatio { holds: true, c: None };
    for (a, b) in sx.iter().zip(sy) {
        match tail_ratio_condition(gen, *a, *b) {
            Ok(r) => {
                if !r.holds || worst.c.is_none() {
                    worst = r;
                }
                if !r.holds {
                    break;
                }
            }
            Err(_) => {
                return ConditionResult::new(
                    "side_tail_ratio",
                    Status::Undecided,
                    Detail::NotApplicable("tail limits of the generator are unstable".to_string()),
                )
            }
        }
    }
    let detail = Detail::TailRatio {
        holds: worst.holds,
        c: worst.c,
    };
    if worst.holds {
        ConditionResult::new("side_tail_ratio", Status::Holds, detail)
    } else {
        ConditionResult::new("side_tail_ratio", Status::Undecided, detail)
    }
}

// ---------------------------------------------------------------------------
// Necessary conditions.

fn side(name: &str, ok: bool, why: &str) -> ConditionResult {
    if ok {
        ConditionResult::new(name, Status::Holds, Detail::Margin { worst: 0.0, at: None })
    } else {
        ConditionResult::new(name, Status::Undecided, Detail::NotApplicable(why.to_string()))
    }
}

// Side conditions first; when one is unmet every later entry is inapplicable.
fn gated(mut sides: Vec<ConditionResult>, body: Vec<ConditionResult>) -> Vec<ConditionResult> {
    let met = sides.iter().all(|c| c.status == Status::Holds);
    if met {
        sides.extend(body);
    } else {
        for c in body {
            sides.push(ConditionResult::new(
                &c.name,
                Status::Undecided,
                Detail::NotApplicable("side condition not met".to_string()),
            ));
        }
    }
    sides
}

fn same_sign(x: &DVector<f64>, y: &DVector<f64>) -> bool {
    x.iter().zip(y.iter()).all(|(a, b)| a * b >= 0.0)
}

fn equal_within(x: &DVector<f64>, y: &DVector<f64>, tol: f64) -> bool {
    vec_equal("", x, y, tol).status == Status::Holds
}

/// Necessary conditions for `X <= Y` in `order` (uncentered comparison).
pub fn necessary(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
) -> Result<Vec<ConditionResult>> {
    necessary_with(order, x, y, tol, Mode::default())
}

/// Necessary conditions. With `mode.centered` the inputs are taken as the
/// already recentered vectors and the centered-only rules apply.
pub fn necessary_with(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
    mode: Mode,
) -> Result<Vec<ConditionResult>> {
    check_pair(x, y)?;
    let gen = x.generator();
    let (ox, oy) = (x.omega(), y.omega());
    let adjusted = || -> Result<(DVector<f64>, DVector<f64>)> {
        let k = model::kappa1(gen)?;
        Ok((x.mu() + x.delta_w() * k, y.mu() + y.delta_w() * k))
    };
    let all = |_: usize, _: usize| true;
    let diag = |i: usize, j: usize| i == j;
    let off = |i: usize, j: usize| i != j;
    let mu_eq = || {
        side(
            "side_mu_equal",
            equal_within(x.mu(), y.mu(), tol),
            "locations differ",
        )
    };
    let st_sides = || {
        vec![
            side(
                "side_delta_w_same_sign",
                same_sign(x.delta_w(), y.delta_w()),
                "some skewness pair has opposite signs",
            ),
            tail_condition(gen, x.scales().as_slice(), y.scales().as_slice()),
        ]
    };
    let out = match order {
        OrderKind::Cx | OrderKind::Sm | OrderKind::Dcx | OrderKind::Ccx | OrderKind::Cp | OrderKind::Cop => {
            let (mx, my) = adjusted()?;
            let (name, cone) = match order {
                OrderKind::Cx => ("diff_psd", ConeKind::Psd),
                OrderKind::Sm => ("diff_offdiag_nonneg_diag_zero", ConeKind::OffDiagNonnegDiagZero),
                OrderKind::Dcx => ("diff_nonneg", ConeKind::EntrywiseNonneg),
                OrderKind::Ccx => ("diff_diag_nonneg_offdiag_zero", ConeKind::DiagNonnegOffDiagZero),
                OrderKind::Cp => ("diff_copositive", ConeKind::Copositive),
                _ => ("diff_completely_positive", ConeKind::CompletelyPositive),
            };
            vec![
                vec_equal("adjusted_mean_equal", &mx, &my, tol),
                cone_condition(name, ox, oy, tol, cone)?,
            ]
        }
        OrderKind::Lcx => {
            let (mx, my) = adjusted()?;
            vec![
                vec_equal("adjusted_mean_equal", &mx, &my, tol),
                cone_condition("diff_psd", ox, oy, tol, ConeKind::Psd)?,
            ]
        }
        OrderKind::Icp | OrderKind::Icop => {
            let (mx, my) = adjusted()?;
            let (name, cone) = if order == OrderKind::Icp {
                ("diff_copositive", ConeKind::Copositive)
            } else {
                ("diff_completely_positive", ConeKind::CompletelyPositive)
            };
            vec![
                vec_le("adjusted_mean_le", &mx, &my, tol),
                cone_condition(name, ox, oy, tol, cone)?,
            ]
        }
        OrderKind::St | OrderKind::Plst => gated(
            st_sides(),
            vec![
                vec_le("mu_le", x.mu(), y.mu(), tol),
                vec_le("delta_w_le", x.delta_w(), y.delta_w(), tol),
                mat_rel("omega_equal", ox, oy, tol, Rel::Equal, all),
            ],
        ),
        OrderKind::Icx | OrderKind::Iplcx => gated(
            vec![mu_eq()],
            vec![
                vec_le("delta_w_le", x.delta_w(), y.delta_w(), tol),
                cone_condition("diff_copositive", ox, oy, tol, ConeKind::Copositive)?,
            ],
        ),
        OrderKind::Plcx => gated(
            vec![mu_eq()],
            vec![
                vec_equal("delta_w_equal", x.delta_w(), y.delta_w(), tol),
                cone_condition("diff_copositive", ox, oy, tol, ConeKind::Copositive)?,
            ],
        ),
        OrderKind::Iccx => gated(
            vec![mu_eq()],
            vec![
                vec_le("delta_w_le", x.delta_w(), y.delta_w(), tol),
                mat_rel("omega_entries_le", ox, oy, tol, Rel::Le, all),
            ],
        ),
        OrderKind::Ism => gated(
            vec![side("side_centered", mode.centered, "rule applies to centered vectors only")],
            vec![
                mat_rel("omega_diag_equal", ox, oy, tol, Rel::Equal, diag),
                mat_rel("omega_offdiag_le", ox, oy, tol, Rel::Le, off),
            ],
        ),
        OrderKind::Idcx => gated(
            vec![side("side_centered", mode.centered, "rule applies to centered vectors only")],
            vec![mat_rel("omega_entries_le", ox, oy, tol, Rel::Le, all)],
        ),
        OrderKind::Uo => gated(
            vec![side(
                "side_delta_w_equal",
                equal_within(x.delta_w(), y.delta_w(), tol),
                "skewness vectors differ",
            )],
            vec![
                vec_le("mu_le", x.mu(), y.mu(), tol),
                mat_rel("omega_diag_equal", ox, oy, tol, Rel::Equal, diag),
            ],
        ),
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verdicts.

pub fn classify(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
) -> Result<OrderVerdict> {
    classify_with(order, x, y, tol, Mode::default())
}

/// Full verdict with condition trace. In centered mode both inputs are first
/// moved to mean zero.
pub fn classify_with(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
    mode: Mode,
) -> Result<OrderVerdict> {
    check_pair(x, y)?;
    let mut notes = Vec::new();
    let (xc, yc);
    let (x, y) = if mode.centered {
        xc = x.recentered()?;
        yc = y.recentered()?;
        notes.push("centered mode: both vectors recentered to mean zero".to_string());
        (&xc, &yc)
    } else {
        (x, y)
    };
    if order.needs_kappa1() && !x.generator().has_moment(1) {
        return Err(Error::MomentsUndefined);
    }
    let sufficiency = sufficient(order, x, y, tol)?;
    let necessity = necessary_with(order, x, y, tol, mode)?;
    if matches!(order, OrderKind::St | OrderKind::Plst) {
        if let Some(t) = necessity.iter().find(|c| c.name == "side_tail_ratio") {
            if let Detail::TailRatio { holds, c } = t.detail {
                notes.push(format!(
                    "tail-ratio condition {} (C = {})",
                    if holds { "holds" } else { "fails" },
                    match c {
                        Some(v) => format!("{v}"),
                        None => "undefined".to_string(),
                    }
                ));
            }
        }
    }
    let overall = combine(&sufficiency, &necessity);
    Ok(OrderVerdict {
        order,
        sufficiency,
        necessity,
        overall,
        notes,
    })
}

/// Verdicts for several orders on one pair.
pub fn classify_all(
    orders: &[OrderKind],
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
    mode: Mode,
) -> Result<BTreeMap<OrderKind, OrderVerdict>> {
    let mut out = BTreeMap::new();
    for &o in orders {
        out.insert(o, classify_with(o, x, y, tol, mode)?);
    }
    Ok(out)
}

/// Orders with a dedicated one-dimensional rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnivariateKind {
    St,
    Icx,
    Cx,
}

impl UnivariateKind {
    pub fn order(&self) -> OrderKind {
        match self {
            UnivariateKind::St => OrderKind::St,
            UnivariateKind::Icx => OrderKind::Icx,
            UnivariateKind::Cx => OrderKind::Cx,
        }
    }
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

/// Verdict for one-dimensional laws in location `mu`, scale `sigma` and
/// skewness `sigma delta` coordinates.
pub fn univariate_order(
    kind: UnivariateKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    tol: f64,
) -> Result<OrderVerdict> {
    check_pair(x, y)?;
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: x.dim(),
        });
    }
    let (mx, my) = (scalar(x.mu()[0]), scalar(y.mu()[0]));
    let (sx, sy) = (scalar(x.scales()[0]), scalar(y.scales()[0]));
    let (dx, dy) = (scalar(x.delta_w()[0]), scalar(y.delta_w()[0]));
    let mu_side = || side("side_mu_equal", equal_within(&mx, &my, tol), "locations differ");
    let (sufficiency, necessity) = match kind {
        UnivariateKind::St => (
            vec![
                vec_le("mu_le", &mx, &my, tol),
                vec_equal("sigma_equal", &sx, &sy, tol),
                vec_le("delta_w_le", &dx, &dy, tol),
            ],
            gated(
                vec![
                    side(
                        "side_delta_same_sign",
                        x.delta()[0] * y.delta()[0] >= 0.0,
                        "skewness parameters have opposite signs",
                    ),
                    tail_condition(x.generator(), &[sx[0]], &[sy[0]]),
                ],
                vec![
                    vec_le("mu_le", &mx, &my, tol),
                    vec_le("delta_w_le", &dx, &dy, tol),
                    vec_equal("sigma_equal", &sx, &sy, tol),
                ],
            ),
        ),
        UnivariateKind::Icx => (
            vec![
                vec_le("mu_le", &mx, &my, tol),
                vec_le("sigma_le", &sx, &sy, tol),
                vec_le("delta_w_le", &dx, &dy, tol),
            ],
            gated(
                vec![mu_side()],
                vec![vec_le("delta_w_le", &dx, &dy, tol), vec_le("sigma_le", &sx, &sy, tol)],
            ),
        ),
        UnivariateKind::Cx => (
            vec![
                vec_equal("mu_equal", &mx, &my, tol),
                vec_le("sigma_le", &sx, &sy, tol),
                vec_equal("delta_w_equal", &dx, &dy, tol),
            ],
            gated(
                vec![mu_side()],
                vec![vec_equal("delta_w_equal", &dx, &dy, tol), vec_le("sigma_le", &sx, &sy, tol)],
            ),
        ),
    };
    let overall = combine(&sufficiency, &necessity);
    let mut notes = vec!["univariate rule: skewness compared as sigma * delta".to_string()];
    if kind != UnivariateKind::St {
        notes.push("univariate rule assumes one shared generator with scales sigma_x and sigma_y".to_string());
    }
    Ok(OrderVerdict {
        order: kind.order(),
        sufficiency,
        necessity,
        overall,
        notes,
    })
}

/// Known implications between orders: `(stronger, weaker)`.
pub const IMPLICATIONS: [(OrderKind, OrderKind); 9] = [
    (OrderKind::Cx, OrderKind::Icx),
    (OrderKind::Cx, OrderKind::Lcx),
    (OrderKind::Lcx, OrderKind::Plcx),
    (OrderKind::Cx, OrderKind::Plcx),
    (OrderKind::St, OrderKind::Icx),
    (OrderKind::Icx, OrderKind::Iplcx),
    (OrderKind::St, OrderKind::Iplcx),
    (OrderKind::St, OrderKind::Plst),
    (OrderKind::Plcx, OrderKind::Iplcx),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImplicationViolation {
    pub stronger: OrderKind,
    pub weaker: OrderKind,
}

/// Pairs where the stronger order is established but the weaker one refuted.
pub fn implication_consistency(verdicts: &BTreeMap<OrderKind, OrderVerdict>) -> Vec<ImplicationViolation> {
    IMPLICATIONS
        .iter()
        .filter(|(a, b)| {
            matches!(
                (verdicts.get(a), verdicts.get(b)),
                (Some(va), Some(vb))
                    if va.overall == Overall::OrderedBySufficiency
                        && vb.overall == Overall::RefutedByNecessity
            )
        })
        .map(|&(stronger, weaker)| ImplicationViolation { stronger, weaker })
        .collect()
}
