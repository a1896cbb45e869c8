//! Test-function families and Monte-Carlo comparison of `E f(Y) - E f(X)`.
//!
//! Every test function is built from a closed-form template whose Hessian
//! (or monotonicity) places it in an order's class; [`admissible`] is the
//! single membership table. Functions act on frame coordinates
//! `z = (x - center) / scale`, an affine map with positive scale, which keeps
//! each class invariant.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::cones::{self, CpBudget};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{GeneratorKind, SkewEllipticalParams};
use crate::orders::OrderKind;
use crate::sampler::{self, SampleBatch, Sampler, SerialSampler};
use crate::special::{sigmoid, softplus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeparableKind {
    Square,
    Softplus,
}

/// Closed-form templates, evaluated at frame coordinates `z`.
#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    /// `a'z`
    Linear { a: Vec<f64> },
    /// `(a'z + b)^2`
    Quadratic { a: Vec<f64>, b: f64 },
    /// `|a'z - k|`
    AbsLinear { a: Vec<f64>, k: f64 },
    /// `(a'z - k)_+`
    Hinge { a: Vec<f64>, k: f64 },
    /// `s ln(1 + exp((a'z - k)/s))`
    Softplus { a: Vec<f64>, k: f64, s: f64 },
    /// `z'Mz`, `M` row-major
    QuadraticForm { m: Vec<f64> },
    /// `prod_{i in active} sigmoid(+-(z_i - c_i)/s)`
    SigmoidProduct { c: Vec<f64>, s: f64, active: Vec<usize>, decreasing: bool },
    /// `1 - prod_{i in active} (1 - sigmoid((z_i - c_i)/s))`
    SigmoidUnion { c: Vec<f64>, s: f64, active: Vec<usize> },
    /// `sigmoid((a'z - c)/s)`
    SigmoidLinear { a: Vec<f64>, c: f64, s: f64 },
    /// `prod_{i in active} s softplus((z_i - c_i)/s)`
    SoftplusProduct { c: Vec<f64>, s: f64, active: Vec<usize> },
    /// `sum_i w_i psi(z_i - c_i)` with `psi` the square or softplus
    SeparableConvex { w: Vec<f64>, c: Vec<f64>, kind: SeparableKind },
    Constant { value: f64 },
}

fn dot(a: &[f64], z: &[f64]) -> f64 {
    a.iter().zip(z).map(|(x, y)| x * y).sum()
}

impl Form {
    pub fn eval_z(&self, z: &[f64]) -> f64 {
        match self {
            Form::Linear { a } => dot(a, z),
            Form::Quadratic { a, b } => {
                let t = dot(a, z) + b;
                t * t
            }
            Form::AbsLinear { a, k } => (dot(a, z) - k).abs(),
            Form::Hinge { a, k } => (dot(a, z) - k).max(0.0),
            Form::Softplus { a, k, s } => s * softplus((dot(a, z) - k) / s),
            Form::QuadraticForm { m } => {
                let n = z.len();
                let mut acc = 0.0;
                for i in 0..n {
                    acc += z[i] * dot(&m[i * n..(i + 1) * n], z);
                }
                acc
            }
            Form::SigmoidProduct { c, s, active, decreasing } => {
                let sign = if *decreasing { -1.0 } else { 1.0 };
                active.iter().map(|&i| sigmoid(sign * (z[i] - c[i]) / s)).product()
            }
            Form::SigmoidUnion { c, s, active } => {
                1.0 - active.iter().map(|&i| sigmoid(-(z[i] - c[i]) / s)).product::<f64>()
            }
            Form::SigmoidLinear { a, c, s } => sigmoid((dot(a, z) - c) / s),
            Form::SoftplusProduct { c, s, active } => {
                active.iter().map(|&i| s * softplus((z[i] - c[i]) / s)).product()
            }
            Form::SeparableConvex { w, c, kind } => {
                let mut acc = 0.0;
                for i in 0..z.len() {
                    if w[i] != 0.0 {
                        let t = z[i] - c[i];
                        acc += w[i]
                            * match kind {
                                SeparableKind::Square => t * t,
                                SeparableKind::Softplus => softplus(t),
                            };
                    }
                }
                acc
            }
            Form::Constant { value } => *value,
        }
    }

    /// Polynomial growth order; the expectation needs that many moments.
    pub fn growth_order(&self) -> u32 {
        match self {
            Form::Constant { .. }
            | Form::SigmoidProduct { .. }
            | Form::SigmoidUnion { .. }
            | Form::SigmoidLinear { .. } => 0,
            Form::Linear { .. } | Form::AbsLinear { .. } | Form::Hinge { .. } | Form::Softplus { .. } => 1,
            Form::Quadratic { .. } | Form::QuadraticForm { .. } => 2,
            Form::SoftplusProduct { active, .. } => active.len() as u32,
            Form::SeparableConvex { kind, .. } => match kind {
                SeparableKind::Square => 2,
                SeparableKind::Softplus => 1,
            },
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Form::Linear { .. } => "linear",
            Form::Quadratic { .. } => "quadratic",
            Form::AbsLinear { .. } => "abs_linear",
            Form::Hinge { .. } => "hinge",
            Form::Softplus { .. } => "softplus",
            Form::QuadraticForm { .. } => "quadratic_form",
            Form::SigmoidProduct { .. } => "sigmoid_product",
            Form::SigmoidUnion { .. } => "sigmoid_union",
            Form::SigmoidLinear { .. } => "sigmoid_linear",
            Form::SoftplusProduct { .. } => "softplus_product",
            Form::SeparableConvex { .. } => "separable_convex",
            Form::Constant { .. } => "constant",
        }
    }

    /// Formula with its parameters, in frame coordinates.
    pub fn describe(&self) -> String {
        match self {
            Form::Linear { a } => format!("a'z, a={a:?}"),
            Form::Quadratic { a, b } => format!("(a'z + b)^2, a={a:?}, b={b}"),
            Form::AbsLinear { a, k } => format!("|a'z - k|, a={a:?}, k={k}"),
            Form::Hinge { a, k } => format!("(a'z - k)_+, a={a:?}, k={k}"),
            Form::Softplus { a, k, s } => format!("s softplus((a'z - k)/s), a={a:?}, k={k}, s={s}"),
            Form::QuadraticForm { m } => format!("z'Mz, M={m:?}"),
            Form::SigmoidProduct { c, s, active, decreasing } => format!(
                "prod sigmoid({}(z_i - c_i)/s), i in {active:?}, c={c:?}, s={s}",
                if *decreasing { "-" } else { "" }
            ),
            Form::SigmoidUnion { c, s, active } => {
                format!("1 - prod (1 - sigmoid((z_i - c_i)/s)), i in {active:?}, c={c:?}, s={s}")
            }
            Form::SigmoidLinear { a, c, s } => format!("sigmoid((a'z - c)/s), a={a:?}, c={c}, s={s}"),
            Form::SoftplusProduct { c, s, active } => {
                format!("prod s softplus((z_i - c_i)/s), i in {active:?}, c={c:?}, s={s}")
            }
            Form::SeparableConvex { w, c, kind } => format!(
                "sum w_i {}(z_i - c_i), w={w:?}, c={c:?}",
                match kind {
                    SeparableKind::Square => "square",
                    SeparableKind::Softplus => "softplus",
                }
            ),
            Form::Constant { value } => format!("constant {value}"),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Form::Linear { a }
            | Form::Quadratic { a, .. }
            | Form::AbsLinear { a, .. }
            | Form::Hinge { a, .. }
            | Form::Softplus { a, .. }
            | Form::SigmoidLinear { a, .. } => Some(a.len()),
            Form::QuadraticForm { m } => Some(libm::sqrt(m.len() as f64) as usize),
            Form::SigmoidProduct { c, .. } | Form::SigmoidUnion { c, .. } | Form::SoftplusProduct { c, .. } => {
                Some(c.len())
            }
            Form::SeparableConvex { w, .. } => Some(w.len()),
            Form::Constant { .. } => None,
        }
    }
}

fn nonneg(a: &[f64]) -> bool {
    a.iter().all(|v| *v >= 0.0)
}

fn one_signed(a: &[f64]) -> bool {
    nonneg(a) || a.iter().all(|v| *v <= 0.0)
}

fn single_nonneg(a: &[f64]) -> bool {
    nonneg(a) && a.iter().filter(|v| **v != 0.0).count() <= 1
}

fn square(m: &[f64]) -> DMatrix<f64> {
    let n = libm::sqrt(m.len() as f64) as usize;
    DMatrix::from_row_slice(n, n, m)
}

/// Whether `form` belongs to the function class of `order` by construction.
pub fn admissible(order: OrderKind, form: &Form) -> bool {
    use OrderKind::*;
    match form {
        Form::Constant { .. } => true,
        Form::Linear { a } => match order {
            Cx | Lcx | Sm | Dcx | Ccx | Cp | Cop => true,
            Plcx => one_signed(a),
            St | Icx | Ism | Idcx | Uo | Iccx | Icp | Icop | Iplcx | Plst => nonneg(a),
        },
        Form::Quadratic { a, .. } => match order {
            Cx | Lcx | Ccx | Cop => true,
            Plcx | Sm | Dcx | Cp => one_signed(a),
            _ => false,
        },
        Form::AbsLinear { a, .. } => match order {
            Cx | Lcx => true,
            Plcx => one_signed(a),
            _ => false,
        },
        Form::Hinge { a, .. } => match order {
            Cx | Lcx => true,
            Plcx | Cp => one_signed(a),
            Icx | Iplcx | Icp | St | Plst => nonneg(a),
            _ => false,
        },
        Form::Softplus { a, s, .. } => {
            *s > 0.0
                && match order {
                    Cx | Lcx | Ccx | Cop => true,
                    Plcx | Sm | Dcx | Cp => one_signed(a),
                    Icx | Iplcx | Icp | Icop | Ism | Idcx | Iccx | St | Plst => nonneg(a),
                    Uo => single_nonneg(a),
                }
        }
        Form::QuadraticForm { m } => {
            let mm = square(m);
            let n = mm.nrows();
            if n * n != m.len() || linalg::check_symmetric(&mm, 0.0).is_err() {
                return false;
            }
            let tol = cones::default_tol(&mm);
            match order {
                Cx => linalg::min_eigenvalue(&mm) >= -tol,
                Sm => (0..n).all(|i| (0..n).all(|j| i == j || mm[(i, j)] >= 0.0)),
                Dcx => mm.iter().all(|v| *v >= 0.0),
                Ccx => (0..n).all(|i| mm[(i, i)] >= 0.0),
                Cp => matches!(
                    cones::is_completely_positive(&mm, tol, CpBudget::default()),
                    Ok(cones::TriVerdict::Yes(_))
                ),
                Cop => matches!(
                    cones::is_copositive(&mm, tol, cones::DEFAULT_COPOSITIVE_NODES),
                    Ok(cones::TriVerdict::Yes(_))
                ),
                _ => false,
            }
        }
        Form::SigmoidProduct { s, decreasing, .. } => {
            *s > 0.0
                && match order {
                    St | Uo | Ism => !decreasing,
                    Sm => true,
                    _ => false,
                }
        }
        Form::SigmoidUnion { s, .. } => *s > 0.0 && order == St,
        Form::SigmoidLinear { a, s, .. } => {
            *s > 0.0
                && match order {
                    St | Plst => nonneg(a),
                    Uo | Ism => single_nonneg(a),
                    _ => false,
                }
        }
        Form::SoftplusProduct { s, active, .. } => {
            *s > 0.0 && active.len() <= 2 && matches!(order, Dcx | Idcx | Sm | Ism | Ccx | Iccx | Cop | Icop | St | Uo)
        }
        Form::SeparableConvex { w, kind, .. } => match kind {
            SeparableKind::Square => order == Sm || (nonneg(w) && matches!(order, Cx | Ccx | Dcx | Cp | Cop)),
            SeparableKind::Softplus => {
                order == Sm
                    || (nonneg(w)
                        && matches!(
                            order,
                            Cx | Ccx | Dcx | Cp | Cop | Icx | Iccx | Ism | Idcx | Icp | Icop | St | Uo
                        ))
            }
        },
    }
}

/// Why `form` belongs to the class of `order`.
pub fn certificate(order: OrderKind, form: &Form) -> String {
    let why = match form {
        Form::Constant { .. } => "constant",
        Form::Linear { .. } => "affine: zero Hessian; nonnegative slope where monotonicity is required",
        Form::Quadratic { .. } => "ridge square: Hessian 2aa' is PSD, and completely positive for one-signed a",
        Form::AbsLinear { .. } => "convex function of a'z",
        Form::Hinge { .. } => "convex function of a'z, increasing for a >= 0",
        Form::Softplus { .. } => "smooth convex function of a'z: Hessian psi''aa'; increasing for a >= 0",
        Form::QuadraticForm { .. } => "constant Hessian 2M checked against the class cone",
        Form::SigmoidProduct { decreasing: false, .. } => {
            "product of increasing sigmoids: increasing, all mixed partials >= 0"
        }
        Form::SigmoidProduct { decreasing: true, .. } => {
            "product of decreasing sigmoids: second-order mixed partials >= 0"
        }
        Form::SigmoidUnion { .. } => "smoothed union indicator: increasing",
        Form::SigmoidLinear { .. } => "increasing sigmoid of a'z with a >= 0",
        Form::SoftplusProduct { .. } => {
            "product of nonnegative increasing convex factors: increasing, Hessian entrywise >= 0"
        }
        Form::SeparableConvex { .. } => "separable: diagonal Hessian, weights set the sign",
    };
    format!("{} member: {why}", order.name())
}

/// Affine coordinates `z = (x - center) / scale`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub center: Vec<f64>,
    pub scale: f64,
}

impl Frame {
    pub fn standard(dim: usize) -> Frame {
        Frame {
            center: vec![0.0; dim],
            scale: 1.0,
        }
    }

    /// Midpoint of the two means (locations when means do not exist), scaled
    /// by the largest marginal scale.
    pub fn for_pair(x: &SkewEllipticalParams, y: &SkewEllipticalParams) -> Frame {
        let (cx, cy) = match (x.mean(), y.mean()) {
            (Ok(a), Ok(b)) => (a, b),
            _ => (x.mu().clone(), y.mu().clone()),
        };
        let center = (0..x.dim()).map(|i| 0.5 * (cx[i] + cy[i])).collect();
        let scale = x.scales().iter().chain(y.scales().iter()).fold(0.0f64, |m, v| m.max(*v));
        Frame { center, scale }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn to_z(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = (x[i] - self.center[i]) / self.scale;
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub order: OrderKind,
    pub form: Form,
    pub frame: Frame,
    pub certificate: String,
}

impl TestFunction {
    /// Builds a member, rejecting forms outside the class.
    pub fn new(order: OrderKind, form: Form, frame: Frame) -> Result<TestFunction> {
        if let Some(d) = form.dim() {
            if d != frame.dim() {
                return Err(Error::DimensionMismatch {
                    expected: frame.dim(),
                    found: d,
                });
            }
        }
        if !(frame.scale > 0.0 && frame.scale.is_finite()) {
            return Err(Error::InvalidArgument("frame scale must be positive"));
        }
        if !admissible(order, &form) {
            return Err(Error::InvalidArgument("form is not a member of the order's class"));
        }
        let certificate = certificate(order, &form);
        Ok(TestFunction {
            order,
            form,
            frame,
            certificate,
        })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.frame.to_z(x, &mut z);
        self.form.eval_z(&z)
    }
}

fn moment_allowed(gen: Option<GeneratorKind>, form: &Form) -> bool {
    match gen {
        None => true,
        Some(g) => {
            let k = form.growth_order();
            k == 0 || g.has_moment(k)
        }
    }
}

// ---------------------------------------------------------------------------
// Families.

#[derive(Clone, Copy, Debug)]
enum Dir {
    Any,
    OneSigned,
    Nonneg,
    Single,
}

#[derive(Clone, Copy, Debug)]
enum Template {
    Linear(Dir),
    Quadratic(Dir),
    AbsLinear(Dir),
    Hinge(Dir),
    Softplus(Dir),
    QfPsd,
    QfOffdiagNonneg,
    QfNonneg,
    QfDiagNonneg,
    QfCompletelyPositive,
    QfCopositive,
    SigProduct { decreasing: bool },
    SigUnion,
    SigLinear(Dir),
    SpProduct,
    Separable(SeparableKind, bool),
}

fn templates(order: OrderKind) -> Vec<Template> {
    use Dir::*;
    use OrderKind::*;
    use Template as T;
    match order {
        Cx => vec![
            T::Quadratic(Any),
            T::AbsLinear(Any),
            T::Hinge(Any),
            T::Softplus(Any),
            T::QfPsd,
            T::Separable(SeparableKind::Square, true),
            T::Linear(Any),
        ],
        Lcx => vec![T::Quadratic(Any), T::AbsLinear(Any), T::Hinge(Any), T::Softplus(Any), T::Linear(Any)],
        Plcx => vec![
            T::Quadratic(OneSigned),
            T::AbsLinear(OneSigned),
            T::Hinge(OneSigned),
            T::Softplus(OneSigned),
            T::Linear(OneSigned),
        ],
        Iplcx => vec![T::Hinge(Nonneg), T::Softplus(Nonneg), T::Linear(Nonneg)],
        Plst => vec![T::SigLinear(Nonneg)],
        Sm => vec![
            T::SigProduct { decreasing: false },
            T::SigProduct { decreasing: true },
            T::Quadratic(OneSigned),
            T::Softplus(OneSigned),
            T::QfOffdiagNonneg,
            T::SpProduct,
            T::Separable(SeparableKind::Square, false),
            T::Linear(Any),
        ],
        Ism => vec![
            T::SigProduct { decreasing: false },
            T::SpProduct,
            T::Softplus(Nonneg),
            T::Separable(SeparableKind::Softplus, true),
            T::SigLinear(Single),
            T::Linear(Nonneg),
        ],
        Dcx => vec![
            T::Quadratic(OneSigned),
            T::Softplus(OneSigned),
            T::QfNonneg,
            T::SpProduct,
            T::Separable(SeparableKind::Square, true),
            T::Linear(Any),
        ],
        Idcx => vec![
            T::Softplus(Nonneg),
            T::SpProduct,
            T::Separable(SeparableKind::Softplus, true),
            T::Linear(Nonneg),
        ],
        Ccx => vec![
            T::Separable(SeparableKind::Square, true),
            T::Quadratic(Any),
            T::Softplus(Any),
            T::QfDiagNonneg,
            T::SpProduct,
            T::Linear(Any),
        ],
        Iccx => vec![
            T::Separable(SeparableKind::Softplus, true),
            T::Softplus(Nonneg),
            T::SpProduct,
            T::Linear(Nonneg),
        ],
        Cp => vec![
            T::Quadratic(OneSigned),
            T::Hinge(OneSigned),
            T::Softplus(OneSigned),
            T::QfCompletelyPositive,
            T::Separable(SeparableKind::Square, true),
            T::Linear(Any),
        ],
        Icp => vec![
            T::Hinge(Nonneg),
            T::Softplus(Nonneg),
            T::Separable(SeparableKind::Softplus, true),
            T::Linear(Nonneg),
        ],
        Cop => vec![
            T::Quadratic(Any),
            T::Softplus(Any),
            T::QfCopositive,
            T::SpProduct,
            T::Separable(SeparableKind::Square, true),
            T::Linear(Any),
        ],
        Icop => vec![
            T::Softplus(Nonneg),
            T::SpProduct,
            T::Separable(SeparableKind::Softplus, true),
            T::Linear(Nonneg),
        ],
        Icx => vec![
            T::Hinge(Nonneg),
            T::Softplus(Nonneg),
            T::Separable(SeparableKind::Softplus, true),
            T::Linear(Nonneg),
        ],
        St => vec![T::SigProduct { decreasing: false }, T::SigUnion, T::SigLinear(Nonneg)],
        Uo => vec![T::SigProduct { decreasing: false }, T::SigLinear(Single)],
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn direction(rng: &mut ChaCha8Rng, n: usize, dir: Dir) -> Vec<f64> {
    loop {
        let mut a: Vec<f64> = (0..n).map(|_| normal(rng)).collect();
        match dir {
            Dir::Any => {}
            Dir::Nonneg => a.iter_mut().for_each(|v| *v = v.abs()),
            Dir::OneSigned => {
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                a.iter_mut().for_each(|v| *v = s * v.abs());
            }
            Dir::Single => {
                let k = rng.random_range(0..n);
                a = vec![0.0; n];
                a[k] = 1.0;
            }
        }
        let norm = libm::sqrt(dot(&a, &a));
        if norm > 1e-8 {
            return a.into_iter().map(|v| v / norm).collect();
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

fn subset(rng: &mut ChaCha8Rng, n: usize, max: usize) -> Vec<usize> {
    let size = rng.random_range(1..=max.min(n));
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..size {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let mut out = idx[..size].to_vec();
    out.sort_unstable();
    out
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| normal(rng))
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n * n).map(|k| m[(k / n, k % n)]).collect()
}

fn draw(t: Template, n: usize, rng: &mut ChaCha8Rng) -> Form {
    const S: f64 = 0.1;
    match t {
        Template::Linear(d) => Form::Linear { a: direction(rng, n, d) },
        Template::Quadratic(d) => Form::Quadratic {
            a: direction(rng, n, d),
            b: uniform(rng, -1.0, 1.0),
        },
        Template::AbsLinear(d) => Form::AbsLinear {
            a: direction(rng, n, d),
            k: uniform(rng, -1.5, 1.5),
        },
        Template::Hinge(d) => Form::Hinge {
            a: direction(rng, n, d),
            k: uniform(rng, -1.5, 1.5),
        },
        Template::Softplus(d) => Form::Softplus {
            a: direction(rng, n, d),
            k: uniform(rng, -1.5, 1.5),
            s: uniform(rng, 0.2, 1.0),
        },
        Template::QfPsd => {
            let b = gaussian_matrix(rng, n, n);
            Form::QuadraticForm {
                m: row_major(&(b.transpose() * b / n as f64)),
            }
        }
        Template::QfOffdiagNonneg | Template::QfNonneg | Template::QfDiagNonneg => {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = normal(rng);
                    let v = match t {
                        Template::QfNonneg => v.abs(),
                        Template::QfOffdiagNonneg if i != j => v.abs(),
                        Template::QfDiagNonneg if i == j => v.abs(),
                        _ => v,
                    };
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Form::QuadraticForm { m: row_major(&m) }
        }
        Template::QfCompletelyPositive => {
            let b = gaussian_matrix(rng, n, n).map(f64::abs);
            let m = b.transpose() * b / n as f64;
            Form::QuadraticForm { m: row_major(&m) }
        }
        Template::QfCopositive => {
            let b = gaussian_matrix(rng, n, n);
            let mut m = b.transpose() * b / n as f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.random::<f64>();
                    m[(i, j)] += v;
                    m[(j, i)] += v;
                }
            }
            Form::QuadraticForm { m: row_major(&m) }
        }
        Template::SigProduct { decreasing } => Form::SigmoidProduct {
            c: (0..n).map(|_| uniform(rng, -1.5, 1.5)).collect(),
            s: S,
            active: subset(rng, n, 3),
            decreasing,
        },
        Template::SigUnion => Form::SigmoidUnion {
            c: (0..n).map(|_| uniform(rng, -1.5, 1.5)).collect(),
            s: S,
            active: subset(rng, n, 3),
        },
        Template::SigLinear(d) => {
            let a = direction(rng, n, d);
            Form::SigmoidLinear {
                a,
                c: uniform(rng, -2.0, 2.0),
                s: S,
            }
        }
        Template::SpProduct => Form::SoftplusProduct {
            c: (0..n).map(|_| uniform(rng, -1.5, 1.0)).collect(),
            s: uniform(rng, 0.3, 1.0),
            active: subset(rng, n, 2),
        },
        Template::Separable(kind, nonneg_weights) => Form::SeparableConvex {
            w: (0..n)
                .map(|_| {
                    let v = rng.random::<f64>();
                    if nonneg_weights || rng.random::<bool>() {
                        v
                    } else {
                        -v
                    }
                })
                .collect(),
            c: (0..n).map(|_| uniform(rng, -1.0, 1.0)).collect(),
            kind,
        },
    }
}

/// `count` members of the class of `order` in the standard frame.
pub fn test_family(order: OrderKind, dim: usize, count: usize, seed: u64) -> Result<Vec<TestFunction>> {
    test_family_in(order, &Frame::standard(dim), count, seed, None)
}

/// Family in a given frame. With `gen`, templates whose growth needs moments
/// the generator lacks are skipped.
pub fn test_family_in(
    order: OrderKind,
    frame: &Frame,
    count: usize,
    seed: u64,
    gen: Option<GeneratorKind>,
) -> Result<Vec<TestFunction>> {
    if count == 0 {
        return Err(Error::InvalidArgument("family size must be positive"));
    }
    let n = frame.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let usable: Vec<Template> = templates(order)
        .into_iter()
        .filter(|t| moment_allowed(gen, &draw(*t, n, &mut ChaCha8Rng::seed_from_u64(0))))
        .collect();
    if usable.is_empty() {
        return Err(Error::MomentsUndefined);
    }
    let mut out = Vec::with_capacity(count);
    let mut k = 0usize;
    while out.len() < count {
        let form = draw(usable[k % usable.len()], n, &mut rng);
        k += 1;
        if admissible(order, &form) {
            out.push(TestFunction::new(order, form, frame.clone())?);
        }
        if k > 100 * count {
            return Err(Error::InvalidArgument("could not build a family for this order"));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Gap estimation.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapEstimate {
    /// Estimate of `E f(Y) - E f(X)`.
    pub gap: f64,
    pub stderr: f64,
    pub m: usize,
}

impl GapEstimate {
    pub fn violates(&self, z: f64) -> bool {
        self.gap < -z * self.stderr
    }
}

/// Batch mapped to frame coordinates once, for repeated evaluation.
#[derive(Clone, Debug)]
pub struct FrameBatch {
    dim: usize,
    data: Vec<f64>,
}

impl FrameBatch {
    pub fn new(batch: &SampleBatch, frame: &Frame) -> Result<FrameBatch> {
        if batch.dim() != frame.dim() {
            return Err(Error::DimensionMismatch {
                expected: frame.dim(),
                found: batch.dim(),
            });
        }
        let mut data = vec![0.0; batch.data().len()];
        for (x, z) in batch.iter_rows().zip(data.chunks_exact_mut(batch.dim())) {
            frame.to_z(x, z);
        }
        Ok(FrameBatch { dim: batch.dim(), data })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }
}

// Mean and variance of f - f(first row): the shift makes identical batches
// give an exact zero and constants a zero variance.
fn shifted_moments(form: &Form, b: &FrameBatch, origin: f64) -> (f64, f64) {
    let m = b.rows() as f64;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for z in b.data.chunks_exact(b.dim) {
        let v = form.eval_z(z) - origin;
        sum += v;
        sq += v * v;
    }
    let mean = sum / m;
    let var = if b.rows() > 1 {
        ((sq - m * mean * mean) / (m - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, var)
}

/// Gap estimate on batches already mapped to the frame of `form`.
pub fn estimate_gap_frame(form: &Form, bx: &FrameBatch, by: &FrameBatch) -> Result<GapEstimate> {
    if bx.dim != by.dim {
        return Err(Error::DimensionMismatch {
            expected: bx.dim,
            found: by.dim,
        });
    }
    if bx.rows() == 0 || by.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let origin = form.eval_z(&bx.data[..bx.dim]);
    let (mx, vx) = shifted_moments(form, bx, origin);
    let (my, vy) = shifted_moments(form, by, origin);
    Ok(GapEstimate {
        gap: my - mx,
        stderr: libm::sqrt(vx / bx.rows() as f64 + vy / by.rows() as f64),
        m: bx.rows().min(by.rows()),
    })
}

/// `mean f(by) - mean f(bx)` with the independent-sample standard error.
pub fn estimate_gap(f: &TestFunction, bx: &SampleBatch, by: &SampleBatch) -> Result<GapEstimate> {
    let zx = FrameBatch::new(bx, &f.frame)?;
    let zy = FrameBatch::new(by, &f.frame)?;
    estimate_gap_frame(&f.form, &zx, &zy)
}

// ---------------------------------------------------------------------------
// Verification and falsification.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    /// Draws per distribution (for falsification: the largest stage).
    pub m: usize,
    pub seed: u64,
    pub family_size: usize,
    /// Violation threshold in standard errors.
    pub z: f64,
    /// Compare `X - E(X)` with `Y - E(Y)`.
    pub centered: bool,
    /// Draw both batches from one stream (common random numbers).
    pub common_random_numbers: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            m: 100_000,
            seed: 0,
            family_size: 40,
            z: 4.0,
            centered: false,
            common_random_numbers: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionResult {
    pub function: TestFunction,
    pub estimate: GapEstimate,
    /// `gap < -z stderr` on the first batches.
    pub flagged: bool,
    /// Re-estimate on fresh batches, for flagged functions.
    pub confirmation: Option<GapEstimate>,
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub order: OrderKind,
    pub config: McConfig,
    pub results: Vec<FunctionResult>,
    pub violations: usize,
    /// No confirmed violation.
    pub passed: bool,
}

fn prepare(
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    centered: bool,
) -> Result<(SkewEllipticalParams, SkewEllipticalParams)> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    if x.generator() != y.generator() {
        return Err(Error::GeneratorMismatch);
    }
    if centered {
        Ok((x.recentered()?, y.recentered()?))
    } else {
        Ok((x.clone(), y.clone()))
    }
}

fn batches(
    sampler: &dyn Sampler,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    m: usize,
    seed: u64,
    sx: u64,
    sy: u64,
    crn: bool,
    frame: &Frame,
) -> Result<(FrameBatch, FrameBatch)> {
    let bx = sampler.sample(x, m, sampler::substream(seed, sx))?;
    let by = sampler.sample(y, m, sampler::substream(seed, if crn { sx } else { sy }))?;
    Ok((FrameBatch::new(&bx, frame)?, FrameBatch::new(&by, frame)?))
}

/// Checks `E f(X) <= E f(Y)` over a random family of the class.
pub fn verify(order: OrderKind, x: &SkewEllipticalParams, y: &SkewEllipticalParams, cfg: &McConfig) -> Result<McReport> {
    verify_with(order, x, y, cfg, &SerialSampler)
}

pub fn verify_with(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    cfg: &McConfig,
    sampler: &dyn Sampler,
) -> Result<McReport> {
    if cfg.m == 0 {
        return Err(Error::EmptyBatch);
    }
    let (x, y) = prepare(x, y, cfg.centered)?;
    let frame = Frame::for_pair(&x, &y);
    let family = test_family_in(
        order,
        &frame,
        cfg.family_size,
        sampler::substream(cfg.seed, 2),
        Some(x.generator()),
    )?;
    let (zx, zy) = batches(sampler, &x, &y, cfg.m, cfg.seed, 0, 1, cfg.common_random_numbers, &frame)?;
    let mut results = Vec::with_capacity(family.len());
    for f in family {
        let estimate = estimate_gap_frame(&f.form, &zx, &zy)?;
        let flagged = estimate.violates(cfg.z);
        results.push(FunctionResult {
            function: f,
            estimate,
            flagged,
            confirmation: None,
            violated: false,
        });
    }
    if results.iter().any(|r| r.flagged) {
        let (fx, fy) = batches(sampler, &x, &y, cfg.m, cfg.seed, 3, 4, cfg.common_random_numbers, &frame)?;
        for r in results.iter_mut().filter(|r| r.flagged) {
            let c = estimate_gap_frame(&r.function.form, &fx, &fy)?;
            r.violated = c.violates(cfg.z);
            r.confirmation = Some(c);
        }
    }
    let violations = results.iter().filter(|r| r.violated).count();
    Ok(McReport {
        order,
        config: *cfg,
        results,
        violations,
        passed: violations == 0,
    })
}

/// A class member whose gap is significantly negative on two independent draws.
#[derive(Clone, Debug, PartialEq)]
pub struct FalsifyWitness {
    pub function: TestFunction,
    pub estimate: GapEstimate,
    pub confirmation: GapEstimate,
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

fn normalized(a: Vec<f64>) -> Option<Vec<f64>> {
    let norm = libm::sqrt(dot(&a, &a));
    if norm > 1e-10 && norm.is_finite() {
        Some(a.into_iter().map(|v| v / norm).collect())
    } else {
        None
    }
}

// Candidates aimed at the parameter differences of the pair.
fn directed_probes(x: &SkewEllipticalParams, y: &SkewEllipticalParams, frame: &Frame) -> Vec<Form> {
    let n = x.dim();
    let s = frame.scale;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        dirs.push(unit(n, i));
        dirs.push(unit(n, i).iter().map(|v| -v).collect());
    }
    if n > 1 {
        dirs.push(vec![1.0 / libm::sqrt(n as f64); n]);
        for i in 0..n {
            for j in (i + 1)..n {
                let mut a = vec![0.0; n];
                a[i] = core::f64::consts::FRAC_1_SQRT_2;
                a[j] = core::f64::consts::FRAC_1_SQRT_2;
                dirs.push(a.clone());
                a[j] = -a[j];
                dirs.push(a);
            }
        }
    }
    let (ex, ey) = match (x.mean(), y.mean()) {
        (Ok(a), Ok(b)) => (a, b),
        _ => (x.mu().clone(), y.mu().clone()),
    };
    if let Some(d) = normalized((0..n).map(|i| (ey[i] - ex[i]) / s).collect()) {
        dirs.push(d.iter().map(|v| -v).collect());
        dirs.push(d);
    }
    let diff = (y.omega() - x.omega()) / (s * s);
    let diff = linalg::symmetrize(&diff);
    let (l, v) = linalg::min_eigenpair(&diff);
    if l < 0.0 {
        if let Some(v) = normalized(linalg::to_vec(&v)) {
            dirs.push(v.iter().map(|t| -t).collect());
            dirs.push(v);
        }
    }
    if n > 1 {
        let tol = cones::default_tol(&diff);
        if let Ok(cones::TriVerdict::No(cones::Witness::Vector(w))) = cones::is_copositive(&diff, tol, 20_000) {
            if let Some(w) = normalized(w) {
                dirs.push(w);
            }
        }
    }

    let mut out = Vec::new();
    for a in &dirs {
        out.push(Form::Linear { a: a.clone() });
        out.push(Form::Quadratic { a: a.clone(), b: 0.0 });
        for &k in &[-1.5, -0.5, 0.0, 0.5, 1.5] {
            out.push(Form::Hinge { a: a.clone(), k });
            out.push(Form::Softplus { a: a.clone(), k, s: 0.5 });
        }
        for &c in &[-2.5, -1.5, -0.75, 0.0, 0.75, 1.5, 2.5] {
            out.push(Form::SigmoidLinear { a: a.clone(), c, s: 0.1 });
        }
    }
    for i in 0..n {
        for j in i..n {
            let mut m = vec![0.0; n * n];
            m[i * n + j] = 1.0;
            m[j * n + i] = 1.0;
            out.push(Form::QuadraticForm { m: m.clone() });
            out.push(Form::QuadraticForm {
                m: m.iter().map(|v| -v).collect(),
            });
            if i != j {
                for &c in &[-1.0, 0.0, 1.0] {
                    let cv = vec![c; n];
                    for decreasing in [false, true] {
                        out.push(Form::SigmoidProduct {
                            c: cv.clone(),
                            s: 0.1,
                            active: vec![i, j],
                            decreasing,
                        });
                    }
                    out.push(Form::SigmoidUnion {
                        c: cv.clone(),
                        s: 0.1,
                        active: vec![i, j],
                    });
                }
                for &c in &[-2.0, -1.0, 0.0, 1.0] {
                    out.push(Form::SoftplusProduct {
                        c: vec![c; n],
                        s: 0.5,
                        active: vec![i, j],
                    });
                }
            }
        }
        for &c in &[-1.0, 0.0, 1.0] {
            out.push(Form::SeparableConvex {
                w: unit(n, i),
                c: vec![c; n],
                kind: SeparableKind::Softplus,
            });
        }
        out.push(Form::SeparableConvex {
            w: unit(n, i),
            c: vec![0.0; n],
            kind: SeparableKind::Square,
        });
    }
    out
}

pub const FIRST_STAGE_ROWS: usize = 12_500;

// Classes whose random family is bounded get bounded probes too.
fn bounded_class(order: OrderKind) -> bool {
    matches!(order, OrderKind::St | OrderKind::Uo | OrderKind::Plst)
}

/// Searches the class for a function with `E f(Y) < E f(X)`.
///
/// Directed candidates come first, then `family_size` random members. The
/// sample size doubles from [`FIRST_STAGE_ROWS`] up to `cfg.m`; a candidate counts only
/// after it violates again on fresh batches.
pub fn falsify(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    cfg: &McConfig,
) -> Result<Option<FalsifyWitness>> {
    falsify_with(order, x, y, cfg, &SerialSampler)
}

pub fn falsify_with(
    order: OrderKind,
    x: &SkewEllipticalParams,
    y: &SkewEllipticalParams,
    cfg: &McConfig,
    sampler: &dyn Sampler,
) -> Result<Option<FalsifyWitness>> {
    if cfg.m == 0 {
        return Err(Error::EmptyBatch);
    }
    let (x, y) = prepare(x, y, cfg.centered)?;
    let gen = x.generator();
    let frame = Frame::for_pair(&x, &y);
    let mut candidates: Vec<Form> = directed_probes(&x, &y, &frame)
        .into_iter()
        .filter(|f| admissible(order, f) && moment_allowed(Some(gen), f))
        .filter(|f| !bounded_class(order) || f.growth_order() == 0)
        .collect();
    let random = test_family_in(order, &frame, cfg.family_size.max(1), sampler::substream(cfg.seed, 2), Some(gen))?;
    candidates.extend(random.into_iter().map(|f| f.form));

    let mut stages = Vec::new();
    let mut m = cfg.m.min(FIRST_STAGE_ROWS);
    loop {
        stages.push(m);
        if m >= cfg.m {
            break;
        }
        m = (2 * m).min(cfg.m);
    }
    for (s, &m) in stages.iter().enumerate() {
        let s = s as u64;
        let (zx, zy) = batches(sampler, &x, &y, m, cfg.seed, 10 + 4 * s, 11 + 4 * s, cfg.common_random_numbers, &frame)?;
        let mut flagged: Vec<(f64, usize, GapEstimate)> = Vec::new();
        for (k, form) in candidates.iter().enumerate() {
            let e = estimate_gap_frame(form, &zx, &zy)?;
            if e.violates(cfg.z) {
                let t = if e.stderr > 0.0 { e.gap / e.stderr } else { f64::NEG_INFINITY };
                flagged.push((t, k, e));
            }
        }
        if flagged.is_empty() {
            continue;
        }
        flagged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
        let (fx, fy) = batches(sampler, &x, &y, m, cfg.seed, 12 + 4 * s, 13 + 4 * s, cfg.common_random_numbers, &frame)?;
        for (_, k, e) in flagged.into_iter().take(8) {
            let c = estimate_gap_frame(&candidates[k], &fx, &fy)?;
            if c.violates(cfg.z) {
                return Ok(Some(FalsifyWitness {
                    function: TestFunction::new(order, candidates[k].clone(), frame.clone())?,
                    estimate: e,
                    confirmation: c,
                }));
            }
        }
    }
    Ok(None)
}
