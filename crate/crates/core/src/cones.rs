//! Membership tests for symmetric matrix cones.
//!
//! PSD and the sign-pattern cones are decided exactly. Copositivity is
//! decided by simplex-partition branch and bound and complete positivity by
//! doubly-nonnegative screening plus factor search, both under a budget.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Default node limit of the copositivity search.
pub const DEFAULT_COPOSITIVE_NODES: usize = 100_000;
/// Default sweep limit per restart of the factor search.
pub const DEFAULT_CP_ITERATIONS: usize = 10_000;
pub const DEFAULT_CP_RESTARTS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConeKind {
    Psd,
    EntrywiseNonneg,
    /// Zero diagonal, nonnegative off-diagonal.
    OffDiagNonnegDiagZero,
    /// Nonnegative diagonal, zero off-diagonal.
    DiagNonnegOffDiagZero,
    Copositive,
    CompletelyPositive,
}

impl ConeKind {
    pub const ALL: [ConeKind; 6] = [
        ConeKind::Psd,
        ConeKind::EntrywiseNonneg,
        ConeKind::OffDiagNonnegDiagZero,
        ConeKind::DiagNonnegOffDiagZero,
        ConeKind::Copositive,
        ConeKind::CompletelyPositive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ConeKind::Psd => "psd",
            ConeKind::EntrywiseNonneg => "nonneg",
            ConeKind::OffDiagNonnegDiagZero => "offdiag_nonneg",
            ConeKind::DiagNonnegOffDiagZero => "diag_nonneg",
            ConeKind::Copositive => "copositive",
            ConeKind::CompletelyPositive => "completely_positive",
        }
    }

    pub fn from_name(s: &str) -> Option<ConeKind> {
        ConeKind::ALL.iter().copied().find(|c| c.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// A direction `x` (nonnegative for copositivity) with `x'Ax < -tol`.
    Vector(Vec<f64>),
    /// An entry violating the sign pattern of the cone.
    Entry { row: usize, col: usize, value: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Certificate {
    /// Membership read off the entries or the spectrum directly.
    Direct,
    /// A nonnegative `B` (rows are factors) with `B'B` equal to `A` within tolerance.
    Factor(DMatrix<f64>),
    /// Doubly nonnegative of order at most four, hence completely positive.
    DoublyNonnegative,
    /// Every cell of a simplex partition with this many nodes was certified.
    SimplexPartition { nodes: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TriVerdict {
    Yes(Certificate),
    No(Witness),
    Unknown(UnknownReason),
}

impl TriVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, TriVerdict::Yes(_))
    }
    pub fn is_no(&self) -> bool {
        matches!(self, TriVerdict::No(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CpBudget {
    pub iterations: usize,
    pub restarts: usize,
}

impl Default for CpBudget {
    fn default() -> Self {
        CpBudget {
            iterations: DEFAULT_CP_ITERATIONS,
            restarts: DEFAULT_CP_RESTARTS,
        }
    }
}

/// `1e-9 (1 + |A|_inf)`.
pub fn default_tol(a: &DMatrix<f64>) -> f64 {
    1e-9 * (1.0 + linalg::norm_inf(a))
}

fn check(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    linalg::check_symmetric(a, linalg::tol_sym(a))?;
    Ok(linalg::symmetrize(a))
}

fn first_entry(a: &DMatrix<f64>, bad: impl Fn(usize, usize, f64) -> bool) -> Option<Witness> {
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            let v = a[(i, j)];
            if bad(i, j, v) {
                return Some(Witness::Entry { row: i, col: j, value: v });
            }
        }
    }
    None
}

fn psd_verdict(a: &DMatrix<f64>, tol: f64) -> TriVerdict {
    let (l, v) = linalg::min_eigenpair(a);
    if l >= -tol {
        TriVerdict::Yes(Certificate::Direct)
    } else {
        TriVerdict::No(Witness::Vector(linalg::to_vec(&v)))
    }
}

/// Membership of `A` in `cone`, at tolerance `tol`.
pub fn in_cone(a: &DMatrix<f64>, cone: ConeKind, tol: f64) -> Result<TriVerdict> {
    let a = check(a)?;
    let pattern = |w: Option<Witness>| match w {
        Some(w) => TriVerdict::No(w),
        None => TriVerdict::Yes(Certificate::Direct),
    };
    Ok(match cone {
        ConeKind::Psd => psd_verdict(&a, tol),
        ConeKind::EntrywiseNonneg => pattern(first_entry(&a, |_, _, v| v < -tol)),
        ConeKind::OffDiagNonnegDiagZero => pattern(first_entry(&a, |i, j, v| {
            if i == j {
                v.abs() > tol
            } else {
                v < -tol
            }
        })),
        ConeKind::DiagNonnegOffDiagZero => pattern(first_entry(&a, |i, j, v| {
            if i == j {
                v < -tol
            } else {
                v.abs() > tol
            }
        })),
        ConeKind::Copositive => is_copositive(&a, tol, DEFAULT_COPOSITIVE_NODES)?,
        ConeKind::CompletelyPositive => is_completely_positive(&a, tol, CpBudget::default())?,
    })
}

fn quad(a: &DMatrix<f64>, x: &[f64]) -> f64 {
    linalg::quad_form(a, x)
}

// Minimum of (1-t)^2 p + 2 t (1-t) r + t^2 q over t in [0, 1].
fn edge_min(p: f64, r: f64, q: f64) -> (f64, f64) {
    let mut best = if p <= q { (0.0, p) } else { (1.0, q) };
    let curv = p - 2.0 * r + q;
    if curv > 0.0 {
        let t = (p - r) / curv;
        if t > 0.0 && t < 1.0 {
            let v = (1.0 - t) * (1.0 - t) * p + 2.0 * t * (1.0 - t) * r + t * t * q;
            if v < best.1 {
                best = (t, v);
            }
        }
    }
    best
}

fn normalize_l1(mut x: Vec<f64>) -> Vec<f64> {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = x.iter().sum();
    if s > 0.0 {
        for v in x.iter_mut() {
            *v /= s;
        }
    }
    x
}

/// Copositivity of `A`: `x'Ax >= -tol` for every `x >= 0` with `|x|_1 = 1`.
///
/// The general case partitions the unit simplex depth first. A cell whose
/// vertex Gram matrix `V'AV` is entrywise above `-tol` or PSD is certified;
/// otherwise its longest edge is bisected, ties going to the lexicographically
/// smallest vertex pair, and the first half is explored first.
pub fn is_copositive(a: &DMatrix<f64>, tol: f64, budget: usize) -> Result<TriVerdict> {
    let a = check(a)?;
    let n = a.nrows();
    for i in 0..n {
        if a[(i, i)] < -tol {
            let mut x = vec![0.0; n];
            x[i] = 1.0;
            return Ok(TriVerdict::No(Witness::Vector(x)));
        }
    }
    if a.iter().all(|v| *v >= -tol) {
        return Ok(TriVerdict::Yes(Certificate::Direct));
    }
    if linalg::min_eigenvalue(&a) >= -tol {
        return Ok(TriVerdict::Yes(Certificate::Direct));
    }
    if n == 2 {
        let (p, r, q) = (a[(0, 0)], a[(0, 1)], a[(1, 1)]);
        if r + libm::sqrt(p.max(0.0) * q.max(0.0)) >= 0.0 {
            return Ok(TriVerdict::Yes(Certificate::Direct));
        }
        let (t, v) = edge_min(p, r, q);
        if v < -tol {
            return Ok(TriVerdict::No(Witness::Vector(vec![1.0 - t, t])));
        }
        return Ok(TriVerdict::Yes(Certificate::Direct));
    }
    branch_and_bound(&a, tol, budget)
}

fn branch_and_bound(a: &DMatrix<f64>, tol: f64, budget: usize) -> Result<TriVerdict> {
    let n = a.nrows();
    let identity: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut stack = vec![identity];
    let mut nodes = 0usize;
    let mut av = vec![vec![0.0; n]; n];
    while let Some(verts) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            return Ok(TriVerdict::Unknown(UnknownReason::Budget));
        }
        for (k, v) in verts.iter().enumerate() {
            for i in 0..n {
                av[k][i] = (0..n).map(|j| a[(i, j)] * v[j]).sum();
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| linalg::dot(&verts[i], &av[j]));
        for i in 0..n {
            if m[(i, i)] < -tol {
                return Ok(TriVerdict::No(Witness::Vector(normalize_l1(verts[i].clone()))));
            }
        }
        let mut all_ok = true;
        for i in 0..n {
            for j in (i + 1)..n {
                if m[(i, j)] < -tol {
                    all_ok = false;
                    let (t, v) = edge_min(m[(i, i)], m[(i, j)], m[(j, j)]);
                    if v < -tol {
                        let x: Vec<f64> = (0..n)
                            .map(|c| (1.0 - t) * verts[i][c] + t * verts[j][c])
                            .collect();
                        let x = normalize_l1(x);
                        if quad(a, &x) < -tol {
                            return Ok(TriVerdict::No(Witness::Vector(x)));
                        }
                    }
                }
            }
        }
        if all_ok || linalg::min_eigenvalue(&m) >= -tol {
            continue;
        }
        let mut best = (0, 1, -1.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let d: f64 = (0..n).map(|c| { let t = verts[i][c] - verts[j][c]; t * t }).sum();
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        let (i, j, _) = best;
        let mid: Vec<f64> = (0..n).map(|c| 0.5 * (verts[i][c] + verts[j][c])).collect();
        let mut first = verts.clone();
        first[j] = mid.clone();
        let mut second = verts;
        second[i] = mid;
        stack.push(second);
        stack.push(first);
    }
    Ok(TriVerdict::Yes(Certificate::SimplexPartition { nodes }))
}

/// Complete positivity of `A`: `A = B'B` for an entrywise nonnegative `B`.
pub fn is_completely_positive(a: &DMatrix<f64>, tol: f64, budget: CpBudget) -> Result<TriVerdict> {
    let a = check(a)?;
    let n = a.nrows();
    if let Some(w) = first_entry(&a, |_, _, v| v < -tol) {
        return Ok(TriVerdict::No(w));
    }
    if let TriVerdict::No(w) = psd_verdict(&a, tol) {
        return Ok(TriVerdict::No(w));
    }
    let a = a.map(|v| v.max(0.0));
    if let Some(b) = dominant_factor(&a) {
        return Ok(TriVerdict::Yes(Certificate::Factor(b)));
    }
    if n <= 4 {
        if let Some(b) = nonnegative_cholesky(&a, tol) {
            return Ok(TriVerdict::Yes(Certificate::Factor(b)));
        }
    }
    if let Some(b) = factor_search(&a, tol, budget) {
        return Ok(TriVerdict::Yes(Certificate::Factor(b)));
    }
    if n <= 4 {
        return Ok(TriVerdict::Yes(Certificate::DoublyNonnegative));
    }
    Ok(TriVerdict::Unknown(UnknownReason::Budget))
}

// Diagonally dominant nonnegative A = sum a_ij (e_i + e_j)(e_i + e_j)' + diag(slack).
fn dominant_factor(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut slack = vec![0.0; n];
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        slack[i] = a[(i, i)] - off;
        if slack[i] < 0.0 {
            return None;
        }
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] > 0.0 {
                let mut r = vec![0.0; n];
                let s = libm::sqrt(a[(i, j)]);
                r[i] = s;
                r[j] = s;
                rows.push(r);
            }
        }
    }
    for (i, s) in slack.iter().enumerate() {
        if *s > 0.0 {
            let mut r = vec![0.0; n];
            r[i] = libm::sqrt(*s);
            rows.push(r);
        }
    }
    if rows.is_empty() {
        rows.push(vec![0.0; n]);
    }
    Some(DMatrix::from_fn(rows.len(), n, |r, c| rows[r][c]))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

// Tries a Cholesky factor with nonnegative entries under every ordering.
fn nonnegative_cholesky(a: &DMatrix<f64>, tol: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    'perm: for p in permutations(n) {
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(p[j], p[j])];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d < -tol {
                continue 'perm;
            }
            let pivot = libm::sqrt(d.max(0.0));
            l[(j, j)] = pivot;
            for i in (j + 1)..n {
                let mut s = a[(p[i], p[j])];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if pivot > 1e-12 {
                    l[(i, j)] = s / pivot;
                } else if s.abs() > tol {
                    continue 'perm;
                }
                if l[(i, j)] < 0.0 {
                    continue 'perm;
                }
            }
        }
        // A = P' L L' P, so B = L' P.
        let b = DMatrix::from_fn(n, n, |r, c| {
            let pc = p.iter().position(|&q| q == c).unwrap();
            l[(pc, r)]
        });
        if factor_residual(&b, a) <= tol {
            return Some(b);
        }
    }
    None
}

/// Largest absolute entry of `B'B - A`.
pub fn factor_residual(b: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    linalg::max_abs(&(b.transpose() * b - a))
}

// Real roots of s^3 + p s^2 + q s + r.
fn cubic_roots(p: f64, q: f64, r: f64) -> Vec<f64> {
    let shift = p / 3.0;
    let a = q - p * p / 3.0;
    let b = 2.0 * p * p * p / 27.0 - p * q / 3.0 + r;
    let disc = b * b / 4.0 + a * a * a / 27.0;
    let mut out = Vec::with_capacity(3);
    if disc > 0.0 {
        let sq = libm::sqrt(disc);
        out.push(libm::cbrt(-b / 2.0 + sq) + libm::cbrt(-b / 2.0 - sq) - shift);
    } else if a == 0.0 {
        out.push(-shift);
    } else {
        let m = 2.0 * libm::sqrt(-a / 3.0);
        let arg = (3.0 * b / (a * m)).clamp(-1.0, 1.0);
        let theta = libm::acos(arg) / 3.0;
        for k in 0..3 {
            out.push(m * libm::cos(theta - 2.0 * core::f64::consts::PI * k as f64 / 3.0) - shift);
        }
    }
    out
}

// Symmetric nonnegative factorization A ~ H H' by exact coordinate descent.
fn factor_search(a: &DMatrix<f64>, tol: f64, budget: CpBudget) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let k = n * (n + 1) / 2;
    let mean_a = a.iter().sum::<f64>() / (n * n) as f64;
    for restart in 0..budget.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de ^ restart as u64);
        let mut h = DMatrix::from_fn(n, k, |_, _| rng.random::<f64>());
        let hh = &h * h.transpose();
        let mean_h = hh.iter().sum::<f64>() / (n * n) as f64;
        if mean_h > 0.0 && mean_a > 0.0 {
            h *= libm::sqrt(mean_a / mean_h);
        }
        let mut res = a - &h * h.transpose();
        let mut last = f64::INFINITY;
        for sweep in 0..budget.iterations {
            for c in 0..k {
                for i in 0..n {
                    let hi = h[(i, c)];
                    let norm_rest: f64 = (0..n).filter(|&j| j != i).map(|j| h[(j, c)] * h[(j, c)]).sum();
                    let rh: f64 = (0..n).map(|j| res[(i, j)] * h[(j, c)]).sum();
                    let rii = res[(i, i)];
                    let gain = |s: f64| -> f64 {
                        let d = rii - 2.0 * s * hi - s * s;
                        let mut f = d * d - rii * rii;
                        for j in 0..n {
                            if j != i {
                                let e = res[(i, j)] - s * h[(j, c)];
                                f += 2.0 * (e * e - res[(i, j)] * res[(i, j)]);
                            }
                        }
                        f
                    };
                    let mut best = (0.0, 0.0);
                    let lo = -hi;
                    for s in cubic_roots(3.0 * hi, norm_rest + 2.0 * hi * hi - rii, -rh)
                        .into_iter()
                        .chain(core::iter::once(lo))
                    {
                        if s >= lo && s.is_finite() {
                            let g = gain(s);
                            if g < best.1 {
                                best = (s, g);
                            }
                        }
                    }
                    let s = best.0;
                    if s != 0.0 {
                        for j in 0..n {
                            let d = if j == i { 2.0 * s * hi + s * s } else { s * h[(j, c)] };
                            res[(i, j)] -= d;
                            if j != i {
                                res[(j, i)] -= d;
                            }
                        }
                        h[(i, c)] = (hi + s).max(0.0);
                    }
                }
            }
            let err = linalg::max_abs(&res);
            if err <= 0.5 * tol {
                break;
            }
            if sweep % 200 == 199 {
                if err > 0.999 * last {
                    break;
                }
                last = err;
            }
        }
        polish(a, &mut h, tol);
        let b = h.transpose();
        if factor_residual(&b, a) <= tol {
            return Some(b);
        }
    }
    None
}

// Damped minimum-norm Gauss-Newton on the positive entries of H, solving
// the upper triangle of H H' = A. Entries driven below zero leave the support.
fn polish(a: &DMatrix<f64>, h: &mut DMatrix<f64>, tol: f64) {
    let n = a.nrows();
    let k = h.ncols();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    for _ in 0..100 {
        let support: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..k).map(move |c| (i, c)))
            .filter(|&(i, c)| h[(i, c)] > 0.0)
            .collect();
        if support.is_empty() {
            return;
        }
        let hh = &*h * h.transpose();
        let r = DVector::from_fn(pairs.len(), |p, _| {
            let (i, j) = pairs[p];
            hh[(i, j)] - a[(i, j)]
        });
        if r.amax() <= 0.25 * tol {
            return;
        }
        // d(HH')_ij / dH_lc = delta_il H_jc + delta_jl H_ic.
        let jac = DMatrix::from_fn(pairs.len(), support.len(), |p, s| {
            let (i, j) = pairs[p];
            let (l, c) = support[s];
            let mut v = 0.0;
            if i == l {
                v += h[(j, c)];
            }
            if j == l {
                v += h[(i, c)];
            }
            v
        });
        let mut gram = &jac * jac.transpose();
        let damp = 1e-12 * (1.0 + gram.diagonal().amax());
        for p in 0..pairs.len() {
            gram[(p, p)] += damp;
        }
        let Some(chol) = Cholesky::new(gram) else { return };
        let step = jac.transpose() * chol.solve(&(-r));
        for (s, &(i, c)) in support.iter().enumerate() {
            h[(i, c)] = (h[(i, c)] + step[s]).max(0.0);
        }
    }
}

/// `tr(AB)`.
pub fn dual_pairing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    linalg::ensure_square(a)?;
    linalg::ensure_square(b)?;
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    Ok(a.component_mul(&b.transpose()).sum())
}
