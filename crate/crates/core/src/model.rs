//! Skew-elliptical parameters `SE_n(mu, Omega, delta, g)`.
//!
//! A draw is `X = mu + omega (delta |U0| + Delta U1)` where `omega` holds the
//! marginal scales, `(U0, U1)` is a standardized elliptical pair and
//! `Delta` is the symmetric square root of `Psi - delta delta'`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg;
use crate::quad;
use crate::special;

/// Radial law of the underlying elliptical pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeneratorKind {
    Normal,
    StudentT { nu: f64 },
    Cauchy,
}

impl GeneratorKind {
    /// Degrees of freedom of the t family; `None` for the normal.
    pub fn nu(&self) -> Option<f64> {
        match *self {
            GeneratorKind::Normal => None,
            GeneratorKind::StudentT { nu } => Some(nu),
            GeneratorKind::Cauchy => Some(1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorKind::StudentT { nu } if !(nu.is_finite() && nu > 0.0) => Err(Error::BadNu),
            _ => Ok(()),
        }
    }

    /// Whether `E|U0|^k` is finite.
    pub fn has_moment(&self, k: u32) -> bool {
        match self.nu() {
            None => true,
            Some(nu) => nu > k as f64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Normal => "normal",
            GeneratorKind::StudentT { .. } => "student_t",
            GeneratorKind::Cauchy => "cauchy",
        }
    }

    /// Log of the `dim`-dimensional density generator at squared radius `u`,
    /// normalized so that `|Omega|^{-1/2} g(Q)` is a density.
    pub fn ln_generator(&self, u: f64, dim: usize) -> f64 {
        let d = dim as f64;
        match self.nu() {
            None => -0.5 * d * special::LN_2PI - 0.5 * u,
            Some(nu) => {
                special::ln_gamma(0.5 * (nu + d)) - special::ln_gamma(0.5 * nu)
                    - 0.5 * d * libm::log(nu * PI)
                    - 0.5 * (nu + d) * libm::log1p(u / nu)
            }
        }
    }

    /// Univariate standardized density of `U0`.
    fn marginal_pdf(&self, u: f64) -> f64 {
        match self.nu() {
            None => special::norm_pdf(u),
            Some(nu) => special::t_pdf(u, nu),
        }
    }

    fn cache_key(&self) -> (u8, u64) {
        match *self {
            GeneratorKind::Normal => (0, 0),
            GeneratorKind::StudentT { nu } => (1, nu.to_bits()),
            GeneratorKind::Cauchy => (2, 0),
        }
    }
}

/// Moment constants of the generator: `kappa1 = E|U0|` and `c2 = E U0^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneratorConstants {
    pub kappa1: f64,
    pub c2: f64,
}

const MOMENT_TOL: f64 = 1e-10;

// Constants depend only on the generator: the standardized margin of the
// (n+1)-dimensional pair is the same law for every n.
static KAPPA1_CACHE: spin::Mutex<BTreeMap<(u8, u64), f64>> = spin::Mutex::new(BTreeMap::new());
static C2_CACHE: spin::Mutex<BTreeMap<(u8, u64), f64>> = spin::Mutex::new(BTreeMap::new());

// 2 * int_0^inf u^k f(u) du, integrated in y = ln u.
fn abs_moment(gen: GeneratorKind, k: u32) -> f64 {
    let kf = k as f64;
    let upper = match gen.nu() {
        None => 4.0,
        Some(nu) => 35.0 / (nu - kf) + 10.0,
    };
    let q = quad::integrate(
        |y| {
            let u = libm::exp(y);
            libm::exp((kf + 1.0) * y) * gen.marginal_pdf(u)
        },
        -60.0,
        upper,
        0.5 * MOMENT_TOL,
        4000,
    );
    2.0 * q.value
}

fn cached(cache: &spin::Mutex<BTreeMap<(u8, u64), f64>>, gen: GeneratorKind, k: u32) -> f64 {
    let key = gen.cache_key();
    if let Some(v) = cache.lock().get(&key) {
        return *v;
    }
    let v = abs_moment(gen, k);
    cache.lock().insert(key, v);
    v
}

/// `E|U0|`; requires a finite first moment.
pub fn kappa1(gen: GeneratorKind) -> Result<f64> {
    gen.validate()?;
    if !gen.has_moment(1) {
        return Err(Error::MomentsUndefined);
    }
    Ok(cached(&KAPPA1_CACHE, gen, 1))
}

/// `E U0^2`; exactly one for the normal generator.
pub fn c2(gen: GeneratorKind) -> Result<f64> {
    gen.validate()?;
    if !gen.has_moment(2) {
        return Err(Error::MomentsUndefined);
    }
    if gen == GeneratorKind::Normal {
        return Ok(1.0);
    }
    Ok(cached(&C2_CACHE, gen, 2))
}

pub fn generator_constants(gen: GeneratorKind, n: usize) -> Result<GeneratorConstants> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive"));
    }
    Ok(GeneratorConstants {
        kappa1: kappa1(gen)?,
        c2: c2(gen)?,
    })
}

/// Unvalidated parameter bundle, as read from a file.
#[derive(Clone, Debug, PartialEq)]
pub struct RawParams {
    pub n: usize,
    pub mu: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub gen: GeneratorKind,
}

#[derive(Clone, Debug)]
enum Skew {
    /// `alpha' z` written as `w'(x - mu)`.
    Finite(DVector<f64>),
    /// `Psi - delta delta'` is singular: the skewing factor is a step.
    Step(DVector<f64>),
}

/// Validated parameters with derived quantities cached.
#[derive(Clone, Debug)]
pub struct SkewEllipticalParams {
    mu: DVector<f64>,
    omega: DMatrix<f64>,
    delta: DVector<f64>,
    gen: GeneratorKind,
    scales: DVector<f64>,
    delta_w: DVector<f64>,
    psi: DMatrix<f64>,
    lambda: DVector<f64>,
    resid_factor: DMatrix<f64>,
    chol: DMatrix<f64>,
    ln_det: f64,
    skew: Skew,
}

/// Validates a raw bundle.
pub fn validate(raw: &RawParams) -> Result<SkewEllipticalParams> {
    let n = raw.n;
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive"));
    }
    if raw.omega.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: raw.omega.len(),
        });
    }
    for row in &raw.omega {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
    }
    let omega = DMatrix::from_fn(n, n, |i, j| raw.omega[i][j]);
    SkewEllipticalParams::new(raw.mu.clone(), omega, raw.delta.clone(), raw.gen)
}

impl SkewEllipticalParams {
    pub fn new(
        mu: Vec<f64>,
        omega: DMatrix<f64>,
        delta: Vec<f64>,
        gen: GeneratorKind,
    ) -> Result<Self> {
        let n = linalg::ensure_square(&omega)?;
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive"));
        }
        for len in [mu.len(), delta.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if mu.iter().chain(delta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        gen.validate()?;
        linalg::check_symmetric(&omega, linalg::tol_sym(&omega))?;
        let omega = linalg::symmetrize(&omega);
        let min_eig = linalg::min_eigenvalue(&omega);
        if min_eig <= linalg::tol_eig(&omega) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min_eig,
            });
        }
        for (i, &d) in delta.iter().enumerate() {
            if !(d > -1.0 && d < 1.0) {
                return Err(Error::DeltaOutOfRange { index: i, value: d });
            }
        }
        let mu = DVector::from_vec(mu);
        let delta = DVector::from_vec(delta);
        let scales = DVector::from_fn(n, |i, _| libm::sqrt(omega[(i, i)]));
        let delta_w = delta.component_mul(&scales);
        let psi = DMatrix::from_fn(n, n, |i, j| omega[(i, j)] / (scales[i] * scales[j]));
        let lambda = delta.map(|d| d / libm::sqrt(1.0 - d * d));
        let resid = &psi - &delta * delta.transpose();
        let resid_min = linalg::min_eigenvalue(&resid);
        if resid_min < -linalg::tol_eig(&psi) {
            return Err(Error::RepresentationInfeasible {
                min_eigenvalue: resid_min,
            });
        }
        let resid_sqrt = linalg::psd_sqrt(&resid);
        let resid_factor = DMatrix::from_fn(n, n, |i, j| scales[i] * resid_sqrt[(i, j)]);

        let chol = Cholesky::new(omega.clone()).ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        })?;
        let l = chol.l();
        let ln_det = 2.0 * (0..n).map(|i| libm::log(l[(i, i)])).sum::<f64>();

        let psi_chol = Cholesky::new(psi.clone()).ok_or(Error::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        })?;
        let psi_inv_delta = psi_chol.solve(&delta);
        let q = delta.dot(&psi_inv_delta);
        let dir = DVector::from_fn(n, |i, _| psi_inv_delta[i] / scales[i]);
        let skew = if 1.0 - q > 1e-14 {
            Skew::Finite(dir / libm::sqrt(1.0 - q))
        } else {
            Skew::Step(dir)
        };

        Ok(SkewEllipticalParams {
            mu,
            omega,
            delta,
            gen,
            scales,
            delta_w,
            psi,
            lambda,
            resid_factor,
            chol: l,
            ln_det,
            skew,
        })
    }

    /// Builds parameters from the location-scale skewness `delta_w = omega delta`.
    pub fn from_delta_w(
        mu: Vec<f64>,
        omega: DMatrix<f64>,
        delta_w: Vec<f64>,
        gen: GeneratorKind,
    ) -> Result<Self> {
        let n = linalg::ensure_square(&omega)?;
        if delta_w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: delta_w.len(),
            });
        }
        let delta = (0..n)
            .map(|i| {
                let s = libm::sqrt(omega[(i, i)]);
                if s > 0.0 {
                    delta_w[i] / s
                } else {
                    f64::NAN
                }
            })
            .collect::<Vec<_>>();
        if delta.iter().any(|d| d.is_nan()) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: linalg::min_eigenvalue(&omega),
            });
        }
        Self::new(mu, omega, delta, gen)
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }
    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }
    pub fn generator(&self) -> GeneratorKind {
        self.gen
    }
    /// Marginal scales `sqrt(Omega_ii)`.
    pub fn scales(&self) -> &DVector<f64> {
        &self.scales
    }
    pub fn delta_w(&self) -> &DVector<f64> {
        &self.delta_w
    }
    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }
    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }
    /// `omega Delta`: maps `U1` to the symmetric part of a draw.
    pub fn residual_factor(&self) -> &DMatrix<f64> {
        &self.resid_factor
    }

    pub fn to_raw(&self) -> RawParams {
        let n = self.dim();
        RawParams {
            n,
            mu: linalg::to_vec(&self.mu),
            omega: (0..n)
                .map(|i| (0..n).map(|j| self.omega[(i, j)]).collect())
                .collect(),
            delta: linalg::to_vec(&self.delta),
            gen: self.gen,
        }
    }

    /// `mu + kappa1 delta_w`.
    pub fn mean(&self) -> Result<DVector<f64>> {
        let k = kappa1(self.gen)?;
        Ok(&self.mu + &self.delta_w * k)
    }

    /// `c2 Omega - kappa1^2 delta_w delta_w'`.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let k = kappa1(self.gen)?;
        let c = c2(self.gen)?;
        let cov = &self.omega * c - (&self.delta_w * self.delta_w.transpose()) * (k * k);
        Ok(linalg::symmetrize(&cov))
    }

    // Squared Mahalanobis radius `(x - mu)' Omega^{-1} (x - mu)`.
    fn radius2(&self, x: &[f64]) -> f64 {
        let n = self.dim();
        let mut y = Vec::with_capacity(n);
        let mut q = 0.0;
        for i in 0..n {
            let mut s = x[i] - self.mu[i];
            for (j, yj) in y.iter().enumerate() {
                s -= self.chol[(i, j)] * yj;
            }
            let v = s / self.chol[(i, i)];
            q += v * v;
            y.push(v);
        }
        q
    }

    fn skew_factor(&self, x: &[f64], q: f64) -> f64 {
        let proj = |w: &DVector<f64>| -> f64 { (0..self.dim()).map(|i| w[i] * (x[i] - self.mu[i])).sum() };
        match &self.skew {
            Skew::Step(w) => {
                let s = proj(w);
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
            Skew::Finite(w) => {
                let s = proj(w);
                match self.gen.nu() {
                    None => special::norm_cdf(s),
                    Some(nu) => {
                        let d = self.dim() as f64;
                        special::t_cdf(s * libm::sqrt((nu + d) / (nu + q)), nu + d)
                    }
                }
            }
        }
    }

    /// Density at `x`; panics if `x` has the wrong length.
    pub fn density(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim(), "density: dimension mismatch");
        let q = self.radius2(x);
        let sym = libm::exp(-0.5 * self.ln_det + self.gen.ln_generator(q, self.dim()));
        2.0 * sym * self.skew_factor(x, q)
    }

    /// Closed-form characteristic function of the skew-normal law.
    pub fn cf_skew_normal(&self, t: &[f64]) -> Result<Complex64> {
        if self.gen != GeneratorKind::Normal {
            return Err(Error::UnsupportedGenerator);
        }
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: t.len(),
            });
        }
        let phase = linalg::dot(t, self.mu.as_slice());
        let quad = linalg::quad_form(&self.omega, t);
        let eta = linalg::dot(t, self.delta_w.as_slice());
        let re = libm::exp(-0.5 * quad);
        // erfi(y) exp(-y^2) = 2 D(y) / sqrt(pi), so the product stays bounded.
        let im = 2.0 / libm::sqrt(PI)
            * special::dawson(eta / core::f64::consts::SQRT_2)
            * libm::exp(-0.5 * quad + 0.5 * eta * eta);
        let rot = Complex64::new(libm::cos(phase), libm::sin(phase));
        Ok(rot * Complex64::new(re, im))
    }

    /// Law of `a'X`, with the univariate skewness `a' delta_w / sqrt(a' Omega a)`.
    pub fn linear_form(&self, a: &[f64]) -> Result<SkewEllipticalParams> {
        if a.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: a.len(),
            });
        }
        if a.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector);
        }
        let var = linalg::quad_form(&self.omega, a);
        let dw = linalg::dot(a, self.delta_w.as_slice());
        let sigma = libm::sqrt(var);
        let d = dw / sigma;
        if !(d.abs() < 1.0) {
            return Err(Error::InfeasibleProjection);
        }
        SkewEllipticalParams::new(
            alloc::vec![linalg::dot(a, self.mu.as_slice())],
            DMatrix::from_element(1, 1, var),
            alloc::vec![d],
            self.gen,
        )
        .map_err(|e| match e {
            Error::RepresentationInfeasible { .. } | Error::DeltaOutOfRange { .. } => {
                Error::InfeasibleProjection
            }
            other => other,
        })
    }

    /// Law of the sub-vector indexed by `idx` (zero based, in the given order).
    pub fn marginal(&self, idx: &[usize]) -> Result<SkewEllipticalParams> {
        if idx.is_empty() {
            return Err(Error::BadIndex { index: None });
        }
        let n = self.dim();
        for (k, &i) in idx.iter().enumerate() {
            if i >= n || idx[..k].contains(&i) {
                return Err(Error::BadIndex { index: Some(i) });
            }
        }
        let m = idx.len();
        SkewEllipticalParams::new(
            idx.iter().map(|&i| self.mu[i]).collect(),
            DMatrix::from_fn(m, m, |r, c| self.omega[(idx[r], idx[c])]),
            idx.iter().map(|&i| self.delta[i]).collect(),
            self.gen,
        )
    }

    /// Parameters of `X - E(X)`: the location becomes `-kappa1 delta_w`.
    pub fn recentered(&self) -> Result<SkewEllipticalParams> {
        let k = kappa1(self.gen)?;
        let mut out = self.clone();
        out.mu = &self.delta_w * (-k);
        Ok(out)
    }

    /// Same law with a new location.
    pub fn with_mu(&self, mu: Vec<f64>) -> Result<SkewEllipticalParams> {
        if mu.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: mu.len(),
            });
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut out = self.clone();
        out.mu = DVector::from_vec(mu);
        Ok(out)
    }

    /// SHA-256 over the bit patterns of all parameters, as lowercase hex.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.dim() as u64).to_le_bytes());
        for v in self.mu.iter().chain(self.omega.iter()).chain(self.delta.iter()) {
            h.update(v.to_bits().to_le_bytes());
        }
        let (tag, nu) = self.gen.cache_key();
        h.update([tag]);
        h.update(nu.to_le_bytes());
        let bytes = h.finalize();
        let mut s = String::with_capacity(64);
        for b in bytes.iter() {
            s.push(char::from_digit((b >> 4) as u32, 16).unwrap());
            s.push(char::from_digit((b & 15) as u32, 16).unwrap());
        }
        s
    }
}
