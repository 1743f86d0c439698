//! Exact single-channel distributions for chaotic scattering with uniform
//! absorption.
//!
//! Everything derives from the density `P₀(x)` of `x = (1+R)/(1−R)`, available
//! for the symplectic class and for the unitary class. The reflection
//! coefficient `R`, the amplitude `r = √R`, and the imaginary and real parts of
//! the reaction matrix `K = u − iv` follow by change of variables or by a
//! one-dimensional integral over `P₀`.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_semi_infinite, integrate_with_breaks, Tolerance};
use crate::rmt::SymmetryClass;
use crate::stats::{adaptive_nodes, Histogram, TabulatedCdf};

const SHI_SERIES_LIMIT: f64 = 12.0;
const MOMENT_TOL: Tolerance = Tolerance::new(0.0, 1e-11);
const INNER_TOL: Tolerance = Tolerance::new(0.0, 1e-10);

/// Hyperbolic sine integral `Shi(γ) = ∫₀^γ sinh t / t dt`.
pub fn shi(gamma: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("shi requires gamma >= 0, got {gamma}")));
    }
    if gamma < SHI_SERIES_LIMIT {
        Ok(shi_series(gamma))
    } else {
        Ok(shi_scaled(gamma)? * gamma.exp())
    }
}

fn shi_series(gamma: f64) -> f64 {
    // Σ γ^{2k+1} / ((2k+1)(2k+1)!), all terms positive
    let g2 = gamma * gamma;
    let mut power_over_fact = gamma; // γ^{2k+1}/(2k+1)!
    let mut sum = gamma;
    let mut k = 0.0;
    loop {
        k += 1.0;
        let m = 2.0 * k + 1.0;
        power_over_fact *= g2 / ((m - 1.0) * m);
        let term = power_over_fact / m;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `e^{−γ}·Shi(γ)`, finite for every `γ ≥ 0`.
fn shi_scaled(gamma: f64) -> Result<f64> {
    if gamma < SHI_SERIES_LIMIT {
        return Ok(shi_series(gamma) * (-gamma).exp());
    }
    let integrand = |t: f64| {
        if t < 1.0 {
            if t == 0.0 {
                (-gamma).exp()
            } else {
                t.sinh() / t * (-gamma).exp()
            }
        } else {
            ((t - gamma).exp() - (-t - gamma).exp()) / (2.0 * t)
        }
    };
    // The integrand grows like e^{t−γ}; most of the mass sits in the last few units.
    let mut breaks = vec![0.0, 1.0];
    let mut t = gamma - 40.0;
    if t > 1.0 {
        breaks.push(t);
    }
    t = gamma - 10.0;
    if t > *breaks.last().unwrap() {
        breaks.push(t);
    }
    breaks.push(gamma);
    Ok(integrate_with_breaks(integrand, &breaks, Tolerance::new(0.0, 1e-14))?.value)
}

/// Absorption strength and symmetry class of a single-channel system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionParams {
    pub gamma: f64,
    pub class: SymmetryClass,
}

/// Random variables with a closed-form (or single-integral) density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    /// `x = (1+R)/(1−R)`
    X,
    /// Reflection coefficient `R = |S|²`
    Reflection,
    /// Amplitude `r = |S|`
    Amplitude,
    /// `v = −Im K`
    ImK,
    /// `u = Re K`
    ReK,
    /// `R / ⟨R⟩`
    RescaledReflection,
    /// `r / ⟨r⟩`
    RescaledAmplitude,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::Reflection => "R",
            Variable::Amplitude => "r",
            Variable::ImK => "v",
            Variable::ReK => "u",
            Variable::RescaledReflection => "R_tilde",
            Variable::RescaledAmplitude => "r_tilde",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "x" => Variable::X,
            "R" | "reflection" => Variable::Reflection,
            "r" | "amplitude" => Variable::Amplitude,
            "v" | "imk" => Variable::ImK,
            "u" | "rek" => Variable::ReK,
            "R_tilde" | "Rt" | "rescaled_reflection" => Variable::RescaledReflection,
            "r_tilde" | "rt" | "rescaled_amplitude" => Variable::RescaledAmplitude,
            other => return Err(Error::invalid(format!("unknown variable '{other}'"))),
        })
    }

    /// Which formula the density comes from; used in file headers.
    pub fn formula(self) -> &'static str {
        match self {
            Variable::X => "P0(x) absorbing single-channel density",
            Variable::Reflection => "P(R) = 2/(1-R)^2 P0((1+R)/(1-R))",
            Variable::Amplitude => "P(r) = 2r P(R=r^2)",
            Variable::ImK => "P(v) = sqrt(2)/(pi v^1.5) int_0^inf dq P0(q^2 + (v+1/v)/2)",
            Variable::ReK => "P(u) = 1/(2 pi sqrt(u^2+1)) int_0^inf dq P0(sqrt(u^2+1)/2 (q+1/q))",
            Variable::RescaledReflection => "P(R~) = <R> P(R~ <R>); Ericson limit exp(-R~)",
            Variable::RescaledAmplitude => {
                "P(r~) = <r> P(r~ <r>); Ericson limit (pi/2) r~ exp(-pi r~^2/4)"
            }
        }
    }
}

/// Absorbing-system distributions for one `(γ, class)`.
#[derive(Debug)]
pub struct Absorption {
    params: AbsorptionParams,
    shi_scaled: f64,
    mean_r: OnceLock<f64>,
    mean_amp: OnceLock<f64>,
    reflection_cdf: OnceLock<TabulatedCdf>,
}

impl Clone for Absorption {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            shi_scaled: self.shi_scaled,
            mean_r: self.mean_r.clone(),
            mean_amp: self.mean_amp.clone(),
            reflection_cdf: self.reflection_cdf.clone(),
        }
    }
}

impl Absorption {
    pub fn new(gamma: f64, class: SymmetryClass) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!(
                "absorption parameter gamma must be positive and finite, got {gamma}"
            )));
        }
        if class == SymmetryClass::Goe {
            return Err(Error::invalid(
                "absorbing distributions are available for GSE and GUE only",
            ));
        }
        Ok(Self {
            params: AbsorptionParams { gamma, class },
            shi_scaled: shi_scaled(gamma)?,
            mean_r: OnceLock::new(),
            mean_amp: OnceLock::new(),
            reflection_cdf: OnceLock::new(),
        })
    }

    pub fn gse(gamma: f64) -> Result<Self> {
        Self::new(gamma, SymmetryClass::Gse)
    }

    pub fn gue(gamma: f64) -> Result<Self> {
        Self::new(gamma, SymmetryClass::Gue)
    }

    pub fn params(&self) -> AbsorptionParams {
        self.params
    }

    pub fn gamma(&self) -> f64 {
        self.params.gamma
    }

    /// `P₀(x)`, zero for `x < 1`.
    pub fn p0(&self, x: f64) -> f64 {
        if !(x >= 1.0) {
            return 0.0;
        }
        if x.is_infinite() {
            return 0.0;
        }
        let g = self.params.gamma;
        let y = x + 1.0;
        match self.params.class {
            SymmetryClass::Gse => {
                // ½[Aγy + B]e^{−γy} with A = e^{2γ}−1, B = 1+2γ−e^{2γ},
                // regrouped so that no e^{2γ} is ever formed.
                let e_near = (-g * (x - 1.0)).exp();
                let e_far = (-g * y).exp();
                let first = 0.5 * (-(g * y - 1.0) * e_near * (-2.0 * g).exp_m1() + 2.0 * g * e_far);
                let c = 0.5 * g * g * y * y - g * (g + 1.0) * y + g;
                first + c * e_near * self.shi_scaled
            }
            SymmetryClass::Gue => {
                let e_near = (-0.5 * g * (x - 1.0)).exp();
                let e_far = (-0.5 * g * y).exp();
                0.5 * (-(0.5 * g * y - 1.0) * e_near * (-g).exp_m1() + g * e_far)
            }
            SymmetryClass::Goe => unreachable!("rejected in constructor"),
        }
    }

    /// `P₀(x)` with an out-of-support flag instead of a silent zero.
    pub fn p0_checked(&self, x: f64) -> Result<f64> {
        if !(x >= 1.0) {
            return Err(Error::OutOfSupport {
                variable: "x",
                value: x,
            });
        }
        Ok(self.p0(x))
    }

    pub fn p_reflection(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        let one_minus = 1.0 - r;
        2.0 / (one_minus * one_minus) * self.p0((1.0 + r) / one_minus)
    }

    pub fn p_reflection_checked(&self, r: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&r) {
            return Err(Error::OutOfSupport {
                variable: "R",
                value: r,
            });
        }
        Ok(self.p_reflection(r))
    }

    pub fn p_amplitude(&self, r: f64) -> f64 {
        if !(0.0..1.0).contains(&r) {
            return 0.0;
        }
        2.0 * r * self.p_reflection(r * r)
    }

    /// Density of `v = −Im K`.
    pub fn p_im_k(&self, v: f64) -> f64 {
        if !(v > 0.0) || v.is_infinite() {
            return 0.0;
        }
        let shift = 0.5 * (v + 1.0 / v);
        let inner = integrate_semi_infinite(|q| self.p0(q * q + shift), 0.0, INNER_TOL)
            .map(|i| i.value)
            .unwrap_or(f64::NAN);
        SQRT_2 / (PI * v.powf(1.5)) * inner
    }

    pub fn p_im_k_checked(&self, v: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::OutOfSupport {
                variable: "v",
                value: v,
            });
        }
        Ok(self.p_im_k(v))
    }

    /// Density of `u = Re K`.
    pub fn p_re_k(&self, u: f64) -> f64 {
        if !u.is_finite() {
            return 0.0;
        }
        let a = (u * u + 1.0).sqrt();
        // ∫₀^∞ f(q + 1/q) dq = ∫₁^∞ f(q + 1/q)(1 + q⁻²) dq
        let inner = integrate_semi_infinite(
            |q| self.p0(0.5 * a * (q + 1.0 / q)) * (1.0 + 1.0 / (q * q)),
            1.0,
            INNER_TOL,
        )
        .map(|i| i.value)
        .unwrap_or(f64::NAN);
        inner / (2.0 * PI * a)
    }

    /// Density of a rescaled variable in the absorbing model.
    pub fn p_rescaled_reflection(&self, rt: f64) -> f64 {
        let m = self.mean_reflection();
        m * self.p_reflection(rt * m)
    }

    pub fn p_rescaled_amplitude(&self, rt: f64) -> f64 {
        let m = self.mean_amplitude();
        m * self.p_amplitude(rt * m)
    }

    pub fn density(&self, variable: Variable, value: f64) -> f64 {
        match variable {
            Variable::X => self.p0(value),
            Variable::Reflection => self.p_reflection(value),
            Variable::Amplitude => self.p_amplitude(value),
            Variable::ImK => self.p_im_k(value),
            Variable::ReK => self.p_re_k(value),
            Variable::RescaledReflection => self.p_rescaled_reflection(value),
            Variable::RescaledAmplitude => self.p_rescaled_amplitude(value),
        }
    }

    /// Break points on `[0, 1]` resolving the `1/γ` scale of `P(R)`.
    fn reflection_breaks(&self) -> Vec<f64> {
        let scale = 1.0 / self.params.gamma;
        let mut b = vec![0.0];
        for f in [0.25, 1.0, 4.0, 16.0] {
            let p = f * scale;
            if p < 0.9 {
                b.push(p);
            }
        }
        b.push(1.0);
        b
    }

    pub fn mean_reflection(&self) -> f64 {
        *self.mean_r.get_or_init(|| {
            integrate_with_breaks(|r| r * self.p_reflection(r), &self.reflection_breaks(), MOMENT_TOL)
                .map(|i| i.value)
                .unwrap_or(f64::NAN)
        })
    }

    pub fn mean_amplitude(&self) -> f64 {
        *self.mean_amp.get_or_init(|| {
            // ⟨r⟩ = ∫ √R P(R) dR
            integrate_with_breaks(
                |r| r.sqrt() * self.p_reflection(r),
                &self.reflection_breaks(),
                MOMENT_TOL,
            )
            .map(|i| i.value)
            .unwrap_or(f64::NAN)
        })
    }

    pub fn normalization(&self, variable: Variable) -> Result<f64> {
        let (lo, hi) = self.support(variable);
        let tol = Tolerance::new(0.0, 1e-9);
        let v = match variable {
            Variable::X => {
                let g = self.params.gamma;
                integrate_with_breaks(|x| self.p0(x), &[1.0, 1.0 + 1.0 / g, 1.0 + 8.0 / g, hi], tol)?
                    .value
            }
            Variable::Reflection => {
                integrate_with_breaks(|r| self.p_reflection(r), &self.reflection_breaks(), tol)?.value
            }
            Variable::Amplitude => {
                let b: Vec<f64> = self.reflection_breaks().iter().map(|r| r.sqrt()).collect();
                integrate_with_breaks(|r| self.p_amplitude(r), &b, tol)?.value
            }
            Variable::ImK => {
                // split at v = 1 and use v → 1/v on the lower half
                let upper = integrate(|v| self.p_im_k(v), 1.0, hi, Tolerance::new(0.0, 1e-8))?;
                let lower = integrate(
                    |w| self.p_im_k(1.0 / w) / (w * w),
                    1.0,
                    hi,
                    Tolerance::new(0.0, 1e-8),
                )?;
                upper.value + lower.value
            }
            Variable::ReK => 2.0 * integrate(|u| self.p_re_k(u), 0.0, hi, Tolerance::new(0.0, 1e-8))?.value,
            Variable::RescaledReflection => {
                integrate(|t| self.p_rescaled_reflection(t), lo, hi, tol)?.value
            }
            Variable::RescaledAmplitude => {
                integrate(|t| self.p_rescaled_amplitude(t), lo, hi, tol)?.value
            }
        };
        Ok(v)
    }

    /// A finite interval carrying all but a negligible part of the mass.
    pub fn support(&self, variable: Variable) -> (f64, f64) {
        let g = self.params.gamma;
        // the density tails fall like e^{−γ(x−1)} (GSE) or e^{−γ(x−1)/2} (GUE)
        let rate = match self.params.class {
            SymmetryClass::Gue => 0.5 * g,
            _ => g,
        };
        let x_span = 90.0 / rate;
        match variable {
            Variable::X => (1.0, 1.0 + x_span),
            Variable::Reflection | Variable::Amplitude => (0.0, 1.0),
            Variable::ImK => {
                let hi = 2.0 * (1.0 + x_span) + 2.0;
                (1.0 / hi, hi)
            }
            Variable::ReK => {
                let hi = 1.0 + x_span;
                (-hi, hi)
            }
            Variable::RescaledReflection => (0.0, 1.0 / self.mean_reflection()),
            Variable::RescaledAmplitude => (0.0, 1.0 / self.mean_amplitude()),
        }
    }

    /// Tabulated density on `grid`.
    pub fn curve(&self, variable: Variable, grid: Vec<f64>) -> DistributionCurve {
        let density = grid.iter().map(|&x| self.density(variable, x)).collect();
        DistributionCurve {
            variable,
            grid,
            density,
            source: CurveSource::Absorbing(self.params),
        }
    }

    /// Tabulated density on the default grid for `variable`.
    pub fn default_curve(&self, variable: Variable) -> DistributionCurve {
        self.curve(variable, self.default_grid(variable))
    }

    /// Grid adapted to where the density lives; fine enough for trapezoidal
    /// normalization to 1e-4.
    pub fn default_grid(&self, variable: Variable) -> Vec<f64> {
        const POINTS: usize = 4001;
        let (lo, hi) = self.support(variable);
        match variable {
            Variable::ImK => log_grid(lo, hi, POINTS),
            Variable::ReK => {
                // symmetric, dense near the origin
                let half = POINTS / 2;
                let pos = stretched_grid(0.0, hi, half + 1, 3.0);
                let mut g: Vec<f64> = pos[1..].iter().rev().map(|v| -v).collect();
                g.extend_from_slice(&pos);
                g
            }
            Variable::X => stretched_grid(lo, hi, POINTS, 3.0),
            Variable::Reflection | Variable::Amplitude => stretched_grid(0.0, 1.0, POINTS, 2.0),
            Variable::RescaledReflection | Variable::RescaledAmplitude => {
                stretched_grid(lo, hi, POINTS, 2.0)
            }
        }
    }

    /// CDF table for `R`, built once per instance.
    pub fn reflection_cdf(&self) -> &TabulatedCdf {
        self.reflection_cdf.get_or_init(|| {
            let nodes = adaptive_nodes(|r| self.p_reflection(r), 0.0, 1.0, 10_000, false);
            TabulatedCdf::from_density(|r| self.p_reflection(r), nodes)
                .expect("P(R) is normalized")
        })
    }

    /// Reference CDF for any variable, for goodness-of-fit checks.
    pub fn reference_cdf(&self, variable: Variable, nodes: usize) -> Result<TabulatedCdf> {
        let (lo, hi) = self.support(variable);
        let log = variable == Variable::ImK;
        let grid = adaptive_nodes(|x| self.density(variable, x), lo, hi, nodes, log);
        TabulatedCdf::from_density(|x| self.density(variable, x), grid)
    }

    /// Inverse-CDF draws of `R`.
    pub fn sample_reflection<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        let cdf = self.reflection_cdf();
        (0..count).map(|_| cdf.sample(rng)).collect()
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Nodes clustered toward `lo`: `lo + (hi−lo)·t^p`.
fn stretched_grid(lo: f64, hi: f64, n: usize, power: f64) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * (i as f64 / (n - 1) as f64).powf(power))
        .collect()
}

/// Limiting densities for rescaled variables in the strong-absorption regime.
pub fn ericson_density(variable: Variable, value: f64) -> Result<f64> {
    if !(value >= 0.0) {
        return Err(Error::OutOfSupport {
            variable: variable.name(),
            value,
        });
    }
    match variable {
        Variable::RescaledReflection => Ok((-value).exp()),
        Variable::RescaledAmplitude => Ok(0.5 * PI * value * (-0.25 * PI * value * value).exp()),
        other => Err(Error::invalid(format!(
            "no Ericson limit for variable {}",
            other.name()
        ))),
    }
}

pub fn ericson_curve(variable: Variable, grid: Vec<f64>) -> Result<DistributionCurve> {
    let density = grid
        .iter()
        .map(|&x| ericson_density(variable, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistributionCurve {
        variable,
        grid,
        density,
        source: CurveSource::Ericson,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CurveSource {
    Absorbing(AbsorptionParams),
    Ericson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionCurve {
    pub variable: Variable,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub source: CurveSource,
}

impl DistributionCurve {
    pub fn trapezoid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, p)| 0.5 * (x[1] - x[0]) * (p[0] + p[1]))
            .sum()
    }

    pub fn max_abs_difference(&self, other: &DistributionCurve) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("curves are tabulated on different grids"));
        }
        Ok(self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Which sample quantity a γ fit is based on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitQuantity {
    Reflection,
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Match the analytic mean to the sample mean.
    Mean,
    /// Minimize the L² distance between `P(r)` and the amplitude histogram.
    Curve,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub std_error: f64,
    pub method: FitMethod,
    pub quantity: FitQuantity,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub method: FitMethod,
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: FitMethod::Mean,
            bootstrap: 200,
            seed: 0x5eed,
        }
    }
}

const MIN_FIT_SAMPLES: usize = 1000;
const GAMMA_RANGE: (f64, f64) = (1e-3, 1e3);

fn analytic_mean(gamma: f64, class: SymmetryClass, quantity: FitQuantity) -> f64 {
    match Absorption::new(gamma, class) {
        Ok(a) => match quantity {
            FitQuantity::Reflection => a.mean_reflection(),
            FitQuantity::Amplitude => a.mean_amplitude(),
        },
        Err(_) => f64::NAN,
    }
}

/// Solves `⟨q⟩_analytic(γ) = target` by bisection in `ln γ`; the mean is
/// strictly decreasing in γ.
pub fn invert_mean(target: f64, class: SymmetryClass, quantity: FitQuantity) -> Result<f64> {
    let (mut lo, mut hi) = (GAMMA_RANGE.0.ln(), GAMMA_RANGE.1.ln());
    let m_lo = analytic_mean(lo.exp(), class, quantity);
    let m_hi = analytic_mean(hi.exp(), class, quantity);
    if !(target < m_lo && target > m_hi) {
        return Err(Error::FitFailure(format!(
            "sample mean {target} is outside the attainable range ({m_hi}, {m_lo})"
        )));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if analytic_mean(mid.exp(), class, quantity) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Estimates γ from samples of `R` or `r`, with a bootstrap standard error.
pub fn fit_gamma(
    samples: &[f64],
    quantity: FitQuantity,
    class: SymmetryClass,
    options: FitOptions,
) -> Result<GammaFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::FitFailure(format!(
            "need at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if let Some(bad) = samples.iter().find(|s| !(0.0..1.0).contains(*s)) {
        return Err(Error::FitFailure(format!("sample {bad} is outside [0, 1)")));
    }
    let first = samples[0];
    if samples.iter().all(|&s| s == first) {
        return Err(Error::FitFailure("all samples are equal".into()));
    }
    let estimate = |data: &[f64]| -> Result<f64> {
        match options.method {
            FitMethod::Mean => {
                let mean = data.iter().sum::<f64>() / data.len() as f64;
                invert_mean(mean, class, quantity)
            }
            FitMethod::Curve => curve_fit(data, quantity, class),
        }
    };
    let gamma = estimate(samples)?;

    let mut rng = crate::rng::stream(options.seed, 0);
    let mut boot = Vec::with_capacity(options.bootstrap);
    let mut resample = vec![0.0; samples.len()];
    for _ in 0..options.bootstrap {
        for slot in resample.iter_mut() {
            *slot = samples[rng.random_range(0..samples.len())];
        }
        if let Ok(g) = estimate(&resample) {
            boot.push(g);
        }
    }
    let std_error = if boot.len() > 1 {
        let m = boot.iter().sum::<f64>() / boot.len() as f64;
        (boot.iter().map(|g| (g - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
    } else {
        f64::NAN
    };
    Ok(GammaFit {
        gamma,
        std_error,
        method: options.method,
        quantity,
        samples: samples.len(),
    })
}

fn curve_fit(data: &[f64], quantity: FitQuantity, class: SymmetryClass) -> Result<f64> {
    let amplitudes: Vec<f64> = match quantity {
        FitQuantity::Amplitude => data.to_vec(),
        FitQuantity::Reflection => data.iter().map(|r| r.sqrt()).collect(),
    };
    let hist = Histogram::from_samples(&amplitudes, 40, Some((0.0, 1.0)))?;
    let loss = |ln_gamma: f64| -> f64 {
        let Ok(a) = Absorption::new(ln_gamma.exp(), class) else {
            return f64::INFINITY;
        };
        hist.centers()
            .zip(hist.density())
            .map(|(c, d)| (a.p_amplitude(c) - d).powi(2))
            .sum::<f64>()
    };
    // start from the mean-based estimate and refine by golden section
    let mean = amplitudes.iter().sum::<f64>() / amplitudes.len() as f64;
    let start = invert_mean(mean, class, FitQuantity::Amplitude)?.ln();
    let (mut a, mut b) = (start - 1.0, start + 1.0);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (loss(c), loss(d));
    while b - a > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = loss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = loss(d);
        }
    }
    Ok((0.5 * (a + b)).exp())
}
