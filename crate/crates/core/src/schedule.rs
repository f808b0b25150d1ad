//! Stepsize schedules and relaxation plans.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::scalar::Scalar;

/// Averaging weights `ζ_k = scale/(k+1)^power`, optionally with `ζ_0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaRule<T> {
    pub scale: T,
    pub power: T,
    #[serde(default)]
    pub first_is_one: bool,
}

impl<T: Scalar> Default for ZetaRule<T> {
    fn default() -> Self {
        Self {
            scale: T::lit(0.1),
            power: T::lit(1.5),
            first_is_one: false,
        }
    }
}

impl<T: Scalar> ZetaRule<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale > T::zero() && self.scale <= T::one()) {
            return Err(parameter(format!("ζ scale must lie in (0, 1], got {}", self.scale)));
        }
        if !(self.power > T::one()) {
            return Err(parameter(format!("ζ power must exceed 1 for summability, got {}", self.power)));
        }
        Ok(())
    }

    pub fn zeta(&self, k: usize) -> T {
        if k == 0 && self.first_is_one {
            T::one()
        } else {
            self.scale / T::from_usize_lossy(k + 1).powf(self.power)
        }
    }
}

/// Target heuristic `t_k` of the safeguard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TRule<T> {
    /// `‖x_{k+1}‖ / ‖x_{k+1} - w_k‖`
    NormRatio,
    /// `(-2γ²c/(2L) + sqrt(γ⁴c²/L² + 4γ²))/2`
    Accel { c: T },
    /// `1/(k+1)`
    Harmonic,
}

impl<T: Scalar> TRule<T> {
    pub fn accel() -> Self {
        TRule::Accel { c: T::lit(0.01) }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TRule::NormRatio => "norm-ratio",
            TRule::Accel { .. } => "accel",
            TRule::Harmonic => "harmonic",
        }
    }
}

impl<T: Scalar> fmt::Display for TRule<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl<T: Scalar> FromStr for TRule<T> {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "norm-ratio" => Ok(TRule::NormRatio),
            "accel" => Ok(TRule::accel()),
            "harmonic" => Ok(TRule::Harmonic),
            other => Err(Error::Config(format!("unknown stepsize rule '{other}'"))),
        }
    }
}

/// Quantities observed in iteration `k` that the target rules may use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables<T> {
    /// `‖x_{k+1}‖`
    pub x_next_norm: T,
    /// `‖x_{k+1} - w_k‖`
    pub x_next_minus_w_norm: T,
    /// Lipschitz constant `L` of the smooth part.
    pub lipschitz: T,
    pub k: usize,
}

/// `γ_{k+1} = (1 - ζ_k)γ_k + ζ_k clamp(t_k, γ_min, γ_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Safeguard<T> {
    gamma_min: T,
    gamma_max: T,
    zeta: ZetaRule<T>,
    t_rule: TRule<T>,
    gamma: T,
    k: usize,
    zeta_sum: T,
}

impl<T: Scalar> Safeguard<T> {
    pub fn new(gamma0: T, gamma_min: T, gamma_max: T, zeta: ZetaRule<T>, t_rule: TRule<T>) -> Result<Self> {
        zeta.validate()?;
        if !(gamma_min > T::zero() && gamma_min <= gamma_max && gamma_max.is_finite()) {
            return Err(parameter(format!(
                "need 0 < γ_min ≤ γ_max < ∞, got [{gamma_min}, {gamma_max}]"
            )));
        }
        if !(gamma0 >= gamma_min && gamma0 <= gamma_max) {
            return Err(parameter(format!(
                "γ_0 = {gamma0} outside [{gamma_min}, {gamma_max}]"
            )));
        }
        if let TRule::Accel { c } = t_rule {
            if !(c >= T::zero()) {
                return Err(parameter("accel constant must be nonnegative"));
            }
        }
        Ok(Self {
            gamma_min,
            gamma_max,
            zeta,
            t_rule,
            gamma: gamma0,
            k: 0,
            zeta_sum: T::zero(),
        })
    }

    pub fn gamma_min(&self) -> T {
        self.gamma_min
    }

    pub fn gamma_max(&self) -> T {
        self.gamma_max
    }

    pub fn t_rule(&self) -> TRule<T> {
        self.t_rule
    }

    pub fn zeta_rule(&self) -> ZetaRule<T> {
        self.zeta
    }

    pub fn target(&self, obs: &Observables<T>) -> T {
        match self.t_rule {
            TRule::NormRatio => {
                if obs.x_next_minus_w_norm == T::zero() {
                    self.gamma_max
                } else {
                    obs.x_next_norm / obs.x_next_minus_w_norm
                }
            }
            TRule::Accel { c } => accel_target(self.gamma, obs.lipschitz, c),
            TRule::Harmonic => T::one() / T::from_usize_lossy(obs.k + 1),
        }
    }
}

/// `(-2γ²c/(2L) + sqrt(γ⁴c²/L² + 4γ²))/2`
pub fn accel_target<T: Scalar>(gamma: T, l: T, c: T) -> T {
    let g2 = gamma * gamma;
    let two = T::two();
    (-two * g2 * c / (two * l) + (g2 * g2 * c * c / (l * l) + T::lit(4.0) * g2).sqrt()) / two
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepsizeSchedule<T> {
    Constant(T),
    Safeguard(Safeguard<T>),
}

impl<T: Scalar> StepsizeSchedule<T> {
    pub fn constant(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(parameter(format!("constant stepsize must be positive, got {gamma}")));
        }
        Ok(Self::Constant(gamma))
    }

    /// Safeguard with the defaults `γ_max = 0.99·bound`, `γ_min = 0.1·γ_max`,
    /// `ζ_k = 0.1/(k+1)^1.5`, where `bound` is the supremum of admissible stepsizes.
    pub fn safeguard_default(bound: T, gamma0: T, t_rule: TRule<T>) -> Result<Self> {
        let gmax = T::lit(0.99) * bound;
        let gmin = T::lit(0.1) * gmax;
        let g0 = gamma0.max(gmin).min(gmax);
        Ok(Self::Safeguard(Safeguard::new(g0, gmin, gmax, ZetaRule::default(), t_rule)?))
    }

    pub fn current(&self) -> T {
        match self {
            StepsizeSchedule::Constant(g) => *g,
            StepsizeSchedule::Safeguard(s) => s.gamma,
        }
    }

    /// `[γ_min, γ_max]`; a constant schedule has a degenerate interval.
    pub fn bounds(&self) -> (T, T) {
        match self {
            StepsizeSchedule::Constant(g) => (*g, *g),
            StepsizeSchedule::Safeguard(s) => (s.gamma_min, s.gamma_max),
        }
    }

    /// `Σ_{j<k} ζ_j` over the updates taken so far (0 for constant).
    pub fn zeta_sum(&self) -> T {
        match self {
            StepsizeSchedule::Constant(_) => T::zero(),
            StepsizeSchedule::Safeguard(s) => s.zeta_sum,
        }
    }

    /// Advance one iteration and return `γ_{k+1}`.
    pub fn next_gamma(&mut self, obs: &Observables<T>) -> T {
        match self {
            StepsizeSchedule::Constant(g) => *g,
            StepsizeSchedule::Safeguard(s) => {
                let t = s.target(obs);
                let tau = if t.is_nan() { s.gamma_max } else { t.max(s.gamma_min).min(s.gamma_max) };
                let z = s.zeta.zeta(s.k);
                let next = (T::one() - z) * s.gamma + z * tau;
                // rounding must not leave the interval
                s.gamma = next.max(s.gamma_min).min(s.gamma_max);
                s.zeta_sum += z;
                s.k += 1;
                s.gamma
            }
        }
    }
}

/// `Σ_k max(γ_{k+1} - γ_k, 0)`
pub fn positive_variation<T: Scalar>(gammas: &[T]) -> T {
    gammas
        .windows(2)
        .fold(T::zero(), |acc, w| acc + (w[1] - w[0]).max(T::zero()))
}

/// How `λ_k` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LambdaRule<T> {
    Constant { value: T },
    /// `min(cap, (margin bound - ε)/(2θ))`: the largest λ leaving margin `ε`.
    MaxFeasible { cap: T },
}

/// `θ_k`, `λ_k` and the margin floor `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationPlan<T> {
    pub theta: T,
    pub lambda: LambdaRule<T>,
    pub epsilon: T,
}

impl<T: Scalar> Default for RelaxationPlan<T> {
    fn default() -> Self {
        Self {
            theta: T::one(),
            lambda: LambdaRule::MaxFeasible { cap: T::one() },
            epsilon: T::lit(1e-3),
        }
    }
}

impl<T: Scalar> RelaxationPlan<T> {
    pub fn constant(theta: T, lambda: T) -> Self {
        Self {
            theta,
            lambda: LambdaRule::Constant { value: lambda },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > T::zero()) {
            return Err(parameter("θ must be positive"));
        }
        if !(self.epsilon > T::zero()) {
            return Err(parameter("margin floor ε must be positive"));
        }
        match self.lambda {
            LambdaRule::Constant { value } if !(value > T::zero()) => Err(parameter("λ must be positive")),
            LambdaRule::MaxFeasible { cap } if !(cap > T::zero()) => Err(parameter("λ cap must be positive")),
            _ => Ok(()),
        }
    }

    /// `λ` for matrix-form stepsize `ge`, matrix-form `θ_e`, and `μ`.
    pub fn lambda(&self, ge: T, theta_e: T, mu: T) -> T {
        match self.lambda {
            LambdaRule::Constant { value } => value,
            LambdaRule::MaxFeasible { cap } => {
                let raw = (T::two() - ge * mu - self.epsilon) / (T::two() * theta_e);
                raw.min(cap)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(k: usize) -> Observables<f64> {
        Observables {
            x_next_norm: 3.0,
            x_next_minus_w_norm: 2.0,
            lipschitz: 1.0,
            k,
        }
    }

    #[test]
    fn zeta_one_gives_target() {
        let z = ZetaRule {
            first_is_one: true,
            ..ZetaRule::default()
        };
        let mut s = StepsizeSchedule::Safeguard(Safeguard::new(1.0, 0.1, 2.0, z, TRule::NormRatio).unwrap());
        assert_eq!(s.next_gamma(&obs(0)), 1.5);
    }

    #[test]
    fn harmonic_first_target() {
        let s = Safeguard::new(1.0, 0.1, 2.0, ZetaRule::default(), TRule::<f64>::Harmonic).unwrap();
        assert_eq!(s.target(&obs(0)), 1.0);
        assert_eq!(s.target(&obs(3)), 0.25);
    }

    #[test]
    fn accel_value() {
        let t = accel_target(1.0f64, 1.0, 0.01);
        let want = (-0.01 + (0.0001f64 + 4.0).sqrt()) / 2.0;
        assert!((t - want).abs() < 1e-15);
        assert!((t - 0.995).abs() < 1e-3);
    }

    #[test]
    fn norm_ratio_degenerate_denominator() {
        let s = Safeguard::new(1.0, 0.1, 2.0, ZetaRule::default(), TRule::<f64>::NormRatio).unwrap();
        let o = Observables {
            x_next_minus_w_norm: 0.0,
            ..obs(0)
        };
        assert_eq!(s.target(&o), 2.0);
    }

    #[test]
    fn positive_variation_examples() {
        assert_eq!(positive_variation(&[1.0, 1.0, 1.0]), 0.0);
        assert_eq!(positive_variation(&[1.0, 2.0, 1.5, 2.0]), 1.5);
    }

    #[test]
    fn constant_never_moves() {
        let mut s = StepsizeSchedule::constant(0.7).unwrap();
        for k in 0..5 {
            assert_eq!(s.next_gamma(&obs(k)), 0.7);
        }
        assert!(StepsizeSchedule::constant(0.0).is_err());
    }

    #[test]
    fn invalid_safeguards() {
        let z = ZetaRule::<f64>::default();
        assert!(Safeguard::new(1.0, 2.0, 1.0, z, TRule::Harmonic).is_err());
        assert!(Safeguard::new(3.0, 0.1, 1.0, z, TRule::Harmonic).is_err());
        let bad = ZetaRule {
            power: 1.0,
            ..z
        };
        assert!(Safeguard::new(0.5, 0.1, 1.0, bad, TRule::Harmonic).is_err());
    }

    #[test]
    fn max_feasible_lambda() {
        let plan = RelaxationPlan::<f64>::default();
        // matrix-form γμ = 0.5, θ = 0.5: raw (1.5 - ε)/1 capped at 1
        assert_eq!(plan.lambda(0.5, 0.5, 1.0), 1.0);
        let uncapped = RelaxationPlan {
            lambda: LambdaRule::MaxFeasible { cap: f64::INFINITY },
            ..plan
        };
        assert!((uncapped.lambda(0.5, 0.5, 1.0) - 1.499).abs() < 1e-12);
    }

    #[test]
    fn rule_names() {
        for n in ["norm-ratio", "accel", "harmonic"] {
            assert_eq!(n.parse::<TRule<f64>>().unwrap().name(), n);
        }
    }
}
