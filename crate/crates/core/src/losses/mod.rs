//! k-way hinge and logistic losses and the unsupervised loss functionals.

mod empirical;
mod exact;

pub use empirical::{
    block_loss_empirical, block_losses_per_tuple, unsup_loss_empirical, unsup_losses_per_tuple,
};
pub(crate) use exact::binom_u128;
pub use exact::{
    block_loss_exact, collision_split, decompose_unsup, unsup_loss_exact, CollisionSplit,
    ExactLosses, UnsupDecomposition,
};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    Hinge,
    Logistic,
}

impl std::str::FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(Self::Hinge),
            "logistic" => Ok(Self::Logistic),
            other => Err(Error::InvalidArgument(format!("unknown loss `{other}`"))),
        }
    }
}

impl std::fmt::Display for LossFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Hinge => "hinge",
            Self::Logistic => "logistic",
        })
    }
}

/// Loss selector. `margin` is γ of the hinge form max{0, 1 + max_i(−v_i)/γ}
/// and is always 1 for the logistic family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossKind<T> {
    family: LossFamily,
    margin: T,
}

impl<T: Real> LossKind<T> {
    pub fn hinge() -> Self {
        Self {
            family: LossFamily::Hinge,
            margin: T::one(),
        }
    }

    pub fn logistic() -> Self {
        Self {
            family: LossFamily::Logistic,
            margin: T::one(),
        }
    }

    pub fn hinge_with_margin(gamma: T) -> Result<Self> {
        if !(gamma > T::zero()) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("margin must be positive, got {gamma}")));
        }
        Ok(Self {
            family: LossFamily::Hinge,
            margin: gamma,
        })
    }

    pub fn of(family: LossFamily) -> Self {
        match family {
            LossFamily::Hinge => Self::hinge(),
            LossFamily::Logistic => Self::logistic(),
        }
    }

    pub fn family(&self) -> LossFamily {
        self.family
    }

    pub fn margin(&self) -> T {
        self.margin
    }

    pub fn value(&self, v: &[T]) -> Result<T> {
        if v.is_empty() {
            return Err(Error::InvalidArgument("loss of an empty vector".into()));
        }
        Ok(self.eval(v))
    }

    /// ℓ(v) for nonempty `v`.
    #[inline]
    pub fn eval(&self, v: &[T]) -> T {
        match self.family {
            LossFamily::Hinge => {
                let worst = v.iter().fold(T::neg_infinity(), |m, &x| m.max(-x));
                self.hinge_of_worst(worst)
            }
            LossFamily::Logistic => {
                let m = v.iter().fold(T::zero(), |m, &x| m.max(-x));
                let s = (-m).exp() + v.iter().map(|&x| (-x - m).exp()).sum::<T>();
                (m + s.ln()) / T::LN_2()
            }
        }
    }

    /// max{0, 1 + w/γ} where w = max_i(−v_i).
    #[inline]
    pub(crate) fn hinge_of_worst(&self, worst: T) -> T {
        (T::one() + worst / self.margin).max(T::zero())
    }

    /// ℓ_t(0⃗): 1 for hinge, log₂(1 + t) for logistic.
    pub fn at_zero(&self, t: usize) -> T {
        match self.family {
            LossFamily::Hinge => T::one(),
            LossFamily::Logistic => (T::one() + T::from_usize_lossy(t)).log2(),
        }
    }

    /// A subgradient with respect to `v`, written into `out`. At the hinge
    /// kink the zero subgradient is used; ties pick the lowest index.
    pub fn subgradient(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|g| *g = T::zero());
        match self.family {
            LossFamily::Hinge => {
                let mut arg = 0;
                for (i, &x) in v.iter().enumerate() {
                    if x < v[arg] {
                        arg = i;
                    }
                }
                if T::one() - v[arg] / self.margin > T::zero() {
                    out[arg] = -T::one() / self.margin;
                }
            }
            LossFamily::Logistic => {
                let m = v.iter().fold(T::zero(), |m, &x| m.max(-x));
                let denom = (-m).exp() + v.iter().map(|&x| (-x - m).exp()).sum::<T>();
                for (g, &x) in out.iter_mut().zip(v) {
                    *g = -(-x - m).exp() / (denom * T::LN_2());
                }
            }
        }
    }

    /// Upper bound on the loss when every representation has norm ≤ R and
    /// t scores enter: scores lie in [−2R², 2R²].
    pub fn range_bound(&self, r: T, t: usize) -> T {
        let two_r2 = T::lit(2.0) * r * r;
        match self.family {
            LossFamily::Hinge => T::one() + two_r2 / self.margin,
            LossFamily::Logistic => two_r2 / T::LN_2() + self.at_zero(t),
        }
    }
}

/// log(1 + eᶻ) without overflow.
#[inline]
pub(crate) fn softplus<T: Real>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_examples() {
        let h = LossKind::<f64>::hinge();
        assert_eq!(h.value(&[0.0]).unwrap(), 1.0);
        assert_eq!(h.value(&[-1.0, 3.0]).unwrap(), 2.0);
        let l = LossKind::<f64>::logistic();
        assert!((l.value(&[0.0, 0.0]).unwrap() - 3f64.log2()).abs() < 1e-15);
        let g = LossKind::<f64>::hinge_with_margin(2.0).unwrap();
        assert_eq!(g.value(&[-1.0]).unwrap(), 1.5);
        assert!(h.value(&[]).is_err());
        assert!(LossKind::<f64>::hinge_with_margin(0.0).is_err());
    }

    #[test]
    fn logistic_is_stable() {
        let l = LossKind::<f64>::logistic();
        assert!((l.eval(&[-1000.0]) - 1000.0 / std::f64::consts::LN_2).abs() < 1e-9);
        assert!(l.eval(&[1000.0, 1000.0]) >= 0.0);
        let l32 = LossKind::<f32>::logistic();
        assert!(l32.eval(&[-200.0]).is_finite());
    }

    #[test]
    fn subgradient_matches_finite_difference() {
        let v = [0.3, -0.2, 1.1];
        let mut g = [0.0; 3];
        for kind in [LossKind::<f64>::logistic(), LossKind::hinge_with_margin(1.5).unwrap()] {
            kind.subgradient(&v, &mut g);
            for i in 0..3 {
                let mut w = v;
                w[i] += 1e-6;
                let fd = (kind.eval(&w) - kind.eval(&v)) / 1e-6;
                assert!((fd - g[i]).abs() < 1e-5, "{kind:?} {i}: {fd} vs {}", g[i]);
            }
        }
    }

    #[test]
    fn hinge_kink_uses_zero_side() {
        let mut g = [9.0];
        LossKind::<f64>::hinge().subgradient(&[1.0], &mut g);
        assert_eq!(g, [0.0]);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0_f64) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0_f64) >= 0.0);
        assert!((softplus(0.0_f64) - 2f64.ln()).abs() < 1e-15);
    }
}
