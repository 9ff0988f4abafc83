#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Activation {
    Relu,
    /// Exact `x·Φ(x)` using the error function.
    Gelu,
    Identity,
}

const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;
// 1/sqrt(2π)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Gelu => 0.5 * x * (1.0 + libm::erf(x * FRAC_1_SQRT_2)),
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation. ReLU uses 0 at 0.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let cdf = 0.5 * (1.0 + libm::erf(x * FRAC_1_SQRT_2));
                let pdf = INV_SQRT_2PI * libm::exp(-0.5 * x * x);
                cdf + x * pdf
            }
            Activation::Identity => 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gelu_reference_points() {
        assert_eq!(Activation::Gelu.apply(0.0), 0.0);
        // x·Φ(x) at x = 1: Φ(1) = 0.8413447460685429
        assert!((Activation::Gelu.apply(1.0) - 0.841_344_746_068_542_9).abs() < 1e-12);
        assert!((Activation::Gelu.apply(-1.0) + 0.158_655_253_931_457_05).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for act in [Activation::Gelu, Activation::Identity, Activation::Relu] {
            for &x in &[-2.3, -0.7, 0.4, 1.9] {
                let h = 1e-6;
                let fd = (act.apply(x + h) - act.apply(x - h)) / (2.0 * h);
                assert!((fd - act.derivative(x)).abs() < 1e-6, "{act:?} at {x}");
            }
        }
    }
}
