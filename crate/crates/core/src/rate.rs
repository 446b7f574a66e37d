//! The encounter rate function
//!
//! ```text
//! ρ(λ) = 1/(2π|D|) ∫₀^{2π} √(1 − 2λ cos φ + λ²) dφ
//! ```
//!
//! evaluated two independent ways: adaptive Gauss–Kronrod quadrature and the
//! closed form `∫ = 4(1+λ)·E(2√λ/(1+λ))` with `E` the complete elliptic
//! integral of the second kind, computed by the arithmetic–geometric mean.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RateMethod {
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub lambda: f64,
    pub domain_area: f64,
    pub rho: f64,
    pub method: RateMethod,
    pub abs_err_estimate: f64,
}

fn check_inputs(lambda: f64, domain_area: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRangeLambda(lambda));
    }
    if !(domain_area > 0.0 && domain_area.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain area {domain_area} must be positive")));
    }
    Ok(())
}

/// Relative speed of two unit-direction particles with speeds 1 and `lambda`
/// whose velocities make angle `phi`.
pub fn relative_speed(lambda: f64, phi: f64) -> f64 {
    (1.0 - 2.0 * lambda * phi.cos() + lambda * lambda).max(0.0).sqrt()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One G7–K15 panel: (Kronrod estimate, |Kronrod − Gauss|).
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive G7–K15 quadrature: bisect the worst panel until the
/// summed error estimate is at most `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut panels = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..10_000 {
        let err: f64 = panels.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            break;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        panels.push((lo, mid, gk15(&f, lo, mid)));
        panels.push((mid, hi, gk15(&f, mid, hi)));
    }
    let value = panels.iter().map(|p| p.2 .0).sum();
    let err = panels.iter().map(|p| p.2 .1).sum();
    (value, err)
}

/// ρ(λ) by adaptive quadrature to absolute error 1e−12 on the integral.
///
/// The integrand is even about `φ = π`, so `[0, 2π]` is folded onto `[0, π]`;
/// its only possible zero (at `λ = 1`) then sits on a panel endpoint.
pub fn rho_quadrature(lambda: f64, domain_area: f64) -> Result<RateResult> {
    check_inputs(lambda, domain_area)?;
    let (half, err) = integrate(|phi| relative_speed(lambda, phi), 0.0, PI, 0.5e-12);
    let norm = 2.0 * PI * domain_area;
    Ok(RateResult {
        lambda,
        domain_area,
        rho: 2.0 * half / norm,
        method: RateMethod::Quadrature,
        abs_err_estimate: 2.0 * err / norm,
    })
}

/// Complete elliptic integral of the second kind `E(k)` (modulus `k`), given
/// the complementary modulus `k' = √(1−k²)` separately to avoid cancellation.
pub fn elliptic_e(k: f64, k_prime: f64) -> f64 {
    if k_prime == 0.0 {
        return 1.0;
    }
    let (mut a, mut b) = (1.0f64, k_prime);
    let mut c = k;
    let mut pow = 0.5;
    let mut sum = pow * c * c;
    for _ in 0..64 {
        c = 0.5 * (a - b);
        let next_b = (a * b).sqrt();
        a = 0.5 * (a + b);
        b = next_b;
        pow *= 2.0;
        sum += pow * c * c;
        // quadratic convergence: once c is at rounding level its square is negligible
        if c.abs() <= 1e-15 * a {
            break;
        }
    }
    PI / (2.0 * a) * (1.0 - sum)
}

/// ρ(λ) from the elliptic closed form.
pub fn rho_closed_form(lambda: f64, domain_area: f64) -> Result<RateResult> {
    check_inputs(lambda, domain_area)?;
    let k = 2.0 * lambda.sqrt() / (1.0 + lambda);
    let k_prime = (1.0 - lambda) / (1.0 + lambda);
    let integral = 4.0 * (1.0 + lambda) * elliptic_e(k, k_prime);
    let rho = integral / (2.0 * PI * domain_area);
    Ok(RateResult {
        lambda,
        domain_area,
        rho,
        method: RateMethod::ClosedForm,
        abs_err_estimate: 1e-14 * rho,
    })
}

/// ρ(λ) for callers that only need the value.
pub fn rho(lambda: f64, domain_area: f64) -> Result<f64> {
    Ok(rho_closed_form(lambda, domain_area)?.rho)
}

/// Limiting law of the rescaled first-encounter time, `1 − e^{−ρt}`.
pub fn exponential_cdf(rho: f64, t: f64) -> f64 {
    -(-rho * t).exp_m1()
}

/// Angular part of ρ restricted to relative angles more than `xi` away from
/// 0 and π (mod 2π): `1/(2π) ∫_{I_ξ} √(1 − 2λ cos φ + λ²) dφ`.
pub fn transversal_speed_mean(lambda: f64, xi: f64) -> Result<f64> {
    check_inputs(lambda, 1.0)?;
    if !(0.0..PI / 2.0).contains(&xi) {
        return Err(Error::InvalidParameter(format!("xi {xi} outside [0, π/2)")));
    }
    let (half, _) = integrate(|phi| relative_speed(lambda, phi), xi, PI - xi, 1e-13);
    Ok(half / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_golden_values() {
        let r0 = rho_quadrature(0.0, 1.0).unwrap();
        assert!((r0.rho - 1.0).abs() < 1e-14);
        let r1 = rho_quadrature(1.0, 1.0).unwrap();
        assert!((r1.rho - 4.0 / PI).abs() < 1e-12);
        assert!(r1.abs_err_estimate < 1e-12);
    }

    #[test]
    fn closed_form_golden_values() {
        assert!((rho_closed_form(0.0, 1.0).unwrap().rho - 1.0).abs() < 1e-15);
        assert!((rho_closed_form(1.0, 1.0).unwrap().rho - 4.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn half_speed_frozen_after_cross_check() {
        let q = rho_quadrature(0.5, 1.0).unwrap().rho;
        let c = rho_closed_form(0.5, 1.0).unwrap().rho;
        assert!((q - c).abs() < 1e-12);
        assert!((c - 1.063_544_409_973_365).abs() < 1e-12, "{c:.15}");
    }

    #[test]
    fn elliptic_e_known_values() {
        // E(0) = π/2; E(1/√2) = 1.350643881047675 (standard table value)
        assert!((elliptic_e(0.0, 1.0) - PI / 2.0).abs() < 1e-15);
        let k = 0.5f64.sqrt();
        let e = elliptic_e(k, k);
        assert!((e - 1.350_643_881_047_675_5).abs() < 1e-14, "{e:.17}");
    }

    #[test]
    fn brute_force_midpoint_oracle() {
        // periodic smooth integrand: the midpoint rule converges geometrically
        for lambda in [0.1, 0.37, 0.8] {
            let n = 20_000;
            let h = 2.0 * PI / n as f64;
            let s: f64 = (0..n).map(|i| relative_speed(lambda, (i as f64 + 0.5) * h)).sum();
            let brute = s * h / (2.0 * PI);
            assert!((brute - rho(lambda, 1.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_lambda() {
        assert!(matches!(rho_quadrature(1.5, 1.0), Err(Error::OutOfRangeLambda(_))));
        assert!(matches!(rho_closed_form(-0.1, 1.0), Err(Error::OutOfRangeLambda(_))));
        assert!(rho(0.5, 0.0).is_err());
    }

    #[test]
    fn cdf_identities() {
        assert_eq!(exponential_cdf(2.0, 0.0), 0.0);
        assert!((exponential_cdf(2.0, 1e6) - 1.0).abs() < 1e-15);
        assert!((exponential_cdf(3.0, 2f64.ln() / 3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn transversal_mean_limits() {
        let full = transversal_speed_mean(0.37, 0.0).unwrap();
        assert!((full - rho(0.37, 1.0).unwrap()).abs() < 1e-12);
        assert!(transversal_speed_mean(0.37, 0.05).unwrap() < full);
    }
}
