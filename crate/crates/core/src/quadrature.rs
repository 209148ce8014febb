//! Adaptive Gauss–Kronrod (7/15) quadrature.
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_DEPTH: u32 = 50;

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
/// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// `(Kronrod estimate, |Kronrod − Gauss|)` on one panel.
fn gk15<T: Real, F: Fn(T) -> Result<T>>(f: &F, a: T, b: T) -> Result<(T, T)> {
    let half = (b - a) / lit(2.0);
    let centre = (a + b) / lit(2.0);
    let fc = f(centre)?;
    let mut kronrod = fc * lit(WGK[7]);
    let mut gauss = fc * lit(WG[3]);
    for i in 0..7 {
        let dx = half * lit(XGK[i]);
        let pair = f(centre - dx)? + f(centre + dx)?;
        kronrod = kronrod + pair * lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + pair * lit(WG[i / 2]);
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Each panel is accepted once its Kronrod/Gauss difference is below its
/// share of `tol` (by length) or a few ulps of its value, so requests below
/// machine resolution still terminate.
pub fn integrate<T, F>(f: F, a: T, b: T, tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if a == b {
        return Ok(T::zero());
    }
    let eval = |x: T| -> Result<T> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::EvaluationDomain { what: "integrand", t: to_f64(x) })
        }
    };
    let ulp_floor = lit::<T>(64.0) * T::epsilon();
    let width = (b - a).abs();
    let mut stack = vec![(a, b, 0u32)];
    let mut total = T::zero();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gk15(&eval, lo, hi)?;
        let share = tol * (hi - lo).abs() / width;
        if depth >= MAX_DEPTH || err <= share.max(ulp_floor * value.abs()) {
            total = total + value;
        } else {
            let mid = (lo + hi) / lit(2.0);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

/// [`integrate`] with `[a, b]` split at every break point strictly inside it.
///
/// Kinks of the integrand belong in `breaks`: a panel straddling one can pass
/// the Kronrod/Gauss test by accident.
pub fn integrate_piecewise<T, F>(f: F, a: T, b: T, breaks: &[T], tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut cuts: Vec<T> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite break points"));
    let width = hi - lo;
    if width == T::zero() {
        return Ok(T::zero());
    }
    let mut total = T::zero();
    let mut left = lo;
    for right in cuts.into_iter().chain(std::iter::once(hi)) {
        total = total + integrate(&f, left, right, tol * (right - left) / width)?;
        left = right;
    }
    Ok(if a <= b { total } else { -total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand_to_tolerance() {
        let v = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn square_root_singularity() {
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn break_points_split_the_range() {
        let f = |x: f64| if x < 0.7 { x } else { 0.7 + 5.0 * (x - 0.7) };
        let v = integrate_piecewise(f, 0.0, 1.0, &[0.7, 3.0], 1e-13).unwrap();
        assert!((v - (0.245 + 0.21 + 0.225)).abs() < 1e-14);
        let back = integrate_piecewise(f, 1.0, 0.0, &[0.7], 1e-13).unwrap();
        assert_eq!(back, -v);
    }

    #[test]
    fn kinked_integrand() {
        let v = integrate(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-13).unwrap();
        assert!((v - 0.29).abs() < 1e-13);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|x: f64| x, 3.0, 3.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, 1e-12).unwrap_err();
        assert!(matches!(err, Error::EvaluationDomain { .. }));
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate(|x: f32| x * x, 0.0f32, 3.0, 1e-6).unwrap();
        assert!((v - 9.0).abs() < 1e-4);
    }
}
