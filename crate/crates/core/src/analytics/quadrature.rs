//! Adaptive Gauss–Kronrod (7, 15) quadrature.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[allow(clippy::excessive_precision)]
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
#[allow(clippy::excessive_precision)]
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
/// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub const DEFAULT_MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

/// Kronrod estimate and |Kronrod - Gauss| on `[a, b]`. Only interior points
/// are evaluated.
fn gk15<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = half * (a + b);
    let radius = half * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = radius * T::lit(XGK[j]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

/// Integrates `f` over `[a, b]`, bisecting the interval with the largest
/// error estimate until the summed estimate drops below `abs_tol`.
pub fn integrate<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    abs_tol: T,
    max_intervals: usize,
) -> Result<Quadrature<T>> {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    loop {
        let value = parts.iter().fold(T::zero(), |s, p| s + p.2);
        let error = parts.iter().fold(T::zero(), |s, p| s + p.3);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature { error: f64::NAN, intervals: parts.len() });
        }
        if error <= abs_tol {
            return Ok(Quadrature { value, error, intervals: parts.len() });
        }
        if parts.len() >= max_intervals {
            return Err(Error::Quadrature { error: error.to_f64_lossy(), intervals: parts.len() });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).expect("finite errors"))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = T::lit(0.5) * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Quadrature { error: error.to_f64_lossy(), intervals: parts.len() + 1 });
        }
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integrates over `[0, inf)` through `x = u / (1 - u)`, `dx = du / (1 - u)^2`.
pub fn integrate_half_line<T: Real, F: FnMut(T) -> T>(mut f: F, abs_tol: T) -> Result<Quadrature<T>> {
    let one = T::one();
    integrate(
        |u: T| {
            let s = one - u;
            f(u / s) / (s * s)
        },
        T::zero(),
        one,
        abs_tol,
        DEFAULT_MAX_INTERVALS,
    )
}
