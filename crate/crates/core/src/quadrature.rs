//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 200,
        }
    }
}

impl QuadratureSettings {
    pub fn check(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_subdivisions > 0) {
            return Err(Error::invalid(
                "quadrature tolerances and subdivision limit must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
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

// Gauss 7-point weights, paired with XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * pair;
        if k % 2 == 1 {
            gauss += WG[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest error
/// estimate until the total error is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<Integral> {
    settings.check()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integration limits must be finite"));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut segments = vec![Segment { a, b, value, error }];
    let mut subdivisions = 0;
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let total_err: f64 = segments.iter().map(|s| s.error).sum();
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                subdivisions,
            });
        }
        if total_err <= settings.abs_tol.max(settings.rel_tol * total.abs()) {
            return Ok(Integral {
                value: total,
                error: total_err,
                subdivisions,
            });
        }
        if subdivisions >= settings.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: total,
                error: total_err,
                subdivisions,
            });
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(k, _)| k)
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        let (lv, le) = gk15(&f, seg.a, mid);
        let (rv, re) = gk15(&f, mid, seg.b);
        segments.push(Segment {
            a: seg.a,
            b: mid,
            value: lv,
            error: le,
        });
        segments.push(Segment {
            a: mid,
            b: seg.b,
            value: rv,
            error: re,
        });
        subdivisions += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, 0.0, 2.0, &QuadratureSettings::default()).unwrap();
        assert!((r.value - 8.0).abs() < 1e-13);
    }

    #[test]
    fn decaying_exponential() {
        let r = integrate(|x| (-x).exp(), 0.0, 40.0, &QuadratureSettings::default()).unwrap();
        assert!((r.value - (1.0 - (-40f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let settings = QuadratureSettings {
            max_subdivisions: 500,
            ..Default::default()
        };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &settings).unwrap();
        assert!((r.value - 2.0).abs() < 1e-7);
    }

    #[test]
    fn exhausting_subdivisions_is_reported() {
        let settings = QuadratureSettings {
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            max_subdivisions: 3,
        };
        let err = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &settings).unwrap_err();
        assert!(matches!(err, Error::Quadrature { subdivisions: 3, .. }));
    }

    #[test]
    fn bad_settings_rejected() {
        let settings = QuadratureSettings {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(integrate(|x| x, 0.0, 1.0, &settings).is_err());
    }
}
