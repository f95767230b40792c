//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use crate::error::{Error, Result};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod estimate with its embedded 7-point Gauss error.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-15, rel_tol: 1e-12, max_depth: 40 }
    }
}

/// Integrate `f` over `[a, b]`, first splitting into `n_panels` equal panels
/// and then bisecting any panel whose error estimate is too large.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    n_panels: usize,
    opts: QuadOptions,
) -> Result<f64> {
    let n_panels = n_panels.max(1);
    let width = (b - a) / n_panels as f64;
    let mut panels: Vec<(f64, f64, f64, f64, u32)> = (0..n_panels)
        .map(|i| {
            let lo = a + width * i as f64;
            let hi = if i + 1 == n_panels { b } else { lo + width };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e, 0)
        })
        .collect();
    let mut total = 0.0;
    let mut worst_unresolved = 0.0f64;
    while let Some((lo, hi, v, e, depth)) = panels.pop() {
        let span_share = (hi - lo) / (b - a);
        let allowed = opts.abs_tol.max(opts.rel_tol * v.abs()) * span_share.sqrt().max(1e-3);
        if e <= allowed || e < 1e-300 {
            total += v;
            continue;
        }
        if depth >= opts.max_depth {
            worst_unresolved = worst_unresolved.max(e);
            total += v;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        panels.push((lo, mid, v1, e1, depth + 1));
        panels.push((mid, hi, v2, e2, depth + 1));
    }
    if !total.is_finite() {
        return Err(Error::Quadrature(format!("non-finite integral on [{a}, {b}]")));
    }
    if worst_unresolved > 1e3 * opts.abs_tol.max(opts.rel_tol * total.abs()) {
        return Err(Error::Quadrature(format!(
            "error estimate {worst_unresolved:.3e} unresolved at depth {} on [{a}, {b}], value {total:.6e}",
            opts.max_depth
        )));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1, QuadOptions::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
    }

    #[test]
    fn oscillatory_and_kinked() {
        let v = integrate(|x| x.cos(), 0.0, 40.0, 8, QuadOptions::default()).unwrap();
        assert!((v - 40f64.sin()).abs() < 1e-12);
        let w = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1, QuadOptions::default()).unwrap();
        assert!((w - 2.0 / 3.0).abs() < 1e-12);
    }
}
