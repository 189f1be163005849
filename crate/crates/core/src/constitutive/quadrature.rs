//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use crate::error::{ChbError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 4000;

/// One G7/K15 panel: (Kronrod estimate, |K15 - G7|).
fn panel(f: &mut impl FnMut(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

struct Panel {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
}

/// Integrates `f` over `[a, b]` to an absolute error estimate below `abs_tol`.
///
/// Globally adaptive: the panel with the largest error estimate is bisected
/// until the summed estimate meets the tolerance.
pub fn integrate(mut f: impl FnMut(f64) -> Result<f64>, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (val, err) = panel(&mut f, a, b)?;
    let mut panels = vec![Panel { a, b, val, err }];
    loop {
        let total_err: f64 = panels.iter().map(|p| p.err).sum();
        if total_err <= abs_tol {
            break;
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.err > acc.1 { (i, p.err) } else { acc });
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if panels.len() + 2 > MAX_PANELS || m == p.a || m == p.b {
            return Err(ChbError::Numeric(format!(
                "quadrature on [{a}, {b}] missed tolerance {abs_tol:e} (estimate {total_err:e})"
            )));
        }
        let (lv, le) = panel(&mut f, p.a, m)?;
        let (rv, re) = panel(&mut f, m, p.b)?;
        panels.push(Panel { a: p.a, b: m, val: lv, err: le });
        panels.push(Panel { a: m, b: p.b, val: rv, err: re });
    }
    Ok(panels.iter().map(|p| p.val).sum())
}
