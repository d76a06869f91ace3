//! Adaptive Gauss–Kronrod quadrature in one and two dimensions.

use crate::error::{Error, Result};

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
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for the adaptive rules. A subdivision stops once the summed
/// error estimate is below `rel_tol * sum|cell values| + abs_tol`.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-7,
            abs_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

impl QuadOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        QuadOptions {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Sum of absolute cell values, the scale used by the relative tolerance.
    pub magnitude: f64,
    pub evals: usize,
}

struct Cell {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

fn kronrod<F>(f: &mut F, a: f64, b: f64) -> Result<Cell>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let (fc, mc) = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut abs = mc * WGK[7];
    for (j, &x) in XGK.iter().enumerate().take(7) {
        let (f1, m1) = f(c - h * x)?;
        let (f2, m2) = f(c + h * x)?;
        k += WGK[j] * (f1 + f2);
        abs += WGK[j] * (m1 + m2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    let value = k * h;
    let error = ((k - g) * h).abs();
    Ok(Cell {
        a,
        b,
        value,
        error,
        abs: abs * h.abs(),
    })
}

/// Globally adaptive G7–K15 integration of `f` over `[a, b]`.
///
/// Deterministic: the cell with the largest error is split, ties broken by
/// position.
pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    if b < a {
        let mut e = integrate_pieces(&mut f, &[b, a], opts)?;
        e.value = -e.value;
        return Ok(e);
    }
    integrate_pieces(&mut f, &[a, b], opts)
}

/// Like [`integrate`] but starts from the given breakpoints (sorted).
pub fn integrate_pieces<F>(f: &mut F, points: &[f64], opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut g = |x: f64| f(x).map(|v| (v, v.abs()));
    integrate_scaled(&mut g, points, opts)
}

/// Adaptive integration of an integrand that also reports a magnitude
/// `m(x) ≥ |f(x)|`; the relative tolerance applies to `∫ m`. Used when
/// `f` is itself an integral whose value cancels internally.
pub fn integrate_scaled<F>(f: &mut F, points: &[f64], opts: &QuadOptions) -> Result<Estimate>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let mut cells = Vec::new();
    for w in points.windows(2) {
        if w[1] > w[0] {
            cells.push(kronrod(f, w[0], w[1])?);
        }
    }
    if cells.is_empty() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            magnitude: 0.0,
            evals: 0,
        });
    }
    let mut evals = 15 * cells.len();
    loop {
        let value: f64 = cells.iter().map(|c| c.value).sum();
        let error: f64 = cells.iter().map(|c| c.error).sum();
        let magnitude: f64 = cells.iter().map(|c| c.abs).sum();
        if error <= opts.rel_tol * magnitude + opts.abs_tol {
            return Ok(Estimate {
                value,
                error,
                magnitude,
                evals,
            });
        }
        let (worst, _) = cells
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, be), (i, c)| {
                if c.error > be {
                    (i, c.error)
                } else {
                    (bi, be)
                }
            });
        let cell = cells.swap_remove(worst);
        let mid = 0.5 * (cell.a + cell.b);
        if cells.len() + 2 > opts.max_intervals || mid <= cell.a || mid >= cell.b {
            return Err(Error::Unconverged(format!(
                "1D rule stalled on [{:e}, {:e}] (error {:e}, total {:e})",
                cell.a, cell.b, cell.error, error
            )));
        }
        cells.push(kronrod(f, cell.a, mid)?);
        cells.push(kronrod(f, mid, cell.b)?);
        evals += 30;
        // keep a canonical order so results do not depend on swap history
        cells.sort_by(|p, q| p.a.total_cmp(&q.a));
    }
}

/// Iterated integral of `f(x, y)` over `[x0, x1] × [y0, y1]`, outer in x.
pub fn integrate_rectangle<F>(
    f: F,
    x: [f64; 2],
    y: [f64; 2],
    opts: &QuadOptions,
) -> Result<Estimate>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let mut inner_evals = 0;
    let mut outer = integrate(
        |xv| {
            let e = integrate(|yv| f(xv, yv), y[0], y[1], opts)?;
            inner_evals += e.evals;
            Ok(e.value)
        },
        x[0],
        x[1],
        opts,
    )?;
    outer.evals = inner_evals;
    Ok(outer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn smooth_and_singular_1d() {
        let o = QuadOptions::with_tol(1e-12, 0.0);
        let e = integrate(|x| Ok(x.sin()), 0.0, std::f64::consts::PI, &o).unwrap();
        assert!((e.value - 2.0).abs() < 1e-13);
        let e = integrate(|x| Ok(1.0 / x.sqrt()), 0.0, 1.0, &o).unwrap();
        assert!((e.value - 2.0).abs() < 1e-10);
        let e = integrate(|x| Ok(x.powi(-3)), 1e-3, 1.0, &o).unwrap();
        assert!((e.value - 0.5 * (1e6 - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn reversed_interval_is_negated() {
        let o = QuadOptions::default();
        let a = integrate(|x| Ok(x.exp()), 0.0, 1.0, &o).unwrap().value;
        let b = integrate(|x| Ok(x.exp()), 1.0, 0.0, &o).unwrap().value;
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn non_integrable_reports_unconverged() {
        let o = QuadOptions {
            max_intervals: 200,
            ..QuadOptions::with_tol(1e-12, 0.0)
        };
        let r = integrate(|x| Ok(1.0 / x), 0.0, 1.0, &o);
        assert!(matches!(r, Err(Error::Unconverged(_))));
    }

    proptest! {
        #[test]
        fn cubic_polynomials_exact_on_rectangles(
            c in proptest::collection::vec(-5.0f64..5.0, 10),
            x0 in -2.0f64..0.0, w in 0.1f64..3.0,
            y0 in -2.0f64..0.0, h in 0.1f64..3.0,
        ) {
            let pows: [(i32, i32); 10] =
                [(0,0),(1,0),(0,1),(2,0),(1,1),(0,2),(3,0),(2,1),(1,2),(0,3)];
            let f = |x: f64, y: f64| {
                Ok(pows.iter().zip(&c).map(|(&(i, j), k)| k * x.powi(i) * y.powi(j)).sum())
            };
            let (x1, y1) = (x0 + w, y0 + h);
            let exact: f64 = pows.iter().zip(&c).map(|(&(i, j), k)| {
                let ix = (x1.powi(i + 1) - x0.powi(i + 1)) / (i + 1) as f64;
                let iy = (y1.powi(j + 1) - y0.powi(j + 1)) / (j + 1) as f64;
                k * ix * iy
            }).sum();
            let e = integrate_rectangle(f, [x0, x1], [y0, y1], &QuadOptions::default()).unwrap();
            prop_assert!((e.value - exact).abs() < 1e-12 * exact.abs().max(1.0));
        }
    }
}
