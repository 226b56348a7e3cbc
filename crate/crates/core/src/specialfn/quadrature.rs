use crate::error::{Error, Result};

/// Controls for the adaptive Gauss–Kronrod integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tolerance: f64,
    pub abs_tolerance: f64,
    /// Upper bound on the number of subintervals held at any time.
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tolerance: 1e-10,
            abs_tolerance: 1e-12,
            max_subdivisions: 1024,
        }
    }
}

impl QuadratureSpec {
    pub fn new(rel_tolerance: f64, abs_tolerance: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = QuadratureSpec {
            rel_tolerance,
            abs_tolerance,
            max_subdivisions,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0 && self.abs_tolerance > 0.0) {
            return Err(Error::domain("quadrature tolerances must be strictly positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::domain("max_subdivisions must be at least 1"));
        }
        Ok(())
    }
}

// 15-point Kronrod abscissae on [-1, 1]; odd indices are the 7-point Gauss nodes.
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

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[lo, hi]`.
///
/// The interval is first cut into `initial_pieces` equal parts (capped at
/// `max_subdivisions`); the segment with the largest error estimate is then
/// bisected until the summed estimate meets the tolerance. Returns the value
/// and the achieved error estimate.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    initial_pieces: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    if !(lo <= hi) {
        return Err(Error::domain(format!("integration requires lo <= hi (got {lo} > {hi})")));
    }
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let pieces = initial_pieces.clamp(1, spec.max_subdivisions);
    let width = (hi - lo) / pieces as f64;
    let mut segments: Vec<Segment> = (0..pieces)
        .map(|i| {
            let a = lo + i as f64 * width;
            let b = if i + 1 == pieces { hi } else { lo + (i + 1) as f64 * width };
            gauss_kronrod(&f, a, b)
        })
        .collect();

    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let tolerance = spec.abs_tolerance.max(spec.rel_tolerance * value.abs());
        if error <= tolerance {
            return Ok((value, error));
        }
        if segments.len() >= spec.max_subdivisions {
            return Err(Error::Numerical {
                message: format!(
                    "quadrature did not converge within {} subdivisions",
                    spec.max_subdivisions
                ),
                achieved: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.total_cmp(&b.1.error))
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.lo + seg.hi);
        if !(mid > seg.lo && mid < seg.hi) {
            return Err(Error::Numerical {
                message: "quadrature subinterval reached floating-point resolution".into(),
                achieved: error,
            });
        }
        segments.push(gauss_kronrod(&f, seg.lo, mid));
        segments.push(gauss_kronrod(&f, mid, seg.hi));
    }
}
