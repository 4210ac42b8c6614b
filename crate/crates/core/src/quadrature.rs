//! Fixed Gauss–Legendre rules.

#![allow(clippy::excessive_precision)]

/// Non-negative nodes and weights of the 16-point rule on [-1, 1].
const GL16_HALF: [(f64, f64); 8] = [
    (0.095_012_509_837_637_440_185, 0.189_450_610_455_068_496_29),
    (0.281_603_550_779_258_913_23, 0.182_603_415_044_923_588_87),
    (0.458_016_777_657_227_386_34, 0.169_156_519_395_002_538_19),
    (0.617_876_244_402_643_748_45, 0.149_595_988_816_576_732_08),
    (0.755_404_408_355_003_033_9, 0.124_628_971_255_533_872_05),
    (0.865_631_202_387_831_743_88, 0.095_158_511_682_492_784_81),
    (0.944_575_023_073_232_576_08, 0.062_253_523_938_647_892_863),
    (0.989_400_934_991_649_932_6, 0.027_152_459_411_754_094_852),
];

/// Nodes of the 2-point rule mapped to [0, 1].
pub const GAUSS2_UNIT: [f64; 2] = [0.5 - 0.288_675_134_594_812_882_25, 0.5 + 0.288_675_134_594_812_882_25];

/// Integrates `f` over `[a, b]` with the 16-point Gauss–Legendre rule.
pub fn gauss16<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in &GL16_HALF {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}

/// Integrates `f` over `[a, b]` with the 4-point Gauss–Legendre rule.
pub fn gauss4<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    const NODES: [(f64, f64); 2] = [
        (0.339_981_043_584_856_264_8, 0.652_145_154_862_546_142_6),
        (0.861_136_311_594_052_575_2, 0.347_854_845_137_453_857_4),
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for &(x, w) in &NODES {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}
