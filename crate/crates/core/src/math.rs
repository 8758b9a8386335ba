//! Small numeric helpers shared by the simulator stages: decibel
//! conversions, the Bessel function J1 used by the reflector pattern,
//! deterministic seed derivation, and basic sample statistics.

// ---------- Decibels ----------

/// Converts a linear power ratio to decibels.
pub fn lin_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Converts decibels to a linear power ratio.
pub fn db_to_lin(db: f64) -> f64 {
    10.0_f64.powf(db / 10.0)
}

// ---------- Bessel J1 ----------

/// Bessel function of the first kind, order one.
///
/// Rational approximations in the two classic regimes (|x| <= 3 and
/// beyond), accurate to roughly 1e-8 absolute — far tighter than any
/// antenna-pattern tolerance in this crate.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let y = x * x;
        let num = x
            * (72362614232.0
                + y * (-7895059235.0
                    + y * (242396853.1
                        + y * (-2972611.439 + y * (15704.48260 + y * (-30.16036606))))));
        let den = 144725228442.0
            + y * (2300535178.0 + y * (18583304.74 + y * (99447.43394 + y * (376.9991397 + y))));
        num / den
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let p1 = 1.0
            + y * (0.183105e-2
                + y * (-0.3516396496e-4 + y * (0.2457520174e-5 + y * (-0.240337019e-6))));
        let q1 = 0.04687499995
            + y * (-0.2002690873e-3
                + y * (0.8449199096e-5 + y * (-0.88228987e-6 + y * 0.105787412e-6)));
        let xx = ax - 2.356194491;
        let ans = (0.636619772 / ax).sqrt() * (xx.cos() * p1 - z * xx.sin() * q1);
        if x < 0.0 {
            -ans
        } else {
            ans
        }
    }
}

/// Normalised aperture taper `(2 J1(u) / u)^2`, with the removable
/// singularity at `u = 0` filled in by its limit 1.
pub fn aperture_taper(u: f64) -> f64 {
    if u.abs() < 1e-9 {
        return 1.0;
    }
    let t = 2.0 * bessel_j1(u) / u;
    t * t
}

/// Argument at which [`aperture_taper`] crosses one half, found once by
/// bisection. This pins the pattern's -3 dB point to the beam edge.
pub fn taper_half_power_arg() -> f64 {
    let mut lo = 1.0_f64;
    let mut hi = 2.5_f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if aperture_taper(mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------- Seed derivation ----------

/// One round of the splitmix64 mixer.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a list of tags.
///
/// The chain is a fixed splitmix64 fold, so the mapping is stable across
/// platforms and releases; every random stream in the simulator is keyed
/// this way off the single master seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut s = splitmix64(master);
    for &t in tags {
        s = splitmix64(s ^ t);
    }
    s
}

// ---------- Sample statistics ----------

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation (divide by n); 0 for fewer than one value.
pub fn std_population(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample standard deviation (divide by n-1); 0 for fewer than two values.
pub fn std_sample(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Empirical quantile by linear interpolation on a sorted slice.
///
/// `p` is clamped to [0, 1]; panics on an empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
