//! Small numeric helpers shared across modules.

/// Correctly rounded sum of a sequence of floats (Shewchuk's algorithm, as
/// used by Python's `math.fsum`).
///
/// Sums whose exact value is zero come back as exactly `0.0`, which is what
/// lets the sign-symmetric gadgets cancel their low-order terms without
/// leaving rounding dust behind.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    let mut special = 0.0f64;
    for mut x in values {
        if !x.is_finite() {
            special += x;
            continue;
        }
        let mut i = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    if special != 0.0 || special.is_nan() {
        return special;
    }

    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // Round-half-even correction when the tail pushes past a tie.
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

/// Format a float with 17 significant digits in scientific notation. This
/// is the text form used by every golden artifact.
pub fn fmt_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

/// `⌈log₂ d⌉` for `d ≥ 1`, computed exactly on integers.
pub fn ceil_log2(d: u64) -> u32 {
    assert!(d >= 1, "ceil_log2 of zero");
    if d == 1 {
        0
    } else {
        64 - (d - 1).leading_zeros()
    }
}

/// Binomial coefficient (exact while the result fits in 64 bits).
pub(crate) fn binomial_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Relative difference with an absolute floor, used for tolerance checks.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Serde helpers that write floats in the 17-digit artifact form.
pub(crate) mod json_f64 {
    use serde::{Serialize, Serializer};
    use serde_json::value::RawValue;

    fn raw(x: f64) -> Box<RawValue> {
        if x.is_finite() {
            RawValue::from_string(super::fmt_f64_17(x)).expect("formatted float is valid JSON")
        } else {
            RawValue::from_string("null".into()).expect("null is valid JSON")
        }
    }

    pub fn one<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        raw(*x).serialize(s)
    }

    pub fn opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        x.map(raw).serialize(s)
    }

    pub fn many<S: Serializer>(x: &[f64], s: S) -> Result<S::Ok, S::Error> {
        x.iter().map(|v| raw(*v)).collect::<Vec<_>>().serialize(s)
    }
}
