//! Time conversion and interpolation shared by the readers.

/// Converts a decimal seconds literal (as written in the file) to whole
/// milliseconds, rounding to nearest with ties away from zero.
///
/// Works on the decimal digits directly so that `1.2345` becomes 1235
/// rather than falling victim to binary floating point.
pub fn seconds_literal_to_ms(literal: &str) -> Option<i64> {
    let s = literal.trim();
    let (negative, s) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    // value = digits * 10^(scale), scaled to milliseconds
    let digits: String = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let scale = exponent - frac_part.len() as i32 + 3;
    let magnitude: i64 = if digits.is_empty() {
        0
    } else if scale >= 0 {
        let base: i64 = digits.parse().ok()?;
        base.checked_mul(10i64.checked_pow(scale as u32)?)?
    } else {
        let drop = (-scale) as usize;
        if drop > digits.len() {
            0
        } else {
            let (kept, dropped) = digits.split_at(digits.len() - drop);
            let base: i64 = if kept.is_empty() { 0 } else { kept.parse().ok()? };
            let round_up = dropped.as_bytes().first().is_some_and(|&d| d >= b'5');
            base.checked_add(round_up as i64)?
        }
    };
    Some(if negative { -magnitude } else { magnitude })
}

/// Rounds `num / den` to nearest, ties away from zero. `den` must be positive.
pub fn div_round(num: i64, den: i64) -> i64 {
    debug_assert!(den > 0);
    let q = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

/// Boundary `k` (1-based) of `n` evenly spaced interior points between `a` and `b`.
pub fn interpolate(a: i64, b: i64, k: usize, n: usize) -> i64 {
    a + div_round(k as i64 * (b - a), n as i64 + 1)
}

/// Fills every run of `None` that has a known value on both sides by even
/// interpolation. Returns whether anything changed. Runs touching either end
/// of the slice are left untouched.
pub fn fill_between(values: &mut [Option<i64>]) -> bool {
    let mut changed = false;
    let mut last_known: Option<usize> = None;
    for i in 0..values.len() {
        if values[i].is_none() {
            continue;
        }
        if let Some(prev) = last_known {
            let gap = i - prev - 1;
            if gap > 0 {
                let (a, b) = (values[prev].unwrap(), values[i].unwrap());
                for k in 1..=gap {
                    values[prev + k] = Some(interpolate(a, b, k, gap));
                }
                changed = true;
            }
        }
        last_known = Some(i);
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_rounding_is_half_away_from_zero() {
        assert_eq!(seconds_literal_to_ms("1.2345"), Some(1235));
        assert_eq!(seconds_literal_to_ms("2.0"), Some(2000));
        assert_eq!(seconds_literal_to_ms("2"), Some(2000));
        assert_eq!(seconds_literal_to_ms("0.0004999"), Some(0));
        assert_eq!(seconds_literal_to_ms("0.0005"), Some(1));
        assert_eq!(seconds_literal_to_ms("-0.0005"), Some(-1));
        assert_eq!(seconds_literal_to_ms("-1.2345"), Some(-1235));
        assert_eq!(seconds_literal_to_ms(".5"), Some(500));
        assert_eq!(seconds_literal_to_ms("5."), Some(5000));
        assert_eq!(seconds_literal_to_ms("1.5e-05"), Some(0));
        assert_eq!(seconds_literal_to_ms("1.5e-03"), Some(2));
        assert_eq!(seconds_literal_to_ms("2.5E1"), Some(25000));
        assert_eq!(seconds_literal_to_ms("0.99999999999999989"), Some(1000));
        assert_eq!(seconds_literal_to_ms("12.345678901234567"), Some(12346));
    }

    #[test]
    fn bad_literals_are_rejected() {
        for s in ["", "-", ".", "abc", "1.2.3", "1e", "1,5", "1e999999999999"] {
            assert_eq!(seconds_literal_to_ms(s), None, "{s:?}");
        }
    }

    #[test]
    fn even_interpolation() {
        let mut v = [Some(0), None, None, Some(3000)];
        assert!(fill_between(&mut v));
        assert_eq!(v, [Some(0), Some(1000), Some(2000), Some(3000)]);

        let mut v = [Some(0), None, Some(1)];
        fill_between(&mut v);
        assert_eq!(v[1], Some(1)); // 0.5 rounds away from zero

        let mut v = [None, Some(5), None];
        assert!(!fill_between(&mut v));
        assert_eq!(v, [None, Some(5), None]);
    }

    proptest! {
        #[test]
        fn interpolated_boundaries_are_nondecreasing(a in 0i64..1_000_000, span in 0i64..1_000_000, n in 1usize..40) {
            let b = a + span;
            let mut v = vec![None; n + 2];
            v[0] = Some(a);
            v[n + 1] = Some(b);
            fill_between(&mut v);
            let v: Vec<i64> = v.into_iter().map(Option::unwrap).collect();
            for w in v.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for (k, x) in v.iter().enumerate().take(n + 1).skip(1) {
                let exact = a as f64 + k as f64 * (b - a) as f64 / (n + 1) as f64;
                prop_assert!((*x as f64 - exact).abs() <= 0.5);
            }
        }

        #[test]
        fn literal_matches_float_rounding_away_from_ties(ms in 0i64..100_000_000, frac in 0u32..1000) {
            // frac/1000 ms never a tie except 500
            prop_assume!(frac != 500);
            let lit = format!("{}.{:03}{:03}", ms / 1000, ms % 1000, frac);
            let expected = if frac > 500 { ms + 1 } else { ms };
            prop_assert_eq!(seconds_literal_to_ms(&lit), Some(expected));
        }
    }
}
