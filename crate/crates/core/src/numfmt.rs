//! Decimal formatting shared by the grid and CSV writers.

/// Formats `x` as a positional decimal with at least 17 significant digits,
/// which is enough for an exact `f64` round trip.
pub fn sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0".to_string()
        } else {
            format!("{x}")
        };
    }
    let exponent = x.abs().log10().floor() as i32;
    if !(-30..=30).contains(&exponent) {
        return format!("{x:.16e}");
    }
    let decimals = (16 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(1.0 / 11.0), "0.090909090909090912");
        assert_eq!(sig17(256.0), "256.00000000000000");
        assert_eq!(sig17(-0.5), "-0.50000000000000000");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = sig17(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
