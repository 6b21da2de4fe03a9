//! Points and displacements on the unit torus `[0,1)²`.

pub type Point = [f64; 2];

/// Wraps a coordinate into `[0, 1)`.
#[inline]
pub fn wrap_unit(v: f64) -> f64 {
    if (0.0..1.0).contains(&v) {
        return v;
    }
    if (1.0..2.0).contains(&v) {
        return v - 1.0;
    }
    let w = v - v.floor();
    // v slightly negative can round to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

#[inline]
pub fn wrap(x: Point) -> Point {
    [wrap_unit(x[0]), wrap_unit(x[1])]
}

/// Wraps a coordinate difference into `[−1/2, 1/2)`.
#[inline]
pub fn wrap_centered(v: f64) -> f64 {
    // Differences of wrapped points land in (−1, 1); avoid `floor` there.
    if (-0.5..0.5).contains(&v) {
        return v;
    }
    if (0.5..1.5).contains(&v) {
        return v - 1.0;
    }
    if (-1.5..-0.5).contains(&v) {
        return v + 1.0;
    }
    let w = v - (v + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

/// Canonical displacement `x − y` in `[−1/2, 1/2)²`.
#[inline]
pub fn displacement(x: Point, y: Point) -> Point {
    [wrap_centered(x[0] - y[0]), wrap_centered(x[1] - y[1])]
}

/// Torus (geodesic) distance.
#[inline]
pub fn distance(x: Point, y: Point) -> f64 {
    let d = displacement(x, y);
    d[0].hypot(d[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn distance_examples() {
        assert!((distance([0.0, 0.0], [0.5, 0.5]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((distance([0.95, 0.0], [0.05, 0.0]) - 0.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn wrapped_ranges(v in -50.0f64..50.0) {
            let w = wrap_unit(v);
            prop_assert!((0.0..1.0).contains(&w));
            let c = wrap_centered(v);
            prop_assert!((-0.5..0.5).contains(&c));
            prop_assert!(((v - c) - (v - c).round()).abs() < 1e-9);
        }
    }
}
