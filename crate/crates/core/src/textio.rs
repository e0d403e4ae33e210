//! Small helpers shared by the delimiter-separated file formats.

/// Nine significant digits in scientific notation, e.g. `-5.00000000e1`.
pub fn sig9(v: f64) -> String {
    format!("{v:.8e}")
}

/// Value as it reads back after a [`sig9`] round trip.
pub fn quantize9(v: f64) -> f64 {
    sig9(v).parse().expect("sig9 output parses")
}

pub fn parse_f64(field: &str) -> Option<f64> {
    field.trim().parse().ok()
}
