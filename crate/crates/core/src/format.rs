//! Number formatting shared by the CSV writers.

/// Formats a float with 17 significant digits so it parses back bit-exactly.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Like [`float`], with missing values rendered as an empty field.
pub fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 391.0, f64::MIN_POSITIVE] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(opt_float(None), "");
    }
}
