//! Text formatting shared by the CSV writers.

/// Formats a float with 17 significant digits (round-trip exact).
pub fn f17(x: f64) -> String {
    format!("{:.16e}", x)
}

pub(crate) fn join17(xs: impl IntoIterator<Item = f64>) -> String {
    xs.into_iter().map(f17).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &x in &[0.1, 1.0 / 3.0, -2.5e-17, 4.0 / std::f64::consts::PI] {
            assert_eq!(f17(x).parse::<f64>().unwrap(), x);
        }
    }
}
