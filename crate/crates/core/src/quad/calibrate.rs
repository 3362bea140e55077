use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{integrate_raw, IntegralEstimate, QuadConfig, QuadError, Strategy};
use crate::projkernel::{alpha11_top_density, KernelPoint};

/// `(−1)^{n(n−1)/2} (−2i)ⁿ`: the factor turning the coefficient of
/// `dζ_1∧⋯∧dζ_n∧dζ̄_1∧⋯∧dζ̄_n` into Lebesgue measure under the usual
/// orientation of `Cⁿ`. Calibration decides only its sign.
pub fn conventional_constant(n: usize) -> Complex64 {
    let sign = if (n * n.saturating_sub(1) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    Complex64::new(0.0, -2.0).powu(n as u32) * sign
}

/// Orientation constant for one `(n, strategy)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub n: usize,
    pub strategy: Strategy,
    pub samples: usize,
    pub seed: u64,
    /// `∫ coef(α_{1,1}ⁿ) dV` over the chart.
    pub raw: IntegralEstimate,
    /// `±1`, the sign making `∫ α_{1,1}ⁿ = 1`.
    pub orientation: i8,
    /// Multiplies raw chart integrals of top-blade coefficients.
    pub constant: Complex64,
    /// `constant · raw`, which should be `1`.
    pub calibrated_value: Complex64,
    pub calibrated_std_error: f64,
}

/// Relative distance from `±1` beyond which a calibration run is rejected.
const CALIBRATION_SLACK: f64 = 0.05;

impl Calibration {
    pub fn check_applies(&self, n: usize, strategy: Strategy) -> Result<(), QuadError> {
        if self.n != n || self.strategy != strategy {
            return Err(QuadError::NotCalibrated { n, strategy });
        }
        Ok(())
    }

    /// `|calibrated_value − 1|`.
    pub fn defect(&self) -> f64 {
        (self.calibrated_value - 1.0).norm()
    }
}

pub fn calibrate(n: usize, config: &QuadConfig) -> Result<Calibration, QuadError> {
    let chart = config.chart;
    let raw = integrate_raw(n, 1, config, |zeta| {
        let pt = KernelPoint::bare(zeta.to_vec(), None, Some(chart)).ok()?;
        alpha11_top_density(&pt).ok().map(|v| vec![v])
    })?[0];
    let c = conventional_constant(n);
    let fixed = c * raw.value;
    if fixed.norm() == 0.0 {
        return Err(QuadError::CalibrationFailed(
            "α_{1,1}ⁿ integrates to zero".into(),
        ));
    }
    let ratio = 1.0 / fixed;
    if (ratio.norm() - 1.0).abs() > CALIBRATION_SLACK || ratio.im.abs() > CALIBRATION_SLACK {
        return Err(QuadError::CalibrationFailed(format!(
            "∫ α_{{1,1}}^{n} = {fixed} under the standard orientation, not ±1"
        )));
    }
    let orientation: i8 = if ratio.re > 0.0 { 1 } else { -1 };
    let constant = c * f64::from(orientation);
    Ok(Calibration {
        n,
        strategy: config.strategy,
        samples: config.samples,
        seed: config.seed,
        raw,
        orientation,
        constant,
        calibrated_value: constant * raw.value,
        calibrated_std_error: raw.std_error * constant.norm(),
    })
}

/// Calibrations keyed by `(n, strategy)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStore {
    entries: Vec<Calibration>,
}

impl CalibrationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, n: usize, strategy: Strategy) -> Option<&Calibration> {
        self.entries
            .iter()
            .find(|c| c.n == n && c.strategy == strategy)
    }

    pub fn require(&self, n: usize, strategy: Strategy) -> Result<&Calibration, QuadError> {
        self.get(n, strategy)
            .ok_or(QuadError::NotCalibrated { n, strategy })
    }

    /// Replaces any entry with the same key.
    pub fn insert(&mut self, cal: Calibration) {
        self.entries
            .retain(|c| !(c.n == cal.n && c.strategy == cal.strategy));
        self.entries.push(cal);
        self.entries.sort_by_key(|c| (c.n, c.strategy));
    }

    pub fn entries(&self) -> &[Calibration] {
        &self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conventional_constants() {
        assert_eq!(conventional_constant(1), Complex64::new(0.0, -2.0));
        assert_eq!(conventional_constant(2), Complex64::new(4.0, 0.0));
        assert_eq!(conventional_constant(3), Complex64::new(0.0, -8.0));
    }

    #[test]
    fn raw_projective_line_is_closed_form() {
        // coefficient of dt∧dt̄ is (2πi)^{-1}(1+|t|²)^{-2}; its chart integral is 1/(2i)
        let cal = calibrate(1, &QuadConfig::new(Strategy::ChartGrid, 40_000, 0)).unwrap();
        assert!((cal.raw.value - Complex64::new(0.0, -0.5)).norm() < 1e-9);
        assert!(cal.defect() < 1e-9);
        assert!(cal.raw.std_error < 1e-9);
    }

    #[test]
    fn calibration_agrees_across_strategies_and_charts() {
        for s in [
            Strategy::ChartGrid,
            Strategy::ChartMonteCarlo,
            Strategy::SphereMonteCarlo,
        ] {
            let mut cfg = QuadConfig::new(s, 20_000, 5);
            cfg.chart = 1;
            let cal = calibrate(1, &cfg).unwrap();
            assert_eq!(cal.orientation, -1);
            assert!(
                cal.defect() < 5.0 * cal.calibrated_std_error + 1e-9,
                "{s}: {}",
                cal.defect()
            );
        }
        let cal = calibrate(2, &QuadConfig::new(Strategy::SphereMonteCarlo, 4096, 1)).unwrap();
        assert_eq!(cal.orientation, 1);
        assert!(cal.defect() < 1e-9);
    }

    #[test]
    fn store_replaces_by_key() {
        let mut store = CalibrationStore::new();
        let a = calibrate(1, &QuadConfig::new(Strategy::ChartGrid, 2000, 0)).unwrap();
        let mut b = a.clone();
        b.seed = 9;
        store.insert(a);
        store.insert(b);
        assert_eq!(store.entries().len(), 1);
        assert_eq!(store.require(1, Strategy::ChartGrid).unwrap().seed, 9);
        assert!(matches!(
            store.require(2, Strategy::ChartGrid),
            Err(QuadError::NotCalibrated { .. })
        ));
        let json = serde_json::to_string(&store).unwrap();
        assert_eq!(
            serde_json::from_str::<CalibrationStore>(&json).unwrap(),
            store
        );
    }
}
