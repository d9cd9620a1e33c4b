use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Record, SampleSet};

/// Parameters of the synthetic wind/load generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Wind capacity ȳ (kW).
    pub capacity: f64,
    pub load_min: f64,
    pub load_mean: f64,
    pub load_max: f64,
    /// Long-run mean and stationary deviation of the 100 m wind speed (m/s).
    pub speed_mean: f64,
    pub speed_std: f64,
    /// Hourly AR(1) coefficient of the wind speed.
    pub speed_ar: f64,
    /// Stationary deviation and AR(1) coefficient of the weather-forecast
    /// error on the speed features.
    pub nwp_error_std: f64,
    pub nwp_error_ar: f64,
    /// Speed at the centre of the power curve and its width (m/s).
    pub curve_center: f64,
    pub curve_width: f64,
    /// Half-width of the additive realization noise as a fraction of ȳ.
    pub noise_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            capacity: 40.0,
            load_min: 50.0,
            load_mean: 56.0,
            load_max: 70.0,
            speed_mean: 7.5,
            speed_std: 3.0,
            speed_ar: 0.95,
            nwp_error_std: 1.5,
            nwp_error_ar: 0.9,
            curve_center: 8.0,
            curve_width: 1.2,
            noise_fraction: 0.03,
        }
    }
}

/// Diurnal shape with a morning and an evening peak, scaled so that
/// `min + (max - min) · shape(h)` has the requested mean.
fn load_profile(cfg: &SynthConfig) -> [f64; 24] {
    let raw: Vec<f64> = (0..24)
        .map(|h| {
            let x = h as f64;
            (-(x - 8.5).powi(2) / 6.0).exp() * 0.8 + (-(x - 19.0).powi(2) / 8.0).exp()
        })
        .collect();
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unit: Vec<f64> = raw.iter().map(|v| (v - lo) / (hi - lo)).collect();
    let target = ((cfg.load_mean - cfg.load_min) / (cfg.load_max - cfg.load_min)).clamp(1e-6, 1.0 - 1e-6);
    // The mean of unit^p falls monotonically in p; bisect on log p.
    let mean_at = |p: f64| unit.iter().map(|u| u.powf(p)).sum::<f64>() / 24.0;
    let (mut a, mut b) = (-8.0_f64, 8.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mean_at(mid.exp()) > target {
            a = mid;
        } else {
            b = mid;
        }
    }
    let p = (0.5 * (a + b)).exp();
    let mut out = [0.0; 24];
    for (o, u) in out.iter_mut().zip(&unit) {
        *o = cfg.load_min + (cfg.load_max - cfg.load_min) * u.powf(p);
    }
    out
}

fn power_curve(v: f64, cfg: &SynthConfig) -> f64 {
    let s = |x: f64| 1.0 / (1.0 + (-(x - cfg.curve_center) / cfg.curve_width).exp());
    ((s(v) - s(0.0)) / (1.0 - s(0.0))).clamp(0.0, 1.0)
}

/// Hourly synthetic samples starting 2012-01-01T00:00, fully determined by
/// `seed`.
pub fn synth_generate(seed: u64, days: usize, cfg: &SynthConfig) -> SampleSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let profile = load_profile(cfg);
    let start = NaiveDate::from_ymd_opt(2012, 1, 1).and_then(|d| d.and_hms_opt(0, 0, 0)).expect("valid start");

    let speed_innov = cfg.speed_std * (1.0 - cfg.speed_ar * cfg.speed_ar).sqrt();
    let err_innov = cfg.nwp_error_std * (1.0 - cfg.nwp_error_ar * cfg.nwp_error_ar).sqrt();
    let mut speed = cfg.speed_mean + cfg.speed_std * std_normal.sample(&mut rng);
    let mut err = cfg.nwp_error_std * std_normal.sample(&mut rng);
    let mut direction: f64 = rng.gen_range(0.0..360.0);
    let mut noise = 0.0;

    let mut records = Vec::with_capacity(days * 24);
    for k in 0..days * 24 {
        speed = cfg.speed_mean + cfg.speed_ar * (speed - cfg.speed_mean) + speed_innov * std_normal.sample(&mut rng);
        speed = speed.max(0.0);
        err = cfg.nwp_error_ar * err + err_innov * std_normal.sample(&mut rng);
        direction = (direction + 8.0 * std_normal.sample(&mut rng)).rem_euclid(360.0);
        // Bounded, mildly persistent noise on the realization.
        noise = (0.7 * noise + 0.3 * rng.gen_range(-1.0..=1.0_f64)).clamp(-1.0, 1.0);

        let ws100 = (speed + err).max(0.0);
        let ws10 = (0.72 * ws100 + 0.3 * std_normal.sample(&mut rng)).max(0.0);
        let wd100 = (direction + 5.0 * std_normal.sample(&mut rng)).rem_euclid(360.0);
        let wd10 = (direction + 10.0 + 8.0 * std_normal.sample(&mut rng)).rem_euclid(360.0);
        let wind = (cfg.capacity * (power_curve(speed, cfg) + cfg.noise_fraction * noise)).clamp(0.0, cfg.capacity);

        records.push(Record {
            timestamp: start + Duration::hours(k as i64),
            features: [ws10, wd10, ws100, wd100],
            wind,
            load: profile[k % 24],
        });
    }
    SampleSet { records, capacity: cfg.capacity, wind_multiplier: 1.0, scaling: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_samples() {
        let cfg = SynthConfig::default();
        assert_eq!(synth_generate(7, 10, &cfg), synth_generate(7, 10, &cfg));
        assert_ne!(synth_generate(7, 10, &cfg), synth_generate(8, 10, &cfg));
    }

    #[test]
    fn year_has_one_record_per_hour() {
        let set = synth_generate(1, 365, &SynthConfig::default());
        assert_eq!(set.len(), 8760);
        set.validate().unwrap();
        assert_eq!(set.days(24).unwrap().len(), 365);
    }

    #[test]
    fn load_statistics_hit_the_targets() {
        let set = synth_generate(3, 30, &SynthConfig::default());
        let loads = set.loads();
        let min = loads.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = loads.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = loads.iter().sum::<f64>() / loads.len() as f64;
        for (got, want) in [(min, 50.0), (mean, 56.0), (max, 70.0)] {
            assert!((got - want).abs() <= 0.02 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn wind_is_bounded_and_varied() {
        let set = synth_generate(5, 60, &SynthConfig::default());
        let w = set.winds();
        assert!(w.iter().all(|&y| (0.0..=40.0).contains(&y)));
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        assert!(mean > 5.0 && mean < 35.0, "{mean}");
    }
}
