#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vof_core::market::MarketSpec;

/// Random market with 1 to 3 generators, 1 or 2 up and down resources, no
/// ramp rows and every up cost above every down utility. Loads drawn with
/// [`random_load`] keep the day-ahead problem feasible for any ỹ in
/// `[0, ȳ]`.
pub fn random_spec(rng: &mut ChaCha8Rng, horizon: usize) -> MarketSpec {
    let g = rng.gen_range(1..=3);
    random_spec_with(rng, g, horizon)
}

pub fn random_spec_with(rng: &mut ChaCha8Rng, g: usize, horizon: usize) -> MarketSpec {
    let mut gen_costs: Vec<f64> = (0..g).map(|_| rng.gen_range(5.0..60.0)).collect();
    gen_costs.sort_by(f64::total_cmp);
    let gen_caps: Vec<f64> = (0..g).map(|_| rng.gen_range(20.0..60.0)).collect();
    let nu = rng.gen_range(1..=2);
    let nd = rng.gen_range(1..=2);
    MarketSpec {
        gen_costs,
        gen_caps,
        ramps: None,
        startup_costs: (0..g).map(|_| rng.gen_range(0.0..200.0)).collect(),
        up_costs: (0..nu).map(|_| rng.gen_range(70.0..160.0)).collect(),
        up_caps: (0..nu).map(|_| rng.gen_range(10.0..30.0)).collect(),
        down_costs: (0..nd).map(|_| rng.gen_range(0.5..8.0)).collect(),
        down_caps: (0..nd).map(|_| rng.gen_range(10.0..30.0)).collect(),
        wind_capacity: 15.0,
        horizon,
    }
}

/// Hourly loads in `[ȳ, Σcap]` so that `l - ỹ` stays inside the
/// generation range.
pub fn random_load(rng: &mut ChaCha8Rng, spec: &MarketSpec) -> Vec<f64> {
    let hi = spec.total_gen_cap();
    (0..spec.horizon).map(|_| rng.gen_range(spec.wind_capacity..hi.max(spec.wind_capacity + 1.0))).collect()
}

/// A realization that the real-time stage can balance against `forecast`.
pub fn balanceable_realization(rng: &mut ChaCha8Rng, spec: &MarketSpec, forecast: f64) -> f64 {
    let lo = (forecast - spec.total_up_cap()).max(0.0);
    let hi = (forecast + spec.total_down_cap()).min(spec.wind_capacity);
    rng.gen_range(lo..=hi)
}
