//! Linear delay/Doppler <-> range/velocity conversions: d = c·τ (bi-static
//! path length) and v = α·λ/2.

use super::GridConfig;

pub fn delay_doppler_to_range_velocity(config: &GridConfig, delay: f64, doppler: f64) -> (f64, f64) {
    (config.light_speed * delay, doppler_to_velocity(config, doppler))
}

pub fn range_velocity_to_delay_doppler(config: &GridConfig, range: f64, velocity: f64) -> (f64, f64) {
    (range_to_delay(config, range), velocity_to_doppler(config, velocity))
}

pub fn range_to_delay(config: &GridConfig, range: f64) -> f64 {
    range / config.light_speed
}

pub fn doppler_to_velocity(config: &GridConfig, doppler: f64) -> f64 {
    doppler * config.wavelength / 2.0
}

pub fn velocity_to_doppler(config: &GridConfig, velocity: f64) -> f64 {
    2.0 * velocity / config.wavelength
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_maps_to_zero() {
        let g = GridConfig::desk_scale();
        assert_eq!(delay_doppler_to_range_velocity(&g, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn thirty_mps_at_5_9_ghz() {
        let g = GridConfig::with_light_speed(64, 64, 30e3, 1.0 / 28e3, 5.9e9, 2.998e8).unwrap();
        // 2 * 30 / (2.998e8 / 5.9e9) = 1180.787...
        let alpha = velocity_to_doppler(&g, 30.0);
        assert!((alpha - 1181.1).abs() < 0.5, "{alpha}");
        assert!((g.wavelength - 0.0508).abs() < 1e-4);
    }

    #[test]
    fn round_trip() {
        let g = GridConfig::desk_scale();
        let (r, v) = delay_doppler_to_range_velocity(&g, 3.1e-6, -412.0);
        let (t, a) = range_velocity_to_delay_doppler(&g, r, v);
        assert!((t - 3.1e-6).abs() < 1e-20);
        assert!((a + 412.0).abs() < 1e-10);
    }
}
