//! User placement, large-scale fading and thermal noise.
//!
//! Every stochastic function takes the random source explicitly so a drop
//! is fully determined by the generator handed in.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::units::linear_to_db;

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Gains outside this window (dB) indicate a broken geometry or parameter set.
pub const GAIN_SANITY_DB: (f64, f64) = (-170.0, -30.0);

/// Median pathloss law used for a drop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PathlossModel {
    /// `128.1 + 37.6 log10(d / 1 km)`, the 2 GHz macro-cell law.
    #[default]
    Macro2Ghz,
    /// 3GPP TR 38.901 UMa NLOS with h_BS = 25 m, h_UT = 1.5 m.
    UmaNlos,
}

impl PathlossModel {
    pub fn name(self) -> &'static str {
        match self {
            PathlossModel::Macro2Ghz => "macro_2ghz",
            PathlossModel::UmaNlos => "uma_nlos",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro_2ghz" | "macro" => Some(PathlossModel::Macro2Ghz),
            "uma_nlos" | "uma" => Some(PathlossModel::UmaNlos),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeometryParams {
    cell_radius_m: f64,
    min_distance_m: f64,
    carrier_freq_hz: f64,
    pathloss: PathlossModel,
}

impl GeometryParams {
    pub fn new(
        cell_radius_m: f64,
        min_distance_m: f64,
        carrier_freq_hz: f64,
        pathloss: PathlossModel,
    ) -> Result<Self> {
        if !(min_distance_m > 0.0 && min_distance_m < cell_radius_m && cell_radius_m.is_finite()) {
            return Err(Error::domain(format!(
                "need 0 < min_distance_m ({min_distance_m}) < cell_radius_m ({cell_radius_m})"
            )));
        }
        if !(carrier_freq_hz > 0.0 && carrier_freq_hz.is_finite()) {
            return Err(Error::domain(format!(
                "carrier frequency must be positive, got {carrier_freq_hz}"
            )));
        }
        Ok(GeometryParams {
            cell_radius_m,
            min_distance_m,
            carrier_freq_hz,
            pathloss,
        })
    }

    pub fn cell_radius_m(&self) -> f64 {
        self.cell_radius_m
    }

    pub fn min_distance_m(&self) -> f64 {
        self.min_distance_m
    }

    pub fn carrier_freq_hz(&self) -> f64 {
        self.carrier_freq_hz
    }

    pub fn pathloss(&self) -> PathlossModel {
        self.pathloss
    }
}

impl Default for GeometryParams {
    fn default() -> Self {
        GeometryParams {
            cell_radius_m: 250.0,
            min_distance_m: 35.0,
            carrier_freq_hz: 2e9,
            pathloss: PathlossModel::Macro2Ghz,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShadowingParams {
    std_dev_db: f64,
}

impl ShadowingParams {
    pub fn new(std_dev_db: f64) -> Result<Self> {
        if !(std_dev_db >= 0.0 && std_dev_db.is_finite()) {
            return Err(Error::domain(format!(
                "shadowing std-dev must be >= 0, got {std_dev_db}"
            )));
        }
        Ok(ShadowingParams { std_dev_db })
    }

    pub fn std_dev_db(&self) -> f64 {
        self.std_dev_db
    }
}

impl Default for ShadowingParams {
    fn default() -> Self {
        ShadowingParams { std_dev_db: 8.0 }
    }
}

/// Linear gains of both links for one drop, plus noise and bandwidth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelRealization {
    pub g1: f64,
    pub g2: f64,
    pub noise_w: f64,
    pub bandwidth_hz: f64,
}

impl ChannelRealization {
    pub fn new(g1: f64, g2: f64, noise_w: f64, bandwidth_hz: f64) -> Result<Self> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !(positive(g1) && positive(g2)) {
            return Err(Error::domain(format!(
                "gains must be positive, got {g1}, {g2}"
            )));
        }
        if !positive(noise_w) {
            return Err(Error::domain(format!(
                "noise must be positive, got {noise_w}"
            )));
        }
        if !positive(bandwidth_hz) {
            return Err(Error::domain(format!(
                "bandwidth must be positive, got {bandwidth_hz}"
            )));
        }
        Ok(ChannelRealization {
            g1,
            g2,
            noise_w,
            bandwidth_hz,
        })
    }

    /// Both gains lie inside [`GAIN_SANITY_DB`].
    pub fn within_sanity_window(&self) -> bool {
        let (lo, hi) = GAIN_SANITY_DB;
        [self.g1, self.g2]
            .iter()
            .all(|&g| (lo..=hi).contains(&linear_to_db(g)))
    }

    /// Same drop with the links swapped.
    pub fn swapped(&self) -> Self {
        ChannelRealization {
            g1: self.g2,
            g2: self.g1,
            ..*self
        }
    }
}

/// One drop with its intermediate quantities kept for inspection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drop {
    pub distance_m: [f64; 2],
    pub pathloss_db: [f64; 2],
    pub attenuation_db: [f64; 2],
    pub realization: ChannelRealization,
}

/// Radial distance of a user placed uniformly over the annulus
/// `[min_distance_m, cell_radius_m]`.
pub fn drop_user<R: Rng + ?Sized>(geometry: &GeometryParams, rng: &mut R) -> f64 {
    let (r_min, r_max) = (geometry.min_distance_m, geometry.cell_radius_m);
    let u: f64 = rng.random();
    let r = (r_min * r_min + u * (r_max * r_max - r_min * r_min)).sqrt();
    r.clamp(r_min, r_max)
}

/// Median pathloss in dB at `distance_m`.
pub fn pathloss_db(distance_m: f64, geometry: &GeometryParams) -> Result<f64> {
    if !(distance_m >= geometry.min_distance_m) || !distance_m.is_finite() {
        return Err(Error::domain(format!(
            "distance {distance_m} m below minimum {} m",
            geometry.min_distance_m
        )));
    }
    Ok(match geometry.pathloss {
        PathlossModel::Macro2Ghz => 128.1 + 37.6 * (distance_m / 1000.0).log10(),
        PathlossModel::UmaNlos => uma_nlos_db(distance_m, geometry.carrier_freq_hz),
    })
}

fn uma_nlos_db(d2d_m: f64, carrier_freq_hz: f64) -> f64 {
    const H_BS: f64 = 25.0;
    const H_UT: f64 = 1.5;
    const H_E: f64 = 1.0;
    let fc_ghz = carrier_freq_hz / 1e9;
    let d3d = (d2d_m * d2d_m + (H_BS - H_UT).powi(2)).sqrt();
    let d_bp = 4.0 * (H_BS - H_E) * (H_UT - H_E) * carrier_freq_hz / 299_792_458.0;

    let los = if d2d_m <= d_bp {
        28.0 + 22.0 * d3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        28.0 + 40.0 * d3d.log10() + 20.0 * fc_ghz.log10()
            - 9.0 * (d_bp * d_bp + (H_BS - H_UT).powi(2)).log10()
    };
    let nlos = 13.54 + 39.08 * d3d.log10() + 20.0 * fc_ghz.log10() - 0.6 * (H_UT - 1.5);
    los.max(nlos)
}

/// Adds a zero-mean Gaussian shadowing term (in dB) to `pl_db`.
pub fn apply_shadowing<R: Rng + ?Sized>(pl_db: f64, shadow: &ShadowingParams, rng: &mut R) -> f64 {
    if shadow.std_dev_db == 0.0 {
        return pl_db;
    }
    // std_dev validated finite and positive here.
    let normal = Normal::new(0.0, shadow.std_dev_db).expect("valid std-dev");
    pl_db + normal.sample(rng)
}

pub fn gain_from_attenuation(total_db: f64) -> f64 {
    10f64.powf(-total_db / 10.0)
}

/// Thermal noise `k T B` in watts.
pub fn noise_power(bandwidth_hz: f64, temperature_k: f64) -> f64 {
    BOLTZMANN * temperature_k * bandwidth_hz
}

/// Places both users, draws independent shadowing per link and builds the
/// realization.
pub fn sample_drop<R: Rng + ?Sized>(
    geometry: &GeometryParams,
    shadow: &ShadowingParams,
    noise_w: f64,
    bandwidth_hz: f64,
    rng: &mut R,
) -> Result<Drop> {
    let mut distance_m = [0.0; 2];
    let mut pathloss = [0.0; 2];
    let mut attenuation = [0.0; 2];
    for i in 0..2 {
        distance_m[i] = drop_user(geometry, rng);
        pathloss[i] = pathloss_db(distance_m[i], geometry)?;
        attenuation[i] = apply_shadowing(pathloss[i], shadow, rng);
    }
    let realization = ChannelRealization::new(
        gain_from_attenuation(attenuation[0]),
        gain_from_attenuation(attenuation[1]),
        noise_w,
        bandwidth_hz,
    )?;
    Ok(Drop {
        distance_m,
        pathloss_db: pathloss,
        attenuation_db: attenuation,
        realization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ks_distance(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn drop_distance_in_annulus() {
        let geo = GeometryParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let r = drop_user(&geo, &mut rng);
            assert!((35.0..=250.0).contains(&r));
        }
    }

    #[test]
    fn collapsed_annulus_returns_radius() {
        let geo = GeometryParams::new(250.0, 250.0 - 1e-9, 2e9, PathlossModel::Macro2Ghz).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!((drop_user(&geo, &mut rng) - 250.0).abs() < 1e-8);
        }
    }

    #[test]
    fn drop_distance_is_area_uniform() {
        let geo = GeometryParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<f64> = (0..100_000).map(|_| drop_user(&geo, &mut rng)).collect();
        let (lo, hi) = (35.0f64, 250.0f64);
        let ks = ks_distance(samples, |r| (r * r - lo * lo) / (hi * hi - lo * lo));
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn invalid_geometry_rejected() {
        assert!(GeometryParams::new(250.0, 0.0, 2e9, PathlossModel::Macro2Ghz).is_err());
        assert!(GeometryParams::new(250.0, 300.0, 2e9, PathlossModel::Macro2Ghz).is_err());
        assert!(GeometryParams::new(250.0, 35.0, -1.0, PathlossModel::Macro2Ghz).is_err());
        assert!(ShadowingParams::new(-1.0).is_err());
    }

    #[test]
    fn macro_pathloss_reference_points() {
        let geo = GeometryParams::new(2000.0, 35.0, 2e9, PathlossModel::Macro2Ghz).unwrap();
        assert!((pathloss_db(1000.0, &geo).unwrap() - 128.1).abs() < 1e-12);
        assert!((pathloss_db(100.0, &geo).unwrap() - 90.5).abs() < 1e-12);
        assert!(matches!(
            pathloss_db(10.0, &geo),
            Err(Error::InputDomain(_))
        ));
    }

    #[test]
    fn pathloss_strictly_increasing() {
        for model in [PathlossModel::Macro2Ghz, PathlossModel::UmaNlos] {
            let geo = GeometryParams::new(250.0, 35.0, 2e9, model).unwrap();
            let mut prev = f64::NEG_INFINITY;
            let n = 5000;
            for k in 0..=n {
                let d = 35.0 + (2500.0 - 35.0) * k as f64 / n as f64;
                let pl = pathloss_db(d, &geo).unwrap();
                assert!(pl > prev, "{model:?} not increasing at {d}");
                let g = gain_from_attenuation(pl);
                assert!(g > 0.0 && g < 1.0);
                prev = pl;
            }
        }
    }

    #[test]
    fn shadowing_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shadow = ShadowingParams::default();
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| apply_shadowing(100.0, &shadow, &mut rng))
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 100.0).abs() < 0.1, "mean {mean}");
        assert!((var.sqrt() - 8.0).abs() < 0.2, "std {}", var.sqrt());

        let none = ShadowingParams::new(0.0).unwrap();
        assert_eq!(apply_shadowing(97.25, &none, &mut rng), 97.25);
    }

    #[test]
    fn attenuation_to_gain() {
        assert!((gain_from_attenuation(100.0) - 1e-10).abs() < 1e-22);
        assert_eq!(gain_from_attenuation(0.0), 1.0);
        assert!((gain_from_attenuation(90.5) - 8.912_509_381_337_459e-10).abs() < 1e-21);
    }

    #[test]
    fn thermal_noise() {
        let n = noise_power(10e6, 290.0);
        assert!((n - 4.003_882_1e-14).abs() < 1e-20);
        assert!((crate::units::w_to_dbm(n) + 103.975).abs() < 0.01);
        assert!((noise_power(20e6, 290.0) - 2.0 * n).abs() < 1e-24);
    }

    #[test]
    fn table_defaults_mostly_inside_gain_window() {
        let geo = GeometryParams::default();
        let shadow = ShadowingParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut inside = 0;
        let n = 20_000;
        for _ in 0..n {
            let d = sample_drop(&geo, &shadow, 1e-13, 1e7, &mut rng).unwrap();
            assert!(d.realization.within_sanity_window());
            for g in [d.realization.g1, d.realization.g2] {
                if (-150.0..=-50.0).contains(&linear_to_db(g)) {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 / (2 * n) as f64 >= 0.99);
    }
}
