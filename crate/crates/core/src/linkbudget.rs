//! Synthetic link-budget channel generator for a GEO multibeam downlink.
//!
//! The K x M channel factors as `H = Phi * D`. The deterministic part
//! couples receive gain, per-beam transmit gain, free-space path loss, and
//! noise normalization:
//!
//! ```text
//! D[k][m] = sqrt(G_R * G[k][m]) / (4 * pi * (d_k / lambda) * sqrt(kappa * T_R * B_W))
//! ```
//!
//! `Phi` is a diagonal of unit-modulus phase offsets `exp(j * phi_k)` with
//! `phi_k` drawn uniformly from `(0, 2*pi)` under a caller-supplied seed.
//! Beam gains `G[k][m]` come either from a Gaussian-taper synthetic model
//! or from a CSV table.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// constants
// ---------------------------------------------------------------------------

/// Propagation speed used for wavelength conversion, m/s.
///
/// The round engineering value keeps the reference wavelength exact:
/// 20 GHz maps to exactly 0.015 m.
pub const SPEED_OF_LIGHT_M_PER_S: f64 = 3.0e8;

/// Boltzmann constant, J/K.
pub const BOLTZMANN_J_PER_K: f64 = 1.38e-23;

/// Ring radius of the reference user layout, m.
const REFERENCE_RING_RADIUS_M: f64 = 500.0e3;

/// Gaussian taper of the reference beam pattern, rad^-2
/// (0.34 degree half-power half-angle).
///
/// Together with [`REFERENCE_PEAK_GAIN_DBI`] this puts the reference
/// scenario in a regime where the channel-inverting baseline stays
/// QoS-feasible from 6 dBW up while adjacent beams still overlap
/// substantially (amplitude coupling ~0.32).
const REFERENCE_TAPER_PER_RAD2: f64 = 20_000.0;

/// Peak per-beam transmit gain of the reference pattern, dBi.
const REFERENCE_PEAK_GAIN_DBI: f64 = 57.0;

/// Converts a decibel quantity to a linear ratio (also dBW to watts).
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

// ---------------------------------------------------------------------------
// scenario parameters
// ---------------------------------------------------------------------------

/// Physical and operating parameters of one downlink scenario.
///
/// Powers are stored in watts and thresholds as linear SINR ratios; the
/// dB/dBW conversions happen at the configuration parsing boundary.
#[derive(Debug, Clone)]
pub struct ScenarioParams {
    /// Number of served users K.
    pub num_users: usize,
    /// Number of transmit feeds M.
    pub num_feeds: usize,
    /// Carrier frequency, Hz.
    pub carrier_frequency_hz: f64,
    /// Satellite height above the sub-satellite point, m.
    pub satellite_height_m: f64,
    /// Planar user offsets from the sub-satellite point, m.
    pub user_positions_m: Vec<[f64; 2]>,
    /// User receive antenna gain, dBi.
    pub rx_gain_dbi: f64,
    /// Receiver figure of merit G/T, dB/K.
    pub g_over_t_db_per_k: f64,
    /// Carrier bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Boltzmann constant, J/K (overridable for normalized unit tests).
    pub boltzmann_j_per_k: f64,
    /// Receiver noise power after normalization (sigma^2).
    pub noise_power: f64,
    /// Transmit power budget P_T, W.
    pub total_power_w: f64,
    /// Static circuit power P_0, W.
    pub static_power_w: f64,
    /// Per-user rate weights alpha_k.
    pub beam_weights: Vec<f64>,
    /// Per-user SINR thresholds, linear ratios.
    pub sinr_thresholds: Vec<f64>,
}

impl ScenarioParams {
    /// Carrier wavelength, m.
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT_M_PER_S / self.carrier_frequency_hz
    }

    /// Linear receive antenna gain.
    pub fn rx_gain(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi)
    }

    /// Receiver noise temperature recovered from G/T and the receive gain, K.
    pub fn noise_temperature_k(&self) -> f64 {
        db_to_linear(self.rx_gain_dbi - self.g_over_t_db_per_k)
    }

    /// Line-of-sight distance from the satellite to user `k`, m.
    pub fn user_distance_m(&self, k: usize) -> f64 {
        let [x, y] = self.user_positions_m[k];
        (self.satellite_height_m.powi(2) + x * x + y * y).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidScenario(msg));
        if self.num_users == 0 || self.num_feeds == 0 {
            return fail("user and feed counts must be positive".into());
        }
        if self.user_positions_m.len() != self.num_users {
            return fail(format!(
                "expected {} user positions, got {}",
                self.num_users,
                self.user_positions_m.len()
            ));
        }
        for (name, v) in [
            ("carrier frequency", self.carrier_frequency_hz),
            ("satellite height", self.satellite_height_m),
            ("bandwidth", self.bandwidth_hz),
            ("Boltzmann constant", self.boltzmann_j_per_k),
            ("noise power", self.noise_power),
            ("total power", self.total_power_w),
            ("static power", self.static_power_w),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if self
            .user_positions_m
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return fail("user positions must be finite".into());
        }
        if self.beam_weights.len() != self.num_users {
            return fail(format!(
                "expected {} beam weights, got {}",
                self.num_users,
                self.beam_weights.len()
            ));
        }
        if self.beam_weights.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return fail("beam weights must be nonnegative and finite".into());
        }
        if !self.beam_weights.iter().any(|&a| a > 0.0) {
            return fail("at least one beam weight must be positive".into());
        }
        if self.sinr_thresholds.len() != self.num_users {
            return fail(format!(
                "expected {} SINR thresholds, got {}",
                self.num_users,
                self.sinr_thresholds.len()
            ));
        }
        if self
            .sinr_thresholds
            .iter()
            .any(|&g| !(g >= 0.0 && g.is_finite()))
        {
            return fail("SINR thresholds must be nonnegative and finite".into());
        }
        Ok(())
    }
}

/// Evenly spaced positions on a ring of the given radius, m.
pub fn ring_positions(count: usize, radius_m: f64) -> Vec<[f64; 2]> {
    (0..count)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / count.max(1) as f64;
            [radius_m * theta.cos(), radius_m * theta.sin()]
        })
        .collect()
}

/// Reference GEO Ka-band scenario: users on a 500 km ring, one beam aimed
/// at each user, 10 dBW power budget and static power, unit weights, 0 dB
/// SINR thresholds, unit-normalized noise.
pub fn reference_scenario(num_users: usize) -> (ScenarioParams, BeamGainModel) {
    let positions = ring_positions(num_users, REFERENCE_RING_RADIUS_M);
    let params = ScenarioParams {
        num_users,
        num_feeds: num_users,
        carrier_frequency_hz: 20.0e9,
        satellite_height_m: 35_786.0e3,
        user_positions_m: positions.clone(),
        rx_gain_dbi: 41.7,
        g_over_t_db_per_k: 17.68,
        bandwidth_hz: 500.0e6,
        boltzmann_j_per_k: BOLTZMANN_J_PER_K,
        noise_power: 1.0,
        total_power_w: db_to_linear(10.0),
        static_power_w: db_to_linear(10.0),
        beam_weights: vec![1.0; num_users],
        sinr_thresholds: vec![1.0; num_users],
    };
    let gains = BeamGainModel::Synthetic {
        boresights_m: positions,
        peak_gain: db_to_linear(REFERENCE_PEAK_GAIN_DBI),
        taper_per_rad2: REFERENCE_TAPER_PER_RAD2,
    };
    (params, gains)
}

// ---------------------------------------------------------------------------
// beam gain model
// ---------------------------------------------------------------------------

/// Per-beam transmit gain toward each user, either modeled or tabulated.
#[derive(Debug, Clone)]
pub enum BeamGainModel {
    /// Gaussian-taper pattern around per-beam boresight points:
    /// `G[k][m] = peak_gain * exp(-taper * angle(user k, boresight m)^2)`.
    Synthetic {
        /// Planar aim point of each beam, m.
        boresights_m: Vec<[f64; 2]>,
        /// Linear boresight gain.
        peak_gain: f64,
        /// Angular roll-off, rad^-2.
        taper_per_rad2: f64,
    },
    /// Direct K x M table of linear gains.
    Table(DMatrix<f64>),
}

/// Builds a validated Gaussian-taper gain model.
pub fn synthetic_gain_model(
    boresights_m: Vec<[f64; 2]>,
    peak_gain: f64,
    taper_per_rad2: f64,
) -> Result<BeamGainModel> {
    if boresights_m.is_empty() {
        return Err(Error::InvalidScenario("no beam boresights given".into()));
    }
    if !(peak_gain > 0.0 && peak_gain.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "peak gain must be positive and finite, got {peak_gain}"
        )));
    }
    if !(taper_per_rad2 > 0.0 && taper_per_rad2.is_finite()) {
        return Err(Error::InvalidScenario(format!(
            "taper must be positive and finite, got {taper_per_rad2}"
        )));
    }
    Ok(BeamGainModel::Synthetic {
        boresights_m,
        peak_gain,
        taper_per_rad2,
    })
}

/// Loads a gain table: a `format=linear|db` header line followed by K rows
/// of M comma-separated values.
pub fn load_gain_table(path: &Path) -> Result<BeamGainModel> {
    let text = fs::read_to_string(path)?;
    parse_gain_table(&text)
}

/// Parses gain-table text; see [`load_gain_table`] for the format.
pub fn parse_gain_table(text: &str) -> Result<BeamGainModel> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::GainTable("empty file".into()))?
        .trim();
    let in_db = match header {
        "format=linear" => false,
        "format=db" => true,
        other => {
            return Err(Error::GainTable(format!(
                "header must be 'format=linear' or 'format=db', got '{other}'"
            )))
        }
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::GainTable(format!("row {}: bad number '{}'", i + 1, cell.trim())))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::GainTable(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::GainTable("no gain rows".into()));
    }

    let (k, m) = (rows.len(), rows[0].len());
    let mut table = DMatrix::zeros(k, m);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let lin = if in_db { db_to_linear(v) } else { v };
            if !(lin > 0.0 && lin.is_finite()) {
                return Err(Error::GainTable(format!(
                    "row {} column {}: linear gain must be positive and finite, got {lin}",
                    i + 1,
                    j + 1
                )));
            }
            table[(i, j)] = lin;
        }
    }
    Ok(BeamGainModel::Table(table))
}

impl BeamGainModel {
    /// Evaluates the K x M linear gain matrix for the scenario geometry.
    pub fn gain_matrix(&self, params: &ScenarioParams) -> Result<DMatrix<f64>> {
        let (k, m) = (params.num_users, params.num_feeds);
        match self {
            BeamGainModel::Synthetic {
                boresights_m,
                peak_gain,
                taper_per_rad2,
            } => {
                if boresights_m.len() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "{} boresights for {} feeds",
                        boresights_m.len(),
                        m
                    )));
                }
                let h = params.satellite_height_m;
                Ok(DMatrix::from_fn(k, m, |i, j| {
                    let angle = off_axis_angle_rad(params.user_positions_m[i], boresights_m[j], h);
                    peak_gain * (-taper_per_rad2 * angle * angle).exp()
                }))
            }
            BeamGainModel::Table(table) => {
                if table.nrows() != k || table.ncols() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "gain table is {}x{}, scenario needs {}x{}",
                        table.nrows(),
                        table.ncols(),
                        k,
                        m
                    )));
                }
                Ok(table.clone())
            }
        }
    }
}

/// Angle at the satellite between the lines of sight to two ground points.
fn off_axis_angle_rad(a: [f64; 2], b: [f64; 2], height_m: f64) -> f64 {
    // atan2 of the cross and dot products stays accurate for nearly
    // parallel lines of sight, where acos of the cosine loses half the
    // mantissa; coincident points give exactly zero
    let u = [a[0], a[1], -height_m];
    let v = [b[0], b[1], -height_m];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let cross_norm = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    cross_norm.atan2(dot)
}

// ---------------------------------------------------------------------------
// channel assembly
// ---------------------------------------------------------------------------

/// Complex downlink channel together with its deterministic factor and the
/// sampled user phases.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    h: DMatrix<Complex64>,
    d: DMatrix<f64>,
    phases_rad: Vec<f64>,
}

impl ChannelMatrix {
    /// Complex K x M channel `H = Phi * D`.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// Deterministic link-budget factor D.
    pub fn deterministic(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// Sampled user phase offsets, rad.
    pub fn phases_rad(&self) -> &[f64] {
        &self.phases_rad
    }

    pub fn num_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_feeds(&self) -> usize {
        self.h.ncols()
    }
}

/// Deterministic channel factor `D[k][m]` from the link budget; see the
/// module docs for the formula.
pub fn antenna_pattern_matrix(
    params: &ScenarioParams,
    gains: &BeamGainModel,
) -> Result<DMatrix<f64>> {
    params.validate()?;
    let g = gains.gain_matrix(params)?;
    let g_r = params.rx_gain();
    let lambda = params.wavelength_m();
    let noise_norm =
        (params.boltzmann_j_per_k * params.noise_temperature_k() * params.bandwidth_hz).sqrt();
    let mut d = DMatrix::zeros(params.num_users, params.num_feeds);
    for k in 0..params.num_users {
        let path = 4.0 * std::f64::consts::PI * (params.user_distance_m(k) / lambda);
        for m in 0..params.num_feeds {
            d[(k, m)] = (g_r * g[(k, m)]).sqrt() / (path * noise_norm);
        }
    }
    Ok(d)
}

/// Samples K user phase offsets uniformly from `(0, 2*pi)`.
///
/// Pure in `(seed, count)`: repeated calls agree bitwise.
pub fn sample_phase_matrix(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| std::f64::consts::TAU * rng.gen::<f64>())
        .collect()
}

/// Assembles `H = Phi * D` from the deterministic factor and user phases.
pub fn assemble_channel(d: &DMatrix<f64>, phases_rad: &[f64]) -> Result<ChannelMatrix> {
    if phases_rad.len() != d.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} phases for {} users",
            phases_rad.len(),
            d.nrows()
        )));
    }
    let mut h = DMatrix::zeros(d.nrows(), d.ncols());
    for k in 0..d.nrows() {
        let phi = Complex64::from_polar(1.0, phases_rad[k]);
        for m in 0..d.ncols() {
            h[(k, m)] = phi * d[(k, m)];
        }
    }
    Ok(ChannelMatrix {
        h,
        d: d.clone(),
        phases_rad: phases_rad.to_vec(),
    })
}

/// One-call channel generation: pattern matrix, seeded phases, assembly.
pub fn generate_channel(
    params: &ScenarioParams,
    gains: &BeamGainModel,
    seed: u64,
) -> Result<ChannelMatrix> {
    let d = antenna_pattern_matrix(params, gains)?;
    let phases = sample_phase_matrix(seed, params.num_users);
    assemble_channel(&d, &phases)
}

// ---------------------------------------------------------------------------
// scenario file
// ---------------------------------------------------------------------------

/// Gain model section of a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GainConfig {
    Synthetic {
        boresights_m: Vec<[f64; 2]>,
        peak_gain_dbi: f64,
        taper_per_rad2: f64,
    },
    /// CSV table path, resolved relative to the scenario file.
    Table { path: String },
}

/// JSON scenario file mirroring [`ScenarioParams`] with powers in dBW and
/// SINR thresholds in dB.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_feeds: usize,
    pub carrier_frequency_hz: f64,
    pub satellite_height_m: f64,
    pub user_positions_m: Vec<[f64; 2]>,
    pub rx_gain_dbi: f64,
    pub g_over_t_db_per_k: f64,
    pub bandwidth_hz: f64,
    #[serde(default = "default_boltzmann")]
    pub boltzmann_j_per_k: f64,
    #[serde(default = "default_noise_power")]
    pub noise_power: f64,
    pub total_power_dbw: f64,
    pub static_power_dbw: f64,
    /// Defaults to unit weights.
    #[serde(default)]
    pub beam_weights: Option<Vec<f64>>,
    /// Defaults to 0 dB per user.
    #[serde(default)]
    pub sinr_thresholds_db: Option<Vec<f64>>,
    pub gain: GainConfig,
}

fn default_boltzmann() -> f64 {
    BOLTZMANN_J_PER_K
}

fn default_noise_power() -> f64 {
    1.0
}

impl ScenarioConfig {
    /// Reference scenario in file form; see [`reference_scenario`].
    pub fn reference(num_users: usize) -> Self {
        let positions = ring_positions(num_users, REFERENCE_RING_RADIUS_M);
        ScenarioConfig {
            num_users,
            num_feeds: num_users,
            carrier_frequency_hz: 20.0e9,
            satellite_height_m: 35_786.0e3,
            user_positions_m: positions.clone(),
            rx_gain_dbi: 41.7,
            g_over_t_db_per_k: 17.68,
            bandwidth_hz: 500.0e6,
            boltzmann_j_per_k: BOLTZMANN_J_PER_K,
            noise_power: 1.0,
            total_power_dbw: 10.0,
            static_power_dbw: 10.0,
            beam_weights: None,
            sinr_thresholds_db: None,
            gain: GainConfig::Synthetic {
                boresights_m: positions,
                peak_gain_dbi: REFERENCE_PEAK_GAIN_DBI,
                taper_per_rad2: REFERENCE_TAPER_PER_RAD2,
            },
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Converts the file form into validated runtime parameters plus the
    /// gain model, converting dB quantities to linear at this boundary.
    /// `base_dir` anchors relative gain-table paths.
    pub fn resolve(&self, base_dir: &Path) -> Result<(ScenarioParams, BeamGainModel)> {
        let params = ScenarioParams {
            num_users: self.num_users,
            num_feeds: self.num_feeds,
            carrier_frequency_hz: self.carrier_frequency_hz,
            satellite_height_m: self.satellite_height_m,
            user_positions_m: self.user_positions_m.clone(),
            rx_gain_dbi: self.rx_gain_dbi,
            g_over_t_db_per_k: self.g_over_t_db_per_k,
            bandwidth_hz: self.bandwidth_hz,
            boltzmann_j_per_k: self.boltzmann_j_per_k,
            noise_power: self.noise_power,
            total_power_w: db_to_linear(self.total_power_dbw),
            static_power_w: db_to_linear(self.static_power_dbw),
            beam_weights: self
                .beam_weights
                .clone()
                .unwrap_or_else(|| vec![1.0; self.num_users]),
            sinr_thresholds: self
                .sinr_thresholds_db
                .clone()
                .map(|v| v.into_iter().map(db_to_linear).collect())
                .unwrap_or_else(|| vec![1.0; self.num_users]),
        };
        params.validate()?;
        let gains = match &self.gain {
            GainConfig::Synthetic {
                boresights_m,
                peak_gain_dbi,
                taper_per_rad2,
            } => synthetic_gain_model(
                boresights_m.clone(),
                db_to_linear(*peak_gain_dbi),
                *taper_per_rad2,
            )?,
            GainConfig::Table { path } => load_gain_table(&base_dir.join(path))?,
        };
        // shape check up front so config errors surface at load time
        gains.gain_matrix(&params)?;
        Ok((params, gains))
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
