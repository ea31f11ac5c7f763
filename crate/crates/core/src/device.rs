//! CNTFET compact model.
//!
//! Chirality sets the tube diameter, the diameter sets the threshold, and a
//! square-law channel with exponential subthreshold leakage supplies the
//! I-V characteristic the solver linearizes. All evaluation is pure.

use std::f64::consts::{LN_10, PI};
use std::fmt;

use thiserror::Error;

/// Boltzmann constant over elementary charge, V/K.
const K_OVER_Q: f64 = 8.617_333_262e-5;

/// Half width of the subthreshold/strong-inversion blend window (10 mV total).
const SUBTHRESHOLD_BLEND: f64 = 5e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("invalid chirality ({n}, {m}): requires n >= m >= 0 and (n, m) != (0, 0)")]
    InvalidChirality { n: u32, m: u32 },
    #[error("chirality ({n}, {m}) is metallic")]
    Metallic { n: u32, m: u32 },
    #[error("invalid model parameter `{name}` = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("domain error: {0}")]
    Domain(String),
}

/// Nanotube chirality index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Chirality {
    n: u32,
    m: u32,
}

impl Chirality {
    pub fn new(n: u32, m: u32) -> Result<Self, DeviceError> {
        if m > n || n == 0 {
            return Err(DeviceError::InvalidChirality { n, m });
        }
        Ok(Self { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// `(n - m) mod 3 != 0`.
    pub fn is_semiconducting(&self) -> bool {
        !(self.n - self.m).is_multiple_of(3)
    }
}

impl Default for Chirality {
    fn default() -> Self {
        Self { n: 19, m: 0 }
    }
}

impl fmt::Display for Chirality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// Free function form of [`Chirality::is_semiconducting`].
pub fn is_semiconducting(c: Chirality) -> bool {
    c.is_semiconducting()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiameterFormula {
    /// `a * sqrt(n^2 + m^2) / pi`
    #[default]
    Paper,
    /// `a * sqrt(n^2 + n*m + m^2) / pi`
    Standard,
}

/// Global device-model coefficients. The electrical defaults are
/// order-of-magnitude calibration knobs, not measured values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    /// Graphene lattice constant, nm.
    pub lattice_const_a: f64,
    /// Threshold numerator, V*nm.
    pub vth_numerator: f64,
    /// Transconductance per tube, A/V^2.
    pub k_per_tube: f64,
    /// Channel-length modulation, 1/V.
    pub lambda: f64,
    /// Leakage per tube at the threshold edge (300 K), A.
    pub i_off_300k: f64,
    /// Subthreshold swing at 300 K, V/decade.
    pub subthreshold_swing_300k: f64,
    pub mobility_temp_exponent: f64,
    /// Gate capacitance per tube, F.
    pub cap_per_tube: f64,
    pub diameter_formula: DiameterFormula,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            lattice_const_a: 0.249,
            vth_numerator: 0.42,
            k_per_tube: 40e-6,
            lambda: 0.05,
            i_off_300k: 1e-12,
            subthreshold_swing_300k: 0.075,
            mobility_temp_exponent: 1.5,
            cap_per_tube: 4e-18,
            diameter_formula: DiameterFormula::Paper,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let positive = [
            ("lattice_const_a", self.lattice_const_a),
            ("vth_numerator", self.vth_numerator),
            ("k_per_tube", self.k_per_tube),
            ("i_off_300k", self.i_off_300k),
            ("subthreshold_swing_300k", self.subthreshold_swing_300k),
            ("mobility_temp_exponent", self.mobility_temp_exponent),
            ("cap_per_tube", self.cap_per_tube),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(DeviceError::InvalidParameter { name, value });
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(DeviceError::InvalidParameter {
                name: "lambda",
                value: self.lambda,
            });
        }
        Ok(())
    }

    /// Applies one `key = value` override. Keys match the field names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), DeviceError> {
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if key == "diameter_formula" {
            self.diameter_formula = match value.to_ascii_lowercase().as_str() {
                "paper" => DiameterFormula::Paper,
                "standard" => DiameterFormula::Standard,
                other => {
                    return Err(DeviceError::Domain(format!(
                        "unknown diameter formula `{other}`"
                    )))
                }
            };
            return Ok(());
        }
        let parsed: f64 = value.parse().map_err(|_| {
            DeviceError::Domain(format!("`{key}`: cannot parse `{value}` as a number"))
        })?;
        let slot = match key.as_str() {
            "lattice_const_a" => &mut self.lattice_const_a,
            "vth_numerator" => &mut self.vth_numerator,
            "k_per_tube" => &mut self.k_per_tube,
            "lambda" => &mut self.lambda,
            "i_off_300k" => &mut self.i_off_300k,
            "subthreshold_swing_300k" => &mut self.subthreshold_swing_300k,
            "mobility_temp_exponent" => &mut self.mobility_temp_exponent,
            "cap_per_tube" => &mut self.cap_per_tube,
            _ => {
                return Err(DeviceError::Domain(format!(
                    "unknown model parameter `{key}`"
                )))
            }
        };
        *slot = parsed;
        Ok(())
    }
}

/// Tube diameter in nm.
pub fn diameter(c: Chirality, cfg: &ModelConfig) -> f64 {
    let (n, m) = (c.n as f64, c.m as f64);
    let radicand = match cfg.diameter_formula {
        DiameterFormula::Paper => n * n + m * m,
        DiameterFormula::Standard => n * n + n * m + m * m,
    };
    cfg.lattice_const_a * radicand.sqrt() / PI
}

/// Threshold magnitude in volts for a tube of diameter `d_nm`.
pub fn threshold_voltage(d_nm: f64, cfg: &ModelConfig) -> Result<f64, DeviceError> {
    if !(d_nm.is_finite() && d_nm > 0.0) {
        return Err(DeviceError::Domain(format!(
            "diameter must be positive, got {d_nm}"
        )));
    }
    Ok(cfg.vth_numerator / d_nm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    N,
    P,
}

/// Electrical parameters of one CNTFET instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CntfetParams {
    pub polarity: Polarity,
    pub chirality: Chirality,
    pub tubes: u32,
    pub diameter_nm: f64,
    /// Signed threshold: negative for P devices.
    pub vth: f64,
    pub k_eff: f64,
    pub gate_cap: f64,
    model: ModelConfig,
}

impl CntfetParams {
    pub fn new(
        polarity: Polarity,
        chirality: Chirality,
        tubes: u32,
        cfg: &ModelConfig,
    ) -> Result<Self, DeviceError> {
        cfg.validate()?;
        if !chirality.is_semiconducting() {
            return Err(DeviceError::Metallic {
                n: chirality.n,
                m: chirality.m,
            });
        }
        if tubes == 0 {
            return Err(DeviceError::InvalidParameter {
                name: "tubes",
                value: 0.0,
            });
        }
        let diameter_nm = diameter(chirality, cfg);
        let vth_mag = threshold_voltage(diameter_nm, cfg)?;
        let vth = match polarity {
            Polarity::N => vth_mag,
            Polarity::P => -vth_mag,
        };
        Ok(Self {
            polarity,
            chirality,
            tubes,
            diameter_nm,
            vth,
            k_eff: tubes as f64 * cfg.k_per_tube,
            gate_cap: tubes as f64 * cfg.cap_per_tube,
            model: *cfg,
        })
    }

    pub fn model(&self) -> &ModelConfig {
        &self.model
    }
}

/// Drain current and its partial derivatives at one bias point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Current into the drain terminal, A.
    pub id: f64,
    /// dI/dVgs, A/V.
    pub gm: f64,
    /// dI/dVds, A/V.
    pub gds: f64,
}

/// Current flowing into the drain and out of the source.
pub fn drain_current(
    p: &CntfetParams,
    v_gs: f64,
    v_ds: f64,
    temp_k: f64,
) -> Result<f64, DeviceError> {
    evaluate(p, v_gs, v_ds, temp_k).map(|op| op.id)
}

/// `(dI/dVgs, dI/dVds)`.
pub fn conductances(
    p: &CntfetParams,
    v_gs: f64,
    v_ds: f64,
    temp_k: f64,
) -> Result<(f64, f64), DeviceError> {
    evaluate(p, v_gs, v_ds, temp_k).map(|op| (op.gm, op.gds))
}

/// Current and analytic derivatives in one pass.
pub fn evaluate(
    p: &CntfetParams,
    v_gs: f64,
    v_ds: f64,
    temp_k: f64,
) -> Result<OperatingPoint, DeviceError> {
    if !(v_gs.is_finite() && v_ds.is_finite()) {
        return Err(DeviceError::Domain(format!(
            "non-finite bias v_gs={v_gs}, v_ds={v_ds}"
        )));
    }
    if !(temp_k.is_finite() && temp_k > 0.0) {
        return Err(DeviceError::Domain(format!(
            "temperature must be positive, got {temp_k} K"
        )));
    }
    Ok(match p.polarity {
        Polarity::N => n_symmetric(p, v_gs, v_ds, temp_k),
        Polarity::P => {
            let op = n_symmetric(p, -v_gs, -v_ds, temp_k);
            OperatingPoint {
                id: -op.id,
                gm: op.gm,
                gds: op.gds,
            }
        }
    })
}

/// N-law for either sign of v_ds; the channel is source/drain symmetric.
fn n_symmetric(p: &CntfetParams, v_gs: f64, v_ds: f64, temp_k: f64) -> OperatingPoint {
    if v_ds >= 0.0 {
        n_forward(p, v_gs, v_ds, temp_k)
    } else {
        // Terminals swap roles: the drain acts as source.
        let op = n_forward(p, v_gs - v_ds, -v_ds, temp_k);
        OperatingPoint {
            id: -op.id,
            gm: -op.gm,
            gds: op.gm + op.gds,
        }
    }
}

fn n_forward(p: &CntfetParams, v_gs: f64, v_ds: f64, temp_k: f64) -> OperatingPoint {
    let cfg = &p.model;
    let vth = p.vth.abs();
    let v_ov = v_gs - vth;
    let k_t = p.k_eff * (300.0 / temp_k).powf(cfg.mobility_temp_exponent);
    let clm = 1.0 + cfg.lambda * v_ds;

    // Source- and drain-referenced halves of the square law: exactly the
    // triode and saturation formulas outside the blend windows.
    let (f_s, df_s) = overdrive_sq(v_ov);
    let (f_d, df_d) = overdrive_sq(v_ov - v_ds);
    let core = 0.5 * k_t * (f_s - f_d);
    let i_on = core * clm;
    let gm_on = 0.5 * k_t * (df_s - df_d) * clm;
    let gds_on = 0.5 * k_t * df_d * clm + core * cfg.lambda;

    let swing = cfg.subthreshold_swing_300k * temp_k / 300.0;
    let phi_t = K_OVER_Q * temp_k;
    let (shape, dshape) = leakage_shape(v_ov, swing);
    let decay = (-v_ds / phi_t).exp();
    let drain_factor = 1.0 - decay;
    let i0 = p.tubes as f64 * cfg.i_off_300k;

    OperatingPoint {
        id: i_on + i0 * shape * drain_factor,
        gm: gm_on + i0 * dshape * drain_factor,
        gds: gds_on + i0 * shape * decay / phi_t,
    }
}

/// `max(x, 0)^2`, with `max` bridged quadratically over the blend window.
/// Returns value and slope.
fn overdrive_sq(x: f64) -> (f64, f64) {
    let w = SUBTHRESHOLD_BLEND;
    if x <= -w {
        (0.0, 0.0)
    } else if x >= w {
        (x * x, 2.0 * x)
    } else {
        let u = x + w;
        let v = u * u / (4.0 * w);
        (v * v, 2.0 * v * u / (2.0 * w))
    }
}

/// `10^(v_ov / swing)` below the blend window, a constant above it, and a
/// monotone cubic Hermite bridge in between. Returns value and slope.
fn leakage_shape(v_ov: f64, swing: f64) -> (f64, f64) {
    let w = SUBTHRESHOLD_BLEND;
    if v_ov <= -w {
        let v = 10f64.powf(v_ov / swing);
        return (v, v * LN_10 / swing);
    }
    let p0 = 10f64.powf(-w / swing);
    let m0 = p0 * LN_10 / swing;
    let p1 = p0 + m0 * w;
    if v_ov >= w {
        return (p1, 0.0);
    }
    let len = 2.0 * w;
    let t = (v_ov + w) / len;
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let value = h00 * p0 + h10 * len * m0 + h01 * p1;
    let slope = (d00 * p0 + d10 * len * m0 + d01 * p1) / len;
    (value, slope)
}
