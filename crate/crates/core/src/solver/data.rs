use super::Discretization;
use crate::geometry::{Geometry, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

pub type FieldFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;

/// A scalar field on the domain.
#[derive(Clone, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    #[default]
    Zero,
    Gaussian {
        center: Vec2,
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude * exp(-(r - radius)^2 / (2 width^2)) * cos(mode * theta)` around `center`.
    Ring {
        #[serde(default)]
        center: Vec2,
        radius: f64,
        width: f64,
        #[serde(default)]
        mode: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Gaussian profile of the coordinate along `direction` (an angle), centred at `offset`.
    PlanePulse {
        offset: f64,
        #[serde(default)]
        direction: f64,
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Time derivative of a plane pulse moving along `direction` at `speed`.
    TravellingPulse {
        offset: f64,
        #[serde(default)]
        direction: f64,
        sigma: f64,
        #[serde(default = "one")]
        amplitude: f64,
        speed: f64,
    },
    /// Sum of random plane waves with wavenumbers up to `max_wavenumber`, tapered to zero near
    /// the outer boundary. The default cap resolves every wave with 8 points per wavelength.
    RandomBandLimited {
        seed: u64,
        #[serde(default = "default_modes")]
        modes: usize,
        #[serde(default)]
        max_wavenumber: Option<f64>,
        #[serde(default)]
        min_wavenumber: f64,
        #[serde(default = "default_taper")]
        taper: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Values on the active nodes, in discretization order.
    Nodal(Vec<f64>),
    #[serde(skip)]
    Custom(FieldFn),
}

fn one() -> f64 {
    1.0
}

fn default_modes() -> usize {
    64
}

fn default_taper() -> f64 {
    0.15
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Zero => write!(f, "Zero"),
            FieldSpec::Gaussian { center, sigma, amplitude } => {
                write!(f, "Gaussian({center:?}, {sigma}, {amplitude})")
            }
            FieldSpec::Ring { radius, width, mode, .. } => write!(f, "Ring({radius}, {width}, {mode})"),
            FieldSpec::PlanePulse { offset, sigma, .. } => write!(f, "PlanePulse({offset}, {sigma})"),
            FieldSpec::TravellingPulse { offset, sigma, speed, .. } => {
                write!(f, "TravellingPulse({offset}, {sigma}, {speed})")
            }
            FieldSpec::RandomBandLimited { seed, modes, .. } => {
                write!(f, "RandomBandLimited(seed {seed}, {modes} modes)")
            }
            FieldSpec::Nodal(v) => write!(f, "Nodal({} values)", v.len()),
            FieldSpec::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl FieldSpec {
    pub fn custom(f: impl Fn(Vec2) -> f64 + Send + Sync + 'static) -> Self {
        FieldSpec::Custom(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, FieldSpec::Zero)
    }

    /// Values at the active nodes.
    pub fn sample(&self, geom: &Geometry, disc: &Discretization) -> Vec<f64> {
        let pts = disc.positions();
        match self {
            FieldSpec::Nodal(v) => {
                let mut out = v.clone();
                out.resize(pts.len(), 0.0);
                out
            }
            FieldSpec::RandomBandLimited {
                seed,
                modes,
                max_wavenumber,
                min_wavenumber,
                taper,
                amplitude,
            } => {
                let kmax = max_wavenumber.unwrap_or(TAU / (8.0 * disc.hx.max(disc.hy)));
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let waves: Vec<(Vec2, f64, f64)> = (0..*modes)
                    .map(|_| {
                        // uniform in the annulus min <= |k| <= max
                        let u: f64 = rng.gen();
                        let r2 = min_wavenumber.powi(2) + u * (kmax.powi(2) - min_wavenumber.powi(2));
                        let k = Vec2::from_angle(rng.gen::<f64>() * TAU) * r2.sqrt();
                        (k, rng.gen::<f64>() * TAU, rng.gen::<f64>() * 2.0 - 1.0)
                    })
                    .collect();
                let width = taper * geom.diameter();
                pts.iter()
                    .map(|&x| {
                        let d = -geom.outer().signed_distance(x);
                        let w = smooth_step(d / width);
                        if w == 0.0 {
                            return 0.0;
                        }
                        let s: f64 = waves.iter().map(|(k, ph, a)| a * (k.dot(x) + ph).cos()).sum();
                        amplitude * w * s / (*modes as f64).sqrt()
                    })
                    .collect()
            }
            _ => pts.iter().map(|&x| self.eval(x)).collect(),
        }
    }

    /// Pointwise value. Nodal and random fields evaluate to zero here.
    pub fn eval(&self, x: Vec2) -> f64 {
        match self {
            FieldSpec::Zero | FieldSpec::Nodal(_) | FieldSpec::RandomBandLimited { .. } => 0.0,
            FieldSpec::Gaussian { center, sigma, amplitude } => {
                amplitude * (-(x - *center).norm2() / (2.0 * sigma * sigma)).exp()
            }
            FieldSpec::Ring { center, radius, width, mode, amplitude } => {
                let d = x - *center;
                let r = d.norm();
                amplitude
                    * (-(r - radius).powi(2) / (2.0 * width * width)).exp()
                    * (*mode as f64 * d.angle()).cos()
            }
            FieldSpec::PlanePulse { offset, direction, sigma, amplitude } => {
                let xi = x.dot(Vec2::from_angle(*direction)) - offset;
                amplitude * (-xi * xi / (2.0 * sigma * sigma)).exp()
            }
            FieldSpec::TravellingPulse { offset, direction, sigma, amplitude, speed } => {
                let xi = x.dot(Vec2::from_angle(*direction)) - offset;
                speed * xi / (sigma * sigma) * amplitude * (-xi * xi / (2.0 * sigma * sigma)).exp()
            }
            FieldSpec::Custom(f) => f(x),
        }
    }
}

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// How the displacement looked before `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PastHistory {
    /// The past displacement equals the initial one, so no memory is stored.
    #[default]
    Equilibrium,
    /// The medium was at rest in its reference state.
    Rest,
}

/// Cauchy data. Fields for the inclusion are optional; when absent the outer fields are used
/// there as well.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialData {
    pub displacement: FieldSpec,
    pub velocity: FieldSpec,
    pub inclusion_displacement: Option<FieldSpec>,
    pub inclusion_velocity: Option<FieldSpec>,
    pub history: PastHistory,
}

impl InitialData {
    pub fn new(displacement: FieldSpec, velocity: FieldSpec) -> Self {
        Self {
            displacement,
            velocity,
            ..Self::default()
        }
    }
}
