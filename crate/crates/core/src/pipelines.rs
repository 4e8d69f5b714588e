//! End-to-end compositions: the fifth-order Butterworth filter built from two
//! π circuits and the waveguide coupled to a piston radiation load.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feedback::{
    regularize, regularized_external_cayley, star_of_impedance_pair, well_posedness, PairOutput, WellPosednessReport,
};
use crate::loewner::{
    loewner_matrices, passive_coordinates, realify, reduce, sample_piston, scheme_with, KypShift, PistonParams,
    ReducedModel, SchemeConfig,
};
use crate::passivity::{impedance_certificate, PassivityCertificate};
use crate::simulate::{
    excitation, frequency_response, resonances, step_response, ExcitationSpec, ResonanceList, ResponsePoint,
};
use crate::system::{DiscreteSystem, StateSpaceSystem, TransferEvaluator};
use crate::transforms::{internal_cayley, ResistanceMatrix};
use crate::websterfem::{assemble, load_area_csv, AreaFunction, WaveguideModel};

fn positive(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} = {x} must be positive")));
    }
    Ok(())
}

/// Impedance conservative π circuit with shunt capacitors `c1`, `c2` and
/// series inductor `l1`; inputs are port currents, outputs port voltages.
pub fn pi_circuit_system(c1: f64, c2: f64, l1: f64) -> Result<StateSpaceSystem> {
    positive("C1", c1)?;
    positive("C2", c2)?;
    positive("L1", l1)?;
    let (a1, a2) = (1.0 / (l1 * c1).sqrt(), 1.0 / (l1 * c2).sqrt());
    let a = DMatrix::from_row_slice(3, 3, &[0.0, a1, 0.0, -a1, 0.0, a2, 0.0, -a2, 0.0]);
    let b = DMatrix::from_row_slice(3, 2, &[1.0 / c1.sqrt(), 0.0, 0.0, 0.0, 0.0, 1.0 / c2.sqrt()]);
    StateSpaceSystem::new(a, b.clone(), b.transpose(), DMatrix::zeros(2, 2), 1, 1)
}

/// Closed-form scattering realisation of the π circuit at port resistances
/// `r1`, `r2`: `C = Bᵀ`, `D = −I`.
pub fn pi_circuit_scattering(c1: f64, c2: f64, l1: f64, r1: f64, r2: f64) -> Result<StateSpaceSystem> {
    positive("R1", r1)?;
    positive("R2", r2)?;
    let mut sys = pi_circuit_system(c1, c2, l1)?;
    sys.a[(0, 0)] = -1.0 / (r1 * c1);
    sys.a[(2, 2)] = -1.0 / (r2 * c2);
    sys.b[(0, 0)] = (2.0 / (r1 * c1)).sqrt();
    sys.b[(2, 1)] = (2.0 / (r2 * c2)).sqrt();
    sys.c = sys.b.transpose();
    sys.d = -DMatrix::identity(2, 2);
    Ok(sys)
}

/// Component values of the two coupled π circuits; the merged middle
/// capacitor is `C3 = 2·C2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ButterworthConfig {
    pub c1: f64,
    pub c2: f64,
    pub l1: f64,
    /// Port resistance in Ω.
    pub r0: f64,
    /// Shift-and-invert regularisation in Ω.
    pub epsilon: f64,
}

impl Default for ButterworthConfig {
    fn default() -> Self {
        ButterworthConfig { c1: 2.2e-9, c2: 3.4e-9, l1: 14e-6, r0: 50.0, epsilon: 1e-9 }
    }
}

impl ButterworthConfig {
    pub fn c3(&self) -> f64 {
        2.0 * self.c2
    }

    pub fn validate(&self) -> Result<()> {
        positive("C1", self.c1)?;
        positive("C2", self.c2)?;
        positive("L1", self.l1)?;
        positive("R0", self.r0)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must be non-negative", self.epsilon)));
        }
        Ok(())
    }
}

/// Realisations of the coupled π circuits.
#[derive(Debug, Clone)]
pub struct ButterworthModels {
    /// Scattering star product of the two regularised circuits (six states).
    pub regularized: StateSpaceSystem,
    /// Its inverse external Cayley transform.
    pub impedance: StateSpaceSystem,
    /// Five-state scattering realisation without the spurious `1/ε` mode.
    pub minimal: StateSpaceSystem,
    pub well_posedness: WellPosednessReport,
}

/// Five-state scattering realisation of the filter at port resistance `R0`.
pub fn butterworth_minimal(cfg: &ButterworthConfig) -> Result<StateSpaceSystem> {
    cfg.validate()?;
    let a1 = 1.0 / (cfg.l1 * cfg.c1).sqrt();
    let a3 = 1.0 / (cfg.l1 * cfg.c3()).sqrt();
    let g = -1.0 / (cfg.r0 * cfg.c1);
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(5, 5, &[
        g, a1, 0.0, 0.0, 0.0,
        -a1, 0.0, a3, 0.0, 0.0,
        0.0, -a3, 0.0, a3, 0.0,
        0.0, 0.0, -a3, 0.0, a1,
        0.0, 0.0, 0.0, -a1, g,
    ]);
    let mut b = DMatrix::zeros(5, 2);
    b[(0, 0)] = (2.0 / (cfg.r0 * cfg.c1)).sqrt();
    b[(4, 1)] = b[(0, 0)];
    StateSpaceSystem::new(a, b.clone(), b.transpose(), -DMatrix::identity(2, 2), 1, 1)
}

/// Rotates states `i`, `j` by `[[1, 1], [1, −1]]/√2` and removes the rotated
/// coordinate with the larger diagonal entry of `A`, which carries a
/// singular mode coupling the two states.
pub fn extirpate(sys: &StateSpaceSystem, i: usize, j: usize) -> Result<StateSpaceSystem> {
    let n = sys.n();
    if i >= n || j >= n || i == j {
        return Err(Error::InvalidArgument(format!("state indices {i}, {j} invalid for n = {n}")));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = DMatrix::<f64>::identity(n, n);
    t[(i, i)] = h;
    t[(i, j)] = h;
    t[(j, i)] = h;
    t[(j, j)] = -h;
    let rot = sys.similarity(&t)?;
    let drop = if rot.a[(i, i)].abs() >= rot.a[(j, j)].abs() { i } else { j };
    let keep: Vec<usize> = (0..n).filter(|&k| k != drop).collect();
    let a = DMatrix::from_fn(n - 1, n - 1, |r, c| rot.a[(keep[r], keep[c])]);
    let b = DMatrix::from_fn(n - 1, sys.m(), |r, c| rot.b[(keep[r], c)]);
    let c = DMatrix::from_fn(sys.m(), n - 1, |r, cc| rot.c[(r, keep[cc])]);
    StateSpaceSystem::new(a, b, c, rot.d, sys.m1, sys.m2)
}

/// Couples `Σ_p = π(C1, C2, L1)` and `Σ_q = π(C2, C1, L1)` at `R = R0·I`
/// with regularisation `ε`.
pub fn butterworth_compose(cfg: &ButterworthConfig) -> Result<ButterworthModels> {
    cfg.validate()?;
    let p = pi_circuit_system(cfg.c1, cfg.c2, cfg.l1)?;
    let q = pi_circuit_system(cfg.c2, cfg.c1, cfg.l1)?;
    let r = ResistanceMatrix::scalar(1, cfg.r0, 1, cfg.r0)?;
    let sp = regularized_external_cayley(&p, &r, cfg.epsilon)?;
    let sq = regularized_external_cayley(&q, &r, cfg.epsilon)?;
    let report = well_posedness(&sp, &sq)?;
    if !report.well_posed {
        return Err(Error::NotWellPosed(report));
    }
    let eps = cfg.epsilon;
    let regularized = star_of_impedance_pair(&p, &q, &r, &r, eps, eps, PairOutput::Scattering)?;
    let impedance = star_of_impedance_pair(&p, &q, &r, &r, eps, eps, PairOutput::Impedance)?;
    let minimal = butterworth_minimal(cfg)?;
    Ok(ButterworthModels { regularized, impedance, minimal, well_posedness: report })
}

/// Reflection and transmission parameters at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SParams {
    pub frequency: f64,
    pub s11: Complex64,
    pub s21: Complex64,
}

impl SParams {
    pub fn s11_db(&self) -> f64 {
        20.0 * self.s11.norm().log10()
    }

    pub fn s21_db(&self) -> f64 {
        20.0 * self.s21.norm().log10()
    }
}

/// `s11`, `s21` of a two-port scattering system on a grid in Hz.
pub fn sparams(sys: &StateSpaceSystem, grid: &[f64]) -> Result<Vec<SParams>> {
    if sys.m() != 2 {
        return Err(Error::DimensionMismatch(format!("scattering parameters need m = 2, got {}", sys.m())));
    }
    let ev = TransferEvaluator::new(sys);
    grid.par_iter()
        .map(|&f| {
            let g = ev.eval(Complex64::new(0.0, 2.0 * std::f64::consts::PI * f))?;
            Ok(SParams { frequency: f, s11: g[(0, 0)], s21: g[(1, 0)] })
        })
        .collect()
}

/// Scattering parameters of the regularised star product.
pub fn butterworth_sparams(cfg: &ButterworthConfig, grid: &[f64]) -> Result<Vec<SParams>> {
    sparams(&butterworth_compose(cfg)?.regularized, grid)
}

/// Area function source of a waveguide configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    Uniform {
        length: f64,
        area: f64,
    },
    /// Piecewise constant `[length, area]` sections joined by linear ramps.
    Sections {
        parts: Vec<[f64; 2]>,
        ramp: f64,
    },
    Table {
        nodes: Vec<f64>,
        areas: Vec<f64>,
    },
    /// Area CSV, relative paths resolved against the configuration file.
    Csv {
        path: PathBuf,
    },
}

impl Geometry {
    /// Back cavity of 9 cm at 8 cm² followed by 8.5 cm at π cm².
    pub fn two_segment() -> Self {
        Geometry::Sections { parts: vec![[0.09, 8e-4], [0.085, std::f64::consts::PI * 1e-4]], ramp: 1e-4 }
    }

    pub fn area_function(&self, base: Option<&Path>) -> Result<AreaFunction> {
        match self {
            Geometry::Uniform { length, area } => AreaFunction::uniform(*length, *area),
            Geometry::Sections { parts, ramp } => {
                let parts: Vec<(f64, f64)> = parts.iter().map(|p| (p[0], p[1])).collect();
                AreaFunction::sections(&parts, *ramp)
            }
            Geometry::Table { nodes, areas } => AreaFunction::new(nodes.clone(), areas.clone()),
            Geometry::Csv { path } => match base {
                Some(dir) if path.is_relative() => load_area_csv(dir.join(path)),
                _ => load_area_csv(path),
            },
        }
    }
}

/// Waveguide with a piston radiation load at the mouth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WaveguideConfig {
    pub geometry: Geometry,
    /// Number of finite elements.
    pub n: usize,
    pub c: f64,
    pub rho: f64,
    /// Port resistance at the glottis in acoustic Ω.
    pub r1: f64,
    /// Port resistance at the mouth in acoustic Ω.
    pub r2: f64,
    /// Load regularisation as a multiple of `Z0`.
    pub epsilon: f64,
    /// Order of the reduced load model.
    pub k: usize,
    /// Interpolation points per set.
    pub m: usize,
    /// Cayley parameter in rad/s.
    pub sigma: f64,
    pub seed: u64,
    pub scheme: SchemeConfig,
    pub kyp: KypShift,
}

impl Default for WaveguideConfig {
    fn default() -> Self {
        WaveguideConfig {
            geometry: Geometry::two_segment(),
            n: 99,
            c: 343.0,
            rho: 1.225,
            r1: 1.1e6,
            r2: 1.1e6,
            epsilon: 0.194,
            k: 16,
            m: 150,
            sigma: 88_200.0,
            seed: 1,
            scheme: SchemeConfig::default(),
            kyp: KypShift::default(),
        }
    }
}

impl WaveguideConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("c", self.c), ("rho", self.rho), ("R1", self.r1), ("R2", self.r2), ("sigma", self.sigma)] {
            positive(name, x)?;
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must be non-negative", self.epsilon)));
        }
        if self.k == 0 || self.k > self.m {
            return Err(Error::InvalidArgument(format!("order k = {} outside 1..={}", self.k, self.m)));
        }
        Ok(())
    }

    /// Piston whose aperture equals the mouth area `𝒜(L)`.
    pub fn piston(&self, area: &AreaFunction) -> Result<PistonParams> {
        PistonParams::from_area(area.eval(area.length()), self.rho, self.c)
    }
}

/// Reduced, regularised piston model in passive coordinates.
#[derive(Debug, Clone)]
pub struct PistonLoad {
    pub params: PistonParams,
    pub reduced: ReducedModel,
    /// Singular values of the real Löwner matrix, descending.
    pub singular_values: Vec<f64>,
    /// `D = ε·Z0` with a state basis in which the impedance certificate holds.
    pub system: StateSpaceSystem,
}

/// Löwner model of order `cfg.k` for the piston, shifted by `ε·Z0`.
pub fn piston_load(params: &PistonParams, cfg: &WaveguideConfig) -> Result<PistonLoad> {
    let scheme = scheme_with(params, cfg.m, cfg.seed, &cfg.scheme)?;
    let samples = sample_piston(&scheme, params)?;
    let real = realify(&loewner_matrices(&scheme, &samples.values_mu, &samples.values_lambda)?)?;
    let singular_values = real.singular_values();
    let reduced =
        reduce(&real, cfg.k)?.reduced.ok_or_else(|| Error::Numerical("reduction produced no model".into()))?;
    let shifted = regularize(&reduced.system, cfg.epsilon * params.z0())?;
    let system = passive_coordinates(&shifted, cfg.kyp)?;
    Ok(PistonLoad { params: *params, reduced, singular_values, system })
}

/// Composite impedance system from glottal volume velocity to glottal pressure.
#[derive(Debug, Clone)]
pub struct WaveguideComposite {
    pub tube: WaveguideModel,
    pub load: PistonLoad,
    /// State dimension `4n + k`, state order (tube, load).
    pub composite_impedance: StateSpaceSystem,
    pub discrete: DiscreteSystem,
    /// Row mapping the composite state to the mouth pressure.
    pub mouth_pressure: DMatrix<f64>,
}

/// Tube and load coupled through external Cayley transforms at
/// `diag(R1, R2)` and `R2`, a star product and the inverse transform at `R1`.
pub fn waveguide_compose(cfg: &WaveguideConfig, base: Option<&Path>) -> Result<WaveguideComposite> {
    cfg.validate()?;
    let area = cfg.geometry.area_function(base)?;
    let tube = assemble(&area, cfg.n, cfg.c, cfg.rho)?;
    let load = piston_load(&cfg.piston(&area)?, cfg)?;
    let rp = ResistanceMatrix::scalar(1, cfg.r1, 1, cfg.r2)?;
    let rq = ResistanceMatrix::new(DMatrix::from_element(1, 1, cfg.r2), DMatrix::zeros(0, 0))?;
    let composite_impedance =
        star_of_impedance_pair(&tube.system, &load.system, &rp, &rq, 0.0, 0.0, PairOutput::Impedance)?;
    let discrete = internal_cayley(&composite_impedance, cfg.sigma)?;
    let nt = tube.system.n();
    let mut mouth_pressure = DMatrix::zeros(1, composite_impedance.n());
    mouth_pressure.view_mut((0, 0), (1, nt)).copy_from(&tube.system.c2());
    Ok(WaveguideComposite { tube, load, composite_impedance, discrete, mouth_pressure })
}

/// Logarithmic grid of `count` frequencies from `lo` to `hi` Hz.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect(),
    }
}

/// Resonances, input impedance and excited pressure signals of a composite.
#[derive(Debug, Clone)]
pub struct WaveguideReport {
    pub certificate: PassivityCertificate,
    pub resonances: ResonanceList,
    /// Resonances of the tube with both ends closed.
    pub hard_wall: ResonanceList,
    pub response: Vec<ResponsePoint>,
    pub sample_rate: f64,
    pub excitation: Vec<f64>,
    pub glottal_pressure: Vec<f64>,
    pub mouth_pressure: Vec<f64>,
}

/// Evaluates the composite on `grid` and drives it with `spec` through the
/// internal Cayley system.
pub fn waveguide_report(wg: &WaveguideComposite, spec: &ExcitationSpec, grid: &[f64]) -> Result<WaveguideReport> {
    let sys = &wg.composite_impedance;
    let x = excitation(spec)?;
    let n = sys.n();
    let mut aug = sys.clone();
    aug.b = DMatrix::zeros(n, 2);
    aug.b.view_mut((0, 0), (n, 1)).copy_from(&sys.b);
    aug.c = DMatrix::zeros(2, n);
    aug.c.view_mut((0, 0), (1, n)).copy_from(&sys.c);
    aug.c.view_mut((1, 0), (1, n)).copy_from(&wg.mouth_pressure);
    aug.d = DMatrix::zeros(2, 2);
    aug.d[(0, 0)] = sys.d[(0, 0)];
    aug.m1 = 1;
    aug.m2 = 1;
    let phi = internal_cayley(&aug, wg.discrete.sigma)?;
    let inputs: Vec<_> = x.iter().map(|&v| nalgebra::DVector::from_vec(vec![v, 0.0])).collect();
    let y = step_response(&phi, &inputs, &nalgebra::DVector::zeros(n))?;
    Ok(WaveguideReport {
        certificate: impedance_certificate(sys),
        resonances: resonances(sys),
        hard_wall: resonances(&wg.tube.system),
        response: frequency_response(sys, grid)?,
        sample_rate: spec.sample_rate,
        excitation: x,
        glottal_pressure: y.iter().map(|v| v[0]).collect(),
        mouth_pressure: y.iter().map(|v| v[1]).collect(),
    })
}

/// The first `count` resonances above `min_hz` with quality factor
/// `2πf / (2·decay)` at least `min_q`.
pub fn formants(list: &ResonanceList, count: usize, min_hz: f64, min_q: f64) -> Vec<f64> {
    list.entries
        .iter()
        .filter(|r| r.frequency > min_hz && std::f64::consts::PI * r.frequency >= min_q * r.decay_rate)
        .take(count)
        .map(|r| r.frequency)
        .collect()
}
