//! Time stepping of internal Cayley systems, excitation signals, frequency
//! responses and resonance extraction.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{eigenvalues, DiscreteSystem, StateSpaceSystem, TransferEvaluator};

/// Relative tolerance of the per-step energy balance.
pub const ENERGY_TOL: f64 = 1e-10;

/// Energy balance monitored by [`step_response_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyMode {
    /// `‖x_{j+1}‖² − ‖x_j‖² ≤ 2⟨u_j, y_j⟩`.
    Impedance,
    /// `‖x_{j+1}‖² − ‖x_j‖² ≤ ‖u_j‖² − ‖y_j‖²`.
    Scattering,
}

/// Outputs of a simulation run with the optional per-step energy record.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub outputs: Vec<DVector<f64>>,
    pub final_state: DVector<f64>,
    /// Per step: storage increase minus supplied energy (`≤ 0` when passive).
    pub energy_excess: Option<Vec<f64>>,
    /// Per step: magnitude of the terms entering the balance.
    pub energy_scale: Option<Vec<f64>>,
}

impl Simulation {
    /// Largest excess relative to `1 + scale` over all steps.
    pub fn worst_relative_excess(&self) -> Option<f64> {
        let (e, s) = (self.energy_excess.as_ref()?, self.energy_scale.as_ref()?);
        Some(e.iter().zip(s).fold(f64::NEG_INFINITY, |acc, (e, s)| acc.max(e / (1.0 + s))))
    }

    /// True when every step satisfies the balance within [`ENERGY_TOL`].
    pub fn energy_balance_holds(&self) -> Option<bool> {
        self.worst_relative_excess().map(|w| w <= ENERGY_TOL)
    }
}

fn check_inputs(inputs: &[DVector<f64>], m: usize, x0: &DVector<f64>, n: usize) -> Result<()> {
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!("x0 has length {} but n = {n}", x0.len())));
    }
    if let Some((j, u)) = inputs.iter().enumerate().find(|(_, u)| u.len() != m) {
        return Err(Error::DimensionMismatch(format!("input {j} has length {} but m = {m}", u.len())));
    }
    Ok(())
}

fn balance(mode: EnergyMode, x: &DVector<f64>, xn: &DVector<f64>, u: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
    let (e0, e1) = (x.norm_squared(), xn.norm_squared());
    match mode {
        EnergyMode::Impedance => {
            let p = 2.0 * u.dot(y);
            (e1 - e0 - p, e0 + e1 + 2.0 * u.norm() * y.norm())
        }
        EnergyMode::Scattering => {
            let (uu, yy) = (u.norm_squared(), y.norm_squared());
            (e1 - e0 - (uu - yy), e0 + e1 + uu + yy)
        }
    }
}

/// `x_{j+1} = A_d x_j + B_d u_j`, `y_j = C_d x_j + D_d u_j`.
pub fn step_response(phi: &DiscreteSystem, inputs: &[DVector<f64>], x0: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    Ok(step_response_with(phi, inputs, x0, None)?.outputs)
}

/// [`step_response`] recording the energy balance of `mode` at each step.
pub fn step_response_with(
    phi: &DiscreteSystem,
    inputs: &[DVector<f64>],
    x0: &DVector<f64>,
    mode: Option<EnergyMode>,
) -> Result<Simulation> {
    check_inputs(inputs, phi.m(), x0, phi.n())?;
    run(inputs, x0, mode, |x, u| (&phi.a * x + &phi.b * u, &phi.c * x + &phi.d * u))
}

fn run(
    inputs: &[DVector<f64>],
    x0: &DVector<f64>,
    mode: Option<EnergyMode>,
    mut step: impl FnMut(&DVector<f64>, &DVector<f64>) -> (DVector<f64>, DVector<f64>),
) -> Result<Simulation> {
    let mut x = x0.clone();
    let mut outputs = Vec::with_capacity(inputs.len());
    let mut excess = mode.map(|_| Vec::with_capacity(inputs.len()));
    let mut scale = mode.map(|_| Vec::with_capacity(inputs.len()));
    for u in inputs {
        let (xn, y) = step(&x, u);
        if let (Some(mode), Some(e), Some(s)) = (mode, excess.as_mut(), scale.as_mut()) {
            let (ex, sc) = balance(mode, &x, &xn, u, &y);
            e.push(ex);
            s.push(sc);
        }
        outputs.push(y);
        x = xn;
    }
    Ok(Simulation { outputs, final_state: x, energy_excess: excess, energy_scale: scale })
}

/// Crank–Nicolson stepper that solves with `σI − A` at every step instead of
/// forming the discrete quadruple.
pub struct ImplicitStepper<'a> {
    sys: &'a StateSpaceSystem,
    sigma: f64,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> ImplicitStepper<'a> {
    pub fn new(sys: &'a StateSpaceSystem, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        let n = sys.n();
        let lu = (DMatrix::identity(n, n) * sigma - &sys.a).lu();
        if n > 0 && !lu.is_invertible() {
            return Err(Error::NearSpectrum { re: sigma, im: 0.0 });
        }
        Ok(ImplicitStepper { sys, sigma, lu })
    }

    /// Same recursion as the internal Cayley quadruple:
    /// `w = (σI − A)⁻¹(√(2σ) x + B u)`, `x⁺ = √(2σ) w − x`, `y = C w + D u`.
    pub fn run(&self, inputs: &[DVector<f64>], x0: &DVector<f64>, mode: Option<EnergyMode>) -> Result<Simulation> {
        check_inputs(inputs, self.sys.m(), x0, self.sys.n())?;
        let k = (2.0 * self.sigma).sqrt();
        run(inputs, x0, mode, |x, u| {
            let rhs = x * k + &self.sys.b * u;
            let w = if rhs.is_empty() { rhs } else { self.lu.solve(&rhs).unwrap_or_else(|| DVector::zeros(x.len())) };
            (&w * k - x, &self.sys.c * &w + &self.sys.d * u)
        })
    }
}

/// Excitation waveform families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcitationKind {
    LfPulseTrain,
    LogSweep,
    Impulse,
}

/// Liljencrantz–Fant shape: open quotient `Te/T0`, asymmetry `Tp/Te` and
/// return phase `Ta/(T0 − Te)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LfShape {
    pub open_quotient: f64,
    pub asymmetry: f64,
    pub return_phase: f64,
}

impl Default for LfShape {
    fn default() -> Self {
        LfShape { open_quotient: 0.6, asymmetry: 0.66, return_phase: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExcitationSpec {
    pub kind: ExcitationKind,
    /// Pulse rate or sweep start in Hz.
    pub f0: f64,
    /// Sweep end in Hz.
    pub f1: f64,
    /// Length in s.
    pub duration: f64,
    /// Samples per s.
    pub sample_rate: f64,
    pub lf_shape: LfShape,
    /// Peak flow in m³/s for pulses, peak value otherwise.
    pub amplitude: f64,
}

/// Half a second of 120 Hz LF pulses at 44.1 kHz.
impl Default for ExcitationSpec {
    fn default() -> Self {
        ExcitationSpec::lf_pulse_train(120.0, 0.5, 44_100.0)
    }
}

impl ExcitationSpec {
    pub fn lf_pulse_train(f0: f64, duration: f64, sample_rate: f64) -> Self {
        ExcitationSpec {
            kind: ExcitationKind::LfPulseTrain,
            f0,
            f1: f0,
            duration,
            sample_rate,
            lf_shape: LfShape::default(),
            amplitude: 3e-4,
        }
    }

    pub fn log_sweep(f0: f64, f1: f64, duration: f64, sample_rate: f64) -> Self {
        ExcitationSpec {
            kind: ExcitationKind::LogSweep,
            f0,
            f1,
            duration,
            sample_rate,
            lf_shape: LfShape::default(),
            amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !pos(self.sample_rate) || !pos(self.duration) || !pos(self.f0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidArgument("sample rate, duration and f0 must be positive".into()));
        }
        if self.kind == ExcitationKind::LogSweep && !(pos(self.f1) && self.f1 != self.f0) {
            return Err(Error::InvalidArgument("sweep end f1 must be positive and differ from f0".into()));
        }
        let s = self.lf_shape;
        for (name, v) in
            [("open quotient", s.open_quotient), ("asymmetry", s.asymmetry), ("return phase", s.return_phase)]
        {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!("LF {name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(())
    }

    pub fn samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }
}

/// Flow of one LF period on the unit interval, normalised to unit peak.
struct LfPulse {
    te: f64,
    tb: f64,
    ta: f64,
    alpha: f64,
    omega: f64,
    eps: f64,
    ee: f64,
    peak: f64,
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl LfPulse {
    fn new(shape: LfShape) -> Self {
        let te = shape.open_quotient;
        let tp = shape.asymmetry * te;
        let tb = 1.0 - te;
        let ta = shape.return_phase * tb;
        let omega = PI / tp;
        // ε·Ta = 1 − e^{−ε·Tb} has its positive root above 1/Ta·(1 − e^{−Tb/Ta}).
        let eps = bisect(1e-9 / ta, 1.0 / ta, |e| e * ta - 1.0 + (-e * tb).exp());
        let mut pulse = LfPulse { te, tb, ta, alpha: 0.0, omega, eps, ee: 0.0, peak: 1.0 };
        let net = |a: f64| {
            let mut p = LfPulse { alpha: a, ..pulse };
            p.ee = -(a * te).exp() * (omega * te).sin();
            p.open_flow(te) + p.return_flow(1.0)
        };
        let (mut lo, mut hi) = (-1.0, 1.0);
        while (net(lo) > 0.0) == (net(hi) > 0.0) && hi < 1e6 {
            lo *= 2.0;
            hi *= 2.0;
        }
        pulse.alpha = bisect(lo, hi, net);
        pulse.ee = -(pulse.alpha * te).exp() * (omega * te).sin();
        pulse.peak = pulse.open_flow(tp);
        pulse
    }

    fn open_flow(&self, t: f64) -> f64 {
        let (a, w) = (self.alpha, self.omega);
        ((a * t).exp() * (a * (w * t).sin() - w * (w * t).cos()) + w) / (a * a + w * w)
    }

    /// Flow removed during the return phase up to time `t > te`.
    fn return_flow(&self, t: f64) -> f64 {
        let d = t - self.te;
        let tail = (-self.eps * self.tb).exp();
        -(self.ee / (self.eps * self.ta)) * ((1.0 - (-self.eps * d).exp()) / self.eps - d * tail)
    }

    fn flow(&self, phase: f64) -> f64 {
        let u =
            if phase <= self.te { self.open_flow(phase) } else { self.open_flow(self.te) + self.return_flow(phase) };
        (u / self.peak).max(0.0)
    }
}

/// Periodic LF glottal flow pulses in m³/s.
pub fn lf_pulse_train(spec: &ExcitationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let pulse = LfPulse::new(spec.lf_shape);
    let step = spec.f0 / spec.sample_rate;
    Ok((0..spec.samples()).map(|k| spec.amplitude * pulse.flow((k as f64 * step).fract())).collect())
}

/// Instantaneous phase of the constant-amplitude exponential sweep.
fn sweep_phase(spec: &ExcitationSpec, t: f64) -> f64 {
    let l = spec.duration / (spec.f1 / spec.f0).ln();
    2.0 * PI * spec.f0 * l * ((t / l).exp() - 1.0)
}

/// `A sin(2π f0 L (e^{t/L} − 1))` with `L = T / ln(f1/f0)`.
pub fn log_sweep(spec: &ExcitationSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok((0..spec.samples()).map(|k| spec.amplitude * sweep_phase(spec, k as f64 / spec.sample_rate).sin()).collect())
}

/// Waveform selected by `spec.kind`.
pub fn excitation(spec: &ExcitationSpec) -> Result<Vec<f64>> {
    match spec.kind {
        ExcitationKind::LfPulseTrain => lf_pulse_train(spec),
        ExcitationKind::LogSweep => log_sweep(spec),
        ExcitationKind::Impulse => {
            spec.validate()?;
            let mut v = vec![0.0; spec.samples().max(1)];
            v[0] = spec.amplitude;
            Ok(v)
        }
    }
}

/// Transfer estimate from a simulated log sweep: the input and output are
/// demodulated with the sweep phase under a Hann window centred where the
/// instantaneous frequency equals each probe.
pub fn sweep_response(
    phi: &DiscreteSystem,
    spec: &ExcitationSpec,
    input: usize,
    output: usize,
    probes: &[f64],
) -> Result<Vec<Complex64>> {
    if spec.kind != ExcitationKind::LogSweep {
        return Err(Error::InvalidArgument("sweep_response needs a log sweep".into()));
    }
    if input >= phi.m() || output >= phi.m() {
        return Err(Error::DimensionMismatch(format!("port {input}/{output} outside m = {}", phi.m())));
    }
    let x = log_sweep(spec)?;
    let inputs: Vec<DVector<f64>> = x
        .iter()
        .map(|&v| {
            let mut u = DVector::zeros(phi.m());
            u[input] = v;
            u
        })
        .collect();
    let y = step_response(phi, &inputs, &DVector::zeros(phi.n()))?;
    let l = spec.duration / (spec.f1 / spec.f0).ln();
    let fs = spec.sample_rate;
    probes
        .iter()
        .map(|&f| {
            let tc = l * (f / spec.f0).ln();
            let half = (l * 0.02_f64.ln_1p()).max(8.0 / f);
            if !(tc - half >= 0.0 && tc + half <= spec.duration) {
                return Err(Error::InvalidArgument(format!("probe {f} Hz too close to the sweep ends")));
            }
            let (k0, k1) = (((tc - half) * fs).ceil() as usize, ((tc + half) * fs).floor() as usize);
            let (mut num, mut den) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for k in k0..=k1.min(x.len() - 1) {
                let t = k as f64 / fs;
                let w = 0.5 + 0.5 * (PI * (t - tc) / half).cos();
                let e = Complex64::from_polar(w, -sweep_phase(spec, t));
                num += e * y[k][output];
                den += e * x[k];
            }
            Ok(num / den)
        })
        .collect()
}

/// Resonance with frequency `Im λ/2π` and decay rate `−Re λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub frequency: f64,
    pub decay_rate: f64,
}

/// Resonances sorted by frequency, one per conjugate pair.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResonanceList {
    pub entries: Vec<Resonance>,
}

impl ResonanceList {
    pub fn frequencies(&self) -> Vec<f64> {
        self.entries.iter().map(|r| r.frequency).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with frequency in `[lo, hi]`.
    pub fn within(&self, lo: f64, hi: f64) -> Vec<Resonance> {
        self.entries.iter().copied().filter(|r| r.frequency >= lo && r.frequency <= hi).collect()
    }
}

/// Resonances from the eigenvalues of `A` with `Im λ > 0`.
pub fn resonances(sys: &StateSpaceSystem) -> ResonanceList {
    resonances_of(&sys.a)
}

pub fn resonances_of(a: &DMatrix<f64>) -> ResonanceList {
    let eig = eigenvalues(a);
    let scale = eig.iter().fold(0.0_f64, |acc, l| acc.max(l.norm()));
    let mut entries: Vec<Resonance> = eig
        .iter()
        .filter(|l| l.im > 1e-12 * scale)
        .map(|l| Resonance { frequency: l.im / (2.0 * PI), decay_rate: -l.re })
        .collect();
    entries.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    ResonanceList { entries }
}

/// Transfer matrix at `s = 2πif`, or `None` when `s` is too close to the spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponsePoint {
    pub frequency: f64,
    pub value: Option<DMatrix<Complex64>>,
}

impl ResponsePoint {
    pub fn near_spectrum(&self) -> bool {
        self.value.is_none()
    }
}

/// Transfer matrix on a grid of frequencies in Hz, evaluated in parallel.
pub fn frequency_response(sys: &StateSpaceSystem, frequencies: &[f64]) -> Result<Vec<ResponsePoint>> {
    let ev = TransferEvaluator::new(sys);
    frequencies
        .par_iter()
        .map(|&f| {
            let s = Complex64::new(0.0, 2.0 * PI * f);
            match ev.eval(s) {
                Ok(v) => Ok(ResponsePoint { frequency: f, value: Some(v) }),
                Err(Error::NearSpectrum { .. }) => Ok(ResponsePoint { frequency: f, value: None }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// `12 log₂(f_model / f_target)`.
pub fn semitone_discrepancy(f_model: f64, f_target: f64) -> Result<f64> {
    if !(f_model > 0.0 && f_target > 0.0) {
        return Err(Error::NonPositive);
    }
    Ok(12.0 * (f_model / f_target).log2())
}

/// Writes `t_s,y1,…` rows.
pub fn write_time_series_csv(outputs: &[DVector<f64>], sample_rate: f64, mut w: impl Write) -> Result<()> {
    let m = outputs.first().map_or(0, |y| y.len());
    let header: Vec<String> = std::iter::once("t_s".to_string()).chain((1..=m).map(|i| format!("y{i}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    for (k, y) in outputs.iter().enumerate() {
        let row: Vec<String> = std::iter::once(format!("{:.16e}", k as f64 / sample_rate))
            .chain(y.iter().map(|v| format!("{v:.16e}")))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes `f_hz,re_11,im_11,…` rows in row-major entry order; points near
/// the spectrum are written as `NaN`.
pub fn write_response_csv(points: &[ResponsePoint], m: usize, mut w: impl Write) -> Result<()> {
    let mut header = vec!["f_hz".to_string()];
    for i in 1..=m {
        for j in 1..=m {
            header.push(format!("re_{i}{j}"));
            header.push(format!("im_{i}{j}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        let mut row = vec![format!("{:.16e}", p.frequency)];
        for i in 0..m {
            for j in 0..m {
                let v = p.value.as_ref().map_or(Complex64::new(f64::NAN, f64::NAN), |g| g[(i, j)]);
                row.push(format!("{:.16e}", v.re));
                row.push(format!("{:.16e}", v.im));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::internal_cayley;

    fn scalar(a: f64, b: f64, c: f64, d: f64) -> DiscreteSystem {
        let e = |x| DMatrix::from_element(1, 1, x);
        DiscreteSystem::new(e(a), e(b), e(c), e(d), 1.0, 1, 0).unwrap()
    }

    fn impulse(n: usize) -> Vec<DVector<f64>> {
        (0..n).map(|j| DVector::from_element(1, if j == 0 { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn zero_input_and_state_give_zero_output() {
        let phi = scalar(0.5, 1.0, 1.0, 0.0);
        let u = vec![DVector::zeros(1); 5];
        assert!(step_response(&phi, &u, &DVector::zeros(1)).unwrap().iter().all(|y| y[0] == 0.0));
    }

    #[test]
    fn scalar_impulse_response_is_geometric() {
        let phi = scalar(0.5, 1.0, 1.0, 0.0);
        let y = step_response(&phi, &impulse(10), &DVector::zeros(1)).unwrap();
        assert_eq!(y[0][0], 0.0);
        for (j, yj) in y.iter().enumerate().skip(1) {
            assert_eq!(yj[0], 0.5_f64.powi(j as i32 - 1));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let phi = scalar(0.5, 1.0, 1.0, 0.0);
        let u = vec![DVector::zeros(2)];
        assert!(matches!(step_response(&phi, &u, &DVector::zeros(1)), Err(Error::DimensionMismatch(_))));
        assert!(matches!(step_response(&phi, &[], &DVector::zeros(3)), Err(Error::DimensionMismatch(_))));
    }

    fn oscillator() -> StateSpaceSystem {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, -3.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        StateSpaceSystem::new(a, b.clone(), b.transpose(), DMatrix::zeros(1, 1), 1, 0).unwrap()
    }

    #[test]
    fn conservative_stepping_balances_energy() {
        let phi = internal_cayley(&oscillator(), 10.0).unwrap();
        let u: Vec<_> = (0..1000).map(|j| DVector::from_element(1, (0.1 * j as f64).sin())).collect();
        let sim = step_response_with(&phi, &u, &DVector::from_element(2, 0.3), Some(EnergyMode::Impedance)).unwrap();
        let e = sim.energy_excess.as_ref().unwrap();
        let s = sim.energy_scale.as_ref().unwrap();
        assert!(e.iter().zip(s).all(|(e, s)| e.abs() <= 1e-12 * (1.0 + s)));
        assert_eq!(sim.energy_balance_holds(), Some(true));
    }

    #[test]
    fn implicit_stepper_matches_precomputed_quadruple() {
        let sys = oscillator();
        let phi = internal_cayley(&sys, 10.0).unwrap();
        let u: Vec<_> = (0..50).map(|j| DVector::from_element(1, (0.3 * j as f64).cos())).collect();
        let x0 = DVector::from_element(2, 0.1);
        let a = step_response(&phi, &u, &x0).unwrap();
        let b = ImplicitStepper::new(&sys, 10.0).unwrap().run(&u, &x0, None).unwrap().outputs;
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn lf_period_accumulates_fractionally() {
        let spec = ExcitationSpec::lf_pulse_train(120.0, 0.1, 44_100.0);
        let x = lf_pulse_train(&spec).unwrap();
        assert_eq!(x.len(), 4410);
        assert!(x.iter().all(|&v| v >= 0.0));
        let period = &x[..368];
        assert!(period.iter().sum::<f64>() > 0.0);
        for k in 0..x.len() - 735 {
            assert!((x[k + 735] - x[k]).abs() <= 1e-12 * spec.amplitude);
        }
        let shift = (0..x.len() - 367).map(|k| (x[k + 367] - x[k]).abs()).fold(0.0, f64::max);
        assert!(shift > 1e-3 * spec.amplitude);
    }

    #[test]
    fn lf_pulse_peaks_at_the_amplitude_and_closes() {
        let p = LfPulse::new(LfShape::default());
        assert!((p.flow(0.66 * 0.6) - 1.0).abs() < 1e-12);
        assert!(p.flow(0.0).abs() < 1e-15);
        assert!(p.flow(1.0) < 1e-12);
        assert!(p.alpha.is_finite() && p.eps > 0.0);
    }

    #[test]
    fn invalid_lf_shape_is_rejected() {
        let mut spec = ExcitationSpec::lf_pulse_train(120.0, 0.1, 44_100.0);
        spec.lf_shape.open_quotient = 1.0;
        assert!(lf_pulse_train(&spec).is_err());
    }

    #[test]
    fn rotation_generator_has_one_resonance() {
        let w = 5.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let r = resonances_of(&a);
        assert_eq!(r.len(), 1);
        assert!((r.entries[0].frequency - w / (2.0 * PI)).abs() < 1e-14);
        assert!(r.entries[0].decay_rate.abs() < 1e-14);
    }

    #[test]
    fn feedthrough_response_is_constant() {
        let sys = StateSpaceSystem::feedthrough(DMatrix::from_element(1, 1, 2.0), 1).unwrap();
        let pts = frequency_response(&sys, &[1.0, 10.0, 100.0]).unwrap();
        assert!(pts.iter().all(|p| p.value.as_ref().unwrap()[(0, 0)] == Complex64::new(2.0, 0.0)));
    }

    #[test]
    fn response_on_the_spectrum_is_flagged() {
        let sys = oscillator();
        let pts = frequency_response(&sys, &[3.0 / (2.0 * PI), 1.0]).unwrap();
        assert!(pts[0].near_spectrum());
        assert!(!pts[1].near_spectrum());
    }

    #[test]
    fn semitones() {
        assert_eq!(semitone_discrepancy(100.0, 100.0).unwrap(), 0.0);
        assert!((semitone_discrepancy(200.0, 100.0).unwrap() - 12.0).abs() < 1e-14);
        let d = semitone_discrepancy(338.0, 340.0).unwrap();
        assert_eq!(format!("{d:.1}"), "-0.1");
        assert_eq!(semitone_discrepancy(0.0, 1.0), Err(Error::NonPositive));
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_time_series_csv(&[DVector::from_element(2, 1.0)], 10.0, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t_s,y1,y2\n"));
        let mut buf = Vec::new();
        let pts = vec![ResponsePoint { frequency: 1.0, value: None }];
        write_response_csv(&pts, 1, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("f_hz,re_11,im_11\n"));
    }
}
