//! Positioning-mode RIS design, measurement stacking, MUSIC direction
//! finding and the Fisher information of Eve's angles.
//!
//! During sensing Eve's uplink pilot `s1` and Bob's pilot `s2` reach the BS
//! through the RIS in `P` successive modes `upsilon^p`. Stacking the modes
//! gives the `NP`-vector
//! `mu = G (h_re s1 + h_rb s2)`, where `G` stacks `h diag(upsilon^p)`.

use nalgebra::Matrix2;

use crate::channel::{ChannelSet, PhysicalConstants, ReflectionVector};
use crate::error::{Error, Result};
use crate::geometry::{direction, Point};
use crate::numerics::{hermitian_eig, CMat, CVec, RngStream, C64};

/// Pilot symbols and BS receiver noise used while sensing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pilots {
    /// Eve-path pilot.
    pub s1: C64,
    /// Bob-path pilot.
    pub s2: C64,
    /// Noise power per BS antenna and mode (W).
    pub noise: f64,
}

impl Pilots {
    /// `s1 = s2 = sqrt(P_t / 2)`.
    pub fn balanced(tx_power: f64, noise: f64) -> Self {
        let s = C64::new((0.5 * tx_power).sqrt(), 0.0);
        Self { s1: s, s2: s, noise }
    }
}

/// RIS modes and pilots of one sensing slot.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    pub phases: Vec<ReflectionVector>,
    pub pilots: Pilots,
}

impl MeasurementPlan {
    pub fn new(phases: Vec<ReflectionVector>, pilots: Pilots) -> Result<Self> {
        if phases.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least two RIS modes are needed for two angles, got {}",
                phases.len()
            )));
        }
        let m = phases[0].len();
        for (p, mode) in phases.iter().enumerate() {
            if mode.len() != m {
                return Err(Error::DimensionMismatch(format!(
                    "mode {p} has {} elements, mode 0 has {m}",
                    mode.len()
                )));
            }
            if mode.values().iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
                return Err(Error::InvalidArgument(format!("mode {p} is not unit modulus")));
            }
        }
        if !(pilots.noise >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sensing noise must be non-negative, got {}",
                pilots.noise
            )));
        }
        Ok(Self { phases, pilots })
    }

    pub fn modes(&self) -> usize {
        self.phases.len()
    }

    /// `NP x M` stack of `h diag(upsilon^p)`.
    pub fn stack_matrix(&self, h: &CMat) -> CMat {
        let (n, m) = h.shape();
        let mut g = CMat::zeros(n * self.modes(), m);
        for (p, mode) in self.phases.iter().enumerate() {
            for c in 0..m {
                let u = mode.values()[c];
                for r in 0..n {
                    g[(p * n + r, c)] = h[(r, c)] * u;
                }
            }
        }
        g
    }
}

/// Bob-path leakage `||h diag(h_rb) upsilon||^2` at the BS.
pub fn bob_leakage(channels: &ChannelSet, upsilon: &CVec) -> f64 {
    (&channels.h * upsilon.component_mul(&channels.h_rb)).norm_squared()
}

fn phase_only(z: &CVec) -> ReflectionVector {
    ReflectionVector::from_phases(z.iter().map(|c| if c.norm() > 0.0 { c.arg() } else { 0.0 }))
}

/// Unit-modulus sensing modes that keep Bob's reflected pilot away from the
/// BS.
///
/// With `Q = diag(h_rb)^H h^H h diag(h_rb)` the leakage is `upsilon^H Q
/// upsilon`. The first candidate takes the phases of the eigenvector of the
/// smallest eigenvalue of `Q`; the others are Gaussian randomisations
/// `exp(j arg(U Lambda^{1/2} g))` with `Lambda` the inverted spectrum, so
/// directions of small leakage are favoured. The `modes` candidates with the
/// least leakage among those no worse than the all-ones vector are kept.
pub fn design_positioning_phases(
    channels: &ChannelSet,
    modes: usize,
    pilots: Pilots,
    rng: &mut RngStream,
) -> Result<MeasurementPlan> {
    if modes < 2 {
        return Err(Error::InvalidArgument(format!(
            "at least two RIS modes are needed, got {modes}"
        )));
    }
    let m = channels.m();
    let a = &channels.h * CMat::from_diagonal(&channels.h_rb);
    let q = a.adjoint() * &a;
    let eig = hermitian_eig(&q)?;
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let delta = 1e-6 * top.max(f64::MIN_POSITIVE);
    let weights: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| (1.0 / (l.max(0.0) + delta)).sqrt())
        .collect();

    let ceiling = bob_leakage(channels, &CVec::from_element(m, C64::new(1.0, 0.0)));
    let mut pool: Vec<(f64, ReflectionVector)> = Vec::new();
    let mut consider = |v: ReflectionVector| {
        let leak = bob_leakage(channels, v.values());
        if leak <= ceiling {
            pool.push((leak, v));
        }
    };
    consider(phase_only(&eig.vector(0)));
    for _ in 0..8 * modes {
        let g = rng.complex_gaussian_vec(m, 1.0);
        let scaled = CVec::from_iterator(m, g.iter().zip(&weights).map(|(z, w)| z * *w));
        consider(phase_only(&(&eig.vectors * scaled)));
    }
    consider(ReflectionVector::ones(m));
    pool.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut phases: Vec<ReflectionVector> = pool.iter().take(modes).map(|(_, v)| v.clone()).collect();
    let best = phases[0].values().clone();
    while phases.len() < modes {
        // Too few distinct candidates: reuse the best mode with a fresh
        // global phase, which leaves its leakage unchanged.
        let rot = rng.unit_phase();
        phases.push(phase_only(&best.map(|z| z * rot)));
    }
    MeasurementPlan::new(phases, pilots)
}

/// Noisy and noise-free stacked measurements of one snapshot.
pub fn stack_measurements(
    plan: &MeasurementPlan,
    channels: &ChannelSet,
    rng: &mut RngStream,
) -> (CVec, CVec) {
    let mu = noise_free_stack(plan, channels, plan.pilots.s1, plan.pilots.s2);
    let x = add_noise(&mu, plan.pilots.noise, rng);
    (x, mu)
}

fn noise_free_stack(plan: &MeasurementPlan, channels: &ChannelSet, s1: C64, s2: C64) -> CVec {
    let source = channels.h_re.map(|z| z * s1) + channels.h_rb.map(|z| z * s2);
    plan.stack_matrix(&channels.h) * source
}

fn add_noise(mu: &CVec, noise: f64, rng: &mut RngStream) -> CVec {
    if noise > 0.0 {
        mu + rng.complex_gaussian_vec(mu.len(), noise)
    } else {
        mu.clone()
    }
}

/// `K` snapshots as the columns of an `NP x K` matrix. Each snapshot
/// carries the planned pilot amplitudes with fresh independent phases.
pub fn collect_snapshots(
    plan: &MeasurementPlan,
    channels: &ChannelSet,
    snapshots: usize,
    rng: &mut RngStream,
) -> CMat {
    let rows = channels.n() * plan.modes();
    let mut x = CMat::zeros(rows, snapshots);
    for k in 0..snapshots {
        let s1 = plan.pilots.s1 * rng.unit_phase();
        let s2 = plan.pilots.s2 * rng.unit_phase();
        let mu = noise_free_stack(plan, channels, s1, s2);
        x.set_column(k, &add_noise(&mu, plan.pilots.noise, rng));
    }
    x
}

/// Per-entry signal-to-noise ratio of Eve's reflected pilot at the BS.
pub fn eve_snr(plan: &MeasurementPlan, channels: &ChannelSet) -> f64 {
    let g = plan.stack_matrix(&channels.h);
    let signal = (g * &channels.h_re).norm_squared() * plan.pilots.s1.norm_sqr();
    signal / ((channels.n() * plan.modes()) as f64 * plan.pilots.noise)
}

/// Rectangular search grid in elevation and azimuth (radians), optionally
/// restricted to the half-space in front of the RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicGrid {
    pub theta: (f64, f64),
    pub phi: (f64, f64),
    pub step: f64,
    /// RIS normal; directions behind the surface are skipped because their
    /// steering vectors mirror those in front.
    pub front: Option<Point>,
    /// Polish the best grid point by a local pattern search.
    pub refine: bool,
}

impl MusicGrid {
    /// Square window of half-width `half` centred on `(theta, phi)`.
    pub fn around(theta: f64, phi: f64, half: f64, step: f64) -> Self {
        Self {
            theta: (theta - half, theta + half),
            phi: (phi - half, phi + half),
            step,
            front: None,
            refine: false,
        }
    }

    /// Every direction in front of a RIS with normal `normal`.
    pub fn hemisphere(normal: Point, step: f64) -> Self {
        use std::f64::consts::{FRAC_PI_2, TAU};
        Self {
            theta: (-FRAC_PI_2, FRAC_PI_2),
            phi: (0.0, TAU - step),
            step,
            front: Some(normal),
            refine: false,
        }
    }

    pub fn refined(mut self) -> Self {
        self.refine = true;
        self
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| lo + i as f64 * step).collect()
    }

    fn admits(&self, theta: f64, phi: f64) -> bool {
        self.front.is_none_or(|n| direction(theta, phi).dot(&n) > 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleEstimate {
    pub theta: f64,
    pub phi: f64,
    pub spectrum_peak: f64,
}

struct MusicSpectrum<'a> {
    g: CMat,
    signal: CMat,
    known: Option<CVec>,
    channels: &'a ChannelSet,
    consts: &'a PhysicalConstants,
}

impl MusicSpectrum<'_> {
    fn project(&self, a: CVec) -> CVec {
        match &self.known {
            Some(b) => {
                let c = b.dotc(&a);
                a - b * c
            }
            None => a,
        }
    }

    fn eval(&self, theta: f64, phi: f64) -> f64 {
        let a = self.project(&self.g * self.channels.eve_path_at(theta, phi, self.consts));
        let norm2 = a.norm_squared();
        if norm2 <= 0.0 {
            return 0.0;
        }
        let captured = (self.signal.adjoint() * &a).norm_squared();
        let residual = (1.0 - captured / norm2).max(0.0);
        1.0 / residual.max(1e-300)
    }
}

/// MUSIC estimate of Eve's direction from `NP x K` snapshots.
///
/// Bob's reflected pilot is a known interferer: its stacked response is
/// projected out of both data and steering vectors, leaving Eve as the
/// single unknown source. The spectrum is `1 / ||E_n^H a||^2` for the unit
/// steering vector `a`.
pub fn music_estimate(
    snapshots: &CMat,
    plan: &MeasurementPlan,
    channels: &ChannelSet,
    consts: &PhysicalConstants,
    grid: &MusicGrid,
) -> Result<AngleEstimate> {
    if !(grid.step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step must be positive, got {}", grid.step)));
    }
    let sources = 1;
    let k = snapshots.ncols();
    if k < 2 || k < sources {
        return Err(Error::RankDeficient { snapshots: k, sources: sources.max(2) });
    }
    let g = plan.stack_matrix(&channels.h);
    if snapshots.nrows() != g.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "snapshots have {} rows, the plan stacks {}",
            snapshots.nrows(),
            g.nrows()
        )));
    }
    let known = if plan.pilots.s2.norm() > 0.0 {
        let b = &g * &channels.h_rb;
        let n = b.norm();
        (n > 0.0).then(|| b / C64::new(n, 0.0))
    } else {
        None
    };
    let mut x = snapshots.clone();
    if let Some(b) = &known {
        let coeff = b.adjoint() * &x;
        x -= b * coeff;
    }
    let r = &x * x.adjoint() / C64::new(k as f64, 0.0);
    let eig = hermitian_eig(&r)?;
    let d = eig.dim();
    let signal = eig.vectors.columns(d - sources, sources).into_owned();
    let spec = MusicSpectrum { g, signal, known, channels, consts };

    let mut best = AngleEstimate { theta: f64::NAN, phi: f64::NAN, spectrum_peak: f64::NEG_INFINITY };
    for &theta in &MusicGrid::axis(grid.theta.0, grid.theta.1, grid.step) {
        for &phi in &MusicGrid::axis(grid.phi.0, grid.phi.1, grid.step) {
            if !grid.admits(theta, phi) {
                continue;
            }
            let p = spec.eval(theta, phi);
            if p > best.spectrum_peak {
                best = AngleEstimate { theta, phi, spectrum_peak: p };
            }
        }
    }
    if !best.theta.is_finite() {
        return Err(Error::InvalidArgument("search grid admits no direction".into()));
    }
    if grid.refine {
        best = pattern_search(&spec, best, grid);
    }
    Ok(best)
}

/// Compass search started at a grid peak, shrinking the stencil until it is
/// far below the grid resolution.
fn pattern_search(spec: &MusicSpectrum<'_>, start: AngleEstimate, grid: &MusicGrid) -> AngleEstimate {
    let mut best = start;
    let mut step = 0.5 * grid.step;
    let floor = grid.step * 1e-6;
    while step > floor {
        let mut moved = false;
        for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (t, p) = (best.theta + dt, best.phi + dp);
            let lo_t = grid.theta.0 - grid.step;
            let hi_t = grid.theta.1 + grid.step;
            if t < lo_t || t > hi_t || !grid.admits(t, p) {
                continue;
            }
            let v = spec.eval(t, p);
            if v > best.spectrum_peak {
                best = AngleEstimate { theta: t, phi: p, spectrum_peak: v };
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// Fisher information of `(theta, phi)` and the resulting Cramer-Rao bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrlbReport {
    pub fim: Matrix2<f64>,
    pub det_f: f64,
    pub crlb_theta: f64,
    pub crlb_phi: f64,
    /// False when `F` is singular; both bounds are then infinite.
    pub identifiable: bool,
}

impl CrlbReport {
    fn from_fim(fim: Matrix2<f64>) -> Self {
        let det_f = fim.determinant();
        let scale = fim.trace().abs();
        let identifiable = scale > 0.0 && scale.is_finite() && det_f > 1e-12 * scale * scale;
        let (crlb_theta, crlb_phi) = if identifiable {
            (fim[(1, 1)] / det_f, fim[(0, 0)] / det_f)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        Self { fim, det_f, crlb_theta, crlb_phi, identifiable }
    }
}

/// Derivatives of Eve's stacked response with respect to `theta` and `phi`,
/// as `M`-vectors `b1`, `b2` before the stack `G` is applied.
fn angle_derivatives(kappa: (f64, f64), s1: C64, channels: &ChannelSet, consts: &PhysicalConstants) -> (CVec, CVec) {
    let (theta, phi) = kappa;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let dk_theta = Point::new(-st * cp, -st * sp, ct);
    let dk_phi = Point::new(-ct * sp, ct * cp, 0.0);
    let h_re = channels.eve_path_at(theta, phi, consts);
    let factor = -crate::numerics::J * s1 * consts.wavenumber();
    let make = |dk: &Point| {
        CVec::from_iterator(
            h_re.len(),
            channels.ris_positions.iter().zip(h_re.iter()).map(|(i, h)| factor * i.dot(dk) * h),
        )
    };
    (make(&dk_theta), make(&dk_phi))
}

/// FIM of Eve's angles `kappa` for a sensing plan:
/// `F_ij = 2 / sigma^2 Re(b_i^H G^H G b_j)`.
pub fn fisher_information(
    kappa: (f64, f64),
    plan: &MeasurementPlan,
    channels: &ChannelSet,
    consts: &PhysicalConstants,
) -> Result<CrlbReport> {
    if !(plan.pilots.noise > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Fisher information needs positive sensing noise, got {}",
            plan.pilots.noise
        )));
    }
    let g = plan.stack_matrix(&channels.h);
    let (b1, b2) = angle_derivatives(kappa, plan.pilots.s1, channels, consts);
    let (gb1, gb2) = (&g * b1, &g * b2);
    let c = 2.0 / plan.pilots.noise;
    let off = c * gb1.dotc(&gb2).re;
    let fim = Matrix2::new(c * gb1.norm_squared(), off, off, c * gb2.norm_squared());
    Ok(CrlbReport::from_fim(fim))
}

/// Constraints on estimation quality: both bounds at most `eps` (rad^2).
pub fn crlb_feasible(report: &CrlbReport, eps: f64) -> bool {
    report.identifiable && report.crlb_theta <= eps && report.crlb_phi <= eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bs_ris_matrix, free_space_gain, los_channel, multipath_channels, ris_user_channel};
    use crate::geometry::{angles_of, element_offsets, place_elements, Orientation};
    use crate::numerics::seeded_rng;
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        let wavelength = 0.125;
        PhysicalConstants {
            wavelength,
            channel_gain: free_space_gain(wavelength),
            noise_user: 1e-11,
            noise_ris: 1e-12,
            tx_power: 10.0,
            rho_max: 10.0,
        }
    }

    /// BS at 20 m, Bob below and Eve 5 m away; the RIS faces between them.
    fn small_channels(n_side: usize, m_side: usize, seed: u64) -> ChannelSet {
        let c = consts();
        let mut rng = seeded_rng(seed);
        let bs_centre = Point::new(20.0 * 60f64.to_radians().cos(), 20.0 * 60f64.to_radians().sin(), 0.0);
        let bob = Point::new(10.0 * 120f64.to_radians().cos(), 10.0 * 120f64.to_radians().sin(), -10.0);
        let eve = Point::new(5.0 * 1.6f64.cos(), 5.0 * 1.6f64.sin(), 0.3 * rng.uniform());
        let o = Orientation::new(-0.4, 1.9).unwrap();
        let ris_layout = element_offsets(m_side, m_side, c.wavelength / 2.0).unwrap();
        let ris = place_elements(&ris_layout, &o, &Point::zeros());
        let bs_layout = element_offsets(n_side, n_side, c.wavelength / 2.0).unwrap();
        let bs_o = Orientation::facing(&(-bs_centre));
        let bs = place_elements(&bs_layout, &bs_o, &bs_centre);
        let to_bob = angles_of(&(bob - bs_centre));
        let to_eve = angles_of(&(eve - bs_centre));
        let n = bs_layout.len();
        let amp = c.amplitude(10.0).powi(2);
        ChannelSet {
            h_ab: los_channel(&bs_layout, to_bob, (bob - bs_centre).norm(), &c).unwrap(),
            h_ae: los_channel(&bs_layout, to_eve, (eve - bs_centre).norm(), &c).unwrap(),
            h_rb: ris_user_channel(&ris, &bob.normalize(), bob.norm(), &c).unwrap(),
            h_re: ris_user_channel(&ris, &eve.normalize(), eve.norm(), &c).unwrap(),
            h: bs_ris_matrix(&bs, &ris, &c).unwrap(),
            multipath_bob: multipath_channels(&mut rng, 2, n, amp, 10.0),
            multipath_eve: multipath_channels(&mut rng, 2, n, amp, 10.0),
            ris_positions: ris,
            eve_angles: angles_of(&eve),
            eve_distance: eve.norm(),
        }
    }

    fn plan_for(ch: &ChannelSet, modes: usize, noise: f64, seed: u64) -> MeasurementPlan {
        let pilots = Pilots::balanced(consts().tx_power, noise);
        design_positioning_phases(ch, modes, pilots, &mut seeded_rng(seed)).unwrap()
    }

    #[test]
    fn too_few_modes_rejected() {
        let ch = small_channels(2, 2, 1);
        let pilots = Pilots::balanced(1.0, 1e-9);
        assert!(design_positioning_phases(&ch, 1, pilots, &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn modes_are_unit_modulus_and_leak_less() {
        let ch = small_channels(2, 4, 3);
        let plan = plan_for(&ch, 8, 1e-9, 5);
        let ones = bob_leakage(&ch, &CVec::from_element(ch.m(), C64::new(1.0, 0.0)));
        let mut total = 0.0;
        for mode in &plan.phases {
            assert!(mode.values().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
            let leak = bob_leakage(&ch, mode.values());
            assert!(leak <= ones);
            total += leak;
        }
        assert!(total / 8.0 <= ones);
    }

    #[test]
    fn single_element_mode_passes_through() {
        let ch = small_channels(2, 1, 2);
        let plan = plan_for(&ch, 3, 1e-9, 1);
        let ones = bob_leakage(&ch, &CVec::from_element(1, C64::new(1.0, 0.0)));
        for mode in &plan.phases {
            assert!((bob_leakage(&ch, mode.values()) - ones).abs() <= 1e-12 * ones);
        }
    }

    #[test]
    fn noiseless_stack_is_exact() {
        let ch = small_channels(2, 2, 4);
        let plan = plan_for(&ch, 3, 0.0, 4);
        let (x, mu) = stack_measurements(&plan, &ch, &mut seeded_rng(1));
        assert_eq!(x, mu);
        let mut silent = plan.clone();
        silent.pilots.s1 = C64::new(0.0, 0.0);
        silent.pilots.s2 = C64::new(0.0, 0.0);
        let (_, mu0) = stack_measurements(&silent, &ch, &mut seeded_rng(1));
        assert!(mu0.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn noise_energy_matches_variance() {
        let ch = small_channels(2, 2, 6);
        let noise = 2e-9;
        let plan = plan_for(&ch, 4, noise, 6);
        let mut rng = seeded_rng(9);
        let trials = 10_000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let (x, mu) = stack_measurements(&plan, &ch, &mut rng);
            acc += (x - mu).norm_squared();
        }
        let expected = (ch.n() * plan.modes()) as f64 * noise;
        assert!((acc / trials as f64 / expected - 1.0).abs() < 0.05);
    }

    #[test]
    fn fim_scales_inversely_with_noise() {
        let ch = small_channels(2, 2, 7);
        let plan = plan_for(&ch, 4, 1e-9, 7);
        let mut doubled = plan.clone();
        doubled.pilots.noise *= 2.0;
        let r1 = fisher_information(ch.eve_angles, &plan, &ch, &consts()).unwrap();
        let r2 = fisher_information(ch.eve_angles, &doubled, &ch, &consts()).unwrap();
        assert!(((r1.fim - 2.0 * r2.fim).norm()) < 1e-12 * r1.fim.norm());
        assert!((r2.crlb_theta / r1.crlb_theta - 2.0).abs() < 1e-9);
        assert!((r2.crlb_phi / r1.crlb_phi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn silent_eve_is_unidentifiable() {
        let ch = small_channels(2, 2, 8);
        let mut plan = plan_for(&ch, 4, 1e-9, 8);
        plan.pilots.s1 = C64::new(0.0, 0.0);
        let r = fisher_information(ch.eve_angles, &plan, &ch, &consts()).unwrap();
        assert_eq!(r.fim, Matrix2::zeros());
        assert!(!r.identifiable);
        assert!(!crlb_feasible(&r, f64::INFINITY));
    }

    #[test]
    fn infinite_threshold_accepts_identifiable() {
        let ch = small_channels(2, 2, 10);
        let plan = plan_for(&ch, 4, 1e-9, 10);
        let r = fisher_information(ch.eve_angles, &plan, &ch, &consts()).unwrap();
        assert!(crlb_feasible(&r, f64::INFINITY));
    }

    #[test]
    fn noiseless_music_is_exact_on_grid() {
        let ch = small_channels(2, 3, 11);
        let plan = plan_for(&ch, 4, 0.0, 11);
        let x = collect_snapshots(&plan, &ch, 8, &mut seeded_rng(3));
        let (t, p) = ch.eve_angles;
        let step = 0.5f64.to_radians();
        let grid = MusicGrid::around(t, p, 20.0 * step, step);
        let est = music_estimate(&x, &plan, &ch, &consts(), &grid).unwrap();
        assert!((est.theta - t).abs() < 1e-9 && (est.phi - p).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn music_rejects_single_snapshot() {
        let ch = small_channels(2, 2, 12);
        let plan = plan_for(&ch, 3, 0.0, 12);
        let x = collect_snapshots(&plan, &ch, 1, &mut seeded_rng(3));
        let grid = MusicGrid::around(0.0, 1.6, 0.1, 0.01);
        assert!(matches!(
            music_estimate(&x, &plan, &ch, &consts(), &grid),
            Err(Error::RankDeficient { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fim_is_symmetric_psd(seed in 0u64..1000, theta in -0.5f64..0.5, phi in 1.2f64..2.2) {
            let ch = small_channels(2, 2, seed);
            let plan = plan_for(&ch, 3, 1e-9, seed);
            let r = fisher_information((theta, phi), &plan, &ch, &consts()).unwrap();
            prop_assert_eq!(r.fim[(0, 1)], r.fim[(1, 0)]);
            let tr = r.fim.trace();
            for l in r.fim.symmetric_eigenvalues().iter() {
                prop_assert!(*l >= -1e-12 * tr);
            }
            if r.identifiable {
                prop_assert!(r.crlb_theta * r.fim[(0, 0)] >= 1.0 - 1e-9);
                prop_assert!(r.crlb_phi * r.fim[(1, 1)] >= 1.0 - 1e-9);
            }
        }

        #[test]
        fn fim_ignores_pilot_phase(seed in 0u64..1000, rot in 0.0f64..6.28) {
            let ch = small_channels(2, 2, seed);
            let plan = plan_for(&ch, 3, 1e-9, seed);
            let mut turned = plan.clone();
            let z = C64::from_polar(1.0, rot);
            turned.pilots.s1 *= z;
            turned.pilots.s2 *= z;
            let a = fisher_information(ch.eve_angles, &plan, &ch, &consts()).unwrap();
            let b = fisher_information(ch.eve_angles, &turned, &ch, &consts()).unwrap();
            prop_assert!((a.fim - b.fim).norm() <= 1e-10 * a.fim.norm());
        }
    }
}
