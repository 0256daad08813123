//! Secure beamformers for the communication phase.
//!
//! MNPL nulls Eve on both paths with projectors and then maximises Bob's
//! SINR inside the null spaces. EL maximises signal-to-leakage ratios:
//! RIS phases first, then the artificial-noise direction, then the
//! precoder, and finally a one-dimensional search over the power split.

use std::fmt;
use std::str::FromStr;

use crate::channel::{ChannelSet, PhysicalConstants, ReflectionVector};
use crate::error::{Error, Result};
use crate::metrics::{secrecy_rate, stream_sinr_pair, BeamformingSolution, Stream};
use crate::numerics::{
    dominant_generalized_eigvec, outer_conj, quad_form, CMat, CVec, HermitianPencil, RngStream, C64,
};

/// Beamforming algorithms available to the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Mnpl,
    El,
}

impl Algorithm {
    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Mnpl => "mnpl",
            Algorithm::El => "el",
        }
    }

    pub fn solve(self, channels: &ChannelSet, consts: &PhysicalConstants) -> Result<BeamformingSolution> {
        match self {
            Algorithm::Mnpl => mnpl_solve(channels, consts),
            Algorithm::El => el_solve(channels, consts),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mnpl" => Ok(Algorithm::Mnpl),
            "el" => Ok(Algorithm::El),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

fn scale(x: &CVec, s: f64) -> CVec {
    x * C64::new(s, 0.0)
}

fn normalized(x: &CVec) -> Option<CVec> {
    let n = x.norm();
    (n > 0.0 && n.is_finite()).then(|| scale(x, 1.0 / n))
}

fn add_identity(mut a: CMat, c: f64) -> CMat {
    for i in 0..a.nrows() {
        a[(i, i)] += C64::new(c, 0.0);
    }
    a
}

/// `I - conj(h) h^T / ||h||^2`, the Hermitian projector with `h^T P = 0`.
pub fn null_projector(h: &CVec) -> Result<CMat> {
    let n2 = h.norm_squared();
    if !(n2 > 0.0) {
        return Err(Error::DegenerateChannel("cannot project out a zero vector".into()));
    }
    let d = h.len();
    Ok(CMat::identity(d, d) - outer_conj(h) / C64::new(n2, 0.0))
}

/// Projectors used by MNPL: `p_bs` removes Eve's direct channel at the BS
/// and `p_ris` removes Eve's reflected path `f` at the RIS.
#[derive(Debug, Clone)]
pub struct ProjectorPair {
    pub p_bs: CMat,
    pub p_ris: CMat,
}

/// `f = diag(h_re) h^T w`, so that `upsilon^T f` is Eve's reflected signal.
pub fn eve_reflection_vector(channels: &ChannelSet, w: &CVec) -> CVec {
    (channels.h.transpose() * w).component_mul(&channels.h_re)
}

/// `g = diag(h_rb) h^T w`, so that `upsilon^T g` is Bob's reflected signal.
pub fn bob_reflection_vector(channels: &ChannelSet, w: &CVec) -> CVec {
    (channels.h.transpose() * w).component_mul(&channels.h_rb)
}

/// RIS projector `I - f f^H / ||f||^2`; with `upsilon = conj(P) tau` this
/// gives `upsilon^T f = 0`. A vanishing `f` needs no nulling.
fn ris_projector(f: &CVec) -> CMat {
    match null_projector(&f.conjugate()) {
        Ok(p) => p,
        Err(_) => CMat::identity(f.len(), f.len()),
    }
}

/// BS-side pencil: Bob's projected LoS energy over projected multipath.
pub fn mnpl_bs_pencil(channels: &ChannelSet, p_bs: &CMat) -> Result<HermitianPencil> {
    let a2 = p_bs * outer_conj(&channels.h_ab) * p_bs;
    let n = channels.n();
    let mut a3 = CMat::zeros(n, n);
    for h in &channels.multipath_bob {
        a3 += p_bs * outer_conj(h) * p_bs;
    }
    HermitianPencil::new(a2, a3)
}

/// RIS-side pencil in `tau`: Bob's reflected gain `|g^T conj(P) tau|^2` over
/// the RIS noise it amplifies, `sigma_I^2 sum |h_rb,m upsilon_m|^2`.
pub fn mnpl_ris_pencil(
    channels: &ChannelSet,
    w: &CVec,
    p_ris: &CMat,
    consts: &PhysicalConstants,
) -> Result<HermitianPencil> {
    let g = bob_reflection_vector(channels, w);
    let a = p_ris * g;
    let d = CMat::from_diagonal(&channels.h_rb.map(|z| C64::new(consts.noise_ris * z.norm_sqr(), 0.0)));
    let den = p_ris.transpose() * d * p_ris.conjugate();
    HermitianPencil::new(outer_conj(&a), den)
}

/// Null-space projection beamformer.
///
/// `w` is the projected dominant eigenvector of the BS pencil scaled to the
/// full budget and `v = 0`. The RIS vector is `conj(P_RIS) tau` for the
/// dominant `tau` of the RIS pencil, scaled to `||upsilon||_inf = rho_max`
/// and rotated so the reflected and direct signals add in phase at Bob.
pub fn mnpl_solve(channels: &ChannelSet, consts: &PhysicalConstants) -> Result<BeamformingSolution> {
    channels.validate()?;
    let n = channels.n();
    let p_bs = null_projector(&channels.h_ae)?;
    if (&p_bs * &channels.h_ab.conjugate()).norm() <= 1e-12 * channels.h_ab.norm() {
        return Err(Error::DegenerateChannel(
            "Bob's direct channel lies in Eve's direction".into(),
        ));
    }
    let tau = dominant_generalized_eigvec(&mnpl_bs_pencil(channels, &p_bs)?)?.vector;
    let w_dir = normalized(&(&p_bs * tau))
        .ok_or_else(|| Error::DegenerateChannel("projected precoder vanished".into()))?;
    let w = scale(&w_dir, consts.tx_power.sqrt());

    let f = eve_reflection_vector(channels, &w);
    let p_ris = ris_projector(&f);
    let tau = dominant_generalized_eigvec(&mnpl_ris_pencil(channels, &w, &p_ris, consts)?)?.vector;
    let raw = p_ris.conjugate() * tau;
    let peak = crate::numerics::max_abs(&raw);
    let mut upsilon = if peak > 0.0 {
        scale(&raw, consts.rho_max / peak)
    } else {
        CVec::zeros(channels.m())
    };
    let reflected = bob_reflection_vector(channels, &w).dot(&upsilon);
    let direct = channels.h_ab.dot(&w);
    if reflected.norm() > 0.0 && direct.norm() > 0.0 {
        let rot = C64::from_polar(1.0, direct.arg() - reflected.arg());
        upsilon *= rot;
    }
    let upsilon = ReflectionVector::new(upsilon, consts.rho_max)?;
    Ok(BeamformingSolution::evaluate(w, CVec::zeros(n), upsilon, 1.0, channels, consts))
}

/// Matrices of the leakage formulation for a fixed RIS vector.
#[derive(Debug, Clone)]
pub struct LeakageTerms {
    /// `conj(c_b) c_b^T` for Bob's composite channel `c_b`.
    pub a5: CMat,
    /// `conj(c_e) c_e^T - A8`.
    pub a6: CMat,
    /// Bob multipath covariance.
    pub a7: CMat,
    /// Eve multipath covariance.
    pub a8: CMat,
    /// `sigma_I^2 upsilon^H diag|h_re|^2 upsilon`.
    pub ris_noise_eve: f64,
    /// `sigma_I^2 upsilon^H diag|h_rb|^2 upsilon`.
    pub ris_noise_bob: f64,
}

impl LeakageTerms {
    pub fn new(channels: &ChannelSet, upsilon: &CVec, consts: &PhysicalConstants) -> Self {
        let n = channels.n();
        let sum = |hs: &[CVec]| hs.iter().fold(CMat::zeros(n, n), |acc, h| acc + outer_conj(h));
        let a7 = sum(&channels.multipath_bob);
        let a8 = sum(&channels.multipath_eve);
        let a5 = outer_conj(&channels.composite_bob(upsilon));
        let a6 = outer_conj(&channels.composite_eve(upsilon)) - &a8;
        let weighted = |h: &CVec| {
            consts.noise_ris * h.iter().zip(upsilon.iter()).map(|(a, b)| (a * b).norm_sqr()).sum::<f64>()
        };
        Self {
            ris_noise_eve: weighted(&channels.h_re),
            ris_noise_bob: weighted(&channels.h_rb),
            a5,
            a6,
            a7,
            a8,
        }
    }

    /// Everything Eve collects from a precoder: composite channel plus
    /// multipath, `A6 + A8`.
    fn eve_total(&self) -> CMat {
        &self.a6 + &self.a8
    }
}

/// RIS pencil: reflected energy towards both users plus Eve's amplified RIS
/// noise, over Bob's amplified RIS noise.
pub fn el_ris_pencil(channels: &ChannelSet, consts: &PhysicalConstants) -> Result<HermitianPencil> {
    let s = consts.noise_ris;
    let a9 = &channels.h_re * channels.h_re.adjoint();
    let a10 = &channels.h_rb * channels.h_rb.adjoint();
    let a11 = CMat::from_diagonal(&channels.h_re.map(|z| C64::new(s * z.norm_sqr(), 0.0)));
    let a12 = CMat::from_diagonal(&channels.h_rb.map(|z| C64::new(s * z.norm_sqr(), 0.0)));
    HermitianPencil::new(a9 + a11 + a10, a12)
}

/// RIS vector of the leakage design, scaled to `||upsilon||_inf = rho_max`.
pub fn el_ris_phase(channels: &ChannelSet, consts: &PhysicalConstants) -> Result<ReflectionVector> {
    let tau = dominant_generalized_eigvec(&el_ris_pencil(channels, consts)?)?.vector;
    let peak = crate::numerics::max_abs(&tau);
    if !(peak > 0.0) {
        return Err(Error::DegenerateChannel("RIS eigenvector vanished".into()));
    }
    ReflectionVector::new(scale(&tau, consts.rho_max / peak), consts.rho_max)
}

/// Artificial-noise pencil for a unit precoder `w`:
/// `(A6 + 2 A8 + c1 I)` over `(A5 + A7 + c2 I)`.
pub fn el_an_pencil(
    channels: &ChannelSet,
    w: &CVec,
    upsilon: &CVec,
    consts: &PhysicalConstants,
) -> Result<HermitianPencil> {
    let t = LeakageTerms::new(channels, upsilon, consts);
    let c1 = quad_form(&t.a5, w) + t.ris_noise_eve;
    let c2 = quad_form(&(t.eve_total() + &t.a7), w) + t.ris_noise_bob;
    let num = add_identity(&t.a6 + &t.a8 * C64::new(2.0, 0.0), c1);
    let den = add_identity(&t.a5 + &t.a7, c2);
    HermitianPencil::new(num, den)
}

/// Unit artificial-noise direction maximising Eve's interference over
/// Bob's.
pub fn el_an_vector(
    channels: &ChannelSet,
    w: &CVec,
    upsilon: &ReflectionVector,
    consts: &PhysicalConstants,
) -> Result<CVec> {
    Ok(dominant_generalized_eigvec(&el_an_pencil(channels, w, upsilon.values(), consts)?)?.vector)
}

/// Precoder pencil for a unit AN vector `v`:
/// `(A5 + c3 I)` over `(A6 + A8 + A7 + c4 I)`.
pub fn el_precoder_pencil(
    channels: &ChannelSet,
    v: &CVec,
    upsilon: &CVec,
    consts: &PhysicalConstants,
) -> Result<HermitianPencil> {
    let t = LeakageTerms::new(channels, upsilon, consts);
    let c3 = quad_form(&(&t.a6 + &t.a8 * C64::new(2.0, 0.0)), v) + t.ris_noise_eve;
    let c4 = quad_form(&(&t.a5 + &t.a7), v) + t.ris_noise_bob;
    let num = add_identity(t.a5.clone(), c3);
    let den = add_identity(t.eve_total() + &t.a7, c4);
    HermitianPencil::new(num, den)
}

/// Unit precoder direction maximising Bob's signal over Eve's leakage.
pub fn el_precoder(
    channels: &ChannelSet,
    v: &CVec,
    upsilon: &ReflectionVector,
    consts: &PhysicalConstants,
) -> Result<CVec> {
    Ok(dominant_generalized_eigvec(&el_precoder_pencil(channels, v, upsilon.values(), consts)?)?.vector)
}

/// Secrecy rate of the split `w = sqrt(xi P) w_dir`, `v = sqrt((1-xi) P) v_dir`.
pub fn split_secrecy_rate(
    channels: &ChannelSet,
    w_dir: &CVec,
    v_dir: &CVec,
    upsilon: &CVec,
    consts: &PhysicalConstants,
    xi: f64,
) -> f64 {
    let w = scale(w_dir, (xi * consts.tx_power).sqrt());
    let v = scale(v_dir, ((1.0 - xi) * consts.tx_power).sqrt());
    let (b, e) = stream_sinr_pair(&w, &v, upsilon, channels, consts, Stream::Combined);
    secrecy_rate(b, e)
}

/// Best power split on a uniform grid of `grid_points` values in `[0, 1]`.
/// Ties go to the larger share for the confidential signal.
pub fn power_split(
    channels: &ChannelSet,
    w_dir: &CVec,
    v_dir: &CVec,
    upsilon: &ReflectionVector,
    consts: &PhysicalConstants,
    grid_points: usize,
) -> (f64, f64) {
    let points = grid_points.max(2);
    let mut best = (1.0, f64::NEG_INFINITY);
    for i in (0..points).rev() {
        let xi = i as f64 / (points - 1) as f64;
        let sr = split_secrecy_rate(channels, w_dir, v_dir, upsilon.values(), consts, xi);
        if sr > best.1 {
            best = (xi, sr);
        }
    }
    best
}

pub const POWER_SPLIT_POINTS: usize = 1001;

/// Leakage-based beamformer: RIS phases, matched-filter initial precoder,
/// AN direction, precoder refinement and power split, in one pass.
pub fn el_solve(channels: &ChannelSet, consts: &PhysicalConstants) -> Result<BeamformingSolution> {
    channels.validate()?;
    let upsilon = el_ris_phase(channels, consts)?;
    let w0 = normalized(&channels.composite_bob(upsilon.values()).conjugate())
        .ok_or_else(|| Error::DegenerateChannel("Bob's composite channel vanished".into()))?;
    let v_dir = el_an_vector(channels, &w0, &upsilon, consts)?;
    let w_dir = el_precoder(channels, &v_dir, &upsilon, consts)?;
    let (xi, _) = power_split(channels, &w_dir, &v_dir, &upsilon, consts, POWER_SPLIT_POINTS);
    let w = scale(&w_dir, (xi * consts.tx_power).sqrt());
    let v = scale(&v_dir, ((1.0 - xi) * consts.tx_power).sqrt());
    Ok(BeamformingSolution::evaluate(w, v, upsilon, xi, channels, consts))
}

/// Reference design: random RIS phases at full amplitude and a
/// full-power matched filter on Bob's composite channel, no AN.
pub fn matched_filter_baseline(
    channels: &ChannelSet,
    consts: &PhysicalConstants,
    rng: &mut RngStream,
) -> Result<BeamformingSolution> {
    let phases: Vec<f64> = (0..channels.m()).map(|_| rng.uniform_in(0.0, std::f64::consts::TAU)).collect();
    let upsilon = ReflectionVector::new(
        ReflectionVector::from_phases(phases).into_inner() * C64::new(consts.rho_max, 0.0),
        consts.rho_max,
    )?;
    let w = normalized(&channels.composite_bob(upsilon.values()).conjugate())
        .ok_or_else(|| Error::DegenerateChannel("Bob's composite channel vanished".into()))?;
    let w = scale(&w, consts.tx_power.sqrt());
    Ok(BeamformingSolution::evaluate(w, CVec::zeros(channels.n()), upsilon, 1.0, channels, consts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{seeded_rng, HermitianPencil};
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants {
            wavelength: 0.125,
            channel_gain: 1.0,
            noise_user: 1e-2,
            noise_ris: 1e-3,
            tx_power: 2.0,
            rho_max: 4.0,
        }
    }

    fn random_set(n: usize, m: usize, l: usize, seed: u64) -> ChannelSet {
        let mut r = seeded_rng(seed);
        ChannelSet {
            h_ab: r.complex_gaussian_vec(n, 1.0),
            h_ae: r.complex_gaussian_vec(n, 1.0),
            h_rb: r.complex_gaussian_vec(m, 0.3),
            h_re: r.complex_gaussian_vec(m, 0.3),
            h: CMat::from_fn(n, m, |_, _| r.complex_gaussian(0.3)),
            multipath_bob: (0..l).map(|_| r.complex_gaussian_vec(n, 0.1)).collect(),
            multipath_eve: (0..l).map(|_| r.complex_gaussian_vec(n, 0.1)).collect(),
            ris_positions: vec![Default::default(); m],
            eve_angles: (0.0, 0.0),
            eve_distance: 1.0,
        }
    }

    fn silence_eve(ch: &mut ChannelSet) {
        ch.h_ae.fill(C64::new(0.0, 0.0));
        ch.h_re.fill(C64::new(0.0, 0.0));
        for h in &mut ch.multipath_eve {
            h.fill(C64::new(0.0, 0.0));
        }
    }

    fn sample_max(p: &HermitianPencil, samples: usize, seed: u64) -> f64 {
        let mut r = seeded_rng(seed);
        (0..samples)
            .map(|_| p.quotient(&r.complex_gaussian_vec(p.dim(), 1.0)))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn projector_of_unit_vector() {
        let mut e = CVec::zeros(4);
        e[0] = C64::new(1.0, 0.0);
        let p = null_projector(&e).unwrap();
        let mut want = CMat::identity(4, 4);
        want[(0, 0)] = C64::new(0.0, 0.0);
        assert!((p - want).norm() < 1e-15);
        assert!(null_projector(&CVec::zeros(3)).is_err());
    }

    #[test]
    fn mnpl_nulls_eve() {
        for seed in 0..10 {
            let ch = random_set(4, 6, 2, seed);
            let c = consts();
            let sol = mnpl_solve(&ch, &c).unwrap();
            let direct = ch.h_ae.dot(&sol.w).norm() / (c.tx_power.sqrt() * ch.h_ae.norm());
            let f = eve_reflection_vector(&ch, &sol.w);
            let reflected = sol.upsilon.values().dot(&f).norm() / (c.rho_max * f.norm());
            assert!(direct < 1e-9 && reflected < 1e-9, "{direct} {reflected}");
            assert!((sol.power() - c.tx_power).abs() < 1e-9 * c.tx_power);
            assert!((sol.upsilon.max_amplitude() - c.rho_max).abs() < 1e-12);
            assert_eq!(sol.v, CVec::zeros(4));
        }
    }

    #[test]
    fn mnpl_orthogonal_eve_keeps_matched_filter() {
        let mut ch = random_set(3, 4, 0, 3);
        ch.h_ab = CVec::from_vec(vec![C64::new(1.0, 0.5), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        ch.h_ae = CVec::from_vec(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let c = consts();
        let sol = mnpl_solve(&ch, &c).unwrap();
        let achieved = ch.h_ab.dot(&sol.w).norm_sqr();
        let matched = c.tx_power * ch.h_ab.norm_squared();
        assert!((achieved - matched).abs() < 1e-9 * matched);
    }

    #[test]
    fn mnpl_rejects_collinear_users() {
        let mut ch = random_set(3, 4, 1, 4);
        ch.h_ae = ch.h_ab.map(|z| z * C64::new(0.0, 2.0));
        assert!(matches!(mnpl_solve(&ch, &consts()), Err(Error::DegenerateChannel(_))));
    }

    #[test]
    fn el_ris_phase_hits_amplitude_bound() {
        let ch = random_set(3, 5, 1, 5);
        let u = el_ris_phase(&ch, &consts()).unwrap();
        assert!((u.max_amplitude() - consts().rho_max).abs() < 1e-12);
    }

    #[test]
    fn el_single_element_phase_free() {
        let ch = random_set(3, 1, 1, 6);
        let c = consts();
        let u = el_ris_phase(&ch, &c).unwrap();
        assert!((u.values()[0].norm() - c.rho_max).abs() < 1e-12);
        let p = el_ris_pencil(&ch, &c).unwrap();
        let q0 = p.quotient(u.values());
        let q1 = p.quotient(&u.values().map(|z| z * C64::from_polar(1.0, 1.3)));
        assert!((q0 - q1).abs() < 1e-12 * q0);
    }

    #[test]
    fn unit_norm_directions() {
        let ch = random_set(4, 4, 2, 7);
        let c = consts();
        let u = el_ris_phase(&ch, &c).unwrap();
        let w0 = normalized(&ch.composite_bob(u.values()).conjugate()).unwrap();
        let v = el_an_vector(&ch, &w0, &u, &c).unwrap();
        let w = el_precoder(&ch, &v, &u, &c).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12 && (w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn an_avoids_bob_without_eve() {
        let mut ch = random_set(4, 4, 0, 8);
        silence_eve(&mut ch);
        ch.multipath_bob.clear();
        ch.multipath_eve.clear();
        let c = consts();
        let u = el_ris_phase(&ch, &c).unwrap_or_else(|_| ReflectionVector::ones(4));
        let w0 = normalized(&ch.composite_bob(u.values()).conjugate()).unwrap();
        let v = el_an_vector(&ch, &w0, &u, &c).unwrap();
        let a5 = outer_conj(&ch.composite_bob(u.values()));
        let mut r = seeded_rng(1);
        let mut leaks: Vec<f64> = (0..1001)
            .map(|_| {
                let x = normalized(&r.complex_gaussian_vec(4, 1.0)).unwrap();
                quad_form(&a5, &x)
            })
            .collect();
        leaks.sort_by(f64::total_cmp);
        assert!(quad_form(&a5, &v) <= leaks[500]);
    }

    #[test]
    fn precoder_without_eve_is_matched() {
        let mut ch = random_set(4, 4, 0, 9);
        silence_eve(&mut ch);
        ch.multipath_bob.clear();
        ch.multipath_eve.clear();
        let c = consts();
        let u = ReflectionVector::ones(4);
        let v = normalized(&CVec::from_element(4, C64::new(1.0, 0.0))).unwrap();
        let w = el_precoder(&ch, &v, &u, &c).unwrap();
        let cb = ch.composite_bob(u.values());
        let achieved = cb.dot(&w).norm_sqr();
        assert!((achieved - cb.norm_squared()).abs() < 1e-9 * cb.norm_squared());
    }

    #[test]
    fn split_prefers_signal_without_eve() {
        let mut ch = random_set(4, 4, 0, 10);
        silence_eve(&mut ch);
        let c = consts();
        let sol = el_solve(&ch, &c).unwrap();
        assert_eq!(sol.xi, 1.0);
    }

    #[test]
    fn split_dominates_endpoints() {
        for seed in 0..10 {
            let ch = random_set(4, 4, 2, 20 + seed);
            let c = consts();
            let u = el_ris_phase(&ch, &c).unwrap();
            let mut r = seeded_rng(seed);
            let w = normalized(&r.complex_gaussian_vec(4, 1.0)).unwrap();
            let v = normalized(&r.complex_gaussian_vec(4, 1.0)).unwrap();
            let (_, sr) = power_split(&ch, &w, &v, &u, &c, 101);
            let e0 = split_secrecy_rate(&ch, &w, &v, u.values(), &c, 0.0);
            let e1 = split_secrecy_rate(&ch, &w, &v, u.values(), &c, 1.0);
            assert!(sr >= e0.max(e1));
        }
    }

    #[test]
    fn el_power_budget() {
        for seed in 0..10 {
            let ch = random_set(4, 6, 2, 40 + seed);
            let c = consts();
            let sol = el_solve(&ch, &c).unwrap();
            sol.check(&c).unwrap();
        }
    }

    #[test]
    fn algorithm_ids_roundtrip() {
        for a in [Algorithm::Mnpl, Algorithm::El] {
            assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        }
        assert!("dsact".parse::<Algorithm>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn projector_invariants(seed in 0u64..10_000, n in 1usize..9) {
            let h = seeded_rng(seed).complex_gaussian_vec(n, 1.0);
            let p = null_projector(&h).unwrap();
            prop_assert!((&p * &p - &p).norm() < 1e-9);
            prop_assert!((&p - p.adjoint()).norm() < 1e-12);
            prop_assert!((h.transpose() * &p).norm() / h.norm() < 1e-12);
            prop_assert!((p.trace().re - (n as f64 - 1.0)).abs() < 1e-9);
        }

        #[test]
        fn pencils_beat_sampling(seed in 0u64..1000) {
            let ch = random_set(4, 5, 2, seed);
            let c = consts();
            let p_bs = null_projector(&ch.h_ae).unwrap();
            let u = el_ris_phase(&ch, &c).unwrap();
            let w = normalized(&seeded_rng(seed).complex_gaussian_vec(4, 1.0)).unwrap();
            let pencils = [
                mnpl_bs_pencil(&ch, &p_bs).unwrap(),
                mnpl_ris_pencil(&ch, &w, &ris_projector(&eve_reflection_vector(&ch, &w)), &c).unwrap(),
                el_ris_pencil(&ch, &c).unwrap(),
                el_an_pencil(&ch, &w, u.values(), &c).unwrap(),
                el_precoder_pencil(&ch, &w, u.values(), &c).unwrap(),
            ];
            for (i, p) in pencils.iter().enumerate() {
                let best = dominant_generalized_eigvec(p).unwrap().quotient;
                let sampled = sample_max(p, 2000, seed + i as u64);
                prop_assert!(best >= sampled * (1.0 - 1e-9), "pencil {}: {} < {}", i, best, sampled);
            }
        }
    }
}
