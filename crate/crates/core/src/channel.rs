//! Line-of-sight, RIS and multipath channel synthesis for one time slot.
//!
//! Conventions: `h` is the `N x M` BS-RIS matrix, `h_rb` / `h_re` the RIS to
//! Bob / Eve vectors and `h_ab` / `h_ae` the direct BS to Bob / Eve vectors.
//! The downlink signal reaching Bob through the RIS is
//! `h_rb^T diag(upsilon) h^T w`; the uplink stack seen at the BS during
//! sensing is `h diag(upsilon) h_re s`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, Point};
use crate::numerics::{cvec_from_fn, max_abs, CMat, CVec, RngStream, C64};

/// Physical constants shared by every channel of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// Carrier wavelength (m).
    pub wavelength: f64,
    /// Channel power gain at unit distance.
    pub channel_gain: f64,
    /// Receiver noise power at Bob and Eve (W).
    pub noise_user: f64,
    /// Per-element noise power of the active RIS (W).
    pub noise_ris: f64,
    /// Transmit power budget (W).
    pub tx_power: f64,
    /// Maximum RIS reflection amplitude.
    pub rho_max: f64,
}

/// Free-space gain `(lambda / 4 pi)^2`.
pub fn free_space_gain(wavelength: f64) -> f64 {
    (wavelength / (4.0 * PI)).powi(2)
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wavelength", self.wavelength),
            ("channel_gain", self.channel_gain),
            ("noise_user", self.noise_user),
            ("noise_ris", self.noise_ris),
            ("tx_power", self.tx_power),
            ("rho_max", self.rho_max),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(name, format!("must be positive and finite, got {v}")));
            }
        }
        if self.rho_max < 1.0 {
            return Err(Error::config("rho_max", format!("must be at least 1, got {}", self.rho_max)));
        }
        Ok(())
    }

    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength
    }

    /// Free-space field amplitude `sqrt(gain) / d`.
    pub fn amplitude(&self, distance: f64) -> f64 {
        self.channel_gain.sqrt() / distance
    }
}

/// Far-field BS channel towards `(theta, phi)`:
/// entry `n` is `sqrt(gain)/d exp(j k (r_h cos(theta) cos(phi) + r_v sin(theta)))`
/// with `(r_h, r_v)` the in-plane offsets of antenna `n`.
pub fn los_channel(
    layout: &ArrayLayout,
    target: (f64, f64),
    distance: f64,
    consts: &PhysicalConstants,
) -> Result<CVec> {
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {distance}")));
    }
    let (theta, phi) = target;
    let amp = consts.amplitude(distance);
    let k = consts.wavenumber();
    let (ch, cv) = (theta.cos() * phi.cos(), theta.sin());
    Ok(cvec_from_fn(layout.len(), |n| {
        let (rh, rv) = layout.offsets[n];
        C64::from_polar(amp, k * (rh * ch + rv * cv))
    }))
}

/// RIS to user channel: entry `m` is `sqrt(gain)/d exp(-j k i_m^T dir)`.
pub fn ris_user_channel(
    ris_positions: &[Point],
    dir: &Point,
    distance: f64,
    consts: &PhysicalConstants,
) -> Result<CVec> {
    if (dir.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, norm is {}",
            dir.norm()
        )));
    }
    if !(distance > 0.0) {
        return Err(Error::InvalidArgument(format!("distance must be positive, got {distance}")));
    }
    let amp = consts.amplitude(distance);
    let k = consts.wavenumber();
    Ok(cvec_from_fn(ris_positions.len(), |m| {
        C64::from_polar(amp, -k * ris_positions[m].dot(dir))
    }))
}

/// BS to RIS matrix with exact per-pair distances:
/// `[H]_{n,m} = sqrt(gain)/d_{nm} exp(j k d_{nm})`.
pub fn bs_ris_matrix(
    bs_positions: &[Point],
    ris_positions: &[Point],
    consts: &PhysicalConstants,
) -> Result<CMat> {
    let k = consts.wavenumber();
    let mut h = CMat::zeros(bs_positions.len(), ris_positions.len());
    for (n, a) in bs_positions.iter().enumerate() {
        for (m, i) in ris_positions.iter().enumerate() {
            let d = (a - i).norm();
            if d < 1e-12 {
                return Err(Error::CoincidentElements { bs: n, ris: m });
            }
            h[(n, m)] = C64::from_polar(consts.amplitude(d), k * d);
        }
    }
    Ok(h)
}

/// `paths` i.i.d. Rayleigh vectors whose per-entry power sits
/// `excess_loss_db` below `reference_power`.
pub fn multipath_channels(
    rng: &mut RngStream,
    paths: usize,
    len: usize,
    reference_power: f64,
    excess_loss_db: f64,
) -> Vec<CVec> {
    let variance = reference_power * 10f64.powf(-excess_loss_db / 10.0);
    (0..paths)
        .map(|_| rng.complex_gaussian_vec(len, variance))
        .collect()
}

/// RIS reflection coefficients `rho_m exp(j psi_m)` satisfying
/// `|upsilon_m| <= rho_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector(CVec);

fn check_reflection(values: &CVec, rho_max: f64) -> Result<()> {
    for (index, v) in values.iter().enumerate() {
        let modulus = v.norm();
        if !modulus.is_finite() || modulus > rho_max * (1.0 + 1e-12) {
            return Err(Error::ReflectionBound {
                index,
                modulus,
                rho_max,
            });
        }
    }
    Ok(())
}

impl ReflectionVector {
    pub fn new(values: CVec, rho_max: f64) -> Result<Self> {
        check_reflection(&values, rho_max)?;
        Ok(Self(values))
    }

    /// Unit-modulus vector with the given phases.
    pub fn from_phases(phases: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<C64> = phases.into_iter().map(|p| C64::from_polar(1.0, p)).collect();
        Self(CVec::from_vec(v))
    }

    pub fn ones(m: usize) -> Self {
        Self(CVec::from_element(m, C64::new(1.0, 0.0)))
    }

    pub fn values(&self) -> &CVec {
        &self.0
    }

    pub fn into_inner(self) -> CVec {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_amplitude(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// `diag(upsilon)`, rejecting coefficients above `rho_max`.
pub fn reflection_matrix(values: &CVec, rho_max: f64) -> Result<CMat> {
    check_reflection(values, rho_max)?;
    Ok(CMat::from_diagonal(values))
}

/// Every channel of one time slot, plus the RIS geometry needed to
/// re-synthesise the Eve path at other angles.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    pub h_ab: CVec,
    pub h_ae: CVec,
    pub h_rb: CVec,
    pub h_re: CVec,
    pub h: CMat,
    pub multipath_bob: Vec<CVec>,
    pub multipath_eve: Vec<CVec>,
    pub ris_positions: Vec<Point>,
    /// True elevation / azimuth of Eve seen from the RIS centre.
    pub eve_angles: (f64, f64),
    pub eve_distance: f64,
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.h_ab.len()
    }

    pub fn m(&self) -> usize {
        self.h_rb.len()
    }

    pub fn paths(&self) -> usize {
        self.multipath_bob.len()
    }

    /// `h diag(upsilon) h_rb`: the RIS path to Bob as an N-vector, so that
    /// Bob receives `bob_ris_path(upsilon)^T w`.
    pub fn bob_ris_path(&self, upsilon: &CVec) -> CVec {
        &self.h * upsilon.component_mul(&self.h_rb)
    }

    pub fn eve_ris_path(&self, upsilon: &CVec) -> CVec {
        &self.h * upsilon.component_mul(&self.h_re)
    }

    pub fn composite_bob(&self, upsilon: &CVec) -> CVec {
        self.bob_ris_path(upsilon) + &self.h_ab
    }

    pub fn composite_eve(&self, upsilon: &CVec) -> CVec {
        self.eve_ris_path(upsilon) + &self.h_ae
    }

    /// Eve path as an M-vector evaluated at arbitrary angles.
    pub fn eve_path_at(&self, theta: f64, phi: f64, consts: &PhysicalConstants) -> CVec {
        let dir = crate::geometry::direction(theta, phi);
        ris_user_channel(&self.ris_positions, &dir, self.eve_distance, consts)
            .expect("direction() is a unit vector and the stored distance is positive")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let m = self.m();
        let shapes_ok = self.h_ae.len() == n
            && self.h_re.len() == m
            && self.h.shape() == (n, m)
            && self.multipath_bob.len() == self.multipath_eve.len()
            && self.multipath_bob.iter().chain(&self.multipath_eve).all(|v| v.len() == n);
        if !shapes_ok {
            return Err(Error::DimensionMismatch(format!(
                "channel set with N = {n}, M = {m} has inconsistent members"
            )));
        }
        let finite = self
            .h_ab
            .iter()
            .chain(self.h_ae.iter())
            .chain(self.h_rb.iter())
            .chain(self.h_re.iter())
            .chain(self.h.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::DegenerateChannel("non-finite channel entry".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{direction, element_offsets, place_elements, Orientation};
    use crate::numerics::seeded_rng;
    use nalgebra::Vector3;

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

    #[test]
    fn los_broadside_uniform_phase() {
        let c = consts();
        let layout = element_offsets(3, 2, c.wavelength / 2.0).unwrap();
        let h = los_channel(&layout, (0.0, PI / 2.0), 20.0, &c).unwrap();
        let amp = c.amplitude(20.0);
        for z in h.iter() {
            assert!((z.norm() - amp).abs() < 1e-15);
            assert!((z - C64::new(amp, 0.0)).norm() < 1e-12 * amp);
        }
    }

    #[test]
    fn los_matches_steering_oracle() {
        // Independent ULA steering vector: 4 horizontal elements, theta = 30 deg, phi = 0.
        let c = consts();
        let d = c.wavelength / 2.0;
        let layout = element_offsets(4, 1, d).unwrap();
        let theta = 30f64.to_radians();
        let h = los_channel(&layout, (theta, 0.0), 15.0, &c).unwrap();
        let amp = c.channel_gain.sqrt() / 15.0;
        for n in 0..4 {
            let x = (n as f64 - 1.5) * d;
            let z = d;
            let phase = 2.0 * PI / c.wavelength * (x * theta.cos() + z * theta.sin());
            let want = C64::new(amp * phase.cos(), amp * phase.sin());
            assert!((h[n] - want).norm() < 1e-12 * amp);
        }
    }

    #[test]
    fn los_rejects_zero_distance() {
        let c = consts();
        let layout = element_offsets(2, 2, 0.1).unwrap();
        assert!(los_channel(&layout, (0.0, 0.0), 0.0, &c).is_err());
    }

    #[test]
    fn ris_channel_along_normal_is_flat() {
        let c = consts();
        let o = Orientation::new(-0.3, 1.9).unwrap();
        let layout = element_offsets(4, 4, c.wavelength / 2.0).unwrap();
        let pos = place_elements(&layout, &o, &Point::zeros());
        let h = ris_user_channel(&pos, &o.normal(), 5.0, &c).unwrap();
        for z in h.iter() {
            assert!((z.arg()).abs() < 1e-12);
            assert!((z.norm() - c.amplitude(5.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn ris_channel_matches_dot_product_oracle() {
        let c = consts();
        let mut rng = seeded_rng(3);
        let pos: Vec<Point> = (0..4)
            .map(|_| Vector3::new(rng.uniform_in(-0.1, 0.1), rng.uniform_in(-0.1, 0.1), rng.uniform_in(-0.1, 0.1)))
            .collect();
        let dir = direction(0.4, 2.2);
        let h = ris_user_channel(&pos, &dir, 7.0, &c).unwrap();
        for (m, p) in pos.iter().enumerate() {
            let dot = p.x * dir.x + p.y * dir.y + p.z * dir.z;
            let phase = -2.0 * PI * dot / c.wavelength;
            let want = C64::from_polar(c.channel_gain.sqrt() / 7.0, phase);
            assert!((h[m] - want).norm() < 1e-12 * want.norm());
        }
        assert!(ris_user_channel(&pos, &(dir * 1.01), 7.0, &c).is_err());
    }

    #[test]
    fn bs_ris_single_pair() {
        let c = consts();
        let a = [Vector3::new(0.0, 0.0, 0.0)];
        let i = [Vector3::new(3.0, 4.0, 0.0)];
        let h = bs_ris_matrix(&a, &i, &c).unwrap();
        let want = C64::from_polar(c.channel_gain.sqrt() / 5.0, 2.0 * PI * 5.0 / c.wavelength);
        assert!((h[(0, 0)] - want).norm() < 1e-12 * want.norm());
        assert!(matches!(
            bs_ris_matrix(&a, &a, &c),
            Err(Error::CoincidentElements { bs: 0, ris: 0 })
        ));
    }

    #[test]
    fn bs_ris_two_by_two_hand_distances() {
        let c = consts();
        let a = [Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.0, 0.1, 0.0)];
        let i = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.2)];
        let h = bs_ris_matrix(&a, &i, &c).unwrap();
        let d = [[1.0, 1.04f64.sqrt()], [1.01f64.sqrt(), 1.05f64.sqrt()]];
        for n in 0..2 {
            for m in 0..2 {
                let want = C64::from_polar(c.channel_gain.sqrt() / d[n][m], 2.0 * PI * d[n][m] / c.wavelength);
                assert!((h[(n, m)] - want).norm() < 1e-12 * want.norm());
            }
        }
    }

    #[test]
    fn bs_ris_decreases_with_distance() {
        let c = consts();
        let layout = element_offsets(2, 2, c.wavelength / 2.0).unwrap();
        let ris = place_elements(&layout, &Orientation::IDENTITY, &Point::zeros());
        let near = place_elements(&layout, &Orientation::IDENTITY, &Vector3::new(10.0, 0.0, 0.0));
        let far = place_elements(&layout, &Orientation::IDENTITY, &Vector3::new(12.0, 0.0, 0.0));
        let hn = bs_ris_matrix(&near, &ris, &c).unwrap();
        let hf = bs_ris_matrix(&far, &ris, &c).unwrap();
        for (a, b) in hn.iter().zip(hf.iter()) {
            assert!(b.norm() < a.norm());
        }
    }

    #[test]
    fn multipath_empty_and_deterministic() {
        let mut rng = seeded_rng(1);
        assert!(multipath_channels(&mut rng, 0, 4, 1.0, 10.0).is_empty());
        let a = multipath_channels(&mut seeded_rng(9), 2, 4, 1.0, 10.0);
        let b = multipath_channels(&mut seeded_rng(9), 2, 4, 1.0, 10.0);
        assert_eq!(a, b);
    }

    #[test]
    fn multipath_mean_power() {
        let mut rng = seeded_rng(2);
        let reference = 3.0e-7;
        let paths = multipath_channels(&mut rng, 100_000, 1, reference, 10.0);
        let mean = paths.iter().map(|v| v[0].norm_sqr()).sum::<f64>() / paths.len() as f64;
        let target = reference / 10.0;
        assert!((mean / target - 1.0).abs() < 0.02, "{mean} vs {target}");
    }

    #[test]
    fn reflection_identity_and_bound() {
        let ones = ReflectionVector::ones(3);
        let m = reflection_matrix(ones.values(), 10.0).unwrap();
        assert_eq!(m, CMat::identity(3, 3));
        let mut v = CVec::from_element(3, C64::new(1.0, 0.0));
        v[0] = C64::new(10.1, 0.0);
        assert!(matches!(
            reflection_matrix(&v, 10.0),
            Err(Error::ReflectionBound { index: 0, .. })
        ));
        assert!(ReflectionVector::new(v, 10.0).is_err());
    }

    #[test]
    fn reflection_identity_against_diag_form() {
        // h_rb^T diag(u) H^T == u^T diag(h_rb) H^T
        let mut rng = seeded_rng(4);
        let h = CMat::from_fn(3, 5, |_, _| rng.complex_gaussian(1.0));
        let h_rb = rng.complex_gaussian_vec(5, 1.0);
        let u = rng.complex_gaussian_vec(5, 1.0);
        let theta = reflection_matrix(&u, 1e3).unwrap();
        let lhs = h_rb.transpose() * theta * h.transpose();
        let rhs = u.transpose() * CMat::from_diagonal(&h_rb) * h.transpose();
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn ris_path_matches_matrix_form() {
        let mut rng = seeded_rng(5);
        let (n, m) = (3, 5);
        let set = ChannelSet {
            h_ab: rng.complex_gaussian_vec(n, 1.0),
            h_ae: rng.complex_gaussian_vec(n, 1.0),
            h_rb: rng.complex_gaussian_vec(m, 1.0),
            h_re: rng.complex_gaussian_vec(m, 1.0),
            h: CMat::from_fn(n, m, |_, _| rng.complex_gaussian(1.0)),
            multipath_bob: vec![],
            multipath_eve: vec![],
            ris_positions: vec![Point::zeros(); m],
            eve_angles: (0.0, 0.0),
            eve_distance: 1.0,
        };
        let u = rng.complex_gaussian_vec(m, 1.0);
        let w = rng.complex_gaussian_vec(n, 1.0);
        let direct = (set.h_rb.transpose() * CMat::from_diagonal(&u) * set.h.transpose() * &w)[0];
        assert!((set.bob_ris_path(&u).dot(&w) - direct).norm() < 1e-12);
        let direct = (set.h_re.transpose() * CMat::from_diagonal(&u) * set.h.transpose() * &w)[0];
        assert!((set.eve_ris_path(&u).dot(&w) - direct).norm() < 1e-12);
    }

    #[test]
    fn negative_wavelength_conjugates_phases() {
        let c = consts();
        let mut neg = c;
        neg.wavelength = -c.wavelength;
        let layout = element_offsets(2, 2, 0.06).unwrap();
        let h = los_channel(&layout, (0.2, 0.7), 9.0, &c).unwrap();
        let hn = los_channel(&layout, (0.2, 0.7), 9.0, &neg).unwrap();
        assert!((h.conjugate() - hn).norm() < 1e-12 * h.norm());
    }
}
