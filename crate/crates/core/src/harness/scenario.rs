//! Resolved scenario: constants, node positions and per-slot channels.

use std::f64::consts::PI;

use crate::channel::{
    bs_ris_matrix, free_space_gain, los_channel, multipath_channels, ris_user_channel, ChannelSet,
    PhysicalConstants,
};
use crate::error::Result;
use crate::geometry::{
    angles_of, element_offsets, place_elements, rotated_basis, ArrayLayout, Basis, Orientation, Point,
    RotationBox,
};
use crate::numerics::{CVec, RngStream, C64};
use crate::sensing::{design_positioning_phases, fisher_information, CrlbReport, MeasurementPlan, Pilots};

use super::config::{dbm_to_watts, ScenarioConfig};

/// Multipath vectors held fixed over one episode.
#[derive(Debug, Clone)]
pub struct Multipath {
    pub bob: Vec<CVec>,
    pub eve: Vec<CVec>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub consts: PhysicalConstants,
    pub bs_layout: ArrayLayout,
    pub ris_layout: ArrayLayout,
    pub bs_centre: Point,
    pub bs_basis: Basis,
    pub bs_positions: Vec<Point>,
    pub bob: Point,
    pub eve_track: Vec<Point>,
    pub rotation: RotationBox,
    pub pilots: Pilots,
}

fn horizontal(distance: f64, azimuth_deg: f64, height: f64) -> Point {
    let a = azimuth_deg.to_radians();
    Point::new(distance * a.cos(), distance * a.sin(), height)
}

/// Elevation / azimuth of `target` in the frame of an array with basis `b`,
/// so that `cos(theta) cos(phi)` and `sin(theta)` are the direction cosines
/// along its horizontal and vertical axes.
fn array_frame_angles(b: &Basis, target: &Point) -> (f64, f64) {
    let k = target.normalize();
    let theta = k.dot(&b.vertical).clamp(-1.0, 1.0).asin();
    let phi = k.dot(&b.normal).atan2(k.dot(&b.horizontal));
    (theta, phi)
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let wavelength = config.wavelength();
        let r = &config.radio;
        let consts = PhysicalConstants {
            wavelength,
            channel_gain: r.channel_gain.unwrap_or_else(|| free_space_gain(wavelength)),
            noise_user: dbm_to_watts(r.noise_user_dbm),
            noise_ris: dbm_to_watts(r.noise_ris_dbm),
            tx_power: config.tx_power(),
            rho_max: r.rho_max,
        };
        consts.validate()?;
        let a = &config.arrays;
        let bs_layout = element_offsets(a.bs_horizontal, a.bs_vertical, a.bs_spacing * wavelength)?;
        let ris_layout = element_offsets(a.ris_horizontal, a.ris_vertical, a.ris_spacing * wavelength)?;

        let g = &config.geometry;
        let bs_centre = horizontal(g.bs_distance_m, g.bs_azimuth_deg, g.bs_height_m);
        let bs_orientation = Orientation::facing(&(-bs_centre));
        let bs_basis = rotated_basis(&bs_orientation);
        let bs_positions = place_elements(&bs_layout, &bs_orientation, &bs_centre);
        let bob = horizontal(g.bob_distance_m, g.bob_azimuth_deg, g.bob_height_m);
        let eve_track = (0..g.slots)
            .map(|t| {
                let frac = if g.slots > 1 { t as f64 / (g.slots - 1) as f64 } else { 0.0 };
                let az = g.eve_azimuth_start_deg + frac * (g.eve_azimuth_end_deg - g.eve_azimuth_start_deg);
                horizontal(g.eve_distance_m, az, g.eve_height_m)
            })
            .collect();
        let o = &config.rotation;
        let rotation = RotationBox::new(
            o.alpha_min_deg.to_radians(),
            o.alpha_max_deg.to_radians(),
            o.beta_min_deg.to_radians(),
            o.beta_max_deg.to_radians(),
        )?;
        let noise_bs = dbm_to_watts(r.noise_bs_dbm);
        let pilots = match config.sensing.pilot_power_dbm {
            Some(p) => {
                let s = C64::new(dbm_to_watts(p).sqrt(), 0.0);
                Pilots { s1: s, s2: s, noise: noise_bs }
            }
            None => Pilots::balanced(consts.tx_power, noise_bs),
        };
        Ok(Self {
            config: config.clone(),
            consts,
            bs_layout,
            ris_layout,
            bs_centre,
            bs_basis,
            bs_positions,
            bob,
            eve_track,
            rotation,
            pilots,
        })
    }

    pub fn slots(&self) -> usize {
        self.eve_track.len()
    }

    pub fn n(&self) -> usize {
        self.bs_layout.len()
    }

    pub fn m(&self) -> usize {
        self.ris_layout.len()
    }

    pub fn eve(&self, slot: usize) -> Point {
        self.eve_track[slot.min(self.slots() - 1)]
    }

    /// Orientation facing Eve's position of the previous slot (the latest
    /// estimate available before the slot starts), clamped to the box.
    pub fn eve_aligned(&self, slot: usize) -> Orientation {
        let seen = self.eve(slot.saturating_sub(1));
        self.rotation.clamp(&Orientation::facing(&seen))
    }

    /// Draws the multipath of one episode. The per-entry power sits the
    /// configured excess loss below the direct path's.
    pub fn draw_multipath(&self, rng: &mut RngStream) -> Multipath {
        let r = &self.config.radio;
        let bob_ref = self.consts.amplitude((self.bob - self.bs_centre).norm()).powi(2);
        let eve_ref = self.consts.amplitude((self.eve(0) - self.bs_centre).norm()).powi(2);
        Multipath {
            bob: multipath_channels(rng, r.multipath_paths, self.n(), bob_ref, r.multipath_excess_db),
            eve: multipath_channels(rng, r.multipath_paths, self.n(), eve_ref, r.multipath_excess_db),
        }
    }

    pub fn no_multipath(&self) -> Multipath {
        Multipath { bob: vec![], eve: vec![] }
    }

    /// Channels of `slot` with the RIS turned to `orientation`.
    pub fn channels(&self, orientation: &Orientation, slot: usize, multipath: &Multipath) -> Result<ChannelSet> {
        let c = &self.consts;
        let eve = self.eve(slot);
        let ris_positions = place_elements(&self.ris_layout, orientation, &Point::zeros());
        let to_bob = self.bob - self.bs_centre;
        let to_eve = eve - self.bs_centre;
        let set = ChannelSet {
            h_ab: los_channel(&self.bs_layout, array_frame_angles(&self.bs_basis, &to_bob), to_bob.norm(), c)?,
            h_ae: los_channel(&self.bs_layout, array_frame_angles(&self.bs_basis, &to_eve), to_eve.norm(), c)?,
            h_rb: ris_user_channel(&ris_positions, &self.bob.normalize(), self.bob.norm(), c)?,
            h_re: ris_user_channel(&ris_positions, &eve.normalize(), eve.norm(), c)?,
            h: bs_ris_matrix(&self.bs_positions, &ris_positions, c)?,
            multipath_bob: multipath.bob.clone(),
            multipath_eve: multipath.eve.clone(),
            ris_positions,
            eve_angles: angles_of(&eve),
            eve_distance: eve.norm(),
        };
        set.validate()?;
        Ok(set)
    }

    /// Sensing phase of one slot: positioning modes and the CRLB of Eve's
    /// true angles.
    pub fn sense(&self, channels: &ChannelSet, rng: &mut RngStream) -> Result<(MeasurementPlan, CrlbReport)> {
        let plan = design_positioning_phases(channels, self.config.sensing.modes, self.pilots, rng)?;
        let report = fisher_information(channels.eve_angles, &plan, channels, &self.consts)?;
        Ok((plan, report))
    }

    /// Orientations of the rotation box on a square grid of `step` radians.
    pub fn rotation_grid(&self, step: f64) -> Vec<Orientation> {
        let b = &self.rotation;
        let count = |lo: f64, hi: f64| ((hi - lo) / step + 1e-9).floor() as usize;
        let mut out = Vec::new();
        for i in 0..=count(b.alpha_min, b.alpha_max) {
            for j in 0..=count(b.beta_min, b.beta_max) {
                out.push(Orientation {
                    alpha: (b.alpha_min + i as f64 * step).min(b.alpha_max),
                    beta: (b.beta_min + j as f64 * step).min(b.beta_max),
                });
            }
        }
        out
    }
}

/// Degrees of a radian quantity; used by the CSV writers.
pub fn degrees(x: f64) -> f64 {
    x * 180.0 / PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn default_geometry() {
        let s = Scenario::from_config(&ScenarioConfig::default()).unwrap();
        assert_eq!((s.n(), s.m(), s.slots()), (16, 64, 20));
        assert!((s.bs_centre.norm() - 20.0).abs() < 1e-12);
        assert!((s.eve(0).norm() - 5.0).abs() < 1e-12);
        let o = s.eve_aligned(0);
        assert!(s.rotation.contains(&o));
        assert!((o.beta - 90f64.to_radians()).abs() < 1e-12 && o.alpha == 0.0);
    }

    #[test]
    fn bs_faces_ris() {
        let s = Scenario::from_config(&ScenarioConfig::desk()).unwrap();
        let (theta, phi) = array_frame_angles(&s.bs_basis, &(-s.bs_centre));
        assert!(theta.abs() < 1e-12 && (phi - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn channels_are_deterministic() {
        let s = Scenario::from_config(&ScenarioConfig::desk()).unwrap();
        let mp = s.draw_multipath(&mut seeded_rng(3));
        let mp2 = s.draw_multipath(&mut seeded_rng(3));
        assert_eq!(mp.bob, mp2.bob);
        let o = s.eve_aligned(4);
        let a = s.channels(&o, 4, &mp).unwrap();
        let b = s.channels(&o, 4, &mp).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!((a.n(), a.m(), a.paths()), (8, 16, 2));
    }

    #[test]
    fn grid_covers_box() {
        let s = Scenario::from_config(&ScenarioConfig::desk()).unwrap();
        let g = s.rotation_grid(5f64.to_radians());
        assert_eq!(g.len(), 17 * 13);
        assert!(g.iter().all(|o| s.rotation.contains(o)));
    }
}
