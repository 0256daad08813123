//! SINR, achievable rates and secrecy rate of a beamforming solution.

use std::fmt;

use crate::channel::{ChannelSet, PhysicalConstants, ReflectionVector};
use crate::error::{Error, Result};
use crate::numerics::{gain, CVec};

/// Precoder `w`, artificial-noise vector `v`, RIS coefficients and the
/// power split `xi = ||w||^2 / P_t` that produced them.
#[derive(Debug, Clone)]
pub struct BeamformingSolution {
    pub w: CVec,
    pub v: CVec,
    pub upsilon: ReflectionVector,
    pub xi: f64,
    /// Secrecy rate of the combined stream (bits/s/Hz).
    pub sr: f64,
}

impl BeamformingSolution {
    /// Assemble a solution and evaluate its secrecy rate.
    pub fn evaluate(
        w: CVec,
        v: CVec,
        upsilon: ReflectionVector,
        xi: f64,
        channels: &ChannelSet,
        consts: &PhysicalConstants,
    ) -> Self {
        let mut sol = Self { w, v, upsilon, xi, sr: 0.0 };
        let (b, e) = sinr_pair(&sol, channels, consts);
        sol.sr = secrecy_rate(b, e);
        sol
    }

    /// Total power `||w||^2 + ||v||^2`.
    pub fn power(&self) -> f64 {
        self.w.norm_squared() + self.v.norm_squared()
    }

    /// Checks the power budget (1e-9 relative) and the amplitude bound.
    pub fn check(&self, consts: &PhysicalConstants) -> Result<()> {
        let p = self.power();
        if (p - consts.tx_power).abs() > 1e-9 * consts.tx_power {
            return Err(Error::InvalidArgument(format!(
                "solution uses {p} W of a {} W budget",
                consts.tx_power
            )));
        }
        let amp = self.upsilon.max_amplitude();
        if amp > consts.rho_max * (1.0 + 1e-12) {
            return Err(Error::ReflectionBound {
                index: self
                    .upsilon
                    .values()
                    .iter()
                    .position(|z| z.norm() == amp)
                    .unwrap_or(0),
                modulus: amp,
                rho_max: consts.rho_max,
            });
        }
        if !(self.sr >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative secrecy rate {}", self.sr)));
        }
        Ok(())
    }
}

/// Data streams distinguished in the results: the direct path, the
/// RIS-reflected path and their coherent sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stream {
    Los,
    Ris,
    Combined,
}

impl Stream {
    pub const ALL: [Stream; 3] = [Stream::Los, Stream::Ris, Stream::Combined];

    pub fn id(self) -> &'static str {
        match self {
            Stream::Los => "los",
            Stream::Ris => "ris",
            Stream::Combined => "combined",
        }
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

struct Receiver<'a> {
    direct: &'a CVec,
    reflected: CVec,
    ris_user: &'a CVec,
    multipath: &'a [CVec],
}

impl Receiver<'_> {
    fn sinr(&self, w: &CVec, v: &CVec, upsilon: &CVec, consts: &PhysicalConstants, stream: Stream) -> f64 {
        let composite = &self.reflected + self.direct;
        let signal = match stream {
            Stream::Los => gain(self.direct, w),
            Stream::Ris => gain(&self.reflected, w),
            Stream::Combined => gain(&composite, w),
        };
        let multipath: f64 = self.multipath.iter().map(|h| gain(h, w) + gain(h, v)).sum();
        let ris_noise: f64 = self
            .ris_user
            .iter()
            .zip(upsilon.iter())
            .map(|(h, u)| (h * u).norm_sqr())
            .sum::<f64>()
            * consts.noise_ris;
        let denom = multipath + gain(&composite, v) + ris_noise + consts.noise_user;
        signal / denom
    }
}

fn receivers<'a>(channels: &'a ChannelSet, upsilon: &CVec) -> (Receiver<'a>, Receiver<'a>) {
    (
        Receiver {
            direct: &channels.h_ab,
            reflected: channels.bob_ris_path(upsilon),
            ris_user: &channels.h_rb,
            multipath: &channels.multipath_bob,
        },
        Receiver {
            direct: &channels.h_ae,
            reflected: channels.eve_ris_path(upsilon),
            ris_user: &channels.h_re,
            multipath: &channels.multipath_eve,
        },
    )
}

/// Bob and Eve SINR of one stream for raw precoders.
pub fn stream_sinr_pair(
    w: &CVec,
    v: &CVec,
    upsilon: &CVec,
    channels: &ChannelSet,
    consts: &PhysicalConstants,
    stream: Stream,
) -> (f64, f64) {
    let (bob, eve) = receivers(channels, upsilon);
    (
        bob.sinr(w, v, upsilon, consts, stream),
        eve.sinr(w, v, upsilon, consts, stream),
    )
}

/// `(sinr_bob, sinr_eve)` of the combined stream.
///
/// The denominators hold multipath leakage of both precoders, the
/// artificial noise through the composite channel, the RIS thermal noise
/// amplified by `|upsilon_m|^2` and the receiver noise.
pub fn sinr_pair(sol: &BeamformingSolution, channels: &ChannelSet, consts: &PhysicalConstants) -> (f64, f64) {
    stream_sinr_pair(&sol.w, &sol.v, sol.upsilon.values(), channels, consts, Stream::Combined)
}

/// `[log2(1 + sinr_bob) - log2(1 + sinr_eve)]^+`.
pub fn secrecy_rate(sinr_bob: f64, sinr_eve: f64) -> f64 {
    ((1.0 + sinr_bob).log2() - (1.0 + sinr_eve).log2()).max(0.0)
}

/// Secrecy rate of one stream of a solution.
pub fn stream_secrecy_rate(
    sol: &BeamformingSolution,
    channels: &ChannelSet,
    consts: &PhysicalConstants,
    stream: Stream,
) -> f64 {
    let (b, e) = stream_sinr_pair(&sol.w, &sol.v, sol.upsilon.values(), channels, consts, stream);
    secrecy_rate(b, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{seeded_rng, CMat, C64};
    use proptest::prelude::*;

    fn consts() -> PhysicalConstants {
        PhysicalConstants {
            wavelength: 0.125,
            channel_gain: 1e-4,
            noise_user: 1e-3,
            noise_ris: 2e-3,
            tx_power: 4.0,
            rho_max: 10.0,
        }
    }

    fn random_set(n: usize, m: usize, l: usize, seed: u64) -> ChannelSet {
        let mut r = seeded_rng(seed);
        ChannelSet {
            h_ab: r.complex_gaussian_vec(n, 1.0),
            h_ae: r.complex_gaussian_vec(n, 1.0),
            h_rb: r.complex_gaussian_vec(m, 1.0),
            h_re: r.complex_gaussian_vec(m, 1.0),
            h: CMat::from_fn(n, m, |_, _| r.complex_gaussian(1.0)),
            multipath_bob: (0..l).map(|_| r.complex_gaussian_vec(n, 0.1)).collect(),
            multipath_eve: (0..l).map(|_| r.complex_gaussian_vec(n, 0.1)).collect(),
            ris_positions: vec![Default::default(); m],
            eve_angles: (0.0, 0.0),
            eve_distance: 1.0,
        }
    }

    fn solution(ch: &ChannelSet, seed: u64) -> BeamformingSolution {
        let mut r = seeded_rng(seed);
        let w = r.complex_gaussian_vec(ch.n(), 1.0);
        let v = r.complex_gaussian_vec(ch.n(), 0.5);
        let u = ReflectionVector::new(r.complex_gaussian_vec(ch.m(), 1.0), 100.0).unwrap();
        BeamformingSolution::evaluate(w, v, u, 0.5, ch, &consts())
    }

    /// Entry-by-entry evaluation with explicit sums.
    fn scalar_sinr(sol: &BeamformingSolution, ch: &ChannelSet, c: &PhysicalConstants, bob: bool) -> f64 {
        let (direct, ru, mp) = if bob {
            (&ch.h_ab, &ch.h_rb, &ch.multipath_bob)
        } else {
            (&ch.h_ae, &ch.h_re, &ch.multipath_eve)
        };
        let u = sol.upsilon.values();
        let eff = |x: &CVec| {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..ch.n() {
                let mut coef = direct[n];
                for m in 0..ch.m() {
                    coef += ru[m] * u[m] * ch.h[(n, m)];
                }
                acc += coef * x[n];
            }
            acc.norm_sqr()
        };
        let lin = |h: &CVec, x: &CVec| {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..h.len() {
                acc += h[n] * x[n];
            }
            acc.norm_sqr()
        };
        let mut den = c.noise_user + eff(&sol.v);
        for h in mp {
            den += lin(h, &sol.w) + lin(h, &sol.v);
        }
        for m in 0..ch.m() {
            den += c.noise_ris * (ru[m] * u[m]).norm_sqr();
        }
        eff(&sol.w) / den
    }

    #[test]
    fn zero_precoder_gives_zero_sinr() {
        let ch = random_set(3, 4, 2, 1);
        let mut sol = solution(&ch, 2);
        sol.w = CVec::zeros(3);
        assert_eq!(sinr_pair(&sol, &ch, &consts()), (0.0, 0.0));
    }

    #[test]
    fn pure_los_collapse() {
        let ch = random_set(3, 4, 0, 3);
        let mut sol = solution(&ch, 4);
        sol.v = CVec::zeros(3);
        sol.upsilon = ReflectionVector::new(CVec::zeros(4), 1.0).unwrap();
        let (b, _) = sinr_pair(&sol, &ch, &consts());
        let expected = gain(&ch.h_ab, &sol.w) / consts().noise_user;
        assert!((b - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn matches_scalar_oracle() {
        for seed in 0..20 {
            let ch = random_set(4, 5, 2, seed);
            let sol = solution(&ch, seed + 100);
            let (b, e) = sinr_pair(&sol, &ch, &consts());
            let ob = scalar_sinr(&sol, &ch, &consts(), true);
            let oe = scalar_sinr(&sol, &ch, &consts(), false);
            assert!((b - ob).abs() <= 1e-12 * ob.max(1e-300), "{b} vs {ob}");
            assert!((e - oe).abs() <= 1e-12 * oe.max(1e-300), "{e} vs {oe}");
        }
    }

    #[test]
    fn secrecy_rate_examples() {
        assert_eq!(secrecy_rate(1.0, 1.0), 0.0);
        assert_eq!(secrecy_rate(1.0, 0.0), 1.0);
        assert_eq!(secrecy_rate(0.0, 7.0), 0.0);
    }

    #[test]
    fn streams_split_the_signal() {
        let ch = random_set(3, 4, 1, 9);
        let sol = solution(&ch, 10);
        let u = sol.upsilon.values();
        let (bl, _) = stream_sinr_pair(&sol.w, &sol.v, u, &ch, &consts(), Stream::Los);
        let (br, _) = stream_sinr_pair(&sol.w, &sol.v, u, &ch, &consts(), Stream::Ris);
        let (bc, _) = sinr_pair(&sol, &ch, &consts());
        // Amplitudes add coherently, so sqrt-SINRs obey the triangle inequality.
        assert!(bc.sqrt() <= bl.sqrt() + br.sqrt() + 1e-12);
    }

    proptest! {
        #[test]
        fn secrecy_rate_is_monotone(b in 0.0f64..100.0, e in 0.0f64..100.0, db in 0.0f64..10.0) {
            prop_assert!(secrecy_rate(b + db, e) >= secrecy_rate(b, e));
            prop_assert!(secrecy_rate(b, e + db) <= secrecy_rate(b, e));
        }

        #[test]
        fn common_scaling_preserves_sinr(seed in 0u64..500, k in 0.01f64..100.0) {
            let ch = random_set(3, 4, 2, seed);
            let sol = solution(&ch, seed + 7);
            let c = consts();
            let (b0, e0) = sinr_pair(&sol, &ch, &c);
            let scaled = BeamformingSolution {
                w: sol.w.map(|z| z * k.sqrt()),
                v: sol.v.map(|z| z * k.sqrt()),
                ..sol.clone()
            };
            let c2 = PhysicalConstants { noise_user: c.noise_user * k, noise_ris: c.noise_ris * k, ..c };
            let (b1, e1) = sinr_pair(&scaled, &ch, &c2);
            prop_assert!((b0 - b1).abs() <= 1e-10 * b0);
            prop_assert!((e0 - e1).abs() <= 1e-10 * e0);
        }
    }
}
