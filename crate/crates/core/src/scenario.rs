//! Geometry and propagation: uniform linear arrays, line-of-sight rank-1
//! channels, power-law path loss and the IRS phase profile.
//!
//! Angle convention: every array lies along the global x-axis, and the
//! angle of a link at a node is the direction of the far node measured from
//! the positive x-axis, folded into `[0, pi]`. A ULA along x only sees
//! `cos(theta)`, so folding loses nothing.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JcmError, Result};
use crate::linalg::{c, cis, outer, CMat, CVec};
use crate::signal::ScenarioConfig;

/// Uniform linear array description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawArraySpec")]
pub struct ArraySpec {
    pub num_antennas: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
}

#[derive(Deserialize)]
struct RawArraySpec {
    num_antennas: usize,
    element_spacing: Option<f64>,
    #[serde(default = "default_wavelength")]
    wavelength: f64,
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH
}

/// 3 GHz carrier. Only the spacing-to-wavelength ratio enters the model.
pub const DEFAULT_WAVELENGTH: f64 = 0.1;

impl TryFrom<RawArraySpec> for ArraySpec {
    type Error = JcmError;

    fn try_from(raw: RawArraySpec) -> Result<Self> {
        let spec = ArraySpec {
            num_antennas: raw.num_antennas,
            element_spacing: raw.element_spacing.unwrap_or(raw.wavelength / 2.0),
            wavelength: raw.wavelength,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ArraySpec {
    /// Array with half-wavelength spacing.
    pub fn half_wavelength(num_antennas: usize, wavelength: f64) -> Self {
        Self {
            num_antennas,
            element_spacing: wavelength / 2.0,
            wavelength,
        }
    }

    pub fn with_antennas(num_antennas: usize) -> Self {
        Self::half_wavelength(num_antennas, DEFAULT_WAVELENGTH)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(JcmError::InvalidConfig("array needs at least one antenna".into()));
        }
        if !(self.element_spacing > 0.0) || !(self.wavelength > 0.0) {
            return Err(JcmError::InvalidConfig(
                "element spacing and wavelength must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Normalized ULA steering vector `h(theta)`.
///
/// Entry `n` (1-based) is `e^{j 2 pi Psi(n)} / sqrt(N)` with
/// `Psi(n) = -(n - (N+1)/2) d cos(theta) / lambda`.
pub fn steering_vector(theta: f64, array: &ArraySpec) -> CVec {
    let n = array.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let centre = (n as f64 + 1.0) / 2.0;
    let k = array.element_spacing * theta.cos() / array.wavelength;
    CVec::from_fn(n, |i, _| {
        let psi = -((i + 1) as f64 - centre) * k;
        cis(2.0 * PI * psi) * scale
    })
}

/// Line-of-sight channel `h_r(theta_r) h_t(theta_t)^H`, shaped
/// `rx.num_antennas x tx.num_antennas`.
pub fn rank1_channel(theta_r: f64, theta_t: f64, rx: &ArraySpec, tx: &ArraySpec) -> CMat {
    outer(&steering_vector(theta_r, rx), &steering_vector(theta_t, tx))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NodeLayout {
    pub alice_pos: Point,
    pub irs_pos: Point,
    pub bob_pos: Point,
    pub mallory_pos: Point,
}

impl Default for NodeLayout {
    fn default() -> Self {
        Self {
            alice_pos: Point::new(0.0, 0.0),
            irs_pos: Point::new(50.0, 50.0),
            bob_pos: Point::new(500.0, 0.0),
            mallory_pos: Point::new(400.0, -50.0),
        }
    }
}

impl NodeLayout {
    pub fn validate(&self) -> Result<()> {
        let nodes = [
            ("Alice", self.alice_pos),
            ("IRS", self.irs_pos),
            ("Bob", self.bob_pos),
            ("Mallory", self.mallory_pos),
        ];
        for (i, (na, pa)) in nodes.iter().enumerate() {
            for (nb, pb) in &nodes[i + 1..] {
                if !(pa.distance(pb) > 0.0) {
                    return Err(JcmError::DegenerateGeometry(format!(
                        "{na} and {nb} are coincident"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Directed propagation links between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Link {
    AliceIrs,
    IrsBob,
    AliceBob,
    MalloryIrs,
    MalloryBob,
    /// Only used by the eavesdropper rate model.
    AliceMallory,
    /// Only used by the eavesdropper rate model.
    IrsMallory,
}

impl Link {
    pub const ALL: [Link; 7] = [
        Link::AliceIrs,
        Link::IrsBob,
        Link::AliceBob,
        Link::MalloryIrs,
        Link::MalloryBob,
        Link::AliceMallory,
        Link::IrsMallory,
    ];

    /// (transmitter, receiver) positions.
    pub fn endpoints(&self, layout: &NodeLayout) -> (Point, Point) {
        let l = layout;
        match self {
            Link::AliceIrs => (l.alice_pos, l.irs_pos),
            Link::IrsBob => (l.irs_pos, l.bob_pos),
            Link::AliceBob => (l.alice_pos, l.bob_pos),
            Link::MalloryIrs => (l.mallory_pos, l.irs_pos),
            Link::MalloryBob => (l.mallory_pos, l.bob_pos),
            Link::AliceMallory => (l.alice_pos, l.mallory_pos),
            Link::IrsMallory => (l.irs_pos, l.mallory_pos),
        }
    }

    pub fn distance(&self, layout: &NodeLayout) -> f64 {
        let (a, b) = self.endpoints(layout);
        a.distance(&b)
    }
}

/// Departure angle at the transmitter and arrival angle at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAngles {
    pub theta_t: f64,
    pub theta_r: f64,
}

fn folded_angle(dx: f64, dy: f64) -> f64 {
    dy.atan2(dx).abs()
}

pub fn link_angles(link: Link, layout: &NodeLayout) -> Result<LinkAngles> {
    let (tx, rx) = link.endpoints(layout);
    let (dx, dy) = (rx.x - tx.x, rx.y - tx.y);
    if !(dx.hypot(dy) > 0.0) {
        return Err(JcmError::DegenerateGeometry(format!("{link:?} has zero length")));
    }
    Ok(LinkAngles {
        theta_t: folded_angle(dx, dy),
        theta_r: folded_angle(-dx, -dy),
    })
}

pub fn angles_from_layout(layout: &NodeLayout) -> Result<BTreeMap<Link, LinkAngles>> {
    layout.validate()?;
    Link::ALL
        .iter()
        .map(|&l| link_angles(l, layout).map(|a| (l, a)))
        .collect()
}

/// Power-law path loss model `(d0 / d)^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLoss {
    pub exponent: f64,
    pub ref_distance: f64,
}

impl Default for PathLoss {
    fn default() -> Self {
        Self {
            exponent: 2.0,
            ref_distance: 1.0,
        }
    }
}

impl PathLoss {
    pub fn gain(&self, distance: f64) -> Result<f64> {
        path_gain(distance, self.exponent, self.ref_distance)
    }

    /// Two-hop gain through the IRS.
    pub fn cascaded(&self, d1: f64, d2: f64) -> Result<f64> {
        Ok(self.gain(d1)? * self.gain(d2)?)
    }
}

pub fn path_gain(distance: f64, exponent: f64, ref_distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(JcmError::DegenerateGeometry(format!(
            "non-positive link distance {distance}"
        )));
    }
    Ok((ref_distance / distance).powf(exponent))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IrsMode {
    #[default]
    Random,
    Aligned,
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IrsPhases {
    pub phases: Vec<f64>,
    pub mode: IrsMode,
}

impl IrsPhases {
    pub fn new(phases: Vec<f64>, mode: IrsMode) -> Self {
        let phases = phases.into_iter().map(|p| p.rem_euclid(2.0 * PI)).collect();
        Self { phases, mode }
    }

    /// `diag(e^{j phi_1}, ..., e^{j phi_M})`.
    pub fn matrix(&self) -> CMat {
        let d = CVec::from_iterator(self.phases.len(), self.phases.iter().map(|&p| cis(p)));
        CMat::from_diagonal(&d)
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Linear power gains of the four jamming/legitimate paths plus the two
/// Alice-to-Mallory paths used for the eavesdropper rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGains {
    pub alice_irs_bob: f64,
    pub alice_bob: f64,
    pub mallory_irs_bob: f64,
    pub mallory_bob: f64,
    pub alice_irs_mallory: f64,
    pub alice_mallory: f64,
}

/// Every channel of the scenario. Matrices are stored in receive x transmit
/// orientation, i.e. as the conjugate-transposed channels of the signal
/// model (`irs_bob` is `H_IB^H`, `N_B x M`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub irs_bob: CMat,
    pub alice_irs: CMat,
    pub alice_bob: CMat,
    pub mallory_irs: CMat,
    pub mallory_bob: CMat,
    pub irs_mallory: CMat,
    pub alice_mallory: CMat,
    pub gains: PathGains,
    pub theta: IrsPhases,
    /// `H_A1`, `N_B x N_A`.
    pub alice_equiv: CMat,
    /// `H_M1`, `N_B x N_M`.
    pub mallory_equiv: CMat,
    /// Alice-to-Mallory equivalent channel, `N_M x N_A`.
    pub alice_mallory_equiv: CMat,
    pub angles: BTreeMap<Link, LinkAngles>,
    pub bob_array: ArraySpec,
}

/// The parts of the channel set a parametric estimator is allowed to know:
/// the reflected IRS-to-Bob response and Bob's arrival steering vector from
/// the IRS.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionGeometry {
    /// `H_IB^H Theta`, `N_B x M`.
    pub reflect: CMat,
    /// `h(theta_IB^r)`, length `N_B`.
    pub bob_steer: CVec,
}

impl ReflectionGeometry {
    pub fn num_rx(&self) -> usize {
        self.bob_steer.len()
    }

    pub fn num_elements(&self) -> usize {
        self.reflect.ncols()
    }
}

impl ChannelSet {
    /// Equivalent channel through the IRS and direct path:
    /// `sqrt(g_c) * hop2 * Theta * hop1 + sqrt(g_d) * direct`.
    pub fn equivalent(hop2: &CMat, theta: &CMat, hop1: &CMat, g_c: f64, direct: &CMat, g_d: f64) -> CMat {
        hop2 * theta * hop1 * c(g_c.sqrt(), 0.0) + direct * c(g_d.sqrt(), 0.0)
    }

    pub fn irs_bob_arrival(&self) -> CVec {
        steering_vector(self.angles[&Link::IrsBob].theta_r, &self.bob_array)
    }

    pub fn reflection_geometry(&self) -> ReflectionGeometry {
        ReflectionGeometry {
            reflect: &self.irs_bob * self.theta.matrix(),
            bob_steer: self.irs_bob_arrival(),
        }
    }

    pub fn num_bob(&self) -> usize {
        self.irs_bob.nrows()
    }
}

fn irs_phases(config: &ScenarioConfig, angles: &BTreeMap<Link, LinkAngles>, seed: u64) -> Result<IrsPhases> {
    let m = config.irs.num_antennas;
    match config.irs_mode {
        IrsMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let phases = (0..m).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            Ok(IrsPhases::new(phases, IrsMode::Random))
        }
        IrsMode::Aligned => {
            // Co-phase every element of h_I(t_IB)^H Theta h_I(r_AI).
            let out = steering_vector(angles[&Link::IrsBob].theta_t, &config.irs);
            let inc = steering_vector(angles[&Link::AliceIrs].theta_r, &config.irs);
            let phases = out.iter().zip(inc.iter()).map(|(o, i)| o.arg() - i.arg()).collect();
            Ok(IrsPhases::new(phases, IrsMode::Aligned))
        }
        IrsMode::Fixed => {
            let phases = config.irs_phases.clone().ok_or_else(|| {
                JcmError::InvalidConfig("irs_mode = fixed requires irs_phases".into())
            })?;
            if phases.len() != m {
                return Err(JcmError::InvalidConfig(format!(
                    "irs_phases has {} entries, IRS has {m} elements",
                    phases.len()
                )));
            }
            Ok(IrsPhases::new(phases, IrsMode::Fixed))
        }
    }
}

/// Build every channel of the scenario. A pure function of `(config, rng_seed)`;
/// the seed only drives random IRS phases.
pub fn build_channels(config: &ScenarioConfig, rng_seed: u64) -> Result<ChannelSet> {
    config.validate()?;
    let layout = &config.layout;
    let angles = angles_from_layout(layout)?;
    let (a, b, m, irs) = (&config.alice, &config.bob, &config.mallory, &config.irs);

    let ch = |link: Link, rx: &ArraySpec, tx: &ArraySpec| {
        let ang = angles[&link];
        rank1_channel(ang.theta_r, ang.theta_t, rx, tx)
    };
    let irs_bob = ch(Link::IrsBob, b, irs);
    let alice_irs = ch(Link::AliceIrs, irs, a);
    let alice_bob = ch(Link::AliceBob, b, a);
    let mallory_irs = ch(Link::MalloryIrs, irs, m);
    let mallory_bob = ch(Link::MalloryBob, b, m);
    let irs_mallory = ch(Link::IrsMallory, m, irs);
    let alice_mallory = ch(Link::AliceMallory, m, a);

    let pl = &config.path_loss;
    let dist = |l: Link| l.distance(layout);
    let gains = PathGains {
        alice_irs_bob: pl.cascaded(dist(Link::AliceIrs), dist(Link::IrsBob))?,
        alice_bob: pl.gain(dist(Link::AliceBob))?,
        mallory_irs_bob: pl.cascaded(dist(Link::MalloryIrs), dist(Link::IrsBob))?,
        mallory_bob: pl.gain(dist(Link::MalloryBob))?,
        alice_irs_mallory: pl.cascaded(dist(Link::AliceIrs), dist(Link::IrsMallory))?,
        alice_mallory: pl.gain(dist(Link::AliceMallory))?,
    };

    let theta = irs_phases(config, &angles, rng_seed)?;
    let tm = theta.matrix();
    let alice_equiv =
        ChannelSet::equivalent(&irs_bob, &tm, &alice_irs, gains.alice_irs_bob, &alice_bob, gains.alice_bob);
    let mallory_equiv = ChannelSet::equivalent(
        &irs_bob,
        &tm,
        &mallory_irs,
        gains.mallory_irs_bob,
        &mallory_bob,
        gains.mallory_bob,
    );
    let alice_mallory_equiv = ChannelSet::equivalent(
        &irs_mallory,
        &tm,
        &alice_irs,
        gains.alice_irs_mallory,
        &alice_mallory,
        gains.alice_mallory,
    );

    Ok(ChannelSet {
        irs_bob,
        alice_irs,
        alice_bob,
        mallory_irs,
        mallory_bob,
        irs_mallory,
        alice_mallory,
        gains,
        theta,
        alice_equiv,
        mallory_equiv,
        alice_mallory_equiv,
        angles,
        bob_array: *b,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = DMatrix::clone(m).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frob, I};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn assert_vec_close(a: &CVec, b: &CVec, tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn default_spacing_is_half_wavelength() {
        let raw: ArraySpec = toml::from_str("num_antennas = 4\nwavelength = 0.3").unwrap();
        assert_abs_diff_eq!(raw.element_spacing / raw.wavelength, 0.5);
    }

    #[test]
    fn invalid_arrays_rejected() {
        assert!(ArraySpec::half_wavelength(0, 1.0).validate().is_err());
        assert!(ArraySpec { num_antennas: 2, element_spacing: 0.0, wavelength: 1.0 }
            .validate()
            .is_err());
    }

    #[test]
    fn steering_broadside_is_uniform() {
        let h = steering_vector(PI / 2.0, &ArraySpec::half_wavelength(4, 1.0));
        assert_vec_close(&h, &CVec::from_element(4, c(0.5, 0.0)), 1e-15);
    }

    #[test]
    fn steering_endfire_two_elements() {
        let h = steering_vector(0.0, &ArraySpec::half_wavelength(2, 1.0));
        let s = 1.0 / 2f64.sqrt();
        assert_vec_close(&h, &CVec::from_vec(vec![I * s, -I * s]), 1e-15);
    }

    #[test]
    fn steering_sixty_degrees_three_elements() {
        let h = steering_vector(PI / 3.0, &ArraySpec::half_wavelength(3, 1.0));
        let s = 1.0 / 3f64.sqrt();
        assert_vec_close(&h, &CVec::from_vec(vec![I * s, c(s, 0.0), -I * s]), 1e-15);
    }

    #[test]
    fn broadside_channel_is_half_ones() {
        let a = ArraySpec::half_wavelength(2, 1.0);
        let h = rank1_channel(PI / 2.0, PI / 2.0, &a, &a);
        for z in h.iter() {
            assert!((z - c(0.5, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn angles_follow_x_axis_convention() {
        let layout = NodeLayout::default();
        let ang = angles_from_layout(&layout).unwrap();
        assert_abs_diff_eq!(ang[&Link::AliceBob].theta_t, 0.0);
        assert_abs_diff_eq!(ang[&Link::AliceIrs].theta_t, PI / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ang[&Link::MalloryBob].theta_r, PI - 0.5f64.atan(), epsilon = 1e-14);
    }

    #[test]
    fn coincident_nodes_are_degenerate() {
        let mut layout = NodeLayout::default();
        layout.bob_pos = layout.irs_pos;
        assert!(matches!(angles_from_layout(&layout), Err(JcmError::DegenerateGeometry(_))));
        assert!(matches!(path_gain(0.0, 2.0, 1.0), Err(JcmError::DegenerateGeometry(_))));
    }

    #[test]
    fn path_gain_power_law() {
        assert_abs_diff_eq!(path_gain(3.0, 2.0, 3.0).unwrap(), 1.0);
        assert_abs_diff_eq!(path_gain(10.0, 2.0, 1.0).unwrap(), 0.01, epsilon = 1e-15);
        let layout = NodeLayout::default();
        let pl = PathLoss::default();
        let g = pl
            .cascaded(Link::MalloryIrs.distance(&layout), Link::IrsBob.distance(&layout))
            .unwrap();
        let d_mi2 = 350.0f64.powi(2) + 100.0f64.powi(2);
        let d_ib2 = 450.0f64.powi(2) + 50.0f64.powi(2);
        assert_abs_diff_eq!(g, 1.0 / (d_mi2 * d_ib2), epsilon = 1e-24);
    }

    #[test]
    fn build_is_deterministic_and_theta_unitary() {
        let cfg = ScenarioConfig::default();
        let a = build_channels(&cfg, 42).unwrap();
        let b = build_channels(&cfg, 42).unwrap();
        assert_eq!(a, b);
        let t = a.theta.matrix();
        let eye = CMat::identity(t.nrows(), t.ncols());
        assert!(frob(&(t.adjoint() * &t - eye)) < 1e-13);
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                if i != j {
                    assert_eq!(t[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn physical_channels_rank_one_equivalents_rank_two() {
        let ch = build_channels(&ScenarioConfig::default(), 5).unwrap();
        for m in [&ch.irs_bob, &ch.alice_irs, &ch.alice_bob, &ch.mallory_irs, &ch.mallory_bob] {
            let sv = singular_values(m);
            assert!(sv[1] < 1e-12 * sv[0]);
        }
        for m in [&ch.alice_equiv, &ch.mallory_equiv] {
            let sv = singular_values(m);
            assert!(sv[2] < 1e-12 * sv[0]);
        }
    }

    #[test]
    fn equivalent_channel_recomputes_and_obeys_triangle_bound() {
        let ch = build_channels(&ScenarioConfig::default(), 9).unwrap();
        let g = ch.gains;
        let tm = ch.theta.matrix();
        let again = &ch.irs_bob * &tm * &ch.alice_irs * c(g.alice_irs_bob.sqrt(), 0.0)
            + &ch.alice_bob * c(g.alice_bob.sqrt(), 0.0);
        assert_eq!(again, ch.alice_equiv);
        let bound = g.alice_irs_bob.sqrt() * frob(&ch.irs_bob) * frob(&ch.alice_irs)
            + g.alice_bob.sqrt() * frob(&ch.alice_bob);
        assert!(frob(&ch.alice_equiv) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn aligned_mode_cophases_cascade() {
        let cfg = ScenarioConfig { irs_mode: IrsMode::Aligned, ..Default::default() };
        let ch = build_channels(&cfg, 0).unwrap();
        let out = steering_vector(ch.angles[&Link::IrsBob].theta_t, &cfg.irs);
        let inc = steering_vector(ch.angles[&Link::AliceIrs].theta_r, &cfg.irs);
        let s = (out.adjoint() * ch.theta.matrix() * inc)[(0, 0)];
        assert!((s.norm() - 1.0).abs() < 1e-12, "{s}");
        assert!(s.arg().abs() < 1e-12);
    }

    #[test]
    fn fixed_mode_requires_matching_phases() {
        let mut cfg = ScenarioConfig { irs_mode: IrsMode::Fixed, ..Default::default() };
        assert!(build_channels(&cfg, 0).is_err());
        cfg.irs_phases = Some(vec![0.3; cfg.irs.num_antennas]);
        let ch = build_channels(&cfg, 0).unwrap();
        assert!(ch.theta.phases.iter().all(|&p| (p - 0.3).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn steering_has_unit_norm(theta in 0.0..PI, n in 1usize..=64) {
            let h = steering_vector(theta, &ArraySpec::half_wavelength(n, 1.0));
            prop_assert!((h.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn steering_mirror_is_conjugate(theta in 0.0..PI, n in 1usize..=64) {
            let a = ArraySpec::half_wavelength(n, 1.0);
            let h = steering_vector(theta, &a);
            let g = steering_vector(PI - theta, &a);
            for (x, y) in h.iter().zip(g.iter()) {
                prop_assert!((x - y.conj()).norm() < 1e-12);
            }
        }

        #[test]
        fn rank1_channel_unit_frobenius(tr in 0.0..PI, tt in 0.0..PI, nr in 1usize..12, nt in 1usize..12) {
            let h = rank1_channel(tr, tt, &ArraySpec::with_antennas(nr), &ArraySpec::with_antennas(nt));
            prop_assert!((frob(&h) - 1.0).abs() < 1e-12);
            let sv = singular_values(&h);
            if sv.len() > 1 {
                prop_assert!(sv[1] <= 1e-12);
            }
        }
    }
}
