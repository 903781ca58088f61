//! Propagation channels for one scenario realization.
//!
//! Link classes:
//!
//! | link                 | model                          |
//! |----------------------|--------------------------------|
//! | BS -> RIS-1 (`G`)    | Rician, steering-vector LoS    |
//! | RIS -> user (`h_k`)  | Rayleigh                       |
//! | RIS-1 -> horn-1      | free-space spherical wave      |
//! | horn-2 -> RIS-2      | free-space spherical wave      |
//!
//! Users `0..K-1` are served by reflection from face 1 and user `K-1` by the
//! relay path through face 2.

mod dump;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::units::db_to_linear;
use crate::{CMatrix, CVector, Error, Result, C64};

pub use dump::{read_channel_dump, write_channel_dump};

pub type Point3 = [f64; 3];

/// Log-distance path loss `C0 (d0 / d)^kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub c0_db: f64,
    pub d0_m: f64,
    pub kappa: f64,
}

impl PathLossParams {
    pub fn new(c0_db: f64, d0_m: f64, kappa: f64) -> Result<Self> {
        let p = Self { c0_db, d0_m, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d0_m > 0.0 && self.d0_m.is_finite()) {
            return Err(Error::Domain(format!(
                "reference distance must be positive, got {}",
                self.d0_m
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "path-loss exponent must be nonnegative, got {}",
                self.kappa
            )));
        }
        if !self.c0_db.is_finite() {
            return Err(Error::Domain("reference gain must be finite".into()));
        }
        Ok(())
    }
}

/// Path-loss parameters for every link class of the scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPathLoss {
    /// BS to RIS-1 link.
    pub bs_ris: PathLossParams,
    /// Rician K-factor of the BS to RIS-1 link, in dB.
    pub bs_ris_rician_factor_db: f64,
    /// RIS to user links.
    pub ris_user: PathLossParams,
}

impl Default for LinkPathLoss {
    fn default() -> Self {
        Self {
            bs_ris: PathLossParams {
                c0_db: -30.0,
                d0_m: 1.0,
                kappa: 2.5,
            },
            bs_ris_rician_factor_db: 3.0,
            ris_user: PathLossParams {
                c0_db: -30.0,
                d0_m: 1.0,
                kappa: 3.0,
            },
        }
    }
}

/// Azimuth/elevation pair in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Direction {
    pub azimuth: f64,
    pub elevation: f64,
}

/// Physical layout of the scenario.
///
/// The RIS is a planar array in the local y-z plane centered at
/// `ris_position`; face 1 looks towards -x (the BS side) and face 2 towards +x.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioGeometry {
    pub bs_position: Point3,
    pub ris_position: Point3,
    pub user_positions: Vec<Point3>,
    /// Horn antenna 1 (face 1 side) and horn antenna 2 (face 2 side), relative
    /// to the RIS center.
    pub horn_offsets: [Point3; 2],
    /// Inter-element spacing of both the BS array and the RIS, in wavelengths.
    pub element_spacing: f64,
    pub carrier_wavelength: f64,
    pub n_antennas: usize,
    pub n_elements: usize,
    /// Departure direction of the LoS component at the BS array.
    pub los_departure: Direction,
    /// Arrival direction of the LoS component at the RIS.
    pub los_arrival: Direction,
}

impl ScenarioGeometry {
    /// BS at the origin, RIS 50 m down the x axis, `n_users - 1` users spread
    /// on a 2 m arc in front of face 1 and the last user 20 m behind face 2.
    pub fn default_layout(n_antennas: usize, n_elements: usize, n_users: usize) -> Self {
        let ris = [50.0, 0.0, 0.0];
        Self {
            bs_position: [0.0, 0.0, 0.0],
            ris_position: ris,
            user_positions: default_user_positions(ris, n_users, 2.0, 20.0),
            horn_offsets: [[-0.25, 0.0, 0.0], [0.25, 0.0, 0.0]],
            element_spacing: 0.5,
            carrier_wavelength: 0.1,
            n_antennas,
            n_elements,
            los_departure: Direction::default(),
            los_arrival: Direction::default(),
        }
    }

    pub fn n_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 || self.n_elements == 0 {
            return Err(Error::Domain(
                "antenna and element counts must be positive".into(),
            ));
        }
        if self.n_users() < 2 {
            return Err(Error::Domain(format!(
                "at least two users are required (one reflect-served, one relay-served), got {}",
                self.n_users()
            )));
        }
        if !(self.carrier_wavelength > 0.0 && self.carrier_wavelength.is_finite()) {
            return Err(Error::Domain("carrier wavelength must be positive".into()));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::Domain("element spacing must be positive".into()));
        }
        if distance(self.bs_position, self.ris_position) <= 0.0 {
            return Err(Error::Domain("BS and RIS positions coincide".into()));
        }
        for (k, u) in self.user_positions.iter().enumerate() {
            if distance(*u, self.ris_position) <= 0.0 {
                return Err(Error::Domain(format!("user {k} coincides with the RIS")));
            }
        }
        // Element to horn distances are checked by near_field_channel.
        Ok(())
    }

    /// Absolute positions of the RIS elements, row-major over a square grid
    /// of `ceil(sqrt(M))` columns in the y-z plane, centered on the RIS.
    pub fn element_positions(&self) -> Vec<Point3> {
        let cols = (self.n_elements as f64).sqrt().ceil() as usize;
        let rows = self.n_elements.div_ceil(cols);
        let pitch = self.element_spacing * self.carrier_wavelength;
        let y0 = (cols as f64 - 1.0) / 2.0;
        let z0 = (rows as f64 - 1.0) / 2.0;
        (0..self.n_elements)
            .map(|m| {
                let (r, c) = (m / cols, m % cols);
                [
                    self.ris_position[0],
                    self.ris_position[1] + (c as f64 - y0) * pitch,
                    self.ris_position[2] + (r as f64 - z0) * pitch,
                ]
            })
            .collect()
    }

    pub fn horn_positions(&self) -> [Point3; 2] {
        let add = |o: Point3| {
            [
                self.ris_position[0] + o[0],
                self.ris_position[1] + o[1],
                self.ris_position[2] + o[2],
            ]
        };
        [add(self.horn_offsets[0]), add(self.horn_offsets[1])]
    }
}

/// Default user layout around a RIS at `ris`.
pub fn default_user_positions(ris: Point3, n_users: usize, near_m: f64, far_m: f64) -> Vec<Point3> {
    let near = n_users.saturating_sub(1);
    let mut users: Vec<Point3> = (0..near)
        .map(|k| {
            // spread over +-60 degrees around the -x axis
            let theta = -PI / 3.0 + (2.0 * PI / 3.0) * (k as f64 + 0.5) / near as f64;
            [
                ris[0] - near_m * theta.cos(),
                ris[1] + near_m * theta.sin(),
                ris[2],
            ]
        })
        .collect();
    if n_users > 0 {
        users.push([ris[0] + far_m, ris[1], ris[2]]);
    }
    users
}

/// All channels of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// BS to RIS-1, `M x N`.
    pub g_bs_ris: CMatrix,
    /// RIS to user `k`; measured from face 1 for reflect users and from face 2
    /// for the relay user.
    pub h_users: Vec<CVector>,
    /// RIS-1 to horn antenna 1.
    pub g_t: CVector,
    /// Horn antenna 2 to RIS-2.
    pub g_r: CVector,
}

impl ChannelSet {
    pub fn n_elements(&self) -> usize {
        self.g_bs_ris.nrows()
    }

    pub fn n_antennas(&self) -> usize {
        self.g_bs_ris.ncols()
    }

    pub fn n_users(&self) -> usize {
        self.h_users.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.n_elements();
        if self.n_users() == 0 {
            return Err(Error::Dimension("channel set has no users".into()));
        }
        if self.h_users.iter().any(|h| h.len() != m) {
            return Err(Error::Dimension(format!(
                "every user channel must have length M = {m}"
            )));
        }
        if self.g_t.len() != m || self.g_r.len() != m {
            return Err(Error::Dimension(format!(
                "horn channels must have length M = {m}"
            )));
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        let all_finite = self.g_bs_ris.iter().all(finite)
            && self.h_users.iter().all(|h| h.iter().all(finite))
            && self.g_t.iter().all(finite)
            && self.g_r.iter().all(finite);
        if !all_finite {
            return Err(Error::Domain("channel contains non-finite entries".into()));
        }
        Ok(())
    }
}

pub fn distance(a: Point3, b: Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Linear power gain at distance `d` meters.
pub fn path_loss(d: f64, p: &PathLossParams) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!(
            "link distance must be positive and finite, got {d}"
        )));
    }
    p.validate()?;
    Ok(db_to_linear(p.c0_db) * (p.d0_m / d).powf(p.kappa))
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

fn check_gain(gain: f64) -> Result<()> {
    if gain > 0.0 && gain.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "channel gain must be positive and finite, got {gain}"
        )))
    }
}

/// I.i.d. `CN(0, gain)` entries.
pub fn rayleigh_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    gain: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_gain(gain)?;
    // column-major fill keeps the draw order tied to storage order
    Ok(CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, gain)))
}

/// Rician channel with a boresight (all-ones) LoS component.
pub fn rician_channel<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rician_factor_db: f64,
    gain: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    let los = CMatrix::from_element(rows, cols, C64::new(1.0, 0.0));
    rician_channel_with_los(&los, rician_factor_db, gain, rng)
}

/// `sqrt(gain) (sqrt(k/(1+k)) los + sqrt(1/(1+k)) nlos)` with `k` the linear
/// Rician factor. `+inf` dB gives pure LoS and `-inf` dB pure Rayleigh.
pub fn rician_channel_with_los<R: Rng + ?Sized>(
    los: &CMatrix,
    rician_factor_db: f64,
    gain: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    check_gain(gain)?;
    let (los_weight, nlos_weight) = if rician_factor_db.is_nan() {
        return Err(Error::Domain("Rician factor is NaN".into()));
    } else if rician_factor_db == f64::INFINITY {
        (1.0, 0.0)
    } else {
        let k = db_to_linear(rician_factor_db);
        ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
    };
    let amp = gain.sqrt();
    if nlos_weight == 0.0 {
        return Ok(los.map(|z| z * amp * los_weight));
    }
    let nlos = rayleigh_channel(los.nrows(), los.ncols(), 1.0, rng)?;
    Ok(los.zip_map(&nlos, |l, n| (l * los_weight + n * nlos_weight) * amp))
}

/// Uniform linear array response along the local y axis.
pub fn ula_steering(n: usize, spacing_wavelengths: f64, dir: Direction) -> CVector {
    let u = dir.azimuth.sin() * dir.elevation.cos();
    CVector::from_fn(n, |i, _| {
        C64::from_polar(1.0, 2.0 * PI * spacing_wavelengths * i as f64 * u)
    })
}

/// Planar array response for the element grid of [`ScenarioGeometry::element_positions`].
pub fn upa_steering(n: usize, spacing_wavelengths: f64, dir: Direction) -> CVector {
    let cols = (n as f64).sqrt().ceil() as usize;
    let uy = dir.azimuth.sin() * dir.elevation.cos();
    let uz = dir.elevation.sin();
    CVector::from_fn(n, |m, _| {
        let (r, c) = ((m / cols) as f64, (m % cols) as f64);
        C64::from_polar(1.0, 2.0 * PI * spacing_wavelengths * (c * uy + r * uz))
    })
}

/// Free-space spherical-wave response `lambda / (4 pi d) exp(-j 2 pi d / lambda)`
/// from every element to the horn.
pub fn near_field_channel(
    element_positions: &[Point3],
    horn_position: Point3,
    wavelength: f64,
) -> Result<CVector> {
    if !(wavelength > 0.0 && wavelength.is_finite()) {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {wavelength}"
        )));
    }
    let mut out = CVector::zeros(element_positions.len());
    for (entry, &p) in out.iter_mut().zip(element_positions) {
        let d = distance(p, horn_position);
        if !(d > 0.0) {
            return Err(Error::Domain(
                "RIS element coincides with the horn antenna".into(),
            ));
        }
        *entry = C64::from_polar(wavelength / (4.0 * PI * d), -2.0 * PI * d / wavelength);
    }
    Ok(out)
}

/// Draws every channel of one realization. Deterministic in `seed`.
pub fn generate_channels(
    geometry: &ScenarioGeometry,
    pl: &LinkPathLoss,
    seed: u64,
) -> Result<ChannelSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_channels_with_rng(geometry, pl, &mut rng)
}

pub fn generate_channels_with_rng<R: Rng + ?Sized>(
    geometry: &ScenarioGeometry,
    pl: &LinkPathLoss,
    rng: &mut R,
) -> Result<ChannelSet> {
    geometry.validate()?;
    let (m, n) = (geometry.n_elements, geometry.n_antennas);

    let bs_ris_gain = path_loss(distance(geometry.bs_position, geometry.ris_position), &pl.bs_ris)?;
    let los = upa_steering(m, geometry.element_spacing, geometry.los_arrival)
        * ula_steering(n, geometry.element_spacing, geometry.los_departure).adjoint();
    let g_bs_ris = rician_channel_with_los(&los, pl.bs_ris_rician_factor_db, bs_ris_gain, rng)?;

    let h_users = geometry
        .user_positions
        .iter()
        .map(|&u| {
            let gain = path_loss(distance(u, geometry.ris_position), &pl.ris_user)?;
            Ok(rayleigh_channel(m, 1, gain, rng)?.column(0).into_owned())
        })
        .collect::<Result<Vec<_>>>()?;

    let elements = geometry.element_positions();
    let [horn1, horn2] = geometry.horn_positions();
    let g_t = near_field_channel(&elements, horn1, geometry.carrier_wavelength)?;
    let g_r = near_field_channel(&elements, horn2, geometry.carrier_wavelength)?;

    Ok(ChannelSet {
        g_bs_ris,
        h_users,
        g_t,
        g_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn reference_pl(kappa: f64) -> PathLossParams {
        PathLossParams::new(-30.0, 1.0, kappa).unwrap()
    }

    #[test]
    fn path_loss_reference_values() {
        assert!((path_loss(1.0, &reference_pl(2.5)).unwrap() - 1e-3).abs() < 1e-18);
        let p = PathLossParams::new(-17.0, 3.0, 4.2).unwrap();
        assert!((path_loss(3.0, &p).unwrap() - db_to_linear(-17.0)).abs() < 1e-18);
        // log-domain cross-check: -30 - 25 log10(50) dB
        let expected = 10f64.powf((-30.0 - 25.0 * 50f64.log10()) / 10.0);
        let got = path_loss(50.0, &reference_pl(2.5)).unwrap();
        assert!((got - expected).abs() / expected < 1e-12);
        assert!((got - 5.656854e-8).abs() < 1e-13);
    }

    #[test]
    fn path_loss_rejects_nonpositive_distance() {
        assert!(matches!(path_loss(0.0, &reference_pl(2.5)), Err(Error::Domain(_))));
        assert!(matches!(path_loss(-1.0, &reference_pl(2.5)), Err(Error::Domain(_))));
        assert!(PathLossParams::new(-30.0, 0.0, 2.0).is_err());
        assert!(PathLossParams::new(-30.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn rician_infinite_factor_is_pure_los() {
        let h = rician_channel(3, 2, f64::INFINITY, 4.0, &mut rng(1)).unwrap();
        for z in h.iter() {
            assert_eq!(*z, C64::new(2.0, 0.0));
        }
    }

    #[test]
    fn rician_zero_factor_power() {
        // kappa_r = 0 corresponds to -inf dB
        let h = rician_channel(100, 100, f64::NEG_INFINITY, 2.0, &mut rng(2)).unwrap();
        let p = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e4;
        assert!((p - 2.0).abs() / 2.0 < 0.05, "{p}");
    }

    #[test]
    fn rician_three_db_moments() {
        let gain = 0.5;
        // 10 log10(2) dB, i.e. kappa_r = 2
        let h = rician_channel(100, 100, 10.0 * 2f64.log10(), gain, &mut rng(3)).unwrap();
        let second = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e4;
        assert!((second - gain).abs() / gain < 0.05, "{second}");
        let mean = h.iter().sum::<C64>() / 1e4;
        let los_fraction = mean.norm_sqr() / second;
        assert!((los_fraction - 2.0 / 3.0).abs() < 0.03, "{los_fraction}");
    }

    #[test]
    fn rayleigh_variance_and_independence() {
        let h = rayleigh_channel(100, 100, 1.0, &mut rng(4)).unwrap();
        let var = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e4;
        assert!((var - 1.0).abs() < 0.05, "{var}");

        let mut r = rng(5);
        let draws: Vec<CMatrix> = (0..10_000)
            .map(|_| rayleigh_channel(2, 1, 1.0, &mut r).unwrap())
            .collect();
        let corr = draws.iter().map(|d| d[(0, 0)] * d[(1, 0)].conj()).sum::<C64>() / 1e4;
        assert!(corr.norm() < 0.05, "{corr}");
    }

    #[test]
    fn rayleigh_rejects_zero_gain() {
        assert!(rayleigh_channel(2, 2, 0.0, &mut rng(0)).is_err());
        assert!(rician_channel(2, 2, 3.0, 0.0, &mut rng(0)).is_err());
    }

    #[test]
    fn near_field_single_element_at_one_wavelength() {
        let lambda = 0.1;
        let h = near_field_channel(&[[0.0, 0.0, 0.0]], [lambda, 0.0, 0.0], lambda).unwrap();
        assert!((h[0].norm() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(h[0].im.abs() < 1e-15 && h[0].re > 0.0);
    }

    #[test]
    fn near_field_doubling_distance() {
        let lambda = 0.1;
        let d = 0.37;
        let a = near_field_channel(&[[0.0; 3]], [d, 0.0, 0.0], lambda).unwrap()[0];
        let b = near_field_channel(&[[0.0; 3]], [2.0 * d, 0.0, 0.0], lambda).unwrap()[0];
        assert!((b.norm() - a.norm() / 2.0).abs() < 1e-15);
        let shift = (b / a).arg();
        let expected = (-2.0 * PI * d / lambda).rem_euclid(2.0 * PI);
        let diff = (shift.rem_euclid(2.0 * PI) - expected).abs();
        assert!(diff < 1e-9 || (diff - 2.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn near_field_reciprocity_and_coincidence() {
        let elems = [[0.0, 0.1, 0.2], [0.0, -0.3, 0.05]];
        let horn = [0.25, 0.0, 0.0];
        let fwd = near_field_channel(&elems, horn, 0.1).unwrap();
        for (m, e) in elems.iter().enumerate() {
            let back = near_field_channel(&[horn], *e, 0.1).unwrap();
            assert_eq!(back[0].norm(), fwd[m].norm());
        }
        assert!(near_field_channel(&[horn], horn, 0.1).is_err());
    }

    #[test]
    fn default_layout_distances() {
        let g = ScenarioGeometry::default_layout(6, 64, 4);
        assert_eq!(distance(g.bs_position, g.ris_position), 50.0);
        for u in &g.user_positions[..3] {
            assert!((distance(*u, g.ris_position) - 2.0).abs() < 1e-12);
            assert!(u[0] < g.ris_position[0]);
        }
        assert!((distance(g.user_positions[3], g.ris_position) - 20.0).abs() < 1e-12);
        assert_eq!(g.element_positions().len(), 64);
    }

    #[test]
    fn geometry_requires_two_users() {
        let g = ScenarioGeometry::default_layout(6, 16, 1);
        assert!(g.validate().is_err());
        assert!(generate_channels(&g, &LinkPathLoss::default(), 0).is_err());
    }

    #[test]
    fn generated_dimensions_and_determinism() {
        let g = ScenarioGeometry::default_layout(6, 64, 4);
        let pl = LinkPathLoss::default();
        let a = generate_channels(&g, &pl, 42).unwrap();
        let b = generate_channels(&g, &pl, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.g_bs_ris.shape(), (64, 6));
        assert_eq!(a.h_users.len(), 4);
        assert!(a.h_users.iter().all(|h| h.len() == 64));
        assert_eq!(a.g_t.len(), 64);
        a.validate().unwrap();
        let c = generate_channels(&g, &pl, 43).unwrap();
        assert_ne!(a, c);
    }
}
