//! Image-method ray tracing for a two-wall street canyon.
//!
//! The scene is two parallel-ish wall segments in the horizontal plane with
//! the link endpoints between them. Traced paths are the direct line of
//! sight, one single bounce per wall, and optionally the south-then-north
//! double bounce. Antenna heights enter through the out-of-plane hypotenuse;
//! reflection geometry stays two-dimensional.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BandConfig, SPEED_OF_LIGHT};

// ---------------------------------------------------------------------------
// Scene
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    fn dist(self, o: Point2) -> f64 {
        self.sub(o).norm()
    }
}

/// Relative permittivity of a wall at one carrier frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermittivityEntry {
    pub frequency_hz: f64,
    pub eps: Complex64,
}

/// A wall segment with its per-band material.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point2,
    pub b: Point2,
    pub permittivity: Vec<PermittivityEntry>,
}

impl Wall {
    /// Material for the band whose tabulated frequency is closest (in log
    /// frequency) to the requested carrier.
    pub fn permittivity_at(&self, frequency_hz: f64) -> Result<Complex64> {
        self.permittivity
            .iter()
            .min_by(|p, q| {
                let dp = (frequency_hz / p.frequency_hz).ln().abs();
                let dq = (frequency_hz / q.frequency_hz).ln().abs();
                dp.partial_cmp(&dq).unwrap()
            })
            .map(|p| p.eps)
            .ok_or_else(|| Error::InvalidScene("wall has no permittivity entries".into()))
    }

    fn direction(&self) -> Point2 {
        self.b.sub(self.a)
    }

    /// Unit normal; sign is arbitrary, callers take magnitudes.
    fn normal(&self) -> Point2 {
        let d = self.direction();
        let n = Point2::new(-d.y, d.x);
        n.scale(1.0 / n.norm())
    }

    fn mirror(&self, p: Point2) -> Point2 {
        let n = self.normal();
        let signed = p.sub(self.a).dot(n);
        p.sub(n.scale(2.0 * signed))
    }

    /// Signed side of the wall line a point falls on.
    fn side(&self, p: Point2) -> f64 {
        self.direction().cross(p.sub(self.a))
    }
}

/// Antenna site: horizontal position plus mounting height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub x: f64,
    pub y: f64,
    pub height_m: f64,
}

impl Site {
    pub fn new(x: f64, y: f64, height_m: f64) -> Self {
        Site { x, y, height_m }
    }

    fn xy(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Two-wall canyon scene with one transmitter and one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryScene {
    pub wall_north: Wall,
    pub wall_south: Wall,
    pub tx: Site,
    pub rx: Site,
}

impl GeometryScene {
    /// A generic measurement layout: straight canyon along the x axis,
    /// lamp-post transmitter at 3 m, cart receiver at 1.2 m. Coordinates are
    /// representative, not surveyed; adjust `rx`/`tx` freely.
    pub fn street_canyon_preset(width_m: f64) -> Result<Self> {
        if !(width_m.is_finite() && width_m > 0.0) {
            return Err(Error::InvalidScene("canyon width must be positive".into()));
        }
        let materials = vec![
            PermittivityEntry { frequency_hz: 154.0e9, eps: Complex64::new(6.08, -0.153) },
            PermittivityEntry { frequency_hz: 300.0e9, eps: Complex64::new(5.24, -0.38) },
        ];
        let scene = GeometryScene {
            wall_north: Wall {
                a: Point2::new(-60.0, width_m),
                b: Point2::new(260.0, width_m),
                permittivity: materials.clone(),
            },
            wall_south: Wall {
                a: Point2::new(-60.0, 0.0),
                b: Point2::new(260.0, 0.0),
                permittivity: materials,
            },
            tx: Site::new(0.0, 0.45 * width_m, 3.0),
            rx: Site::new(30.0, 0.55 * width_m, 1.2),
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for (label, wall) in [("north", &self.wall_north), ("south", &self.wall_south)] {
            if wall.direction().norm() < 1e-9 {
                return Err(Error::InvalidScene(format!("{label} wall is degenerate")));
            }
            if wall.permittivity.is_empty() {
                return Err(Error::InvalidScene(format!("{label} wall has no material")));
            }
            for entry in &wall.permittivity {
                if entry.eps.im > 0.0 {
                    return Err(Error::InvalidScene(format!(
                        "{label} wall permittivity must have non-positive imaginary part"
                    )));
                }
            }
        }
        if segments_intersect(&self.wall_north, &self.wall_south) {
            return Err(Error::InvalidScene("walls intersect".into()));
        }
        for (label, site) in [("tx", &self.tx), ("rx", &self.rx)] {
            if !(site.height_m.is_finite() && site.height_m > 0.0) {
                return Err(Error::InvalidScene(format!("{label} height must be positive")));
            }
            if !strictly_between(site.xy(), &self.wall_north, &self.wall_south) {
                return Err(Error::InvalidScene(format!("{label} must sit between the walls")));
            }
        }
        Ok(())
    }
}

fn strictly_between(p: Point2, north: &Wall, south: &Wall) -> bool {
    // On the inner side of each wall line: the side the other wall is on.
    let mid_north = north.a.add(north.b).scale(0.5);
    let mid_south = south.a.add(south.b).scale(0.5);
    let sn = north.side(p);
    let ss = south.side(p);
    sn * north.side(mid_south) > 0.0 && ss * south.side(mid_north) > 0.0
}

fn segments_intersect(w1: &Wall, w2: &Wall) -> bool {
    let d1 = w1.direction();
    let d2 = w2.direction();
    let denom = d1.cross(d2);
    if denom.abs() < 1e-12 {
        return false; // parallel
    }
    let r = w2.a.sub(w1.a);
    let t = r.cross(d2) / denom;
    let s = r.cross(d1) / denom;
    (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s)
}

// ---------------------------------------------------------------------------
// Propagation primitives
// ---------------------------------------------------------------------------

/// Free-space path loss `20 log10(4 pi d f / c)` [dB].
pub fn free_space_path_loss_db(distance_m: f64, frequency_hz: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(Error::InvalidScene(format!("distance must be positive, got {distance_m}")));
    }
    if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
        return Err(Error::InvalidScene("frequency must be positive".into()));
    }
    Ok(20.0
        * (4.0 * std::f64::consts::PI * distance_m * frequency_hz / SPEED_OF_LIGHT).log10())
}

/// Field polarization relative to the plane of incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Polarization {
    /// Electric field perpendicular to the plane of incidence. Vertical
    /// polarization hits the upright canyon walls this way.
    Te,
    /// Electric field within the plane of incidence.
    Tm,
}

/// Fresnel reflection coefficient of an air-to-dielectric boundary.
/// `incidence_rad` is measured from the surface normal.
pub fn fresnel_reflection(
    eps: Complex64,
    incidence_rad: f64,
    polarization: Polarization,
) -> Result<Complex64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&incidence_rad) {
        return Err(Error::InvalidScene(format!(
            "incidence angle must lie in [0, pi/2], got {incidence_rad}"
        )));
    }
    let cos_i = incidence_rad.cos();
    let sin2 = incidence_rad.sin().powi(2);
    let root = (eps - sin2).sqrt();
    let gamma = match polarization {
        Polarization::Te => (cos_i - root) / (cos_i + root),
        Polarization::Tm => (eps * cos_i - root) / (eps * cos_i + root),
    };
    Ok(gamma)
}

// ---------------------------------------------------------------------------
// Tracing
// ---------------------------------------------------------------------------

/// Mechanism of a traced or synthesized path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    /// Direct line of sight.
    Los,
    /// Single bounce off the north wall.
    SbNw,
    /// Single bounce off the south wall.
    SbSw,
    /// Double bounce, south wall then north wall.
    DbSwNw,
    /// Stochastic component without traced geometry.
    Random,
}

/// One reflection of a traced path.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Reflection {
    pub point: Point2,
    /// Incidence angle from the wall normal [rad].
    pub incidence_rad: f64,
    /// Complex reflection coefficient at that incidence.
    pub gamma: Complex64,
}

/// A traced propagation path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RayPath {
    pub kind: PathKind,
    /// Full 3D path length including the height hypotenuse [m].
    pub length_m: f64,
    /// Propagation delay, `length / c` [s].
    pub delay_s: f64,
    /// Departure azimuth at the transmitter [deg].
    pub aod_deg: f64,
    /// Arrival azimuth at the receiver [deg].
    pub aoa_deg: f64,
    /// Path gain: negative free-space loss plus reflection losses [dB].
    pub gain_db: f64,
    pub reflections: Vec<Reflection>,
}

/// Traces the requested path kinds through the scene. Bounce paths whose
/// reflection points fall outside the wall segments are omitted.
pub fn trace(scene: &GeometryScene, band: &BandConfig, kinds: &[PathKind]) -> Result<Vec<RayPath>> {
    scene.validate()?;
    let f = band.center_frequency_hz;
    let mut out = Vec::new();
    for kind in kinds {
        match kind {
            PathKind::Los => out.push(trace_los(scene, f)?),
            PathKind::SbNw => {
                if let Some(p) = trace_single_bounce(scene, &scene.wall_north, PathKind::SbNw, f)? {
                    out.push(p);
                }
            }
            PathKind::SbSw => {
                if let Some(p) = trace_single_bounce(scene, &scene.wall_south, PathKind::SbSw, f)? {
                    out.push(p);
                }
            }
            PathKind::DbSwNw => {
                if let Some(p) = trace_double_bounce(scene, f)? {
                    out.push(p);
                }
            }
            PathKind::Random => {
                return Err(Error::InvalidScene("random components are not traceable".into()))
            }
        }
    }
    Ok(out)
}

fn azimuth_deg(v: Point2) -> f64 {
    v.y.atan2(v.x).to_degrees().rem_euclid(360.0)
}

fn fold_height(inplane_m: f64, scene: &GeometryScene) -> f64 {
    let dh = scene.tx.height_m - scene.rx.height_m;
    (inplane_m * inplane_m + dh * dh).sqrt()
}

fn trace_los(scene: &GeometryScene, f: f64) -> Result<RayPath> {
    let tx = scene.tx.xy();
    let rx = scene.rx.xy();
    let length = fold_height(tx.dist(rx), scene);
    Ok(RayPath {
        kind: PathKind::Los,
        length_m: length,
        delay_s: length / SPEED_OF_LIGHT,
        aod_deg: azimuth_deg(rx.sub(tx)),
        aoa_deg: azimuth_deg(tx.sub(rx)),
        gain_db: -free_space_path_loss_db(length, f)?,
        reflections: Vec::new(),
    })
}

/// Intersection of the segment `from -> to` with the wall line. Returns the
/// point only if it lies strictly between the endpoints and within the wall
/// segment.
fn wall_crossing(wall: &Wall, from: Point2, to: Point2) -> Option<Point2> {
    let d = wall.direction();
    let leg = to.sub(from);
    let denom = leg.cross(d);
    if denom.abs() < 1e-12 {
        return None;
    }
    let s = wall.a.sub(from).cross(d) / denom;
    if !(s > 0.0 && s < 1.0) {
        return None;
    }
    let q = from.add(leg.scale(s));
    let t = q.sub(wall.a).dot(d) / d.dot(d);
    if !(0.0..=1.0).contains(&t) {
        return None;
    }
    Some(q)
}

fn incidence_from_normal(wall: &Wall, from: Point2, to: Point2) -> f64 {
    let u = to.sub(from);
    let cos = (u.dot(wall.normal()) / u.norm()).abs().clamp(0.0, 1.0);
    cos.acos()
}

fn trace_single_bounce(
    scene: &GeometryScene,
    wall: &Wall,
    kind: PathKind,
    f: f64,
) -> Result<Option<RayPath>> {
    let tx = scene.tx.xy();
    let rx = scene.rx.xy();
    let image = wall.mirror(tx);
    let q = match wall_crossing(wall, image, rx) {
        Some(q) => q,
        None => return Ok(None),
    };

    let incidence = incidence_from_normal(wall, tx, q);
    let gamma = fresnel_reflection(wall.permittivity_at(f)?, incidence, Polarization::Te)?;
    let inplane = tx.dist(q) + q.dist(rx);
    let length = fold_height(inplane, scene);
    Ok(Some(RayPath {
        kind,
        length_m: length,
        delay_s: length / SPEED_OF_LIGHT,
        aod_deg: azimuth_deg(q.sub(tx)),
        aoa_deg: azimuth_deg(q.sub(rx)),
        gain_db: -free_space_path_loss_db(length, f)? + 20.0 * gamma.norm().log10(),
        reflections: vec![Reflection { point: q, incidence_rad: incidence, gamma }],
    }))
}

fn trace_double_bounce(scene: &GeometryScene, f: f64) -> Result<Option<RayPath>> {
    let tx = scene.tx.xy();
    let rx = scene.rx.xy();
    let south = &scene.wall_south;
    let north = &scene.wall_north;

    let t1 = south.mirror(tx);
    let t2 = north.mirror(t1);
    let q2 = match wall_crossing(north, t2, rx) {
        Some(q) => q,
        None => return Ok(None),
    };
    let q1 = match wall_crossing(south, t1, q2) {
        Some(q) => q,
        None => return Ok(None),
    };

    let inc1 = incidence_from_normal(south, tx, q1);
    let inc2 = incidence_from_normal(north, q1, q2);
    let g1 = fresnel_reflection(south.permittivity_at(f)?, inc1, Polarization::Te)?;
    let g2 = fresnel_reflection(north.permittivity_at(f)?, inc2, Polarization::Te)?;

    let inplane = tx.dist(q1) + q1.dist(q2) + q2.dist(rx);
    let length = fold_height(inplane, scene);
    Ok(Some(RayPath {
        kind: PathKind::DbSwNw,
        length_m: length,
        delay_s: length / SPEED_OF_LIGHT,
        aod_deg: azimuth_deg(q1.sub(tx)),
        aoa_deg: azimuth_deg(q2.sub(rx)),
        gain_db: -free_space_path_loss_db(length, f)?
            + 20.0 * g1.norm().log10()
            + 20.0 * g2.norm().log10(),
        reflections: vec![
            Reflection { point: q1, incidence_rad: inc1, gamma: g1 },
            Reflection { point: q2, incidence_rad: inc2, gamma: g2 },
        ],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-9;

    fn band_154() -> BandConfig {
        BandConfig::preset_154ghz()
    }

    fn simple_scene() -> GeometryScene {
        GeometryScene::street_canyon_preset(22.0).unwrap()
    }

    // -- free-space loss -----------------------------------------------------

    #[test]
    fn fspl_is_zero_at_the_algebraic_distance() {
        let f = 154.0e9;
        let d = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f);
        assert!(free_space_path_loss_db(d, f).unwrap().abs() < TOL);
    }

    #[test]
    fn fspl_at_ten_meters_is_about_96_db() {
        let fspl = free_space_path_loss_db(10.0, 154.0e9).unwrap();
        assert!((fspl - 96.2).abs() < 0.05, "got {fspl}");
    }

    #[test]
    fn doubling_distance_adds_six_db() {
        let a = free_space_path_loss_db(10.0, 300.0e9).unwrap();
        let b = free_space_path_loss_db(20.0, 300.0e9).unwrap();
        assert!((b - a - 20.0 * 2.0f64.log10()).abs() < TOL);
    }

    #[test]
    fn non_positive_distance_is_rejected() {
        assert!(free_space_path_loss_db(0.0, 1e9).is_err());
        assert!(free_space_path_loss_db(-3.0, 1e9).is_err());
    }

    // -- Fresnel -------------------------------------------------------------

    #[test]
    fn vacuum_boundary_does_not_reflect() {
        let g = fresnel_reflection(Complex64::new(1.0, 0.0), 0.4, Polarization::Te).unwrap();
        assert!(g.norm() < TOL);
    }

    #[test]
    fn normal_incidence_matches_the_closed_form() {
        let eps = Complex64::new(6.08, -0.153);
        let expected = (Complex64::new(1.0, 0.0) - eps.sqrt())
            / (Complex64::new(1.0, 0.0) + eps.sqrt());
        let g = fresnel_reflection(eps, 0.0, Polarization::Te).unwrap();
        assert!((g - expected).norm() < TOL);
        assert!((g.norm() - 0.423).abs() < 1e-3, "|Gamma| = {}", g.norm());
    }

    #[test]
    fn grazing_incidence_reflects_fully() {
        let eps = Complex64::new(5.24, -0.38);
        for pol in [Polarization::Te, Polarization::Tm] {
            let g = fresnel_reflection(eps, std::f64::consts::FRAC_PI_2 - 1e-6, pol).unwrap();
            assert!(g.norm() > 0.999, "{pol:?} grazing |Gamma| = {}", g.norm());
        }
    }

    #[test]
    fn polarizations_split_away_from_normal_incidence() {
        let eps = Complex64::new(6.08, -0.153);
        let te = fresnel_reflection(eps, 1.0, Polarization::Te).unwrap();
        let tm = fresnel_reflection(eps, 1.0, Polarization::Tm).unwrap();
        assert!((te.norm() - tm.norm()).abs() > 0.05);
        assert!(tm.norm() < te.norm(), "parallel polarization dips toward Brewster");
    }

    #[test]
    fn physical_materials_never_amplify() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let eps = Complex64::new(
                1.0 + 9.0 * rng.random::<f64>(),
                -2.0 * rng.random::<f64>(),
            );
            let angle = rng.random::<f64>() * std::f64::consts::FRAC_PI_2;
            for pol in [Polarization::Te, Polarization::Tm] {
                let g = fresnel_reflection(eps, angle, pol).unwrap();
                assert!(g.norm() <= 1.0 + 1e-12, "|Gamma| = {} for eps {eps}", g.norm());
            }
        }
    }

    // -- tracing -------------------------------------------------------------

    #[test]
    fn los_length_folds_the_height_difference() {
        let scene = simple_scene();
        let paths = trace(&scene, &band_154(), &[PathKind::Los]).unwrap();
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        let dx = scene.rx.x - scene.tx.x;
        let dy = scene.rx.y - scene.tx.y;
        let dh = scene.tx.height_m - scene.rx.height_m;
        let expected = (dx * dx + dy * dy + dh * dh).sqrt();
        assert!((p.length_m - expected).abs() < TOL);
        assert!((p.delay_s * SPEED_OF_LIGHT - p.length_m).abs() < 1e-12 * p.length_m);
        assert!((p.gain_db + free_space_path_loss_db(p.length_m, 154.0e9).unwrap()).abs() < TOL);
    }

    #[test]
    fn mirror_symmetric_bounce_reflects_at_the_midpoint() {
        // Tx and Rx both 8 m from the south wall, 30 m apart.
        let mut scene = simple_scene();
        scene.tx = Site::new(0.0, 8.0, 2.0);
        scene.rx = Site::new(30.0, 8.0, 2.0);
        let paths = trace(&scene, &band_154(), &[PathKind::SbSw]).unwrap();
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        let q = p.reflections[0].point;
        assert!((q.x - 15.0).abs() < TOL);
        assert!(q.y.abs() < TOL);
        let expected = (30.0f64 * 30.0 + 16.0 * 16.0).sqrt();
        assert!((p.length_m - expected).abs() < TOL, "equal heights, no fold");
    }

    #[test]
    fn bounce_is_omitted_when_the_wall_segment_ends_early() {
        let mut scene = simple_scene();
        scene.wall_south.a = Point2::new(-60.0, 0.0);
        scene.wall_south.b = Point2::new(-55.0, 0.0);
        let paths = trace(&scene, &band_154(), &[PathKind::SbSw, PathKind::Los]).unwrap();
        assert_eq!(paths.len(), 1, "only the LoS path remains");
        assert_eq!(paths[0].kind, PathKind::Los);
    }

    #[test]
    fn reflections_obey_the_specular_law() {
        let scene = simple_scene();
        let paths = trace(
            &scene,
            &band_154(),
            &[PathKind::SbNw, PathKind::SbSw, PathKind::DbSwNw],
        )
        .unwrap();
        assert_eq!(paths.len(), 3);
        for p in &paths {
            let mut hops = vec![scene.tx.xy()];
            hops.extend(p.reflections.iter().map(|r| r.point));
            hops.push(scene.rx.xy());
            for (i, r) in p.reflections.iter().enumerate() {
                let wall = if r.point.y > 1.0 { &scene.wall_north } else { &scene.wall_south };
                let inc = incidence_from_normal(wall, hops[i], hops[i + 1]);
                let out = incidence_from_normal(wall, hops[i + 1], hops[i + 2]);
                assert!((inc - out).abs() < 1e-9, "{:?} hop {i}: {inc} vs {out}", p.kind);
                assert!((inc - r.incidence_rad).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bounce_paths_are_longer_than_the_line_of_sight() {
        let scene = simple_scene();
        let paths = trace(
            &scene,
            &band_154(),
            &[PathKind::Los, PathKind::SbNw, PathKind::SbSw, PathKind::DbSwNw],
        )
        .unwrap();
        let los = paths.iter().find(|p| p.kind == PathKind::Los).unwrap().length_m;
        for p in &paths {
            assert!(p.length_m >= los - TOL, "{:?} shorter than LoS", p.kind);
        }
    }

    #[test]
    fn double_bounce_leg_sum_matches_the_image_distance() {
        let scene = simple_scene();
        let paths = trace(&scene, &band_154(), &[PathKind::DbSwNw]).unwrap();
        assert_eq!(paths.len(), 1);
        let p = &paths[0];
        let t2 = scene.wall_north.mirror(scene.wall_south.mirror(scene.tx.xy()));
        let dh = scene.tx.height_m - scene.rx.height_m;
        let inplane = t2.dist(scene.rx.xy());
        let expected = (inplane * inplane + dh * dh).sqrt();
        assert!((p.length_m - expected).abs() < 1e-9);
    }

    #[test]
    fn single_bounce_length_matches_brute_force_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let width = 15.0 + 15.0 * rng.random::<f64>();
            let mut scene = GeometryScene::street_canyon_preset(width).unwrap();
            scene.tx =
                Site::new(5.0 * rng.random::<f64>(), 2.0 + (width - 4.0) * rng.random::<f64>(), 3.0);
            scene.rx = Site::new(
                20.0 + 60.0 * rng.random::<f64>(),
                2.0 + (width - 4.0) * rng.random::<f64>(),
                1.2,
            );
            for (wall, kind) in
                [(&scene.wall_north, PathKind::SbNw), (&scene.wall_south, PathKind::SbSw)]
            {
                let traced = trace(&scene, &band_154(), &[kind]).unwrap();
                let p = &traced[0];
                let mut best = f64::INFINITY;
                let samples = 100_000;
                for k in 0..=samples {
                    let t = k as f64 / samples as f64;
                    let q = wall.a.add(wall.direction().scale(t));
                    let d = scene.tx.xy().dist(q) + q.dist(scene.rx.xy());
                    best = best.min(d);
                }
                let dh = scene.tx.height_m - scene.rx.height_m;
                let expected = (best * best + dh * dh).sqrt();
                assert!(
                    (p.length_m - expected).abs() < 1e-6,
                    "{kind:?}: image {} vs search {expected}",
                    p.length_m
                );
            }
        }
    }

    #[test]
    fn gains_stack_reflection_losses() {
        let scene = simple_scene();
        let paths = trace(&scene, &band_154(), &[PathKind::SbNw]).unwrap();
        let p = &paths[0];
        let fspl = free_space_path_loss_db(p.length_m, 154.0e9).unwrap();
        let gamma_db = 20.0 * p.reflections[0].gamma.norm().log10();
        assert!((p.gain_db - (-fspl + gamma_db)).abs() < TOL);
        assert!(p.gain_db < -fspl, "reflection must lose power");
    }

    // -- validation ----------------------------------------------------------

    #[test]
    fn outside_sites_are_rejected() {
        let mut scene = simple_scene();
        scene.rx = Site::new(10.0, 30.0, 1.2);
        assert!(matches!(scene.validate(), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn intersecting_walls_are_rejected() {
        let mut scene = simple_scene();
        scene.wall_north.a = Point2::new(-60.0, -5.0);
        assert!(matches!(scene.validate(), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn positive_imaginary_permittivity_is_rejected() {
        let mut scene = simple_scene();
        scene.wall_north.permittivity[0].eps = Complex64::new(6.08, 0.153);
        assert!(matches!(scene.validate(), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn scene_round_trips_through_json() {
        let scene = simple_scene();
        let text = serde_json::to_string_pretty(&scene).unwrap();
        let back: GeometryScene = serde_json::from_str(&text).unwrap();
        assert_eq!(scene, back);
    }

    #[test]
    fn material_lookup_picks_the_nearest_band() {
        let scene = simple_scene();
        let eps154 = scene.wall_north.permittivity_at(154.0e9).unwrap();
        let eps300 = scene.wall_north.permittivity_at(280.0e9).unwrap();
        assert_eq!(eps154, Complex64::new(6.08, -0.153));
        assert_eq!(eps300, Complex64::new(5.24, -0.38));
    }
}
