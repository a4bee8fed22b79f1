use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::RadarConfig;
use super::geometry::{Footprint, OpenRegion, Point2};

/// Point reflector in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    /// m
    pub range: f64,
    /// Degrees, 0 at boresight, positive towards +y.
    pub azimuth_deg: f64,
    /// m/s, positive when receding.
    pub radial_velocity: f64,
    /// Linear reflectivity.
    pub amplitude: f64,
}

impl Scatterer {
    pub fn position(&self) -> Point2 {
        Point2::from_polar(self.range, self.azimuth_deg.to_radians())
    }

    pub fn is_valid(&self, cfg: &RadarConfig) -> bool {
        self.range > 0.0
            && self.range <= cfg.max_range
            && self.azimuth_deg.abs() <= cfg.fov_deg / 2.0
            && self.radial_velocity.abs() <= cfg.unambig_vel
            && self.amplitude >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    pub open_region: OpenRegion,
    pub seed: u64,
}

/// Smallest and largest scatterer count sampled per car.
const SCATTERERS_PER_CAR: (usize, usize) = (8, 20);
const CAR_AMPLITUDE: (f64, f64) = (0.5, 1.5);

impl Scene {
    pub fn empty(cfg: &RadarConfig, seed: u64) -> Self {
        Self {
            scatterers: Vec::new(),
            open_region: OpenRegion {
                half_fov: cfg.half_fov(),
                max_range: cfg.max_range,
                footprints: Vec::new(),
            },
            seed,
        }
    }

    /// Populates the radar-facing edges of each footprint with scatterers.
    /// Points outside the FOV, or hidden behind another car, are dropped.
    /// Radial velocities follow from the sensor moving at `ego_velocity`
    /// over a static scene.
    pub fn from_footprints<R: Rng>(
        footprints: Vec<Footprint>,
        ego_velocity: Point2,
        cfg: &RadarConfig,
        seed: u64,
        rng: &mut R,
    ) -> Self {
        let mut scene = Self::empty(cfg, seed);
        for (idx, car) in footprints.iter().enumerate() {
            let edges = car.facing_edges(Point2::ORIGIN);
            let total: f64 = edges.iter().map(|(a, b)| b.sub(*a).norm()).sum();
            if edges.is_empty() || total <= 0.0 {
                continue;
            }
            let count = rng.random_range(SCATTERERS_PER_CAR.0..=SCATTERERS_PER_CAR.1);
            for _ in 0..count {
                let mut along = rng.random_range(0.0..total);
                let mut point = edges[0].0;
                for (a, b) in &edges {
                    let len = b.sub(*a).norm();
                    if along <= len {
                        point = a.add(b.sub(*a).scale(along / len));
                        break;
                    }
                    along -= len;
                }
                let amplitude = rng.random_range(CAR_AMPLITUDE.0..CAR_AMPLITUDE.1);
                if !scene.open_region.in_fov(point) {
                    continue;
                }
                let hidden = footprints
                    .iter()
                    .enumerate()
                    .any(|(j, f)| j != idx && f.intersects_segment(Point2::ORIGIN, point));
                if hidden {
                    continue;
                }
                let range = point.norm();
                let radial_velocity = -ego_velocity.dot(point) / range;
                scene.scatterers.push(Scatterer {
                    range,
                    azimuth_deg: point.azimuth().to_degrees(),
                    radial_velocity: radial_velocity.clamp(-cfg.unambig_vel, cfg.unambig_vel),
                    amplitude,
                });
            }
        }
        scene.open_region.footprints = footprints;
        scene
    }

    /// Scatterers of both scenes, occluders of both scenes.
    pub fn union(&self, other: &Scene) -> Scene {
        let mut out = self.clone();
        out.scatterers.extend_from_slice(&other.scatterers);
        out.open_region
            .footprints
            .extend_from_slice(&other.open_region.footprints);
        out
    }
}

/// Randomly placed cars fully inside the FOV, no ego motion. Placement gives
/// up on a car after a bounded number of rejected attempts, so crowded
/// requests may return fewer cars.
pub fn make_parking_scene(seed: u64, n_cars: usize, cfg: &RadarConfig) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = cfg.half_fov();
    let region = OpenRegion {
        half_fov: half,
        max_range: cfg.max_range,
        footprints: Vec::new(),
    };
    let mut cars: Vec<Footprint> = Vec::new();
    for _ in 0..n_cars {
        for _ in 0..500 {
            let range = rng.random_range(2.5..cfg.max_range - 2.0);
            let az = rng.random_range(-half * 0.9..half * 0.9);
            let center = Point2::from_polar(range, az);
            let radial = rng.random_bool(0.5);
            let jitter = rng.random_range(-0.2..0.2);
            let heading = if radial { az } else { az + core::f64::consts::FRAC_PI_2 } + jitter;
            let car = Footprint::rect(
                center,
                rng.random_range(4.2..4.9),
                rng.random_range(1.7..1.95),
                heading,
            );
            let inside = car
                .corners
                .iter()
                .all(|c| region.in_fov(*c) && c.norm() >= 1.0);
            if inside && !cars.iter().any(|o| o.overlaps(&car, 0.4)) {
                cars.push(car);
                break;
            }
        }
    }
    Scene::from_footprints(cars, Point2::ORIGIN, cfg, seed, &mut rng)
}

/// A persistent parking-lot world traversed by a side-looking sensor: rows
/// of perpendicular-parked cars with empty slots, the sensor driving along
/// the aisle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParkingLot {
    pub cars: Vec<Footprint>,
    /// m/s along world +y.
    pub ego_speed: f64,
    /// s between frames.
    pub frame_dt: f64,
    /// rad
    pub yaw_amplitude: f64,
    pub yaw_phase: f64,
    pub seed: u64,
}

impl ParkingLot {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1075);
        let mut cars = Vec::new();
        let near_row = rng.random_range(2.0..4.0);
        let aisle = rng.random_range(3.0..5.0);
        let rows = [
            (near_row, rng.random_range(0.45..0.8)),
            (near_row + 4.8 + aisle, rng.random_range(0.4..0.8)),
        ];
        for (edge_x, occupancy) in rows {
            let pitch = rng.random_range(2.5..2.9);
            let mut y = -20.0 + rng.random_range(0.0..pitch);
            while y < 40.0 {
                if rng.random_bool(occupancy) {
                    let length = rng.random_range(4.2..4.9);
                    let center = Point2::new(
                        edge_x + length / 2.0 + rng.random_range(0.0..0.3),
                        y + rng.random_range(-0.2..0.2),
                    );
                    let heading = rng.random_range(-0.1..0.1);
                    cars.push(Footprint::rect(center, length, rng.random_range(1.7..1.95), heading));
                }
                y += pitch;
            }
        }
        // the odd car stopped in the aisle
        if rng.random_bool(0.4) {
            let x = near_row + 4.8 + aisle / 2.0;
            let car = Footprint::rect(
                Point2::new(x, rng.random_range(0.0..15.0)),
                4.5,
                1.8,
                core::f64::consts::FRAC_PI_2 + rng.random_range(-0.15..0.15),
            );
            if !cars.iter().any(|c| c.overlaps(&car, 0.3)) {
                cars.push(car);
            }
        }
        Self {
            cars,
            ego_speed: rng.random_range(1.0..2.5),
            frame_dt: 0.2,
            yaw_amplitude: rng.random_range(0.0..3.0f64).to_radians(),
            yaw_phase: rng.random_range(0.0..core::f64::consts::TAU),
            seed,
        }
    }

    /// Sensor position and yaw in world coordinates at `frame`.
    pub fn sensor_pose(&self, frame: u32) -> (Point2, f64) {
        let t = frame as f64 * self.frame_dt;
        let yaw = self.yaw_amplitude * (0.7 * t + self.yaw_phase).sin();
        (Point2::new(0.0, self.ego_speed * t), yaw)
    }

    pub fn scene_at(&self, frame: u32, cfg: &RadarConfig) -> Scene {
        let (pos, yaw) = self.sensor_pose(frame);
        let to_sensor = |p: Point2| p.sub(pos).rotate(-yaw);
        let reach = cfg.max_range + 6.0;
        let footprints: Vec<Footprint> = self
            .cars
            .iter()
            .map(|c| c.transform(to_sensor))
            .filter(|c| c.corners.iter().any(|p| p.norm() < reach && p.x > -1.0))
            .collect();
        let ego = Point2::new(0.0, self.ego_speed).rotate(-yaw);
        let seed = self.seed.wrapping_mul(1_000_003).wrapping_add(frame as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Scene::from_footprints(footprints, ego, cfg, seed, &mut rng)
    }
}
