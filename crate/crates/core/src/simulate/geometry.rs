use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

#[allow(clippy::should_implement_trait)]
impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Sensor frame: boresight along +x, azimuth positive towards +y.
    pub fn from_polar(range: f64, azimuth_rad: f64) -> Self {
        Self::new(range * azimuth_rad.cos(), range * azimuth_rad.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn azimuth(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

/// Car footprint: a convex quadrilateral, corners counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Footprint {
    pub corners: [Point2; 4],
}

impl Footprint {
    /// Rectangle of `length` along `heading` and `width` across it.
    pub fn rect(center: Point2, length: f64, width: f64, heading: f64) -> Self {
        let (hl, hw) = (length / 2.0, width / 2.0);
        let local = [
            Point2::new(-hl, -hw),
            Point2::new(hl, -hw),
            Point2::new(hl, hw),
            Point2::new(-hl, hw),
        ];
        Self {
            corners: local.map(|p| p.rotate(heading).add(center)),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..4).map(move |i| (self.corners[i], self.corners[(i + 1) % 4]))
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.edges().all(|(a, b)| b.sub(a).cross(p.sub(a)) >= 0.0)
    }

    /// Parametric interval `[t_in, t_out]` of the segment `a → b` that lies
    /// inside the footprint (Cyrus–Beck clipping), if any.
    pub fn clip_segment(&self, a: Point2, b: Point2) -> Option<(f64, f64)> {
        let d = b.sub(a);
        let (mut t_in, mut t_out) = (0.0f64, 1.0f64);
        for (p, q) in self.edges() {
            let e = q.sub(p);
            // outward normal of a CCW edge
            let n = Point2::new(e.y, -e.x);
            let num = n.dot(p.sub(a));
            let den = n.dot(d);
            if den == 0.0 {
                if num < 0.0 {
                    return None;
                }
                continue;
            }
            let t = num / den;
            if den < 0.0 {
                t_in = t_in.max(t);
            } else {
                t_out = t_out.min(t);
            }
            if t_in > t_out {
                return None;
            }
        }
        Some((t_in, t_out))
    }

    pub fn intersects_segment(&self, a: Point2, b: Point2) -> bool {
        self.clip_segment(a, b).is_some()
    }

    /// Edges whose outward normal points towards `viewer`.
    pub fn facing_edges(&self, viewer: Point2) -> Vec<(Point2, Point2)> {
        self.edges()
            .filter(|(a, b)| {
                let e = b.sub(*a);
                let n = Point2::new(e.y, -e.x);
                n.dot(viewer.sub(*a)) > 0.0
            })
            .collect()
    }

    /// Separating-axis overlap test, with `clearance` metres of margin.
    pub fn overlaps(&self, other: &Footprint, clearance: f64) -> bool {
        for shape in [self, other] {
            for (a, b) in shape.edges() {
                let e = b.sub(a);
                let axis = Point2::new(-e.y, e.x).scale(1.0 / e.norm());
                let project = |f: &Footprint| {
                    f.corners.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                        let v = axis.dot(*c);
                        (lo.min(v), hi.max(v))
                    })
                };
                let (a0, a1) = project(self);
                let (b0, b1) = project(other);
                if a1 + clearance < b0 || b1 + clearance < a0 {
                    return false;
                }
            }
        }
        true
    }

    pub fn transform(&self, f: impl Fn(Point2) -> Point2) -> Self {
        Self {
            corners: self.corners.map(f),
        }
    }
}

/// Open space seen from a sensor at the origin: the FOV wedge minus car
/// footprints and everything they occlude.
#[derive(Debug, Clone, PartialEq)]
pub struct OpenRegion {
    pub half_fov: f64,
    pub max_range: f64,
    pub footprints: Vec<Footprint>,
}

/// Inside the sensor's wedge: in front, within range, within the half-FOV.
pub fn in_wedge(p: Point2, half_fov: f64, max_range: f64) -> bool {
    p.x > 0.0 && p.norm() <= max_range && p.azimuth().abs() <= half_fov
}

impl OpenRegion {
    pub fn in_fov(&self, p: Point2) -> bool {
        in_wedge(p, self.half_fov, self.max_range)
    }

    pub fn is_occupied(&self, p: Point2) -> bool {
        self.footprints.iter().any(|f| f.contains(p))
    }

    /// The sensor-to-`p` ray crosses some footprint (including `p` itself
    /// lying inside one).
    pub fn is_blocked(&self, p: Point2) -> bool {
        self.footprints
            .iter()
            .any(|f| f.intersects_segment(Point2::ORIGIN, p))
    }

    /// Open-space test ignoring the FOV wedge.
    pub fn is_free(&self, p: Point2) -> bool {
        !self.is_blocked(p)
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.in_fov(p) && self.is_free(p)
    }
}
