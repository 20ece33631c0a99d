use serde::{Deserialize, Serialize};

use super::{Params, State};
use crate::error::{Error, Result};

/// The line `X = 1, Y + A Z = 1 + C`.
///
/// Every point on it is an equilibrium when `A = B`; for `A ≠ B` it is where
/// the flow is slowest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlowManifold {
    /// `(1, 1 + C, 0)`, which is also `Ss2`.
    pub base_point: State,
    /// Unit vector along `(0, A, -1)`.
    pub direction: [f64; 3],
    pub params: Params,
}

pub fn slow_manifold(p: &Params) -> Result<SlowManifold> {
    SlowManifold::new(p)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl SlowManifold {
    pub fn new(p: &Params) -> Result<Self> {
        if !(p.a() > 0.0) {
            return Err(Error::domain("slow manifold needs A > 0"));
        }
        let n = p.a().hypot(1.0);
        Ok(SlowManifold {
            base_point: State::new(1.0, 1.0 + p.c(), 0.0),
            direction: [0.0, p.a() / n, -1.0 / n],
            params: *p,
        })
    }

    pub fn point_at(&self, t: f64) -> State {
        let b = self.base_point;
        let d = self.direction;
        State::new(b.x + t * d[0], b.y + t * d[1], b.z + t * d[2])
    }

    fn offset(&self, s: &State) -> [f64; 3] {
        [
            s.x - self.base_point.x,
            s.y - self.base_point.y,
            s.z - self.base_point.z,
        ]
    }

    /// Projection parameter of `s` along the direction, measured from the base point.
    pub fn axial(&self, s: &State) -> f64 {
        dot(self.offset(s), self.direction)
    }

    /// Orthonormal pair `(e1, e2)` spanning the plane normal to the line, with
    /// `e1 × e2 = direction`.
    pub fn normal_frame(&self) -> ([f64; 3], [f64; 3]) {
        let d = self.direction;
        // The direction has no X component, so X is always normal to it.
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, d[2], -d[1]];
        (e1, e2)
    }

    /// Coordinates of `s` in the normal plane.
    pub fn transverse(&self, s: &State) -> (f64, f64) {
        let (e1, e2) = self.normal_frame();
        let r = self.offset(s);
        (dot(r, e1), dot(r, e2))
    }

    /// Euclidean distance from `s` to the line.
    pub fn distance(&self, s: &State) -> f64 {
        let (u, v) = self.transverse(s);
        u.hypot(v)
    }

    /// Closest point of the line to `s`.
    pub fn foot(&self, s: &State) -> State {
        self.point_at(self.axial(s))
    }
}
