use rand::Rng;

use super::ScenarioSpec;
use crate::error::Result;
use crate::geometry::{random_convex_polygon, Aabb, ArmModel, ConvexPolygon, Vec2};
use crate::kcd::Workspace;

/// Random obstacles around the arm's base, per the spec's obstacle ranges.
pub fn generate_obstacles<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    arm: &ArmModel,
    count: usize,
    rng: &mut R,
) -> Result<Vec<ConvexPolygon>> {
    let o = &spec.obstacles;
    (0..count)
        .map(|_| {
            let center = obstacle_center(spec, arm, rng);
            random_convex_polygon(rng, center, o.radius, o.vertices)
        })
        .collect()
}

pub(crate) fn obstacle_center<R: Rng + ?Sized>(spec: &ScenarioSpec, arm: &ArmModel, rng: &mut R) -> Vec2 {
    let (lo, hi) = spec.obstacles.distance;
    let dist = if hi > lo { rng.random_range(lo..hi) } else { lo } * arm.reach();
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    arm.base() + Vec2::from_angle(angle) * dist
}

/// An obstacle layout plus per-obstacle velocities.
#[derive(Debug, Clone)]
pub struct Scene {
    bounds: Aabb,
    obstacles: Vec<ConvexPolygon>,
    velocities: Vec<Vec2>,
}

impl Scene {
    /// Workspace bounds around the base, obstacles and random headings.
    pub fn generate<R: Rng + ?Sized>(
        spec: &ScenarioSpec,
        arm: &ArmModel,
        count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let half = spec.workspace_half_width(arm);
        let bounds = Aabb::centered(arm.base(), half, half);
        let obstacles = generate_obstacles(spec, arm, count, rng)?;
        let speed = spec.speed(arm);
        let velocities = (0..count)
            .map(|_| {
                let heading = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                Vec2::from_angle(heading) * speed
            })
            .collect();
        Ok(Self {
            bounds,
            obstacles,
            velocities,
        })
    }

    pub fn from_parts(bounds: Aabb, obstacles: Vec<ConvexPolygon>, velocities: Vec<Vec2>) -> Self {
        assert_eq!(obstacles.len(), velocities.len());
        Self {
            bounds,
            obstacles,
            velocities,
        }
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn obstacles(&self) -> &[ConvexPolygon] {
        &self.obstacles
    }

    pub fn velocities(&self) -> &[Vec2] {
        &self.velocities
    }

    pub fn workspace(&self) -> Workspace {
        Workspace::new(self.bounds, self.obstacles.clone())
    }

    /// Replace the obstacles, keeping velocities.
    pub fn set_obstacles(&mut self, obstacles: Vec<ConvexPolygon>) {
        assert_eq!(obstacles.len(), self.velocities.len());
        self.obstacles = obstacles;
    }

    /// One cycle of motion. An obstacle whose box would leave the bounds
    /// has that velocity component reversed before it moves.
    pub fn advance(&mut self) {
        for (o, v) in self.obstacles.iter_mut().zip(self.velocities.iter_mut()) {
            let b = o.aabb();
            if (b.min.x + v.x < self.bounds.min.x && v.x < 0.0)
                || (b.max.x + v.x > self.bounds.max.x && v.x > 0.0)
            {
                v.x = -v.x;
            }
            if (b.min.y + v.y < self.bounds.min.y && v.y < 0.0)
                || (b.max.y + v.y > self.bounds.max.y && v.y > 0.0)
            {
                v.y = -v.y;
            }
            *o = o.translated(*v);
        }
    }
}
