//! Planar serial-chain forward kinematics. Each link is embodied as an
//! oriented rectangle around the segment joining consecutive joints.

use super::{Support, Vec2};
use crate::error::{check_dim, Error, Result};

/// Default link thickness as a fraction of total arm length.
pub const DEFAULT_THICKNESS_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel {
    link_lengths: Vec<f64>,
    link_thickness: f64,
    base: Vec2,
    /// Extra margin added around every link shape.
    padding: f64,
}

impl ArmModel {
    pub fn new(link_lengths: Vec<f64>, link_thickness: f64, base: Vec2) -> Result<Self> {
        if link_lengths.is_empty() {
            return Err(Error::InvalidArgument("arm needs at least one link".into()));
        }
        if link_lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(
                "link lengths must be positive and finite".into(),
            ));
        }
        let shortest = link_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(link_thickness >= 0.0 && link_thickness < shortest) {
            return Err(Error::InvalidArgument(format!(
                "link thickness {link_thickness} must be in [0, {shortest})"
            )));
        }
        if !base.is_finite() {
            return Err(Error::InvalidArgument("non-finite base".into()));
        }
        Ok(Self {
            link_lengths,
            link_thickness,
            base,
            padding: 0.0,
        })
    }

    /// Arm with thickness `0.05 * total length`.
    pub fn with_default_thickness(link_lengths: Vec<f64>, base: Vec2) -> Result<Self> {
        let total: f64 = link_lengths.iter().sum();
        Self::new(link_lengths, DEFAULT_THICKNESS_FRACTION * total, base)
    }

    pub fn dof(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[f64] {
        &self.link_lengths
    }

    pub fn link_thickness(&self) -> f64 {
        self.link_thickness
    }

    pub fn base(&self) -> Vec2 {
        self.base
    }

    pub fn padding(&self) -> f64 {
        self.padding
    }

    /// The same arm with every link rectangle grown by `margin` on all sides.
    /// Kinematics are unchanged.
    pub fn padded(&self, margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "padding {margin} must be finite and >= 0"
            )));
        }
        Ok(Self {
            padding: self.padding + margin,
            ..self.clone()
        })
    }

    /// Bound on how far any point of the unpadded arm moves per radian of
    /// joint-space (Euclidean) motion: `sqrt(sum_j R_j^2)`, with `R_j` the
    /// farthest the arm extends beyond joint `j`.
    pub fn motion_bound(&self) -> f64 {
        let mut beyond = 0.5 * self.link_thickness;
        let mut sum_sq = 0.0;
        for &len in self.link_lengths.iter().rev() {
            beyond += len;
            sum_sq += beyond * beyond;
        }
        sum_sq.sqrt()
    }

    /// Maximum distance from the base any point of the arm can reach.
    pub fn reach(&self) -> f64 {
        self.link_lengths.iter().sum::<f64>() + 0.5 * self.link_thickness
    }

    /// Allocation-free link iterator. Caller guarantees `q.len() == dof`.
    pub(crate) fn links<'a>(&'a self, q: &'a [f64]) -> impl Iterator<Item = LinkShape> + 'a {
        let half_thickness = 0.5 * self.link_thickness + self.padding;
        let pad = self.padding;
        let mut joint = self.base;
        let mut angle = 0.0;
        self.link_lengths.iter().zip(q).map(move |(&len, &qi)| {
            angle += qi;
            let axis = Vec2::from_angle(angle);
            let start = joint;
            let end = start + axis * len;
            joint = end;
            LinkShape {
                center: (start + end) * 0.5,
                half_extents: (0.5 * len + pad, half_thickness),
                rotation: angle,
                axis,
                start,
                end,
            }
        })
    }
}

/// A link's footprint: an oriented rectangle, or a segment when the arm has
/// zero thickness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkShape {
    pub center: Vec2,
    /// Half length along the link axis, half thickness across it.
    pub half_extents: (f64, f64),
    /// Absolute link angle in radians.
    pub rotation: f64,
    /// Unit vector along the link.
    pub axis: Vec2,
    /// Joint at the proximal end.
    pub start: Vec2,
    /// Joint at the distal end.
    pub end: Vec2,
}

impl LinkShape {
    /// Rectangle corners counter-clockwise, or the two endpoints of a
    /// zero-thickness link.
    pub fn vertices(&self) -> Vec<Vec2> {
        let (hx, hy) = self.half_extents;
        if hy == 0.0 {
            return vec![self.start, self.end];
        }
        let u = self.axis * hx;
        let v = self.axis.perp() * hy;
        vec![
            self.center - u - v,
            self.center + u - v,
            self.center + u + v,
            self.center - u + v,
        ]
    }
}

impl Support for LinkShape {
    #[inline]
    fn support(&self, dir: Vec2) -> Vec2 {
        let (hx, hy) = self.half_extents;
        let normal = self.axis.perp();
        let along = if dir.dot(self.axis) >= 0.0 { hx } else { -hx };
        let across = if dir.dot(normal) >= 0.0 { hy } else { -hy };
        self.center + self.axis * along + normal * across
    }

    fn reference_point(&self) -> Vec2 {
        self.center
    }
}

/// Link shapes for configuration `q`; angles accumulate along the chain.
pub fn forward_kinematics(arm: &ArmModel, q: &[f64]) -> Result<Vec<LinkShape>> {
    check_dim(arm.dof(), q.len())?;
    if q.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument("non-finite joint angle".into()));
    }
    Ok(arm.links(q).collect())
}
