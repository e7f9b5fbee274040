//! Unit-measure test domains with long thin pieces.
//!
//! The box side scales with the shape, so the rasterized mask does not depend
//! on the scale and the measure can be set exactly.

use crate::error::{Result, ShapeError};
use crate::geometry::{make_cross, make_dumbbell_tail, measure, CrossSpec, DumbbellSpec, GridDomain, GridSpec};

fn check_dim(dim: usize) -> Result<()> {
    if !(dim == 2 || dim == 3) {
        return Err(ShapeError::Domain(format!("dimension must be 2 or 3, got {dim}")));
    }
    Ok(())
}

fn unit_measure(dim: usize, build: impl Fn(f64) -> Result<GridDomain>) -> Result<GridDomain> {
    let m = measure(&build(1.0)?);
    build(m.powf(-1.0 / dim as f64))
}

/// Two lobes joined by a neck, with a thin tail three unit-ball diameters long
/// leaving the smaller lobe along `−e₁`.
pub fn dumbbell_tail_spec() -> DumbbellSpec {
    DumbbellSpec {
        center: [0.0; 3],
        left_radius: 0.3,
        right_radius: 0.42,
        separation: 0.85,
        neck_width: 0.14,
        tail_length: 3.4,
        tail_width: 0.07,
    }
}

pub fn dumbbell_tail(dim: usize, cells: usize) -> Result<GridDomain> {
    check_dim(dim)?;
    let base = dumbbell_tail_spec();
    let x_lo = -0.5 * base.separation - base.left_radius - base.tail_length;
    let x_hi = 0.5 * base.separation + base.right_radius;
    unit_measure(dim, |s| {
        let mut d = base.scaled(s);
        d.center[0] = -0.5 * s * (x_lo + x_hi);
        let spec = GridSpec::centered(dim, cells, 1.3 * s * (x_hi - x_lo))?;
        make_dumbbell_tail(&spec, &d)
    })
}

/// Round core with long arms along `−e₁` and `+e₂` and short stubs elsewhere.
pub fn long_arm_cross_spec(dim: usize) -> CrossSpec {
    let mut arm_lengths = vec![0.55; 2 * dim];
    arm_lengths[0] = 2.0;
    arm_lengths[3] = 2.0;
    CrossSpec {
        center: [0.0; 3],
        core_radius: 0.45,
        arm_width: 0.08,
        arm_lengths,
    }
}

pub fn long_arm_cross(dim: usize, cells: usize) -> Result<GridDomain> {
    check_dim(dim)?;
    let base = long_arm_cross_spec(dim);
    unit_measure(dim, |s| {
        let c = CrossSpec {
            center: [0.0; 3],
            core_radius: s * base.core_radius,
            arm_width: s * base.arm_width,
            arm_lengths: base.arm_lengths.iter().map(|l| s * l).collect(),
        };
        let spec = GridSpec::centered(dim, cells, 2.6 * s * 2.0)?;
        make_cross(&spec, &c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_unit_measure() {
        for dom in [dumbbell_tail(2, 128).unwrap(), long_arm_cross(2, 128).unwrap()] {
            assert!((measure(&dom) - 1.0).abs() < 1e-9);
            assert!(dom.is_connected());
        }
    }
}
