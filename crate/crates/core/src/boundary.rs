//! Starting and arrival lines through the origin.
//!
//! A line is given by its slope angle `ζ ∈ (−π/2, π/2]` and carries the unit
//! direction `u = (cos ζ, sin ζ)`. The two halves of a line are told apart by
//! the sign of the multiple of `u` they contain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{wrap_angle, Real};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line<T> {
    pub zeta: T,
    pub u: [T; 2],
}

fn check_slope<T: Real>(zeta: T, what: &str) -> Result<()> {
    let h = T::FRAC_PI_2();
    if !(zeta > -h && zeta <= h) {
        return Err(Error::OutOfRange(format!("{what} = {zeta} is not in (-pi/2, pi/2]")));
    }
    Ok(())
}

impl<T: Real> Line<T> {
    pub fn new(zeta: T) -> Result<Self> {
        check_slope(zeta, "zeta")?;
        let (s, c) = zeta.sin_cos();
        Ok(Line { zeta, u: [c, s] })
    }

    /// `⟨z, Ju⟩ = −x sin ζ + y cos ζ`; zero exactly on the line.
    pub fn signed_distance(&self, z: [T; 2]) -> T {
        -z[0] * self.u[1] + z[1] * self.u[0]
    }

    /// The point `s·u`.
    pub fn point(&self, s: T) -> [T; 2] {
        [s * self.u[0], s * self.u[1]]
    }
}

/// Free-function form of [`Line::signed_distance`].
pub fn signed_distance<T: Real>(l: &Line<T>, z: [T; 2]) -> T {
    l.signed_distance(z)
}

/// Smallest positive angle swept clockwise from `l_S` to `l_A`, in `(0, π]`.
pub fn delta_zeta<T: Real>(zeta_s: T, zeta_a: T) -> Result<T> {
    check_slope(zeta_s, "zeta_S")?;
    check_slope(zeta_a, "zeta_A")?;
    Ok(if zeta_s > zeta_a {
        zeta_s - zeta_a
    } else {
        zeta_s - zeta_a + T::PI()
    })
}

/// Polar angles of the four semilines, normalised to `(−π, π]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemilineAngles<T> {
    pub ls1: T,
    pub la1: T,
    pub ls2: T,
    pub la2: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinePair<T> {
    pub start: Line<T>,
    pub arrive: Line<T>,
    pub delta_zeta: T,
}

impl<T: Real> LinePair<T> {
    pub fn new(zeta_s: T, zeta_a: T) -> Result<Self> {
        let delta_zeta = delta_zeta(zeta_s, zeta_a)?;
        Ok(LinePair {
            start: Line::new(zeta_s)?,
            arrive: Line::new(zeta_a)?,
            delta_zeta,
        })
    }

    pub fn dirichlet() -> Self {
        let h = T::FRAC_PI_2();
        Self::new(h, h).expect("preset angles are in range")
    }

    pub fn neumann() -> Self {
        Self::new(T::zero(), T::zero()).expect("preset angles are in range")
    }

    pub fn mixed() -> Self {
        Self::new(T::zero(), T::FRAC_PI_2()).expect("preset angles are in range")
    }

    /// Look up `dirichlet`, `neumann` or `mixed`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "dirichlet" => Some(Self::dirichlet()),
            "neumann" => Some(Self::neumann()),
            "mixed" => Some(Self::mixed()),
            _ => None,
        }
    }

    /// `l_S¹` at `ζ_S`, `l_A¹` at `ζ_S − Δζ`, and the opposite halves.
    pub fn semiline_angles(&self) -> SemilineAngles<T> {
        let zs = self.start.zeta;
        let la1 = zs - self.delta_zeta;
        SemilineAngles {
            ls1: wrap_angle(zs),
            la1: wrap_angle(la1),
            ls2: wrap_angle(zs - T::PI()),
            la2: wrap_angle(la1 + T::PI()),
        }
    }

    /// `+1` when `l_A¹` points along `u_A`, `−1` when it points along `−u_A`.
    pub fn arrival_sign(&self) -> T {
        if self.start.zeta > self.arrive.zeta {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn coincident(&self) -> bool {
        self.start.zeta == self.arrive.zeta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-14
    }

    #[test]
    fn delta_zeta_examples() {
        assert!(close(delta_zeta(FRAC_PI_2, FRAC_PI_2).unwrap(), PI));
        assert!(close(delta_zeta(0.0, FRAC_PI_2).unwrap(), FRAC_PI_2));
        assert!(close(delta_zeta(FRAC_PI_2, 0.0).unwrap(), FRAC_PI_2));
        assert!(matches!(delta_zeta(-FRAC_PI_2, 0.0), Err(Error::OutOfRange(_))));
        assert!(delta_zeta(0.0, 2.0).is_err());
    }

    #[test]
    fn semiline_examples() {
        let d = LinePair::<f64>::dirichlet().semiline_angles();
        assert!(close(d.ls1, FRAC_PI_2) && close(d.la1, -FRAC_PI_2));
        assert!(close(d.ls2, -FRAC_PI_2) && close(d.la2, FRAC_PI_2));
        let m = LinePair::<f64>::mixed().semiline_angles();
        assert!(close(m.ls1, 0.0) && close(m.la1, -FRAC_PI_2));
        let p = LinePair::new(FRAC_PI_2, 0.0).unwrap().semiline_angles();
        assert!(close(p.ls1, FRAC_PI_2) && close(p.la1, 0.0));
    }

    #[test]
    fn signed_distance_examples() {
        assert!(close(Line::new(FRAC_PI_2).unwrap().signed_distance([1.0, 0.0]), -1.0));
        assert!(close(Line::new(0.0).unwrap().signed_distance([0.0, 2.0]), 2.0));
        assert!(Line::new(FRAC_PI_4).unwrap().signed_distance([1.0, 1.0]).abs() < 1e-15);
    }

    #[test]
    fn presets() {
        let n = LinePair::<f64>::preset("neumann").unwrap();
        assert_eq!((n.start.zeta, n.arrive.zeta), (0.0, 0.0));
        assert!(LinePair::<f64>::preset("robin").is_none());
    }

    proptest! {
        #[test]
        fn coincident_lines_give_pi(z in -1.57f64..FRAC_PI_2) {
            prop_assert!(close(delta_zeta(z, z).unwrap(), PI));
        }

        #[test]
        fn points_on_line_have_zero_distance(z in -1.57f64..FRAC_PI_2, s in -1e3f64..1e3) {
            let l = Line::new(z).unwrap();
            prop_assert!(l.signed_distance(l.point(s)).abs() <= 1e-12 * (1.0 + s.abs()));
        }

        #[test]
        fn arrival_semiline_matches_sign(zs in -1.57f64..FRAC_PI_2, za in -1.57f64..FRAC_PI_2) {
            let lp = LinePair::new(zs, za).unwrap();
            let dz = lp.delta_zeta;
            prop_assert!(dz > 0.0 && dz <= PI);
            let a = lp.semiline_angles().la1;
            let dir = [a.cos(), a.sin()];
            let s = lp.arrival_sign();
            prop_assert!((dir[0] - s * lp.arrive.u[0]).abs() < 1e-12);
            prop_assert!((dir[1] - s * lp.arrive.u[1]).abs() < 1e-12);
        }
    }
}
