//! Space-time cutoff ingredients: the plateau function zeta(t), the smooth
//! step eta(z) with its primitive H(z), and their defining inequalities.

use crate::{Error, Result};

/// zeta(t): r1 on (-inf, t3] and [t4, inf), delta on [t1, t2], monotone
/// quintic transitions in between; |zeta'| <= 2 r1 (1/(t1-t3) + 1/(t4-t2)).
#[derive(Debug, Clone, Copy)]
pub struct Zeta {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub delta: f64,
    pub r1: f64,
}

fn quintic_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
    }
}

fn quintic_step_deriv(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

impl Zeta {
    pub fn new(t1: f64, t2: f64, t3: f64, t4: f64, delta: f64, r1: f64) -> Result<Self> {
        if !(t3 < t1 && t1 < t2 && t2 < t4) {
            return Err(Error::InvalidParameter(
                "need t3 < t1 < t2 < t4".into(),
            ));
        }
        if !(0.0 < delta && delta < r1) {
            return Err(Error::InvalidParameter("need 0 < delta < r1".into()));
        }
        Ok(Self {
            t1,
            t2,
            t3,
            t4,
            delta,
            r1,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= self.t3 || t >= self.t4 {
            self.r1
        } else if t >= self.t1 && t <= self.t2 {
            self.delta
        } else if t < self.t1 {
            self.r1 + (self.delta - self.r1) * quintic_step((t - self.t3) / (self.t1 - self.t3))
        } else {
            self.r1 + (self.delta - self.r1) * quintic_step((self.t4 - t) / (self.t4 - self.t2))
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t <= self.t3 || t >= self.t4 || (t >= self.t1 && t <= self.t2) {
            0.0
        } else if t < self.t1 {
            (self.delta - self.r1) / (self.t1 - self.t3)
                * quintic_step_deriv((t - self.t3) / (self.t1 - self.t3))
        } else {
            -(self.delta - self.r1) / (self.t4 - self.t2)
                * quintic_step_deriv((self.t4 - t) / (self.t4 - self.t2))
        }
    }

    pub fn deriv_bound(&self) -> f64 {
        2.0 * self.r1 * (1.0 / (self.t1 - self.t3) + 1.0 / (self.t4 - self.t2))
    }
}

/// The smooth step eta(z): 0 below 0, 1 above 1, cubic in between with
/// 0 < eta'(z) <= 2.
pub fn eta_step(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        z * z * (3.0 - 2.0 * z)
    }
}

pub fn eta_step_deriv(z: f64) -> f64 {
    if z <= 0.0 || z >= 1.0 {
        0.0
    } else {
        6.0 * z * (1.0 - z)
    }
}

/// H(z) = Int_0^z eta: 0 for z <= 0, z^3 - z^4/2 on (0, 1), z - 1/2 above.
pub fn h_primitive(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        z - 0.5
    } else {
        z * z * z - z * z * z * z / 2.0
    }
}

pub fn h_primitive_deriv(z: f64) -> f64 {
    eta_step(z)
}
