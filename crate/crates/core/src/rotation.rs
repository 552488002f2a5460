//! Rotation algebra: unit quaternions, Euler angles in the six Tait-Bryan
//! orders, and 3x3 rotation matrices.
//!
//! Quaternions are stored as `(w, x, y, z)` and kept in a canonical sign:
//! `w >= 0`, and when `w == 0` the first nonzero vector component is positive.
//! Euler angles are intrinsic: for order `ZXY` and angles `(a, b, c)` the
//! rotation is `Rz(a) * Rx(b) * Ry(c)`, which is how BVH channel lists compose.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

/// Tolerance below which a quaternion is accepted as unit without rescaling.
const UNIT_SNAP: f64 = 1e-12;
/// Middle-angle distance from +-90 degrees treated as gimbal lock.
const GIMBAL_EPS_DEG: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Vec3 {
        let mut v = [0.0; 3];
        v[self.index()] = 1.0;
        v
    }

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Axis> {
        match c.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            _ => None,
        }
    }
}

/// One of the six orderings of three distinct axes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RotationOrder {
    Xyz,
    Xzy,
    Yxz,
    Yzx,
    Zxy,
    Zyx,
}

impl RotationOrder {
    pub const ALL: [RotationOrder; 6] = [
        RotationOrder::Xyz,
        RotationOrder::Xzy,
        RotationOrder::Yxz,
        RotationOrder::Yzx,
        RotationOrder::Zxy,
        RotationOrder::Zyx,
    ];

    pub fn axes(self) -> [Axis; 3] {
        use Axis::*;
        match self {
            RotationOrder::Xyz => [X, Y, Z],
            RotationOrder::Xzy => [X, Z, Y],
            RotationOrder::Yxz => [Y, X, Z],
            RotationOrder::Yzx => [Y, Z, X],
            RotationOrder::Zxy => [Z, X, Y],
            RotationOrder::Zyx => [Z, Y, X],
        }
    }

    pub fn from_axes(axes: [Axis; 3]) -> Option<Self> {
        RotationOrder::ALL.into_iter().find(|o| o.axes() == axes)
    }

    pub fn reversed(self) -> Self {
        let [a, b, c] = self.axes();
        RotationOrder::from_axes([c, b, a]).expect("reversal of a permutation is a permutation")
    }

    /// True for the cyclic permutations XYZ, YZX and ZXY.
    fn is_cyclic(self) -> bool {
        matches!(self, RotationOrder::Xyz | RotationOrder::Yzx | RotationOrder::Zxy)
    }
}

impl fmt::Display for RotationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.axes() {
            write!(f, "{}", a.letter())?;
        }
        Ok(())
    }
}

impl FromStr for RotationOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let letters: Vec<Axis> = s.chars().filter_map(Axis::from_letter).collect();
        if letters.len() != 3 || s.chars().count() != 3 {
            return Err(Error::invalid(format!("`{s}` is not a rotation order")));
        }
        RotationOrder::from_axes([letters[0], letters[1], letters[2]])
            .ok_or_else(|| Error::invalid(format!("`{s}` repeats an axis")))
    }
}

/// A unit quaternion in canonical sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes and canonicalizes `(w, x, y, z)`.
    ///
    /// Inputs already within 1e-12 of unit norm are kept bit-for-bit (up to
    /// sign), so values read back from a file reproduce exactly.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-150 {
            return Err(Error::invalid(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        let (w, x, y, z) = if (n - 1.0).abs() > UNIT_SNAP {
            (w / n, x / n, y / n, z / n)
        } else {
            (w, x, y, z)
        };
        Ok(Rotation { w, x, y, z }.canonical())
    }

    pub fn from_wxyz(q: [f64; 4]) -> Result<Self> {
        Rotation::new(q[0], q[1], q[2], q[3])
    }

    fn canonical(self) -> Self {
        let flip = if self.w == 0.0 {
            let first = [self.x, self.y, self.z].into_iter().find(|c| *c != 0.0).unwrap_or(0.0);
            first < 0.0
        } else {
            self.w < 0.0
        };
        let r = if flip {
            Rotation { w: -self.w, x: -self.x, y: -self.y, z: -self.z }
        } else {
            self
        };
        // positive zero keeps bitwise comparisons stable
        Rotation { w: r.w + 0.0, ..r }
    }

    /// Rotation by `radians` about one coordinate axis.
    pub fn about_axis(axis: Axis, radians: f64) -> Self {
        let (s, c) = (radians * 0.5).sin_cos();
        let mut v = [0.0; 3];
        v[axis.index()] = s;
        Rotation { w: c, x: v[0], y: v[1], z: v[2] }.canonical()
    }

    pub fn from_axis_angle(axis: Vec3, radians: f64) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !n.is_finite() || n == 0.0 || !radians.is_finite() {
            return Err(Error::invalid("axis-angle needs a finite nonzero axis and finite angle"));
        }
        let (s, c) = (radians * 0.5).sin_cos();
        Rotation::new(c, s * axis[0] / n, s * axis[1] / n, s * axis[2] / n)
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn wxyz(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// The inverse rotation.
    pub fn conjugate(&self) -> Self {
        Rotation { w: self.w, x: -self.x, y: -self.y, z: -self.z }.canonical()
    }

    fn raw_mul(&self, b: &Rotation) -> (f64, f64, f64, f64) {
        let a = self;
        (
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }

    /// Hamilton product `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Rotation) -> Self {
        let (w, x, y, z) = self.raw_mul(other);
        Rotation::new(w, x, y, z).expect("product of unit quaternions is normalizable")
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let u = [self.x, self.y, self.z];
        let t = scale(cross(u, v), 2.0);
        let ut = cross(u, t);
        [
            v[0] + self.w * t[0] + ut[0],
            v[1] + self.w * t[1] + ut[1],
            v[2] + self.w * t[2] + ut[2],
        ]
    }

    pub fn to_matrix(&self) -> Mat3 {
        let Rotation { w, x, y, z } = *self;
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    /// Shepperd's method; `m` must be a proper rotation matrix.
    pub fn from_matrix(m: &Mat3) -> Result<Self> {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z) = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            (0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            ((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            ((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            ((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
        };
        Rotation::new(w, x, y, z)
    }

    /// Angle in radians of the relative rotation between `self` and `other`.
    ///
    /// Uses `atan2` of the relative quaternion rather than `acos` of a dot
    /// product so that tiny angles are not lost to cancellation.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let (w, x, y, z) = self.conjugate().raw_mul(other);
        2.0 * (x * x + y * y + z * z).sqrt().atan2(w.abs())
    }

    pub fn from_euler(angles_deg: Vec3, order: RotationOrder) -> Result<Self> {
        euler_to_quat(angles_deg, order)
    }

    /// Decomposes into Euler angles (degrees) for `order`.
    ///
    /// The middle angle lies in [-90, 90], the outer two in (-180, 180]. When
    /// the middle angle is within 1e-6 degrees of +-90 the decomposition is not
    /// unique; the first angle is then set to 0 and the third absorbs the rest.
    pub fn to_euler(&self, order: RotationOrder) -> Vec3 {
        let m = self.to_matrix();
        let [a0, a1, a2] = order.axes();
        let (i, j, k) = (a0.index(), a1.index(), a2.index());
        let s = if order.is_cyclic() { 1.0 } else { -1.0 };

        let sin_mid = (s * m[i][k]).clamp(-1.0, 1.0);
        let cos_mid = (m[i][i] * m[i][i] + m[i][j] * m[i][j]).sqrt();
        let mid = sin_mid.atan2(cos_mid);

        if (90.0 - mid.to_degrees().abs()).abs() <= GIMBAL_EPS_DEG {
            let third = (s * m[j][i]).atan2(m[j][j]);
            return [0.0, mid.to_degrees(), third.to_degrees()];
        }
        let first = (-s * m[j][k]).atan2(m[k][k]);
        let third = (-s * m[i][j]).atan2(m[i][i]);
        [first.to_degrees(), mid.to_degrees(), third.to_degrees()]
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        self.compose(&rhs)
    }
}

/// Intrinsic Euler angles in degrees to a canonical unit quaternion.
pub fn euler_to_quat(angles_deg: Vec3, order: RotationOrder) -> Result<Rotation> {
    if angles_deg.iter().any(|a| !a.is_finite()) {
        return Err(Error::invalid(format!("non-finite Euler angles {angles_deg:?}")));
    }
    let axes = order.axes();
    let q = Rotation::about_axis(axes[0], angles_deg[0].to_radians())
        * Rotation::about_axis(axes[1], angles_deg[1].to_radians())
        * Rotation::about_axis(axes[2], angles_deg[2].to_radians());
    Ok(q)
}

/// Euler angles in degrees from a raw `(w, x, y, z)` quaternion, which must
/// have unit norm to within 1e-6.
pub fn quat_to_euler(wxyz: [f64; 4], order: RotationOrder) -> Result<Vec3> {
    let n = wxyz.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("quaternion {wxyz:?} is not unit (norm {n})")));
    }
    Ok(Rotation::from_wxyz(wxyz)?.to_euler(order))
}

pub fn quat_mul(a: &Rotation, b: &Rotation) -> Rotation {
    a.compose(b)
}

pub(crate) fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn scale(v: Vec3, s: f64) -> Vec3 {
    [v[0] * s, v[1] * s, v[2] * s]
}

pub(crate) fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn norm3(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
