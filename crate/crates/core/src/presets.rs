//! The worked example systems: two disjoint Bloch spheres, two adjacent
//! Bloch spheres and the tensor-product system with a continuum of dark
//! subspaces.

use alloc::vec;
use alloc::vec::Vec;

use crate::channel::{KrausEnsemble, KrausItem};
use crate::error::Result;
use crate::linalg::{c64, from_rows, identity, real, CMatrix, Subspace, C64};

pub fn pauli_x() -> CMatrix {
    from_rows(&[&[real(0.0), real(1.0)], &[real(1.0), real(0.0)]])
}

pub fn pauli_y() -> CMatrix {
    from_rows(&[&[real(0.0), c64(0.0, -1.0)], &[c64(0.0, 1.0), real(0.0)]])
}

pub fn pauli_z() -> CMatrix {
    from_rows(&[&[real(1.0), real(0.0)], &[real(0.0), real(-1.0)]])
}

/// `exp(i·θ/2·σ)` for a Pauli matrix `σ`.
fn rotation(sigma: CMatrix, theta: f64) -> CMatrix {
    identity(2) * real((theta / 2.0).cos()) + sigma * c64(0.0, (theta / 2.0).sin())
}

pub fn rx(theta: f64) -> CMatrix {
    rotation(pauli_x(), theta)
}

pub fn ry(theta: f64) -> CMatrix {
    rotation(pauli_y(), theta)
}

pub fn rz(theta: f64) -> CMatrix {
    rotation(pauli_z(), theta)
}

/// `i·σ`.
pub fn i_times(m: CMatrix) -> CMatrix {
    m * c64(0.0, 1.0)
}

fn block_antidiag(top_right: &CMatrix, bottom_left: &CMatrix) -> CMatrix {
    let mut v = CMatrix::zeros(4, 4);
    v.view_mut((0, 2), (2, 2)).copy_from(top_right);
    v.view_mut((2, 0), (2, 2)).copy_from(bottom_left);
    v
}

/// Two disjoint Bloch spheres: `v_1 = [[0, √(1/3)u_1], [√(1/4)u_2, 0]]`,
/// `v_2 = [[0, √(2/3)u_3], [√(3/4)u_4, 0]]`, unit weights.
pub fn example1(u: [&CMatrix; 4]) -> Result<KrausEnsemble> {
    let v1 = block_antidiag(&(u[0] * real((1.0f64 / 3.0).sqrt())), &(u[1] * real(0.5)));
    let v2 = block_antidiag(
        &(u[2] * real((2.0f64 / 3.0).sqrt())),
        &(u[3] * real((3.0f64 / 4.0).sqrt())),
    );
    KrausEnsemble::from_matrices(vec![v1, v2])
}

/// `u_1 = Id, u_2 = R_x(θ_x), u_3 = R_z(θ_z), u_4 = Id`.
pub fn example1_rotations(theta_x: f64, theta_z: f64) -> Result<KrausEnsemble> {
    let id = identity(2);
    example1([&id, &rx(theta_x), &rz(theta_z), &id])
}

/// Angle pairs `(θ_x, θ_z)` of the three qualitative regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example1Variant {
    /// Both angles irrational multiples of π: the full group `SU(2)`.
    FullGroup,
    /// `θ_x = π`, `θ_z` irrational: circle-with-flip group.
    CircleFlip,
    /// `θ_x = θ_z = π`: the 8-element quaternion group.
    Quaternion,
}

impl Example1Variant {
    pub fn angles(self) -> (f64, f64) {
        use core::f64::consts::{PI, SQRT_2};
        match self {
            Example1Variant::FullGroup => (SQRT_2, 3.0f64.sqrt()),
            Example1Variant::CircleFlip => (PI, SQRT_2),
            Example1Variant::Quaternion => (PI, PI),
        }
    }

    pub fn ensemble(self) -> Result<KrausEnsemble> {
        let (tx, tz) = self.angles();
        example1_rotations(tx, tz)
    }
}

/// `D_a = span{e_0, e_1}` and `D_b = span{e_2, e_3}` in `ℂ^4`.
pub fn example1_dark() -> (Subspace, Subspace) {
    (
        Subspace::coordinate(4, &[0, 1]).expect("valid indices"),
        Subspace::coordinate(4, &[2, 3]).expect("valid indices"),
    )
}

/// Two adjacent Bloch spheres in `ℂ^3`.
pub fn example2(theta: f64, phi: f64) -> Result<KrausEnsemble> {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let (ct, st) = (theta.cos() * s, theta.sin() * s);
    let (cp, sp) = (phi.cos() * s, phi.sin() * s);
    let z = real(0.0);
    let v1 = from_rows(&[
        &[real(ct), real(st), real(ct)],
        &[real(st), real(-ct), real(st)],
        &[z, z, z],
    ]);
    let v2 = from_rows(&[
        &[z, z, z],
        &[real(cp), real(-sp), real(-cp)],
        &[real(sp), real(cp), real(-sp)],
    ]);
    KrausEnsemble::from_matrices(vec![v1, v2])
}

/// `D_a = span{e_0, e_1}` and `D_b = span{e_1, e_2}` in `ℂ^3`.
pub fn example2_dark() -> (Subspace, Subspace) {
    (
        Subspace::coordinate(3, &[0, 1]).expect("valid indices"),
        Subspace::coordinate(3, &[1, 2]).expect("valid indices"),
    )
}

/// Tensor-product system `v_i = b_i ⊗ u_i` on `ℂ^2 ⊗ ℂ^2` with
/// `b_1 = diag(√q, √(1−q))`, `b_2 = [[0, √q], [√(1−q), 0]]`,
/// `u_1 = iσ_x`, `u_2 = iσ_z`. With `with_v3` the third operator
/// `Id ⊗ iσ_y` is added and all three get weight 1/2.
pub fn example3(q: f64, with_v3: bool) -> Result<KrausEnsemble> {
    let (a, b) = (real(q.sqrt()), real((1.0 - q).sqrt()));
    let z = real(0.0);
    let b1 = from_rows(&[&[a, z], &[z, b]]);
    let b2 = from_rows(&[&[z, a], &[b, z]]);
    let mut mats = vec![
        b1.kronecker(&i_times(pauli_x())),
        b2.kronecker(&i_times(pauli_z())),
    ];
    if with_v3 {
        mats.push(identity(2).kronecker(&i_times(pauli_y())));
        KrausEnsemble::new(
            mats.into_iter()
                .map(|m| KrausItem::new(0.5, m))
                .collect(),
        )
    } else {
        KrausEnsemble::from_matrices(mats)
    }
}

/// `e_0 ⊗ ℂ^2` and `e_1 ⊗ ℂ^2`.
pub fn example3_dark() -> (Subspace, Subspace) {
    (
        Subspace::coordinate(4, &[0, 1]).expect("valid indices"),
        Subspace::coordinate(4, &[2, 3]).expect("valid indices"),
    )
}

/// Single unitary Kraus operator with weight 1.
pub fn single_unitary(u: CMatrix) -> Result<KrausEnsemble> {
    KrausEnsemble::from_matrices(vec![u])
}

/// A fixed non-diagonal unitary on `ℂ^d` used in tests and demos.
pub fn demo_unitary(d: usize) -> CMatrix {
    let entries: Vec<C64> = (0..d * d)
        .map(|k| {
            let (i, j) = ((k / d) as f64, (k % d) as f64);
            let ang = 2.0 * core::f64::consts::PI * i * j / d as f64 + 0.3 * i;
            c64(ang.cos(), ang.sin()) / real((d as f64).sqrt())
        })
        .collect();
    CMatrix::from_row_slice(d, d, &entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotations_are_special_unitary() {
        for m in [rx(0.7), ry(-1.3), rz(2.9)] {
            assert!((m.adjoint() * &m - identity(2)).norm() < 1e-14);
            assert!((m.determinant() - real(1.0)).norm() < 1e-14);
        }
        assert!((rx(core::f64::consts::PI) - i_times(pauli_x())).norm() < 1e-15);
    }

    #[test]
    fn demo_unitary_is_unitary() {
        for d in 1..5 {
            let u = demo_unitary(d);
            assert!((u.adjoint() * &u - identity(d)).norm() < 1e-12);
        }
    }
}
