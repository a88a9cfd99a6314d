use serde::Serialize;

use super::{Matrix, Vector};
use crate::error::{invalid, QfwError, Result};
use crate::{lmo_matrix, lmo_vector};

/// Absolute slack on the defining norm when testing membership.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConstraintSet {
    /// `{x in R^dim : ||x||_1 <= radius}`
    L1Ball { dim: usize, radius: f64 },
    /// Probability simplex in `R^dim`.
    Simplex { dim: usize },
    /// Ball of the latent group norm: the convex hull of the sets
    /// `{x : supp(x) in g_i, ||x||_{p_i} <= radius}`.
    LatentGroupBall { dim: usize, groups: Vec<Vec<usize>>, p_norms: Vec<f64>, radius: f64 },
    /// `{X in R^{rows x cols} : ||X||_* <= radius}`
    NuclearBall { rows: usize, cols: usize, radius: f64 },
}

pub(crate) fn lp_norm<'a>(values: impl Iterator<Item = &'a f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0f64, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.map(|v| v.abs()).sum()
    } else if p == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        values.map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius > 0.0) || !radius.is_finite() {
        return invalid(format!("radius must be finite and > 0, got {radius}"));
    }
    Ok(())
}

impl ConstraintSet {
    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        if dim == 0 {
            return Err(QfwError::EmptyDomain);
        }
        check_radius(radius)?;
        Ok(ConstraintSet::L1Ball { dim, radius })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(QfwError::EmptyDomain);
        }
        Ok(ConstraintSet::Simplex { dim })
    }

    pub fn nuclear_ball(rows: usize, cols: usize, radius: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(QfwError::EmptyDomain);
        }
        check_radius(radius)?;
        Ok(ConstraintSet::NuclearBall { rows, cols, radius })
    }

    /// Groups must be nonempty, in range, and cover every coordinate.
    /// `p_norms` entries are in `[1, inf]`; use `f64::INFINITY` for the max norm.
    pub fn latent_group_ball(
        dim: usize,
        groups: Vec<Vec<usize>>,
        p_norms: Vec<f64>,
        radius: f64,
    ) -> Result<Self> {
        if dim == 0 || groups.is_empty() {
            return Err(QfwError::EmptyDomain);
        }
        check_radius(radius)?;
        if groups.len() != p_norms.len() {
            return invalid(format!("{} groups but {} p-norms", groups.len(), p_norms.len()));
        }
        let mut covered = vec![false; dim];
        for (gi, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return invalid(format!("group {gi} is empty"));
            }
            for &i in g {
                if i >= dim {
                    return invalid(format!("group {gi} has index {i} outside 0..{dim}"));
                }
                covered[i] = true;
            }
        }
        if let Some(i) = covered.iter().position(|c| !c) {
            return invalid(format!("coordinate {i} is not covered by any group"));
        }
        for &p in &p_norms {
            if !(p >= 1.0) {
                return invalid(format!("group norms need p >= 1, got {p}"));
            }
        }
        Ok(ConstraintSet::LatentGroupBall { dim, groups, p_norms, radius })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConstraintSet::L1Ball { .. } => "l1_ball",
            ConstraintSet::Simplex { .. } => "simplex",
            ConstraintSet::LatentGroupBall { .. } => "latent_group_ball",
            ConstraintSet::NuclearBall { .. } => "nuclear_ball",
        }
    }

    /// Number of coordinates of a vector in the set (rows * cols for matrices).
    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::L1Ball { dim, .. }
            | ConstraintSet::Simplex { dim }
            | ConstraintSet::LatentGroupBall { dim, .. } => *dim,
            ConstraintSet::NuclearBall { rows, cols, .. } => rows * cols,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            ConstraintSet::L1Ball { radius, .. }
            | ConstraintSet::LatentGroupBall { radius, .. }
            | ConstraintSet::NuclearBall { radius, .. } => *radius,
            ConstraintSet::Simplex { .. } => 1.0,
        }
    }

    /// Euclidean (Frobenius) diameter. Exact except for group balls, where
    /// it is the upper bound `2 r max_g |g|^{max(0, 1/2 - 1/p_g)}`.
    pub fn diameter(&self) -> f64 {
        match self {
            ConstraintSet::L1Ball { radius, .. } => 2.0 * radius,
            ConstraintSet::Simplex { dim } => {
                if *dim >= 2 {
                    std::f64::consts::SQRT_2
                } else {
                    0.0
                }
            }
            ConstraintSet::NuclearBall { radius, .. } => 2.0 * radius,
            ConstraintSet::LatentGroupBall { groups, p_norms, radius, .. } => {
                let widest = groups
                    .iter()
                    .zip(p_norms)
                    .map(|(g, &p)| (g.len() as f64).powf((0.5 - 1.0 / p).max(0.0)))
                    .fold(0.0f64, f64::max);
                2.0 * radius * widest
            }
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(self, ConstraintSet::NuclearBall { .. })
    }

    pub fn contains<P: super::FwPoint>(&self, x: &P) -> Result<bool> {
        P::member_of(self, x)
    }

    pub fn contains_vector(&self, x: &Vector) -> Result<bool> {
        if self.is_matrix() {
            return invalid("vector passed to a matrix constraint set");
        }
        if x.len() != self.dim() {
            return Err(QfwError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Ok(false);
        }
        Ok(match self {
            ConstraintSet::L1Ball { radius, .. } => x.lp_norm(1) <= radius + MEMBERSHIP_TOL,
            ConstraintSet::Simplex { .. } => {
                x.iter().all(|&v| v >= -MEMBERSHIP_TOL) && (x.sum() - 1.0).abs() <= MEMBERSHIP_TOL
            }
            ConstraintSet::LatentGroupBall { radius, .. } => {
                self.group_norm_upper(x) <= radius + MEMBERSHIP_TOL
            }
            ConstraintSet::NuclearBall { .. } => unreachable!(),
        })
    }

    pub fn contains_matrix(&self, x: &Matrix) -> Result<bool> {
        let ConstraintSet::NuclearBall { rows, cols, radius } = self else {
            return invalid("matrix passed to a vector constraint set");
        };
        if x.nrows() != *rows || x.ncols() != *cols {
            return Err(QfwError::DimensionMismatch {
                expected: rows * cols,
                got: x.nrows() * x.ncols(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Ok(false);
        }
        let nuclear: f64 = lmo_matrix::singular_values(x).iter().sum();
        Ok(nuclear <= radius + MEMBERSHIP_TOL)
    }

    /// Latent group norm of `x` when groups are disjoint. With overlapping
    /// groups the latent norm is an infimum over decompositions; this
    /// returns the value of one decomposition (each coordinate goes to the
    /// first group that contains it), which is an upper bound.
    pub fn group_norm_upper(&self, x: &Vector) -> f64 {
        let ConstraintSet::LatentGroupBall { dim, groups, p_norms, .. } = self else {
            return f64::NAN;
        };
        let mut owner = vec![usize::MAX; *dim];
        for (gi, g) in groups.iter().enumerate() {
            for &i in g {
                if owner[i] == usize::MAX {
                    owner[i] = gi;
                }
            }
        }
        groups
            .iter()
            .enumerate()
            .map(|(gi, g)| {
                let vals: Vec<f64> = g.iter().filter(|&&i| owner[i] == gi).map(|&i| x[i]).collect();
                lp_norm(vals.iter(), p_norms[gi])
            })
            .sum()
    }

    pub fn groups_disjoint(&self) -> bool {
        match self {
            ConstraintSet::LatentGroupBall { groups, dim, .. } => {
                groups.iter().map(|g| g.len()).sum::<usize>() == *dim
            }
            _ => true,
        }
    }

    pub fn exact_lmo_vector(&self, g: &Vector) -> Result<Vector> {
        if g.len() != self.dim() || self.is_matrix() {
            return Err(QfwError::DimensionMismatch { expected: self.dim(), got: g.len() });
        }
        Ok(match self {
            ConstraintSet::L1Ball { radius, .. } => lmo_vector::exact_lmo_l1(g, *radius)?.s,
            ConstraintSet::Simplex { .. } => lmo_vector::exact_lmo_simplex(g)?.s,
            ConstraintSet::LatentGroupBall { groups, p_norms, radius, .. } => {
                lmo_vector::exact_lmo_group(g, groups, p_norms, *radius)?.s
            }
            ConstraintSet::NuclearBall { .. } => unreachable!(),
        })
    }

    pub fn exact_lmo_matrix(&self, g: &Matrix) -> Result<Matrix> {
        let ConstraintSet::NuclearBall { radius, .. } = self else {
            return invalid("matrix gradient for a vector constraint set");
        };
        let top = lmo_matrix::exact_top_pair(g)?;
        Ok(&top.u * top.v.transpose() * (-radius))
    }

    /// A canonical feasible starting point: the origin for balls, `e_1`
    /// for the simplex.
    pub fn default_start_vector(&self) -> Vector {
        let mut x = Vector::zeros(self.dim());
        if let ConstraintSet::Simplex { .. } = self {
            x[0] = 1.0;
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diameters() {
        assert_eq!(ConstraintSet::l1_ball(5, 1.0).unwrap().diameter(), 2.0);
        assert_eq!(ConstraintSet::simplex(7).unwrap().diameter(), 2f64.sqrt());
        assert_eq!(ConstraintSet::nuclear_ball(3, 3, 1.0).unwrap().diameter(), 2.0);
        let g = ConstraintSet::latent_group_ball(
            6,
            vec![vec![0, 1, 2, 3], vec![4, 5]],
            vec![f64::INFINITY, 1.0],
            1.5,
        )
        .unwrap();
        // ||(1,1,1,1)||_2 = 2 for the l-inf group.
        assert!((g.diameter() - 2.0 * 1.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn nuclear_diameter_witnessed_by_rank_one_pairs() {
        // Largest Frobenius distance among sampled extreme points uv^T.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut best = 0.0f64;
        for _ in 0..200 {
            let u = Vector::from_fn(4, |_, _| rng.random::<f64>() - 0.5).normalize();
            let v = Vector::from_fn(4, |_, _| rng.random::<f64>() - 0.5).normalize();
            let a = &u * v.transpose();
            let b = -&a;
            best = best.max((a - b).norm());
        }
        assert!((best - 2.0).abs() < 1e-12);
    }

    #[test]
    fn membership_examples() {
        let s = ConstraintSet::simplex(3).unwrap();
        assert!(s.contains_vector(&Vector::from_element(3, 1.0 / 3.0)).unwrap());
        let b = ConstraintSet::l1_ball(3, 1.0).unwrap();
        assert!(!b.contains_vector(&Vector::from_vec(vec![0.6, -0.6, 0.0])).unwrap());
        assert!(b.contains_vector(&Vector::from_vec(vec![0.5, -0.5, 0.0])).unwrap());
        assert!(b.contains_vector(&Vector::zeros(2)).is_err());
        let n = ConstraintSet::nuclear_ball(3, 3, 1.0).unwrap();
        let u = Vector::from_vec(vec![1.0, 2.0, 2.0]) / 3.0;
        let v = Vector::from_vec(vec![0.0, 0.6, 0.8]);
        assert!(n.contains_matrix(&(&u * v.transpose())).unwrap());
        assert!(!n.contains_matrix(&(&u * v.transpose() * 1.01)).unwrap());
        assert!(n.contains_vector(&Vector::zeros(9)).is_err());
    }

    #[test]
    fn invalid_sets_rejected() {
        assert!(ConstraintSet::l1_ball(3, 0.0).is_err());
        assert!(ConstraintSet::l1_ball(0, 1.0).is_err());
        assert!(ConstraintSet::latent_group_ball(3, vec![vec![0, 1]], vec![2.0], 1.0).is_err());
        assert!(ConstraintSet::latent_group_ball(3, vec![vec![0, 1, 2]], vec![0.5], 1.0).is_err());
        assert!(ConstraintSet::latent_group_ball(3, vec![vec![0, 1, 5]], vec![2.0], 1.0).is_err());
    }

    #[test]
    fn disjoint_group_norm_is_sum_of_group_norms() {
        let s = ConstraintSet::latent_group_ball(
            4,
            vec![vec![0, 1], vec![2, 3]],
            vec![2.0, 1.0],
            1.0,
        )
        .unwrap();
        let x = Vector::from_vec(vec![0.3, 0.4, -0.1, 0.2]);
        assert!((s.group_norm_upper(&x) - (0.5 + 0.3)).abs() < 1e-12);
        assert!(s.groups_disjoint());
    }
}
