use num_complex::Complex;
use rayon::prelude::*;

use super::{Dictionary, ProductImage};
use crate::covertree::{nn_exact_brute, CoverTree, Tolerance};
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Projection of one pixel onto the cone of the dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProjection<T> {
    pub atom_id: usize,
    /// Nonnegative intensity relative to the stored (unnormalized) atom.
    pub gamma: T,
    /// `gamma * psi_{atom_id}`.
    pub projected: Vec<Complex<T>>,
    pub distances_evaluated: u64,
    /// `real(<z, psi>) <= 0` for the selected atom; the rescaling clamps to
    /// zero and the result need not be the true cone projection.
    pub clamped: bool,
}

/// How each pixel is projected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionMode<T> {
    /// Exhaustive search over the unit atoms against the unnormalized pixel.
    Exact,
    /// Tree search on the normalized pixel. `Additive` tolerances are in
    /// squared-residual units of the cone projection itself.
    Tree(Tolerance<T>),
}

fn rescale<T: Real>(dict: &Dictionary<T>, z: &[Complex<T>], id: usize, evaluated: u64) -> ConeProjection<T> {
    let atom = dict.atom(id);
    let n = dict.norm(id);
    let corr = scalar::inner(z, atom).re / (n * n);
    let gamma = corr.max(T::zero());
    ConeProjection {
        atom_id: id,
        gamma,
        projected: atom.iter().map(|c| c * gamma).collect(),
        distances_evaluated: evaluated,
        clamped: !(corr > T::zero()),
    }
}

/// Nearest unit atom to the normalized pixel by exhaustive search,
/// followed by nonnegative rescaling. The query is formed exactly as in
/// [`cone_project_approx`] so both agree bit for bit when the tree search
/// is exact.
pub fn cone_project_exact<T: Real>(dict: &Dictionary<T>, z: &[Complex<T>]) -> Result<ConeProjection<T>> {
    let norm = scalar::norm(z);
    let nn = if norm > T::zero() {
        let query: Vec<Complex<T>> = z.iter().map(|c| c / norm).collect();
        nn_exact_brute(dict.normalized(), &query)?
    } else {
        nn_exact_brute(dict.normalized(), z)?
    };
    Ok(rescale(dict, z, nn.point_id, nn.distances_evaluated))
}

/// Tree search for the normalized pixel warm-started at `prev_atom`, then
/// the same rescaling as [`cone_project_exact`]. A zero pixel projects to
/// zero without searching.
pub fn cone_project_approx<T: Real>(
    dict: &Dictionary<T>,
    tree: &CoverTree<T>,
    z: &[Complex<T>],
    prev_atom: usize,
    tol: Tolerance<T>,
) -> Result<ConeProjection<T>> {
    if tree.points().len() != dict.len() || tree.points().dim() != dict.dim() {
        return Err(Error::Config("tree does not match dictionary".into()));
    }
    if z.len() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: z.len(),
        });
    }
    dict.atoms().check_id(prev_atom)?;
    tol.check()?;

    let norm_sq = scalar::norm_sqr(z);
    if norm_sq == T::zero() {
        return Ok(ConeProjection {
            atom_id: prev_atom,
            gamma: T::zero(),
            projected: scalar::zeros(dict.dim()),
            distances_evaluated: 0,
            clamped: false,
        });
    }
    let norm = scalar::norm(z);
    let query: Vec<Complex<T>> = z.iter().map(|c| c / norm).collect();
    // On the unit sphere, an additive slack e in squared query distance
    // bounds the cone residual slack by e * |z|^2.
    let tree_tol = match tol {
        Tolerance::Multiplicative(e) => Tolerance::Multiplicative(e),
        Tolerance::Additive(e) => Tolerance::Additive(e / norm_sq),
    };
    let hit = tree.search(&query, prev_atom, tree_tol)?;
    Ok(rescale(dict, z, hit.point_id, hit.distances_evaluated))
}

/// Column-wise projection of a whole image.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductProjection<T> {
    pub image: ProductImage<T>,
    pub atom_ids: Vec<usize>,
    pub gammas: Vec<T>,
    pub distances_evaluated: u64,
    /// Pixels whose selected atom had nonpositive correlation.
    pub clamped_pixels: usize,
}

/// Projects every pixel of `z` independently (in parallel). `prev_atoms`
/// supplies the warm start per pixel for tree modes.
pub fn product_project<T: Real>(
    dict: &Dictionary<T>,
    tree: Option<&CoverTree<T>>,
    z: &ProductImage<T>,
    prev_atoms: &[usize],
    mode: ProjectionMode<T>,
) -> Result<ProductProjection<T>> {
    if z.slices() != dict.dim() {
        return Err(Error::DimensionMismatch {
            expected: dict.dim(),
            found: z.slices(),
        });
    }
    if prev_atoms.len() != z.pixels() {
        return Err(Error::DimensionMismatch {
            expected: z.pixels(),
            found: prev_atoms.len(),
        });
    }
    let tree = match mode {
        ProjectionMode::Exact => None,
        ProjectionMode::Tree(_) => Some(tree.ok_or_else(|| Error::Config("tree projection needs a tree".into()))?),
    };

    let per_pixel: Vec<ConeProjection<T>> = (0..z.pixels())
        .into_par_iter()
        .map(|j| {
            let col = z.column(j);
            let out = match (mode, tree) {
                (ProjectionMode::Tree(tol), Some(tree)) => cone_project_approx(dict, tree, &col, prev_atoms[j], tol),
                _ => cone_project_exact(dict, &col),
            };
            out.map_err(|e| Error::Pixel {
                pixel: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let mut image = ProductImage::zeros(z.slices(), z.pixels());
    let mut atom_ids = Vec::with_capacity(z.pixels());
    let mut gammas = Vec::with_capacity(z.pixels());
    let mut distances = 0u64;
    let mut clamped = 0usize;
    for (j, p) in per_pixel.into_iter().enumerate() {
        image.set_column(j, &p.projected);
        atom_ids.push(p.atom_id);
        gammas.push(p.gamma);
        distances += p.distances_evaluated;
        clamped += usize::from(p.clamped);
    }
    Ok(ProductProjection {
        image,
        atom_ids,
        gammas,
        distances_evaluated: distances,
        clamped_pixels: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covertree::PointSet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex<f64>> {
        (0..n)
            .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    }

    fn random_dict(d: usize, n: usize, seed: u64) -> Dictionary<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<_> = (0..d)
            .map(|_| {
                let scale = 0.5 + rng.random::<f64>() * 2.0;
                random_vec(&mut rng, n)
                    .into_iter()
                    .map(|c| c * scale)
                    .collect::<Vec<_>>()
            })
            .collect();
        Dictionary::unlabeled(PointSet::from_rows(&rows).unwrap()).unwrap()
    }

    /// Best nonnegative fit over every atom: min_{i, g >= 0} |z - g psi_i|.
    fn cone_oracle(dict: &Dictionary<f64>, z: &[Complex<f64>]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for i in 0..dict.len() {
            let a = dict.atom(i);
            let g = (scalar::inner(z, a).re / scalar::norm_sqr(a)).max(0.0);
            let r: Vec<_> = z.iter().zip(a).map(|(x, y)| x - y * g).collect();
            let res = scalar::norm(&r);
            if res < best.1 {
                best = (i, res);
            }
        }
        best
    }

    fn residual(z: &[Complex<f64>], p: &[Complex<f64>]) -> f64 {
        scalar::dist(z, p)
    }

    #[test]
    fn unit_atom_is_a_fixed_point() {
        let dict = random_dict(30, 8, 1);
        let z = dict.normalized_atom(7).to_vec();
        let p = cone_project_exact(&dict, &z).unwrap();
        assert_eq!(p.atom_id, 7);
        for (a, b) in p.projected.iter().zip(&z) {
            assert!((a - b).norm() <= 1e-12);
        }
    }

    #[test]
    fn negative_correlation_clamps_to_zero() {
        let atoms = PointSet::from_real_rows(&[[1.0_f64, 0.0], [0.0, 1.0]]).unwrap();
        let dict = Dictionary::unlabeled(atoms).unwrap();
        let z = vec![Complex::new(-1.0, 0.0), Complex::new(-2.0, 0.0)];
        let p = cone_project_exact(&dict, &z).unwrap();
        assert_eq!(p.gamma, 0.0);
        assert!(p.clamped);
        assert!(p.projected.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn exact_projection_matches_cone_oracle() {
        let dict = random_dict(50, 12, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut checked = 0;
        for _ in 0..200 {
            let z = random_vec(&mut rng, 12);
            let p = cone_project_exact(&dict, &z).unwrap();
            if p.clamped {
                continue;
            }
            let (id, res) = cone_oracle(&dict, &z);
            assert_eq!(p.atom_id, id);
            assert!((residual(&z, &p.projected) - res).abs() <= 1e-12 * (1.0 + res));
            checked += 1;
        }
        assert!(checked > 150);
    }

    #[test]
    fn approx_with_zero_epsilon_matches_exact_distance() {
        let dict = random_dict(200, 10, 4);
        let tree = dict.build_tree().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = random_vec(&mut rng, 10);
            let e = cone_project_exact(&dict, &z).unwrap();
            let a = cone_project_approx(&dict, &tree, &z, 0, Tolerance::exact()).unwrap();
            assert!((residual(&z, &e.projected) - residual(&z, &a.projected)).abs() <= 1e-12);
        }
    }

    #[test]
    fn scaled_unit_atom_recovers_scale() {
        let dict = random_dict(100, 6, 6);
        let tree = dict.build_tree().unwrap();
        let z: Vec<_> = dict.normalized_atom(42).iter().map(|c| c * 2.0).collect();
        let p = cone_project_approx(&dict, &tree, &z, 0, Tolerance::Multiplicative(0.4)).unwrap();
        assert_eq!(p.atom_id, 42);
        let unit_gamma = p.gamma * dict.norm(42);
        assert!((unit_gamma - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_pixel_keeps_previous_atom() {
        let dict = random_dict(10, 4, 7);
        let tree = dict.build_tree().unwrap();
        let p = cone_project_approx(&dict, &tree, &scalar::zeros(4), 3, Tolerance::Multiplicative(0.2)).unwrap();
        assert_eq!((p.atom_id, p.gamma, p.distances_evaluated), (3, 0.0, 0));
    }

    #[test]
    fn multiplicative_contract_against_exact() {
        let dict = random_dict(400, 8, 8);
        let tree = dict.build_tree().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let z = random_vec(&mut rng, 8);
            let e = cone_project_exact(&dict, &z).unwrap();
            let a = cone_project_approx(
                &dict,
                &tree,
                &z,
                rng.random_range(0..400),
                Tolerance::Multiplicative(0.4),
            )
            .unwrap();
            assert!(residual(&z, &a.projected) <= 1.4 * residual(&z, &e.projected) + 1e-12);
        }
    }

    #[test]
    fn additive_contract_against_exact() {
        let dict = random_dict(400, 8, 10);
        let tree = dict.build_tree().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for eps in [0.0, 1e-2, 0.5] {
            for _ in 0..200 {
                let z = random_vec(&mut rng, 8);
                let e = cone_project_exact(&dict, &z).unwrap();
                let a = cone_project_approx(&dict, &tree, &z, 0, Tolerance::Additive(eps)).unwrap();
                let (re, ra) = (residual(&z, &e.projected), residual(&z, &a.projected));
                assert!(ra * ra <= re * re + eps + 1e-12, "{ra}^2 > {re}^2 + {eps}");
            }
        }
    }

    #[test]
    fn product_projection_is_columnwise_and_idempotent() {
        let dict = random_dict(60, 5, 12);
        let tree = dict.build_tree().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pixels = 256;
        let z = ProductImage::from_vec(5, pixels, random_vec(&mut rng, 5 * pixels)).unwrap();
        let prev = vec![0; pixels];
        let p = product_project(&dict, None, &z, &prev, ProjectionMode::Exact).unwrap();
        let mut total = 0;
        for j in 0..pixels {
            let single = cone_project_exact(&dict, &z.column(j)).unwrap();
            assert_eq!(single.atom_id, p.atom_ids[j]);
            assert_eq!(single.projected, p.image.column(j));
            total += single.distances_evaluated;
        }
        assert_eq!(total, p.distances_evaluated);

        let again = product_project(&dict, None, &p.image, &p.atom_ids, ProjectionMode::Exact).unwrap();
        for (a, b) in again.image.as_slice().iter().zip(p.image.as_slice()) {
            assert!((a - b).norm() <= 1e-12 * (1.0 + b.norm()));
        }

        let treed = product_project(&dict, Some(&tree), &z, &prev, ProjectionMode::Tree(Tolerance::exact())).unwrap();
        assert_eq!(treed.atom_ids.len(), pixels);
    }

    #[test]
    fn pixel_errors_carry_the_pixel_index() {
        let dict = random_dict(5, 3, 14);
        let z = ProductImage::from_vec(3, 2, scalar::zeros(6)).unwrap();
        let err = product_project(&dict, None, &z, &[0, 99], ProjectionMode::Tree(Tolerance::exact())).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let tree = dict.build_tree().unwrap();
        let err = product_project(
            &dict,
            Some(&tree),
            &z,
            &[0, 99],
            ProjectionMode::Tree(Tolerance::exact()),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Pixel { pixel: 1, .. }), "{err}");
    }

    #[test]
    fn works_in_single_precision() {
        let atoms = PointSet::from_real_rows(&[[1.0_f32, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]]).unwrap();
        let dict = Dictionary::unlabeled(atoms).unwrap();
        let tree = dict.build_tree().unwrap();
        let z = [
            Complex::new(0.1_f32, 0.0),
            Complex::new(0.2, 0.0),
            Complex::new(3.0, 0.0),
        ];
        let p = cone_project_approx(&dict, &tree, &z, 0, Tolerance::exact()).unwrap();
        assert_eq!(p.atom_id, 2);
        assert!((p.gamma - 1.5).abs() < 1e-6);
    }
}
