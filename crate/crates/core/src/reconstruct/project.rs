use crate::error::{Error, Result};
use crate::geometry::{ReconstructionVolume, VoxelGrid};

/// Maximum-intensity projection along depth.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthProjection {
    pub nx: usize,
    pub ny: usize,
    /// Largest magnitude over depth, row-major `[y][x]`.
    pub image: Vec<f64>,
    /// Plane index where the maximum occurs; the shallower plane wins ties.
    pub depth_index: Vec<usize>,
    /// Depth of that plane.
    pub depth: Vec<f64>,
}

/// Project frame `frame` of a plane-stacked volume onto the lateral axes.
///
/// With `percentile = Some(p)`, voxels below the `p`-th percentile of the
/// volume's magnitudes are zeroed before projecting.
pub fn project_max_depth(
    vol: &ReconstructionVolume,
    frame: usize,
    percentile: Option<f64>,
) -> Result<DepthProjection> {
    let (nx, ny, depths): (usize, usize, Vec<f64>) = match &vol.grid {
        VoxelGrid::Cuboid(g) => (g.nx, g.ny, (0..g.nz).map(|k| g.depth(k)).collect()),
        VoxelGrid::Frustum(f) => (f.base.nx, f.base.ny, f.depths.clone()),
        VoxelGrid::Explicit(_) => {
            return Err(Error::InvalidGrid(
                "depth projection needs a cuboid or frustum grid".into(),
            ))
        }
    };
    if frame >= vol.n_frames() {
        return Err(Error::InvalidArgument(format!(
            "frame {frame} out of range, volume has {}",
            vol.n_frames()
        )));
    }
    let mut mags: Vec<f64> = vol.frame(frame).iter().map(|c| c.norm()).collect();
    if let Some(p) = percentile {
        if !(0.0..=100.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("percentile must lie in [0, 100], got {p}")));
        }
        let mut sorted = mags.clone();
        sorted.sort_by(f64::total_cmp);
        let idx = ((p / 100.0) * (sorted.len() - 1) as f64).round() as usize;
        let cut = sorted[idx];
        mags.iter_mut().filter(|v| **v < cut).for_each(|v| *v = 0.0);
    }
    let n = nx * ny;
    let mut image = vec![f64::NEG_INFINITY; n];
    let mut depth_index = vec![0; n];
    for k in 0..depths.len() {
        for i in 0..n {
            let v = mags[k * n + i];
            if v > image[i] {
                image[i] = v;
                depth_index[i] = k;
            }
        }
    }
    let depth = depth_index.iter().map(|&k| depths[k]).collect();
    Ok(DepthProjection {
        nx,
        ny,
        image,
        depth_index,
        depth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ExplicitVoxels, UniformGrid3D};
    use crate::Complex64;

    fn volume(values: &[f64]) -> ReconstructionVolume {
        let g = UniformGrid3D::new(2, 1, 3, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        ReconstructionVolume {
            grid: VoxelGrid::Cuboid(g),
            field: values.iter().map(|&v| Complex64::new(0.0, v)).collect(),
            times: None,
        }
    }

    #[test]
    fn picks_maximum_and_first_tie() {
        let v = volume(&[1.0, 5.0, 3.0, 5.0, 3.0, 2.0]);
        let p = project_max_depth(&v, 0, None).unwrap();
        assert_eq!(p.image, vec![3.0, 5.0]);
        assert_eq!(p.depth_index, vec![1, 0]);
        assert_eq!(p.depth, vec![2.0, 1.0]);
    }

    #[test]
    fn percentile_zeroes_dim_voxels_first() {
        let vals = [1.0, 5.0, 0.5, 0.2, 4.0, 2.0];
        let v = volume(&vals);
        let p = project_max_depth(&v, 0, Some(30.0)).unwrap();
        // sort-based reference: drop the voxels under the 30th percentile, then project
        let mut sorted = vals.to_vec();
        sorted.sort_by(f64::total_cmp);
        let cut = sorted[(0.3 * 5.0_f64).round() as usize];
        let kept: Vec<f64> = vals.iter().map(|&x| if x < cut { 0.0 } else { x }).collect();
        let want: Vec<f64> = (0..2).map(|i| (0..3).map(|k| kept[2 * k + i]).fold(0.0, f64::max)).collect();
        assert_eq!(p.image, want);
        let c = project_max_depth(&volume(&[2.0; 6]), 0, Some(30.0)).unwrap();
        assert_eq!(c.image, vec![2.0, 2.0]);
        assert_eq!(c.depth_index, vec![0, 0]);
    }

    #[test]
    fn explicit_grid_is_rejected() {
        let e = ExplicitVoxels::from_points(&[[0.0, 0.0, 1.0]]).unwrap();
        let v = ReconstructionVolume {
            grid: VoxelGrid::Explicit(e),
            field: vec![Complex64::new(1.0, 0.0)],
            times: None,
        };
        assert!(project_max_depth(&v, 0, None).is_err());
    }
}
