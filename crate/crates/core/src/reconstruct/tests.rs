use super::*;
use crate::geometry::{PointList, UniformGrid2D};
use crate::metrics::ncc_magnitude;
use crate::oracle::backproject;
use crate::phasor::{to_frequency, PhasorKernel};
use crate::sim::{simulate, Scene, SimConfig};
use crate::spectral::test_util::rel_l2;
use crate::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET: [f64; 3] = [0.05, -0.04, 0.5];

fn slices_for(relay: RelaySampling, illum: PointList) -> FrequencySlices {
    slices_at(relay, illum, &Scene::point(TARGET, 1.0))
}

fn slices_at(relay: RelaySampling, illum: PointList, scene: &Scene) -> FrequencySlices {
    let dt = 20e-12;
    let n_bins = 384;
    let m = simulate(scene, &relay, &illum, &SimConfig::new(dt, n_bins)).unwrap();
    let k = PhasorKernel::new(0.1, 0.01, n_bins, dt).unwrap();
    to_frequency(&m, &k).unwrap()
}

fn wall() -> UniformGrid2D {
    UniformGrid2D::centered(16, 0.04, 0.0).unwrap()
}

fn uniform_slices() -> FrequencySlices {
    slices_for(
        RelaySampling::Uniform(wall()),
        PointList::planar(vec![[0.0, 0.0], [0.12, -0.08]]).unwrap(),
    )
}

fn cuboid() -> UniformGrid3D {
    UniformGrid3D::over(&wall(), 6, 0.42, 0.03).unwrap()
}

fn phase_only() -> ReconOptions {
    ReconOptions {
        falloff: false,
        eps: 1e-10,
        ..ReconOptions::default()
    }
}

fn random_xy(n: usize, half: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.random_range(-half..half), rng.random_range(-half..half)])
        .collect()
}

#[test]
fn rsd_without_falloff_equals_backprojection() {
    let s = uniform_slices();
    let g = cuboid();
    let v = rsd(&s, &g, &phase_only()).unwrap();
    let want = backproject(&s, &g.positions_all());
    assert!(rel_l2(&v.field, &want) < 1e-10);
}

#[test]
fn rsd_with_falloff_correlates_with_backprojection() {
    let s = uniform_slices();
    let g = cuboid();
    let v = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let want = backproject(&s, &g.positions_all());
    assert!(ncc_magnitude(&v.field, &want).unwrap() > 0.95);
    let peak = v.argmax_position();
    assert!((peak[0] - TARGET[0]).abs() < 0.05 && (peak[2] - TARGET[2]).abs() < 0.04);
}

#[test]
fn rsd_on_shifted_and_wider_cuboid() {
    let s = uniform_slices();
    let r = wall();
    let g = UniformGrid3D::new(20, 12, 3, r.dx, r.dy, 0.05, r.x0 - 3.0 * r.dx, r.y0 + 2.0 * r.dy, 0.45).unwrap();
    let v = rsd(&s, &g, &phase_only()).unwrap();
    assert!(rel_l2(&v.field, &backproject(&s, &g.positions_all())) < 1e-10);
    let off = UniformGrid3D { x0: g.x0 + 0.3 * r.dx, ..g };
    assert!(rsd(&s, &off, &phase_only()).is_err());
}

#[test]
fn srsd_unit_scale_equals_rsd() {
    let s = uniform_slices();
    let g = cuboid();
    let f = FrustumGrid::new(wall(), (0..g.nz).map(|k| g.depth(k)).collect(), vec![1.0; g.nz], vec![1.0; g.nz]).unwrap();
    let a = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let b = srsd(&s, &f, &ReconOptions::default()).unwrap();
    assert!(rel_l2(&b.field, &a.field) < 1e-8);
}

#[test]
fn srsd_matches_backprojection_on_frustum() {
    let s = uniform_slices();
    let f = FrustumGrid::linear(wall(), vec![0.42, 0.46, 0.5, 0.54, 0.58], 0.4, 0.4).unwrap();
    let v = srsd(&s, &f, &phase_only()).unwrap();
    let want = backproject(&s, &f.positions_all());
    let e = rel_l2(&v.field, &want);
    assert!(ncc_magnitude(&v.field, &want).unwrap() > 0.99, "rel err {e}");
}

#[test]
fn nursd1_on_uniform_points_equals_rsd() {
    let s = uniform_slices();
    let pts: Vec<[f64; 2]> = wall().positions().iter().map(|p| [p[0], p[1]]).collect();
    let mut t = s.clone();
    t.relay = RelaySampling::non_uniform(pts, 0.0).unwrap();
    let g = cuboid();
    let a = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let opts = ReconOptions {
        eps: 1e-9,
        ..ReconOptions::default()
    };
    let b = nursd1(&t, &g, &opts).unwrap();
    assert!(rel_l2(&b.field, &a.field) < 1e-7);
}

#[test]
fn nursd1_scattered_relay_matches_backprojection() {
    let xy = random_xy(200, 0.3, 3);
    let s = slices_for(
        RelaySampling::non_uniform(xy, 0.0).unwrap(),
        PointList::planar(vec![[0.0, 0.0]]).unwrap(),
    );
    let g = UniformGrid3D::new(16, 16, 4, 0.02, 0.02, 0.04, -0.15, -0.15, 0.44).unwrap();
    let v = nursd1(&s, &g, &phase_only()).unwrap();
    let want = backproject(&s, &g.positions_all());
    let err = rel_l2(&v.field, &want);
    assert!(ncc_magnitude(&v.field, &want).unwrap() > 0.99, "rel err {err}");
}

#[test]
fn nursd2_on_grid_points_equals_rsd() {
    let s = uniform_slices();
    let g = cuboid();
    let a = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let opts = ReconOptions {
        eps: 1e-9,
        ..ReconOptions::default()
    };
    let b = nursd2(&s, &ExplicitVoxels::from_cuboid(&g), &opts).unwrap();
    assert!(rel_l2(&b.field, &a.field) < 1e-7);
}

#[test]
fn nursd2_arbitrary_targets_track_backprojection() {
    let s = uniform_slices();
    let planes = [0.44, 0.5, 0.55]
        .iter()
        .enumerate()
        .map(|(k, &z)| VoxelPlane {
            z,
            points: random_xy(40, 0.25, 10 + k as u64),
        })
        .collect();
    let e = ExplicitVoxels::new(planes).unwrap();
    let v = nursd2(&s, &e, &phase_only()).unwrap();
    let want = backproject(&s, &VoxelGrid::Explicit(e).positions());
    let err = rel_l2(&v.field, &want);
    assert!(ncc_magnitude(&v.field, &want).unwrap() > 0.99, "rel err {err}");
}

#[test]
fn nursd3_on_uniform_data_equals_rsd() {
    let s = uniform_slices();
    let g = cuboid();
    let a = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let opts = ReconOptions {
        eps: 1e-9,
        ..ReconOptions::default()
    };
    let b = nursd3(&s, &ExplicitVoxels::from_cuboid(&g), &opts).unwrap();
    assert!(rel_l2(&b.field, &a.field) < 1e-7);
}

#[test]
fn nursd3_scattered_everything() {
    let s = slices_for(
        RelaySampling::non_uniform(random_xy(220, 0.3, 4), 0.0).unwrap(),
        PointList::planar(vec![[0.05, 0.0]]).unwrap(),
    );
    let e = ExplicitVoxels::new(vec![
        VoxelPlane {
            z: 0.47,
            points: random_xy(50, 0.2, 21),
        },
        VoxelPlane {
            z: 0.52,
            points: random_xy(50, 0.2, 22),
        },
    ])
    .unwrap();
    let v = nursd3(&s, &e, &phase_only()).unwrap();
    let want = backproject(&s, &VoxelGrid::Explicit(e).positions());
    let err = rel_l2(&v.field, &want);
    assert!(ncc_magnitude(&v.field, &want).unwrap() > 0.99, "rel err {err}");
}

fn flat_as_nonplanar(s: &FrequencySlices) -> FrequencySlices {
    let mut t = s.clone();
    t.relay = RelaySampling::non_planar(s.relay.positions()).unwrap();
    t.illuminations = PointList::spatial(s.relay.illumination_positions(&s.illuminations)).unwrap();
    t
}

#[test]
fn flat_relay_through_3d_paths_equals_nursd1() {
    let s = uniform_slices();
    let g = cuboid();
    let opts = ReconOptions {
        eps: 1e-9,
        ..ReconOptions::default()
    };
    let a = rsd(&s, &g, &opts).unwrap();
    let t = flat_as_nonplanar(&s);
    for alg in [Algorithm::Rsd3d, Algorithm::Nursd3d] {
        let b = run(&t, OutputGrid::Voxels(VoxelGrid::Cuboid(g)), alg, &opts).unwrap();
        assert!(rel_l2(&b.field, &a.field) < 1e-7, "{alg}");
    }
}

fn curved_slices() -> FrequencySlices {
    let pts: Vec<[f64; 3]> = wall()
        .positions()
        .iter()
        .map(|p| [p[0], p[1], 0.04 * (std::f64::consts::PI * p[0] / 0.3).sin()])
        .collect();
    slices_for(
        RelaySampling::non_planar(pts).unwrap(),
        PointList::spatial(vec![[0.0, 0.0, 0.0]]).unwrap(),
    )
}

#[test]
fn curved_relay_3d_paths_track_backprojection() {
    let s = curved_slices();
    let g = cuboid();
    let want = backproject(&s, &g.positions_all());
    for alg in [Algorithm::Rsd3d, Algorithm::Nursd3d] {
        let v = run(&s, OutputGrid::Voxels(VoxelGrid::Cuboid(g)), alg, &phase_only()).unwrap();
        let c = ncc_magnitude(&v.field, &want).unwrap();
        assert!(c > 0.99, "{alg}: ncc {c}");
    }
}

#[test]
fn scaled_targets_on_full_frustum_track_srsd() {
    let s = uniform_slices();
    let f = FrustumGrid::linear(wall(), vec![0.42, 0.5, 0.58], 0.5, 0.5).unwrap();
    let a = srsd(&s, &f, &phase_only()).unwrap();
    let b = srsd_nursd2(&s, &ScaledTargets::from_frustum(&f), &phase_only()).unwrap();
    assert!(ncc_magnitude(&a.field, &b.field).unwrap() > 0.99);
    let unit = FrustumGrid::new(wall(), vec![0.45, 0.5], vec![1.0; 2], vec![1.0; 2]).unwrap();
    let a = srsd(&s, &unit, &phase_only()).unwrap();
    let b = srsd_nursd2(&s, &ScaledTargets::from_frustum(&unit), &phase_only()).unwrap();
    assert!(rel_l2(&b.field, &a.field) < 1e-7);
}

#[test]
fn video_at_time_zero_is_the_static_volume() {
    let s = uniform_slices();
    let g = cuboid();
    let opts = ReconOptions::default();
    let a = rsd(&s, &g, &opts).unwrap();
    let v = light_transport_video(&s, OutputGrid::Voxels(VoxelGrid::Cuboid(g)), Algorithm::Rsd, vec![0.0], &opts).unwrap();
    assert_eq!(v.n_frames(), 1);
    assert!(a.field.iter().zip(&v.field).all(|(x, y)| x == y));
}

#[test]
fn reconstruction_is_linear() {
    let s = uniform_slices();
    let g = cuboid();
    let opts = ReconOptions::default();
    let a = rsd(&s, &g, &opts).unwrap();
    let c = Complex64::new(-0.7, 2.1);
    let b = rsd(&s.scaled(c), &g, &opts).unwrap();
    let scaled: Vec<Complex64> = a.field.iter().map(|v| v * c).collect();
    assert!(rel_l2(&b.field, &scaled) < 1e-12);
}

#[test]
fn incompatible_inputs_are_reported() {
    let s = uniform_slices();
    let g = cuboid();
    let mut scattered = s.clone();
    scattered.relay = RelaySampling::non_uniform(random_xy(s.n_detect(), 0.3, 1), 0.0).unwrap();
    match rsd(&scattered, &g, &ReconOptions::default()) {
        Err(Error::Incompatible { reason, .. }) => assert!(reason.contains("nursd1"), "{reason}"),
        other => panic!("expected incompatibility, got {other:?}"),
    }
    let e = ExplicitVoxels::from_cuboid(&g);
    let r = run(&s, OutputGrid::Voxels(VoxelGrid::Explicit(e)), Algorithm::Rsd, &ReconOptions::default());
    assert!(matches!(r, Err(Error::Incompatible { .. })));
    let shallow = UniformGrid3D { z0: -0.1, ..g };
    assert!(rsd(&s, &shallow, &ReconOptions::default()).is_err());
    let bad_eps = ReconOptions {
        eps: 0.5,
        ..ReconOptions::default()
    };
    assert!(matches!(nursd1(&s, &cuboid(), &bad_eps), Err(Error::Tolerance(_))));
}

#[test]
fn stage_one_grid_must_contain_the_relay() {
    let s = curved_slices();
    let opts = ReconOptions {
        stage1_grid: Some(UniformGrid3D::new(4, 4, 2, 0.01, 0.01, 0.01, 0.0, 0.0, 0.0).unwrap()),
        ..ReconOptions::default()
    };
    assert!(rsd3d(&s, &cuboid(), &opts).is_err());
}

#[test]
fn algorithm_names_round_trip() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
    }
    assert!("fk".parse::<Algorithm>().is_err());
}

trait AllPositions {
    fn positions_all(&self) -> Vec<[f64; 3]>;
}

impl AllPositions for UniformGrid3D {
    fn positions_all(&self) -> Vec<[f64; 3]> {
        VoxelGrid::Cuboid(*self).positions()
    }
}

impl AllPositions for FrustumGrid {
    fn positions_all(&self) -> Vec<[f64; 3]> {
        VoxelGrid::Frustum(self.clone()).positions()
    }
}

fn lateral_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

#[test]
fn srsd_reaches_beyond_the_relay_footprint() {
    let edge = [0.44, 0.0, 0.5];
    let s = slices_at(
        RelaySampling::Uniform(wall()),
        PointList::planar(vec![[0.0, 0.0]]).unwrap(),
        &Scene::point(edge, 1.0),
    );
    let depths = vec![0.44, 0.47, 0.5, 0.53, 0.56];
    let f = FrustumGrid::new(wall(), depths.clone(), vec![0.5; 5], vec![0.5; 5]).unwrap();
    let wide = srsd(&s, &f, &ReconOptions::default()).unwrap();
    assert!(lateral_distance(wide.argmax_position(), edge) <= 0.08 + 1e-9);
    let g = UniformGrid3D::over(&wall(), 5, 0.44, 0.03).unwrap();
    let narrow = rsd(&s, &g, &ReconOptions::default()).unwrap();
    assert!(lateral_distance(narrow.argmax_position(), edge) > 0.1);
}

#[test]
fn half_relay_keeps_the_peak() {
    let s = uniform_slices();
    let g = cuboid();
    let full = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let keep: Vec<usize> = (0..s.n_detect()).filter(|_| rng.random_bool(0.5)).collect();
    let pos = s.relay.positions();
    let mut coeffs = Vec::new();
    for p in 0..s.n_illum() {
        for &c in &keep {
            coeffs.extend((0..s.n_freq()).map(|f| s.at(p, c, f)));
        }
    }
    let half = FrequencySlices::new(
        RelaySampling::non_uniform(keep.iter().map(|&c| [pos[c][0], pos[c][1]]).collect(), 0.0).unwrap(),
        s.illuminations.clone(),
        s.frequencies.clone(),
        coeffs,
    )
    .unwrap();
    let v = nursd1(&half, &g, &ReconOptions::default()).unwrap();
    assert_eq!(v.argmax(0), full.argmax(0));
}

#[test]
fn single_relay_sample_matches_oracle() {
    let s = uniform_slices();
    let pos = s.relay.positions();
    let c = 37;
    let coeffs: Vec<Complex64> = (0..s.n_illum())
        .flat_map(|p| (0..s.n_freq()).map(move |f| (p, f)))
        .map(|(p, f)| s.at(p, c, f))
        .collect();
    let one = FrequencySlices::new(
        RelaySampling::non_uniform(vec![[pos[c][0], pos[c][1]]], 0.0).unwrap(),
        s.illuminations.clone(),
        s.frequencies.clone(),
        coeffs,
    )
    .unwrap();
    let g = cuboid();
    let v = nursd1(&one, &g, &phase_only()).unwrap();
    assert!(rel_l2(&v.field, &backproject(&one, &g.positions_all())) < 1e-7);
}

#[test]
fn nursd2_subset_agrees_with_rsd_subset() {
    let s = uniform_slices();
    let g = cuboid();
    let full = rsd(&s, &g, &ReconOptions::default()).unwrap();
    let all = g.positions_all();
    let picked: Vec<usize> = (0..all.len()).filter(|i| i % 4 == 1).collect();
    let e = ExplicitVoxels::from_points(&picked.iter().map(|&i| all[i]).collect::<Vec<_>>()).unwrap();
    let opts = ReconOptions {
        eps: 1e-9,
        ..ReconOptions::default()
    };
    let v = nursd2(&s, &e, &opts).unwrap();
    let want: Vec<Complex64> = picked.iter().map(|&i| full.field[i]).collect();
    assert!(rel_l2(&v.field, &want) < 1e-7);
}

#[test]
fn single_target_matches_oracle() {
    // off-lattice reads interpolate a kernel sampled at the relay pitch,
    // which is coarser than half the shortest wavelength here
    let s = uniform_slices();
    let e = ExplicitVoxels::from_points(&[[0.013, -0.021, 0.5]]).unwrap();
    let v = nursd2(&s, &e, &phase_only()).unwrap();
    let want = backproject(&s, &[[0.013, -0.021, 0.5]]);
    assert!((v.field[0] - want[0]).norm() < 0.05 * want[0].norm());
    let t = ScaledTargets {
        center: [wall().x0 + 8.0 * 0.04, wall().y0 + 8.0 * 0.04],
        planes: vec![ScaledPlane {
            z: 0.5,
            alpha: 0.5,
            beta: 0.5,
            points: vec![[1.3, -0.4]],
        }],
    };
    let v = srsd_nursd2(&s, &t, &phase_only()).unwrap();
    let p = t.physical(0.04, 0.04).planes[0].points[0];
    let want = backproject(&s, &[[p[0], p[1], 0.5]]);
    assert!((v.field[0] - want[0]).norm() < 0.05 * want[0].norm());
}

#[test]
fn curved_relay_localizes_scatterer() {
    let s = curved_slices();
    let g = cuboid();
    for alg in [Algorithm::Rsd3d, Algorithm::Nursd3d] {
        let v = run(&s, OutputGrid::Voxels(VoxelGrid::Cuboid(g)), alg, &ReconOptions::default()).unwrap();
        let p = v.argmax_position();
        assert!((p[0] - TARGET[0]).abs() <= g.dx && (p[1] - TARGET[1]).abs() <= g.dy, "{alg}: {p:?}");
        assert!((p[2] - TARGET[2]).abs() <= g.dz + 1e-9, "{alg}: {p:?}");
    }
}

#[test]
fn zero_measurement_gives_zero_volume() {
    let s = uniform_slices().scaled(Complex64::new(0.0, 0.0));
    let g = cuboid();
    let f = FrustumGrid::linear(wall(), vec![0.45, 0.5], 0.5, 0.5).unwrap();
    let e = ExplicitVoxels::from_cuboid(&g);
    let t = flat_as_nonplanar(&s);
    let vols = [
        rsd(&s, &g, &ReconOptions::default()).unwrap(),
        srsd(&s, &f, &ReconOptions::default()).unwrap(),
        nursd1(&s, &g, &ReconOptions::default()).unwrap(),
        nursd2(&s, &e, &ReconOptions::default()).unwrap(),
        nursd3(&s, &e, &ReconOptions::default()).unwrap(),
        rsd3d(&t, &g, &ReconOptions::default()).unwrap(),
        nursd3d(&t, &g, &ReconOptions::default()).unwrap(),
        srsd_nursd2(&s, &ScaledTargets::from_frustum(&f), &ReconOptions::default()).unwrap(),
    ];
    for v in vols {
        assert!(v.field.iter().all(|c| c.norm() == 0.0));
    }
}

#[test]
fn superposition_holds_for_every_path() {
    let s = uniform_slices();
    let other = slices_at(
        RelaySampling::Uniform(wall()),
        s.illuminations.clone(),
        &Scene::point([-0.1, 0.08, 0.46], 0.5),
    );
    let mut sum = s.clone();
    for (a, b) in sum.coefficients.iter_mut().zip(&other.coefficients) {
        *a += b;
    }
    let g = cuboid();
    let f = FrustumGrid::linear(wall(), vec![0.45, 0.5], 0.5, 0.5).unwrap();
    let e = ExplicitVoxels::from_cuboid(&g);
    let outputs = [
        (Algorithm::Rsd, OutputGrid::Voxels(VoxelGrid::Cuboid(g))),
        (Algorithm::Srsd, OutputGrid::Voxels(VoxelGrid::Frustum(f.clone()))),
        (Algorithm::Nursd1, OutputGrid::Voxels(VoxelGrid::Cuboid(g))),
        (Algorithm::Nursd2, OutputGrid::Voxels(VoxelGrid::Explicit(e.clone()))),
        (Algorithm::Nursd3, OutputGrid::Voxels(VoxelGrid::Explicit(e))),
        (Algorithm::SrsdNursd2, OutputGrid::Scaled(ScaledTargets::from_frustum(&f))),
    ];
    let opts = ReconOptions::default();
    for (alg, out) in outputs {
        let a = run(&s, out.clone(), alg, &opts).unwrap();
        let b = run(&other, out.clone(), alg, &opts).unwrap();
        let ab = run(&sum, out, alg, &opts).unwrap();
        let lin: Vec<Complex64> = a.field.iter().zip(&b.field).map(|(x, y)| x + y).collect();
        assert!(rel_l2(&ab.field, &lin) < 1e-8, "{alg}");
    }
}

#[test]
fn single_frequency_video_has_constant_magnitude() {
    let mut s = uniform_slices();
    let keep = s.n_freq() / 2;
    let coeffs: Vec<Complex64> = (0..s.n_illum() * s.n_detect()).map(|pc| s.coefficients[pc * s.n_freq() + keep]).collect();
    s.frequencies = vec![s.frequencies[keep]];
    s.coefficients = coeffs;
    let g = UniformGrid3D::over(&wall(), 2, 0.48, 0.04).unwrap();
    let v = light_transport_video(
        &s,
        OutputGrid::Voxels(VoxelGrid::Cuboid(g)),
        Algorithm::Rsd,
        vec![0.0, 1e-10, 3.3e-10],
        &ReconOptions::default(),
    )
    .unwrap();
    let n = g.len();
    for i in 0..n {
        let m0 = v.field[i].norm();
        for t in 1..3 {
            assert!((v.field[t * n + i].norm() - m0).abs() <= 1e-12 * m0.max(1e-300));
        }
    }
}
