//! Closed-form design calculators: frustum volume, compression, sampling limits.

use nlos::phasor::{compression_factor, frustum_volume, lateral_resolution, sampling_report, scale_bounds};

fn main() -> nlos::Result<()> {
    let v = frustum_volume(4.0, 4.0, 0.0, 4.0, 0.5, 0.5)?;
    println!(
        "frustum {:.2} m^3, cuboid {:.2} m^3, +{:.0}%",
        v.frustum, v.cuboid, v.increase_percent
    );

    // keep every 5th sample per axis and 1/10 of the time bins as complex values
    println!("compression x{}", compression_factor(200, 5, 4000, 400)?);

    let r = sampling_report(1.0, 2.5, 0.04, false)?;
    println!(
        "lambda_sz {:.3} m, ratio {:.1}, largest factor {:?}",
        r.lambda_sz,
        r.ratio,
        r.max_integer_factor()
    );

    let dx = lateral_resolution(0.04, 1.0, 2.0)?;
    let b = scale_bounds(0.01, 0.04, 2.0, 1.0)?;
    println!("resolution {dx:.4} m at 1 m, voxel <= {:.4} m, alpha >= {:.3}", b.max_voxel, b.min_alpha);
    Ok(())
}
