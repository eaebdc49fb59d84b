//! The `nlos` command pipeline driven in-process: simulate a scene file,
//! reconstruct, and compare.

use clap::Parser;
use nlos::pipeline::{execute, Cli};

fn run(args: &[&str]) -> nlos::Result<String> {
    execute(&Cli::parse_from(std::iter::once("nlos").chain(args.iter().copied())))
}

fn main() -> nlos::Result<()> {
    let dir = std::env::temp_dir().join(format!("nlos-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let scene = dir.join("scene.json");
    std::fs::write(
        &scene,
        r#"{"scatterers": [{"pos": [0.0, 0.04, 0.5], "albedo": 1.0}],
            "relay": {"kind": "Uniform", "nx": 16, "ny": 16, "dx": 0.04, "dy": 0.04,
                      "x0": -0.3, "y0": -0.3, "z": 0.0},
            "illuminations": [[0.0, 0.0]], "Δt": 2e-11, "n_bins": 384}"#,
    )?;
    let p = |name: &str| dir.join(name).to_string_lossy().into_owned();
    print!("{}", run(&["simulate", &p("scene.json"), &p("m.nls1"), "--noise-scale", "1000", "--seed", "1"])?);
    let grid = "cuboid:16,16,6,0.04,0.04,0.03,-0.3,-0.3,0.42";
    print!("{}", run(&["reconstruct", &p("m.nls1"), "--algo", "rsd", "--lambda-c", "0.1", "--grid", grid, "-o", &p("a.nls1")])?);
    print!("{}", run(&["reconstruct", &p("m.nls1"), "--algo", "nursd1", "--lambda-c", "0.1", "--grid", grid, "-o", &p("b.nls1")])?);
    print!("ssim {}", run(&["metrics", &p("b.nls1"), &p("a.nls1"), "--metric", "ssim", "--align"])?);
    print!("{}", run(&["info", &p("a.nls1")])?);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
