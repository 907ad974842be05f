//! Wall-clock checks on a 1080p synthetic frame. Kept in one test so the
//! measurements do not compete for cores.

use grayindex::benchmark::{measure_runtime, Method, MethodParams};
use grayindex::synthetic::{preset_scene, render, Preset};

#[test]
fn full_hd_timings() {
    let img = render(&preset_scene(Preset::Single, 1920, 1080, 1).build().unwrap()).unwrap();
    let params = MethodParams::default();

    let gray_world = measure_runtime(&img, Method::GrayWorld, &params, 5).unwrap();
    assert!(gray_world.median < 0.05, "gray world median {} s", gray_world.median);

    let medians: Vec<f64> = (0..3)
        .map(|_| measure_runtime(&img, Method::Gi, &params, 5).unwrap().median)
        .collect();
    let max = medians.iter().cloned().fold(0.0, f64::max);
    let min = medians.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(max <= 0.4, "GI medians {medians:?}");
    assert!(max / min < 1.25, "GI medians {medians:?}");
    assert!(gray_world.median < min);
}
