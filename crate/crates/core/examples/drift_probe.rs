use std::time::Instant;
use wemig_core::dsr::*;
use wemig_core::grid::{Axis, AxisLabel};
use wemig_core::ray::predict_events;
use wemig_core::scene::*;
use wemig_core::ssr::TaperConfig;

fn hz(f: f64) -> f64 { 2.0 * std::f64::consts::PI * f }

fn main() {
    // focusing experiment: coarser cells, higher band
    let nx = 97; let dx = 25.0;
    let x0 = -(nx as f64 - 1.0) * dx / 2.0;
    let nz = 41; let dzg = 20.0;
    let spec = SceneSpec::new(
        ModelKind::Constant { c: 2000.0 },
        PerturbationKind::Points(vec![(0.0, 600.0, 1.0)]),
        Axis::new(nx, dx, x0, AxisLabel::X).unwrap(),
        Axis::new(nz, dzg, 0.0, AxisLabel::Z).unwrap(),
        256, 0.004,
    );
    let (model, dc, geometry) = build_scene(&spec).unwrap();
    let mut mute = MuteConfig::new(4.2e-4, hz(10.0), hz(40.0));
    mute.dip_taper = 0.2;
    let taper = TaperConfig::default();

    let t0 = Instant::now();
    let data = born_model(&model, &dc, &geometry, &mute, &taper).unwrap();
    println!("born: {:.2?}", t0.elapsed());
    let t0 = Instant::now();
    let image = migrate_adjoint(&data, &model, &geometry, &mute, &taper).unwrap();
    println!("migrate: {:.2?}", t0.elapsed());
    let img = image.real().unwrap();
    let (mut pi, mut pk, mut pv) = (0usize, 0usize, 0.0f64);
    let nzz = image.axes[1].n;
    for i in 0..image.axes[0].n { for k in 0..nzz {
        if img[i*nzz + k].abs() > pv { pv = img[i*nzz+k].abs(); pi = i; pk = k; }
    }}
    println!("image peak at x={} z={} (true 0, 600)", image.axes[0].at(pi), image.axes[1].at(pk));
    let mut e_tot = 0.0; let mut e_win = 0.0;
    for i in 0..image.axes[0].n { for k in 0..nzz {
        let e = img[i*nzz+k]*img[i*nzz+k];
        e_tot += e;
        if (i as i64 - pi as i64).abs() <= 2 && (k as i64 - pk as i64).abs() <= 2 { e_win += e; }
    }}
    println!("off-peak energy fraction: {:.3} (need < 0.25)", 1.0 - e_win/e_tot);

    // kinematics at this scale (shallower, smaller)
    let t0 = Instant::now();
    let table = predict_events(&model, (0.0, 600.0), &geometry.s_axis, &geometry.r_axis, geometry.t_axis.end(), 120).unwrap();
    println!("predict_events: {:.2?} ({} rows)", t0.elapsed(), table.rows.len());
}
