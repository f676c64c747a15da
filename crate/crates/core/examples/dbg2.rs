use tangency_core::map::{ttm_orbit, MapParams, PhasePoint, Shear};
fn main() {
    let m = MapParams::new(0.01, 1.0, (5.0f64.sqrt() + 1.0) / 2.0, Shear::Positive);
    let mut max_k = 0.0f64; let mut min_k = 0.0f64;
    ttm_orbit(PhasePoint::new(0.0, 0.0), &m, 100_000, |_, p| {
        max_k = max_k.max(p.k); min_k = min_k.min(p.k);
    });
    println!("max={max_k:.15} min={min_k:.15}");
}
