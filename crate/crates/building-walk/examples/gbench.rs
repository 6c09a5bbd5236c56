use building_walk::exact_kernel::{green_exact_batch, WalkSpec};
use building_walk::root_system::{RootSystem, Weight};
use building_walk::scalar::{ratio, QExt};

fn main() {
    let rs = RootSystem::new(2);
    let q = 2u32;
    let mut xs = Vec::new();
    for k in 3..=16i64 {
        xs.push(Weight::new(vec![k, k]));
    }
    for k in 2..=11i64 {
        xs.push(Weight::new(vec![2 * k, k]));
    }
    for (zn, zd, label) in [(7i64, 12i64, "z=0.5/rho~"), (21, 20, "z=0.9/rho~")] {
        let z = QExt::from_ratio(ratio(zn, zd), q);
        let t0 = std::time::Instant::now();
        match green_exact_batch(&rs, q, &WalkSpec::Simple, &xs, &z, 1e-12, 640) {
            Ok(gs) => println!(
                "{label}: N={} first={:.4e} last={:.4e} in {:.2?}",
                gs[0].steps_used,
                gs[0].value_f64(),
                gs[xs.len() - 1].value_f64(),
                t0.elapsed()
            ),
            Err(e) => println!("{label}: ERROR {e} after {:.2?}", t0.elapsed()),
        }
    }
}
