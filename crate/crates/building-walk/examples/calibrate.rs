//! Reproduce the measurements behind the configured envelope defaults.
//!
//! Each section runs one of the certification grids and prints the observed
//! ratio range, so the values in `config/default.toml` can be regenerated:
//!
//! ```text
//! cargo run --example calibrate -- [section ...]
//! ```
//!
//! Sections: `interior2 interior3 boundary iso green1 green2a green2b gcrit
//! f0r1 f0r2 f0r3probe f0r3`. With no arguments the quick sections run
//! (everything except `green2b` and `f0r3`, which take a few minutes each).

use std::env;
use std::time::Instant;

use building_walk::estimates::{self, F0Cache};
use building_walk::exact_kernel::WalkSpec;
use building_walk::geometry;
use building_walk::report::{
    boundary_report, green_critical_report, green_report, interior_report, RatioReport,
};
use building_walk::root_system::{RootSystem, Weight};
use building_walk::scalar::ratio;

fn show(tag: &str, rep: &RatioReport, t: Instant) {
    println!(
        "[{tag}] {:.1}s  points={} zeros={} spread={:.4} min={:.4e} max={:.4e}",
        t.elapsed().as_secs_f64(),
        rep.points.len(),
        rep.zero_points.len(),
        rep.spread,
        rep.min_ratio,
        rep.max_ratio,
    );
    if let Some(d) = rep.max_drift {
        println!("[{tag}]   max |log-ratio drift| = {d:.4}");
    }
    for s in &rep.slopes {
        println!(
            "[{tag}]   slope dir {:?}: fitted {:.5} predicted {:.5} rel_err {:.4}",
            s.direction, s.fitted, s.predicted, s.rel_err
        );
    }
    for (b, c) in &rep.branch_counts {
        println!("[{tag}]   branch {b}: {c}");
    }
    for h in &rep.harnack {
        println!("[{tag}]   harnack n={}: {:.4}", h.n, h.sup_neighbor_ratio);
    }
    for n in &rep.notes {
        println!("[{tag}]   note: {n}");
    }
}

fn ball(rs: &RootSystem, max_norm: f64, stride: i64, keep_small: i64) -> Vec<Weight> {
    // all dominant weights with |λ|_e ≤ max_norm; beyond length `keep_small`
    // only multiples of `stride` in every coordinate are kept
    let r = rs.rank();
    let step = (0..r)
        .map(|i| {
            let mut m = vec![0i64; r];
            m[i] = 1;
            geometry::norm(&geometry::e_vec(rs, &Weight::new(m)))
        })
        .fold(f64::INFINITY, f64::min);
    let cap = (max_norm / step).ceil() as i64;
    let mut out = Vec::new();
    let mut m = vec![0i64; r];
    loop {
        let lam = Weight::new(m.clone());
        if geometry::norm(&geometry::e_vec(rs, &lam)) <= max_norm {
            let small = lam.ell() <= keep_small;
            if small || m.iter().all(|&x| x % stride == 0) {
                out.push(lam);
            }
        }
        // odometer over [0, cap]^r
        let mut i = 0;
        loop {
            if i == r {
                return out;
            }
            m[i] += 1;
            if m[i] <= cap {
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

fn f0_section(rank: usize, stride: i64, keep_small: i64, cauchy_hi: i64) {
    let t = Instant::now();
    let rs = RootSystem::new(rank);
    let q = 2u32;
    let mut cache = F0Cache::new();
    let grid = ball(&rs, 40.0, stride, keep_small);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut lo_at = Vec::new();
    let mut hi_at = Vec::new();
    for lam in &grid {
        let v = estimates::f0_normalized(&rs, q, lam, &mut cache).unwrap();
        if v < lo {
            lo = v;
            lo_at = lam.coords().to_vec();
        }
        if v > hi {
            hi = v;
            hi_at = lam.coords().to_vec();
        }
    }
    println!(
        "[f0r{rank}] {:.1}s  grid={} (stride {stride}, keep ℓ≤{keep_small})  ratio in [{lo:.4}, {hi:.4}]  at {lo_at:?} / {hi_at:?}",
        t.elapsed().as_secs_f64(),
        grid.len()
    );
    let t = Instant::now();
    let mut prev: Option<f64> = None;
    let mut worst = 0.0f64;
    let mut steps = Vec::new();
    for k in 20..=cauchy_hi {
        let lam = Weight::new(vec![k; rank]);
        let v = estimates::f0_pi_ratio(&rs, q, &lam, &mut cache).unwrap();
        if let Some(p) = prev {
            let ch = (v / p - 1.0).abs();
            steps.push((k, ch));
            worst = worst.max(ch);
        }
        prev = Some(v);
    }
    println!(
        "[f0r{rank}] {:.1}s  Cauchy k=20..{cauchy_hi}: max successive change {:.4e} (limit {:.5})",
        t.elapsed().as_secs_f64(),
        worst,
        prev.unwrap()
    );
    for (k, ch) in &steps {
        println!("[f0r{rank}]   k {}->{k}: {:.4e}", k - 1, ch);
    }
}

fn main() {
    let args: Vec<String> = env::args().skip(1).collect();
    let all_quick = [
        "interior2", "interior3", "boundary", "iso", "green1", "green2a", "gcrit", "f0r1",
        "f0r2", "f0r3probe",
    ];
    let run: Vec<String> = if args.is_empty() {
        all_quick.iter().map(|s| s.to_string()).collect()
    } else {
        args
    };
    let huge = 1e99; // measure, never fail

    for sec in &run {
        match sec.as_str() {
            "interior2" => {
                let t = Instant::now();
                let rs = RootSystem::new(2);
                let mut cache = F0Cache::new();
                let rep = interior_report(
                    &rs,
                    2,
                    &WalkSpec::Simple,
                    &[16, 24, 32, 40],
                    huge,
                    48,
                    &mut cache,
                )
                .unwrap();
                show("interior2", &rep, t);
            }
            "interior3" => {
                let t = Instant::now();
                let rs = RootSystem::new(3);
                let mut cache = F0Cache::new();
                let rep = interior_report(
                    &rs,
                    2,
                    &WalkSpec::Simple,
                    &[6, 8, 10, 12],
                    huge,
                    16,
                    &mut cache,
                )
                .unwrap();
                show("interior3", &rep, t);
            }
            "boundary" => {
                let t = Instant::now();
                let rs = RootSystem::new(2);
                let rep =
                    boundary_report(&rs, 2, &WalkSpec::Simple, 40, 3, 2, huge, 48).unwrap();
                show("boundary", &rep, t);
            }
            "iso" => {
                let t = Instant::now();
                let rs = RootSystem::new(2);
                let mut cache = F0Cache::new();
                let walk = WalkSpec::Isotropic2 {
                    p1: ratio(3, 28),
                    p2: ratio(1, 28),
                };
                let rep = interior_report(
                    &rs,
                    2,
                    &walk,
                    &[12, 16, 20, 24],
                    huge,
                    48,
                    &mut cache,
                )
                .unwrap();
                show("iso", &rep, t);
            }
            "green1" => {
                let rs = RootSystem::new(1);
                let q = 2u32;
                let zc = WalkSpec::Simple.spectral_radius(&rs, q).inv();
                for (name, num, den) in [("green1a", 1, 2), ("green1b", 9, 10)] {
                    let t = Instant::now();
                    let z = zc.mul_ratio(&ratio(num, den));
                    let mut cache = F0Cache::new();
                    let rep = green_report(
                        &rs,
                        q,
                        &WalkSpec::Simple,
                        &z,
                        &[rs.fundamental(1)],
                        (4.0, 24.0),
                        1e-12,
                        600,
                        huge,
                        &mut cache,
                    )
                    .unwrap();
                    show(name, &rep, t);
                }
            }
            "green2a" | "green2b" => {
                let rs = RootSystem::new(2);
                let q = 2u32;
                let zc = WalkSpec::Simple.spectral_radius(&rs, q).inv();
                let (num, den) = if sec == "green2a" { (1, 2) } else { (9, 10) };
                let t = Instant::now();
                let z = zc.mul_ratio(&ratio(num, den));
                let mut cache = F0Cache::new();
                let rays = [Weight::new(vec![1, 1]), Weight::new(vec![2, 1])];
                let rep = green_report(
                    &rs,
                    q,
                    &WalkSpec::Simple,
                    &z,
                    &rays,
                    (4.0, 24.0),
                    1e-12,
                    640,
                    huge,
                    &mut cache,
                )
                .unwrap();
                show(sec, &rep, t);
            }
            "gcrit" => {
                let t = Instant::now();
                let rs = RootSystem::new(2);
                let mut cache = F0Cache::new();
                let rep = green_critical_report(
                    &rs,
                    2,
                    &WalkSpec::Simple,
                    (4.0, 16.0),
                    48,
                    huge,
                    &mut cache,
                )
                .unwrap();
                show("gcrit", &rep, t);
            }
            "f0r1" => f0_section(1, 1, 60, 60),
            "f0r2" => f0_section(2, 1, 60, 40),
            "f0r3probe" => {
                let rs = RootSystem::new(3);
                let mut cache = F0Cache::new();
                for m in [
                    vec![8i64, 8, 8],
                    vec![17, 17, 17],
                    vec![44, 0, 0],
                    vec![10, 20, 5],
                ] {
                    let t = Instant::now();
                    let lam = Weight::new(m.clone());
                    let v = estimates::f0_normalized(&rs, 2, &lam, &mut cache).unwrap();
                    println!(
                        "[f0r3probe] {m:?}: {:.3}s  normalized {v:.4}  |λ| {:.1}",
                        t.elapsed().as_secs_f64(),
                        geometry::norm(&geometry::e_vec(&rs, &lam))
                    );
                }
            }
            "f0r3" => f0_section(3, 4, 8, 34),
            other => eprintln!("unknown section {other}"),
        }
    }
}
