// Dev calibration: cross-route distribution checks for the short-scaled height.
use kpzlab::noise::RngStream;
use kpzlab::polymer;
use kpzlab::she::{sample_g_field, SheGrid};
use kpzlab::stats::{mean_se, normal_cdf, one_sample_ks, two_sample_ks};
use rayon::prelude::*;
use std::time::Instant;

fn polymer_g(t_diff: f64, n: usize, reps: usize, seed: u64) -> Vec<f64> {
    let root = RngStream::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|k| {
            polymer::sample_g_at_diffusion_time(t_diff, n, &root.child(k as u64))
                .unwrap()
                .value
        })
        .collect()
}

fn she_g(t: f64, dx: f64, reps: usize, seed: u64) -> Vec<f64> {
    let grid = SheGrid::standard(t, dx).unwrap();
    let root = RngStream::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|k| {
            sample_g_field(t, &grid, &root.child(k as u64), 0.5, 3)
                .unwrap()
                .value_at(0.0)
                .unwrap()
        })
        .collect()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("all");

    if mode == "all" || mode == "shift" {
        // mean shift of g_t vs N(0,1): decides the short-time KS criterion
        for (t, n, reps) in [(0.05, 2000usize, 20_000usize), (0.1, 2000, 20_000)] {
            let t0 = Instant::now();
            let xs = polymer_g(t, n, reps, 11);
            let (m, se) = mean_se(&xs);
            let ks = one_sample_ks(&xs, normal_cdf).unwrap();
            let sigma = (std::f64::consts::PI * t / 4.0).powf(0.25);
            println!(
                "polymer g at t_diff={t}: mean {m:.4}+-{se:.4} (lognormal pred {:.4}), KS D={:.4} p={:.2e}  [{:.0?}]",
                -0.5 * sigma, ks.statistic, ks.p_value, t0.elapsed()
            );
        }
    }

    if mode == "all" || mode == "cross" {
        // cross-route: polymer (param t/2) vs SHE at t; also the mislabeled variant
        for (t, dx, n, reps) in [(0.5, 0.05, 2000usize, 6000usize), (1.0, 0.05, 2000, 6000)] {
            let t0 = Instant::now();
            let pg = polymer_g(t, n, reps, 21);
            let sg = she_g(t, dx, reps, 22);
            let ks = two_sample_ks(&pg, &sg).unwrap();
            let (mp, sep) = mean_se(&pg);
            let (ms, ses) = mean_se(&sg);
            println!(
                "t={t}: polymer(mean {mp:.4}+-{sep:.4}) vs she(mean {ms:.4}+-{ses:.4}): D={:.4} p={:.3}  [{:.0?}]",
                ks.statistic, ks.p_value, t0.elapsed()
            );
            // mislabeled: polymer param t (i.e. diffusion 2t) against SHE at t
            let pg_wrong = polymer_g(2.0 * t, n, reps, 23);
            let ks2 = two_sample_ks(&pg_wrong, &sg).unwrap();
            println!("   [mislabeled diffusion time: D={:.4} p={:.2e}]", ks2.statistic, ks2.p_value);
        }
    }

    if mode == "she-dx" {
        // SHE discretization sensitivity at t=1
        let fine = she_g(1.0, 0.025, 6000, 31);
        for dx in [0.1, 0.05] {
            let xs = she_g(1.0, dx, 6000, 32);
            let ks = two_sample_ks(&xs, &fine).unwrap();
            println!("she dx={dx} vs dx=0.025: D={:.4} p={:.3}", ks.statistic, ks.p_value);
        }
    }

    if mode == "poly-n" {
        // polymer convergence in n at t_diff = 1
        let fine = polymer_g(1.0, 4000, 10_000, 41);
        for n in [1000usize, 2000] {
            let xs = polymer_g(1.0, n, 10_000, 42);
            let ks = two_sample_ks(&xs, &fine).unwrap();
            println!("polymer n={n} vs n=4000: D={:.4} p={:.3}", ks.statistic, ks.p_value);
        }
    }
}
