// temporary perf probe
use kpzlab::noise::RngStream;
use kpzlab::polymer::sample_g;
use std::time::Instant;

fn main() {
    let root = RngStream::new(4242);
    // warmup
    let _ = sample_g(0.025, 2000, &root.child(0)).unwrap();
    let t0 = Instant::now();
    let reps = 20;
    let mut acc = 0.0;
    for k in 0..reps {
        acc += sample_g(0.025, 2000, &root.child(k)).unwrap().value;
    }
    let dt = t0.elapsed().as_secs_f64() / reps as f64;
    println!("n=2000 pinned: {:.1} ms/replica  (mean g = {:.4})", dt * 1e3, acc / reps as f64);
    println!("=> 1e5 replicas on 2 cores ~ {:.1} min", dt * 1e5 / 2.0 / 60.0);

    let t0 = Instant::now();
    let mut acc2 = 0.0;
    for k in 0..reps {
        acc2 += sample_g(0.05, 1000, &root.child(100 + k)).unwrap().value;
    }
    let dt2 = t0.elapsed().as_secs_f64() / reps as f64;
    println!("n=1000 pinned: {:.2} ms/replica (mean {:.4})", dt2 * 1e3, acc2 / reps as f64);
}
