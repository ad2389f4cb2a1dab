// dev probe: Gauss-Hermite convergence of the pair-ratio integrals
use kpzlab::moments::{kardar_moment, QuadSpec};
use std::time::Instant;

fn main() {
    // mildly sized scan: k<=4 up to m=48; k=5,6 up to m=32 (fine rule doubles)
    for &(k, t, ms) in &[
        (3u64, 0.1f64, &[16usize, 24, 32, 48][..]),
        (4, 0.1, &[16, 24, 32][..]),
        (5, 0.1, &[16, 24][..]),
        (6, 0.1, &[12, 16, 24][..]),
        (6, 1.0, &[12, 16, 24][..]),
    ] {
        for &nodes in ms {
            let t0 = Instant::now();
            match kardar_moment(k, t, &QuadSpec { nodes, rel_tol: 1.0 }) {
                Ok(m) => println!(
                    "k={k} t={t} m={nodes}: val={:.8e} doubling-rel={:.2e}  [{:.1?}]",
                    m.value,
                    m.est_error / m.value,
                    t0.elapsed()
                ),
                Err(e) => println!("k={k} t={t} m={nodes}: {e}"),
            }
        }
        println!();
    }
}
