//! Push random Y′ windows through ψ and q and report how many land on
//! admissible vertex patches.
//!
//! `cargo run --release --example factor_chain -- [windows] [side]`

use sftlab::error::Error;
use sftlab::models::factor_chain;
use sftlab::models::yprime::random_yprime_patch;
use sftlab::rng::stream;
use rand::Rng;

fn main() {
    let args: Vec<u64> = std::env::args().skip(1).map(|a| a.parse().expect("integer argument")).collect();
    let windows = args.first().copied().unwrap_or(200);
    let side = args.get(1).copied().unwrap_or(12) as i32;
    let (mut ok, mut unclassified, mut other) = (0, 0, 0);
    let mut first = None;
    for i in 0..windows {
        let mut rng = stream(&[11, i]);
        let density = rng.gen_range(0.02..0.5);
        let y = random_yprime_patch(side, density, &mut rng);
        match factor_chain(&y) {
            Ok(_) => ok += 1,
            Err(Error::UnclassifiableNeighborhood { x, y, pattern }) => {
                unclassified += 1;
                first.get_or_insert((x, y, pattern));
            }
            Err(_) => other += 1,
        }
    }
    println!("windows {windows}: admissible {ok}, unclassifiable {unclassified}, other errors {other}");
    if let Some((x, y, pat)) = first {
        println!("first unclassifiable neighborhood at ({x},{y}): {pat}");
    }
}
