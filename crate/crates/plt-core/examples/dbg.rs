use plt_core::field::PrimeField;
use plt_core::protocol::{generate_query, Demand};
use plt_core::sample::MdsSampler;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() {
    let f = PrimeField::new(13).unwrap();
    for (k, d, l) in [(20usize, 8, 3), (20, 6, 3), (12, 4, 2), (5, 2, 1), (7, 3, 2)] {
        for seed in 0..40u64 {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let demand = Demand::random(f, k, d, l, MdsSampler::Grs, &mut rng).unwrap();
            match generate_query(&demand, &mut rng) {
                Ok(_) => {}
                Err(e) => {
                    println!("FAIL ({k},{d},{l}) seed {seed}: {e}");
                    return;
                }
            }
        }
        println!("ok ({k},{d},{l})");
    }
}
