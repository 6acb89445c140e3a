//! OSPA worked examples and metric axioms on random point sets.

use mtt_core::metrics::{ospa, Ospa};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

pub const TRIPLES: usize = 1000;
pub const TOL: f64 = 1e-9;
const C: f64 = 10.0;

fn random_set(rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let k = rng.random_range(0..=5);
    (0..k).map(|_| [rng.random_range(0.0..25.0), rng.random_range(0.0..25.0)]).collect()
}

pub fn run() -> Outcome {
    let empty: Vec<[f64; 1]> = Vec::new();
    let examples = [
        (ospa(&[[3.0], [7.0]], &[[7.0], [3.0]], C, 1.0).unwrap(), Ospa { total: 0.0, loc: 0.0, card: 0.0 }),
        (ospa(&[[0.0]], &empty, C, 1.0).unwrap(), Ospa { total: 10.0, loc: 0.0, card: 10.0 }),
        (ospa(&[[0.0]], &[[1.0]], C, 1.0).unwrap(), Ospa { total: 1.0, loc: 1.0, card: 0.0 }),
    ];
    let examples_ok = examples.iter().all(|(got, want)| got == want);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = Vec::new();
    for i in 0..TRIPLES {
        let p = if i % 2 == 0 { 1.0 } else { 2.0 };
        let (a, b, c) = (random_set(&mut rng), random_set(&mut rng), random_set(&mut rng));
        let d = |x: &[[f64; 2]], y: &[[f64; 2]]| ospa(x, y, C, p).unwrap();
        let (ab, ba, bc, ac) = (d(&a, &b), d(&b, &a), d(&b, &c), d(&a, &c));
        if (ab.total - ba.total).abs() > TOL {
            violations.push("symmetry");
        }
        let mut shuffled = a.clone();
        shuffled.reverse();
        if d(&a, &shuffled).total > TOL {
            violations.push("identity");
        }
        if (!a.is_empty() || !b.is_empty()) && ab.total <= 0.0 {
            violations.push("distinct sets at distance 0");
        }
        if ac.total > ab.total + bc.total + TOL {
            violations.push("triangle");
        }
        if (ab.total.powf(p) - ab.loc.powf(p) - ab.card.powf(p)).abs() > TOL * C.powf(p) {
            violations.push("decomposition");
        }
    }
    Outcome::new(
        examples_ok && violations.is_empty(),
        format!(
            "worked examples {}; {} axiom violations over {TRIPLES} triples (p = 1, 2){}",
            if examples_ok { "exact" } else { "differ" },
            violations.len(),
            violations.first().map_or(String::new(), |v| format!(", first: {v}"))
        ),
    )
}
