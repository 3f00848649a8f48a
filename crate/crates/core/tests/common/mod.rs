use drinfeld_padic::apoly::PolyRing;
use drinfeld_padic::canonical::{split_module, split_valuations, SplitModule};
use drinfeld_padic::field::FieldCtx;
use drinfeld_padic::local::{LocalElem, Localization};
use drinfeld_padic::newton::Rational;
use num_integer::Integer;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A split module whose line through `z1` has degree `t`.
pub fn random_split(q: u64, t: Rational, prec: i64, rng: &mut ChaCha8Rng) -> (SplitModule, u32) {
    let (v1, v2) = split_valuations(t, q);
    let ram = v1.denom().lcm(v2.denom()) as u32;
    let a = PolyRing::new(FieldCtx::new(q, 1).unwrap());
    let loc = Localization::new(&a, &a.t(), prec, ram).unwrap();
    let r = loc.ring();
    let unit = |rng: &mut ChaCha8Rng| -> LocalElem {
        let digits = (0..4).map(|i| if i == 0 { rng.gen_range(1..q as u32) } else { rng.gen_range(0..q as u32) });
        r.make(0, digits.collect(), None)
    };
    let n1 = (v1 * Rational::from_integer(ram as i64)).to_integer();
    let n2 = (v2 * Rational::from_integer(ram as i64)).to_integer();
    loop {
        let z1 = r.shift(&unit(rng), n1);
        let z2 = r.shift(&unit(rng), n2);
        // equal valuations can give F_q-proportional generators; redraw
        if let Ok(split) = split_module(&a, &loc, &z1, &z2) {
            return (split, ram);
        }
    }
}
