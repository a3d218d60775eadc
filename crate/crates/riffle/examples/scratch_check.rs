// temporary dev scratch: verify headline exact values and timings
use std::time::Instant;

use riffle::asymptotics::{cut_sweep, kappa1_distinct, kappabar1};
use riffle::deck::Deck;
use riffle::exact::tv_distinct;
use riffle::{numfmt, Budget};

fn main() {
    let b = Budget::default();

    let t = Instant::now();
    let k52 = kappa1_distinct(52);
    eprintln!("kappa1_distinct(52) [{:?}]:\n{}", t.elapsed(), numfmt::fraction(&k52));
    eprintln!("  fixed4 = {}", numfmt::fixed(&k52, 4));

    let t = Instant::now();
    for k in 4..=10u32 {
        let a = 1u64 << k;
        let tv = tv_distinct(a, 52);
        eprintln!("tv(a={a}) = {}", numfmt::fixed(&tv, 4));
    }
    eprintln!("table row took {:?}", t.elapsed());

    let poker = Deck::parse("(1234)^5(5)^32").unwrap();
    let t = Instant::now();
    let kb = kappabar1(&poker, &b).unwrap();
    eprintln!("kappabar1(poker) [{:?}]: {}", t.elapsed(), numfmt::fraction(&kb.value));
    eprintln!("  approx {}", numfmt::decimal(&kb.value, 12));
    eprintln!("  scale_L = {:?}", kb.scale);

    let cut16 = poker.cut(16).unwrap();
    let t = Instant::now();
    let kb16 = kappabar1(&cut16, &b).unwrap();
    eprintln!("kappabar1(cut16) [{:?}]: {}", t.elapsed(), numfmt::fraction(&kb16.value));

    let ordered = Deck::parse("(N)^13(E)^13(S)^13(W)^13").unwrap();
    let t = Instant::now();
    let kbo = kappabar1(&ordered, &b).unwrap();
    eprintln!("kappabar1(bridge ordered) [{:?}]: {}", t.elapsed(), numfmt::fraction(&kbo.value));

    let cyc = Deck::parse("(NESW)^13").unwrap();
    let t = Instant::now();
    let kbc = kappabar1(&cyc, &b).unwrap();
    eprintln!("kappabar1(bridge cyclic) [{:?}]: {}", t.elapsed(), numfmt::fraction(&kbc.value));

    let bf = Deck::parse("(NESWWSEN)^6NESW").unwrap();
    let t = Instant::now();
    let kbf = kappabar1(&bf, &b).unwrap();
    eprintln!("kappabar1(bridge bf) [{:?}]: {}", t.elapsed(), numfmt::fraction(&kbf.value));

    let t = Instant::now();
    let sweep = cut_sweep(&poker, &b).unwrap();
    eprintln!("cut sweep [{:?}]: argmin = {}", t.elapsed(), sweep.argmin);
    for (k, r) in sweep.rows.iter().take(3) {
        eprintln!("  k={k}: {}", numfmt::decimal(&r.value, 6));
    }
}
