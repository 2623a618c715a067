//! Inverts the addition program: lists every digit pair producing each sum,
//! and the pair a network's logits make most likely.

use symcor::datalog::addition_program;
use symcor::grounding::GroupSpec;
use symcor::inverse::{closest_candidate, enumerate_preimage, forced_symbol};

fn main() -> symcor::Result<()> {
    let program = addition_program();
    let spec = GroupSpec::by_input_relation(&program);
    for s in 0..program.output_len() {
        let ps = enumerate_preimage(&program, s, &spec)?;
        let pairs: Vec<String> = ps.choices().iter().map(|c| format!("{}+{}", c[0], c[1])).collect();
        let forced = if forced_symbol(&ps).is_some() { "  (forced)" } else { "" };
        println!("sum {s:>2}: {:>2} pairs  {}{forced}", ps.len(), pairs.join(" "));
    }

    let mut z = vec![0.0; 20];
    z[7] = 4.0; // first image: probably 7
    z[12] = 1.0; // second image: weakly 2
    z[13] = 1.5; // second image: a bit more like 3
    let ps = enumerate_preimage(&program, 9, &spec)?;
    let w = closest_candidate(&ps, &z, &spec)?;
    let c = spec.choice_of(&w).expect("candidates are one-hot");
    println!("\nmost likely pair summing to 9: {}+{}", c[0], c[1]);
    Ok(())
}
