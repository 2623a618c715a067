//! Smooths logits into per-digit probabilities, computes the probability of
//! every sum, and the gradient of the label's negative log-likelihood with
//! respect to the logits.

use symcor::datalog::addition_program;
use symcor::grounding::{smooth_ground, GroupSpec};
use symcor::semiring::{nll_and_grads, AssignmentTable};

fn main() -> symcor::Result<()> {
    let program = addition_program();
    let spec = GroupSpec::by_input_relation(&program);
    let table = AssignmentTable::build(&program, &spec)?;

    // First image looks like a 0 or 1, second like a 1.
    let mut z = vec![0.0; 20];
    z[0] = 2.0;
    z[1] = 2.0;
    z[11] = 3.0;
    let pv = smooth_ground(&z, &spec)?;
    let po = table.marginalize(&pv);
    for (k, p) in po.out_probs.iter().enumerate().filter(|(_, p)| **p > 0.01) {
        println!("P({}) = {p:.4}", program.atom_text(&program.output_enum()[k]));
    }

    let label = program.output_position_by_text("sum(1)").expect("sum(1) is an output");
    let (loss, g) = nll_and_grads(&table, &z, label)?;
    println!("\n-ln P(sum(1)) = {loss:.4}");
    println!("descent direction on the logits (negative gradient):");
    for (i, gi) in g.iter().enumerate() {
        if gi.abs() > 1e-3 {
            println!("  {:<10} {:+.4}", program.atom_text(&program.input_enum()[i]), -gi);
        }
    }
    Ok(())
}
