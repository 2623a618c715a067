//! Follows one sample's pseudolabel through the annealed random walk over the
//! digit pairs that sum to 9, while the logits favour 6+3.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symcor::datalog::addition_program;
use symcor::grounding::GroupSpec;
use symcor::inverse::{enumerate_preimage, random_walk_step, AnnealSchedule};

fn main() -> symcor::Result<()> {
    let program = addition_program();
    let spec = GroupSpec::by_input_relation(&program);
    let ps = enumerate_preimage(&program, 9, &spec)?;
    let mut z = vec![0.0; 20];
    z[6] = 3.0;
    z[13] = 3.0;
    let schedule = AnnealSchedule::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut current = ps.candidates()[0].clone();
    for epoch in 0..20 {
        current = random_walk_step(&ps, &current, &z, epoch, &schedule, &spec, &mut rng)?;
        let c = spec.choice_of(&current).expect("candidates are one-hot");
        println!("epoch {epoch:>2}  ε = {:.4}  pseudolabel {}+{}", schedule.epsilon(epoch), c[0], c[1]);
    }
    Ok(())
}
