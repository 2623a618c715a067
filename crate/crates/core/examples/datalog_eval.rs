//! Parses a Datalog program, evaluates it on an input bitstring, and prints
//! every derived fact.
//!
//! `cargo run --example datalog_eval -- [program.dl] [bits]`

use symcor::datalog::{addition_program, Bitstring, Program};

fn main() -> symcor::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let program = match args.first() {
        Some(path) => Program::parse(&std::fs::read_to_string(path)?)?,
        None => addition_program(),
    };
    let bits: Bitstring = match args.get(1) {
        Some(b) => b.parse()?,
        // digit1(3), digit2(5)
        None => Bitstring::with_ones(program.input_len(), &[3, 15]),
    };
    println!("program:\n{program}");
    println!("input   {bits}");
    let active: Vec<String> = bits.ones().map(|i| program.atom_text(&program.input_enum()[i])).collect();
    println!("facts   {}", active.join(", "));
    let out = program.evaluate(&bits)?;
    println!("output  {out}");
    for atom in program.derive_all(&bits)? {
        println!("  {}", program.atom_text(&atom));
    }
    Ok(())
}
