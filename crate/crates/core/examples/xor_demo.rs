//! A network that reads every bit inverted is still output correct on xor.

fn main() -> symcor::Result<()> {
    println!("{}", symcor::harness::xor_demo()?);
    Ok(())
}
