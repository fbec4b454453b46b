use nilpotentizer::selftest::run_criterion;

fn main() {
    let mut failed = 0;
    for id in 1..=11 {
        let r = run_criterion(id);
        println!("{}", r.line());
        failed += usize::from(!r.passed);
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
