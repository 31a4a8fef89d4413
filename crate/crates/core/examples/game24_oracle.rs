//! Verifying Game of 24 answers and checking solvability by exhaustive search.
//!
//! ```text
//! cargo run -p retrials --example game24_oracle
//! ```

use retrials::verifiers::{eval_exact, game24_solvable, parse_expression, verify_game24};

fn main() {
    for numbers in [[4, 9, 10, 13], [3, 3, 8, 8], [1, 1, 1, 1]] {
        let s = game24_solvable(numbers);
        match &s.witness {
            Some(w) => println!("{numbers:?}: solvable, e.g. {w}"),
            None => println!("{numbers:?}: no expression reaches 24"),
        }
    }

    // Division stays exact: 8 / (3 - 8/3) is 24, not 23.999...
    let expr = parse_expression("8/(3-8/3)").unwrap();
    println!("8/(3-8/3) = {}", eval_exact(&expr).unwrap());

    for answer in ["Answer: (13-9)*(10-4)", "(13-9)*(10-4)*1", "13+9+10-4", "10/(13-9-4)", "13 plus 9"] {
        let v = verify_game24(&[4, 9, 10, 13], answer);
        let status = if v.is_solved() { "solved" } else { v.detail() };
        println!("{answer:<24} -> {status}");
    }
}
