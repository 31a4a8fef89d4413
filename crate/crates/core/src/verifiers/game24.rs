//! Game of 24: answer verification and the brute-force solvability oracle.

use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};

use super::expr::{eval_exact, parse_expression, strip_prose, ParseError};
use crate::types::Verdict;

pub const TARGET: i64 = 24;

/// 4! operand orders x 4^3 operator choices x 5 tree shapes.
pub const SHAPED_EXPRESSIONS: usize = 7_680;

/// Checks that `answer_text` uses exactly the multiset `numbers` and
/// evaluates to 24. Every failure is reported as an unsolved verdict.
pub fn verify_game24(numbers: &[u32], answer_text: &str) -> Verdict {
    if numbers.len() != 4 {
        return Verdict::unsolved(format!("puzzle must have 4 numbers, got {}", numbers.len()));
    }
    let text = answer_text.trim();
    if text.is_empty() {
        return Verdict::unsolved("no answer extracted");
    }
    let expr = match parse_expression(text) {
        Ok(e) => e,
        Err(ParseError::Empty) => return Verdict::unsolved("no answer extracted"),
        Err(e) => return Verdict::unsolved(format!("unparseable: {e}")),
    };
    let mut used = expr.literals();
    let mut expected: Vec<u64> = numbers.iter().map(|&n| n as u64).collect();
    used.sort_unstable();
    expected.sort_unstable();
    if used != expected {
        return Verdict::unsolved(format!("uses-mismatch: expected {expected:?}, got {used:?}"));
    }
    match eval_exact(&expr) {
        Err(e) => Verdict::unsolved(e.to_string()),
        Ok(v) if v == BigRational::from_integer(BigInt::from(TARGET)) => Verdict::solved(),
        Ok(v) => Verdict::unsolved(format!("value {v} \u{2260} 24")),
    }
}

/// Outcome of the exhaustive search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solvability {
    pub solvable: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Copy)]
enum Shape {
    LeftChain,   // ((a o b) o c) o d
    InnerLeft,   // (a o (b o c)) o d
    Balanced,    // (a o b) o (c o d)
    InnerRight,  // a o ((b o c) o d)
    RightChain,  // a o (b o (c o d))
}

const SHAPES: [Shape; 5] =
    [Shape::LeftChain, Shape::InnerLeft, Shape::Balanced, Shape::InnerRight, Shape::RightChain];
const OPS: [char; 4] = ['+', '-', '*', '/'];

const PERMUTATIONS: [[usize; 4]; 24] = [
    [0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3], [0, 2, 3, 1], [0, 3, 1, 2], [0, 3, 2, 1],
    [1, 0, 2, 3], [1, 0, 3, 2], [1, 2, 0, 3], [1, 2, 3, 0], [1, 3, 0, 2], [1, 3, 2, 0],
    [2, 0, 1, 3], [2, 0, 3, 1], [2, 1, 0, 3], [2, 1, 3, 0], [2, 3, 0, 1], [2, 3, 1, 0],
    [3, 0, 1, 2], [3, 0, 2, 1], [3, 1, 0, 2], [3, 1, 2, 0], [3, 2, 0, 1], [3, 2, 1, 0],
];

trait Exact: Clone + PartialEq + Zero + One {
    fn from_u32(n: u32) -> Self;
    fn apply(op: char, a: &Self, b: &Self) -> Option<Self>;
}

macro_rules! impl_exact {
    ($t:ty, $int:ty) => {
        impl Exact for $t {
            fn from_u32(n: u32) -> Self {
                <$t>::from_integer(<$int>::from(n))
            }
            fn apply(op: char, a: &Self, b: &Self) -> Option<Self> {
                match op {
                    '+' => Some(a + b),
                    '-' => Some(a - b),
                    '*' => Some(a * b),
                    _ if b.is_zero() => None,
                    _ => Some(a / b),
                }
            }
        }
    };
}

impl_exact!(Ratio<i128>, i128);
impl_exact!(BigRational, BigInt);

fn render(shape: Shape, n: [u32; 4], o: [char; 3]) -> String {
    let [a, b, c, d] = n;
    let [x, y, z] = o;
    match shape {
        Shape::LeftChain => format!("(({a}{x}{b}){y}{c}){z}{d}"),
        Shape::InnerLeft => format!("({a}{x}({b}{y}{c})){z}{d}"),
        Shape::Balanced => format!("({a}{x}{b}){y}({c}{z}{d})"),
        Shape::InnerRight => format!("{a}{x}(({b}{y}{c}){z}{d})"),
        Shape::RightChain => format!("{a}{x}({b}{y}({c}{z}{d}))"),
    }
}

fn value<R: Exact>(shape: Shape, v: &[R; 4], o: [char; 3]) -> Option<R> {
    let [x, y, z] = o;
    let ap = R::apply;
    match shape {
        Shape::LeftChain => ap(z, &ap(y, &ap(x, &v[0], &v[1])?, &v[2])?, &v[3]),
        Shape::InnerLeft => ap(z, &ap(x, &v[0], &ap(y, &v[1], &v[2])?)?, &v[3]),
        Shape::Balanced => ap(y, &ap(x, &v[0], &v[1])?, &ap(z, &v[2], &v[3])?),
        Shape::InnerRight => ap(x, &v[0], &ap(z, &ap(y, &v[1], &v[2])?, &v[3])?),
        Shape::RightChain => ap(x, &v[0], &ap(y, &v[1], &ap(z, &v[2], &v[3])?)?),
    }
}

/// Visits every shaped expression over `numbers` with its exact value
/// (`None` on division by zero) until `visit` breaks.
fn enumerate<R: Exact>(
    numbers: [u32; 4],
    mut visit: impl FnMut(&dyn Fn() -> String, Option<&R>) -> ControlFlow<()>,
) {
    for perm in PERMUTATIONS {
        let ordered = perm.map(|i| numbers[i]);
        let vals = ordered.map(R::from_u32);
        for &x in &OPS {
            for &y in &OPS {
                for &z in &OPS {
                    for shape in SHAPES {
                        let ops = [x, y, z];
                        let v = value(shape, &vals, ops);
                        let text = || render(shape, ordered, ops);
                        if visit(&text, v.as_ref()).is_break() {
                            return;
                        }
                    }
                }
            }
        }
    }
}

fn first_match(numbers: [u32; 4], want_target: bool) -> Option<String> {
    fn run<R: Exact>(numbers: [u32; 4], want_target: bool) -> Option<String> {
        let target = R::from_u32(TARGET as u32);
        let mut found = None;
        enumerate::<R>(numbers, |text, v| match v {
            Some(v) if (*v == target) == want_target => {
                found = Some(text());
                ControlFlow::Break(())
            }
            _ => ControlFlow::Continue(()),
        });
        found
    }
    if numbers.iter().all(|&n| n <= 4096) {
        run::<Ratio<i128>>(numbers, want_target)
    } else {
        run::<BigRational>(numbers, want_target)
    }
}

/// Exhaustive search over all shaped expressions with exact rationals.
pub fn game24_solvable(numbers: [u32; 4]) -> Solvability {
    let witness = first_match(numbers, true);
    Solvability { solvable: witness.is_some(), witness }
}

/// A syntactically valid expression using every number once whose value is
/// not 24. `((a+b)+c)+d` and `((a+b)+c)-d` only agree when `d = 0`, and then
/// the product is 0, so one always exists.
pub fn game24_non_solution(numbers: [u32; 4]) -> String {
    first_match(numbers, false).expect("some shaped expression misses 24")
}

/// Number of shaped expressions the oracle visits for `numbers`.
pub fn count_shaped_expressions(numbers: [u32; 4]) -> usize {
    let mut n = 0;
    enumerate::<Ratio<i128>>(numbers, |_, _| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

/// Remaining numbers in a ToT-style partial state such as `"(left: 2 3 4)"`.
pub fn parse_left_numbers(thought: &str) -> Option<Vec<String>> {
    let start = thought.rfind("left:")? + "left:".len();
    let rest = &thought[start..];
    let end = rest.find(')').unwrap_or(rest.len());
    let items: Vec<String> = rest[..end].split_whitespace().map(|s| s.trim_matches(',').to_string()).collect();
    (!items.is_empty()).then_some(items)
}

/// True when `text` reads as a final expression rather than a partial step.
pub fn looks_final(text: &str) -> bool {
    let body = strip_prose(text);
    parse_expression(body).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid_answers() {
        assert!(verify_game24(&[1, 2, 3, 4], "1*2*3*4").is_solved());
        assert!(verify_game24(&[3, 3, 8, 8], "8/(3-8/3)").is_solved());
        assert!(verify_game24(&[4, 9, 10, 13], "Answer: (10-4)*(13-9) = 24").is_solved());
        assert!(verify_game24(&[4, 9, 10, 13], "24 = (13-9)*(10-4)").is_solved());
    }

    #[test]
    fn rejects_with_reasons() {
        let v = verify_game24(&[1, 2, 3, 4], "2*3*4");
        assert!(v.detail().starts_with("uses-mismatch"), "{v:?}");
        let v = verify_game24(&[1, 1, 1, 1], "1+1+1+1");
        assert_eq!(v.detail(), "value 4 \u{2260} 24");
        let v = verify_game24(&[1, 2, 3, 4], "1+2+3+4");
        assert_eq!(v.detail(), "value 10 \u{2260} 24");
        let v = verify_game24(&[2, 2, 3, 4], "3/(2-2)*4");
        assert_eq!(v.detail(), "division by zero");
        assert_eq!(verify_game24(&[1, 2, 3, 4], "").detail(), "no answer extracted");
        assert!(verify_game24(&[1, 2, 3, 4], "(3+)").detail().starts_with("unparseable"));
        assert!(verify_game24(&[1, 2, 3], "1*2*3").detail().contains("4 numbers"));
    }

    #[test]
    fn oracle_examples() {
        let s = game24_solvable([1, 2, 3, 4]);
        assert!(s.solvable);
        assert!(verify_game24(&[1, 2, 3, 4], s.witness.as_ref().unwrap()).is_solved());

        assert_eq!(game24_solvable([1, 1, 1, 1]), Solvability { solvable: false, witness: None });

        let s = game24_solvable([3, 3, 8, 8]);
        assert!(s.solvable);
        assert!(verify_game24(&[3, 3, 8, 8], s.witness.as_ref().unwrap()).is_solved());
    }

    #[test]
    fn enumeration_size() {
        assert_eq!(count_shaped_expressions([1, 2, 3, 4]), SHAPED_EXPRESSIONS);
        assert_eq!(count_shaped_expressions([1, 1, 1, 1]), SHAPED_EXPRESSIONS);
    }

    #[test]
    fn non_solution_is_wrong_but_well_formed() {
        for nums in [[1, 2, 3, 4], [6, 6, 6, 6], [3, 3, 8, 8], [1, 1, 1, 1]] {
            let text = game24_non_solution(nums);
            let v = verify_game24(&nums, &text);
            assert!(v.detail().starts_with("value"), "{nums:?} {text} {v:?}");
        }
    }

    #[test]
    fn large_literals_use_big_rationals() {
        let s = game24_solvable([100_000, 100_000, 24, 1]);
        assert!(s.solvable);
        assert!(verify_game24(&[100_000, 100_000, 24, 1], s.witness.as_ref().unwrap()).is_solved());
    }

    #[test]
    fn left_numbers() {
        assert_eq!(
            parse_left_numbers("1*2=2 (left: 2 3 4)"),
            Some(vec!["2".to_string(), "3".into(), "4".into()])
        );
        assert_eq!(parse_left_numbers("no state here"), None);
    }
}
