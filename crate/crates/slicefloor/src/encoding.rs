//! Text codec between slicing trees and post-order Polish expressions like
//! `P_83;P_87;V;P_5;H`.
//!
//! Parsing is tolerant of the variation model outputs actually exhibit
//! (lowercase tokens, stray whitespace around separators); serialization is
//! strictly canonical so round-tripping any accepted input yields one
//! normal form.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{CutKind, ModuleDef, SlicingTree};

/// Why an expression failed to parse against a module set.
///
/// `position` is the zero-based index of the offending token in the
/// separator-split token list.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("expression is empty")]
    EmptyInput,
    #[error("token {position} ({token:?}) is not a module reference or cut operator")]
    MalformedToken { position: usize, token: String },
    #[error("token {position} references P_{id}, which is not in the module set")]
    UnknownModule { position: usize, id: u32 },
    #[error("token {position} references P_{id} a second time")]
    DuplicateLeaf { position: usize, id: u32 },
    #[error("expression never references {missing} of the {total} modules (first missing: P_{first_id})")]
    MissingModules {
        missing: usize,
        total: usize,
        first_id: u32,
    },
    #[error("operator at token {position} has fewer than two operands")]
    StackUnderflow { position: usize },
    #[error("expression leaves {stack_len} trees on the stack instead of one")]
    NonSingularResult { stack_len: usize },
    #[error("token {position} declares dimensions {text:?}, which are out of range")]
    BadDimension { position: usize, text: String },
}

/// Serializes a tree to its canonical post-order expression:
/// `P_<id>` leaves and uppercase `H`/`V` operators joined by `;`.
pub fn tree_to_expression(tree: &SlicingTree, modules: &[ModuleDef]) -> String {
    let mut out = String::new();
    write_postorder(tree, modules, &mut out);
    out
}

fn write_postorder(tree: &SlicingTree, modules: &[ModuleDef], out: &mut String) {
    match tree {
        SlicingTree::Leaf(i) => {
            if !out.is_empty() {
                out.push(';');
            }
            let _ = write!(out, "P_{}", modules[*i].id);
        }
        SlicingTree::Cut(kind, l, r) => {
            write_postorder(l, modules, out);
            write_postorder(r, modules, out);
            out.push(';');
            out.push(kind.token());
        }
    }
}

enum Token {
    Module(u32),
    Operator(CutKind),
}

/// Accepts `P_7`/`p_7` module tokens and `H`/`V` in either case; trims
/// whitespace around each `;`-separated token. A module id with leading
/// zeros or beyond `u32` is malformed, not a different module.
fn classify(token: &str, position: usize) -> Result<Token, ParseError> {
    let malformed = || ParseError::MalformedToken {
        position,
        token: token.to_owned(),
    };
    match token {
        "H" | "h" => return Ok(Token::Operator(CutKind::Horizontal)),
        "V" | "v" => return Ok(Token::Operator(CutKind::Vertical)),
        _ => {}
    }
    let digits = token
        .strip_prefix("P_")
        .or_else(|| token.strip_prefix("p_"))
        .ok_or_else(malformed)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    if digits.len() > 1 && digits.starts_with('0') {
        return Err(malformed());
    }
    let id: u32 = digits.parse().map_err(|_| malformed())?;
    Ok(Token::Module(id))
}

/// Parses a Polish expression into a slicing tree over `modules`.
///
/// Checks run in a fixed order so one input maps to one error: token shape,
/// module membership and uniqueness, operator arity, singularity, and
/// finally coverage of the whole module set.
pub fn expression_to_tree(
    expression: &str,
    modules: &[ModuleDef],
) -> Result<SlicingTree, ParseError> {
    if expression.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let index_by_id: HashMap<u32, usize> =
        modules.iter().enumerate().map(|(i, m)| (m.id, i)).collect();

    let mut used = vec![false; modules.len()];
    let mut stack: Vec<SlicingTree> = Vec::new();
    for (position, raw) in expression.split(';').enumerate() {
        let token = raw.trim();
        if token.is_empty() {
            return Err(ParseError::MalformedToken {
                position,
                token: raw.to_owned(),
            });
        }
        match classify(token, position)? {
            Token::Module(id) => {
                let &index = index_by_id
                    .get(&id)
                    .ok_or(ParseError::UnknownModule { position, id })?;
                if used[index] {
                    return Err(ParseError::DuplicateLeaf { position, id });
                }
                used[index] = true;
                stack.push(SlicingTree::Leaf(index));
            }
            Token::Operator(kind) => {
                if stack.len() < 2 {
                    return Err(ParseError::StackUnderflow { position });
                }
                let right = stack.pop().unwrap();
                let left = stack.pop().unwrap();
                stack.push(SlicingTree::cut(kind, left, right));
            }
        }
    }
    if stack.len() != 1 {
        return Err(ParseError::NonSingularResult {
            stack_len: stack.len(),
        });
    }
    let missing = used.iter().filter(|u| !**u).count();
    if missing > 0 {
        let first_id = modules[used.iter().position(|u| !u).unwrap()].id;
        return Err(ParseError::MissingModules {
            missing,
            total: modules.len(),
            first_id,
        });
    }
    Ok(stack.pop().unwrap())
}

/// Serializes a module set as the prompt-facing dimension list:
/// `P_5(5412,522);P_83(3442,1961);...` in the given order.
pub fn modules_to_listing(modules: &[ModuleDef]) -> String {
    let mut out = String::new();
    for m in modules {
        if !out.is_empty() {
            out.push(';');
        }
        let _ = write!(out, "P_{}({},{})", m.id, m.width, m.height);
    }
    out
}

/// Parses a dimension listing back into modules, preserving order.
///
/// Shape errors are malformed tokens; numerically parsed sides that violate
/// the dimension bounds (zero, or above the per-side cap) are
/// `BadDimension`.
pub fn listing_to_modules(listing: &str) -> Result<Vec<ModuleDef>, ParseError> {
    if listing.trim().is_empty() {
        return Err(ParseError::EmptyInput);
    }
    let mut out: Vec<ModuleDef> = Vec::new();
    for (position, raw) in listing.split(';').enumerate() {
        let token = raw.trim();
        let malformed = || ParseError::MalformedToken {
            position,
            token: token.to_owned(),
        };
        let rest = token
            .strip_prefix("P_")
            .or_else(|| token.strip_prefix("p_"))
            .ok_or_else(malformed)?;
        let (id_text, dims) = rest.split_once('(').ok_or_else(malformed)?;
        let dims = dims.strip_suffix(')').ok_or_else(malformed)?;
        let (w_text, h_text) = dims.split_once(',').ok_or_else(malformed)?;
        let id: u32 = parse_plain_number(id_text).ok_or_else(malformed)?;
        // Once the token shape matches, anything wrong with the dimension
        // values themselves (zero, negative, fractional, out of range) is a
        // dimension error rather than a malformed token.
        let bad = || ParseError::BadDimension {
            position,
            text: dims.to_owned(),
        };
        let width: u64 = parse_plain_number(w_text.trim()).ok_or_else(bad)?;
        let height: u64 = parse_plain_number(h_text.trim()).ok_or_else(bad)?;
        let module = ModuleDef::new(id, width, height).map_err(|_| bad())?;
        if out.iter().any(|m| m.id == id) {
            return Err(ParseError::DuplicateLeaf { position, id });
        }
        out.push(module);
    }
    Ok(out)
}

fn parse_plain_number<T: std::str::FromStr>(text: &str) -> Option<T> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if text.len() > 1 && text.starts_with('0') {
        return None;
    }
    text.parse().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::evaluate;

    fn worked_modules() -> Vec<ModuleDef> {
        vec![
            ModuleDef::new(5, 5412, 522).unwrap(),
            ModuleDef::new(83, 3442, 1961).unwrap(),
            ModuleDef::new(87, 1970, 1961).unwrap(),
        ]
    }

    #[test]
    fn parses_worked_example() {
        let mods = worked_modules();
        let tree = expression_to_tree("P_83;P_87;V;P_5;H", &mods).unwrap();
        let expected = SlicingTree::cut(
            CutKind::Horizontal,
            SlicingTree::cut(
                CutKind::Vertical,
                SlicingTree::Leaf(1),
                SlicingTree::Leaf(2),
            ),
            SlicingTree::Leaf(0),
        );
        assert_eq!(tree, expected);
        assert_eq!(evaluate(&tree, &mods).unwrap().total_dead_space, 0);
    }

    #[test]
    fn serializes_worked_example_canonically() {
        let mods = worked_modules();
        let tree = SlicingTree::cut(
            CutKind::Horizontal,
            SlicingTree::cut(
                CutKind::Vertical,
                SlicingTree::Leaf(1),
                SlicingTree::Leaf(2),
            ),
            SlicingTree::Leaf(0),
        );
        assert_eq!(tree_to_expression(&tree, &mods), "P_83;P_87;V;P_5;H");
    }

    #[test]
    fn tolerant_parse_canonicalizes_case_and_whitespace() {
        let mods = worked_modules();
        let tree = expression_to_tree(" p_83 ;P_87; v ;p_5 ; h ", &mods).unwrap();
        assert_eq!(tree_to_expression(&tree, &mods), "P_83;P_87;V;P_5;H");
    }

    #[test]
    fn round_trip_is_identity_on_canonical_forms() {
        let mods = worked_modules();
        for expr in [
            "P_83;P_87;V;P_5;H",
            "P_5;P_83;H;P_87;V",
            "P_87;P_5;V;P_83;H",
        ] {
            let tree = expression_to_tree(expr, &mods).unwrap();
            assert_eq!(tree_to_expression(&tree, &mods), expr);
        }
    }

    #[test]
    fn single_module_expression() {
        let mods = vec![ModuleDef::new(42, 10, 20).unwrap()];
        let tree = expression_to_tree("P_42", &mods).unwrap();
        assert_eq!(tree, SlicingTree::Leaf(0));
        assert_eq!(tree_to_expression(&tree, &mods), "P_42");
    }

    #[test]
    fn empty_input_detected() {
        let mods = worked_modules();
        assert_eq!(expression_to_tree("", &mods), Err(ParseError::EmptyInput));
        assert_eq!(
            expression_to_tree("   \n ", &mods),
            Err(ParseError::EmptyInput)
        );
    }

    #[test]
    fn malformed_tokens_detected_with_position() {
        let mods = worked_modules();
        assert_eq!(
            expression_to_tree("P_83;Q_87;V;P_5;H", &mods),
            Err(ParseError::MalformedToken {
                position: 1,
                token: "Q_87".to_owned()
            })
        );
        assert_eq!(
            expression_to_tree("P_83;P_87;V;;P_5;H", &mods),
            Err(ParseError::MalformedToken {
                position: 3,
                token: "".to_owned()
            })
        );
        assert_eq!(
            expression_to_tree("P_83;P_;V", &mods),
            Err(ParseError::MalformedToken {
                position: 1,
                token: "P_".to_owned()
            })
        );
        assert_eq!(
            expression_to_tree("P_83;P_07;V", &mods),
            Err(ParseError::MalformedToken {
                position: 1,
                token: "P_07".to_owned()
            })
        );
    }

    #[test]
    fn unknown_and_duplicate_modules_detected() {
        let mods = worked_modules();
        assert_eq!(
            expression_to_tree("P_83;P_99;V;P_5;H", &mods),
            Err(ParseError::UnknownModule {
                position: 1,
                id: 99
            })
        );
        assert_eq!(
            expression_to_tree("P_83;P_83;V;P_5;H", &mods),
            Err(ParseError::DuplicateLeaf {
                position: 1,
                id: 83
            })
        );
    }

    #[test]
    fn structural_errors_detected() {
        let mods = worked_modules();
        assert_eq!(
            expression_to_tree("P_83;V;P_87;P_5;H", &mods),
            Err(ParseError::StackUnderflow { position: 1 })
        );
        let two = vec![
            ModuleDef::new(1, 3, 3).unwrap(),
            ModuleDef::new(2, 4, 4).unwrap(),
        ];
        assert_eq!(
            expression_to_tree("P_1;V", &two),
            Err(ParseError::StackUnderflow { position: 1 })
        );
        assert_eq!(
            expression_to_tree("P_83;P_87", &mods),
            Err(ParseError::NonSingularResult { stack_len: 2 })
        );
    }

    #[test]
    fn missing_modules_detected_on_singular_partial_trees() {
        // A well-formed tree over a strict subset is illegal, not partial.
        let mods = worked_modules();
        assert_eq!(
            expression_to_tree("P_83;P_87;V", &mods),
            Err(ParseError::MissingModules {
                missing: 1,
                total: 3,
                first_id: 5
            })
        );
        let four = vec![
            ModuleDef::new(5, 5412, 522).unwrap(),
            ModuleDef::new(83, 3442, 1961).unwrap(),
            ModuleDef::new(87, 1970, 1961).unwrap(),
            ModuleDef::new(9, 10, 10).unwrap(),
        ];
        assert_eq!(
            expression_to_tree("P_83;P_87;V;P_5;H", &four),
            Err(ParseError::MissingModules {
                missing: 1,
                total: 4,
                first_id: 9
            })
        );
    }

    #[test]
    fn listing_round_trip() {
        let mods = worked_modules();
        let listing = modules_to_listing(&mods);
        assert_eq!(listing, "P_5(5412,522);P_83(3442,1961);P_87(1970,1961)");
        assert_eq!(listing_to_modules(&listing).unwrap(), mods);
    }

    #[test]
    fn listing_rejects_bad_dimensions_and_shapes() {
        assert_eq!(listing_to_modules(""), Err(ParseError::EmptyInput));
        assert_eq!(
            listing_to_modules("P_5(5412,0)"),
            Err(ParseError::BadDimension {
                position: 0,
                text: "5412,0".to_owned()
            })
        );
        assert_eq!(
            listing_to_modules("P_5(4294967296,7)"),
            Err(ParseError::BadDimension {
                position: 0,
                text: "4294967296,7".to_owned()
            })
        );
        assert_eq!(
            listing_to_modules("P_5[5412,522]"),
            Err(ParseError::MalformedToken {
                position: 0,
                token: "P_5[5412,522]".to_owned()
            })
        );
        assert_eq!(
            listing_to_modules("P_5(5412,522);P_5(1,1)"),
            Err(ParseError::DuplicateLeaf { position: 1, id: 5 })
        );
        assert_eq!(
            listing_to_modules("P_5(5412,x)"),
            Err(ParseError::BadDimension {
                position: 0,
                text: "5412,x".to_owned()
            })
        );
        assert_eq!(
            listing_to_modules("P_5(-3,7)"),
            Err(ParseError::BadDimension {
                position: 0,
                text: "-3,7".to_owned()
            })
        );
        assert_eq!(
            listing_to_modules("P_5(3.5,7)"),
            Err(ParseError::BadDimension {
                position: 0,
                text: "3.5,7".to_owned()
            })
        );
    }
}
