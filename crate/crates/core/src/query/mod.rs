//! Point-based requirement filtering: a small filter language, its
//! structured equivalent, and a columnar evaluator.

mod ast;
mod eval;
mod parser;

pub use ast::{Atom, CategoricalField, CmpOp, FilterExpr, Interval, EQ_TOLERANCE};
pub use eval::{count_matches, evaluate, evaluate_records, Selection};
pub use parser::{parse_filter, ParseError};
