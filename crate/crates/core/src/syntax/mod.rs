//! Abstract syntax, canonical text form, names and networks.

pub mod ast;
pub mod names;
pub mod network;
pub mod parser;
pub mod printer;
pub mod validate;

pub use ast::*;
pub use names::{free_names_expr, free_names_term, Fresh, NameSet, Subst};
pub use network::Network;
pub use parser::{
    parse_bexpr, parse_expr, parse_location, parse_network, parse_network_ast, parse_pattern,
    parse_ref, parse_term, parse_url, parse_value, ParseError,
};
pub use printer::print;
