use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Every way a completion target can be carved out of a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    // syntax-node family
    Expressions,
    OtherStatementBlocks,
    Methods,
    AssignmentAndDeclaration,
    ParametersAndArguments,
    Conditionals,
    Loops,
    ReturnStatements,
    CallExpressions,
    ClassBodies,
    ImportStatements,
    AnnotationsOrDecorators,
    GoConcurrentStatements,
    // editor-behaviour family
    RandomIntraLine,
    SyntaxTokenTrigger,
    ParenthesesFragment,
    PostCommentBlock,
    // random-line family
    RandomSingleLine,
    RandomMultiLine,
    // standalone function completion
    FunctionBody,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyFamily {
    Ast,
    User,
    Random,
    Function,
}

impl Strategy {
    pub const AST: [Strategy; 13] = [
        Strategy::Expressions,
        Strategy::OtherStatementBlocks,
        Strategy::Methods,
        Strategy::AssignmentAndDeclaration,
        Strategy::ParametersAndArguments,
        Strategy::Conditionals,
        Strategy::Loops,
        Strategy::ReturnStatements,
        Strategy::CallExpressions,
        Strategy::ClassBodies,
        Strategy::ImportStatements,
        Strategy::AnnotationsOrDecorators,
        Strategy::GoConcurrentStatements,
    ];

    pub const USER: [Strategy; 4] = [
        Strategy::RandomIntraLine,
        Strategy::SyntaxTokenTrigger,
        Strategy::ParenthesesFragment,
        Strategy::PostCommentBlock,
    ];

    pub const RANDOM: [Strategy; 2] = [Strategy::RandomSingleLine, Strategy::RandomMultiLine];

    pub fn family(self) -> StrategyFamily {
        if Strategy::AST.contains(&self) {
            StrategyFamily::Ast
        } else if Strategy::USER.contains(&self) {
            StrategyFamily::User
        } else if Strategy::RANDOM.contains(&self) {
            StrategyFamily::Random
        } else {
            StrategyFamily::Function
        }
    }

    pub fn is_ast(self) -> bool {
        self.family() == StrategyFamily::Ast
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Expressions => "expressions",
            Strategy::OtherStatementBlocks => "other_statement_blocks",
            Strategy::Methods => "methods",
            Strategy::AssignmentAndDeclaration => "assignment_and_declaration",
            Strategy::ParametersAndArguments => "parameters_and_arguments",
            Strategy::Conditionals => "conditionals",
            Strategy::Loops => "loops",
            Strategy::ReturnStatements => "return_statements",
            Strategy::CallExpressions => "call_expressions",
            Strategy::ClassBodies => "class_bodies",
            Strategy::ImportStatements => "import_statements",
            Strategy::AnnotationsOrDecorators => "annotations_or_decorators",
            Strategy::GoConcurrentStatements => "go_concurrent_statements",
            Strategy::RandomIntraLine => "random_intra_line",
            Strategy::SyntaxTokenTrigger => "syntax_token_trigger",
            Strategy::ParenthesesFragment => "parentheses_fragment",
            Strategy::PostCommentBlock => "post_comment_block",
            Strategy::RandomSingleLine => "random_single_line",
            Strategy::RandomMultiLine => "random_multi_line",
            Strategy::FunctionBody => "function_body",
        }
    }

    pub fn all() -> impl Iterator<Item = Strategy> {
        Strategy::AST
            .into_iter()
            .chain(Strategy::USER)
            .chain(Strategy::RANDOM)
            .chain([Strategy::FunctionBody])
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::all()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown strategy `{s}`")))
    }
}
