//! Grammar node-kind tables. Every kind listed here is checked against the
//! grammar in tests, so a grammar upgrade that renames a kind fails loudly.

use crate::language::Language;
use crate::strategy::Strategy;

/// Grammar crate versions these tables were written against. Mirrors `grammar.lock`.
pub const GRAMMAR_VERSIONS: &[(&str, &str)] = &[
    ("tree-sitter-cpp", "0.23.4"),
    ("tree-sitter-go", "0.25.0"),
    ("tree-sitter-java", "0.23.5"),
    ("tree-sitter-javascript", "0.25.0"),
    ("tree-sitter-python", "0.25.0"),
    ("tree-sitter-typescript", "0.23.2"),
];

pub fn identifier_kinds(language: Language) -> &'static [&'static str] {
    match language {
        Language::Python => &["identifier"],
        Language::Java => &["identifier", "type_identifier"],
        Language::Cpp => &["identifier", "type_identifier", "field_identifier", "namespace_identifier"],
        Language::Go => &["identifier", "type_identifier", "field_identifier", "package_identifier"],
        Language::Javascript => &["identifier", "property_identifier", "shorthand_property_identifier"],
        Language::Typescript => &[
            "identifier",
            "type_identifier",
            "property_identifier",
            "shorthand_property_identifier",
        ],
    }
}

pub fn comment_kinds(language: Language) -> &'static [&'static str] {
    match language {
        Language::Java => &["line_comment", "block_comment"],
        _ => &["comment"],
    }
}

/// Function-like declarations that carry a body.
pub fn function_kinds(language: Language) -> &'static [&'static str] {
    match language {
        Language::Python => &["function_definition"],
        Language::Java => &["method_declaration", "constructor_declaration"],
        Language::Cpp => &["function_definition"],
        Language::Go => &["function_declaration", "method_declaration"],
        Language::Javascript | Language::Typescript => &[
            "function_declaration",
            "generator_function_declaration",
            "method_definition",
        ],
    }
}

/// Delimited argument, parameter and collection nodes for the parentheses strategy.
pub fn parenthesized_kinds(language: Language) -> &'static [&'static str] {
    match language {
        Language::Python => &[
            "argument_list",
            "parameters",
            "list",
            "tuple",
            "dictionary",
            "set",
            "parenthesized_expression",
        ],
        Language::Java => &[
            "argument_list",
            "formal_parameters",
            "array_initializer",
            "parenthesized_expression",
        ],
        Language::Cpp => &[
            "argument_list",
            "parameter_list",
            "initializer_list",
            "parenthesized_expression",
        ],
        Language::Go => &["argument_list", "parameter_list", "literal_value", "parenthesized_expression"],
        Language::Javascript | Language::Typescript => &[
            "arguments",
            "formal_parameters",
            "array",
            "object",
            "parenthesized_expression",
        ],
    }
}

/// Node kinds targeted by each syntax-node strategy. Empty means the strategy
/// has no realization in that language.
pub fn selector_kinds(language: Language, strategy: Strategy) -> &'static [&'static str] {
    use Language::*;
    use Strategy::*;
    match (language, strategy) {
        (Python, Expressions) => &[
            "binary_operator",
            "boolean_operator",
            "comparison_operator",
            "unary_operator",
            "not_operator",
            "conditional_expression",
            "lambda",
            "list_comprehension",
            "dictionary_comprehension",
            "set_comprehension",
            "generator_expression",
            "attribute",
            "subscript",
            "await",
        ],
        (Python, OtherStatementBlocks) => &[
            "block",
            "with_statement",
            "try_statement",
            "except_clause",
            "finally_clause",
            "raise_statement",
            "assert_statement",
        ],
        (Python, Methods) => &["function_definition"],
        (Python, AssignmentAndDeclaration) => &["assignment", "augmented_assignment"],
        (Python, ParametersAndArguments) => &["parameters", "argument_list", "lambda_parameters"],
        (Python, Conditionals) => &["if_statement", "elif_clause", "else_clause", "match_statement"],
        (Python, Loops) => &["for_statement", "while_statement"],
        (Python, ReturnStatements) => &["return_statement", "yield"],
        (Python, CallExpressions) => &["call"],
        (Python, ClassBodies) => &["class_definition"],
        (Python, ImportStatements) => &[
            "import_statement",
            "import_from_statement",
            "future_import_statement",
        ],
        (Python, AnnotationsOrDecorators) => &["decorator"],

        (Java, Expressions) => &[
            "binary_expression",
            "unary_expression",
            "ternary_expression",
            "lambda_expression",
            "field_access",
            "array_access",
            "object_creation_expression",
            "cast_expression",
            "instanceof_expression",
            "method_reference",
        ],
        (Java, OtherStatementBlocks) => &[
            "block",
            "try_statement",
            "try_with_resources_statement",
            "switch_expression",
            "synchronized_statement",
            "throw_statement",
        ],
        (Java, Methods) => &["method_declaration", "constructor_declaration"],
        (Java, AssignmentAndDeclaration) => &[
            "assignment_expression",
            "local_variable_declaration",
            "field_declaration",
        ],
        (Java, ParametersAndArguments) => &["formal_parameters", "argument_list"],
        (Java, Conditionals) => &["if_statement"],
        (Java, Loops) => &["for_statement", "enhanced_for_statement", "while_statement", "do_statement"],
        (Java, ReturnStatements) => &["return_statement"],
        (Java, CallExpressions) => &["method_invocation"],
        (Java, ClassBodies) => &["class_body", "interface_body", "enum_body"],
        (Java, ImportStatements) => &["import_declaration", "package_declaration"],
        (Java, AnnotationsOrDecorators) => &["annotation", "marker_annotation"],

        (Cpp, Expressions) => &[
            "binary_expression",
            "unary_expression",
            "conditional_expression",
            "lambda_expression",
            "field_expression",
            "subscript_expression",
            "cast_expression",
            "new_expression",
            "pointer_expression",
        ],
        (Cpp, OtherStatementBlocks) => &[
            "compound_statement",
            "try_statement",
            "switch_statement",
            "throw_statement",
        ],
        (Cpp, Methods) => &["function_definition"],
        (Cpp, AssignmentAndDeclaration) => &["assignment_expression", "declaration", "field_declaration"],
        (Cpp, ParametersAndArguments) => &["parameter_list", "argument_list"],
        (Cpp, Conditionals) => &["if_statement"],
        (Cpp, Loops) => &["for_statement", "for_range_loop", "while_statement", "do_statement"],
        (Cpp, ReturnStatements) => &["return_statement"],
        (Cpp, CallExpressions) => &["call_expression"],
        (Cpp, ClassBodies) => &["field_declaration_list"],
        (Cpp, ImportStatements) => &["preproc_include", "using_declaration"],
        (Cpp, AnnotationsOrDecorators) => &["attribute_declaration"],

        (Go, Expressions) => &[
            "binary_expression",
            "unary_expression",
            "selector_expression",
            "index_expression",
            "slice_expression",
            "type_assertion_expression",
            "composite_literal",
            "func_literal",
        ],
        (Go, OtherStatementBlocks) => &[
            "block",
            "expression_switch_statement",
            "type_switch_statement",
            "defer_statement",
        ],
        (Go, Methods) => &["function_declaration", "method_declaration"],
        (Go, AssignmentAndDeclaration) => &[
            "assignment_statement",
            "short_var_declaration",
            "var_declaration",
            "const_declaration",
        ],
        (Go, ParametersAndArguments) => &["parameter_list", "argument_list"],
        (Go, Conditionals) => &["if_statement"],
        (Go, Loops) => &["for_statement"],
        (Go, ReturnStatements) => &["return_statement"],
        (Go, CallExpressions) => &["call_expression"],
        (Go, ClassBodies) => &["field_declaration_list"],
        (Go, ImportStatements) => &["import_declaration", "package_clause"],
        (Go, GoConcurrentStatements) => &["go_statement", "send_statement", "select_statement"],

        (Javascript | Typescript, Expressions) => &[
            "binary_expression",
            "unary_expression",
            "ternary_expression",
            "arrow_function",
            "member_expression",
            "subscript_expression",
            "new_expression",
            "await_expression",
            "template_string",
        ],
        (Javascript | Typescript, OtherStatementBlocks) => &[
            "statement_block",
            "try_statement",
            "switch_statement",
            "throw_statement",
        ],
        (Javascript | Typescript, Methods) => &[
            "function_declaration",
            "generator_function_declaration",
            "method_definition",
        ],
        (Javascript | Typescript, AssignmentAndDeclaration) => &[
            "assignment_expression",
            "augmented_assignment_expression",
            "lexical_declaration",
            "variable_declaration",
        ],
        (Javascript | Typescript, ParametersAndArguments) => &["formal_parameters", "arguments"],
        (Javascript | Typescript, Conditionals) => &["if_statement"],
        (Javascript | Typescript, Loops) => &[
            "for_statement",
            "for_in_statement",
            "while_statement",
            "do_statement",
        ],
        (Javascript | Typescript, ReturnStatements) => &["return_statement"],
        (Javascript | Typescript, CallExpressions) => &["call_expression"],
        (Javascript | Typescript, ClassBodies) => &["class_body"],
        (Javascript | Typescript, ImportStatements) => &["import_statement"],
        (Javascript | Typescript, AnnotationsOrDecorators) => &["decorator"],

        _ => &[],
    }
}
