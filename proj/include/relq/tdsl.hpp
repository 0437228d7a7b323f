#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "relq/expr.hpp"
#include "relq/metamodel.hpp"
#include "relq/xmi.hpp"

namespace relq {

class NativeRegistry;

// Type annotation in declarations: a primitive or a metamodel class.
struct TypeRef {
    enum class Kind { String, Int, Bool, Class };
    Kind kind = Kind::String;
    std::string class_name;

    std::string str() const;
};

struct ObjectTemplate;

// Right-hand side of a property slot in an object template.
struct SlotExpr {
    enum class Kind { Literal, Variable, Template };
    Kind kind = Kind::Literal;
    Value literal;
    std::string var;
    std::shared_ptr<ObjectTemplate> tmpl;
};

// An object template: class, optional variable, and property slots in
// declaration order. In a source pattern it matches structurally; in a
// target pattern it acts as a creation/update template.
struct ObjectTemplate {
    std::string var_name; // empty = anonymous
    std::string class_name;
    std::vector<std::pair<std::string, SlotExpr>> slots;
    int line = 0;
    int col = 0;
};

enum class DiffKind { Insert, Remove, Replace };

struct DomainPattern {
    std::string model_alias;
    ObjectTemplate root;
    std::optional<DiffKind> diff_op; // in-place transformations only
};

struct WhereStmt {
    enum class Kind { VarDef, Call };
    Kind kind = Kind::VarDef;
    std::string name;            // variable name or callee relation name
    ExprPtr expr;                // VarDef
    std::vector<ExprPtr> args;   // Call
    int line = 0;
    int col = 0;
};

struct ParamDecl {
    std::string name;
    TypeRef type;
};

// A relation: optional source and target domain patterns (at least one),
// scalar or element-typed parameters ("primitive domains"), a when-clause
// (conjunction of guards) and an ordered where-clause.
struct Relation {
    std::string name;
    bool is_top = false;
    std::vector<ParamDecl> params;
    std::optional<DomainPattern> source;
    std::optional<DomainPattern> target;
    std::vector<ExprPtr> when;
    std::vector<WhereStmt> where;

    // Call argument order: one value per distinct domain-root variable
    // (source first), then one per parameter.
    std::vector<std::string> call_signature() const;
};

struct QueryDef {
    std::string name;
    std::vector<ParamDecl> params;
    ExprPtr body;
};

struct ConfigParam {
    std::string name;
    TypeRef type;
    std::optional<Value> default_value;
};

struct ConfigDecl {
    std::string source_mm;
    std::string source_key;
    std::string source_alias;
    std::string target_mm;
    std::string target_key;
    std::string target_alias;
    bool in_place = false;
    OutputFormat output = OutputFormat::Xmi;
    std::vector<ConfigParam> params;
};

struct Transformation {
    std::string name;
    ConfigDecl config;
    std::vector<Relation> relations;
    std::vector<QueryDef> queries;
    std::vector<std::string> natives;

    const Relation* find_relation(std::string_view name) const;
    const QueryDef* find_query(std::string_view name) const;

    // Canonical structural rendering; equal dumps mean equal parses.
    std::string dump() const;
};

// Parses the transformation language. Grammar sketch:
//
//   transformation <Name> {
//     config {
//       source <MM> key <prop> as <alias>;
//       target <MM> key <prop> as <alias>;
//       [inplace;] [output xmi|html;]
//       [param <name>: <type> [= <literal>];]*
//     }
//     [native <Name>;]*
//     (relation | query)*
//   }
//
//   [top] relation <Name>[(<p>: <type>, ...)] {
//     domain <alias> <var>:<Class> { <prop> = <slot>; ... } [diff insert|remove|replace];
//     [domain <alias> ...;]
//     [when { <expr>; ... }]
//     [where { <name> = <expr>; | call <Rel>(<args>); ... }]
//   }
//
//   query <Name>(<p>: <type>, ...) = <expr>;
//
// Name resolution happens here: unknown relations in where-clauses, unbound
// variables, shadowing definitions and diff markers outside in-place mode
// are rejected as ParseErrors.
Transformation parse_transformation(std::string_view text);

// Parses a single expression in the TDSL expression syntax.
ExprPtr parse_expression(std::string_view text);

// Static checking against the configured metamodels: template classes and
// properties exist, slot kinds and literal types line up, nested templates
// sit under containment or single-valued references, expressions typecheck.
std::vector<Diagnostic> check_transformation(const Transformation& t, const Metamodel& source_mm,
                                             const Metamodel& target_mm,
                                             const NativeRegistry* natives = nullptr);

} // namespace relq
