#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "relq/model.hpp"
#include "relq/value.hpp"

namespace relq {

struct Transformation;
class NativeRegistry;

// Expression tree for the OCL subset used in queries, when/where clauses and
// computed slot values.
struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        Literal,   // literal holds the value
        Var,       // name
        Nav,       // args[0].name  (mapped and flattened over collections)
        Select,    // args[0].select(name | args[1])
        Exists,    // args[0].exists(name | args[1])
        Size,      // args[0].size()
        IsEmpty,   // args[0].isEmpty()
        NotEmpty,  // args[0].notEmpty()
        First,     // args[0].first()
        Distinct,  // args[0].distinct()
        Excluding, // args[0].excluding(args[1])
        Eq,        // args[0] = args[1]
        Ne,        // args[0] <> args[1]
        And,
        Or,
        Not,
        Add,       // string concatenation / integer addition
        Call,      // query or native invocation: name(args...)
    };

    Kind kind;
    std::string name;
    Value literal;
    std::vector<ExprPtr> args;
    int line = 0;
    int col = 0;
};

ExprPtr make_expr(Expr::Kind kind, std::vector<ExprPtr> args = {}, std::string name = {},
                  int line = 0, int col = 0);
ExprPtr make_literal(Value v, int line = 0, int col = 0);

// Binding environment for evaluation: variable values plus the models and
// the transformation (for query resolution) in scope. Copies are cheap and
// used to branch during pattern matching.
struct Env {
    const Model* source = nullptr;
    const Model* target = nullptr;
    const Transformation* tf = nullptr;
    const NativeRegistry* natives = nullptr;
    std::map<std::string, Value> vars;

    bool has(const std::string& name) const { return vars.count(name) != 0; }
    const Value& lookup(const std::string& name) const;
    void bind(const std::string& name, Value v);
};

// Evaluates an expression. Pure with respect to the model snapshot;
// deterministic; collection results preserve document order. Navigation over
// an absent optional reference yields the empty collection. Throws EvalError
// on unbound variables and scalar type mismatches.
Value eval(const Expr& e, const Env& env);

// Principal-type computation used by static checking.
struct Type {
    enum class Kind { String, Int, Bool, Class, Collection, Invalid };
    Kind kind = Kind::Invalid;
    std::string class_name;            // Kind::Class
    std::shared_ptr<Type> elem;        // Kind::Collection

    static Type string() { return {Kind::String, {}, nullptr}; }
    static Type integer() { return {Kind::Int, {}, nullptr}; }
    static Type boolean() { return {Kind::Bool, {}, nullptr}; }
    static Type of_class(std::string name) { return {Kind::Class, std::move(name), nullptr}; }
    static Type collection(Type t) {
        return {Kind::Collection, {}, std::make_shared<Type>(std::move(t))};
    }
    static Type invalid() { return {}; }

    bool is_invalid() const { return kind == Kind::Invalid; }
    std::string str() const;
};

// Appends diagnostics for ill-typed subtrees and returns the expression's
// type (Invalid after an error, without cascading repeats). `tf` and
// `natives` may be null when call expressions cannot occur.
Type typecheck(const Expr& e, const Metamodel& mm, const std::map<std::string, Type>& var_types,
               const Transformation* tf, const NativeRegistry* natives,
               std::vector<Diagnostic>& out);

} // namespace relq
