#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "relq/diag.hpp"

namespace relq {

class Model;

// Reference to a model element. The model pointer is non-owning and is used
// for navigation; identity comparisons go by id so that references survive
// the id-copying transfer between source and target models.
struct ElemRef {
    const Model* model = nullptr;
    std::string id;

    friend bool operator==(const ElemRef& a, const ElemRef& b) { return a.id == b.id; }
    friend bool operator!=(const ElemRef& a, const ElemRef& b) { return !(a == b); }
};

// Runtime value: scalar (string, integer, boolean), element reference, or an
// ordered collection. A default-constructed Value is the empty collection,
// which doubles as "absent" for optional references.
class Value {
public:
    using List = std::vector<Value>;

    Value() : data_(List{}) {}
    Value(std::string s) : data_(std::move(s)) {}
    Value(const char* s) : data_(std::string(s)) {}
    Value(std::int64_t i) : data_(i) {}
    Value(int i) : data_(static_cast<std::int64_t>(i)) {}
    Value(bool b) : data_(b) {}
    Value(ElemRef r) : data_(std::move(r)) {}
    Value(List l) : data_(std::move(l)) {}

    bool is_string() const { return std::holds_alternative<std::string>(data_); }
    bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
    bool is_bool() const { return std::holds_alternative<bool>(data_); }
    bool is_ref() const { return std::holds_alternative<ElemRef>(data_); }
    bool is_list() const { return std::holds_alternative<List>(data_); }
    bool is_scalar() const { return !is_list(); }

    const std::string& as_string() const { return get<std::string>("string"); }
    std::int64_t as_int() const { return get<std::int64_t>("integer"); }
    bool as_bool() const { return get<bool>("boolean"); }
    const ElemRef& as_ref() const { return get<ElemRef>("element reference"); }
    const List& as_list() const { return get<List>("collection"); }
    List& as_list() { return std::get<List>(data_); }

    bool empty() const { return is_list() && as_list().empty(); }

    // Views the value as a sequence: scalars are singletons.
    List items() const {
        if (is_list()) return as_list();
        return List{*this};
    }

    const char* kind_name() const;

    // Structural equality. Collections compare element-wise; a collection
    // never equals a scalar. Mismatched scalar kinds throw EvalError.
    friend bool equals(const Value& a, const Value& b);
    friend bool operator==(const Value& a, const Value& b) { return equals(a, b); }

    // Unambiguous rendering, used in messages and trace keys.
    std::string display() const;

private:
    template <class T>
    const T& get(const char* what) const {
        if (!std::holds_alternative<T>(data_))
            throw EvalError(std::string("expected ") + what + ", got " + kind_name());
        return std::get<T>(data_);
    }

    std::variant<std::string, std::int64_t, bool, ElemRef, List> data_;
};

bool equals(const Value& a, const Value& b);

} // namespace relq
