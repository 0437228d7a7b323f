#include "relq/value.hpp"

namespace relq {

const char* Value::kind_name() const {
    if (is_string()) return "string";
    if (is_int()) return "integer";
    if (is_bool()) return "boolean";
    if (is_ref()) return "element reference";
    return "collection";
}

bool equals(const Value& a, const Value& b) {
    if (a.is_list() || b.is_list()) {
        // A collection never equals a scalar; two collections compare
        // element-wise.
        if (!a.is_list() || !b.is_list()) return false;
        const auto& la = a.as_list();
        const auto& lb = b.as_list();
        if (la.size() != lb.size()) return false;
        for (std::size_t i = 0; i < la.size(); ++i)
            if (!equals(la[i], lb[i])) return false;
        return true;
    }
    if (a.is_string() && b.is_string()) return a.as_string() == b.as_string();
    if (a.is_int() && b.is_int()) return a.as_int() == b.as_int();
    if (a.is_bool() && b.is_bool()) return a.as_bool() == b.as_bool();
    if (a.is_ref() && b.is_ref()) return a.as_ref() == b.as_ref();
    throw EvalError(std::string("type mismatch in comparison: ") + a.kind_name() + " vs " +
                    b.kind_name());
}

std::string Value::display() const {
    if (is_string()) {
        std::string out = "\"";
        for (char c : as_string()) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out + "\"";
    }
    if (is_int()) return std::to_string(as_int());
    if (is_bool()) return as_bool() ? "true" : "false";
    if (is_ref()) return "@" + as_ref().id;
    std::string out = "[";
    bool first = true;
    for (const auto& v : as_list()) {
        if (!first) out += ", ";
        first = false;
        out += v.display();
    }
    return out + "]";
}

} // namespace relq
