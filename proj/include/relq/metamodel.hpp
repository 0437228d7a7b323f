#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relq/diag.hpp"

namespace relq {

enum class PrimType { String, Int, Bool };

const char* to_string(PrimType t);

struct AttrDef {
    std::string name;
    PrimType type = PrimType::String;
};

// Reference declaration. Lower bound is 0 or 1; upper bound is 1 or many.
struct RefDef {
    std::string name;
    std::string target_class;
    bool containment = false;
    int lower = 0;
    bool many = false;
};

struct ClassDef {
    std::string name;
    bool is_abstract = false;
    std::string superclass; // empty when none
    std::vector<AttrDef> attributes;
    std::vector<RefDef> references;
};

// A metamodel is a flat set of classes with single inheritance. Validated on
// construction: unique class names, resolvable reference targets and
// superclasses, acyclic inheritance, no duplicate (inherited) properties.
class Metamodel {
public:
    Metamodel() = default;
    Metamodel(std::string name, std::vector<ClassDef> classes);

    const std::string& name() const { return name_; }
    const std::vector<ClassDef>& classes() const { return classes_; }

    const ClassDef* find_class(std::string_view name) const;
    const ClassDef& require_class(std::string_view name) const;

    // Reflexive subclass test; unknown names are never related.
    bool is_subclass_of(std::string_view sub, std::string_view super) const;

    // Property lookup including inherited declarations.
    const AttrDef* find_attr(std::string_view class_name, std::string_view attr) const;
    const RefDef* find_ref(std::string_view class_name, std::string_view ref) const;

    // All references of a class, topmost superclass first, declaration order
    // within each class. This order fixes containment traversal and
    // serialization layout.
    std::vector<const RefDef*> all_refs(std::string_view class_name) const;
    std::vector<const AttrDef*> all_attrs(std::string_view class_name) const;

private:
    void validate() const;

    std::string name_;
    std::vector<ClassDef> classes_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Parses the line-oriented metamodel syntax:
//
//   metamodel <Name>
//   class <Name> [abstract] [extends <Name>]
//     attr <name>: string|int|bool
//     ref <name>: <Class> [0..1|*] [containment]
//
// Indentation is free-form; `//` starts a comment. Multiplicity defaults
// to 0..1.
Metamodel parse_metamodel(std::string_view text);

} // namespace relq
